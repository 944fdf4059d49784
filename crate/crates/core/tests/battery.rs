use slr_core::battery::*;
use slr_core::model::{sample_markov, Alignment, SubstitutionModel};
use slr_core::rng::stream;
use slr_core::tree::{restrict, restrict_vertices, Phylogeny, Point, RestrictedSubtree};

fn built(t0: &Phylogeny, ts: &Phylogeny, ell: Option<usize>) -> Battery {
    let mut b = build_battery(t0, ts, &BuildOptions { ell }).unwrap();
    let report = b.validate(t0, ts).unwrap();
    assert!(report.passed(), "{report:?}");
    b
}

fn leaf_subtree(t: &Phylogeny, l: usize) -> RestrictedSubtree {
    restrict(t, &[l])
        .unwrap()
        .with_root(Point::Vertex(t.leaf(l)))
}

fn lca(t: &Phylogeny, a: usize, b: usize) -> usize {
    t.view().lca(t.leaf(a), t.leaf(b))
}

#[test]
fn single_swap_is_homogeneous_with_one_panel() {
    let (t0, ts) = instances::single_swap(4, 2, 2, 9).unwrap();
    let b = built(&t0, &ts, None);
    assert_eq!(b.regime(), Regime::Homogeneous);
    assert_eq!(b.params().ell, 3);
    assert_eq!((b.red, b.yellow), (2, 1));
    assert!(b.yellow <= b.red);
    assert_eq!(b.size(), 1);
    let p = &b.panels()[0];
    assert_eq!(
        (p.y_zero.labels.clone(), p.z_zero.labels.clone()),
        (vec![0], vec![1])
    );
    assert_eq!((p.d_zero, p.d_sharp, p.alpha), (4, 16, 1));
}

#[test]
fn two_cluster_overlap_uses_overlap_panels() {
    let (t0, ts) = instances::two_cluster_overlap().unwrap();
    let b = built(&t0, &ts, Some(2));
    assert_eq!(b.regime(), Regime::LargeOverlap);
    assert_eq!((b.params().wp, b.params().big_gamma), (3, 70));
    assert_eq!(b.red, 1);
    assert_eq!(b.size(), 1);
    let p = &b.panels()[0];
    assert_eq!(p.source, PanelSource::Overlap);
    assert!(p.d_zero > p.d_sharp);
    assert_eq!(p.alpha, -1);
}

#[test]
fn non_cohanging_pairs_far_and_close() {
    let (t0, ts) = instances::non_cohanging(8).unwrap();
    let far = built(&t0, &ts, Some(2));
    assert_eq!(far.regime(), Regime::ManyR);
    let p = &far.panels()[0];
    assert_eq!(p.z_zero.labels, vec![4, 5, 6, 7]);
    assert_eq!((p.d_zero, p.d_sharp, p.alpha), (8, 13, 1));

    let (t0, ts) = instances::non_cohanging(3).unwrap();
    let close = built(&t0, &ts, Some(2));
    let p = &close.panels()[0];
    assert_eq!(p.source, PanelSource::CloseEqual);
    assert_eq!((p.d_zero, p.d_sharp, p.alpha), (8, 6, -1));

    let (t0, ts) = instances::non_cohanging(5).unwrap();
    let p = built(&t0, &ts, Some(2)).panels()[0].clone();
    assert_eq!((p.d_zero, p.d_sharp), (8, 10));
}

fn failures_after(
    t0: &Phylogeny,
    ts: &Phylogeny,
    b: &Battery,
    edit: impl FnOnce(&mut Vec<TestPanel>),
) -> Vec<Requirement> {
    let mut panels = b.panels().to_vec();
    edit(&mut panels);
    let report = validate_battery(t0, ts, b.params(), &panels);
    assert!(!report.passed());
    report
        .panels
        .iter()
        .flat_map(|c| c.failures.clone())
        .collect()
}

#[test]
fn every_injected_violation_is_detected() {
    let (t0, ts) = instances::non_cohanging(8).unwrap();
    let b = built(&t0, &ts, Some(2));
    let stem = |t: &Phylogeny| {
        let top = lca(t, 4, 6);
        restrict_vertices(t, &[top, t.leaf(4), t.leaf(5)])
            .unwrap()
            .with_root(Point::Vertex(top))
    };

    let f = failures_after(&t0, &ts, &b, |p| {
        p[0].z_zero = stem(&t0);
        p[0].z_sharp = stem(&ts);
    });
    assert!(f.contains(&Requirement::Dense), "{f:?}");

    let f = failures_after(&t0, &ts, &b, |p| {
        let cherry = lca(&ts, 4, 5);
        p[0].z_sharp.root = Some(Point::Vertex(cherry));
    });
    assert!(f.contains(&Requirement::Matching), "{f:?}");

    let f = failures_after(&t0, &ts, &b, |p| {
        p[0].z_zero.root = Some(Point::Vertex(t0.leaf(4)));
        p[0].z_sharp.root = Some(Point::Vertex(ts.leaf(4)));
    });
    assert!(f.contains(&Requirement::CoHanging), "{f:?}");

    let f = failures_after(&t0, &ts, &b, |p| {
        let mut q = p[0].clone();
        q.y_zero = leaf_subtree(&t0, 8);
        q.z_zero = leaf_subtree(&t0, 9);
        q.y_sharp = leaf_subtree(&ts, 8);
        q.z_sharp = leaf_subtree(&ts, 9);
        p.push(q);
    });
    assert!(f.contains(&Requirement::Distance), "{f:?}");

    let f = failures_after(&t0, &ts, &b, |p| p[0].alpha = -p[0].alpha);
    assert!(f.contains(&Requirement::Alpha), "{f:?}");

    let f = failures_after(&t0, &ts, &b, |p| p.push(p[0].clone()));
    assert_eq!(
        f,
        vec![
            Requirement::GlobalIntersection,
            Requirement::GlobalIntersection
        ]
    );

    let (h0, hs) = instances::single_swap(4, 2, 2, 9).unwrap();
    let hb = built(&h0, &hs, None);
    let f = failures_after(&h0, &hs, &hb, |p| {
        p[0].y_zero = leaf_subtree(&h0, 2);
        p[0].z_zero = leaf_subtree(&h0, 15);
        p[0].y_sharp = leaf_subtree(&hs, 2);
        p[0].z_sharp = leaf_subtree(&hs, 15);
    });
    assert!(f.contains(&Requirement::Proximity), "{f:?}");
}

#[test]
fn descriptions_round_trip() {
    for (t0, ts, ell) in [
        instances::two_cluster_overlap()
            .map(|(a, b)| (a, b, Some(2)))
            .unwrap(),
        instances::non_cohanging(3)
            .map(|(a, b)| (a, b, Some(2)))
            .unwrap(),
        instances::single_swap(4, 2, 2, 9)
            .map(|(a, b)| (a, b, None))
            .unwrap(),
    ] {
        let b = built(&t0, &ts, ell);
        let desc = b.describe(&t0, &ts).unwrap();
        let json = serde_json::to_string(&desc).unwrap();
        let back: BatteryDescription = serde_json::from_str(&json).unwrap();
        let mut rebuilt = Battery::from_description(&back, &t0, &ts).unwrap();
        assert_eq!(rebuilt.panels(), b.panels());
        assert!(!rebuilt.is_validated());
        assert!(rebuilt.validate(&t0, &ts).unwrap().passed());
    }
}

#[test]
fn statistic_needs_validation() {
    let (t0, ts) = instances::single_swap(4, 2, 2, 9).unwrap();
    let mut b = build_battery(&t0, &ts, &BuildOptions::default()).unwrap();
    let a = sample_markov(&t0, &SubstitutionModel::cfn(), 10, &mut stream(1, &[]));
    assert!(distinguishing_statistic(&b, &a).is_err());
    b.validate(&t0, &ts).unwrap();
    assert!(distinguishing_statistic(&b, &a).is_ok());
    b.panels_mut();
    assert!(!b.is_validated());
}

#[test]
fn statistic_is_zero_without_sites_and_agrees_across_trees() {
    let (t0, ts) = instances::non_cohanging(8).unwrap();
    let b = built(&t0, &ts, Some(2));
    let empty = Alignment::from_states(16, 2, vec![]).unwrap();
    assert_eq!(distinguishing_statistic(&b, &empty).unwrap(), 0.0);
    for seed in 0..5 {
        let a = sample_markov(&ts, &SubstitutionModel::cfn(), 200, &mut stream(seed, &[]));
        assert_eq!(
            distinguishing_statistic(&b, &a).unwrap(),
            distinguishing_statistic_sharp(&b, &a).unwrap()
        );
    }
}

#[test]
fn exact_means_agree_with_simulation() {
    let (t0, ts) = instances::non_cohanging(8).unwrap();
    let b = built(&t0, &ts, Some(2));
    let exact = estimate_means(&b, &t0, &ts, MeansMode::Exact).unwrap();
    assert!(exact.exact);
    assert!(exact.zero > exact.sharp);
    let mc = estimate_means(
        &b,
        &t0,
        &ts,
        MeansMode::MonteCarlo {
            sites: 200_000,
            seed: 4,
        },
    )
    .unwrap();
    assert!(
        (mc.zero - exact.zero).abs() < 4.0 * mc.zero_se,
        "{mc:?} vs {exact:?}"
    );
    assert!(
        (mc.sharp - exact.sharp).abs() < 4.0 * mc.sharp_se,
        "{mc:?} vs {exact:?}"
    );
}

#[test]
fn error_decreases_with_sequence_length() {
    let (t0, ts) = instances::single_swap(4, 2, 2, 9).unwrap();
    let b = built(&t0, &ts, None);
    let means = estimate_means(&b, &t0, &ts, MeansMode::Auto).unwrap();
    let short = empirical_error(&b, &t0, &ts, &means, 4, 1000, 11).unwrap();
    let long = empirical_error(&b, &t0, &ts, &means, 64, 1000, 11).unwrap();
    assert!(long.max() < short.max(), "{short:?} {long:?}");
    assert_eq!(
        empirical_error(&b, &t0, &ts, &means, 4, 1000, 11).unwrap(),
        short
    );
}
