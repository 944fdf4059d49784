use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use slr_core::battery::{
    build_battery, color_vertices, distinguishing_statistic, distinguishing_statistic_sharp,
    BuildOptions, Color,
};
use slr_core::distance::{blowup_distance_exact, swap_distance_exact};
use slr_core::inference::ancestral_posterior;
use slr_core::model::{exact_leaf_distribution, sample_markov, SubstitutionModel};
use slr_core::rng::stream;
use slr_core::tree::{
    check_four_point, is_metric_matching, random_regular, restrict, tree_metric, Phylogeny,
    RootedTree,
};

fn regular(n: usize, f: u64, g: u64, seed: u64) -> Phylogeny {
    random_regular(n, f, g, 10, &mut stream(seed, &[])).unwrap()
}

fn shuffled_homogeneous(h: usize, g: u64, seed: u64) -> Phylogeny {
    let mut perm: Vec<usize> = (0..1 << h).collect();
    perm.shuffle(&mut stream(seed, &[]));
    Phylogeny::homogeneous_labeled(h, g, 10, &perm).unwrap()
}

fn label_subset(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = stream(seed, &[1]);
    let mut ls: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
    if ls.is_empty() {
        ls.push(0);
    }
    ls
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tree_metrics_satisfy_four_point(n in 4usize..=12, seed in any::<u64>()) {
        prop_assert!(check_four_point(&tree_metric(&regular(n, 1, 4, seed))));
    }

    #[test]
    fn restrictions_match_themselves(n in 3usize..=12, seed in any::<u64>()) {
        let t = regular(n, 1, 4, seed);
        let y = restrict(&t, &label_subset(n, seed)).unwrap();
        prop_assert!(is_metric_matching(&t, &y, &t, &y).unwrap());
    }

    #[test]
    fn density_is_monotone_in_slack(n in 4usize..=16, seed in any::<u64>(), ell in 2usize..=3) {
        let t = regular(n, 1, 4, seed);
        let root = t.default_root();
        let rt = RootedTree::from_phylogeny(&t, root);
        let mut was = false;
        for wp in 0..(1u32 << ell) {
            let now = rt.is_dense(ell, wp);
            prop_assert!(now || !was);
            was = now;
        }
    }

    #[test]
    fn posteriors_are_normalized(n in 3usize..=10, seed in any::<u64>()) {
        let t = regular(n, 1, 6, seed);
        let rt = RootedTree::from_phylogeny(&t, t.default_root());
        let a = sample_markov(&t, &SubstitutionModel::cfn(), 5, &mut stream(seed, &[2]));
        for site in a.sites() {
            let p = ancestral_posterior(&rt, site).unwrap();
            prop_assert!((p.plus + p.minus - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn channels_compose(w1 in 0.0f64..3.0, w2 in 0.0f64..3.0) {
        let m = SubstitutionModel::cfn();
        let (a, b, c) = (m.transition(w1), m.transition(w2), m.transition(w1 + w2));
        for i in 0..2 {
            for j in 0..2 {
                let ab: f64 = (0..2).map(|k| a[i * 2 + k] * b[k * 2 + j]).sum();
                prop_assert!((ab - c[i * 2 + j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn leaf_law_has_uniform_marginals_and_ignores_the_root(n in 3usize..=6, seed in any::<u64>()) {
        let t = regular(n, 1, 5, seed);
        let m = SubstitutionModel::cfn();
        let p = exact_leaf_distribution(&t, &m, 16).unwrap();
        for l in 0..n {
            let plus: f64 = p.iter().enumerate().filter(|(c, _)| c >> l & 1 == 0).map(|(_, x)| x).sum();
            prop_assert!((plus - 0.5).abs() < 1e-12);
        }
        for v in 0..t.n_vertices() {
            if t.is_leaf(v) {
                continue;
            }
            let q = exact_leaf_distribution(&t.with_root(Some(v)).unwrap(), &m, 16).unwrap();
            for (x, y) in p.iter().zip(&q) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn yellow_never_outnumbers_red_on_homogeneous_trees(h in 2usize..=6, seed in any::<u64>(), swaps in 1usize..=4) {
        let t0 = Phylogeny::homogeneous(h, 2, 10).unwrap();
        let mut ts = t0.clone();
        let mut rng = stream(seed, &[]);
        let n = 1 << h;
        for _ in 0..swaps {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            if let Ok(s) = ts.swap_subtrees(ts.leaf(a), ts.leaf(b)) {
                ts = s;
            }
        }
        let c = color_vertices(&t0, &ts, 2).unwrap();
        prop_assert!(c.count(Color::Yellow) <= c.count(Color::Red));
    }

    #[test]
    fn yellow_never_outnumbers_red_on_regular_trees(n in 4usize..=32, seed in any::<u64>(), ell in 2usize..=3) {
        let t0 = regular(n, 1, 3, seed);
        let ts = regular(n, 1, 3, seed ^ 1);
        let c = color_vertices(&t0, &ts, ell).unwrap();
        prop_assert!(c.count(Color::Yellow) <= c.count(Color::Red));
    }

    #[test]
    fn panels_have_a_gap_and_both_statistics_agree(h in 3usize..=4, seed in any::<u64>()) {
        let t0 = Phylogeny::homogeneous(h, 2, 10).unwrap();
        let ts = shuffled_homogeneous(h, 2, seed);
        let mut b = build_battery(&t0, &ts, &BuildOptions::default()).unwrap();
        prop_assert!(b.panels().iter().all(|p| p.gap() >= 1));
        if b.validate(&t0, &ts).unwrap().passed() {
            let a = sample_markov(&t0, &SubstitutionModel::cfn(), 50, &mut stream(seed, &[3]));
            prop_assert_eq!(distinguishing_statistic(&b, &a).unwrap(), distinguishing_statistic_sharp(&b, &a).unwrap());
        }
    }

    #[test]
    fn swap_distance_is_symmetric_and_short(h in 2usize..=3, s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = shuffled_homogeneous(h, 2, s1);
        let b = shuffled_homogeneous(h, 2, s2);
        let d = swap_distance_exact(&a, &b).unwrap();
        prop_assert_eq!(d, swap_distance_exact(&b, &a).unwrap());
        prop_assert!(d < 1 << h);
    }

    #[test]
    fn blowup_distance_is_a_metric(n in 3usize..=5, s in any::<u64>()) {
        let (a, b, c) = (regular(n, 1, 2, s), regular(n, 1, 2, s ^ 1), regular(n, 1, 2, s ^ 2));
        let ab = blowup_distance_exact(&a, &b).unwrap();
        prop_assert_eq!(ab, blowup_distance_exact(&b, &a).unwrap());
        let bc = blowup_distance_exact(&b, &c).unwrap();
        let ac = blowup_distance_exact(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc);
        prop_assert_eq!(blowup_distance_exact(&a, &a).unwrap(), 0);
    }
}
