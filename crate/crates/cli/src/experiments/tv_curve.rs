use super::{fit_log_linear, timed};
use crate::config::{ExperimentConfig, TreeSpec};
use crate::error::{CliError, CliResult};
use crate::output::Row;
use rand::seq::index::sample;
use serde::Serialize;
use slr_core::distance::{blowup_distance_exact, BLOWUP_EXACT_LIMIT};
use slr_core::inference::estimate_tv_k;
use slr_core::model::SubstitutionModel;
use slr_core::rng::{derive_seed, stream};
use slr_core::tree::random_regular;
use slr_core::Phylogeny;

#[derive(Debug, Clone, Serialize)]
pub struct TvRow {
    pub experiment: &'static str,
    pub pair: usize,
    pub construction: usize,
    pub delta_bl: usize,
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub tv: f64,
    pub tv_se: f64,
    pub wall_time_s: f64,
    pub seed: u64,
    pub config: String,
}

impl Row for TvRow {
    const HEADER: &'static [&'static str] = &[
        "experiment",
        "pair",
        "construction",
        "delta_bl",
        "n",
        "k",
        "trials",
        "tv",
        "tv_se",
        "wall_time_s",
        "seed",
        "config",
    ];
}

/// Fit of `TV^k ≈ 1 − a·e^{−bk}` for one pair.
#[derive(Debug, Clone, Serialize)]
pub struct TvFit {
    pub experiment: &'static str,
    pub pair: usize,
    pub construction: usize,
    pub delta_bl: usize,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub r_squared: Option<f64>,
    pub config: String,
}

impl Row for TvFit {
    const HEADER: &'static [&'static str] = &[
        "experiment",
        "pair",
        "construction",
        "delta_bl",
        "a",
        "b",
        "r_squared",
        "config",
    ];
}

pub struct TvReport {
    pub rows: Vec<TvRow>,
    pub fits: Vec<TvFit>,
    /// `(Δ_BL, mean fitted b, pairs)` per distance class.
    pub by_delta: Vec<(usize, f64, usize)>,
}

/// `T0` for construction `c`: a fresh random tree, or the configured one.
fn base_tree(cfg: &ExperimentConfig, c: usize) -> CliResult<Phylogeny> {
    match cfg.tree {
        TreeSpec::Random { n } => Ok(random_regular(
            n,
            cfg.f_units()?,
            cfg.g_units()?,
            cfg.upsilon,
            &mut stream(cfg.seed, &[7, c as u64]),
        )?),
        _ => cfg.build_tree(&cfg.tree, 0),
    }
}

/// Each construction raises the weight of one random edge of `T0` by
/// `bump` units (a pair at blow-up distance 1), then of a second edge
/// (distance 2). Distances are recomputed exactly when `n` allows.
pub fn pairs(cfg: &ExperimentConfig) -> CliResult<Vec<(usize, usize, Phylogeny, Phylogeny)>> {
    if cfg.bump == 0 {
        return Err(CliError::Config("bump must be positive".into()));
    }
    let mut out = vec![];
    for c in 0..cfg.constructions {
        let t0 = base_tree(cfg, c)?;
        let m = t0.edges().len();
        if m < 2 {
            return Err(CliError::Config(
                "tv-curve needs trees with two edges".into(),
            ));
        }
        let picks = sample(&mut stream(cfg.seed, &[8, c as u64]), m, 2);
        let (e1, e2) = (picks.index(0), picks.index(1));
        let t1 = t0.with_edge_units(e1, t0.units(e1) + cfg.bump);
        let t2 = t1.with_edge_units(e2, t1.units(e2) + cfg.bump);
        for (target, t) in [(1, t1), (2, t2)] {
            let d = if t0.n_leaves() <= BLOWUP_EXACT_LIMIT {
                blowup_distance_exact(&t0, &t)?
            } else {
                target
            };
            out.push((c, d, t0.clone(), t));
        }
    }
    Ok(out)
}

pub fn run(cfg: &ExperimentConfig) -> CliResult<TvReport> {
    let model = SubstitutionModel::new(cfg.r)?;
    let mut rows = vec![];
    let mut fits = vec![];
    if cfg.trials == 0 {
        return Ok(TvReport {
            rows,
            fits,
            by_delta: vec![],
        });
    }
    for (pair, (c, d, t0, t1)) in pairs(cfg)?.into_iter().enumerate() {
        let mut ks = vec![];
        let mut overlaps = vec![];
        for &k in &cfg.k_grid {
            let (est, wall) = timed(|| {
                estimate_tv_k(
                    &t0,
                    &t1,
                    &model,
                    k,
                    cfg.trials,
                    derive_seed(cfg.seed, &[pair as u64, k as u64]),
                )
            });
            let est = est?;
            ks.push(k as f64);
            overlaps.push(est.overlap);
            rows.push(TvRow {
                experiment: "tv-curve",
                pair,
                construction: c,
                delta_bl: d,
                n: t0.n_leaves(),
                k,
                trials: cfg.trials,
                tv: est.tv,
                tv_se: est.tv_se,
                wall_time_s: wall,
                seed: cfg.seed,
                config: cfg.echo(),
            });
        }
        let lf = fit_log_linear(&ks, &overlaps);
        fits.push(TvFit {
            experiment: "tv-curve",
            pair,
            construction: c,
            delta_bl: d,
            a: lf.map(|f| f.intercept.exp()),
            b: lf.map(|f| -f.slope),
            r_squared: lf.map(|f| f.r_squared),
            config: cfg.echo(),
        });
    }
    let mut deltas: Vec<usize> = fits.iter().map(|f| f.delta_bl).collect();
    deltas.sort_unstable();
    deltas.dedup();
    let by_delta = deltas
        .into_iter()
        .map(|d| {
            let bs: Vec<f64> = fits
                .iter()
                .filter(|f| f.delta_bl == d)
                .filter_map(|f| f.b)
                .collect();
            (d, bs.iter().sum::<f64>() / bs.len().max(1) as f64, bs.len())
        })
        .collect();
    Ok(TvReport {
        rows,
        fits,
        by_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructions_have_the_intended_distances() {
        let cfg = ExperimentConfig {
            tree: TreeSpec::Random { n: 5 },
            constructions: 3,
            ..Default::default()
        };
        let ps = pairs(&cfg).unwrap();
        assert_eq!(ps.len(), 6);
        for (i, (_, d, _, _)) in ps.iter().enumerate() {
            assert_eq!(*d, 1 + i % 2);
        }
    }

    #[test]
    fn identical_trees_have_no_variation() {
        let cfg = ExperimentConfig {
            tree: TreeSpec::Homogeneous { h: 2 },
            ..Default::default()
        };
        let t = cfg.build_tree(&cfg.tree, 0).unwrap();
        let est = estimate_tv_k(&t, &t, &SubstitutionModel::cfn(), 32, 200, 1).unwrap();
        assert!(est.tv.abs() < 1e-12);
    }
}
