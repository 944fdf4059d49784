use super::timed;
use crate::config::{to_units, ExperimentConfig, SearchMode};
use crate::error::{CliError, CliResult};
use crate::output::Row;
use rayon::prelude::*;
use serde::Serialize;
use slr_core::inference::{ml_estimate, MlMode, PatternTable, SwapScorer};
use slr_core::model::{sample_markov, SubstitutionModel};
use slr_core::rng::stream;
use slr_core::tree::topology_form;
use slr_core::Phylogeny;

/// Largest height for the topology searches (`n = 8`).
pub const TOPOLOGY_HEIGHT: usize = 3;
/// Largest height for the exhaustive weight search (`n = 4`).
pub const EXHAUSTIVE_HEIGHT: usize = 2;
/// Largest height for the swap candidate set.
pub const CANDIDATE_HEIGHT: usize = 6;

#[derive(Debug, Clone, Serialize)]
pub struct PhaseRow {
    pub experiment: &'static str,
    pub h: usize,
    pub n: usize,
    pub g: f64,
    pub k: usize,
    pub mode: SearchMode,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// `1 − success_rate`.
    pub error: f64,
    pub se: f64,
    pub wall_time_s: f64,
    pub seed: u64,
    pub config: String,
}

impl Row for PhaseRow {
    const HEADER: &'static [&'static str] = &[
        "experiment",
        "h",
        "n",
        "g",
        "k",
        "mode",
        "trials",
        "successes",
        "success_rate",
        "error",
        "se",
        "wall_time_s",
        "seed",
        "config",
    ];
}

/// Smallest grid `k` reaching success `1 − δ` for one `(h, g)`.
#[derive(Debug, Clone, Serialize)]
pub struct K90Row {
    pub experiment: &'static str,
    pub h: usize,
    pub n: usize,
    pub g: f64,
    pub mode: SearchMode,
    pub target: f64,
    pub k90: Option<usize>,
    pub config: String,
}

impl Row for K90Row {
    const HEADER: &'static [&'static str] = &[
        "experiment",
        "h",
        "n",
        "g",
        "mode",
        "target",
        "k90",
        "config",
    ];
}

pub struct PhaseReport {
    pub rows: Vec<PhaseRow>,
    pub k90: Vec<K90Row>,
}

/// Search mode actually used at height `h`, or why it is refused.
pub fn resolve_mode(mode: SearchMode, h: usize) -> CliResult<SearchMode> {
    let refuse = |what: &str, limit: usize| {
        Err(CliError::Scale(format!(
            "{what} search is limited to h ≤ {limit} ({} leaves); h = {h} asked",
            1usize << limit
        )))
    };
    match mode {
        SearchMode::Auto if h <= TOPOLOGY_HEIGHT => Ok(SearchMode::Topology),
        SearchMode::Auto if h <= CANDIDATE_HEIGHT => Ok(SearchMode::Candidates),
        SearchMode::Auto | SearchMode::Candidates if h > CANDIDATE_HEIGHT => {
            refuse("swap candidate", CANDIDATE_HEIGHT)
        }
        SearchMode::Topology if h > TOPOLOGY_HEIGHT => {
            refuse("exhaustive topology", TOPOLOGY_HEIGHT)
        }
        SearchMode::Exhaustive if h > EXHAUSTIVE_HEIGHT => {
            refuse("exhaustive weight", EXHAUSTIVE_HEIGHT)
        }
        m => Ok(m),
    }
}

/// Decides whether ML recovers the topology of `t0` from one alignment.
enum Judge {
    Swap(SwapScorer),
    Search {
        mode: MlMode,
        target: String,
        limit: usize,
    },
}

impl Judge {
    fn new(
        t0: &Phylogeny,
        mode: SearchMode,
        cfg: &ExperimentConfig,
        g_units: u64,
    ) -> CliResult<Self> {
        let target = topology_form(t0);
        let limit = cfg.enumeration_limit.max(t0.n_leaves());
        Ok(match mode {
            SearchMode::Candidates => Judge::Swap(SwapScorer::new(t0)?),
            // Every topology at the true weight; the contracted root edge of
            // `T0` is off this grid, so success is judged on topology only.
            SearchMode::Topology | SearchMode::Auto => Judge::Search {
                mode: MlMode::TopologyOnly {
                    f_units: g_units,
                    g_units,
                    upsilon: cfg.upsilon,
                    max_sweeps: cfg.max_sweeps,
                },
                target,
                limit,
            },
            SearchMode::Exhaustive => Judge::Search {
                mode: MlMode::Exhaustive {
                    f_units: g_units,
                    g_units: 2 * g_units,
                    upsilon: cfg.upsilon,
                },
                target,
                limit,
            },
        })
    }

    /// Strict wins only: ties count as failures.
    fn success(&self, a: &slr_core::model::Alignment) -> slr_core::Result<bool> {
        match self {
            Judge::Swap(s) => s.base_is_unique_best(&PatternTable::new(a)),
            Judge::Search {
                mode,
                target,
                limit,
            } => {
                let est = ml_estimate(a, &SubstitutionModel::cfn(), mode, *limit)?;
                Ok(!est.tie && topology_form(&est.tree) == *target)
            }
        }
    }
}

/// ML success rates on homogeneous trees over the `(h, g, k)` grids.
/// Trial `i` draws from stream `(seed, [h, gΥ, k, i])`.
pub fn run(cfg: &ExperimentConfig) -> CliResult<PhaseReport> {
    let modes: Vec<SearchMode> = cfg
        .h_grid
        .iter()
        .map(|&h| resolve_mode(cfg.mode, h))
        .collect::<CliResult<_>>()?;
    let model = SubstitutionModel::cfn();
    let target = 1.0 - cfg.delta;
    let mut rows = vec![];
    let mut k90 = vec![];
    for (&h, &mode) in cfg.h_grid.iter().zip(&modes) {
        for &g in &cfg.g_grid {
            let gu = to_units(g, cfg.upsilon)?;
            let t0 = Phylogeny::homogeneous(h, gu, cfg.upsilon)?;
            let judge = Judge::new(&t0, mode, cfg, gu)?;
            let mut first = None;
            if cfg.trials > 0 {
                for &k in &cfg.k_grid {
                    let (hits, wall) = timed(|| {
                        (0..cfg.trials)
                            .into_par_iter()
                            .map(|i| {
                                let a = sample_markov(
                                    &t0,
                                    &model,
                                    k,
                                    &mut stream(cfg.seed, &[h as u64, gu, k as u64, i as u64]),
                                );
                                judge.success(&a)
                            })
                            .collect::<slr_core::Result<Vec<bool>>>()
                    });
                    let successes = hits?.iter().filter(|&&s| s).count();
                    let rate = successes as f64 / cfg.trials as f64;
                    rows.push(PhaseRow {
                        experiment: "phase-transition",
                        h,
                        n: t0.n_leaves(),
                        g,
                        k,
                        mode,
                        trials: cfg.trials,
                        successes,
                        success_rate: rate,
                        error: (cfg.trials - successes) as f64 / cfg.trials as f64,
                        se: slr_core::stats::proportion_se(rate, cfg.trials),
                        wall_time_s: wall,
                        seed: cfg.seed,
                        config: cfg.echo(),
                    });
                    if rate >= target && first.is_none() {
                        first = Some(k);
                        if cfg.stop_at_target {
                            break;
                        }
                    }
                }
            }
            k90.push(K90Row {
                experiment: "phase-transition",
                h,
                n: t0.n_leaves(),
                g,
                mode,
                target,
                k90: first,
                config: cfg.echo(),
            });
        }
    }
    Ok(PhaseReport { rows, k90 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infeasible_modes_are_refused() {
        assert!(matches!(
            resolve_mode(SearchMode::Topology, 4),
            Err(CliError::Scale(_))
        ));
        assert!(matches!(
            resolve_mode(SearchMode::Exhaustive, 3),
            Err(CliError::Scale(_))
        ));
        assert_eq!(
            resolve_mode(SearchMode::Auto, 3).unwrap(),
            SearchMode::Topology
        );
        assert_eq!(
            resolve_mode(SearchMode::Auto, 4).unwrap(),
            SearchMode::Candidates
        );
    }

    #[test]
    fn zero_trials_give_no_rows() {
        let cfg = ExperimentConfig {
            trials: 0,
            ..Default::default()
        };
        let r = run(&cfg).unwrap();
        assert!(r.rows.is_empty());
        assert!(r.k90.iter().all(|x| x.k90.is_none()));
    }

    #[test]
    fn long_alignments_recover_the_tree() {
        for mode in [
            SearchMode::Topology,
            SearchMode::Candidates,
            SearchMode::Exhaustive,
        ] {
            let cfg = ExperimentConfig {
                h_grid: vec![2],
                g_grid: vec![0.2],
                k_grid: vec![2000],
                trials: 20,
                mode,
                ..Default::default()
            };
            let r = run(&cfg).unwrap();
            assert!(
                r.rows[0].success_rate >= 0.99,
                "{mode:?}: {}",
                r.rows[0].success_rate
            );
        }
    }
}
