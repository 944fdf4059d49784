use super::{fit_log_linear, timed};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::Row;
use serde::Serialize;
use slr_core::battery::{
    build_battery, empirical_error, estimate_means, Battery, BuildOptions, Means, MeansMode,
    Regime, ValidationReport, MEAN_SITES,
};
use slr_core::rng::derive_seed;
use slr_core::{Error, Phylogeny};

#[derive(Debug, Clone, Serialize)]
pub struct PowerRow {
    pub experiment: &'static str,
    pub n: usize,
    pub g: f64,
    pub k: usize,
    pub trials: usize,
    pub regime: Regime,
    pub panels: usize,
    /// Rejections of `T0` under `T0`.
    pub error_zero: f64,
    pub error_zero_se: f64,
    /// Acceptances of `T0` under `T#`.
    pub error_sharp: f64,
    pub error_sharp_se: f64,
    /// The larger of the two error rates.
    pub error: f64,
    pub se: f64,
    pub wall_time_s: f64,
    pub seed: u64,
    pub config: String,
}

impl Row for PowerRow {
    const HEADER: &'static [&'static str] = &[
        "experiment",
        "n",
        "g",
        "k",
        "trials",
        "regime",
        "panels",
        "error_zero",
        "error_zero_se",
        "error_sharp",
        "error_sharp_se",
        "error",
        "se",
        "wall_time_s",
        "seed",
        "config",
    ];
}

/// Fit of `ln error = intercept + slope·k`.
#[derive(Debug, Clone, Serialize)]
pub struct PowerFit {
    pub experiment: &'static str,
    pub n: usize,
    pub regime: Regime,
    pub panels: usize,
    pub mean_zero: f64,
    pub mean_sharp: f64,
    pub means_exact: bool,
    pub intercept: Option<f64>,
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
    pub seed: u64,
    pub config: String,
}

impl Row for PowerFit {
    const HEADER: &'static [&'static str] = &[
        "experiment",
        "n",
        "regime",
        "panels",
        "mean_zero",
        "mean_sharp",
        "means_exact",
        "intercept",
        "slope",
        "r_squared",
        "seed",
        "config",
    ];
}

pub struct PowerReport {
    pub battery: Battery,
    pub validation: ValidationReport,
    pub means: Means,
    pub rows: Vec<PowerRow>,
    pub fit: PowerFit,
    pub t0: Phylogeny,
    pub ts: Phylogeny,
}

/// `T0` from the tree spec and `T#` from the second spec or a leaf swap.
pub fn tree_pair(cfg: &ExperimentConfig) -> CliResult<(Phylogeny, Phylogeny)> {
    let t0 = cfg.build_tree(&cfg.tree, 0)?;
    let ts = match (&cfg.tree_alt, cfg.swap) {
        (Some(spec), _) => cfg.build_tree(spec, 1)?,
        (None, Some((a, b))) => {
            let n = t0.n_leaves();
            if a == 0 || b == 0 || a > n || b > n {
                return Err(CliError::Config(format!("swap leaves must be in 1..={n}")));
            }
            t0.swap_subtrees(t0.leaf(a - 1), t0.leaf(b - 1))?
        }
        (None, None) => {
            return Err(CliError::Config(
                "battery-power needs a second tree or a leaf swap".into(),
            ))
        }
    };
    Ok((t0, ts))
}

/// Builds and validates the battery, then sweeps `k`.
pub fn run(cfg: &ExperimentConfig) -> CliResult<PowerReport> {
    let (t0, ts) = tree_pair(cfg)?;
    let mut battery = build_battery(&t0, &ts, &BuildOptions { ell: cfg.ell })?;
    let validation = battery.validate(&t0, &ts)?;
    if !validation.passed() {
        return Err(CliError::Core(Error::UnvalidatedBattery));
    }
    if battery.size() == 0 {
        return Err(CliError::Config("the trees give an empty battery".into()));
    }
    let means = match estimate_means(&battery, &t0, &ts, MeansMode::Exact) {
        Ok(m) => m,
        Err(Error::ScaleLimit { .. }) => estimate_means(
            &battery,
            &t0,
            &ts,
            MeansMode::MonteCarlo {
                sites: MEAN_SITES,
                seed: derive_seed(cfg.seed, &[u64::MAX]),
            },
        )?,
        Err(e) => return Err(e.into()),
    };
    let mut rows = vec![];
    if cfg.trials > 0 {
        for &k in &cfg.k_grid {
            let (rates, wall) = timed(|| {
                empirical_error(
                    &battery,
                    &t0,
                    &ts,
                    &means,
                    k,
                    cfg.trials,
                    derive_seed(cfg.seed, &[k as u64]),
                )
            });
            let r = rates?;
            let se = if r.zero >= r.sharp {
                r.zero_se
            } else {
                r.sharp_se
            };
            rows.push(PowerRow {
                experiment: "battery-power",
                n: t0.n_leaves(),
                g: cfg.g,
                k,
                trials: cfg.trials,
                regime: battery.regime(),
                panels: battery.size(),
                error_zero: r.zero,
                error_zero_se: r.zero_se,
                error_sharp: r.sharp,
                error_sharp_se: r.sharp_se,
                error: r.max(),
                se,
                wall_time_s: wall,
                seed: cfg.seed,
                config: cfg.echo(),
            });
        }
    }
    let ks: Vec<f64> = rows.iter().map(|r| r.k as f64).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let lf = fit_log_linear(&ks, &errs);
    let fit = PowerFit {
        experiment: "battery-power",
        n: t0.n_leaves(),
        regime: battery.regime(),
        panels: battery.size(),
        mean_zero: means.zero,
        mean_sharp: means.sharp,
        means_exact: means.exact,
        intercept: lf.map(|f| f.intercept),
        slope: lf.map(|f| f.slope),
        r_squared: lf.map(|f| f.r_squared),
        seed: cfg.seed,
        config: cfg.echo(),
    };
    Ok(PowerReport {
        battery,
        validation,
        means,
        rows,
        fit,
        t0,
        ts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TreeSpec;

    #[test]
    fn single_swap_power_decays() {
        let cfg = ExperimentConfig {
            tree: TreeSpec::Homogeneous { h: 4 },
            swap: Some((2, 9)),
            k_grid: vec![4, 16, 64],
            trials: 400,
            ..Default::default()
        };
        let rep = run(&cfg).unwrap();
        assert_eq!(rep.rows.len(), 3);
        assert!(rep.fit.slope.unwrap() < 0.0);
        assert!(rep.means.exact);
    }

    #[test]
    fn needs_an_alternative() {
        let cfg = ExperimentConfig::default();
        assert!(matches!(run(&cfg), Err(CliError::Config(_))));
    }
}
