use super::timed;
use crate::config::{ExperimentConfig, SearchMode};
use crate::error::{CliError, CliResult};
use crate::output::Row;
use serde::Serialize;
use slr_core::inference::{ml_estimate, MlMode};
use slr_core::model::{Alignment, SubstitutionModel};
use slr_core::tree::{parse_newick_many, write_newick};

#[derive(Debug, Clone, Serialize)]
pub struct InferRow {
    pub experiment: &'static str,
    pub n: usize,
    pub k: usize,
    pub mode: SearchMode,
    pub index: usize,
    pub tree: String,
    pub neg_log_lik: f64,
    pub tie: bool,
    pub evaluated: usize,
    pub wall_time_s: f64,
    pub seed: u64,
    pub config: String,
}

impl Row for InferRow {
    const HEADER: &'static [&'static str] = &[
        "experiment",
        "n",
        "k",
        "mode",
        "index",
        "tree",
        "neg_log_lik",
        "tie",
        "evaluated",
        "wall_time_s",
        "seed",
        "config",
    ];
}

/// ML tree for the configured alignment.
pub fn run(cfg: &ExperimentConfig) -> CliResult<Vec<InferRow>> {
    let path = cfg
        .alignment
        .as_ref()
        .ok_or_else(|| CliError::Config("infer needs an alignment".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let a = Alignment::from_text(&text)?;
    let (f, g) = (cfg.f_units()?, cfg.g_units()?);
    let mode = match (cfg.mode, &cfg.candidates) {
        (SearchMode::Candidates, None) => {
            return Err(CliError::Config(
                "candidate mode needs a candidates file".into(),
            ))
        }
        (SearchMode::Candidates | SearchMode::Auto, Some(p)) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            MlMode::Candidates(parse_newick_many(&text, cfg.upsilon)?)
        }
        (SearchMode::Exhaustive, _) => MlMode::Exhaustive {
            f_units: f,
            g_units: g,
            upsilon: cfg.upsilon,
        },
        (SearchMode::Topology | SearchMode::Auto, _) => MlMode::TopologyOnly {
            f_units: f,
            g_units: g,
            upsilon: cfg.upsilon,
            max_sweeps: cfg.max_sweeps,
        },
    };
    let (est, wall) = timed(|| {
        ml_estimate(
            &a,
            &SubstitutionModel::new(a.r())?,
            &mode,
            cfg.enumeration_limit,
        )
    });
    let est = est?;
    Ok(vec![InferRow {
        experiment: "infer",
        n: a.n(),
        k: a.k(),
        mode: cfg.mode,
        index: est.index,
        tree: write_newick(&est.tree),
        neg_log_lik: est.value,
        tie: est.tie,
        evaluated: est.evaluated,
        wall_time_s: wall,
        seed: cfg.seed,
        config: cfg.echo(),
    }])
}
