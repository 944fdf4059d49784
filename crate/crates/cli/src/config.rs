//! Experiment configuration: defaults, JSON loading and validation.

use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use slr_core::rng::stream;
use slr_core::tree::{parse_newick, random_regular};
use slr_core::Phylogeny;
use std::path::{Path, PathBuf};

/// How the tree of an experiment is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeSpec {
    /// Complete binary tree of height `h` with every weight `g`.
    Homogeneous { h: usize },
    /// Newick file on the `Υ` grid.
    Newick { path: PathBuf },
    /// Random binary topology with weights uniform in `[f, g]`.
    Random { n: usize },
}

/// Leaf sampler for `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    Markov,
    Cluster,
}

/// Search space of the ML runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Exhaustive topologies for `h ≤ 3`, swap candidates above.
    Auto,
    /// Every weight vector of every topology on the `[f, g]` grid.
    Exhaustive,
    /// Every topology, weights by grid descent within `[f, g]`.
    Topology,
    /// `T0` and its single-swap neighbors (homogeneous trees only), or
    /// the trees in `candidates`.
    Candidates,
}

/// Run-time options that never change a numeric result; not echoed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunOptions {
    /// Worker threads (0 for one per core).
    pub threads: usize,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    /// Where `battery-power` writes the battery description.
    pub battery: Option<PathBuf>,
}

/// Effective configuration of one experiment. Every CSV row echoes it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    /// Number of states.
    pub r: usize,
    /// Smallest edge weight.
    pub f: f64,
    /// Largest edge weight; the weight of homogeneous trees.
    pub g: f64,
    /// Weights are multiples of `1/Υ`.
    pub upsilon: u64,
    pub tree: TreeSpec,
    /// Second tree for `distance` and `battery-power`.
    pub tree_alt: Option<TreeSpec>,
    /// Leaves exchanged (counted from 1) to form `T#` in `battery-power`.
    pub swap: Option<(usize, usize)>,
    /// Sites for `simulate`.
    pub k: usize,
    pub k_grid: Vec<usize>,
    pub h_grid: Vec<usize>,
    pub g_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Target failure probability: `k₉₀` is the first `k` with success
    /// at least `1 − δ`.
    pub delta: f64,
    pub sampler: Sampler,
    pub mode: SearchMode,
    /// Grid-descent sweeps in topology mode.
    pub max_sweeps: usize,
    pub enumeration_limit: usize,
    /// Alignment file for `infer`.
    pub alignment: Option<PathBuf>,
    /// Newick file of candidate trees for `infer`.
    pub candidates: Option<PathBuf>,
    /// Fixed ℓ for `battery-power`.
    pub ell: Option<usize>,
    /// Tree pairs per distance class in `tv-curve`.
    pub constructions: usize,
    /// Weight change per edge in `tv-curve`, in grid units.
    pub bump: u64,
    /// Stop a phase-transition sweep at the first `k` reaching `1 − δ`.
    pub stop_at_target: bool,
    #[serde(skip_serializing)]
    pub run: RunOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: String::new(),
            r: 2,
            f: 0.1,
            g: 0.2,
            upsilon: 10,
            tree: TreeSpec::Homogeneous { h: 3 },
            tree_alt: None,
            swap: None,
            k: 100,
            k_grid: vec![4, 8, 16, 32, 64],
            h_grid: vec![2, 3],
            g_grid: vec![0.2, 0.6],
            trials: 100,
            seed: 0,
            delta: 0.1,
            sampler: Sampler::Markov,
            mode: SearchMode::Auto,
            max_sweeps: 2,
            enumeration_limit: slr_core::tree::DEFAULT_ENUMERATION_LIMIT,
            alignment: None,
            candidates: None,
            ell: None,
            constructions: 10,
            bump: 3,
            stop_at_target: false,
            run: RunOptions::default(),
        }
    }
}

/// Converts a weight to grid units, refusing weights off the grid.
pub fn to_units(w: f64, upsilon: u64) -> CliResult<u64> {
    let u = w * upsilon as f64;
    let r = u.round();
    if (u - r).abs() > 1e-9 || r < 0.0 {
        return Err(CliError::Config(format!(
            "weight {w} is not a multiple of 1/{upsilon}"
        )));
    }
    Ok(r as u64)
}

impl ExperimentConfig {
    /// Reads a JSON config from a file, or parses it directly when the
    /// argument starts with `{`.
    pub fn load(arg: &str) -> CliResult<Self> {
        let text = if arg.trim_start().starts_with('{') {
            arg.to_string()
        } else {
            std::fs::read_to_string(arg)
                .map_err(|e| CliError::Config(format!("cannot read config {arg}: {e}")))?
        };
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("bad config: {e}")))
    }

    /// Config echo for CSV rows.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn f_units(&self) -> CliResult<u64> {
        to_units(self.f, self.upsilon)
    }

    pub fn g_units(&self) -> CliResult<u64> {
        to_units(self.g, self.upsilon)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.r < 2 {
            return bad("r must be at least 2".into());
        }
        if self.upsilon == 0 {
            return bad("Υ must be positive".into());
        }
        if !(self.f > 0.0 && self.f <= self.g) {
            return bad(format!(
                "need 0 < f ≤ g, got f = {}, g = {}",
                self.f, self.g
            ));
        }
        if self.f * (self.upsilon as f64) < 1.0 - 1e-9 {
            return bad(format!(
                "need Υ ≥ 1/f, got Υ = {}, f = {}",
                self.upsilon, self.f
            ));
        }
        self.f_units()?;
        self.g_units()?;
        for &g in &self.g_grid {
            if g <= 0.0 {
                return bad(format!("grid weight {g} must be positive"));
            }
            to_units(g, self.upsilon)?;
        }
        if self.k_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("k grid must be strictly increasing".into());
        }
        if self.h_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("h grid must be strictly increasing".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("δ must be in (0, 1), got {}", self.delta));
        }
        Ok(())
    }

    /// Builds a tree from a spec with this config's weights and seed.
    pub fn build_tree(&self, spec: &TreeSpec, stream_id: u64) -> CliResult<Phylogeny> {
        let (f, g) = (self.f_units()?, self.g_units()?);
        let t = match spec {
            TreeSpec::Homogeneous { h } => Phylogeny::homogeneous(*h, g, self.upsilon)?,
            TreeSpec::Newick { path } => read_newick(path, self.upsilon)?,
            TreeSpec::Random { n } => random_regular(
                *n,
                f,
                g,
                self.upsilon,
                &mut stream(self.seed, &[u64::MAX, stream_id]),
            )?,
        };
        Ok(t)
    }
}

pub fn read_newick(path: &Path, upsilon: u64) -> CliResult<Phylogeny> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_newick(text.trim(), upsilon)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn invariants_are_enforced() {
        let mut c = ExperimentConfig {
            f: 0.3,
            g: 0.2,
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
        c = ExperimentConfig {
            f: 0.05,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c = ExperimentConfig {
            k_grid: vec![4, 4],
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c = ExperimentConfig {
            g: 0.25,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_round_trip_skips_run_options() {
        let mut c = ExperimentConfig {
            seed: 9,
            ..Default::default()
        };
        c.run.threads = 4;
        let back = ExperimentConfig::load(&c.echo()).unwrap();
        assert_eq!(back.seed, 9);
        assert_eq!(back.run.threads, 0);
        assert!(ExperimentConfig::load("{\"nope\": 1}").is_err());
    }
}
