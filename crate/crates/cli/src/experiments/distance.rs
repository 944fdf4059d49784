use super::timed;
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::Row;
use serde::Serialize;
use slr_core::battery::color_vertices;
use slr_core::distance::{
    blowup_distance_exact, blowup_upper_bound, homogeneous_shape, swap_distance_exact,
    BLOWUP_EXACT_LIMIT, SWAP_EXACT_HEIGHT,
};
use slr_core::tree::restrict;
use slr_core::Phylogeny;
use std::collections::BTreeSet;

#[derive(Debug, Clone, Serialize)]
pub struct DistanceRow {
    pub experiment: &'static str,
    pub n: usize,
    pub measure: &'static str,
    pub value: usize,
    pub wall_time_s: f64,
    pub seed: u64,
    pub config: String,
}

impl Row for DistanceRow {
    const HEADER: &'static [&'static str] = &[
        "experiment",
        "n",
        "measure",
        "value",
        "wall_time_s",
        "seed",
        "config",
    ];
}

/// Blow-up upper bound from the maximal green clusters of `t0` against `t1`.
pub fn cluster_bound(t0: &Phylogeny, t1: &Phylogeny) -> slr_core::Result<usize> {
    let c = color_vertices(t0, t1, 2)?;
    let clusters = c
        .maximal_clusters()
        .into_iter()
        .map(|x| restrict(t0, c.cluster_labels(x)?))
        .collect::<slr_core::Result<Vec<_>>>()?;
    blowup_upper_bound(t0, t1, &clusters, &BTreeSet::new())
}

/// Swap distance (homogeneous, `h ≤ 3`), exact blow-up distance (`n ≤ 6`)
/// and the cluster-based blow-up upper bound, whichever apply.
pub fn run(cfg: &ExperimentConfig) -> CliResult<Vec<DistanceRow>> {
    let alt = cfg
        .tree_alt
        .as_ref()
        .ok_or_else(|| CliError::Config("distance needs a second tree".into()))?;
    let a = cfg.build_tree(&cfg.tree, 0)?;
    let b = cfg.build_tree(alt, 1)?;
    let n = a.n_leaves();
    let mut rows = vec![];
    let mut push = |measure, r: CliResult<usize>, wall| -> CliResult<()> {
        rows.push(DistanceRow {
            experiment: "distance",
            n,
            measure,
            value: r?,
            wall_time_s: wall,
            seed: cfg.seed,
            config: cfg.echo(),
        });
        Ok(())
    };
    let homogeneous = matches!((homogeneous_shape(&a), homogeneous_shape(&b)), (Ok((h, _)), Ok(_)) if h <= SWAP_EXACT_HEIGHT);
    if homogeneous {
        let (r, w) = timed(|| swap_distance_exact(&a, &b));
        push("swap_exact", r.map_err(Into::into), w)?;
    }
    if n <= BLOWUP_EXACT_LIMIT {
        let (r, w) = timed(|| blowup_distance_exact(&a, &b));
        push("blowup_exact", r.map_err(Into::into), w)?;
    }
    let (r, w) = timed(|| cluster_bound(&a, &b));
    push("blowup_upper", r.map_err(Into::into), w)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TreeSpec;

    #[test]
    fn identical_trees_are_at_distance_zero() {
        let spec = TreeSpec::Homogeneous { h: 2 };
        let cfg = ExperimentConfig {
            tree: spec.clone(),
            tree_alt: Some(spec),
            ..Default::default()
        };
        let rows = run(&cfg).unwrap();
        assert_eq!(
            rows.iter().map(|r| r.measure).collect::<Vec<_>>(),
            ["swap_exact", "blowup_exact", "blowup_upper"]
        );
        assert!(rows.iter().all(|r| r.value == 0));
    }
}
