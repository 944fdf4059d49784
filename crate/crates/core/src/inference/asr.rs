use crate::error::{Error, Result};
use crate::model::{spin, Pruner, Scratch, SubstitutionModel};
use crate::rng::stream;
use crate::stats::mean_se;
use crate::tree::RootedTree;
use rand::Rng;
use rayon::prelude::*;

/// Cap on leaves for exact enumeration over leaf patterns.
pub const ASR_EXACT_LIMIT: usize = 16;

/// Posterior of the root spin given the leaves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    pub plus: f64,
    pub minus: f64,
    /// +1 iff `plus > minus`; ties go to −1.
    pub mle: i8,
}

/// Root posterior under CFN. `pattern` is indexed by leaf label and must
/// cover every label of `rt`.
pub fn ancestral_posterior(rt: &RootedTree, pattern: &[u8]) -> Result<Posterior> {
    let pr = Pruner::from_rooted(rt, &SubstitutionModel::cfn());
    posterior_with(&pr, pattern)
}

fn posterior_with(pr: &Pruner, pattern: &[u8]) -> Result<Posterior> {
    let mut s = pr.scratch();
    let p = pr.root_posterior(pattern, &mut s);
    if !p[0].is_finite() {
        return Err(Error::param("pattern has probability zero"));
    }
    Ok(Posterior {
        plus: p[0],
        minus: p[1],
        mle: if p[0] > p[1] { 1 } else { -1 },
    })
}

const POSTERIOR_TIE: f64 = 1e-12;

/// Root MLE of a fixed rooted tree, reusable across patterns.
#[derive(Debug, Clone)]
pub struct RootEstimator {
    pr: Pruner,
}

impl RootEstimator {
    pub fn new(rt: &RootedTree) -> Self {
        RootEstimator {
            pr: Pruner::from_rooted(rt, &SubstitutionModel::cfn()),
        }
    }

    pub fn scratch(&self) -> Scratch {
        self.pr.scratch()
    }

    /// +1 iff the root posterior favors state 0; ties (within rounding)
    /// go to −1, so equal trees built in different orders agree.
    pub fn estimate(&self, pattern: &[u8], s: &mut Scratch) -> i8 {
        let p = self.pr.root_posterior(pattern, s);
        if p[0] - p[1] > POSTERIOR_TIE {
            1
        } else {
            -1
        }
    }

    /// `P(pattern, root = s)` for both states.
    pub fn joint(&self, pattern: &[u8], s: &mut Scratch) -> [f64; 2] {
        let j = self.pr.root_joint(pattern, s);
        [j[0], j[1]]
    }
}

fn leaf_labels(rt: &RootedTree) -> Result<(Vec<usize>, usize)> {
    let labels = rt.labels();
    if labels.len() > ASR_EXACT_LIMIT {
        return Err(Error::limit("exact reconstruction leaves", ASR_EXACT_LIMIT));
    }
    let width = labels.iter().max().map(|m| m + 1).unwrap_or(0);
    Ok((labels, width))
}

/// Calls `f(P(pattern, root=+), P(pattern, root=−))` for every leaf pattern.
fn for_each_pattern(rt: &RootedTree, mut f: impl FnMut(f64, f64)) -> Result<()> {
    let (labels, width) = leaf_labels(rt)?;
    let pr = Pruner::from_rooted(rt, &SubstitutionModel::cfn());
    let mut s = pr.scratch();
    let mut pattern = vec![0u8; width];
    for code in 0usize..(1 << labels.len()) {
        for (i, &l) in labels.iter().enumerate() {
            pattern[l] = (code >> i & 1) as u8;
        }
        let j = pr.root_joint(&pattern, &mut s);
        f(j[0], j[1]);
    }
    Ok(())
}

/// Exact probability that the root MLE equals the root spin.
pub fn reconstruction_accuracy(rt: &RootedTree) -> Result<f64> {
    let mut acc = 0.0;
    for_each_pattern(rt, |p, m| acc += if p > m { p } else { m })?;
    Ok(acc)
}

/// Exact `E|P[σ_ρ=+ | leaves] − P[σ_ρ=− | leaves]|`.
pub fn mean_posterior_gap_exact(rt: &RootedTree) -> Result<f64> {
    let mut acc = 0.0;
    for_each_pattern(rt, |p, m| acc += (p - m).abs())?;
    Ok(acc)
}

/// Draws root and leaf states of `rt`; returns the root spin.
fn sample_rooted<R: Rng>(
    rt: &RootedTree,
    channels: &[(f64, f64)],
    pattern: &mut [u8],
    states: &mut [u8],
    rng: &mut R,
) -> u8 {
    states[0] = rng.random_range(0..2);
    for v in 1..rt.nodes.len() {
        let p = states[rt.nodes[v].parent.unwrap()];
        states[v] = if rng.random::<f64>() < channels[v].1 {
            1 - p
        } else {
            p
        };
        if let Some(l) = rt.nodes[v].label {
            pattern[l] = states[v];
        }
    }
    if let Some(l) = rt.nodes[0].label {
        pattern[l] = states[0];
    }
    states[0]
}

fn mc<F>(rt: &RootedTree, trials: usize, seed: u64, f: F) -> (f64, f64)
where
    F: Fn(u8, &Posterior) -> f64 + Sync,
{
    let model = SubstitutionModel::cfn();
    let pr = Pruner::from_rooted(rt, &model);
    let channels: Vec<(f64, f64)> = rt
        .nodes
        .iter()
        .map(|n| (0.0, model.delta(n.units as f64 / rt.upsilon as f64)))
        .collect();
    let width = rt.labels().iter().max().map(|m| m + 1).unwrap_or(0);
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, &[i as u64]);
            let mut pattern = vec![0u8; width];
            let mut states = vec![0u8; rt.nodes.len()];
            let root = sample_rooted(rt, &channels, &mut pattern, &mut states, &mut rng);
            let post =
                posterior_with(&pr, &pattern).expect("sampled patterns have positive probability");
            f(root, &post)
        })
        .collect();
    mean_se(&values)
}

/// Monte Carlo reconstruction accuracy with its standard error.
pub fn reconstruction_accuracy_mc(rt: &RootedTree, trials: usize, seed: u64) -> (f64, f64) {
    mc(rt, trials, seed, |root, p| {
        if p.mle == spin(root) {
            1.0
        } else {
            0.0
        }
    })
}

/// Monte Carlo `E|P₊ − P₋|` with its standard error.
pub fn mean_posterior_gap_mc(rt: &RootedTree, trials: usize, seed: u64) -> (f64, f64) {
    mc(rt, trials, seed, |_, p| (p.plus - p.minus).abs())
}

/// Lower bound `1/(1 + Σ_e R(e) Ψ(e)²)` on the mean posterior gap, with
/// `R(e) = (1 − θ_e²) Θ_{ρ,y}^{−2}` for the lower endpoint `y` of `e`.
///
/// `flow[v]` is the flow on the edge above node `v` (entry 0 ignored). By
/// default the flow splits equally at every branching.
pub fn flow_bound(rt: &RootedTree, flow: Option<&[f64]>) -> Result<f64> {
    let n = rt.nodes.len();
    let psi: Vec<f64> = match flow {
        Some(f) => {
            if f.len() != n {
                return Err(Error::DimensionMismatch(
                    "one flow value per node expected".into(),
                ));
            }
            check_unit_flow(rt, f)?;
            f.to_vec()
        }
        None => {
            let mut p = vec![0.0; n];
            p[0] = 1.0;
            for v in 0..n {
                let k = rt.nodes[v].children.len();
                for &c in &rt.nodes[v].children {
                    p[c] = p[v] / k as f64;
                }
            }
            p
        }
    };
    let depth = rt.unit_depths();
    let mut sum = 0.0;
    for v in 1..n {
        let w = rt.nodes[v].units as f64 / rt.upsilon as f64;
        let theta = (-w).exp();
        let big = (-(depth[v] as f64) / rt.upsilon as f64).exp();
        sum += (1.0 - theta * theta) / (big * big) * psi[v] * psi[v];
    }
    Ok(1.0 / (1.0 + sum))
}

fn check_unit_flow(rt: &RootedTree, f: &[f64]) -> Result<()> {
    const TOL: f64 = 1e-9;
    if f.iter().skip(1).any(|&x| x < -TOL) {
        return Err(Error::NonUnitFlow("negative edge flow".into()));
    }
    for (v, node) in rt.nodes.iter().enumerate() {
        if node.children.is_empty() {
            continue;
        }
        let inflow = if v == 0 { 1.0 } else { f[v] };
        let out: f64 = node.children.iter().map(|&c| f[c]).sum();
        if (out - inflow).abs() > TOL {
            return Err(Error::NonUnitFlow(format!(
                "node {v} receives {inflow} and emits {out}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{parse_newick, Phylogeny};

    fn cherry(w: &str) -> RootedTree {
        let t = parse_newick(&format!("(1:{w},2:{w});"), 10).unwrap();
        RootedTree::from_phylogeny(&t, 0)
    }

    #[test]
    fn single_leaf_accuracy() {
        use crate::tree::RNode;
        let rt = RootedTree {
            upsilon: 10,
            nodes: vec![
                RNode {
                    parent: None,
                    children: vec![1],
                    units: 0,
                    label: None,
                    vertex: None,
                },
                RNode {
                    parent: Some(0),
                    children: vec![],
                    units: 3,
                    label: Some(0),
                    vertex: None,
                },
            ],
        };
        let acc = reconstruction_accuracy(&rt).unwrap();
        assert!((acc - (1.0 + (-0.3f64).exp()) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn posterior_ties_go_to_minus() {
        let rt = cherry("0.2");
        let p = ancestral_posterior(&rt, &[0, 1]).unwrap();
        assert!((p.plus - 0.5).abs() < 1e-15);
        assert_eq!(p.mle, -1);
        assert_eq!(ancestral_posterior(&rt, &[0, 0]).unwrap().mle, 1);
    }

    #[test]
    fn flow_bound_closed_form_at_height_one() {
        let g = 2f64.sqrt().ln();
        let t = Phylogeny::homogeneous(1, 1, 1).unwrap();
        let mut rt = RootedTree::from_phylogeny(&t, 0);
        // Represent g exactly enough on a fine grid.
        let upsilon = 1_000_000_000u64;
        rt.upsilon = upsilon;
        for n in rt.nodes.iter_mut().skip(1) {
            n.units = (g * upsilon as f64).round() as u64;
        }
        let b = flow_bound(&rt, None).unwrap();
        assert!((b - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn non_unit_flow_is_rejected() {
        let rt = cherry("0.2");
        assert!(matches!(
            flow_bound(&rt, Some(&[0.0, 0.7, 0.7])),
            Err(Error::NonUnitFlow(_))
        ));
        assert!(flow_bound(&rt, Some(&[0.0, 1.0, 0.0])).is_ok());
    }

    #[test]
    fn exact_gap_dominates_flow_bound() {
        for h in 1..=3 {
            let t = Phylogeny::homogeneous(h, 3, 10).unwrap();
            let rt = RootedTree::from_phylogeny(&t, 0);
            assert!(mean_posterior_gap_exact(&rt).unwrap() >= flow_bound(&rt, None).unwrap());
        }
    }

    #[test]
    fn monte_carlo_agrees_with_exact() {
        let t = Phylogeny::homogeneous(3, 2, 10).unwrap();
        let rt = RootedTree::from_phylogeny(&t, 0);
        let exact = reconstruction_accuracy(&rt).unwrap();
        let (m, se) = reconstruction_accuracy_mc(&rt, 20000, 9);
        assert!((m - exact).abs() < 4.0 * se);
    }
}
