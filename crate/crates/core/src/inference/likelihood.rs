use crate::error::{Error, Result};
use crate::model::{Alignment, Pruner, SubstitutionModel};
use crate::tree::{enumerate_topologies, Phylogeny};

/// Relative tolerance under which two log-likelihoods count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Site probabilities below this are treated as zero.
const ZERO_PROBABILITY: f64 = 1e-300;

/// Probability of one leaf pattern (states indexed by label).
pub fn site_likelihood(t: &Phylogeny, model: &SubstitutionModel, pattern: &[u8]) -> Result<f64> {
    check_pattern(t, model, pattern)?;
    let p = Pruner::new(t, model);
    let mut s = p.scratch();
    Ok(p.log_prob(pattern, &mut s).exp())
}

fn check_pattern(t: &Phylogeny, model: &SubstitutionModel, pattern: &[u8]) -> Result<()> {
    if pattern.len() != t.n_leaves() {
        return Err(Error::DimensionMismatch(format!(
            "pattern of length {} on {} leaves",
            pattern.len(),
            t.n_leaves()
        )));
    }
    if pattern.iter().any(|&s| s as usize >= model.r()) {
        return Err(Error::StateSpace("pattern state out of range".into()));
    }
    Ok(())
}

/// Negative log-likelihood `−Σ ln μ(σ^i)`; smaller is better.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegLogLik {
    pub value: f64,
    /// Some site had probability below 1e−300; `value` is then infinite.
    pub infinite: bool,
}

/// Distinct site patterns of an alignment with multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternTable {
    pub n: usize,
    pub r: usize,
    pub patterns: Vec<Vec<u8>>,
    pub counts: Vec<usize>,
}

impl PatternTable {
    pub fn new(a: &Alignment) -> Self {
        let (patterns, counts) = a.pattern_counts().into_iter().unzip();
        PatternTable {
            n: a.n(),
            r: a.r(),
            patterns,
            counts,
        }
    }
}

/// Negative log-likelihood of a compressed alignment.
pub fn neg_log_likelihood_table(
    t: &Phylogeny,
    model: &SubstitutionModel,
    table: &PatternTable,
) -> Result<NegLogLik> {
    if table.n != t.n_leaves() || table.r != model.r() {
        return Err(Error::DimensionMismatch(
            "alignment does not fit tree or model".into(),
        ));
    }
    let p = Pruner::new(t, model);
    let mut s = p.scratch();
    let mut total = 0.0;
    for (pat, &c) in table.patterns.iter().zip(&table.counts) {
        let lp = p.log_prob(pat, &mut s);
        if lp < ZERO_PROBABILITY.ln() {
            return Ok(NegLogLik {
                value: f64::INFINITY,
                infinite: true,
            });
        }
        total -= c as f64 * lp;
    }
    Ok(NegLogLik {
        value: total,
        infinite: false,
    })
}

/// Negative log-likelihood of an alignment under `t`.
pub fn log_likelihood(
    t: &Phylogeny,
    model: &SubstitutionModel,
    a: &Alignment,
) -> Result<NegLogLik> {
    neg_log_likelihood_table(t, model, &PatternTable::new(a))
}

/// Search space for [`ml_estimate`]. Bounds are in grid units.
#[derive(Debug, Clone)]
pub enum MlMode {
    /// Every topology and every weight vector on the grid (n ≤ 6).
    Exhaustive {
        f_units: u64,
        g_units: u64,
        upsilon: u64,
    },
    /// Every topology, weights by cyclic coordinate descent on the grid
    /// starting from the midpoint of `[f, g]`.
    TopologyOnly {
        f_units: u64,
        g_units: u64,
        upsilon: u64,
        max_sweeps: usize,
    },
    /// A fixed list of phylogenies.
    Candidates(Vec<Phylogeny>),
}

/// Outcome of a maximum-likelihood search.
#[derive(Debug, Clone)]
pub struct MlEstimate {
    /// Position of the winner in the canonical search order.
    pub index: usize,
    pub tree: Phylogeny,
    pub value: f64,
    /// Another candidate attained the same value within [`TIE_TOLERANCE`].
    pub tie: bool,
    pub evaluated: usize,
}

pub(crate) fn tied(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= TIE_TOLERANCE * a.abs().max(1.0)
}

struct Best {
    index: usize,
    tree: Option<Phylogeny>,
    value: f64,
    tie: bool,
    evaluated: usize,
}

impl Best {
    fn new() -> Self {
        Best {
            index: 0,
            tree: None,
            value: f64::INFINITY,
            tie: false,
            evaluated: 0,
        }
    }

    fn offer(&mut self, index: usize, tree: &Phylogeny, value: f64) {
        self.evaluated += 1;
        if self.tree.is_none() || (value < self.value && !tied(value, self.value)) {
            self.index = index;
            self.tree = Some(tree.clone());
            self.value = value;
            self.tie = false;
        } else if tied(value, self.value) {
            self.tie = true;
        }
    }

    fn finish(self) -> Result<MlEstimate> {
        let tree = self.tree.ok_or(Error::EmptyCandidates)?;
        Ok(MlEstimate {
            index: self.index,
            tree,
            value: self.value,
            tie: self.tie,
            evaluated: self.evaluated,
        })
    }
}

/// Maximum-likelihood phylogeny for an alignment. Ties go to the first
/// candidate in canonical order (enumeration order, or list order).
pub fn ml_estimate(
    a: &Alignment,
    model: &SubstitutionModel,
    mode: &MlMode,
    enumeration_limit: usize,
) -> Result<MlEstimate> {
    let table = PatternTable::new(a);
    let mut best = Best::new();
    match mode {
        MlMode::Candidates(list) => {
            for (i, t) in list.iter().enumerate() {
                best.offer(i, t, neg_log_likelihood_table(t, model, &table)?.value);
            }
        }
        MlMode::Exhaustive {
            f_units,
            g_units,
            upsilon,
        } => {
            check_bounds(*f_units, *g_units)?;
            let n = a.n();
            if n > 6 {
                return Err(Error::limit("exhaustive ML leaves", 6));
            }
            let m = 2 * n - 3;
            let values = (g_units - f_units + 1) as usize;
            let combos = (values as f64).powi(m as i32);
            if combos > 1e6 {
                return Err(Error::limit("exhaustive ML weight vectors", 1_000_000));
            }
            let topologies = enumerate_topologies(n, enumeration_limit.min(6))?;
            let mut index = 0;
            for topo in &topologies {
                let mut units = vec![*f_units; m];
                loop {
                    let t = topo.with_units(&units)?.with_upsilon(*upsilon);
                    best.offer(
                        index,
                        &t,
                        neg_log_likelihood_table(&t, model, &table)?.value,
                    );
                    index += 1;
                    let mut i = 0;
                    while i < m && units[i] == *g_units {
                        units[i] = *f_units;
                        i += 1;
                    }
                    if i == m {
                        break;
                    }
                    units[i] += 1;
                }
            }
        }
        MlMode::TopologyOnly {
            f_units,
            g_units,
            upsilon,
            max_sweeps,
        } => {
            check_bounds(*f_units, *g_units)?;
            let topologies = enumerate_topologies(a.n(), enumeration_limit)?;
            for (i, topo) in topologies.iter().enumerate() {
                let (t, v) = coordinate_descent(
                    topo,
                    model,
                    &table,
                    *f_units,
                    *g_units,
                    *upsilon,
                    *max_sweeps,
                )?;
                best.offer(i, &t, v);
            }
        }
    }
    best.finish()
}

fn check_bounds(f: u64, g: u64) -> Result<()> {
    if f > g {
        return Err(Error::param("need f ≤ g"));
    }
    Ok(())
}

fn coordinate_descent(
    topo: &Phylogeny,
    model: &SubstitutionModel,
    table: &PatternTable,
    f: u64,
    g: u64,
    upsilon: u64,
    max_sweeps: usize,
) -> Result<(Phylogeny, f64)> {
    let m = topo.edges().len();
    let mid = (f + g).div_ceil(2);
    let mut t = topo.with_uniform_units(mid, upsilon);
    let mut current = neg_log_likelihood_table(&t, model, table)?.value;
    for _ in 0..max_sweeps.max(1) {
        let mut changed = false;
        for e in 0..m {
            let keep = t.units(e);
            let mut best_u = keep;
            for u in f..=g {
                if u == keep {
                    continue;
                }
                let cand = t.with_edge_units(e, u);
                let v = neg_log_likelihood_table(&cand, model, table)?.value;
                if v < current && !tied(v, current) {
                    current = v;
                    best_u = u;
                }
            }
            if best_u != keep {
                t = t.with_edge_units(e, best_u);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok((t, current))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_markov;
    use crate::rng::stream;
    use crate::tree::{parse_newick, topology_form};

    /// Sum over all internal state assignments.
    fn brute_force(t: &Phylogeny, pattern: &[u8]) -> f64 {
        let internal: Vec<usize> = (0..t.n_vertices()).filter(|&v| !t.is_leaf(v)).collect();
        let model = SubstitutionModel::cfn();
        let mut total = 0.0;
        for mask in 0..(1usize << internal.len()) {
            let mut st = vec![0u8; t.n_vertices()];
            for (i, &v) in internal.iter().enumerate() {
                st[v] = (mask >> i & 1) as u8;
            }
            for l in 0..t.n_leaves() {
                st[t.leaf(l)] = pattern[l];
            }
            let mut p = 0.5;
            for e in t.edges() {
                let ch = model.channel(e.units as f64 / t.upsilon() as f64);
                p *= if st[e.a] == st[e.b] {
                    ch.stay()
                } else {
                    ch.delta
                };
            }
            total += p;
        }
        total
    }

    #[test]
    fn pruning_matches_brute_force() {
        let t = parse_newick("((1:0.1,2:0.3):0.2,(3:0.2,4:0.4):0.1,5:0.5);", 10).unwrap();
        for code in 0..32u8 {
            let pat: Vec<u8> = (0..5).map(|l| code >> l & 1).collect();
            let a = site_likelihood(&t, &SubstitutionModel::cfn(), &pat).unwrap();
            assert!((a - brute_force(&t, &pat)).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_candidates_error() {
        let a = Alignment::from_states(3, 2, vec![0, 0, 0]).unwrap();
        let r = ml_estimate(
            &a,
            &SubstitutionModel::cfn(),
            &MlMode::Candidates(vec![]),
            8,
        );
        assert!(matches!(r, Err(Error::EmptyCandidates)));
    }

    #[test]
    fn identical_candidates_tie_to_first() {
        let t = parse_newick("((1:0.2,2:0.2):0.2,3:0.2,4:0.2);", 10).unwrap();
        let mut rng = stream(5, &[]);
        let a = sample_markov(&t, &SubstitutionModel::cfn(), 100, &mut rng);
        let r = ml_estimate(
            &a,
            &SubstitutionModel::cfn(),
            &MlMode::Candidates(vec![t.clone(), t.clone()]),
            8,
        )
        .unwrap();
        assert_eq!(r.index, 0);
        assert!(r.tie);
    }

    #[test]
    fn exhaustive_recovers_quartet() {
        let t = parse_newick("((1:0.1,2:0.1):0.2,3:0.1,4:0.1);", 10).unwrap();
        let mut rng = stream(11, &[]);
        let a = sample_markov(&t, &SubstitutionModel::cfn(), 3000, &mut rng);
        let mode = MlMode::Exhaustive {
            f_units: 1,
            g_units: 2,
            upsilon: 10,
        };
        let r = ml_estimate(&a, &SubstitutionModel::cfn(), &mode, 8).unwrap();
        assert_eq!(topology_form(&r.tree), topology_form(&t));
        assert_eq!(r.evaluated, 3 * 32);
    }

    #[test]
    fn underflow_is_flagged() {
        let t = parse_newick("(1:0,2:0,3:0);", 10).unwrap();
        let a = Alignment::from_states(3, 2, vec![0, 1, 0]).unwrap();
        let v = log_likelihood(&t, &SubstitutionModel::cfn(), &a).unwrap();
        assert!(v.infinite);
    }
}
