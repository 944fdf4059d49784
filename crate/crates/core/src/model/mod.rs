//! The r-state symmetric model (CFN when r = 2): edge channels, samplers,
//! exact leaf distributions and alignment I/O.

mod alignment;
mod pruning;

pub use alignment::Alignment;
pub use pruning::{Pruner, Scratch};

use crate::error::{Error, Result};
use crate::tree::Phylogeny;
use rand::Rng;

/// Default cap on leaves for exact leaf-distribution enumeration at r = 2.
pub const EXACT_LEAF_LIMIT: usize = 16;

/// The symmetric r-state substitution model with uniform stationary law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubstitutionModel {
    r: usize,
}

impl Default for SubstitutionModel {
    fn default() -> Self {
        SubstitutionModel::cfn()
    }
}

impl SubstitutionModel {
    /// The two-state model with spins (+1, −1) for states (0, 1).
    pub fn cfn() -> Self {
        SubstitutionModel { r: 2 }
    }

    pub fn new(r: usize) -> Result<Self> {
        if !(2..=255).contains(&r) {
            return Err(Error::StateSpace(format!("r = {r}")));
        }
        Ok(SubstitutionModel { r })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Off-diagonal transition probability on an edge of weight `w`.
    pub fn delta(&self, w: f64) -> f64 {
        (1.0 - (-w).exp()) / self.r as f64
    }

    /// Rate matrix `Q`, row-major.
    pub fn rate_matrix(&self) -> Vec<f64> {
        let r = self.r;
        let mut q = vec![1.0 / r as f64; r * r];
        for i in 0..r {
            q[i * r + i] = -((r - 1) as f64) / r as f64;
        }
        q
    }

    pub fn channel(&self, w: f64) -> EdgeChannel {
        EdgeChannel {
            r: self.r,
            delta: self.delta(w),
        }
    }

    /// Transition matrix `(1 − rδ)I + δJ` of an edge of weight `w`, row-major.
    pub fn transition(&self, w: f64) -> Vec<f64> {
        self.channel(w).matrix()
    }
}

/// One edge's transition law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeChannel {
    pub r: usize,
    pub delta: f64,
}

impl EdgeChannel {
    pub fn stay(&self) -> f64 {
        1.0 - (self.r - 1) as f64 * self.delta
    }

    pub fn matrix(&self) -> Vec<f64> {
        let r = self.r;
        let mut m = vec![self.delta; r * r];
        for i in 0..r {
            m[i * r + i] = self.stay();
        }
        m
    }

    /// Draws the child state given the parent state.
    pub fn sample<R: Rng + ?Sized>(&self, parent: u8, rng: &mut R) -> u8 {
        let u: f64 = rng.random();
        if u < self.stay() {
            return parent;
        }
        let k = rng.random_range(0..self.r - 1) as u8;
        if k >= parent {
            k + 1
        } else {
            k
        }
    }
}

/// Maps CFN state 0 to spin +1 and state 1 to spin −1.
pub fn spin(state: u8) -> i8 {
    if state == 0 {
        1
    } else {
        -1
    }
}

/// Preorder traversal data used by the samplers.
struct SampleOrder {
    root: usize,
    steps: Vec<(usize, usize, usize)>,
}

fn sample_order(t: &Phylogeny) -> SampleOrder {
    let view = t.view();
    let steps = view.order.iter().skip(1).map(|&v| {
        let (p, e) = view.parent[v].unwrap();
        (v, p, e)
    });
    SampleOrder {
        root: view.root,
        steps: steps.collect(),
    }
}

/// Draws `k` i.i.d. sites from the Markov process on `t`.
pub fn sample_markov<R: Rng + ?Sized>(
    t: &Phylogeny,
    model: &SubstitutionModel,
    k: usize,
    rng: &mut R,
) -> Alignment {
    let order = sample_order(t);
    let channels: Vec<EdgeChannel> = (0..t.edges().len())
        .map(|e| model.channel(t.weight(e)))
        .collect();
    let n = t.n_leaves();
    let mut states = vec![0u8; t.n_vertices()];
    let mut out = Vec::with_capacity(k * n);
    for _ in 0..k {
        states[order.root] = rng.random_range(0..model.r()) as u8;
        for &(v, p, e) in &order.steps {
            states[v] = channels[e].sample(states[p], rng);
        }
        out.extend(t.leaves().iter().map(|&v| states[v]));
    }
    Alignment::from_states(n, model.r(), out).expect("sampled states are in range")
}

/// Draws `k` i.i.d. CFN sites by the random-cluster construction: each edge
/// is open with probability `e^{−w}` and each open cluster gets one uniform
/// spin.
pub fn sample_random_cluster<R: Rng + ?Sized>(t: &Phylogeny, k: usize, rng: &mut R) -> Alignment {
    let order = sample_order(t);
    let open: Vec<f64> = (0..t.edges().len()).map(|e| (-t.weight(e)).exp()).collect();
    let n = t.n_leaves();
    let mut states = vec![0u8; t.n_vertices()];
    let mut out = Vec::with_capacity(k * n);
    for _ in 0..k {
        states[order.root] = rng.random_range(0..2u8);
        for &(v, p, e) in &order.steps {
            states[v] = if rng.random::<f64>() < open[e] {
                states[p]
            } else {
                rng.random_range(0..2u8)
            };
        }
        out.extend(t.leaves().iter().map(|&v| states[v]));
    }
    Alignment::from_states(n, 2, out).expect("sampled states are in range")
}

/// Exact law of the leaf states, indexed by pattern code `Σ s_l r^l`.
/// Refuses trees with more than `limit` leaves at r = 2 (the cap is scaled
/// for larger r so that `r^n` stays at or below `2^limit`).
pub fn exact_leaf_distribution(
    t: &Phylogeny,
    model: &SubstitutionModel,
    limit: usize,
) -> Result<Vec<f64>> {
    let n = t.n_leaves();
    let bits = (model.r() as f64).log2() * n as f64;
    if bits > limit as f64 + 1e-9 {
        return Err(Error::limit(
            format!(
                "exact leaf distribution on {n} leaves with r = {}",
                model.r()
            ),
            limit,
        ));
    }
    let total = model.r().pow(n as u32);
    let pruner = Pruner::new(t, model);
    let mut pattern = vec![0u8; n];
    let mut out = Vec::with_capacity(total);
    let mut scratch = pruner.scratch();
    for code in 0..total {
        decode(code, model.r(), &mut pattern);
        out.push(pruner.log_prob(&pattern, &mut scratch).exp());
    }
    Ok(out)
}

/// Exact leaf law of the random-cluster construction, by enumerating every
/// subset of open edges. Limited to 24 edges.
pub fn random_cluster_exact_distribution(t: &Phylogeny) -> Result<Vec<f64>> {
    let m = t.edges().len();
    if m > 24 {
        return Err(Error::limit("random-cluster enumeration edges", 24));
    }
    let n = t.n_leaves();
    if n > EXACT_LEAF_LIMIT {
        return Err(Error::limit(
            "random-cluster enumeration leaves",
            EXACT_LEAF_LIMIT,
        ));
    }
    let p_open: Vec<f64> = (0..m).map(|e| (-t.weight(e)).exp()).collect();
    let mut out = vec![0.0; 1 << n];
    let nv = t.n_vertices();
    for mask in 0u32..(1u32 << m) {
        let mut prob = 1.0;
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in 0..m {
            if mask >> e & 1 == 1 {
                prob *= p_open[e];
                let edge = t.edge(e);
                let (a, b) = (find(&mut parent, edge.a), find(&mut parent, edge.b));
                parent[a] = b;
            } else {
                prob *= 1.0 - p_open[e];
            }
        }
        if prob == 0.0 {
            continue;
        }
        // Leaf clusters, numbered in order of first appearance.
        let mut cluster_of_leaf = vec![0usize; n];
        let mut reps: Vec<usize> = vec![];
        for l in 0..n {
            let r = find(&mut parent, t.leaf(l));
            cluster_of_leaf[l] = match reps.iter().position(|&x| x == r) {
                Some(i) => i,
                None => {
                    reps.push(r);
                    reps.len() - 1
                }
            };
        }
        let c = reps.len();
        let share = prob / (1u64 << c) as f64;
        for spins in 0usize..(1 << c) {
            let code: usize = (0..n)
                .map(|l| ((spins >> cluster_of_leaf[l]) & 1) << l)
                .sum();
            out[code] += share;
        }
    }
    Ok(out)
}

/// Writes the base-r digits of `code` into `pattern`.
pub fn decode(mut code: usize, r: usize, pattern: &mut [u8]) {
    for s in pattern.iter_mut() {
        *s = (code % r) as u8;
        code /= r;
    }
}

/// Base-r code of a leaf pattern.
pub fn encode(pattern: &[u8], r: usize) -> usize {
    pattern.iter().rev().fold(0, |acc, &s| acc * r + s as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::tree::parse_newick;

    #[test]
    fn transition_rows_sum_to_one() {
        for r in [2, 3, 4] {
            let m = SubstitutionModel::new(r).unwrap();
            let p = m.transition(0.37);
            for i in 0..r {
                let s: f64 = p[i * r..(i + 1) * r].iter().sum();
                assert!((s - 1.0).abs() < 1e-15);
            }
            let q = m.rate_matrix();
            for i in 0..r {
                assert!(q[i * r..(i + 1) * r].iter().sum::<f64>().abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_weight_is_identity() {
        let m = SubstitutionModel::cfn();
        assert_eq!(m.delta(0.0), 0.0);
        assert_eq!(m.transition(0.0), vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn same_state_probability_matches_closed_form() {
        let t = parse_newick("(1:0.3,2:0.4);", 10).unwrap();
        let p = exact_leaf_distribution(&t, &SubstitutionModel::cfn(), 16).unwrap();
        let same = p[0] + p[3];
        assert!((same - (1.0 + (-0.7f64).exp()) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn infinite_weights_decorrelate() {
        let t = parse_newick("(1:1000,2:1000,3:1000);", 1).unwrap();
        let a = random_cluster_exact_distribution(&t).unwrap();
        for p in a {
            assert!((p - 0.125).abs() < 1e-12);
        }
    }

    #[test]
    fn refuses_large_enumeration() {
        let t = crate::tree::Phylogeny::homogeneous(5, 1, 10).unwrap();
        assert!(matches!(
            exact_leaf_distribution(&t, &SubstitutionModel::cfn(), 16),
            Err(Error::ScaleLimit { .. })
        ));
    }

    #[test]
    fn samplers_shapes() {
        let t = crate::tree::Phylogeny::homogeneous(3, 2, 10).unwrap();
        let mut rng = stream(3, &[]);
        let a = sample_markov(&t, &SubstitutionModel::new(4).unwrap(), 50, &mut rng);
        assert_eq!((a.k(), a.n(), a.r()), (50, 8, 4));
        let b = sample_random_cluster(&t, 50, &mut rng);
        assert_eq!((b.k(), b.n(), b.r()), (50, 8, 2));
    }
}
