use super::SubstitutionModel;
use crate::tree::{Phylogeny, RootedTree};

const RESCALE_BELOW: f64 = 1e-100;

/// Bottom-up likelihood evaluation on a fixed rooted tree.
#[derive(Debug, Clone)]
pub struct Pruner {
    r: usize,
    /// Node ids, children before parents; the root is last.
    post: Vec<usize>,
    children: Vec<Vec<usize>>,
    label: Vec<Option<usize>>,
    /// `(stay − δ, δ)` of the edge above each node.
    coef: Vec<(f64, f64)>,
}

/// Reusable buffers for [`Pruner`].
#[derive(Debug, Clone)]
pub struct Scratch {
    partial: Vec<f64>,
}

impl Pruner {
    /// Pruner for `t` rooted at [`Phylogeny::default_root`]. The leaf law
    /// does not depend on the root choice.
    pub fn new(t: &Phylogeny, model: &SubstitutionModel) -> Self {
        Self::from_rooted(&RootedTree::from_phylogeny(t, t.default_root()), model)
    }

    pub fn from_rooted(rt: &RootedTree, model: &SubstitutionModel) -> Self {
        let r = model.r();
        let n = rt.nodes.len();
        let mut post: Vec<usize> = (0..n).collect();
        post.reverse();
        let coef = rt
            .nodes
            .iter()
            .map(|node| {
                let ch = model.channel(node.units as f64 / rt.upsilon as f64);
                (ch.stay() - ch.delta, ch.delta)
            })
            .collect();
        Pruner {
            r,
            post,
            children: rt.nodes.iter().map(|n| n.children.clone()).collect(),
            label: rt.nodes.iter().map(|n| n.label).collect(),
            coef,
        }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn scratch(&self) -> Scratch {
        Scratch {
            partial: vec![0.0; self.children.len() * self.r],
        }
    }

    /// Fills conditional partials; returns the accumulated log scale.
    fn fill(&self, pattern: &[u8], s: &mut Scratch) -> f64 {
        let r = self.r;
        let mut log_scale = 0.0;
        let mut msg = vec![0.0; r];
        for &v in &self.post {
            let base = v * r;
            if let (Some(l), true) = (self.label[v], self.children[v].is_empty()) {
                s.partial[base..base + r].fill(0.0);
                s.partial[base + pattern[l] as usize] = 1.0;
                continue;
            }
            s.partial[base..base + r].fill(1.0);
            if let Some(l) = self.label[v] {
                for x in 0..r {
                    if x != pattern[l] as usize {
                        s.partial[base + x] = 0.0;
                    }
                }
            }
            for &c in &self.children[v] {
                let cb = c * r;
                let (a, d) = self.coef[c];
                let total: f64 = s.partial[cb..cb + r].iter().sum();
                for x in 0..r {
                    msg[x] = a * s.partial[cb + x] + d * total;
                }
                for x in 0..r {
                    s.partial[base + x] *= msg[x];
                }
            }
            let max = s.partial[base..base + r]
                .iter()
                .cloned()
                .fold(0.0, f64::max);
            if max > 0.0 && max < RESCALE_BELOW {
                for x in 0..r {
                    s.partial[base + x] /= max;
                }
                log_scale += max.ln();
            }
        }
        log_scale
    }

    /// `ln P(pattern)`, with `pattern` indexed by leaf label.
    pub fn log_prob(&self, pattern: &[u8], s: &mut Scratch) -> f64 {
        let log_scale = self.fill(pattern, s);
        let root = *self.post.last().unwrap();
        let sum: f64 = s.partial[root * self.r..(root + 1) * self.r].iter().sum();
        (sum / self.r as f64).ln() + log_scale
    }

    /// Joint probabilities `P(pattern, root = s)` for every state `s`.
    pub fn root_joint(&self, pattern: &[u8], s: &mut Scratch) -> Vec<f64> {
        let log_scale = self.fill(pattern, s);
        let root = *self.post.last().unwrap();
        let f = log_scale.exp() / self.r as f64;
        s.partial[root * self.r..(root + 1) * self.r]
            .iter()
            .map(|x| x * f)
            .collect()
    }

    /// Posterior law of the root state given the pattern.
    pub fn root_posterior(&self, pattern: &[u8], s: &mut Scratch) -> Vec<f64> {
        self.fill(pattern, s);
        let root = *self.post.last().unwrap();
        let p = &s.partial[root * self.r..(root + 1) * self.r];
        let sum: f64 = p.iter().sum();
        p.iter().map(|x| x / sum).collect()
    }
}
