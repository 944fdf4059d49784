use super::likelihood::{tied, PatternTable};
use crate::distance::{homogeneous_shape, swap_neighbors};
use crate::error::{Error, Result};
use crate::model::SubstitutionModel;
use crate::tree::{Label, Phylogeny};

/// Scores a homogeneous tree and all of its single-swap neighbors on the
/// same data under CFN. A swap only changes the partials on the two paths
/// up to the lowest common ancestor, so each neighbor costs `O(h)` per
/// pattern instead of `O(n)`.
#[derive(Debug, Clone)]
pub struct SwapScorer {
    h: usize,
    /// Label of each leaf position, left to right.
    leaf_label: Vec<Label>,
    stay: f64,
    delta: f64,
    /// Swaps as heap positions (children of `i` are `2i+1`, `2i+2`).
    moves: Vec<(usize, usize)>,
    neighbors: Vec<Phylogeny>,
}

/// Negative log-likelihoods of the base tree and of every neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapScores {
    pub base: f64,
    pub neighbors: Vec<f64>,
}

const HEIGHT_LIMIT: usize = 6;
const ZERO_PROBABILITY: f64 = 1e-300;

impl SwapScorer {
    pub fn new(t0: &Phylogeny) -> Result<Self> {
        let (h, g) = homogeneous_shape(t0)?;
        if h > HEIGHT_LIMIT {
            return Err(Error::limit("swap scorer height", HEIGHT_LIMIT));
        }
        let root = t0.root().unwrap();
        let view = t0.rooted_view(root);
        let size = (1usize << (h + 1)) - 1;
        let mut vertex = vec![root; size];
        let mut heap_of = vec![usize::MAX; t0.n_vertices()];
        heap_of[root] = 0;
        for i in 0..size {
            let v = vertex[i];
            for (j, &c) in view.children[v].iter().enumerate() {
                vertex[2 * i + 1 + j] = c;
                heap_of[c] = 2 * i + 1 + j;
            }
        }
        let first = (1 << h) - 1;
        let leaf_label = (first..size)
            .map(|i| t0.label(vertex[i]).expect("deepest level holds the leaves"))
            .collect();
        let mut moves = vec![];
        let mut neighbors = vec![];
        for nb in swap_neighbors(t0)? {
            let (a, b) = (heap_of[nb.u], heap_of[nb.v]);
            moves.push((a.min(b), a.max(b)));
            neighbors.push(nb.tree);
        }
        let ch = SubstitutionModel::cfn().channel(g as f64 / t0.upsilon() as f64);
        Ok(SwapScorer {
            h,
            leaf_label,
            stay: ch.stay(),
            delta: ch.delta,
            moves,
            neighbors,
        })
    }

    /// The distinct single-swap neighbors, in scoring order.
    pub fn neighbors(&self) -> &[Phylogeny] {
        &self.neighbors
    }

    #[inline]
    fn msg(&self, x: [f64; 2]) -> [f64; 2] {
        [
            self.stay * x[0] + self.delta * x[1],
            self.delta * x[0] + self.stay * x[1],
        ]
    }

    #[inline]
    fn join(&self, a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
        let (ma, mb) = (self.msg(a), self.msg(b));
        [ma[0] * mb[0], ma[1] * mb[1]]
    }

    /// Inside partials (`up`) and outside messages (`out`) per heap node for
    /// one pattern.
    fn partials(&self, pattern: &[u8], up: &mut [[f64; 2]], out: &mut [[f64; 2]]) {
        let size = up.len();
        let first = (1 << self.h) - 1;
        for (p, &l) in self.leaf_label.iter().enumerate() {
            up[first + p] = if pattern[l] == 0 {
                [1.0, 0.0]
            } else {
                [0.0, 1.0]
            };
        }
        for i in (0..first).rev() {
            up[i] = self.join(up[2 * i + 1], up[2 * i + 2]);
        }
        out[0] = [0.5, 0.5];
        for c in 1..size {
            let p = (c - 1) / 2;
            let sib = if c % 2 == 1 { c + 1 } else { c - 1 };
            let ms = self.msg(up[sib]);
            out[c] = self.msg([out[p][0] * ms[0], out[p][1] * ms[1]]);
        }
    }

    /// Probability of the pattern after swapping heap nodes `u` and `v`.
    fn swapped(&self, u: usize, v: usize, up: &[[f64; 2]], out: &[[f64; 2]]) -> f64 {
        // Climb both sides in lockstep until the children of the LCA.
        let (mut a, mut b) = (u, v);
        let (mut pa, mut pb) = (up[v], up[u]);
        while (a - 1) / 2 != (b - 1) / 2 {
            let sa = if a % 2 == 1 { a + 1 } else { a - 1 };
            let sb = if b % 2 == 1 { b + 1 } else { b - 1 };
            pa = self.join(pa, up[sa]);
            pb = self.join(pb, up[sb]);
            a = (a - 1) / 2;
            b = (b - 1) / 2;
        }
        let w = (a - 1) / 2;
        let top = self.join(pa, pb);
        out[w][0] * top[0] + out[w][1] * top[1]
    }

    fn check(&self, table: &PatternTable) -> Result<()> {
        if table.n != self.leaf_label.len() || table.r != 2 {
            return Err(Error::DimensionMismatch(
                "alignment does not fit the tree".into(),
            ));
        }
        Ok(())
    }

    /// Scores the base tree and every neighbor.
    pub fn score(&self, table: &PatternTable) -> Result<SwapScores> {
        self.check(table)?;
        let size = (1 << (self.h + 1)) - 1;
        let mut up = vec![[0.0; 2]; size];
        let mut out = vec![[0.0; 2]; size];
        let mut base = 0.0;
        let mut nb = vec![0.0; self.moves.len()];
        for (pat, &c) in table.patterns.iter().zip(&table.counts) {
            self.partials(pat, &mut up, &mut out);
            base -= c as f64 * safe_ln(0.5 * (up[0][0] + up[0][1]));
            for (s, &(u, v)) in nb.iter_mut().zip(&self.moves) {
                *s -= c as f64 * safe_ln(self.swapped(u, v, &up, &out));
            }
        }
        Ok(SwapScores {
            base,
            neighbors: nb,
        })
    }

    /// Whether the base tree beats every neighbor strictly (ties lose).
    /// Stops at the first neighbor that matches or beats it.
    pub fn base_is_unique_best(&self, table: &PatternTable) -> Result<bool> {
        self.check(table)?;
        let size = (1 << (self.h + 1)) - 1;
        let m = table.patterns.len();
        let mut ups = vec![[0.0; 2]; size * m];
        let mut outs = vec![[0.0; 2]; size * m];
        let mut base = 0.0;
        for (j, (pat, &c)) in table.patterns.iter().zip(&table.counts).enumerate() {
            let (up, out) = (
                &mut ups[j * size..(j + 1) * size],
                &mut outs[j * size..(j + 1) * size],
            );
            self.partials(pat, up, out);
            base -= c as f64 * safe_ln(0.5 * (up[0][0] + up[0][1]));
        }
        for &(u, v) in &self.moves {
            let mut s = 0.0;
            for (j, &c) in table.counts.iter().enumerate() {
                let (up, out) = (
                    &ups[j * size..(j + 1) * size],
                    &outs[j * size..(j + 1) * size],
                );
                s -= c as f64 * safe_ln(self.swapped(u, v, up, out));
            }
            if s <= base || tied(s, base) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn safe_ln(p: f64) -> f64 {
    if p < ZERO_PROBABILITY {
        f64::NEG_INFINITY
    } else {
        p.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::neg_log_likelihood_table;
    use crate::model::sample_markov;
    use crate::rng::stream;

    #[test]
    fn incremental_scores_match_full_pruning() {
        let t = Phylogeny::homogeneous_labeled(3, 3, 10, &[3, 0, 6, 1, 7, 2, 5, 4]).unwrap();
        let scorer = SwapScorer::new(&t).unwrap();
        let a = sample_markov(&t, &SubstitutionModel::cfn(), 200, &mut stream(2, &[]));
        let table = PatternTable::new(&a);
        let s = scorer.score(&table).unwrap();
        let m = SubstitutionModel::cfn();
        assert!((s.base - neg_log_likelihood_table(&t, &m, &table).unwrap().value).abs() < 1e-9);
        assert_eq!(s.neighbors.len(), scorer.neighbors().len());
        for (x, nb) in s.neighbors.iter().zip(scorer.neighbors()) {
            let full = neg_log_likelihood_table(nb, &m, &table).unwrap().value;
            assert!((x - full).abs() < 1e-9 * full.abs());
        }
    }

    #[test]
    fn unique_best_agrees_with_scores() {
        let t = Phylogeny::homogeneous(3, 2, 10).unwrap();
        let scorer = SwapScorer::new(&t).unwrap();
        for (seed, k) in [(1, 5), (2, 50), (3, 500)] {
            let a = sample_markov(&t, &SubstitutionModel::cfn(), k, &mut stream(seed, &[]));
            let table = PatternTable::new(&a);
            let s = scorer.score(&table).unwrap();
            let expected = s.neighbors.iter().all(|&x| x > s.base && !tied(x, s.base));
            assert_eq!(scorer.base_is_unique_best(&table).unwrap(), expected);
        }
    }
}
