use super::Phylogeny;
use crate::error::{Error, Result};

/// Leaf-to-leaf distances on the 1/Υ grid, plus graph (edge-count) distances.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TreeMetric {
    upsilon: u64,
    n: usize,
    units: Vec<u64>,
    graph: Vec<u32>,
}

impl TreeMetric {
    /// A metric given directly as a symmetric matrix of units (graph
    /// distances are left at zero).
    pub fn from_units(upsilon: u64, n: usize, units: Vec<u64>) -> Result<Self> {
        if units.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries, got {}",
                n * n,
                units.len()
            )));
        }
        for i in 0..n {
            if units[i * n + i] != 0 {
                return Err(Error::param("diagonal must be zero"));
            }
            for j in 0..i {
                if units[i * n + j] != units[j * n + i] {
                    return Err(Error::param("matrix is not symmetric"));
                }
            }
        }
        Ok(TreeMetric {
            upsilon,
            n,
            units,
            graph: vec![0; n * n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn upsilon(&self) -> u64 {
        self.upsilon
    }

    /// Distance in grid units.
    pub fn units(&self, a: usize, b: usize) -> u64 {
        self.units[a * self.n + b]
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.units(a, b) as f64 / self.upsilon as f64
    }

    /// Number of edges on the path between leaves `a` and `b`.
    pub fn graph(&self, a: usize, b: usize) -> u32 {
        self.graph[a * self.n + b]
    }

    /// The raw unit matrix, row-major.
    pub fn unit_matrix(&self) -> &[u64] {
        &self.units
    }
}

/// Computes the leaf metric of `t` with one traversal per leaf.
pub fn tree_metric(t: &Phylogeny) -> TreeMetric {
    let n = t.n_leaves();
    let mut units = vec![0; n * n];
    let mut graph = vec![0; n * n];
    for a in 0..n {
        let du = t.distances_from(t.leaf(a));
        let dg = t.graph_distances_from(t.leaf(a));
        for b in 0..n {
            units[a * n + b] = du[t.leaf(b)];
            graph[a * n + b] = dg[t.leaf(b)] as u32;
        }
    }
    TreeMetric {
        upsilon: t.upsilon(),
        n,
        units,
        graph,
    }
}

/// Checks the four-point condition on every quadruple: of the three pair
/// sums, the two largest are equal. Exact on the grid.
pub fn check_four_point(m: &TreeMetric) -> bool {
    let n = m.n();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    let mut s = [
                        m.units(a, b) + m.units(c, d),
                        m.units(a, c) + m.units(b, d),
                        m.units(a, d) + m.units(b, c),
                    ];
                    s.sort_unstable();
                    if s[1] != s[2] {
                        return false;
                    }
                }
            }
        }
    }
    // Three-point (triangle) sanity: d(a,b) ≤ d(a,c) + d(c,b).
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if m.units(a, b) > m.units(a, c) + m.units(c, b) {
                    return false;
                }
            }
        }
    }
    true
}

/// Topology induced on four points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quartet {
    /// `ab|cd` in the argument order of [`quartet_topology`].
    AbCd,
    /// `ac|bd`.
    AcBd,
    /// `ad|bc`.
    AdBc,
    /// No strictly smallest pair sum.
    Degenerate,
}

/// Quartet split from the six pairwise distances of four points, given as a
/// closure over indices `0..4`.
pub fn quartet_topology(d: impl Fn(usize, usize) -> u64) -> Quartet {
    let s = [d(0, 1) + d(2, 3), d(0, 2) + d(1, 3), d(0, 3) + d(1, 2)];
    let min = *s.iter().min().unwrap();
    if s.iter().filter(|&&x| x == min).count() > 1 {
        return Quartet::Degenerate;
    }
    match s.iter().position(|&x| x == min).unwrap() {
        0 => Quartet::AbCd,
        1 => Quartet::AcBd,
        _ => Quartet::AdBc,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_newick;

    #[test]
    fn quartet_of_caterpillar() {
        let t = parse_newick("((1:1,2:1):1,3:1,4:1);", 1).unwrap();
        let m = tree_metric(&t);
        assert_eq!(quartet_topology(|i, j| m.units(i, j)), Quartet::AbCd);
        assert_eq!(m.graph(0, 2), 3);
    }

    #[test]
    fn zero_internal_edge_is_degenerate() {
        let m = TreeMetric::from_units(1, 4, vec![0, 2, 2, 2, 2, 0, 2, 2, 2, 2, 0, 2, 2, 2, 2, 0])
            .unwrap();
        assert_eq!(quartet_topology(|i, j| m.units(i, j)), Quartet::Degenerate);
        assert!(check_four_point(&m));
    }

    #[test]
    fn violating_matrix_is_rejected() {
        // Sums 2+2, 5+5, 3+3: the two largest differ.
        let m = TreeMetric::from_units(1, 4, vec![0, 2, 5, 3, 2, 0, 3, 5, 5, 3, 0, 2, 3, 5, 2, 0])
            .unwrap();
        assert!(!check_four_point(&m));
    }
}
