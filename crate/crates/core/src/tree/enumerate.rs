use super::{Edge, Phylogeny};
use crate::error::{Error, Result};
use rand::Rng;

/// Default cap on the number of leaves for exhaustive topology enumeration.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 8;

/// Unrooted binary tree under construction: leaf `i` is vertex `i`.
#[derive(Clone)]
struct Builder {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl Builder {
    /// Three leaves joined at one internal vertex, numbered after the `n` leaves.
    fn star(n: usize) -> Self {
        Builder {
            n_vertices: n + 1,
            edges: vec![(n, 0), (n, 1), (n, 2)],
        }
    }

    /// Subdivides edge `e` and hangs `leaf` from the new vertex.
    fn insert(&self, e: usize, leaf: usize) -> Self {
        let mut b = self.clone();
        let m = b.n_vertices;
        b.n_vertices += 1;
        let (x, y) = b.edges[e];
        b.edges[e] = (x, m);
        b.edges.push((m, y));
        b.edges.push((m, leaf));
        b
    }

    fn finish(&self, n: usize, units: &[u64], upsilon: u64) -> Phylogeny {
        let edges = self
            .edges
            .iter()
            .zip(units)
            .map(|(&(a, b), &u)| Edge { a, b, units: u })
            .collect();
        Phylogeny::new(self.n_vertices, edges, (0..n).collect(), upsilon, None)
            .expect("stepwise addition yields a phylogeny")
    }
}

/// All `(2n−5)!!` unrooted binary topologies on `n` labelled leaves, with
/// every edge weight 1 on the unit grid. Refuses `n > limit`.
pub fn enumerate_topologies(n: usize, limit: usize) -> Result<Vec<Phylogeny>> {
    if n < 3 {
        return Err(Error::param("topology enumeration needs at least 3 leaves"));
    }
    if n > limit {
        return Err(Error::limit(
            format!("enumeration of {n}-leaf topologies"),
            limit,
        ));
    }
    let mut level = vec![Builder::star(n)];
    for leaf in 3..n {
        let mut next = Vec::with_capacity(level.len() * (2 * leaf - 3));
        for b in &level {
            for e in 0..b.edges.len() {
                next.push(b.insert(e, leaf));
            }
        }
        level = next;
    }
    let units = vec![1; 2 * n - 3];
    Ok(level.iter().map(|b| b.finish(n, &units, 1)).collect())
}

/// A uniformly random binary topology with weights drawn uniformly from
/// `[f_units, g_units]`.
pub fn random_regular<R: Rng + ?Sized>(
    n: usize,
    f_units: u64,
    g_units: u64,
    upsilon: u64,
    rng: &mut R,
) -> Result<Phylogeny> {
    if n < 3 {
        return Err(Error::param("random phylogenies need at least 3 leaves"));
    }
    if f_units > g_units || upsilon == 0 {
        return Err(Error::param("need 0 < Υ and f ≤ g"));
    }
    let mut b = Builder::star(n);
    for leaf in 3..n {
        let e = rng.random_range(0..b.edges.len());
        b = b.insert(e, leaf);
    }
    let units: Vec<u64> = (0..b.edges.len())
        .map(|_| rng.random_range(f_units..=g_units))
        .collect();
    Ok(b.finish(n, &units, upsilon))
}

fn form(t: &Phylogeny, weighted: bool) -> String {
    let start = t.leaf(0);
    if t.n_vertices() == 1 {
        return "1".into();
    }
    let view = t.rooted_view(start);
    fn rec(
        t: &Phylogeny,
        view: &super::RootedView,
        mut v: usize,
        mut acc: u64,
        weighted: bool,
        out: &mut String,
    ) {
        // Contract chains of degree-2 vertices.
        while view.children[v].len() == 1 {
            v = view.children[v][0];
            acc += t.units(view.parent[v].unwrap().1);
        }
        if view.children[v].is_empty() {
            out.push_str(&(t.label(v).unwrap() + 1).to_string());
        } else {
            out.push('(');
            for (i, &c) in view.children[v].iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                rec(
                    t,
                    view,
                    c,
                    t.units(view.parent[c].unwrap().1),
                    weighted,
                    out,
                );
            }
            out.push(')');
        }
        if weighted {
            out.push_str(&format!(":{acc}"));
        }
    }
    let mut out = String::from("1");
    let c = view.children[start][0];
    out.push('|');
    rec(
        t,
        &view,
        c,
        t.units(view.parent[c].unwrap().1),
        weighted,
        &mut out,
    );
    out
}

/// Canonical string for a phylogeny up to metric equivalence: rooted at leaf
/// 1, children ordered by smallest label, degree-2 vertices contracted,
/// weights in grid units.
pub fn canonical_form(t: &Phylogeny) -> String {
    form(t, true)
}

/// Canonical string for the unweighted topology.
pub fn topology_form(t: &Phylogeny) -> String {
    form(t, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use std::collections::HashSet;

    fn double_factorial(mut k: usize) -> usize {
        let mut p = 1;
        while k > 1 {
            p *= k;
            k -= 2;
        }
        p
    }

    #[test]
    fn counts_and_distinctness() {
        for n in 3..=7 {
            let ts = enumerate_topologies(n, 8).unwrap();
            assert_eq!(ts.len(), double_factorial(2 * n - 5));
            let forms: HashSet<String> = ts.iter().map(topology_form).collect();
            assert_eq!(forms.len(), ts.len());
        }
    }

    #[test]
    fn refuses_above_limit() {
        assert!(matches!(
            enumerate_topologies(9, 8),
            Err(Error::ScaleLimit { .. })
        ));
    }

    #[test]
    fn degree_two_root_contracts() {
        let rooted = super::super::parse_newick("((1:1,2:1):1,(3:1,4:1):2);", 1).unwrap();
        let unrooted = super::super::parse_newick("((1:1,2:1):3,3:1,4:1);", 1).unwrap();
        assert_eq!(canonical_form(&rooted), canonical_form(&unrooted));
        assert_eq!(topology_form(&rooted), topology_form(&unrooted));
    }

    #[test]
    fn random_regular_respects_bounds() {
        let mut rng = stream(1, &[]);
        let t = random_regular(9, 2, 5, 10, &mut rng).unwrap();
        assert_eq!(t.n_leaves(), 9);
        assert!(t.check_regular(2, 5).is_ok());
    }
}
