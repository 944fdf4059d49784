use crate::error::{Error, Result};
use crate::tree::{correspond, enumerate_topologies, Edge, Phylogeny, Point, RestrictedSubtree};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Largest leaf count for the exact blow-up search.
pub const BLOWUP_EXACT_LIMIT: usize = 6;

/// Removes `removed` (edge ids) and adds `added` edges `(a, b, units)`.
/// Endpoints of added edges refer to vertices of the original tree or,
/// when at least `n_vertices`, to new vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlowupMove {
    pub removed: Vec<usize>,
    pub added: Vec<(usize, usize, u64)>,
}

/// Applies a blow-up. Non-leaf vertices left without edges are dropped and
/// the result must be a phylogeny on the same leaves.
pub fn blowup_apply(t: &Phylogeny, mv: &BlowupMove) -> Result<Phylogeny> {
    if mv.removed.len() != mv.added.len() {
        return Err(Error::InvalidMove(
            "a blow-up removes and adds the same number of edges".into(),
        ));
    }
    let m = t.edges().len();
    let removed: BTreeSet<usize> = mv.removed.iter().copied().collect();
    if removed.len() != mv.removed.len() || removed.iter().any(|&e| e >= m) {
        return Err(Error::InvalidMove(
            "removed edges must be distinct edges of the tree".into(),
        ));
    }
    let mut edges: Vec<(usize, usize, u64)> = (0..m)
        .filter(|e| !removed.contains(e))
        .map(|e| (t.edge(e).a, t.edge(e).b, t.units(e)))
        .collect();
    edges.extend(mv.added.iter().copied());
    // Compact vertex ids: leaves first in label order, then by first use.
    let mut id: BTreeMap<usize, usize> = BTreeMap::new();
    for l in 0..t.n_leaves() {
        id.insert(t.leaf(l), l);
    }
    let mut next = t.n_leaves();
    for &(a, b, _) in &edges {
        for v in [a, b] {
            if let std::collections::btree_map::Entry::Vacant(e) = id.entry(v) {
                e.insert(next);
                next += 1;
            }
        }
    }
    let new_edges: Vec<Edge> = edges
        .iter()
        .map(|&(a, b, units)| Edge {
            a: id[&a],
            b: id[&b],
            units,
        })
        .collect();
    let root = t
        .root()
        .and_then(|r| id.get(&r).copied())
        .filter(|&r| new_edges.iter().filter(|e| e.a == r || e.b == r).count() == 2);
    Phylogeny::new(
        next,
        new_edges,
        (0..t.n_leaves()).collect(),
        t.upsilon(),
        root,
    )
}

fn check_comparable(a: &Phylogeny, b: &Phylogeny) -> Result<()> {
    if a.n_leaves() != b.n_leaves() {
        return Err(Error::LeafSetMismatch(format!(
            "{} vs {} leaves",
            a.n_leaves(),
            b.n_leaves()
        )));
    }
    if a.edges().len() != b.edges().len() {
        return Err(Error::param("trees have different edge counts"));
    }
    if a.upsilon() != b.upsilon() {
        return Err(Error::param("trees use different grids"));
    }
    Ok(())
}

/// Whether the forest of `a` keeping the edges in `keep` maps injectively
/// into `b`, preserving leaf labels and edge weights.
fn embeds(a: &Phylogeny, keep: &[bool], b: &Phylogeny) -> bool {
    let nv = a.n_vertices();
    let mut in_forest = vec![false; nv];
    for &v in a.leaves() {
        in_forest[v] = true;
    }
    for (e, edge) in a.edges().iter().enumerate() {
        if keep[e] {
            in_forest[edge.a] = true;
            in_forest[edge.b] = true;
        }
    }
    // Visit order: components seeded from leaves first, then the rest.
    let mut order: Vec<(usize, Option<(usize, u64)>)> = vec![];
    let mut seen = vec![false; nv];
    let seeds: Vec<usize> = a
        .leaves()
        .iter()
        .copied()
        .chain((0..nv).filter(|&v| !a.is_leaf(v)))
        .collect();
    for s in seeds {
        if seen[s] || !in_forest[s] {
            continue;
        }
        seen[s] = true;
        order.push((s, None));
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &(w, e) in a.neighbors(v) {
                if keep[e] && !seen[w] {
                    seen[w] = true;
                    order.push((w, Some((v, a.units(e)))));
                    queue.push_back(w);
                }
            }
        }
    }
    let mut map = vec![usize::MAX; nv];
    let mut used = vec![false; b.n_vertices()];
    fn consistent(
        a: &Phylogeny,
        keep: &[bool],
        b: &Phylogeny,
        map: &[usize],
        v: usize,
        x: usize,
    ) -> bool {
        a.neighbors(v).iter().all(|&(w, e)| {
            !keep[e]
                || map[w] == usize::MAX
                || b.edge_between(x, map[w])
                    .is_some_and(|f| b.units(f) == a.units(e))
        })
    }
    fn rec(
        a: &Phylogeny,
        keep: &[bool],
        b: &Phylogeny,
        order: &[(usize, Option<(usize, u64)>)],
        i: usize,
        map: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if i == order.len() {
            return true;
        }
        let (v, parent) = order[i];
        let candidates: Vec<usize> = if let Some(l) = a.label(v) {
            vec![b.leaf(l)]
        } else if let Some((p, units)) = parent {
            b.neighbors(map[p])
                .iter()
                .filter(|&&(_, f)| b.units(f) == units)
                .map(|&(x, _)| x)
                .filter(|&x| !b.is_leaf(x))
                .collect()
        } else {
            (0..b.n_vertices()).filter(|&x| !b.is_leaf(x)).collect()
        };
        for x in candidates {
            if used[x] || !consistent(a, keep, b, map, v, x) {
                continue;
            }
            map[v] = x;
            used[x] = true;
            if rec(a, keep, b, order, i + 1, map, used) {
                return true;
            }
            map[v] = usize::MAX;
            used[x] = false;
        }
        false
    }
    rec(a, keep, b, &order, 0, &mut map, &mut used)
}

/// Whether some blow-up removing at most `delta` edges turns `a` into `b`.
fn within(a: &Phylogeny, b: &Phylogeny, delta: usize) -> bool {
    let m = a.edges().len();
    for size in 0..=delta.min(m) {
        let mut found = false;
        for_each_subset(m, size, &mut |removed| {
            if !found {
                let mut keep = vec![true; m];
                for &e in removed {
                    keep[e] = false;
                }
                found = embeds(a, &keep, b);
            }
        });
        if found {
            return true;
        }
    }
    false
}

fn for_each_subset(m: usize, size: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(
        m: usize,
        size: usize,
        start: usize,
        cur: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]),
    ) {
        if cur.len() == size {
            f(cur);
            return;
        }
        for e in start..m {
            if m - e < size - cur.len() {
                break;
            }
            cur.push(e);
            rec(m, size, e + 1, cur, f);
            cur.pop();
        }
    }
    rec(m, size, 0, &mut Vec::with_capacity(size), f);
}

/// Weight- and label-preserving isomorphism.
pub fn is_isomorphic(a: &Phylogeny, b: &Phylogeny) -> bool {
    check_comparable(a, b).is_ok() && embeds(a, &vec![true; a.edges().len()], b)
}

/// Exact blow-up distance by iterative deepening over the number of
/// removed edges (`n ≤ 6`).
pub fn blowup_distance_exact(a: &Phylogeny, b: &Phylogeny) -> Result<usize> {
    check_comparable(a, b)?;
    if a.n_leaves() > BLOWUP_EXACT_LIMIT {
        return Err(Error::limit(
            "exact blow-up distance leaves",
            BLOWUP_EXACT_LIMIT,
        ));
    }
    let m = a.edges().len();
    for delta in 0..=m {
        if within(a, b, delta) {
            return Ok(delta);
        }
    }
    unreachable!("removing every edge always embeds")
}

/// Number of phylogenies with weights in `[f, g]` (units) within blow-up
/// distance `delta` of `t`, counting `t` itself. Limited to `n ≤ 5` and
/// `delta ≤ 2`.
pub fn blowup_neighborhood_count(
    t: &Phylogeny,
    delta: usize,
    f_units: u64,
    g_units: u64,
) -> Result<usize> {
    let n = t.n_leaves();
    if n > 5 || delta > 2 {
        return Err(Error::limit(
            "blow-up neighborhood enumeration (n ≤ 5, Δ ≤ 2)",
            5,
        ));
    }
    if f_units == 0 || f_units > g_units {
        return Err(Error::param("need 0 < f ≤ g"));
    }
    let m = 2 * n - 3;
    if t.edges().len() != m {
        return Err(Error::param(
            "neighborhoods are enumerated among unrooted phylogenies",
        ));
    }
    let values = g_units - f_units + 1;
    let mut count = 0;
    for topo in enumerate_topologies(n, 5)? {
        let mut units = vec![f_units; m];
        for _ in 0..values.pow(m as u32) {
            let cand = topo.with_units(&units)?.with_upsilon(t.upsilon());
            if within(t, &cand, delta) {
                count += 1;
            }
            for u in units.iter_mut() {
                if *u < g_units {
                    *u += 1;
                    break;
                }
                *u = f_units;
            }
        }
    }
    Ok(count)
}

/// Upper bound on the blow-up distance from a set of leaf-spanned
/// subtrees of `t0` whose metrics match `t1`. Keeps the subtree edges
/// outside `exclude`, maps their vertices to `t1` through the matching, and
/// drops edges until the map is a weight-preserving injection. Every edge
/// not kept counts toward the bound, so the result is always attainable.
pub fn blowup_upper_bound(
    t0: &Phylogeny,
    t1: &Phylogeny,
    clusters: &[RestrictedSubtree],
    exclude: &BTreeSet<usize>,
) -> Result<usize> {
    check_comparable(t0, t1)?;
    let m = t0.edges().len();
    let mut owner = vec![usize::MAX; m];
    let mut shared = vec![false; m];
    for (c, y) in clusters.iter().enumerate() {
        for &e in &y.edges {
            if owner[e] != usize::MAX && owner[e] != c {
                // Claimed by two clusters whose maps may disagree.
                shared[e] = true;
            }
            owner[e] = c;
        }
    }
    let mut keep: Vec<bool> = (0..m)
        .map(|e| owner[e] != usize::MAX && !shared[e] && !exclude.contains(&e))
        .collect();
    // Natural map through each cluster's matching.
    let mut image: BTreeMap<usize, Option<usize>> = BTreeMap::new();
    for (c, y) in clusters.iter().enumerate() {
        for &v in &y.vertices {
            let touched = t0
                .neighbors(v)
                .iter()
                .any(|&(_, e)| keep[e] && owner[e] == c);
            if !touched {
                continue;
            }
            let p = correspond(t0, y, t1, v).and_then(|p| match p {
                Point::Vertex(x) => Some(x),
                Point::Interior { .. } => None,
            });
            let entry = image.entry(v).or_insert(p);
            if *entry != p {
                *entry = None;
            }
        }
    }
    for &v in t0.leaves() {
        image.insert(v, Some(t1.leaf(t0.label(v).unwrap())));
    }
    loop {
        let mut drop = BTreeSet::new();
        let mut claimed: BTreeMap<usize, usize> = BTreeMap::new();
        for e in 0..m {
            if !keep[e] {
                continue;
            }
            let edge = t0.edge(e);
            let (ia, ib) = (
                image.get(&edge.a).copied().flatten(),
                image.get(&edge.b).copied().flatten(),
            );
            match (ia, ib) {
                (Some(x), Some(y))
                    if t1
                        .edge_between(x, y)
                        .is_some_and(|f| t1.units(f) == edge.units) => {}
                _ => {
                    drop.insert(e);
                }
            }
        }
        for (&v, &x) in &image {
            let in_forest = t0.is_leaf(v)
                || t0
                    .neighbors(v)
                    .iter()
                    .any(|&(_, e)| keep[e] && !drop.contains(&e));
            if let (true, Some(x)) = (in_forest, x) {
                if let Some(&w) = claimed.get(&x) {
                    for u in [v, w] {
                        drop.extend(t0.neighbors(u).iter().map(|&(_, e)| e).filter(|&e| keep[e]));
                    }
                } else {
                    claimed.insert(x, v);
                }
            }
        }
        if drop.is_empty() {
            break;
        }
        for e in drop {
            keep[e] = false;
        }
    }
    debug_assert!(embeds(t0, &keep, t1));
    Ok(keep.iter().filter(|&&k| !k).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::tree::{parse_newick, random_regular, restrict};

    #[test]
    fn isomorphic_trees_are_at_distance_zero() {
        let a = parse_newick("((1:0.1,2:0.2):0.3,3:0.1,4:0.2);", 10).unwrap();
        let b = parse_newick("(3:0.1,4:0.2,(2:0.2,1:0.1):0.3);", 10).unwrap();
        assert!(is_isomorphic(&a, &b));
        assert_eq!(blowup_distance_exact(&a, &b).unwrap(), 0);
    }

    #[test]
    fn one_weight_change_is_distance_one() {
        let a = parse_newick("((1:0.1,2:0.2):0.3,3:0.1,4:0.2);", 10).unwrap();
        let b = parse_newick("((1:0.1,2:0.2):0.4,3:0.1,4:0.2);", 10).unwrap();
        assert_eq!(blowup_distance_exact(&a, &b).unwrap(), 1);
    }

    #[test]
    fn quartet_change_needs_more_than_one_edge() {
        let a = parse_newick("((1:0.1,2:0.1):0.1,3:0.1,4:0.1);", 10).unwrap();
        let b = parse_newick("((1:0.1,3:0.1):0.1,2:0.1,4:0.1);", 10).unwrap();
        let d = blowup_distance_exact(&a, &b).unwrap();
        assert!((2..=5).contains(&d));
        assert_eq!(blowup_distance_exact(&b, &a).unwrap(), d);
    }

    #[test]
    fn apply_realizes_a_found_distance() {
        let a = parse_newick("((1:0.1,2:0.2):0.3,3:0.1,4:0.2);", 10).unwrap();
        // Replace the 3–center edge by a heavier one.
        let e = a.neighbors(a.leaf(2))[0].1;
        let center = a.edge(e).other(a.leaf(2));
        let mv = BlowupMove {
            removed: vec![e],
            added: vec![(center, a.leaf(2), 4)],
        };
        let b = blowup_apply(&a, &mv).unwrap();
        assert_eq!(blowup_distance_exact(&a, &b).unwrap(), 1);
        assert!(blowup_apply(
            &a,
            &BlowupMove {
                removed: vec![e],
                added: vec![]
            }
        )
        .is_err());
    }

    #[test]
    fn neighborhood_counts_nest() {
        let t = parse_newick("((1:0.1,2:0.2):0.3,3:0.1,4:0.4);", 10).unwrap();
        assert_eq!(blowup_neighborhood_count(&t, 0, 1, 4).unwrap(), 1);
        let one = blowup_neighborhood_count(&t, 1, 1, 4).unwrap();
        assert!(one > 1 && one <= 768);
    }

    #[test]
    fn upper_bound_is_sound_on_random_pairs() {
        let mut rng = stream(21, &[]);
        for _ in 0..20 {
            let a = random_regular(5, 1, 2, 10, &mut rng).unwrap();
            let b = random_regular(5, 1, 2, 10, &mut rng).unwrap();
            let exact = blowup_distance_exact(&a, &b).unwrap();
            // Single leaves and the whole leaf set as candidate clusters.
            let whole = vec![restrict(&a, &[0, 1, 2, 3, 4]).unwrap()];
            assert!(blowup_upper_bound(&a, &b, &whole, &BTreeSet::new()).unwrap() >= exact);
            assert!(blowup_upper_bound(&a, &b, &[], &BTreeSet::new()).unwrap() == a.edges().len());
        }
        let a = random_regular(5, 1, 2, 10, &mut rng).unwrap();
        let whole = vec![restrict(&a, &[0, 1, 2, 3, 4]).unwrap()];
        assert_eq!(
            blowup_upper_bound(&a, &a, &whole, &BTreeSet::new()).unwrap(),
            0
        );
    }
}
