use crate::error::{Error, Result};
use crate::tree::{tree_metric, Phylogeny};
use std::collections::{HashMap, HashSet, VecDeque};

/// Largest height for exact swap-distance search.
pub const SWAP_EXACT_HEIGHT: usize = 3;

/// Height and common edge weight (units) of a homogeneous tree.
pub fn homogeneous_shape(t: &Phylogeny) -> Result<(usize, u64)> {
    let root = t
        .root()
        .ok_or_else(|| Error::tree("homogeneous trees need a designated root"))?;
    if t.degree(root) != 2 {
        return Err(Error::tree("root of a homogeneous tree has degree 2"));
    }
    let g = t.units(0);
    if t.edges().iter().any(|e| e.units != g) {
        return Err(Error::tree("edge weights are not all equal"));
    }
    let view = t.rooted_view(root);
    let h = view.depth[t.leaf(0)];
    if t.leaves().iter().any(|&v| view.depth[v] != h) || t.n_leaves() != 1 << h {
        return Err(Error::tree("leaves are not all at the same depth"));
    }
    Ok((h, g))
}

/// All unordered legal swaps `(u, v)`: distinct non-root vertices at the
/// same depth with different parents, ordered by depth then preorder.
pub fn swap_moves(t: &Phylogeny) -> Result<Vec<(usize, usize)>> {
    let (h, _) = homogeneous_shape(t)?;
    let view = t.rooted_view(t.root().unwrap());
    let mut levels = vec![vec![]; h + 1];
    for &v in &view.order {
        levels[view.depth[v]].push(v);
    }
    let mut out = vec![];
    for level in levels.iter().skip(1) {
        for (i, &u) in level.iter().enumerate() {
            for &v in &level[i + 1..] {
                if view.parent[u].unwrap().0 != view.parent[v].unwrap().0 {
                    out.push((u, v));
                }
            }
        }
    }
    Ok(out)
}

/// Applies one swap.
pub fn swap_apply(t: &Phylogeny, u: usize, v: usize) -> Result<Phylogeny> {
    homogeneous_shape(t)?;
    t.swap_subtrees(u, v)
}

/// A swap neighbor, identified by the first move producing its metric.
#[derive(Debug, Clone)]
pub struct SwapNeighbor {
    pub u: usize,
    pub v: usize,
    pub tree: Phylogeny,
}

fn metric_key(t: &Phylogeny) -> Vec<u64> {
    tree_metric(t).unit_matrix().to_vec()
}

/// The distinct metric classes one swap away from `t`, excluding `t`'s own.
pub fn swap_neighbors(t: &Phylogeny) -> Result<Vec<SwapNeighbor>> {
    let mut seen = HashSet::from([metric_key(t)]);
    let mut out = vec![];
    for (u, v) in swap_moves(t)? {
        let s = t.swap_subtrees(u, v)?;
        if seen.insert(metric_key(&s)) {
            out.push(SwapNeighbor { u, v, tree: s });
        }
    }
    Ok(out)
}

fn check_pair(a: &Phylogeny, b: &Phylogeny) -> Result<usize> {
    let (ha, ga) = homogeneous_shape(a)?;
    let (hb, gb) = homogeneous_shape(b)?;
    if ha != hb || ga != gb || a.upsilon() != b.upsilon() {
        return Err(Error::param("trees differ in height or weight"));
    }
    Ok(ha)
}

/// Minimum number of swaps turning `a` into a tree metric-equivalent to
/// `b`, by breadth-first search over metric classes.
pub fn swap_distance_exact(a: &Phylogeny, b: &Phylogeny) -> Result<usize> {
    let h = check_pair(a, b)?;
    if h > SWAP_EXACT_HEIGHT {
        return Err(Error::limit(
            "exact swap distance height",
            SWAP_EXACT_HEIGHT,
        ));
    }
    let target = metric_key(b);
    let mut dist: HashMap<Vec<u64>, usize> = HashMap::from([(metric_key(a), 0)]);
    let mut queue = VecDeque::from([a.clone()]);
    while let Some(t) = queue.pop_front() {
        let d = dist[&metric_key(&t)];
        if metric_key(&t) == target {
            return Ok(d);
        }
        for nb in swap_neighbors(&t)? {
            let key = metric_key(&nb.tree);
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(key) {
                e.insert(d + 1);
                queue.push_back(nb.tree);
            }
        }
    }
    Err(Error::LeafSetMismatch(
        "target is not reachable by swaps".into(),
    ))
}

/// Number of metric classes within `delta` swaps of `t` (including `t`).
pub fn swap_ball_size(t: &Phylogeny, delta: usize) -> Result<usize> {
    let (h, _) = homogeneous_shape(t)?;
    if h > SWAP_EXACT_HEIGHT {
        return Err(Error::limit("swap neighborhood height", SWAP_EXACT_HEIGHT));
    }
    let mut seen = HashSet::from([metric_key(t)]);
    let mut frontier = vec![t.clone()];
    for _ in 0..delta {
        let mut next = vec![];
        for x in &frontier {
            for nb in swap_neighbors(x)? {
                if seen.insert(metric_key(&nb.tree)) {
                    next.push(nb.tree);
                }
            }
        }
        frontier = next;
    }
    Ok(seen.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn height_one_has_no_moves() {
        let t = Phylogeny::homogeneous(1, 2, 10).unwrap();
        assert!(swap_moves(&t).unwrap().is_empty());
    }

    #[test]
    fn raw_move_counts() {
        // Level d has C(2^d, 2) pairs minus 2^{d−1} sibling pairs.
        for h in 1..=4 {
            let t = Phylogeny::homogeneous(h, 2, 10).unwrap();
            let expected: usize = (1..=h)
                .map(|d| (1usize << d) * ((1 << d) - 1) / 2 - (1 << (d - 1)))
                .sum();
            let n = 1 << h;
            let moves = swap_moves(&t).unwrap().len();
            assert_eq!(moves, expected);
            assert!(moves <= (2 * n - 2) * (n - 2));
        }
    }

    #[test]
    fn swap_twice_is_identity() {
        let t = Phylogeny::homogeneous(3, 2, 10).unwrap();
        let (u, v) = (t.leaf(0), t.leaf(5));
        let s = swap_apply(&swap_apply(&t, u, v).unwrap(), u, v).unwrap();
        assert_eq!(metric_key(&s), metric_key(&t));
    }

    #[test]
    fn distances_at_height_two() {
        let t = Phylogeny::homogeneous(2, 2, 10).unwrap();
        assert_eq!(swap_distance_exact(&t, &t).unwrap(), 0);
        // Three metric classes at n = 4, all pairwise one swap apart.
        assert_eq!(swap_ball_size(&t, 2).unwrap(), 3);
        for nb in swap_neighbors(&t).unwrap() {
            assert_eq!(swap_distance_exact(&t, &nb.tree).unwrap(), 1);
            assert_eq!(swap_distance_exact(&nb.tree, &t).unwrap(), 1);
        }
    }

    #[test]
    fn all_classes_reachable_at_height_three() {
        let t = Phylogeny::homogeneous(3, 2, 10).unwrap();
        // 8! labellings over 2^7 automorphisms.
        assert_eq!(swap_ball_size(&t, 7).unwrap(), 315);
    }

    #[test]
    fn rejects_mismatched_trees() {
        let a = Phylogeny::homogeneous(2, 2, 10).unwrap();
        let b = Phylogeny::homogeneous(2, 3, 10).unwrap();
        assert!(swap_distance_exact(&a, &b).is_err());
        let c = Phylogeny::homogeneous(4, 2, 10).unwrap();
        assert!(matches!(
            swap_distance_exact(&c, &c),
            Err(Error::ScaleLimit { .. })
        ));
    }
}
