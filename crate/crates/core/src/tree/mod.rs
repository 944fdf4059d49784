//! Phylogenies on the 1/Υ weight grid, tree metrics, restricted subtrees,
//! topology enumeration and Newick I/O.

mod enumerate;
mod metric;
mod newick;
mod rooted;
mod subtree;

pub use enumerate::{
    canonical_form, enumerate_topologies, random_regular, topology_form, DEFAULT_ENUMERATION_LIMIT,
};
pub use metric::{check_four_point, quartet_topology, tree_metric, Quartet, TreeMetric};
pub use newick::{parse_newick, parse_newick_many, write_newick};
pub use rooted::{RNode, RootedTree};
pub use subtree::{
    correspond, is_cohanging, is_dense, is_metric_matching, linkage, locate_on_path, restrict,
    restrict_vertices, topping, Point, RestrictedSubtree, TreeGeometry,
};

use crate::error::{Error, Result};
use std::collections::VecDeque;

/// Leaf labels are `0..n` internally and printed as `1..=n`.
pub type Label = usize;

/// An undirected edge with a weight of `units / Υ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub units: u64,
}

impl Edge {
    /// The endpoint opposite `v`.
    pub fn other(&self, v: usize) -> usize {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }
}

/// A leaf-labelled tree whose internal vertices have degree 3, except an
/// optional designated root of degree 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Phylogeny {
    upsilon: u64,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, usize)>>,
    leaf_of_label: Vec<usize>,
    label_of_vertex: Vec<Option<Label>>,
    root: Option<usize>,
}

/// A traversal of a phylogeny from a chosen root.
#[derive(Debug, Clone)]
pub struct RootedView {
    pub root: usize,
    /// `(parent, edge to parent)` for every vertex except the root.
    pub parent: Vec<Option<(usize, usize)>>,
    /// Vertices in preorder.
    pub order: Vec<usize>,
    /// Graph depth.
    pub depth: Vec<usize>,
    /// Weighted depth in units.
    pub dist: Vec<u64>,
    pub children: Vec<Vec<usize>>,
}

impl RootedView {
    /// Lowest common ancestor by climbing.
    pub fn lca(&self, mut u: usize, mut v: usize) -> usize {
        while self.depth[u] > self.depth[v] {
            u = self.parent[u].unwrap().0;
        }
        while self.depth[v] > self.depth[u] {
            v = self.parent[v].unwrap().0;
        }
        while u != v {
            u = self.parent[u].unwrap().0;
            v = self.parent[v].unwrap().0;
        }
        u
    }

    /// Whether `anc` lies on the path from `v` to the root.
    pub fn is_ancestor(&self, anc: usize, mut v: usize) -> bool {
        loop {
            if v == anc {
                return true;
            }
            match self.parent[v] {
                Some((p, _)) => v = p,
                None => return false,
            }
        }
    }

    /// Weighted distance in units.
    pub fn distance(&self, u: usize, v: usize) -> u64 {
        let w = self.lca(u, v);
        self.dist[u] + self.dist[v] - 2 * self.dist[w]
    }

    /// Graph distance.
    pub fn graph_distance(&self, u: usize, v: usize) -> usize {
        let w = self.lca(u, v);
        self.depth[u] + self.depth[v] - 2 * self.depth[w]
    }

    /// Vertices on the path from `u` to `v`, inclusive, in order.
    pub fn path_vertices(&self, u: usize, v: usize) -> Vec<usize> {
        let w = self.lca(u, v);
        let mut left = vec![];
        let mut x = u;
        while x != w {
            left.push(x);
            x = self.parent[x].unwrap().0;
        }
        left.push(w);
        let mut right = vec![];
        let mut y = v;
        while y != w {
            right.push(y);
            y = self.parent[y].unwrap().0;
        }
        left.extend(right.into_iter().rev());
        left
    }

    /// Edge ids on the path from `u` to `v`, in order.
    pub fn path_edges(&self, u: usize, v: usize) -> Vec<usize> {
        let w = self.lca(u, v);
        let mut left = vec![];
        let mut x = u;
        while x != w {
            let (p, e) = self.parent[x].unwrap();
            left.push(e);
            x = p;
        }
        let mut right = vec![];
        let mut y = v;
        while y != w {
            let (p, e) = self.parent[y].unwrap();
            right.push(e);
            y = p;
        }
        left.extend(right.into_iter().rev());
        left
    }

    /// All descendants of `v`, including `v`.
    pub fn subtree(&self, v: usize) -> Vec<usize> {
        let mut out = vec![];
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            out.push(x);
            stack.extend(self.children[x].iter().copied());
        }
        out
    }
}

impl Phylogeny {
    /// Builds and validates a phylogeny.
    ///
    /// `leaves[i]` is the vertex carrying label `i`.
    pub fn new(
        n_vertices: usize,
        edges: Vec<Edge>,
        leaves: Vec<usize>,
        upsilon: u64,
        root: Option<usize>,
    ) -> Result<Self> {
        if upsilon == 0 {
            return Err(Error::param("Υ must be positive"));
        }
        if n_vertices == 0 {
            return Err(Error::tree("empty vertex set"));
        }
        if edges.len() + 1 != n_vertices {
            return Err(Error::tree(format!(
                "{} vertices but {} edges",
                n_vertices,
                edges.len()
            )));
        }
        let mut adj = vec![vec![]; n_vertices];
        for (i, e) in edges.iter().enumerate() {
            if e.a >= n_vertices || e.b >= n_vertices || e.a == e.b {
                return Err(Error::tree(format!("bad edge {}-{}", e.a, e.b)));
            }
            adj[e.a].push((e.b, i));
            adj[e.b].push((e.a, i));
        }
        let mut label_of_vertex = vec![None; n_vertices];
        for (l, &v) in leaves.iter().enumerate() {
            if v >= n_vertices || label_of_vertex[v].is_some() {
                return Err(Error::tree(format!(
                    "label {} has an invalid or shared vertex",
                    l + 1
                )));
            }
            label_of_vertex[v] = Some(l);
        }
        let t = Phylogeny {
            upsilon,
            edges,
            adj,
            leaf_of_label: leaves,
            label_of_vertex,
            root,
        };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        let nv = self.adj.len();
        let mut seen = vec![false; nv];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &(w, _) in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        if count != nv {
            return Err(Error::tree("graph is not connected"));
        }
        if let Some(r) = self.root {
            if r >= nv {
                return Err(Error::tree("root out of range"));
            }
        }
        let n = self.leaf_of_label.len();
        for v in 0..nv {
            let deg = self.adj[v].len();
            match self.label_of_vertex[v] {
                Some(_) => {
                    if nv > 1 && deg != 1 {
                        return Err(Error::tree(format!("leaf vertex {v} has degree {deg}")));
                    }
                }
                None => {
                    let ok = deg == 3 || (deg == 2 && self.root == Some(v));
                    if !ok {
                        return Err(Error::tree(format!("internal vertex {v} has degree {deg}")));
                    }
                }
            }
        }
        if n == 0 {
            return Err(Error::tree("no leaves"));
        }
        Ok(())
    }

    /// The complete binary tree of height `h` with every weight `g_units / Υ`,
    /// rooted at a degree-2 root, leaves labelled left to right.
    pub fn homogeneous(h: usize, g_units: u64, upsilon: u64) -> Result<Self> {
        if h == 0 || h > 16 {
            return Err(Error::param("height must be in 1..=16"));
        }
        let nv = (1usize << (h + 1)) - 1;
        let mut edges = Vec::with_capacity(nv - 1);
        for v in 1..nv {
            edges.push(Edge {
                a: (v - 1) / 2,
                b: v,
                units: g_units,
            });
        }
        let first_leaf = (1usize << h) - 1;
        let leaves = (first_leaf..nv).collect();
        Phylogeny::new(nv, edges, leaves, upsilon, Some(0))
    }

    /// Homogeneous tree with leaves relabelled: leaf position `i` (left to
    /// right) carries label `perm[i]`.
    pub fn homogeneous_labeled(
        h: usize,
        g_units: u64,
        upsilon: u64,
        perm: &[Label],
    ) -> Result<Self> {
        let t = Phylogeny::homogeneous(h, g_units, upsilon)?;
        let n = t.n_leaves();
        if perm.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "permutation of length {} for {} leaves",
                perm.len(),
                n
            )));
        }
        let mut seen = vec![false; n];
        let mut leaves = vec![0; n];
        for (i, &l) in perm.iter().enumerate() {
            if l >= n || seen[l] {
                return Err(Error::param("leaf labelling is not a permutation"));
            }
            seen[l] = true;
            leaves[l] = t.leaf_of_label[i];
        }
        Phylogeny::new(t.n_vertices(), t.edges, leaves, upsilon, Some(0))
    }

    pub fn upsilon(&self) -> u64 {
        self.upsilon
    }

    pub fn n_leaves(&self) -> usize {
        self.leaf_of_label.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Edge {
        self.edges[e]
    }

    /// `(neighbor, edge id)` pairs of `v`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn leaf(&self, label: Label) -> usize {
        self.leaf_of_label[label]
    }

    pub fn leaves(&self) -> &[usize] {
        &self.leaf_of_label
    }

    pub fn label(&self, v: usize) -> Option<Label> {
        self.label_of_vertex[v]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.label_of_vertex[v].is_some()
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    /// The designated root, or a deterministic internal vertex (the neighbor
    /// of leaf 1) when none is designated.
    pub fn default_root(&self) -> usize {
        match self.root {
            Some(r) => r,
            None if self.n_vertices() == 1 => 0,
            None => self.adj[self.leaf_of_label[0]][0].0,
        }
    }

    /// Weight of edge `e`.
    pub fn weight(&self, e: usize) -> f64 {
        self.edges[e].units as f64 / self.upsilon as f64
    }

    pub fn units(&self, e: usize) -> u64 {
        self.edges[e].units
    }

    /// Edge joining `u` and `v`, if adjacent.
    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.adj[u].iter().find(|&&(w, _)| w == v).map(|&(_, e)| e)
    }

    /// Copy with a different designated root. Degree-2 vertices are only
    /// allowed at the root, so the new root must be a valid one.
    pub fn with_root(&self, root: Option<usize>) -> Result<Self> {
        let mut t = self.clone();
        t.root = root;
        t.validate()?;
        Ok(t)
    }

    /// Copy with edge `e` set to `units`.
    pub fn with_edge_units(&self, e: usize, units: u64) -> Self {
        let mut t = self.clone();
        t.edges[e].units = units;
        t
    }

    /// Copy with every edge set to `units`.
    pub fn with_uniform_units(&self, units: u64, upsilon: u64) -> Self {
        let mut t = self.clone();
        t.upsilon = upsilon;
        for e in &mut t.edges {
            e.units = units;
        }
        t
    }

    /// Copy on a different grid, keeping the unit counts.
    pub fn with_upsilon(&self, upsilon: u64) -> Self {
        let mut t = self.clone();
        t.upsilon = upsilon;
        t
    }

    /// Copy with the given per-edge units.
    pub fn with_units(&self, units: &[u64]) -> Result<Self> {
        if units.len() != self.edges.len() {
            return Err(Error::DimensionMismatch(
                "one weight per edge expected".into(),
            ));
        }
        let mut t = self.clone();
        for (e, &u) in t.edges.iter_mut().zip(units) {
            e.units = u;
        }
        Ok(t)
    }

    /// Checks `f ≤ w ≤ g` on every edge (bounds in units).
    pub fn check_regular(&self, f_units: u64, g_units: u64) -> Result<()> {
        for (i, e) in self.edges.iter().enumerate() {
            if e.units < f_units || e.units > g_units {
                return Err(Error::tree(format!(
                    "edge {i} has weight {} outside [{f_units}, {g_units}]/Υ",
                    e.units
                )));
            }
        }
        Ok(())
    }

    /// Maximum edge weight in units.
    pub fn max_units(&self) -> u64 {
        self.edges.iter().map(|e| e.units).max().unwrap_or(0)
    }

    /// Traversal from `root`. Children are ordered by their smallest leaf label.
    pub fn rooted_view(&self, root: usize) -> RootedView {
        let nv = self.n_vertices();
        let mut parent = vec![None; nv];
        let mut depth = vec![0; nv];
        let mut dist = vec![0; nv];
        let mut children = vec![vec![]; nv];
        let mut bfs = Vec::with_capacity(nv);
        let mut seen = vec![false; nv];
        seen[root] = true;
        bfs.push(root);
        let mut i = 0;
        while i < bfs.len() {
            let v = bfs[i];
            i += 1;
            for &(w, e) in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some((v, e));
                    depth[w] = depth[v] + 1;
                    dist[w] = dist[v] + self.edges[e].units;
                    children[v].push(w);
                    bfs.push(w);
                }
            }
        }
        let mut min_label = vec![usize::MAX; nv];
        for &v in bfs.iter().rev() {
            if let Some(l) = self.label_of_vertex[v] {
                min_label[v] = min_label[v].min(l);
            }
            if let Some((p, _)) = parent[v] {
                min_label[p] = min_label[p].min(min_label[v]);
            }
        }
        for c in &mut children {
            c.sort_by_key(|&w| min_label[w]);
        }
        let mut order = Vec::with_capacity(nv);
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend(children[v].iter().rev().copied());
        }
        RootedView {
            root,
            parent,
            order,
            depth,
            dist,
            children,
        }
    }

    /// Traversal from [`Phylogeny::default_root`].
    pub fn view(&self) -> RootedView {
        self.rooted_view(self.default_root())
    }

    /// Weighted distances (units) from `src` to every vertex.
    pub fn distances_from(&self, src: usize) -> Vec<u64> {
        let mut d = vec![u64::MAX; self.n_vertices()];
        d[src] = 0;
        let mut stack = vec![src];
        while let Some(v) = stack.pop() {
            for &(w, e) in &self.adj[v] {
                if d[w] == u64::MAX {
                    d[w] = d[v] + self.edges[e].units;
                    stack.push(w);
                }
            }
        }
        d
    }

    /// Graph distances from `src` to every vertex.
    pub fn graph_distances_from(&self, src: usize) -> Vec<usize> {
        let mut d = vec![usize::MAX; self.n_vertices()];
        d[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            for &(w, _) in &self.adj[v] {
                if d[w] == usize::MAX {
                    d[w] = d[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        d
    }

    /// Exchanges the subtrees hanging below `u` and `v` (relative to the
    /// designated root). The two vertices must be at the same depth and not
    /// siblings.
    pub fn swap_subtrees(&self, u: usize, v: usize) -> Result<Self> {
        let root = self
            .root
            .ok_or_else(|| Error::InvalidMove("tree has no designated root".into()))?;
        let view = self.rooted_view(root);
        if u == v || u == root || v == root {
            return Err(Error::InvalidMove(
                "vertices must be distinct non-root vertices".into(),
            ));
        }
        if view.depth[u] != view.depth[v] {
            return Err(Error::InvalidMove(
                "vertices are at different depths".into(),
            ));
        }
        let (pu, eu) = view.parent[u].unwrap();
        let (pv, ev) = view.parent[v].unwrap();
        if pu == pv {
            return Err(Error::InvalidMove("vertices are siblings".into()));
        }
        let mut t = self.clone();
        t.edges[eu] = Edge {
            a: pv,
            b: u,
            units: self.edges[eu].units,
        };
        t.edges[ev] = Edge {
            a: pu,
            b: v,
            units: self.edges[ev].units,
        };
        t.rebuild_adjacency();
        Ok(t)
    }

    fn rebuild_adjacency(&mut self) {
        let mut adj = vec![vec![]; self.adj.len()];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.a].push((e.b, i));
            adj[e.b].push((e.a, i));
        }
        self.adj = adj;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_shape() {
        let t = Phylogeny::homogeneous(2, 2, 10).unwrap();
        assert_eq!(t.n_leaves(), 4);
        assert_eq!(t.edges().len(), 6);
        assert_eq!(t.degree(0), 2);
        let m = tree_metric(&t);
        assert_eq!(m.units(0, 1), 4);
        assert_eq!(m.units(0, 2), 8);
    }

    #[test]
    fn degree_two_only_at_root() {
        let t = Phylogeny::homogeneous(2, 2, 10).unwrap();
        assert!(t.with_root(None).is_err());
        assert!(t.with_root(Some(1)).is_err());
    }

    #[test]
    fn swap_rejects_siblings_and_levels() {
        let t = Phylogeny::homogeneous(2, 1, 1).unwrap();
        assert!(t.swap_subtrees(3, 4).is_err());
        assert!(t.swap_subtrees(1, 3).is_err());
        let s = t.swap_subtrees(3, 5).unwrap();
        let m = tree_metric(&s);
        assert_eq!(m.units(0, 3), 2);
        assert_eq!(m.units(0, 2), 4);
        assert_eq!(m.units(1, 2), 2);
    }

    #[test]
    fn view_paths() {
        let t = Phylogeny::homogeneous(3, 1, 1).unwrap();
        let v = t.rooted_view(0);
        let a = t.leaf(0);
        let b = t.leaf(7);
        assert_eq!(v.graph_distance(a, b), 6);
        assert_eq!(v.path_edges(a, b).len(), 6);
        assert_eq!(v.path_vertices(a, b).len(), 7);
        assert_eq!(v.lca(a, b), 0);
    }
}
