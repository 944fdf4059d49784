use super::{Label, Phylogeny, RootedTree, RootedView};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// A position in a phylogeny: a vertex, or a point strictly inside an edge
/// at `offset` units from endpoint `from`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Point {
    Vertex(usize),
    Interior {
        edge: usize,
        from: usize,
        offset: u64,
    },
}

impl Point {
    pub fn vertex(&self) -> Option<usize> {
        match *self {
            Point::Vertex(v) => Some(v),
            Point::Interior { .. } => None,
        }
    }
}

/// The subgraph spanned by the paths between a set of vertices, with an
/// optional root point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestrictedSubtree {
    /// Sorted edge ids of the parent tree.
    pub edges: Vec<usize>,
    /// Sorted vertex ids of the parent tree.
    pub vertices: Vec<usize>,
    /// Sorted leaf labels contained in the subtree.
    pub labels: Vec<Label>,
    pub root: Option<Point>,
}

impl RestrictedSubtree {
    pub fn with_root(mut self, root: Point) -> Self {
        self.root = Some(root);
        self
    }

    pub fn edge_set(&self) -> BTreeSet<usize> {
        self.edges.iter().copied().collect()
    }
}

/// Subtree spanned by the leaves with the given labels.
pub fn restrict(t: &Phylogeny, labels: &[Label]) -> Result<RestrictedSubtree> {
    let mut vs = Vec::with_capacity(labels.len());
    for &l in labels {
        if l >= t.n_leaves() {
            return Err(Error::param(format!("label {} not in tree", l + 1)));
        }
        vs.push(t.leaf(l));
    }
    restrict_vertices(t, &vs)
}

/// Subtree spanned by the given vertices.
pub fn restrict_vertices(t: &Phylogeny, vertices: &[usize]) -> Result<RestrictedSubtree> {
    if vertices.is_empty() {
        return Err(Error::param("cannot restrict to an empty set"));
    }
    let nv = t.n_vertices();
    let mut marked = vec![false; nv];
    for &v in vertices {
        if v >= nv {
            return Err(Error::param(format!("vertex {v} out of range")));
        }
        marked[v] = true;
    }
    let total = vertices.iter().collect::<BTreeSet<_>>().len();
    let view = t.rooted_view(vertices[0]);
    let mut below = vec![0usize; nv];
    for &v in view.order.iter().rev() {
        if marked[v] {
            below[v] += 1;
        }
        if let Some((p, _)) = view.parent[v] {
            below[p] += below[v];
        }
    }
    let mut edges = vec![];
    let mut vset = BTreeSet::new();
    vset.insert(vertices[0]);
    for v in 0..nv {
        if let Some((p, e)) = view.parent[v] {
            if below[v] > 0 && below[v] < total {
                edges.push(e);
                vset.insert(v);
                vset.insert(p);
            }
        }
    }
    edges.sort_unstable();
    let labels: Vec<Label> = {
        let mut l: Vec<Label> = vset.iter().filter_map(|&v| t.label(v)).collect();
        l.sort_unstable();
        l
    };
    Ok(RestrictedSubtree {
        edges,
        vertices: vset.into_iter().collect(),
        labels,
        root: None,
    })
}

/// Geometry helper over one phylogeny: distances and paths between points.
#[derive(Debug, Clone)]
pub struct TreeGeometry<'a> {
    pub tree: &'a Phylogeny,
    pub view: RootedView,
}

impl<'a> TreeGeometry<'a> {
    pub fn new(tree: &'a Phylogeny) -> Self {
        TreeGeometry {
            tree,
            view: tree.view(),
        }
    }

    pub fn with_root(tree: &'a Phylogeny, root: usize) -> Self {
        TreeGeometry {
            tree,
            view: tree.rooted_view(root),
        }
    }

    /// Normalizes interior points that sit on an endpoint.
    pub fn normalize(&self, p: Point) -> Point {
        match p {
            Point::Interior { edge, from, offset } => {
                let len = self.tree.units(edge);
                if offset == 0 {
                    Point::Vertex(from)
                } else if offset >= len {
                    Point::Vertex(self.tree.edge(edge).other(from))
                } else {
                    p
                }
            }
            v => v,
        }
    }

    /// Endpoints of a point with the units needed to reach them.
    fn anchors(&self, p: Point) -> Vec<(usize, u64)> {
        match p {
            Point::Vertex(v) => vec![(v, 0)],
            Point::Interior { edge, from, offset } => {
                let other = self.tree.edge(edge).other(from);
                vec![(from, offset), (other, self.tree.units(edge) - offset)]
            }
        }
    }

    /// Weighted distance in units between two points.
    pub fn distance(&self, p: Point, q: Point) -> u64 {
        if let (
            Point::Interior {
                edge: e1,
                from: f1,
                offset: o1,
            },
            Point::Interior {
                edge: e2,
                from: f2,
                offset: o2,
            },
        ) = (p, q)
        {
            if e1 == e2 {
                let o2 = if f1 == f2 {
                    o2
                } else {
                    self.tree.units(e2) - o2
                };
                return o1.abs_diff(o2);
            }
        }
        let mut best = u64::MAX;
        for (a, da) in self.anchors(p) {
            for (b, db) in self.anchors(q) {
                best = best.min(da + db + self.view.distance(a, b));
            }
        }
        best
    }

    /// Graph distance between points; an interior point counts as its
    /// nearest endpoint in the direction of the other point.
    pub fn graph_distance(&self, p: Point, q: Point) -> usize {
        if let (Point::Interior { edge: e1, .. }, Point::Interior { edge: e2, .. }) = (p, q) {
            if e1 == e2 {
                return 0;
            }
        }
        let mut best = usize::MAX;
        for (a, _) in self.anchors(p) {
            for (b, _) in self.anchors(q) {
                best = best.min(self.view.graph_distance(a, b));
            }
        }
        best
    }

    /// Edges with positive length on the path between two points.
    pub fn path_edges(&self, p: Point, q: Point) -> Vec<usize> {
        let p = self.normalize(p);
        let q = self.normalize(q);
        if let (Point::Interior { edge: e1, .. }, Point::Interior { edge: e2, .. }) = (p, q) {
            if e1 == e2 {
                return if p == q { vec![] } else { vec![e1] };
            }
        }
        // Pick the exit endpoint of each point facing the other.
        let exit = |x: Point, y: Point| -> (usize, Option<usize>) {
            match x {
                Point::Vertex(v) => (v, None),
                Point::Interior { edge, from, .. } => {
                    let other = self.tree.edge(edge).other(from);
                    let target = match y {
                        Point::Vertex(v) => v,
                        Point::Interior { from: f, .. } => f,
                    };
                    let v = if self.view.graph_distance(from, target)
                        < self.view.graph_distance(other, target)
                    {
                        from
                    } else {
                        other
                    };
                    (v, Some(edge))
                }
            }
        };
        let (a, ea) = exit(p, q);
        let (b, eb) = exit(q, p);
        let mut out = vec![];
        out.extend(ea);
        out.extend(self.view.path_edges(a, b));
        out.extend(eb);
        out
    }

    /// The point on the path from vertex `a` to vertex `b` at `offset` units from `a`.
    pub fn locate(&self, a: usize, b: usize, offset: u64) -> Result<Point> {
        let path = self.view.path_vertices(a, b);
        let mut acc = 0u64;
        for w in path.windows(2) {
            if acc == offset {
                return Ok(Point::Vertex(w[0]));
            }
            let e = self.tree.edge_between(w[0], w[1]).unwrap();
            let len = self.tree.units(e);
            if offset < acc + len {
                return Ok(Point::Interior {
                    edge: e,
                    from: w[0],
                    offset: offset - acc,
                });
            }
            acc += len;
        }
        if acc == offset {
            return Ok(Point::Vertex(b));
        }
        Err(Error::param(format!(
            "offset {offset} exceeds path length {acc}"
        )))
    }

    /// Whether a point lies on a subtree (on one of its vertices or edges).
    pub fn on_subtree(&self, p: Point, y: &RestrictedSubtree) -> bool {
        match self.normalize(p) {
            Point::Vertex(v) => y.vertices.binary_search(&v).is_ok(),
            Point::Interior { edge, .. } => y.edges.binary_search(&edge).is_ok(),
        }
    }
}

/// The point on the path between vertices `a` and `b` at `offset` units from `a`.
pub fn locate_on_path(t: &Phylogeny, a: usize, b: usize, offset: u64) -> Result<Point> {
    TreeGeometry::new(t).locate(a, b, offset)
}

/// Whether two restricted subtrees on the same labels induce identical
/// leaf metrics. Errors when the label sets differ.
pub fn is_metric_matching(
    t: &Phylogeny,
    y: &RestrictedSubtree,
    t2: &Phylogeny,
    y2: &RestrictedSubtree,
) -> Result<bool> {
    if y.labels != y2.labels {
        return Err(Error::LeafSetMismatch(format!(
            "{:?} vs {:?}",
            y.labels, y2.labels
        )));
    }
    for (i, &a) in y.labels.iter().enumerate() {
        let d1 = t.distances_from(t.leaf(a));
        let d2 = t2.distances_from(t2.leaf(a));
        for &b in &y.labels[i + 1..] {
            if d1[t.leaf(b)] != d2[t2.leaf(b)] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Maps vertex `v` of the leaf-spanned subtree `y` of `t` to the
/// corresponding point of `t2` (an extra vertex when it falls inside an
/// edge). `None` if `v` lies on no path between two leaves of `y`.
pub fn correspond(t: &Phylogeny, y: &RestrictedSubtree, t2: &Phylogeny, v: usize) -> Option<Point> {
    if let Some(l) = t.label(v) {
        if y.labels.binary_search(&l).is_ok() {
            return Some(Point::Vertex(t2.leaf(l)));
        }
    }
    let dv = t.distances_from(v);
    let labels = &y.labels;
    for (i, &a) in labels.iter().enumerate() {
        let da = t.distances_from(t.leaf(a));
        for &b in &labels[i + 1..] {
            if dv[t.leaf(a)] + dv[t.leaf(b)] == da[t.leaf(b)] {
                return locate_on_path(t2, t2.leaf(a), t2.leaf(b), dv[t.leaf(a)]).ok();
            }
        }
    }
    None
}

/// Whether two rooted subtrees are co-hanging: edge-disjoint, and the path
/// between their roots avoids both edge sets.
pub fn is_cohanging(t: &Phylogeny, y: &RestrictedSubtree, z: &RestrictedSubtree) -> Result<bool> {
    let ry = y
        .root
        .ok_or_else(|| Error::param("first subtree has no root"))?;
    let rz = z
        .root
        .ok_or_else(|| Error::param("second subtree has no root"))?;
    let ey = y.edge_set();
    let ez = z.edge_set();
    if ey.intersection(&ez).next().is_some() {
        return Err(Error::SubtreeIntersection);
    }
    let geo = TreeGeometry::new(t);
    Ok(geo
        .path_edges(ry, rz)
        .iter()
        .all(|e| !ey.contains(e) && !ez.contains(e)))
}

/// Union of two rooted subtrees and the path joining their roots.
pub fn linkage(
    t: &Phylogeny,
    y: &RestrictedSubtree,
    z: &RestrictedSubtree,
) -> Result<BTreeSet<usize>> {
    let ry = y
        .root
        .ok_or_else(|| Error::param("first subtree has no root"))?;
    let rz = z
        .root
        .ok_or_else(|| Error::param("second subtree has no root"))?;
    let mut out = y.edge_set();
    out.extend(z.edges.iter().copied());
    out.extend(TreeGeometry::new(t).path_edges(ry, rz));
    Ok(out)
}

/// A rooted subtree plus up to `gamma` edges above its root toward `global_root`.
pub fn topping(
    t: &Phylogeny,
    y: &RestrictedSubtree,
    gamma: usize,
    global_root: usize,
) -> Result<BTreeSet<usize>> {
    let ry = y.root.ok_or_else(|| Error::param("subtree has no root"))?;
    let geo = TreeGeometry::new(t);
    let mut out = y.edge_set();
    out.extend(
        geo.path_edges(ry, Point::Vertex(global_root))
            .into_iter()
            .take(gamma),
    );
    Ok(out)
}

/// Whether a rooted subtree is `(ℓ, ℘)`-dense.
pub fn is_dense(t: &Phylogeny, y: &RestrictedSubtree, ell: usize, wp: u32) -> Result<bool> {
    Ok(RootedTree::from_subtree(t, y)?.is_dense(ell, wp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_newick;

    #[test]
    fn restriction_of_two_leaves_is_their_path() {
        let t = Phylogeny::homogeneous(3, 1, 1).unwrap();
        let y = restrict(&t, &[0, 3]).unwrap();
        assert_eq!(y.edges.len(), 4);
        assert_eq!(y.labels, vec![0, 3]);
        let single = restrict(&t, &[5]).unwrap();
        assert!(single.edges.is_empty());
        assert_eq!(single.vertices.len(), 1);
    }

    #[test]
    fn caterpillar_subtrees_match() {
        let a = parse_newick("(((1:0.1,2:0.1):0.1,3:0.2):0.1,4:0.1,5:0.3);", 10).unwrap();
        let b = parse_newick("(((1:0.1,2:0.1):0.1,3:0.2):0.2,5:0.1,4:0.2);", 10).unwrap();
        let ya = restrict(&a, &[0, 1, 2]).unwrap();
        let yb = restrict(&b, &[0, 1, 2]).unwrap();
        assert!(is_metric_matching(&a, &ya, &b, &yb).unwrap());
        let za = restrict(&a, &[0, 1, 3]).unwrap();
        let zb = restrict(&b, &[0, 1, 3]).unwrap();
        assert!(!is_metric_matching(&a, &za, &b, &zb).unwrap());
        assert!(is_metric_matching(&a, &ya, &b, &zb).is_err());
    }

    #[test]
    fn extra_vertex_inside_edge() {
        // In `a`, leaf 3 hangs off the 1–2 path; in `b` it does not.
        let a = parse_newick("((1:0.1,3:0.1):0.1,2:0.1,4:0.1);", 10).unwrap();
        let b = parse_newick("(1:0.2,2:0.1,(3:0.1,4:0.1):0.1);", 10).unwrap();
        let ya = restrict(&a, &[0, 1]).unwrap();
        let mid = *ya
            .vertices
            .iter()
            .find(|&&v| !a.is_leaf(v) && a.neighbors(v).iter().any(|&(w, _)| w == a.leaf(0)))
            .unwrap();
        let p = correspond(&a, &ya, &b, mid).unwrap();
        let geo = TreeGeometry::new(&b);
        assert_eq!(geo.distance(p, Point::Vertex(b.leaf(0))), 1);
        assert_eq!(geo.distance(p, Point::Vertex(b.leaf(1))), 2);
        assert!(matches!(p, Point::Interior { .. }));
    }

    #[test]
    fn cohanging_cherries() {
        let t = Phylogeny::homogeneous(2, 1, 1).unwrap();
        let y = restrict(&t, &[0, 1]).unwrap().with_root(Point::Vertex(1));
        let z = restrict(&t, &[2, 3]).unwrap().with_root(Point::Vertex(2));
        assert!(is_cohanging(&t, &y, &z).unwrap());
        let bad = restrict(&t, &[0, 1])
            .unwrap()
            .with_root(Point::Vertex(t.leaf(0)));
        assert!(!is_cohanging(&t, &bad, &z).unwrap());
        let overlap = restrict(&t, &[0, 2]).unwrap().with_root(Point::Vertex(0));
        assert_eq!(
            is_cohanging(&t, &y, &overlap),
            Err(Error::SubtreeIntersection)
        );
        assert_eq!(linkage(&t, &y, &z).unwrap().len(), 6);
        assert_eq!(topping(&t, &y, 5, 0).unwrap().len(), 3);
    }

    #[test]
    fn interior_paths() {
        let t = Phylogeny::homogeneous(2, 4, 1).unwrap();
        let geo = TreeGeometry::new(&t);
        let e = t.edge_between(1, t.leaf(0)).unwrap();
        let p = Point::Interior {
            edge: e,
            from: 1,
            offset: 1,
        };
        assert_eq!(geo.path_edges(p, Point::Vertex(t.leaf(0))), vec![e]);
        assert_eq!(geo.path_edges(p, Point::Vertex(t.leaf(1))).len(), 2);
        assert_eq!(geo.distance(p, Point::Vertex(t.leaf(3))), 1 + 4 + 4 + 4);
        let q = geo.locate(t.leaf(0), t.leaf(3), 3).unwrap();
        assert_eq!(
            q,
            Point::Interior {
                edge: e,
                from: t.leaf(0),
                offset: 3
            }
        );
        assert_eq!(geo.distance(p, q), 0);
    }
}
