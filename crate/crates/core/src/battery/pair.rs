use super::coloring::Coloring;
use crate::error::{Error, Result};
use crate::tree::{restrict, Label, Phylogeny, Point, RestrictedSubtree, TreeGeometry};
use serde::{Deserialize, Serialize};

/// A point on the path between leaves `a` and `b`, `offset` units from `a`.
/// Identifies the same point in any tree where the path has the same
/// length, so it carries roots across matching subtrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anchor {
    pub a: Label,
    pub b: Label,
    pub offset: u64,
}

fn normalize(t: &Phylogeny, p: Point) -> Point {
    match p {
        Point::Interior {
            from, offset: 0, ..
        } => Point::Vertex(from),
        Point::Interior { edge, from, offset } if offset >= t.units(edge) => {
            Point::Vertex(t.edge(edge).other(from))
        }
        p => p,
    }
}

/// Anchors `p` on the subtree of `t` spanned by `labels`, using the smallest
/// label on each of two different sides of `p`.
pub fn anchor_point(t: &Phylogeny, labels: &[Label], p: Point) -> Result<Anchor> {
    let off_subtree = || Error::param("point is not on the spanned subtree");
    match normalize(t, p) {
        Point::Vertex(v) => {
            if let Some(l) = t.label(v) {
                if labels.contains(&l) {
                    return Ok(Anchor {
                        a: l,
                        b: l,
                        offset: 0,
                    });
                }
            }
            let view = t.rooted_view(v);
            let mut branch = vec![usize::MAX; t.n_vertices()];
            for &u in view.order.iter().skip(1) {
                let (par, _) = view.parent[u].unwrap();
                branch[u] = if par == v { u } else { branch[par] };
            }
            let a = *labels.iter().min().ok_or_else(off_subtree)?;
            let ba = branch[t.leaf(a)];
            let b = labels
                .iter()
                .copied()
                .filter(|&l| branch[t.leaf(l)] != ba)
                .min()
                .ok_or_else(off_subtree)?;
            Ok(Anchor {
                a,
                b,
                offset: view.dist[t.leaf(a)],
            })
        }
        Point::Interior { edge, from, offset } => {
            let other = t.edge(edge).other(from);
            let view = t.rooted_view(from);
            let (far, near): (Vec<Label>, Vec<Label>) = labels
                .iter()
                .partition(|&&l| view.is_ancestor(other, t.leaf(l)));
            let a = *near.iter().min().ok_or_else(off_subtree)?;
            let b = *far.iter().min().ok_or_else(off_subtree)?;
            Ok(Anchor {
                a,
                b,
                offset: view.dist[t.leaf(a)] + offset,
            })
        }
    }
}

/// The point of `t` an anchor designates.
pub fn locate_anchor(t: &Phylogeny, anchor: &Anchor) -> Result<Point> {
    if anchor.a.max(anchor.b) >= t.n_leaves() {
        return Err(Error::param("anchor label out of range"));
    }
    if anchor.a == anchor.b {
        if anchor.offset != 0 {
            return Err(Error::param("single-leaf anchor with an offset"));
        }
        return Ok(Point::Vertex(t.leaf(anchor.a)));
    }
    let geo = TreeGeometry::new(t);
    Ok(geo.normalize(geo.locate(t.leaf(anchor.a), t.leaf(anchor.b), anchor.offset)?))
}

/// Carries a point of the subtree of `src` spanned by `labels` over to `dst`.
pub fn transfer(src: &Phylogeny, labels: &[Label], p: Point, dst: &Phylogeny) -> Result<Point> {
    locate_anchor(dst, &anchor_point(src, labels, p)?)
}

/// `T0` and `T#` with their global roots and geometries.
#[derive(Debug, Clone)]
pub(crate) struct TreePair<'a> {
    pub t0: &'a Phylogeny,
    pub ts: &'a Phylogeny,
    pub geo0: TreeGeometry<'a>,
    pub geos: TreeGeometry<'a>,
}

impl<'a> TreePair<'a> {
    pub fn new(t0: &'a Phylogeny, ts: &'a Phylogeny) -> Self {
        let r0 = t0.root().unwrap_or_else(|| t0.default_root());
        let rs = ts.root().unwrap_or_else(|| ts.default_root());
        TreePair {
            t0,
            ts,
            geo0: TreeGeometry::with_root(t0, r0),
            geos: TreeGeometry::with_root(ts, rs),
        }
    }

    pub fn root0(&self) -> usize {
        self.geo0.view.root
    }

    pub fn roots(&self) -> usize {
        self.geos.view.root
    }

    pub fn tree(&self, sharp: bool) -> &'a Phylogeny {
        if sharp {
            self.ts
        } else {
            self.t0
        }
    }

    pub fn geo(&self, sharp: bool) -> &TreeGeometry<'a> {
        if sharp {
            &self.geos
        } else {
            &self.geo0
        }
    }

    pub fn to_sharp(&self, labels: &[Label], p: Point) -> Result<Point> {
        transfer(self.t0, labels, p, self.ts)
    }

    pub fn to_zero(&self, labels: &[Label], p: Point) -> Result<Point> {
        transfer(self.ts, labels, p, self.t0)
    }

    /// Vertex of `y` closest to the root of `T#`.
    pub fn top_sharp(&self, y: &RestrictedSubtree) -> usize {
        *y.vertices
            .iter()
            .min_by_key(|&&v| (self.geos.view.depth[v], v))
            .expect("subtrees are non-empty")
    }

    /// Whether the green vertex `c` maps to the top of its cluster's
    /// restriction to `T#`.
    pub fn is_consistent(&self, coloring: &Coloring, c: usize) -> bool {
        let Ok(labels) = coloring.cluster_labels(c) else {
            return false;
        };
        let Ok(p) = self.to_sharp(labels, Point::Vertex(c)) else {
            return false;
        };
        let Ok(ys) = restrict(self.ts, labels) else {
            return false;
        };
        p == Point::Vertex(self.top_sharp(&ys))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_newick;

    #[test]
    fn anchors_round_trip_on_the_same_tree() {
        let t = Phylogeny::homogeneous(3, 2, 10).unwrap();
        let labels: Vec<Label> = (0..8).collect();
        for v in 0..t.n_vertices() {
            let a = anchor_point(&t, &labels, Point::Vertex(v)).unwrap();
            assert_eq!(locate_anchor(&t, &a).unwrap(), Point::Vertex(v));
        }
        let e = t.edge_between(0, 1).unwrap();
        let p = Point::Interior {
            edge: e,
            from: 0,
            offset: 1,
        };
        let a = anchor_point(&t, &labels, p).unwrap();
        assert_eq!(locate_anchor(&t, &a).unwrap(), p);
    }

    #[test]
    fn off_subtree_points_are_refused() {
        let t = Phylogeny::homogeneous(2, 2, 10).unwrap();
        // The root is not on the path between leaves 1 and 2.
        assert!(anchor_point(&t, &[0, 1], Point::Vertex(0)).is_err());
        assert!(anchor_point(&t, &[0], Point::Vertex(t.leaf(1))).is_err());
    }

    #[test]
    fn transfer_follows_leaf_distances() {
        // The cherry (1,2) sits at different places but with equal internal
        // distances in both trees.
        let a = parse_newick("((1:0.2,2:0.2):0.1,3:0.3,4:0.3);", 10).unwrap();
        let b = parse_newick("((1:0.1,2:0.3):0.1,3:0.3,4:0.3);", 10).unwrap();
        let cherry = a.neighbors(a.leaf(0))[0].0;
        let p = transfer(&a, &[0, 1], Point::Vertex(cherry), &b).unwrap();
        let geo = TreeGeometry::new(&b);
        assert_eq!(geo.distance(p, Point::Vertex(b.leaf(0))), 2);
        assert_eq!(geo.distance(p, Point::Vertex(b.leaf(1))), 2);
    }
}
