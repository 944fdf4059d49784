use super::{Label, Phylogeny, Point, RestrictedSubtree};
use crate::error::{Error, Result};
use std::collections::HashSet;

/// A node of a [`RootedTree`].
#[derive(Debug, Clone, PartialEq)]
pub struct RNode {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Weight of the edge to the parent, in grid units.
    pub units: u64,
    pub label: Option<Label>,
    /// Vertex of the source phylogeny, if the node is not a split point.
    pub vertex: Option<usize>,
}

/// A compact rooted tree extracted from a phylogeny or one of its
/// restricted subtrees. Node 0 is the root and nodes are in preorder.
#[derive(Debug, Clone, PartialEq)]
pub struct RootedTree {
    pub upsilon: u64,
    pub nodes: Vec<RNode>,
}

impl RootedTree {
    /// The whole phylogeny rooted at vertex `root`.
    pub fn from_phylogeny(t: &Phylogeny, root: usize) -> Self {
        let edges: Vec<usize> = (0..t.edges().len()).collect();
        Self::build(t, &edges, Point::Vertex(root))
    }

    /// A restricted subtree rooted at its root point. An interior root
    /// splits its edge.
    pub fn from_subtree(t: &Phylogeny, y: &RestrictedSubtree) -> Result<Self> {
        let root = y.root.ok_or_else(|| Error::param("subtree has no root"))?;
        match root {
            Point::Vertex(v) => {
                if !y.vertices.contains(&v) {
                    return Err(Error::param("root vertex is not in the subtree"));
                }
            }
            Point::Interior { edge, .. } => {
                if !y.edges.contains(&edge) {
                    return Err(Error::param("root edge is not in the subtree"));
                }
            }
        }
        Ok(Self::build(t, &y.edges, root))
    }

    fn build(t: &Phylogeny, edges: &[usize], root: Point) -> Self {
        let allowed: HashSet<usize> = edges.iter().copied().collect();
        let mut nodes = vec![];
        // (vertex, parent node, came-from vertex, units)
        let mut stack: Vec<(usize, usize, usize, u64)> = vec![];
        match root {
            Point::Vertex(v) => {
                nodes.push(RNode {
                    parent: None,
                    children: vec![],
                    units: 0,
                    label: t.label(v),
                    vertex: Some(v),
                });
                for &(w, e) in t.neighbors(v).iter().rev() {
                    if allowed.contains(&e) {
                        stack.push((w, 0, v, t.units(e)));
                    }
                }
            }
            Point::Interior { edge, from, offset } => {
                nodes.push(RNode {
                    parent: None,
                    children: vec![],
                    units: 0,
                    label: None,
                    vertex: None,
                });
                let other = t.edge(edge).other(from);
                let len = t.units(edge);
                stack.push((other, 0, from, len - offset));
                stack.push((from, 0, other, offset));
            }
        }
        while let Some((v, parent, came, units)) = stack.pop() {
            let id = nodes.len();
            nodes.push(RNode {
                parent: Some(parent),
                children: vec![],
                units,
                label: t.label(v),
                vertex: Some(v),
            });
            nodes[parent].children.push(id);
            for &(w, e) in t.neighbors(v).iter().rev() {
                if w != came && allowed.contains(&e) {
                    stack.push((w, id, v, t.units(e)));
                }
            }
        }
        RootedTree {
            upsilon: t.upsilon(),
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Labels of labelled nodes, sorted.
    pub fn labels(&self) -> Vec<Label> {
        let mut l: Vec<Label> = self.nodes.iter().filter_map(|n| n.label).collect();
        l.sort_unstable();
        l
    }

    /// Graph depth of every node.
    pub fn depths(&self) -> Vec<usize> {
        let mut d = vec![0; self.nodes.len()];
        for i in 1..self.nodes.len() {
            d[i] = d[self.nodes[i].parent.unwrap()] + 1;
        }
        d
    }

    /// Weighted depth of every node in units.
    pub fn unit_depths(&self) -> Vec<u64> {
        let mut d = vec![0; self.nodes.len()];
        for i in 1..self.nodes.len() {
            d[i] = d[self.nodes[i].parent.unwrap()] + self.nodes[i].units;
        }
        d
    }

    /// Copy with every non-root node of exactly one child contracted into
    /// its child, summing edge weights.
    pub fn suppressed(&self) -> Self {
        let mut nodes: Vec<RNode> = vec![];
        fn rec(
            src: &RootedTree,
            v: usize,
            parent: Option<usize>,
            units: u64,
            out: &mut Vec<RNode>,
        ) {
            let mut v = v;
            let mut units = units;
            if parent.is_some() {
                while src.nodes[v].children.len() == 1 && src.nodes[v].label.is_none() {
                    v = src.nodes[v].children[0];
                    units += src.nodes[v].units;
                }
            }
            let id = out.len();
            out.push(RNode {
                parent,
                children: vec![],
                units,
                label: src.nodes[v].label,
                vertex: src.nodes[v].vertex,
            });
            if let Some(p) = parent {
                out[p].children.push(id);
            }
            for &c in &src.nodes[v].children {
                rec(src, c, Some(id), src.nodes[c].units, out);
            }
        }
        rec(self, 0, None, 0, &mut nodes);
        RootedTree {
            upsilon: self.upsilon,
            nodes,
        }
    }

    /// Whether the tree is `(ℓ, ℘)`-dense: after padding every childless
    /// node with a complete binary tree down to the smallest multiple of ℓ
    /// exceeding the height, level `iℓ` holds at least `(2^ℓ − ℘)^i` nodes.
    pub fn is_dense(&self, ell: usize, wp: u32) -> bool {
        if ell == 0 {
            return false;
        }
        let depth = self.depths();
        let height = depth.iter().copied().max().unwrap_or(0);
        let padded = (height / ell + 1) * ell;
        let base = (1u64 << ell.min(62)) as f64 - wp as f64;
        let mut i = 0;
        while i * ell < padded {
            let level = i * ell;
            let mut count = 0.0f64;
            for (v, node) in self.nodes.iter().enumerate() {
                if depth[v] == level {
                    count += 1.0;
                } else if depth[v] < level && node.children.is_empty() {
                    count += 2f64.powi((level - depth[v]) as i32);
                }
            }
            if count < base.powi(i as i32) {
                return false;
            }
            i += 1;
        }
        true
    }

    /// Canonical string of the rooted metric tree (degree-2 nodes
    /// contracted), for comparing rooted subtrees across phylogenies.
    pub fn canonical(&self) -> String {
        let s = self.suppressed();
        fn rec(t: &RootedTree, v: usize) -> (usize, String) {
            let n = &t.nodes[v];
            if n.children.is_empty() {
                let l = n.label.map(|l| l + 1).unwrap_or(0);
                return (n.label.unwrap_or(usize::MAX), format!("{l}"));
            }
            let mut parts: Vec<(usize, String)> = n
                .children
                .iter()
                .map(|&c| {
                    let (m, s) = rec(t, c);
                    (m, format!("{s}:{}", t.nodes[c].units))
                })
                .collect();
            parts.sort();
            let min = parts[0].0.min(n.label.unwrap_or(usize::MAX));
            let inner: Vec<String> = parts.into_iter().map(|p| p.1).collect();
            (min, format!("({})", inner.join(",")))
        }
        rec(&s, 0).1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{restrict, Phylogeny};

    #[test]
    fn homogeneous_is_dense_for_wp_zero() {
        let t = Phylogeny::homogeneous(4, 1, 1).unwrap();
        let r = RootedTree::from_phylogeny(&t, 0);
        assert!(r.is_dense(2, 0));
        assert!(r.is_dense(3, 0));
    }

    #[test]
    fn single_vertex_is_dense() {
        let r = RootedTree {
            upsilon: 1,
            nodes: vec![RNode {
                parent: None,
                children: vec![],
                units: 0,
                label: Some(0),
                vertex: Some(0),
            }],
        };
        assert!(r.is_dense(2, 1));
    }

    #[test]
    fn path_is_not_dense() {
        let t = Phylogeny::homogeneous(3, 1, 1).unwrap();
        let mut y = restrict(&t, &[0, 7]).unwrap();
        y.root = Some(Point::Vertex(0));
        let r = RootedTree::from_subtree(&t, &y).unwrap();
        assert!(!r.is_dense(2, 1));
        assert_eq!(r.suppressed().len(), 3);
    }

    #[test]
    fn interior_root_splits_edge() {
        let t = Phylogeny::homogeneous(1, 4, 1).unwrap();
        let mut y = restrict(&t, &[0, 1]).unwrap();
        let e = t.edge_between(0, t.leaf(0)).unwrap();
        y.root = Some(Point::Interior {
            edge: e,
            from: 0,
            offset: 1,
        });
        let r = RootedTree::from_subtree(&t, &y).unwrap();
        let d = r.unit_depths();
        let leaf_depths: Vec<u64> = r
            .nodes
            .iter()
            .zip(&d)
            .filter(|(n, _)| n.label.is_some())
            .map(|(_, &x)| x)
            .collect();
        assert_eq!(leaf_depths.iter().sum::<u64>(), 8);
        assert!(leaf_depths.contains(&3));
    }
}
