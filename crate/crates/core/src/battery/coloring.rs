use super::overlap::Overlap;
use crate::error::{Error, Result};
use crate::tree::{
    restrict_vertices, tree_metric, Label, Phylogeny, Point, RestrictedSubtree, RootedView,
};
use serde::{Deserialize, Serialize};

/// Color of an ℓ-vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    /// Roots a cluster that matches its restriction in the other tree.
    Green,
    /// All but at most one ℓ-child green, but the combined cluster does not match.
    Red,
    /// At least two non-green ℓ-children.
    Yellow,
    /// Red vertex with a green child whose cluster overlaps another one.
    Black,
}

/// Bottom-up coloring of the ℓ-vertices of a rooted `T0` against `T#`.
#[derive(Debug, Clone)]
pub struct Coloring {
    t0: Phylogeny,
    view: RootedView,
    ell: usize,
    color: Vec<Option<Color>>,
    ell_children: Vec<Vec<usize>>,
    ell_parent: Vec<Option<usize>>,
    /// Leaf labels of the green cluster at each green vertex, and of the
    /// cluster it would have at each red vertex.
    cluster_labels: Vec<Vec<Label>>,
}

/// Colors every ℓ-vertex of `t0`, rooted at its designated root (or
/// [`Phylogeny::default_root`]), bottom-up.
pub fn color_vertices(t0: &Phylogeny, ts: &Phylogeny, ell: usize) -> Result<Coloring> {
    if ell == 0 {
        return Err(Error::param("ℓ must be positive"));
    }
    if t0.n_leaves() != ts.n_leaves() {
        return Err(Error::LeafSetMismatch(format!(
            "{} vs {} leaves",
            t0.n_leaves(),
            ts.n_leaves()
        )));
    }
    let root = t0.root().unwrap_or_else(|| t0.default_root());
    let view = t0.rooted_view(root);
    let nv = t0.n_vertices();
    let is_ell = |v: usize| t0.is_leaf(v) || view.depth[v].is_multiple_of(ell);

    let mut ell_children = vec![vec![]; nv];
    let mut ell_parent = vec![None; nv];
    for &x in &view.order {
        if !is_ell(x) || t0.is_leaf(x) {
            continue;
        }
        let mut stack: Vec<usize> = view.children[x].clone();
        while let Some(v) = stack.pop() {
            if is_ell(v) {
                ell_children[x].push(v);
                ell_parent[v] = Some(x);
            } else {
                stack.extend(view.children[v].iter().copied());
            }
        }
        ell_children[x].sort_unstable();
    }

    let m0 = tree_metric(t0);
    let ms = tree_metric(ts);
    let mut color = vec![None; nv];
    let mut cluster_labels: Vec<Vec<Label>> = vec![vec![]; nv];
    for &x in view.order.iter().rev() {
        if !is_ell(x) {
            continue;
        }
        if let Some(l) = t0.label(x) {
            color[x] = Some(Color::Green);
            cluster_labels[x] = vec![l];
            continue;
        }
        let non_green: usize = ell_children[x]
            .iter()
            .filter(|&&c| color[c] != Some(Color::Green))
            .map(|&c| child_weight(&view, ell, t0, x, c))
            .sum();
        if non_green > 1 {
            color[x] = Some(Color::Yellow);
            continue;
        }
        // Children clusters already match internally; only cross pairs can differ.
        let parts: Vec<&Vec<Label>> = ell_children[x]
            .iter()
            .filter(|&&c| color[c] == Some(Color::Green))
            .map(|&c| &cluster_labels[c])
            .collect();
        let mut matching = true;
        'outer: for (i, a) in parts.iter().enumerate() {
            for b in &parts[i + 1..] {
                for &p in a.iter() {
                    for &q in b.iter() {
                        if m0.units(p, q) != ms.units(p, q) {
                            matching = false;
                            break 'outer;
                        }
                    }
                }
            }
        }
        let mut labels: Vec<Label> = parts.into_iter().flatten().copied().collect();
        labels.sort_unstable();
        cluster_labels[x] = labels;
        color[x] = Some(if matching { Color::Green } else { Color::Red });
    }
    Ok(Coloring {
        t0: t0.clone(),
        view,
        ell,
        color,
        ell_children,
        ell_parent,
        cluster_labels,
    })
}

/// A leaf ℓ-child at graph distance `d < ℓ` stands for the `2^{ℓ−d}`
/// vertices a complete subtree would have at the next ℓ-level.
fn child_weight(view: &RootedView, ell: usize, t0: &Phylogeny, x: usize, c: usize) -> usize {
    if t0.is_leaf(c) {
        let d = view.depth[c] - view.depth[x];
        1 << (ell.saturating_sub(d)).min(30)
    } else {
        1
    }
}

impl Coloring {
    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn tree(&self) -> &Phylogeny {
        &self.t0
    }

    pub fn root(&self) -> usize {
        self.view.root
    }

    pub fn view(&self) -> &RootedView {
        &self.view
    }

    /// Color of `v`, or `None` if `v` is not an ℓ-vertex.
    pub fn color(&self, v: usize) -> Option<Color> {
        self.color[v]
    }

    pub fn is_green(&self, v: usize) -> bool {
        self.color[v] == Some(Color::Green)
    }

    pub fn ell_children(&self, x: usize) -> &[usize] {
        &self.ell_children[x]
    }

    pub fn ell_parent(&self, x: usize) -> Option<usize> {
        self.ell_parent[x]
    }

    /// Green ℓ-children of `x`, ordered by smallest leaf label.
    pub fn green_children(&self, x: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.ell_children[x]
            .iter()
            .copied()
            .filter(|&c| self.is_green(c))
            .collect();
        out.sort_by_key(|&c| self.cluster_labels[c][0]);
        out
    }

    /// Weighted count of the ℓ-children of `x`: a leaf at graph distance
    /// `d` counts `2^{ℓ−d}`.
    pub fn weighted_children(&self, x: usize) -> usize {
        self.ell_children[x]
            .iter()
            .map(|&c| child_weight(&self.view, self.ell, &self.t0, x, c))
            .sum()
    }

    pub fn count(&self, c: Color) -> usize {
        self.color.iter().filter(|&&x| x == Some(c)).count()
    }

    /// ℓ-vertices of the given color, in preorder.
    pub fn vertices_with(&self, c: Color) -> Vec<usize> {
        self.view
            .order
            .iter()
            .copied()
            .filter(|&v| self.color[v] == Some(c))
            .collect()
    }

    /// Leaf labels of the green cluster at `x`.
    pub fn cluster_labels(&self, x: usize) -> Result<&[Label]> {
        if !self.is_green(x) {
            return Err(Error::NotGreen(x));
        }
        Ok(&self.cluster_labels[x])
    }

    /// The green cluster rooted at `x`: every path from `x` down to a leaf
    /// that only passes green ℓ-vertices.
    pub fn g_cluster(&self, x: usize) -> Result<RestrictedSubtree> {
        let labels = self.cluster_labels(x)?;
        let mut vs = vec![x];
        vs.extend(labels.iter().map(|&l| self.t0.leaf(l)));
        Ok(restrict_vertices(&self.t0, &vs)?.with_root(Point::Vertex(x)))
    }

    /// Roots of the maximal green clusters (green vertices whose ℓ-parent
    /// is not green), ordered by smallest leaf label.
    pub fn maximal_clusters(&self) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.color.len())
            .filter(|&v| self.is_green(v) && self.ell_parent[v].is_none_or(|p| !self.is_green(p)))
            .collect();
        out.sort_by_key(|&v| self.cluster_labels[v][0]);
        out
    }

    /// Green ℓ-vertices below `x` (inclusive) inside the green cluster of `x`.
    pub fn green_descendants(&self, x: usize) -> Vec<usize> {
        let mut out = vec![];
        if !self.is_green(x) {
            return out;
        }
        let mut stack = vec![x];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(
                self.ell_children[v]
                    .iter()
                    .copied()
                    .filter(|&c| self.is_green(c)),
            );
        }
        out
    }

    /// Recolors black every red vertex with a green child whose maximal
    /// cluster shares an edge of `T#` with another maximal cluster.
    pub fn recolor_black(&self, overlap: &Overlap) -> Coloring {
        let mut out = self.clone();
        for v in 0..self.color.len() {
            if self.color[v] == Some(Color::Red)
                && self
                    .green_children(v)
                    .iter()
                    .any(|c| overlap.is_overlapping(*c))
            {
                out.color[v] = Some(Color::Black);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_trees_are_all_green() {
        let t = Phylogeny::homogeneous(4, 2, 10).unwrap();
        let c = color_vertices(&t, &t, 2).unwrap();
        assert_eq!(c.count(Color::Red), 0);
        assert_eq!(c.count(Color::Yellow), 0);
        // Root, four depth-2 vertices and sixteen leaves.
        assert_eq!(c.count(Color::Green), 21);
        assert_eq!(c.maximal_clusters(), vec![c.root()]);
        let whole = c.g_cluster(c.root()).unwrap();
        assert_eq!(whole.edges.len(), t.edges().len());
    }

    #[test]
    fn swap_near_the_leaves_creates_red_vertices() {
        // Leaves at depth 4 with ℓ = 2; swapping leaves 1 and 5 puts the
        // change one level above the leaves.
        let t0 = Phylogeny::homogeneous(4, 2, 10).unwrap();
        let ts = t0.swap_subtrees(t0.leaf(0), t0.leaf(4)).unwrap();
        let c = color_vertices(&t0, &ts, 2).unwrap();
        let red = c.vertices_with(Color::Red);
        assert_eq!(red.len(), 2);
        for &x in &red {
            // The would-be cluster spans four leaves including a swapped one.
            let l = &c.cluster_labels[x];
            assert_eq!(l.len(), 4);
            assert!(l.contains(&0) || l.contains(&4));
        }
        assert!(c.count(Color::Yellow) <= c.count(Color::Red));
        assert!(matches!(c.g_cluster(red[0]), Err(Error::NotGreen(_))));
    }

    #[test]
    fn leaf_cluster_is_a_single_vertex() {
        let t = Phylogeny::homogeneous(2, 2, 10).unwrap();
        let c = color_vertices(&t, &t, 2).unwrap();
        let y = c.g_cluster(t.leaf(3)).unwrap();
        assert!(y.edges.is_empty());
        assert_eq!(y.labels, vec![3]);
    }

    #[test]
    fn clusters_are_dense() {
        let t0 = Phylogeny::homogeneous(5, 2, 10).unwrap();
        let ts = t0.swap_subtrees(t0.leaf(3), t0.leaf(20)).unwrap();
        let c = color_vertices(&t0, &ts, 2).unwrap();
        for x in c.vertices_with(Color::Green) {
            let y = c.g_cluster(x).unwrap();
            assert!(crate::tree::is_dense(&t0, &y, 2, 1).unwrap());
        }
    }

    #[test]
    fn short_leaves_are_weighted() {
        // Leaf 3 sits one step below the root; with ℓ = 2 it counts twice.
        let t = crate::tree::parse_newick("((1:0.1,2:0.1):0.1,3:0.1);", 10).unwrap();
        let c = color_vertices(&t, &t, 2).unwrap();
        let root = c.root();
        assert_eq!(c.ell_children(root).len(), 3);
        assert!(c.ell_children(root).contains(&t.leaf(2)));
        assert_eq!(c.weighted_children(root), 4);
    }
}
