use super::coloring::Coloring;
use super::pair::TreePair;
use crate::error::Result;
use crate::tree::{restrict, Label, Phylogeny, Point, RestrictedSubtree};
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::f64::consts::FRAC_1_SQRT_2;

/// A maximal green cluster of `T0` next to its restriction in `T#`.
#[derive(Debug, Clone)]
pub struct ClusterMatch {
    /// Root of the green cluster in `T0`.
    pub root: usize,
    pub labels: Vec<Label>,
    /// Subtree of `T0` spanned by the labels.
    pub zero: RestrictedSubtree,
    /// Subtree of `T#` spanned by the labels.
    pub sharp: RestrictedSubtree,
    /// Edges of `T#` on the image of each edge of `zero`.
    pub paths: BTreeMap<usize, Vec<usize>>,
    /// Vertex of `zero` facing the root of `T#`; the cluster is rooted here
    /// for the shallowness sums.
    pub zero_root: usize,
    /// Edges of `zero` whose image meets an overlapping `T#` edge.
    pub overlap_edges: Vec<usize>,
    /// Endpoints of `overlap_edges`.
    pub overlap_vertices: Vec<usize>,
    /// Endpoints of every edge of `zero`.
    pub ends: BTreeMap<usize, (usize, usize)>,
    parent: HashMap<usize, usize>,
}

/// Edges of `T#` shared by the restrictions of several maximal green
/// clusters, and the cluster edges of `T0` that map onto them.
#[derive(Debug, Clone, Default)]
pub struct Overlap {
    pub clusters: Vec<ClusterMatch>,
    /// Number of cluster restrictions containing each `T#` edge.
    pub multiplicity: BTreeMap<usize, usize>,
    /// `T#` edges of multiplicity at least two.
    pub o_sharp: BTreeSet<usize>,
    /// `T0` edges whose image meets `o_sharp`.
    pub o_zero: BTreeSet<usize>,
}

/// A shallow overlap edge whose image shares a `T#` edge with a shallow
/// overlap edge of another cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UsefulEdge {
    pub cluster: usize,
    pub edge: usize,
    pub partner_cluster: usize,
    pub partner_edge: usize,
    /// Smallest `T#` edge on both images.
    pub shared: usize,
}

/// Matches every maximal green cluster into `T#` and collects the overlap.
pub fn compute_overlap(t0: &Phylogeny, ts: &Phylogeny, coloring: &Coloring) -> Result<Overlap> {
    let pair = TreePair::new(t0, ts);
    let mut clusters = vec![];
    for root in coloring.maximal_clusters() {
        clusters.push(match_cluster(&pair, root, coloring.cluster_labels(root)?)?);
    }
    let mut multiplicity = BTreeMap::new();
    for c in &clusters {
        for &e in &c.sharp.edges {
            *multiplicity.entry(e).or_insert(0) += 1;
        }
    }
    let o_sharp: BTreeSet<usize> = multiplicity
        .iter()
        .filter(|(_, &m)| m >= 2)
        .map(|(&e, _)| e)
        .collect();
    let mut o_zero = BTreeSet::new();
    for c in &mut clusters {
        let hit: Vec<usize> = c
            .paths
            .iter()
            .filter(|(_, p)| p.iter().any(|e| o_sharp.contains(e)))
            .map(|(&e, _)| e)
            .collect();
        let mut w = BTreeSet::new();
        for e in &hit {
            let (a, b) = c.ends[e];
            w.insert(a);
            w.insert(b);
        }
        o_zero.extend(hit.iter().copied());
        c.overlap_edges = hit;
        c.overlap_vertices = w.into_iter().collect();
    }
    Ok(Overlap {
        clusters,
        multiplicity,
        o_sharp,
        o_zero,
    })
}

fn match_cluster(pair: &TreePair, root: usize, labels: &[Label]) -> Result<ClusterMatch> {
    let zero = restrict(pair.t0, labels)?;
    let sharp = restrict(pair.ts, labels)?;
    let mut image: HashMap<usize, Point> = HashMap::new();
    for &v in &zero.vertices {
        image.insert(v, pair.to_sharp(labels, Point::Vertex(v))?);
    }
    let mut paths = BTreeMap::new();
    let mut ends = BTreeMap::new();
    for &e in &zero.edges {
        let edge = pair.t0.edge(e);
        paths.insert(e, pair.geos.path_edges(image[&edge.a], image[&edge.b]));
        ends.insert(e, (edge.a, edge.b));
    }
    let top = pair.top_sharp(&sharp);
    let zero_root = match pair.to_zero(labels, Point::Vertex(top))? {
        Point::Vertex(v) => v,
        Point::Interior { edge, from, offset } => {
            let other = pair.t0.edge(edge).other(from);
            let len = pair.t0.units(edge);
            let depth = &pair.geo0.view.depth;
            if 2 * offset < len || (2 * offset == len && depth[from] <= depth[other]) {
                from
            } else {
                other
            }
        }
    };
    let allowed: BTreeSet<usize> = zero.edges.iter().copied().collect();
    let mut parent = HashMap::new();
    let mut queue = VecDeque::from([zero_root]);
    let mut seen = BTreeSet::from([zero_root]);
    while let Some(v) = queue.pop_front() {
        for &(w, e) in pair.t0.neighbors(v) {
            if allowed.contains(&e) && seen.insert(w) {
                parent.insert(w, v);
                queue.push_back(w);
            }
        }
    }
    Ok(ClusterMatch {
        root,
        labels: labels.to_vec(),
        zero,
        sharp,
        paths,
        zero_root,
        overlap_edges: vec![],
        overlap_vertices: vec![],
        ends,
        parent,
    })
}

/// Threshold on the shallowness sum for parameter `beta`.
pub fn shallow_threshold(beta: f64) -> f64 {
    beta / (1.0 - FRAC_1_SQRT_2)
}

/// `Σ_{y ∈ marked below x} 2^{−d(x,y)/2}` for every ancestor `x` of a
/// marked vertex, given parent links of a rooted tree.
pub fn shallow_sums_in(parent: &HashMap<usize, usize>, marked: &[usize]) -> BTreeMap<usize, f64> {
    let mut sums = BTreeMap::new();
    for &y in marked {
        let mut cur = y;
        let mut d = 0i32;
        loop {
            *sums.entry(cur).or_insert(0.0) += 2f64.powf(-d as f64 / 2.0);
            match parent.get(&cur) {
                Some(&p) => {
                    cur = p;
                    d += 1;
                }
                None => break,
            }
        }
    }
    sums
}

impl ClusterMatch {
    /// Parent of `v` in the cluster rooted at `zero_root`.
    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent.get(&v).copied()
    }

    /// Children of `v` in the cluster rooted at `zero_root`, ascending.
    pub fn children(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .parent
            .iter()
            .filter(|(_, &p)| p == v)
            .map(|(&c, _)| c)
            .collect();
        out.sort_unstable();
        out
    }

    /// Shallowness sums over the overlap vertices below each cluster vertex.
    pub fn shallow_sums(&self) -> BTreeMap<usize, f64> {
        shallow_sums_in(&self.parent, &self.overlap_vertices)
    }
}

impl Overlap {
    /// Whether the maximal cluster rooted at `root` shares a `T#` edge with
    /// another one.
    pub fn is_overlapping(&self, root: usize) -> bool {
        self.clusters
            .iter()
            .any(|c| c.root == root && c.sharp.edges.iter().any(|e| self.o_sharp.contains(e)))
    }

    pub fn is_empty(&self) -> bool {
        self.o_sharp.is_empty()
    }
}

/// Overlap vertices of cluster `cluster` whose shallowness sum is below
/// the threshold for `beta`.
pub fn shallow_vertices(overlap: &Overlap, cluster: usize, beta: f64) -> BTreeSet<usize> {
    let c = &overlap.clusters[cluster];
    let sums = c.shallow_sums();
    let limit = shallow_threshold(beta);
    c.overlap_vertices
        .iter()
        .copied()
        .filter(|v| sums.get(v).copied().unwrap_or(0.0) < limit)
        .collect()
}

/// Shallow overlap edges (both endpoints shallow) whose image meets the
/// image of a shallow overlap edge from a different cluster.
pub fn useful_edges(overlap: &Overlap, beta: f64) -> Vec<UsefulEdge> {
    let shallow: Vec<Vec<usize>> = (0..overlap.clusters.len())
        .map(|i| {
            let c = &overlap.clusters[i];
            let sv = shallow_vertices(overlap, i, beta);
            c.overlap_edges
                .iter()
                .copied()
                .filter(|e| {
                    let (a, b) = c.ends[e];
                    sv.contains(&a) && sv.contains(&b)
                })
                .collect()
        })
        .collect();
    let mut out = vec![];
    for (i, edges) in shallow.iter().enumerate() {
        for &e in edges {
            let pe: BTreeSet<usize> = overlap.clusters[i].paths[&e].iter().copied().collect();
            let mut best: Option<UsefulEdge> = None;
            for (j, others) in shallow.iter().enumerate() {
                if j == i {
                    continue;
                }
                for &f in others {
                    if let Some(&shared) = overlap.clusters[j].paths[&f]
                        .iter()
                        .filter(|x| pe.contains(x))
                        .min()
                    {
                        let cand = UsefulEdge {
                            cluster: i,
                            edge: e,
                            partner_cluster: j,
                            partner_edge: f,
                            shared,
                        };
                        if best.is_none_or(|b| {
                            (j, f, shared) < (b.partner_cluster, b.partner_edge, b.shared)
                        }) {
                            best = Some(cand);
                        }
                    }
                }
            }
            out.extend(best);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::battery::coloring::color_vertices;

    #[test]
    fn identical_trees_have_no_overlap() {
        let t = Phylogeny::homogeneous(4, 2, 10).unwrap();
        let c = color_vertices(&t, &t, 2).unwrap();
        let o = compute_overlap(&t, &t, &c).unwrap();
        assert!(o.is_empty());
        assert!(o.o_zero.is_empty());
        assert!(useful_edges(&o, 2.0).is_empty());
    }

    #[test]
    fn a_lone_marked_vertex_is_shallow() {
        let sums = shallow_sums_in(&HashMap::new(), &[7]);
        assert_eq!(sums[&7], 1.0);
        assert!(sums[&7] < shallow_threshold(2.0));
    }

    #[test]
    fn deep_vertex_over_a_complete_overlap_is_not_shallow() {
        // Heap-indexed complete binary tree of height h, every vertex marked:
        // the root sum is Σ_d 2^d 2^{−d/2} = Σ_d 2^{d/2}.
        let h = 6;
        let size = (1usize << (h + 1)) - 1;
        let parent: HashMap<usize, usize> = (1..size).map(|v| (v, (v - 1) / 2)).collect();
        let all: Vec<usize> = (0..size).collect();
        let sums = shallow_sums_in(&parent, &all);
        let expected: f64 = (0..=h).map(|d| 2f64.powf(d as f64 / 2.0)).sum();
        assert!((sums[&0] - expected).abs() < 1e-9);
        assert!(sums[&0] >= shallow_threshold(2.0));
        // A leaf only sees itself.
        assert_eq!(sums[&(size - 1)], 1.0);
    }
}
