use super::coloring::{Color, Coloring};
use super::overlap::{useful_edges, ClusterMatch, Overlap};
use super::pair::TreePair;
use super::validate::pair_failures;
use super::BatteryParams;
use crate::error::{Error, Result};
use crate::tree::{
    is_cohanging, quartet_topology, restrict, restrict_vertices, Label, Phylogeny, Point, Quartet,
    RestrictedSubtree,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, VecDeque};

/// Cap on candidate pairs tried when a constructed panel fails its checks.
pub const FALLBACK_LIMIT: usize = 256;

/// How far apart the two roots of a panel are, relative to `Γ` and `γ_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Proximity {
    /// Graph distance at most `Γ`.
    Proximal,
    /// Graph distance in `(Γ, γ_t]`.
    SemiProximal,
    /// Graph distance above `γ_t`.
    NonProximal,
}

/// Classifies a graph distance between test roots.
pub fn classify(graph_distance: usize, params: &BatteryParams) -> Proximity {
    if graph_distance <= params.big_gamma {
        Proximity::Proximal
    } else if graph_distance <= params.gamma_t {
        Proximity::SemiProximal
    } else {
        Proximity::NonProximal
    }
}

/// Which construction produced a panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PanelSource {
    Homogeneous,
    /// Co-hanging pair of green children.
    CoHanging,
    /// Non-co-hanging pair whose `T#` roots are far apart.
    Far,
    /// Close non-co-hanging pair with different root distances.
    CloseUnequal,
    /// Close non-co-hanging pair with equal root distances.
    CloseEqual,
    /// Witness pair around a useful overlap edge.
    Overlap,
    /// Nearest passing pair after the construction failed its checks.
    Fallback,
}

/// One test: two rooted subtrees in each tree and the sign of the gap
/// between their root distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestPanel {
    pub y_zero: RestrictedSubtree,
    pub z_zero: RestrictedSubtree,
    pub y_sharp: RestrictedSubtree,
    pub z_sharp: RestrictedSubtree,
    /// +1 iff the roots are closer in `T0` than in `T#`.
    pub alpha: i8,
    /// Root distance in `T0`, in units.
    pub d_zero: u64,
    /// Root distance in `T#`, in units.
    pub d_sharp: u64,
    pub proximity_zero: Proximity,
    pub proximity_sharp: Proximity,
    pub source: PanelSource,
}

impl TestPanel {
    /// `(y, z)` roots in `T0` or `T#`.
    pub fn roots(&self, sharp: bool) -> (Point, Point) {
        let (y, z) = if sharp {
            (&self.y_sharp, &self.z_sharp)
        } else {
            (&self.y_zero, &self.z_zero)
        };
        (
            y.root.expect("panel subtrees are rooted"),
            z.root.expect("panel subtrees are rooted"),
        )
    }

    pub fn gap(&self) -> u64 {
        self.d_zero.abs_diff(self.d_sharp)
    }
}

/// Panels from one construction, with the cases it had to give up on.
#[derive(Debug, Clone, Default)]
pub struct PanelBuild {
    pub panels: Vec<TestPanel>,
    pub skipped: Vec<String>,
}

/// Assembles a panel from its four rooted subtrees.
pub(crate) fn assemble(
    pair: &TreePair,
    params: &BatteryParams,
    subtrees: [RestrictedSubtree; 4],
    source: PanelSource,
) -> Result<TestPanel> {
    let [y_zero, z_zero, y_sharp, z_sharp] = subtrees;
    let root = |y: &RestrictedSubtree| {
        y.root
            .ok_or_else(|| Error::param("panel subtree has no root"))
    };
    let (y0, z0, ys, zs) = (
        root(&y_zero)?,
        root(&z_zero)?,
        root(&y_sharp)?,
        root(&z_sharp)?,
    );
    let d_zero = pair.geo0.distance(y0, z0);
    let d_sharp = pair.geos.distance(ys, zs);
    Ok(TestPanel {
        alpha: if d_zero < d_sharp { 1 } else { -1 },
        d_zero,
        d_sharp,
        proximity_zero: classify(pair.geo0.graph_distance(y0, z0), params),
        proximity_sharp: classify(pair.geos.graph_distance(ys, zs), params),
        source,
        y_zero,
        z_zero,
        y_sharp,
        z_sharp,
    })
}

fn sharp_side(pair: &TreePair, coloring: &Coloring, c: usize) -> Result<RestrictedSubtree> {
    let labels = coloring.cluster_labels(c)?;
    let root = pair.to_sharp(labels, Point::Vertex(c))?;
    Ok(restrict(pair.ts, labels)?.with_root(root))
}

/// Panel on the green clusters at `y` and `z`, rooted in `T#` at the
/// images of `y` and `z`.
pub(crate) fn make_panel(
    pair: &TreePair,
    coloring: &Coloring,
    params: &BatteryParams,
    y: usize,
    z: usize,
    source: PanelSource,
) -> Result<TestPanel> {
    let subtrees = [
        coloring.g_cluster(y)?,
        coloring.g_cluster(z)?,
        sharp_side(pair, coloring, y)?,
        sharp_side(pair, coloring, z)?,
    ];
    assemble(pair, params, subtrees, source)
}

fn passes(pair: &TreePair, params: &BatteryParams, p: &TestPanel) -> bool {
    pair_failures(pair, params, p).is_empty()
}

/// One panel per red vertex of a homogeneous pair, from a pair of its green
/// ℓ-children whose distance differs between the trees. Pairs are tried in
/// order of their smallest leaf labels; the first one passing every pair
/// check wins, then the first one with a gap.
pub fn build_panels_homogeneous(
    t0: &Phylogeny,
    ts: &Phylogeny,
    coloring: &Coloring,
    params: &BatteryParams,
) -> Result<Vec<TestPanel>> {
    let pair = TreePair::new(t0, ts);
    let mut out = vec![];
    for x in coloring.vertices_with(Color::Red) {
        let gc = coloring.green_children(x);
        let mut with_gap = None;
        let mut chosen = None;
        'pairs: for (i, &y) in gc.iter().enumerate() {
            for &z in &gc[i + 1..] {
                let Ok(p) = make_panel(&pair, coloring, params, y, z, PanelSource::Homogeneous)
                else {
                    continue;
                };
                if p.gap() == 0 {
                    continue;
                }
                if passes(&pair, params, &p) {
                    chosen = Some(p);
                    break 'pairs;
                }
                with_gap.get_or_insert(p);
            }
        }
        out.push(chosen.or(with_gap).ok_or(Error::NoTestPair(x))?);
    }
    Ok(out)
}

/// Green vertices of the cluster of `top`, below `start` (inclusive when
/// `include_start`), not below `exclude`, that map to the top of their
/// restriction in `T#`; nearest first, ties by smallest label.
fn consistent_below(
    pair: &TreePair,
    coloring: &Coloring,
    top: usize,
    start: usize,
    exclude: Option<usize>,
    include_start: bool,
) -> Option<usize> {
    let view = coloring.view();
    let mut cands: Vec<usize> = coloring
        .green_descendants(top)
        .into_iter()
        .filter(|&g| view.is_ancestor(start, g) && (include_start || g != start))
        .filter(|&g| exclude.is_none_or(|x| !view.is_ancestor(x, g)))
        .collect();
    cands.sort_by_key(|&g| {
        (
            view.depth[g],
            coloring
                .cluster_labels(g)
                .map(|l| l[0])
                .unwrap_or(usize::MAX),
        )
    });
    cands.into_iter().find(|&g| pair.is_consistent(coloring, g))
}

/// Deeper endpoint of the edge holding `p`, or `p` itself.
fn vertex_below(pair: &TreePair, p: Point) -> usize {
    match p {
        Point::Vertex(v) => v,
        Point::Interior { edge, from, .. } => {
            let other = pair.t0.edge(edge).other(from);
            if pair.geo0.view.depth[other] > pair.geo0.view.depth[from] {
                other
            } else {
                from
            }
        }
    }
}

/// Walks from `start` toward `end` along `edges` (ordered) while the edges
/// lie in `within`; returns the last point reached.
fn leading_end(
    pair: &TreePair,
    start: Point,
    edges: &[usize],
    within: &RestrictedSubtree,
) -> Point {
    let mut cur = start;
    for &e in edges {
        if within.edges.binary_search(&e).is_err() {
            break;
        }
        let edge = pair.ts.edge(e);
        let (da, db) = (
            pair.geos.distance(start, Point::Vertex(edge.a)),
            pair.geos.distance(start, Point::Vertex(edge.b)),
        );
        cur = Point::Vertex(if da > db { edge.a } else { edge.b });
    }
    cur
}

/// Nearest passing pair of green vertices, one from each cluster.
fn fallback(
    pair: &TreePair,
    coloring: &Coloring,
    params: &BatteryParams,
    groups: &[(usize, usize)],
) -> Option<TestPanel> {
    let view = coloring.view();
    let mut cands = vec![];
    for &(a, b) in groups {
        for y in coloring.green_descendants(a) {
            for z in coloring.green_descendants(b) {
                cands.push((view.graph_distance(y, z), y.min(z), y.max(z)));
            }
        }
    }
    cands.sort_unstable();
    cands.dedup();
    cands
        .into_iter()
        .take(FALLBACK_LIMIT)
        .find_map(|(_, y, z)| {
            let p = make_panel(pair, coloring, params, y, z, PanelSource::Fallback).ok()?;
            passes(pair, params, &p).then_some(p)
        })
}

fn all_pairs(gc: &[usize]) -> Vec<(usize, usize)> {
    let mut out = vec![];
    for (i, &y) in gc.iter().enumerate() {
        for &z in &gc[i + 1..] {
            out.push((y, z));
        }
    }
    out
}

fn label_of(coloring: &Coloring, v: usize) -> Label {
    coloring.cluster_labels(v).map(|l| l[0] + 1).unwrap_or(0)
}

/// One panel per remaining red vertex of a general pair after black
/// recoloring. A co-hanging pair of green children is re-rooted to
/// consistent green vertices; otherwise the first non-co-hanging pair is
/// moved off the shared path, or to where the path leaves the subtrees when
/// the pair is close with equal distances. Constructions that fail their
/// checks fall back to the nearest passing pair.
pub fn build_panels_many_r(
    t0: &Phylogeny,
    ts: &Phylogeny,
    coloring: &Coloring,
    params: &BatteryParams,
) -> Result<PanelBuild> {
    let pair = TreePair::new(t0, ts);
    let g_units = t0.max_units().max(ts.max_units());
    let mut build = PanelBuild::default();
    for x in coloring.vertices_with(Color::Red) {
        let pairs = all_pairs(&coloring.green_children(x));
        if pairs.is_empty() {
            build
                .skipped
                .push(format!("red vertex {x} has fewer than two green children"));
            continue;
        }
        let mut non_cohanging = None;
        for &(y, z) in &pairs {
            let Ok(p) = make_panel(&pair, coloring, params, y, z, PanelSource::CoHanging) else {
                continue;
            };
            if is_cohanging(ts, &p.y_sharp, &p.z_sharp) != Ok(true) {
                non_cohanging = Some((y, z, p));
                break;
            }
        }
        let constructed = match non_cohanging {
            None => pairs
                .iter()
                .find(|&&(y, z)| {
                    make_panel(&pair, coloring, params, y, z, PanelSource::CoHanging)
                        .is_ok_and(|p| p.gap() > 0)
                })
                .and_then(|&(y, z)| {
                    let y2 = consistent_below(&pair, coloring, y, y, None, true)?;
                    let z2 = consistent_below(&pair, coloring, z, z, None, true)?;
                    make_panel(&pair, coloring, params, y2, z2, PanelSource::CoHanging).ok()
                }),
            Some((y, z, p)) => {
                let (ry, rz) = p.roots(true);
                let path = pair.geos.path_edges(ry, rz);
                let rev: Vec<usize> = path.iter().rev().copied().collect();
                let v_sharp = leading_end(&pair, ry, &path, &p.y_sharp);
                let w_sharp = leading_end(&pair, rz, &rev, &p.z_sharp);
                let far = pair.geos.distance(ry, rz) > 2 * g_units * params.ell as u64;
                let (yl, zl) = (coloring.cluster_labels(y)?, coloring.cluster_labels(z)?);
                let pick = |top: usize,
                            labels: &[Label],
                            root: Point,
                            entry: Point,
                            equal: bool|
                 -> Option<usize> {
                    let v0 = pair.to_zero(labels, entry).ok()?;
                    if equal {
                        consistent_below(&pair, coloring, top, vertex_below(&pair, v0), None, true)
                    } else if entry == root {
                        Some(top)
                    } else {
                        let child = coloring.view().children[top]
                            .iter()
                            .copied()
                            .find(|&c| coloring.view().is_ancestor(c, vertex_below(&pair, v0)));
                        consistent_below(&pair, coloring, top, top, child, false)
                    }
                };
                let close_equal = !far && p.gap() == 0;
                let source = if far {
                    PanelSource::Far
                } else if close_equal {
                    PanelSource::CloseEqual
                } else {
                    PanelSource::CloseUnequal
                };
                pick(y, yl, ry, v_sharp, close_equal)
                    .zip(pick(z, zl, rz, w_sharp, close_equal))
                    .and_then(|(y2, z2)| make_panel(&pair, coloring, params, y2, z2, source).ok())
            }
        };
        match constructed.filter(|p| passes(&pair, params, p)) {
            Some(p) => build.panels.push(p),
            None => match fallback(&pair, coloring, params, &pairs) {
                Some(p) => build.panels.push(p),
                None => build.skipped.push(format!(
                    "no passing pair below red vertex {x} (leaf {})",
                    label_of(coloring, x)
                )),
            },
        }
    }
    Ok(build)
}

/// Nearest vertex of `c` below `start` (inclusive) outside the overlap, or
/// a leaf.
fn witness_below(t0: &Phylogeny, c: &ClusterMatch, start: usize) -> usize {
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        if t0.is_leaf(v) || c.overlap_vertices.binary_search(&v).is_err() {
            return v;
        }
        queue.extend(c.children(v));
    }
    start
}

/// Witnesses `(p side, q side)` around the useful edge `e` of cluster `c`,
/// where `(p, q)` is the shared `T#` edge.
fn witnesses(pair: &TreePair, c: &ClusterMatch, e: usize, shared: usize) -> Result<(usize, usize)> {
    let (a, b) = c.ends[&e];
    let (upper, lower) = if c.parent(b) == Some(a) {
        (a, b)
    } else {
        (b, a)
    };
    let sibling = c
        .children(upper)
        .into_iter()
        .find(|&s| s != lower)
        .ok_or_else(|| Error::param("useful edge has no sibling branch"))?;
    let w1 = witness_below(pair.t0, c, lower);
    let w2 = witness_below(pair.t0, c, sibling);
    let p = pair.ts.edge(shared).a;
    let on_q_side = |w: usize| -> Result<bool> {
        let img = pair.to_sharp(&c.labels, Point::Vertex(w))?;
        Ok(pair
            .geos
            .path_edges(img, Point::Vertex(p))
            .contains(&shared))
    };
    match (on_q_side(w1)?, on_q_side(w2)?) {
        (false, true) => Ok((w1, w2)),
        (true, false) => Ok((w2, w1)),
        _ => Err(Error::param(
            "witnesses lie on the same side of the shared edge",
        )),
    }
}

/// Panels from pairs of useful overlap edges. Around each one, witnesses
/// outside the overlap on either side of the shared `T#` edge give a
/// quartet whose split differs between the trees; the witness pair that is
/// farther apart in `T0` than in `T#` is moved to consistent green vertices.
pub fn build_panels_large_overlap(
    t0: &Phylogeny,
    ts: &Phylogeny,
    coloring: &Coloring,
    overlap: &Overlap,
    beta: f64,
    params: &BatteryParams,
) -> Result<PanelBuild> {
    let pair = TreePair::new(t0, ts);
    let mut build = PanelBuild::default();
    let mut seen = BTreeSet::new();
    for u in useful_edges(overlap, beta) {
        let key = (
            u.cluster.min(u.partner_cluster),
            u.cluster.max(u.partner_cluster),
            u.shared,
        );
        if !seen.insert(key) {
            continue;
        }
        let (ci, cj) = (
            &overlap.clusters[u.cluster],
            &overlap.clusters[u.partner_cluster],
        );
        let attempt = || -> Result<TestPanel> {
            let (yi, zi) = witnesses(&pair, ci, u.edge, u.shared)?;
            let (yj, zj) = witnesses(&pair, cj, u.partner_edge, u.shared)?;
            let pts = [(yi, ci), (zi, ci), (yj, cj), (zj, cj)];
            let imgs: Vec<Point> = pts
                .iter()
                .map(|&(w, c)| pair.to_sharp(&c.labels, Point::Vertex(w)))
                .collect::<Result<_>>()?;
            let q0 = quartet_topology(|a, b| {
                pair.geo0
                    .distance(Point::Vertex(pts[a].0), Point::Vertex(pts[b].0))
            });
            let qs = quartet_topology(|a, b| pair.geos.distance(imgs[a], imgs[b]));
            if q0 != Quartet::AbCd || qs != Quartet::AcBd {
                return Err(Error::param(format!("quartet splits {q0:?} and {qs:?}")));
            }
            let gap = |a: usize, b: usize| {
                pair.geo0
                    .distance(Point::Vertex(pts[a].0), Point::Vertex(pts[b].0))
                    > pair.geos.distance(imgs[a], imgs[b])
            };
            let (a, b) = if gap(0, 2) {
                (0, 2)
            } else if gap(1, 3) {
                (1, 3)
            } else {
                return Err(Error::param("no witness pair is farther apart in T0"));
            };
            let y = consistent_below(&pair, coloring, ci.root, pts[a].0, None, true)
                .ok_or_else(|| Error::param("no consistent green vertex below a witness"))?;
            let z = consistent_below(&pair, coloring, cj.root, pts[b].0, None, true)
                .ok_or_else(|| Error::param("no consistent green vertex below a witness"))?;
            make_panel(&pair, coloring, params, y, z, PanelSource::Overlap)
        };
        match attempt() {
            Ok(p) if passes(&pair, params, &p) => build.panels.push(p),
            outcome => match fallback(&pair, coloring, params, &[(ci.root, cj.root)]) {
                Some(p) => build.panels.push(p),
                None => build.skipped.push(format!(
                    "useful edge {} of the cluster of leaf {}: {}",
                    u.edge,
                    ci.labels[0] + 1,
                    outcome
                        .err()
                        .map(|e| e.to_string())
                        .unwrap_or_else(|| "constructed panel failed its checks".into())
                )),
            },
        }
    }
    let mut roots = BTreeSet::new();
    build.panels.retain(|p| {
        let (y, z) = p.roots(false);
        let (a, b) = (point_key(y), point_key(z));
        roots.insert((a.min(b), a.max(b)))
    });
    Ok(build)
}

fn point_key(p: Point) -> (usize, usize, u64) {
    match p {
        Point::Vertex(v) => (v, usize::MAX, 0),
        Point::Interior { edge, from, offset } => (edge, from, offset),
    }
}

/// Which trees the sparsification radius is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SparsifyMode {
    /// Reject panels whose `T#` subtrees come within `2γ_t` of a kept
    /// panel's `T#` roots.
    Sharp,
    /// Reject panels whose roots come within `6γ_t` of a kept panel's roots
    /// in either tree, then cut subtrees short of other panels' roots.
    Both,
}

fn graph_from_point(t: &Phylogeny, p: Point) -> Vec<usize> {
    match p {
        Point::Vertex(v) => t.graph_distances_from(v),
        Point::Interior { edge, .. } => {
            let e = t.edge(edge);
            let (a, b) = (t.graph_distances_from(e.a), t.graph_distances_from(e.b));
            a.iter().zip(&b).map(|(x, y)| *x.min(y)).collect()
        }
    }
}

fn root_distance(pair: &TreePair, a: &TestPanel, b: &TestPanel, sharp: bool) -> usize {
    let (ay, az) = a.roots(sharp);
    let (by, bz) = b.roots(sharp);
    let geo = pair.geo(sharp);
    [(ay, by), (ay, bz), (az, by), (az, bz)]
        .iter()
        .map(|&(p, q)| geo.graph_distance(p, q))
        .min()
        .unwrap()
}

/// Greedy selection of panels far enough apart for their forests to be
/// disjoint. Panels are considered in order; each kept panel rejects the
/// later ones within the radius of its roots.
pub fn sparsify(
    t0: &Phylogeny,
    ts: &Phylogeny,
    panels: Vec<TestPanel>,
    params: &BatteryParams,
    mode: SparsifyMode,
) -> Vec<TestPanel> {
    let pair = TreePair::new(t0, ts);
    let mut kept: Vec<TestPanel> = vec![];
    let mut kept_dist: Vec<Vec<usize>> = vec![];
    for p in panels {
        let ok = match mode {
            SparsifyMode::Sharp => kept_dist.iter().all(|d| {
                p.y_sharp
                    .vertices
                    .iter()
                    .chain(&p.z_sharp.vertices)
                    .all(|&v| d[v] > 2 * params.gamma_t)
            }),
            SparsifyMode::Both => kept.iter().all(|k| {
                root_distance(&pair, k, &p, false) > 6 * params.gamma_t
                    && root_distance(&pair, k, &p, true) > 6 * params.gamma_t
            }),
        };
        if ok {
            let (y, z) = p.roots(true);
            let (dy, dz) = (graph_from_point(ts, y), graph_from_point(ts, z));
            kept_dist.push(dy.iter().zip(&dz).map(|(a, b)| *a.min(b)).collect());
            kept.push(p);
        }
    }
    if mode == SparsifyMode::Both {
        kept = cleave(&pair, params, kept);
    }
    kept
}

/// Drops from each subtree the leaves below the ancestor `2γ_t` above any
/// other panel's root lying inside it, in both trees, and keeps the panels
/// that still pass their checks.
fn cleave(pair: &TreePair, params: &BatteryParams, panels: Vec<TestPanel>) -> Vec<TestPanel> {
    let mut out = vec![];
    for (i, p) in panels.iter().enumerate() {
        let mut drop: [BTreeSet<Label>; 2] = [BTreeSet::new(), BTreeSet::new()];
        for sharp in [false, true] {
            let t = pair.tree(sharp);
            let view = &pair.geo(sharp).view;
            let (ry, rz) = p.roots(sharp);
            for side in 0..2 {
                let (sub, root) = match (sharp, side) {
                    (false, 0) => (&p.y_zero, ry),
                    (false, _) => (&p.z_zero, rz),
                    (true, 0) => (&p.y_sharp, ry),
                    (true, _) => (&p.z_sharp, rz),
                };
                let top = match root {
                    Point::Vertex(v) => v,
                    Point::Interior { edge, from, .. } => {
                        let o = t.edge(edge).other(from);
                        if view.depth[o] < view.depth[from] {
                            o
                        } else {
                            from
                        }
                    }
                };
                for (j, q) in panels.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    let (qy, qz) = q.roots(sharp);
                    for r in [qy, qz] {
                        let rv = match r {
                            Point::Vertex(v) => v,
                            Point::Interior { edge, from, .. } => {
                                let o = t.edge(edge).other(from);
                                if view.depth[o] > view.depth[from] {
                                    o
                                } else {
                                    from
                                }
                            }
                        };
                        if sub.vertices.binary_search(&rv).is_err() || !view.is_ancestor(top, rv) {
                            continue;
                        }
                        let mut a = rv;
                        for _ in 0..2 * params.gamma_t {
                            if a == top {
                                break;
                            }
                            a = view.parent[a].unwrap().0;
                        }
                        for &l in &sub.labels {
                            if view.is_ancestor(a, t.leaf(l)) {
                                drop[side].insert(l);
                            }
                        }
                    }
                }
            }
        }
        if drop.iter().all(BTreeSet::is_empty) {
            out.push(p.clone());
            continue;
        }
        let rebuilt = (|| -> Result<TestPanel> {
            let shrink = |zero: &RestrictedSubtree,
                          sharp: &RestrictedSubtree,
                          drop: &BTreeSet<Label>|
             -> Result<[RestrictedSubtree; 2]> {
                let labels: Vec<Label> = zero
                    .labels
                    .iter()
                    .copied()
                    .filter(|l| !drop.contains(l))
                    .collect();
                if labels.is_empty() {
                    return Err(Error::param("subtree emptied by cleaving"));
                }
                let r0 = zero.root.unwrap();
                let mut vs: Vec<usize> = r0.vertex().into_iter().collect();
                vs.extend(labels.iter().map(|&l| pair.t0.leaf(l)));
                let z = if r0.vertex().is_some() {
                    restrict_vertices(pair.t0, &vs)?
                } else {
                    restrict(pair.t0, &labels)?
                };
                Ok([
                    z.with_root(r0),
                    restrict(pair.ts, &labels)?.with_root(sharp.root.unwrap()),
                ])
            };
            let [y0, ys] = shrink(&p.y_zero, &p.y_sharp, &drop[0])?;
            let [z0, zs] = shrink(&p.z_zero, &p.z_sharp, &drop[1])?;
            assemble(pair, params, [y0, z0, ys, zs], p.source)
        })();
        if let Ok(q) = rebuilt {
            if passes(pair, params, &q) {
                out.push(q);
            }
        }
    }
    out
}
