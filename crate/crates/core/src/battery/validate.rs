use super::pair::TreePair;
use super::panels::{classify, Proximity, TestPanel};
use super::BatteryParams;
use crate::error::Result;
use crate::tree::{
    is_cohanging, is_dense, is_metric_matching, linkage, topping, Phylogeny, Point,
    RestrictedSubtree, RootedTree,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// A requirement a battery of tests must meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Requirement {
    /// All four test subtrees are (ℓ, ℘)-dense.
    Dense,
    /// `Y0`/`Y#` and `Z0`/`Z#` induce the same metric, root included.
    Matching,
    /// The two subtrees are co-hanging in each tree.
    CoHanging,
    /// The root distances differ by at least one grid unit.
    Distance,
    /// At least one side is proximal.
    Proximity,
    /// The sign matches the direction of the distance gap.
    Alpha,
    /// The forests of distinct panels share no edge.
    GlobalIntersection,
}

/// Violations found for one panel, in the order of [`Requirement`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelCheck {
    pub failures: Vec<Requirement>,
}

impl PanelCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn first_failure(&self) -> Option<Requirement> {
        self.failures.first().copied()
    }
}

/// Outcome of [`validate_battery`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub panels: Vec<PanelCheck>,
    /// Panel pairs `(i, j, in_sharp)` whose forests share an edge.
    pub intersections: Vec<(usize, usize, bool)>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.panels.iter().all(PanelCheck::passed)
    }

    /// Number of panels.
    pub fn size(&self) -> usize {
        self.panels.len()
    }
}

fn dense(t: &Phylogeny, y: &RestrictedSubtree, params: &BatteryParams, suppress: bool) -> bool {
    if suppress {
        RootedTree::from_subtree(t, y)
            .map(|r| r.suppressed().is_dense(params.ell, params.wp))
            .unwrap_or(false)
    } else {
        is_dense(t, y, params.ell, params.wp).unwrap_or(false)
    }
}

fn matching(pair: &TreePair, y0: &RestrictedSubtree, ys: &RestrictedSubtree) -> bool {
    if !is_metric_matching(pair.t0, y0, pair.ts, ys).unwrap_or(false) {
        return false;
    }
    let (Some(r0), Some(rs)) = (y0.root, ys.root) else {
        return false;
    };
    y0.labels.iter().all(|&l| {
        pair.geo0.distance(r0, Point::Vertex(pair.t0.leaf(l)))
            == pair.geos.distance(rs, Point::Vertex(pair.ts.leaf(l)))
    })
}

fn roots(y: &RestrictedSubtree, z: &RestrictedSubtree) -> Option<(Point, Point)> {
    Some((y.root?, z.root?))
}

/// Pair requirements of one panel, recomputed from its subtrees.
pub(crate) fn pair_failures(
    pair: &TreePair,
    params: &BatteryParams,
    p: &TestPanel,
) -> Vec<Requirement> {
    let mut out = vec![];
    let dense_ok = dense(pair.t0, &p.y_zero, params, false)
        && dense(pair.t0, &p.z_zero, params, false)
        && dense(pair.ts, &p.y_sharp, params, true)
        && dense(pair.ts, &p.z_sharp, params, true);
    if !dense_ok {
        out.push(Requirement::Dense);
    }
    if !(matching(pair, &p.y_zero, &p.y_sharp) && matching(pair, &p.z_zero, &p.z_sharp)) {
        out.push(Requirement::Matching);
    }
    let cohanging = is_cohanging(pair.t0, &p.y_zero, &p.z_zero).unwrap_or(false)
        && is_cohanging(pair.ts, &p.y_sharp, &p.z_sharp).unwrap_or(false);
    if !cohanging {
        out.push(Requirement::CoHanging);
    }
    let (Some((y0, z0)), Some((ys, zs))) =
        (roots(&p.y_zero, &p.z_zero), roots(&p.y_sharp, &p.z_sharp))
    else {
        out.extend([
            Requirement::Distance,
            Requirement::Proximity,
            Requirement::Alpha,
        ]);
        return out;
    };
    let d0 = pair.geo0.distance(y0, z0);
    let ds = pair.geos.distance(ys, zs);
    if d0.abs_diff(ds) < 1 {
        out.push(Requirement::Distance);
    }
    let prox0 = classify(pair.geo0.graph_distance(y0, z0), params);
    let proxs = classify(pair.geos.graph_distance(ys, zs), params);
    if prox0 != Proximity::Proximal && proxs != Proximity::Proximal {
        out.push(Requirement::Proximity);
    }
    if (p.alpha == 1) != (d0 < ds) || p.alpha.abs() != 1 {
        out.push(Requirement::Alpha);
    }
    out
}

/// Edges reserved by a panel in one tree: the linkage of its subtrees when
/// the pair is (semi-)proximal there, else the two toppings.
pub(crate) fn forest(
    pair: &TreePair,
    params: &BatteryParams,
    p: &TestPanel,
    sharp: bool,
) -> Result<BTreeSet<usize>> {
    let (t, y, z) = if sharp {
        (pair.ts, &p.y_sharp, &p.z_sharp)
    } else {
        (pair.t0, &p.y_zero, &p.z_zero)
    };
    let root = if sharp { pair.roots() } else { pair.root0() };
    let (ry, rz) =
        roots(y, z).ok_or_else(|| crate::error::Error::param("panel subtree has no root"))?;
    match classify(pair.geo(sharp).graph_distance(ry, rz), params) {
        Proximity::Proximal | Proximity::SemiProximal => linkage(t, y, z),
        Proximity::NonProximal => {
            let mut f = topping(t, y, params.gamma_t, root)?;
            f.extend(topping(t, z, params.gamma_t, root)?);
            Ok(f)
        }
    }
}

/// Checks every panel requirement and the pairwise disjointness of the
/// reserved forests in both trees.
pub fn validate_battery(
    t0: &Phylogeny,
    ts: &Phylogeny,
    params: &BatteryParams,
    panels: &[TestPanel],
) -> ValidationReport {
    let pair = TreePair::new(t0, ts);
    let mut checks: Vec<PanelCheck> = panels
        .iter()
        .map(|p| PanelCheck {
            failures: pair_failures(&pair, params, p),
        })
        .collect();
    let mut intersections = vec![];
    for sharp in [false, true] {
        let forests: Vec<Option<BTreeSet<usize>>> = panels
            .iter()
            .map(|p| forest(&pair, params, p, sharp).ok())
            .collect();
        for i in 0..panels.len() {
            for j in i + 1..panels.len() {
                let hit = match (&forests[i], &forests[j]) {
                    (Some(a), Some(b)) => a.intersection(b).next().is_some(),
                    _ => true,
                };
                if hit {
                    intersections.push((i, j, sharp));
                    for k in [i, j] {
                        if !checks[k]
                            .failures
                            .contains(&Requirement::GlobalIntersection)
                        {
                            checks[k].failures.push(Requirement::GlobalIntersection);
                        }
                    }
                }
            }
        }
    }
    ValidationReport {
        panels: checks,
        intersections,
    }
}
