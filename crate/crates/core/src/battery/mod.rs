//! Batteries of distinguishing tests between a true tree `T0` and an
//! alternative `T#`: coloring of ℓ-vertices, green clusters, overlap
//! analysis, panel construction for the homogeneous, many-red and
//! large-overlap regimes, validation and the test statistic.

mod coloring;
pub mod instances;
mod overlap;
mod pair;
mod panels;
mod statistic;
mod validate;

pub use coloring::{color_vertices, Color, Coloring};
pub use overlap::{
    compute_overlap, shallow_sums_in, shallow_threshold, shallow_vertices, useful_edges,
    ClusterMatch, Overlap, UsefulEdge,
};
pub use pair::{anchor_point, locate_anchor, transfer, Anchor};
pub use panels::{
    build_panels_homogeneous, build_panels_large_overlap, build_panels_many_r, classify, sparsify,
    PanelBuild, PanelSource, Proximity, SparsifyMode, TestPanel, FALLBACK_LIMIT,
};
pub use statistic::{
    distinguishing_statistic, distinguishing_statistic_sharp, empirical_error, estimate_means,
    run_test, DistinguishingResult, ErrorRates, Means, MeansMode, EXACT_MEAN_LEAVES, MEAN_SITES,
};
pub use validate::{validate_battery, PanelCheck, Requirement, ValidationReport};

use crate::distance::homogeneous_shape;
use crate::error::{Error, Result};
use crate::tree::{restrict, Label, Phylogeny};
use pair::TreePair;
use serde::{Deserialize, Serialize};
use statistic::Estimators;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

/// Shallowness parameter for audits of a computed overlap.
pub const AUDIT_BETA: f64 = 2.0;

/// Shape parameters of a battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatteryParams {
    /// Spacing of the colored levels.
    pub ell: usize,
    /// Density slack ℘: level `iℓ` needs `(2^ℓ − ℘)^i` vertices.
    pub wp: u32,
    /// Proximity radius `Γ` (graph distance).
    pub big_gamma: usize,
    /// Topping height `γ_t`, a multiple of ℓ with `γ_t ≥ Γ`.
    pub gamma_t: usize,
}

fn round_up(x: usize, ell: usize) -> usize {
    x.div_ceil(ell) * ell
}

impl BatteryParams {
    pub fn new(ell: usize, wp: u32, big_gamma: usize, gamma_t: usize) -> Result<Self> {
        if !(2..=30).contains(&ell) {
            return Err(Error::param("ℓ must be in 2..=30"));
        }
        if wp as u64 >= 1u64 << ell {
            return Err(Error::param("℘ must be below 2^ℓ"));
        }
        if gamma_t < big_gamma || !gamma_t.is_multiple_of(ell) {
            return Err(Error::param(
                "γ_t must be a multiple of ℓ no smaller than Γ",
            ));
        }
        Ok(BatteryParams {
            ell,
            wp,
            big_gamma,
            gamma_t,
        })
    }

    /// `Γ = 2ℓ`, ℘ = 1.
    pub fn homogeneous(ell: usize) -> Result<Self> {
        Self::new(ell, 1, 2 * ell, 2 * ell)
    }

    /// `Γ = (6 + 2gΥ)ℓ`, ℘ = 1, with `gΥ` the largest edge in units.
    pub fn many_r(ell: usize, g_units: u64) -> Result<Self> {
        let big_gamma = (6 + 2 * g_units as usize) * ell;
        Self::new(ell, 1, big_gamma, round_up(big_gamma, ell))
    }

    /// `Γ = ⌈6gΥ log₂(8/(1 − 1/√2)) + 2ℓgΥ + 4⌉`, ℘ = min(5, 2^ℓ − 1).
    pub fn large_overlap(ell: usize, g_units: u64) -> Result<Self> {
        let gu = g_units as f64;
        let big_gamma =
            (6.0 * gu * (8.0 / (1.0 - FRAC_1_SQRT_2)).log2() + 2.0 * ell as f64 * gu + 4.0).ceil()
                as usize;
        let wp = 5u32.min((1u32 << ell.min(30)) - 1);
        Self::new(ell, wp, big_gamma, round_up(big_gamma, ell))
    }
}

/// Smallest `ℓ ≥ 2` with `2^ℓ > ℘` and `2^ℓ/(2^ℓ − ℘)² ≤ e^{−2ℓg′}`, where
/// `g′ = (ln√2 + g)/2`. Needs `g < ln√2`.
pub fn default_ell(g: f64, wp: u32) -> Result<usize> {
    let critical = SQRT_2.ln();
    if !(g > 0.0 && g < critical) {
        return Err(Error::param(format!(
            "default ℓ needs 0 < g < ln√2, got {g}"
        )));
    }
    let gp = (critical + g) / 2.0;
    for ell in 2..=30usize {
        let size = (1u64 << ell) as f64;
        if size <= wp as f64 {
            continue;
        }
        if size / (size - wp as f64).powi(2) <= (-2.0 * ell as f64 * gp).exp() {
            return Ok(ell);
        }
    }
    Err(Error::limit("default ℓ", 30))
}

/// Shallowness parameter used when building large-overlap panels.
pub fn overlap_beta(g_units: u64) -> f64 {
    let x = 12.0 * g_units as f64;
    x / (x - 1.0)
}

/// Which construction applies to a pair of trees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Both trees complete binary with equal weights.
    Homogeneous,
    /// Few overlapping edges relative to the red vertices.
    ManyR,
    /// At least one overlapping `T#` edge per nine red vertices.
    LargeOverlap,
}

/// Homogeneous if both trees are; otherwise large overlap iff
/// `9|O#| ≥ #R` with at least one overlapping edge.
pub fn classify_regime(
    t0: &Phylogeny,
    ts: &Phylogeny,
    coloring: &Coloring,
    overlap: &Overlap,
) -> Regime {
    if let (Ok(a), Ok(b)) = (homogeneous_shape(t0), homogeneous_shape(ts)) {
        if a == b {
            return Regime::Homogeneous;
        }
    }
    let o = overlap.o_sharp.len();
    if o > 0 && 9 * o >= coloring.count(Color::Red) {
        Regime::LargeOverlap
    } else {
        Regime::ManyR
    }
}

/// Overrides for [`build_battery`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Fixed ℓ instead of the default for the tree's largest weight.
    pub ell: Option<usize>,
}

/// A battery of tests with its parameters. Validation against the two trees
/// unlocks the statistic.
#[derive(Debug, Clone)]
pub struct Battery {
    params: BatteryParams,
    regime: Regime,
    panels: Vec<TestPanel>,
    /// Red and yellow counts of the coloring the panels came from.
    pub red: usize,
    pub yellow: usize,
    /// Constructions that produced no panel, with the reason.
    pub skipped: Vec<String>,
    estimators: Option<Estimators>,
}

impl Battery {
    pub fn new(params: BatteryParams, regime: Regime, panels: Vec<TestPanel>) -> Self {
        Battery {
            params,
            regime,
            panels,
            red: 0,
            yellow: 0,
            skipped: vec![],
            estimators: None,
        }
    }

    pub fn params(&self) -> &BatteryParams {
        &self.params
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn panels(&self) -> &[TestPanel] {
        &self.panels
    }

    /// Mutable panels; any change drops a previous validation.
    pub fn panels_mut(&mut self) -> &mut Vec<TestPanel> {
        self.estimators = None;
        &mut self.panels
    }

    /// Number of panels.
    pub fn size(&self) -> usize {
        self.panels.len()
    }

    pub fn is_validated(&self) -> bool {
        self.estimators.is_some()
    }

    /// Validates the panels against both trees. A passing battery keeps the
    /// root estimators the statistic needs.
    pub fn validate(&mut self, t0: &Phylogeny, ts: &Phylogeny) -> Result<ValidationReport> {
        let report = validate_battery(t0, ts, &self.params, &self.panels);
        self.estimators = if report.passed() {
            Some(Estimators::new(self, t0, ts)?)
        } else {
            None
        };
        Ok(report)
    }

    /// Portable description: label sets, anchored roots and signs.
    pub fn describe(&self, t0: &Phylogeny, ts: &Phylogeny) -> Result<BatteryDescription> {
        let anchor = |t: &Phylogeny, y: &crate::tree::RestrictedSubtree| -> Result<Anchor> {
            let a = anchor_point(
                t,
                &y.labels,
                y.root
                    .ok_or_else(|| Error::param("panel subtree has no root"))?,
            )?;
            Ok(Anchor {
                a: a.a + 1,
                b: a.b + 1,
                offset: a.offset,
            })
        };
        let mut panels = vec![];
        for p in &self.panels {
            panels.push(PanelDescription {
                y_labels: p.y_zero.labels.iter().map(|l| l + 1).collect(),
                z_labels: p.z_zero.labels.iter().map(|l| l + 1).collect(),
                y_zero_root: anchor(t0, &p.y_zero)?,
                z_zero_root: anchor(t0, &p.z_zero)?,
                y_sharp_root: anchor(ts, &p.y_sharp)?,
                z_sharp_root: anchor(ts, &p.z_sharp)?,
                alpha: p.alpha,
                d_zero: p.d_zero,
                d_sharp: p.d_sharp,
                proximity_zero: p.proximity_zero,
                proximity_sharp: p.proximity_sharp,
                source: p.source,
            });
        }
        Ok(BatteryDescription {
            params: self.params,
            regime: self.regime,
            red: self.red,
            yellow: self.yellow,
            panels,
        })
    }

    /// Rebuilds an (unvalidated) battery from its description.
    pub fn from_description(
        desc: &BatteryDescription,
        t0: &Phylogeny,
        ts: &Phylogeny,
    ) -> Result<Self> {
        let pair = TreePair::new(t0, ts);
        let sub = |t: &Phylogeny,
                   labels: &[Label],
                   root: &Anchor|
         -> Result<crate::tree::RestrictedSubtree> {
            if labels.contains(&0) || root.a == 0 || root.b == 0 {
                return Err(Error::param("labels are counted from 1"));
            }
            let labels: Vec<Label> = labels.iter().map(|l| l - 1).collect();
            let p = locate_anchor(
                t,
                &Anchor {
                    a: root.a - 1,
                    b: root.b - 1,
                    offset: root.offset,
                },
            )?;
            Ok(restrict(t, &labels)?.with_root(p))
        };
        let mut panels = vec![];
        for d in &desc.panels {
            let subtrees = [
                sub(t0, &d.y_labels, &d.y_zero_root)?,
                sub(t0, &d.z_labels, &d.z_zero_root)?,
                sub(ts, &d.y_labels, &d.y_sharp_root)?,
                sub(ts, &d.z_labels, &d.z_sharp_root)?,
            ];
            let mut p = panels::assemble(&pair, &desc.params, subtrees, d.source)?;
            p.alpha = d.alpha;
            panels.push(p);
        }
        let mut b = Battery::new(desc.params, desc.regime, panels);
        b.red = desc.red;
        b.yellow = desc.yellow;
        Ok(b)
    }
}

/// One panel in a [`BatteryDescription`]. Labels are counted from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelDescription {
    pub y_labels: Vec<Label>,
    pub z_labels: Vec<Label>,
    pub y_zero_root: Anchor,
    pub z_zero_root: Anchor,
    pub y_sharp_root: Anchor,
    pub z_sharp_root: Anchor,
    pub alpha: i8,
    pub d_zero: u64,
    pub d_sharp: u64,
    pub proximity_zero: Proximity,
    pub proximity_sharp: Proximity,
    pub source: PanelSource,
}

/// JSON-friendly form of a battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryDescription {
    pub params: BatteryParams,
    pub regime: Regime,
    pub red: usize,
    pub yellow: usize,
    pub panels: Vec<PanelDescription>,
}

/// Colors `T0`, picks the regime, builds and sparsifies the panels. With
/// no fixed ℓ, a large-overlap pair is recolored with the ℓ for ℘ = 5.
pub fn build_battery(t0: &Phylogeny, ts: &Phylogeny, opts: &BuildOptions) -> Result<Battery> {
    if t0.n_leaves() != ts.n_leaves() || t0.upsilon() != ts.upsilon() {
        return Err(Error::LeafSetMismatch(
            "trees differ in leaf count or grid".into(),
        ));
    }
    let g_units = t0.max_units().max(ts.max_units());
    let g = t0.max_units() as f64 / t0.upsilon() as f64;
    let mut ell = match opts.ell {
        Some(l) => l,
        None => default_ell(g, 1)?,
    };
    let mut coloring = color_vertices(t0, ts, ell)?;
    let mut overlap = compute_overlap(t0, ts, &coloring)?;
    let regime = classify_regime(t0, ts, &coloring, &overlap);
    if regime == Regime::LargeOverlap && opts.ell.is_none() {
        let wide = default_ell(g, 5)?;
        if wide != ell {
            ell = wide;
            coloring = color_vertices(t0, ts, ell)?;
            overlap = compute_overlap(t0, ts, &coloring)?;
        }
    }
    let red = coloring.count(Color::Red);
    let yellow = coloring.count(Color::Yellow);
    let (params, build, mode) = match regime {
        Regime::Homogeneous => {
            let params = BatteryParams::homogeneous(ell)?;
            let panels = build_panels_homogeneous(t0, ts, &coloring, &params)?;
            (
                params,
                PanelBuild {
                    panels,
                    skipped: vec![],
                },
                SparsifyMode::Sharp,
            )
        }
        Regime::ManyR => {
            let params = BatteryParams::many_r(ell, g_units)?;
            let recolored = coloring.recolor_black(&overlap);
            (
                params,
                build_panels_many_r(t0, ts, &recolored, &params)?,
                SparsifyMode::Sharp,
            )
        }
        Regime::LargeOverlap => {
            let params = BatteryParams::large_overlap(ell, g_units)?;
            let build = build_panels_large_overlap(
                t0,
                ts,
                &coloring,
                &overlap,
                overlap_beta(g_units),
                &params,
            )?;
            (params, build, SparsifyMode::Both)
        }
    };
    let panels = sparsify(t0, ts, build.panels, &params, mode);
    let mut b = Battery::new(params, regime, panels);
    b.red = red;
    b.yellow = yellow;
    b.skipped = build.skipped;
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_ell_values() {
        assert_eq!(default_ell(0.2, 1).unwrap(), 3);
        assert_eq!(default_ell(0.2, 5).unwrap(), 5);
        assert!(default_ell(0.4, 1).is_err());
        // Closer to the critical weight needs wider levels.
        assert!(default_ell(0.3, 1).unwrap() > default_ell(0.1, 1).unwrap());
    }

    #[test]
    fn parameter_checks() {
        assert!(BatteryParams::new(1, 1, 2, 2).is_err());
        assert!(BatteryParams::new(2, 4, 4, 4).is_err());
        assert!(BatteryParams::new(3, 1, 7, 6).is_err());
        assert!(BatteryParams::new(3, 1, 7, 8).is_err());
        let p = BatteryParams::many_r(3, 2).unwrap();
        assert_eq!((p.big_gamma, p.gamma_t), (30, 30));
        let q = BatteryParams::large_overlap(2, 2).unwrap();
        assert_eq!(q.wp, 3);
        assert_eq!(q.gamma_t % 2, 0);
        assert!(q.gamma_t >= q.big_gamma);
    }

    #[test]
    fn identical_trees_give_an_empty_battery() {
        let t = Phylogeny::homogeneous(3, 2, 10).unwrap();
        let mut b = build_battery(&t, &t, &BuildOptions::default()).unwrap();
        assert_eq!(b.size(), 0);
        assert!(b.validate(&t, &t).unwrap().passed());
    }

    #[test]
    fn overlap_beta_is_slightly_above_one() {
        let b = overlap_beta(2);
        assert!((b - 24.0 / 23.0).abs() < 1e-12);
    }
}
