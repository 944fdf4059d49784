use super::Battery;
use crate::error::{Error, Result};
use crate::inference::RootEstimator;
use crate::model::{sample_markov, Alignment, Scratch, SubstitutionModel};
use crate::rng::stream;
use crate::stats::mean_se;
use crate::tree::{Phylogeny, RootedTree};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest test subtree whose root-estimate law is enumerated exactly.
pub const EXACT_MEAN_LEAVES: usize = 12;
/// Sites drawn per tree when the means are estimated by simulation.
pub const MEAN_SITES: usize = 100_000;

/// How to obtain the per-site means of the statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeansMode {
    /// Exact when every test subtree is small enough, else simulated.
    Auto,
    Exact,
    MonteCarlo {
        sites: usize,
        seed: u64,
    },
}

/// Per-site means of the statistic under `T0` and `T#`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Means {
    pub zero: f64,
    pub sharp: f64,
    pub zero_se: f64,
    pub sharp_se: f64,
    pub exact: bool,
}

/// The statistic on one alignment and the decision it leads to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistinguishingResult {
    pub statistic: f64,
    /// Expected statistic over `k` sites under `T0`.
    pub d_zero: f64,
    /// Expected statistic over `k` sites under `T#`.
    pub d_sharp: f64,
    pub threshold: f64,
    /// Whether the statistic exceeds the midpoint of the two means.
    pub accept_zero: bool,
}

/// Monte Carlo error rates of the test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub k: usize,
    pub trials: usize,
    /// Rejections of `T0` on data from `T0`.
    pub zero: f64,
    pub zero_se: f64,
    /// Acceptances of `T0` on data from `T#`.
    pub sharp: f64,
    pub sharp_se: f64,
}

impl ErrorRates {
    pub fn max(&self) -> f64 {
        self.zero.max(self.sharp)
    }
}

/// Root estimators and rooted test subtrees kept after validation.
#[derive(Debug, Clone)]
pub(crate) struct Estimators {
    pub n: usize,
    pub alpha: Vec<f64>,
    pub zero: Vec<[RootEstimator; 2]>,
    pub sharp: Vec<[RootEstimator; 2]>,
    pub rooted: Vec<[RootedTree; 2]>,
}

impl Estimators {
    pub fn new(battery: &Battery, t0: &Phylogeny, ts: &Phylogeny) -> Result<Self> {
        let mut zero = vec![];
        let mut sharp = vec![];
        let mut rooted = vec![];
        for p in battery.panels() {
            let y0 = RootedTree::from_subtree(t0, &p.y_zero)?;
            let z0 = RootedTree::from_subtree(t0, &p.z_zero)?;
            let ys = RootedTree::from_subtree(ts, &p.y_sharp)?;
            let zs = RootedTree::from_subtree(ts, &p.z_sharp)?;
            zero.push([RootEstimator::new(&y0), RootEstimator::new(&z0)]);
            sharp.push([RootEstimator::new(&ys), RootEstimator::new(&zs)]);
            rooted.push([y0, z0]);
        }
        let alpha = battery.panels().iter().map(|p| p.alpha as f64).collect();
        Ok(Estimators {
            n: t0.n_leaves(),
            alpha,
            zero,
            sharp,
            rooted,
        })
    }

    fn scratches(&self, sharp: bool) -> Vec<[Scratch; 2]> {
        let src = if sharp { &self.sharp } else { &self.zero };
        src.iter()
            .map(|[a, b]| [a.scratch(), b.scratch()])
            .collect()
    }

    fn site(&self, pattern: &[u8], sharp: bool, s: &mut [[Scratch; 2]]) -> f64 {
        let src = if sharp { &self.sharp } else { &self.zero };
        let mut total = 0.0;
        for ((a, [ey, ez]), [sy, sz]) in self.alpha.iter().zip(src).zip(s.iter_mut()) {
            total += a * (ey.estimate(pattern, sy) as f64) * (ez.estimate(pattern, sz) as f64);
        }
        total
    }

    fn total(&self, a: &Alignment, sharp: bool) -> Result<f64> {
        if a.n() != self.n || a.r() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "alignment has {} taxa, battery expects {}",
                a.n(),
                self.n
            )));
        }
        let mut s = self.scratches(sharp);
        Ok(a.sites().map(|site| self.site(site, sharp, &mut s)).sum())
    }
}

fn estimators(b: &Battery) -> Result<&Estimators> {
    b.estimators.as_ref().ok_or(Error::UnvalidatedBattery)
}

/// `Σ_sites Σ_i α_i σ̂_{y_i} σ̂_{z_i}`, with each `σ̂` the root MLE of a
/// `T0` test subtree.
pub fn distinguishing_statistic(battery: &Battery, a: &Alignment) -> Result<f64> {
    estimators(battery)?.total(a, false)
}

/// The same statistic computed from the `T#` test subtrees. Matching
/// subtrees make it equal to [`distinguishing_statistic`].
pub fn distinguishing_statistic_sharp(battery: &Battery, a: &Alignment) -> Result<f64> {
    estimators(battery)?.total(a, true)
}

/// `E[σ̂ | root state]` for both root states, by enumeration.
fn conditional_means(est: &RootEstimator, rt: &RootedTree, n: usize) -> [f64; 2] {
    let labels = rt.labels();
    let mut pattern = vec![0u8; n];
    let mut s = est.scratch();
    let mut m = [0.0; 2];
    for code in 0usize..(1 << labels.len()) {
        for (i, &l) in labels.iter().enumerate() {
            pattern[l] = (code >> i & 1) as u8;
        }
        let j = est.joint(&pattern, &mut s);
        let sigma = est.estimate(&pattern, &mut s) as f64;
        m[0] += 2.0 * j[0] * sigma;
        m[1] += 2.0 * j[1] * sigma;
    }
    m
}

/// `E[σ̂_y σ̂_z]` for co-hanging subtrees whose roots are `w` apart.
fn pair_mean(my: [f64; 2], mz: [f64; 2], w: f64) -> f64 {
    let same = (1.0 + (-w).exp()) / 4.0;
    let diff = (1.0 - (-w).exp()) / 4.0;
    same * (my[0] * mz[0] + my[1] * mz[1]) + diff * (my[0] * mz[1] + my[1] * mz[0])
}

/// Per-site means of the statistic under both trees.
pub fn estimate_means(
    battery: &Battery,
    t0: &Phylogeny,
    ts: &Phylogeny,
    mode: MeansMode,
) -> Result<Means> {
    let est = estimators(battery)?;
    let small = est.rooted.iter().all(|[y, z]| {
        y.labels().len() <= EXACT_MEAN_LEAVES && z.labels().len() <= EXACT_MEAN_LEAVES
    });
    let (sites, seed) = match mode {
        MeansMode::Auto if small => return Ok(exact_means(battery, est, t0)),
        MeansMode::Exact if small => return Ok(exact_means(battery, est, t0)),
        MeansMode::Exact => {
            return Err(Error::limit(
                "exact mean test subtree leaves",
                EXACT_MEAN_LEAVES,
            ))
        }
        MeansMode::Auto => (MEAN_SITES, 0),
        MeansMode::MonteCarlo { sites, seed } => (sites, seed),
    };
    if sites == 0 {
        return Err(Error::param("mean estimation needs at least one site"));
    }
    let draw = |t: &Phylogeny, branch: u64| -> (f64, f64) {
        let a = sample_markov(
            t,
            &SubstitutionModel::cfn(),
            sites,
            &mut stream(seed, &[branch]),
        );
        let mut s = est.scratches(false);
        let vals: Vec<f64> = a
            .sites()
            .map(|site| est.site(site, false, &mut s))
            .collect();
        mean_se(&vals)
    };
    let (zero, zero_se) = draw(t0, 2);
    let (sharp, sharp_se) = draw(ts, 3);
    Ok(Means {
        zero,
        sharp,
        zero_se,
        sharp_se,
        exact: false,
    })
}

fn exact_means(battery: &Battery, est: &Estimators, t0: &Phylogeny) -> Means {
    let ups = t0.upsilon() as f64;
    let mut zero = 0.0;
    let mut sharp = 0.0;
    for ((p, [ey, ez]), [ry, rz]) in battery.panels().iter().zip(&est.zero).zip(&est.rooted) {
        let my = conditional_means(ey, ry, est.n);
        let mz = conditional_means(ez, rz, est.n);
        let a = p.alpha as f64;
        zero += a * pair_mean(my, mz, p.d_zero as f64 / ups);
        sharp += a * pair_mean(my, mz, p.d_sharp as f64 / ups);
    }
    Means {
        zero,
        sharp,
        zero_se: 0.0,
        sharp_se: 0.0,
        exact: true,
    }
}

/// Accepts `T0` iff the statistic exceeds the midpoint of its expected
/// values under the two trees.
pub fn run_test(battery: &Battery, a: &Alignment, means: &Means) -> Result<DistinguishingResult> {
    let statistic = distinguishing_statistic(battery, a)?;
    let k = a.k() as f64;
    let (d_zero, d_sharp) = (k * means.zero, k * means.sharp);
    let threshold = (d_zero + d_sharp) / 2.0;
    Ok(DistinguishingResult {
        statistic,
        d_zero,
        d_sharp,
        threshold,
        accept_zero: statistic - threshold > 0.0,
    })
}

/// Error rates of [`run_test`] over `trials` alignments of `k` sites drawn
/// from each tree. Trial `i` uses stream `(seed, [0, i])` under `T0` and
/// `(seed, [1, i])` under `T#`.
pub fn empirical_error(
    battery: &Battery,
    t0: &Phylogeny,
    ts: &Phylogeny,
    means: &Means,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<ErrorRates> {
    estimators(battery)?;
    if trials == 0 {
        return Err(Error::param("trials must be positive"));
    }
    let model = SubstitutionModel::cfn();
    let rate = |t: &Phylogeny, branch: u64, wrong_if_accept: bool| -> Result<(f64, f64)> {
        let hits = (0..trials)
            .into_par_iter()
            .map(|i| {
                let a = sample_markov(t, &model, k, &mut stream(seed, &[branch, i as u64]));
                let r = run_test(battery, &a, means)?;
                Ok(if r.accept_zero == wrong_if_accept {
                    1.0
                } else {
                    0.0
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(mean_se(&hits))
    };
    let (zero, zero_se) = rate(t0, 0, false)?;
    let (sharp, sharp_se) = rate(ts, 1, true)?;
    Ok(ErrorRates {
        k,
        trials,
        zero,
        zero_se,
        sharp,
        sharp_se,
    })
}
