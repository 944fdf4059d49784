use crate::error::{Error, Result};
use crate::model::{exact_leaf_distribution, sample_markov, Alignment, Pruner, SubstitutionModel};
use crate::rng::stream;
use crate::stats::mean_se;
use crate::tree::Phylogeny;
use rand::Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Cap on leaves for exact divergences (patterns are enumerated).
pub const DIVERGENCE_EXACT_LIMIT: usize = 14;

fn check_pair(t0: &Phylogeny, t1: &Phylogeny) -> Result<()> {
    if t0.n_leaves() != t1.n_leaves() {
        return Err(Error::LeafSetMismatch(format!(
            "{} vs {} leaves",
            t0.n_leaves(),
            t1.n_leaves()
        )));
    }
    Ok(())
}

fn exact_pair(
    t0: &Phylogeny,
    t1: &Phylogeny,
    model: &SubstitutionModel,
    limit: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_pair(t0, t1)?;
    let limit = limit.min(DIVERGENCE_EXACT_LIMIT);
    Ok((
        exact_leaf_distribution(t0, model, limit)?,
        exact_leaf_distribution(t1, model, limit)?,
    ))
}

/// `KL(μ^{T0} ‖ μ^{T1})` over leaf patterns, by enumeration.
pub fn kl_divergence(
    t0: &Phylogeny,
    t1: &Phylogeny,
    model: &SubstitutionModel,
    limit: usize,
) -> Result<f64> {
    let (p, q) = exact_pair(t0, t1, model, limit)?;
    let mut kl = 0.0;
    for (a, b) in p.iter().zip(&q) {
        if *a > 0.0 {
            if *b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            kl += a * (a / b).ln();
        }
    }
    Ok(kl.max(0.0))
}

/// Total variation between the single-site leaf laws, by enumeration.
pub fn tv_single_site(
    t0: &Phylogeny,
    t1: &Phylogeny,
    model: &SubstitutionModel,
    limit: usize,
) -> Result<f64> {
    let (p, q) = exact_pair(t0, t1, model, limit)?;
    Ok(0.5 * p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Draws sites from one tree and reports `ln μ^{T1} − ln μ^{T0}` summed
/// over the sites of each draw.
enum LogRatioSampler {
    /// Pattern CDF under the sampling tree with per-pattern log ratios.
    Exact { cdf: Vec<f64>, ratio: Vec<f64> },
    Simulate {
        source: Phylogeny,
        p0: Pruner,
        p1: Pruner,
    },
}

impl LogRatioSampler {
    fn new(
        source: &Phylogeny,
        t0: &Phylogeny,
        t1: &Phylogeny,
        model: &SubstitutionModel,
    ) -> Result<Self> {
        check_pair(t0, t1)?;
        if t0.n_leaves() as f64 * (model.r() as f64).log2() <= DIVERGENCE_EXACT_LIMIT as f64 + 1e-9
        {
            let p0 = exact_leaf_distribution(t0, model, DIVERGENCE_EXACT_LIMIT)?;
            let p1 = exact_leaf_distribution(t1, model, DIVERGENCE_EXACT_LIMIT)?;
            let ps = exact_leaf_distribution(source, model, DIVERGENCE_EXACT_LIMIT)?;
            let mut acc = 0.0;
            let cdf = ps
                .iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect();
            let ratio = p0.iter().zip(&p1).map(|(a, b)| b.ln() - a.ln()).collect();
            Ok(LogRatioSampler::Exact { cdf, ratio })
        } else {
            Ok(LogRatioSampler::Simulate {
                source: source.clone(),
                p0: Pruner::new(t0, model),
                p1: Pruner::new(t1, model),
            })
        }
    }

    fn draw<R: Rng>(&self, model: &SubstitutionModel, k: usize, rng: &mut R) -> f64 {
        match self {
            LogRatioSampler::Exact { cdf, ratio } => {
                let total = *cdf.last().unwrap();
                let mut sum = 0.0;
                for _ in 0..k {
                    let u = rng.random::<f64>() * total;
                    let i = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                    sum += ratio[i];
                }
                sum
            }
            LogRatioSampler::Simulate { source, p0, p1 } => {
                let a = sample_markov(source, model, k, rng);
                log_ratio(&a, p0, p1)
            }
        }
    }
}

fn log_ratio(a: &Alignment, p0: &Pruner, p1: &Pruner) -> f64 {
    let mut counts: BTreeMap<&[u8], usize> = BTreeMap::new();
    for s in a.sites() {
        *counts.entry(s).or_insert(0) += 1;
    }
    let mut s0 = p0.scratch();
    let mut s1 = p1.scratch();
    counts
        .into_iter()
        .map(|(pat, c)| c as f64 * (p1.log_prob(pat, &mut s1) - p0.log_prob(pat, &mut s0)))
        .sum()
}

/// Monte Carlo estimate of the total variation between the laws of `k`
/// i.i.d. sites, with its complement (the overlap `1 − TV`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvEstimate {
    pub tv: f64,
    pub tv_se: f64,
    pub overlap: f64,
    pub overlap_se: f64,
}

/// Estimates `TV(μ^{T0}_k, μ^{T1}_k) = E_{T0}[(1 − exp(L_{T0} − L_{T1}))⁺]`.
/// For small trees sites are drawn from the exact pattern law.
pub fn estimate_tv_k(
    t0: &Phylogeny,
    t1: &Phylogeny,
    model: &SubstitutionModel,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<TvEstimate> {
    if trials == 0 {
        return Err(Error::param("trials must be positive"));
    }
    let sampler = LogRatioSampler::new(t0, t0, t1, model)?;
    let overlaps: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, &[i as u64]);
            let lr = sampler.draw(model, k, &mut rng);
            lr.min(0.0).exp()
        })
        .collect();
    let (overlap, se) = mean_se(&overlaps);
    Ok(TvEstimate {
        tv: 1.0 - overlap,
        tv_se: se,
        overlap,
        overlap_se: se,
    })
}

/// Error rates of the likelihood-ratio test that prefers `T1` when
/// `L_{T1} ≤ L_{T0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrErrors {
    /// `P_{T0}[L_{T1} ≤ L_{T0}]`.
    pub type1: f64,
    pub type1_se: f64,
    /// `P_{T1}[L_{T1} > L_{T0}]`.
    pub type2: f64,
    pub type2_se: f64,
}

/// Monte Carlo error rates of the likelihood-ratio test between two trees.
pub fn lr_test_errors(
    t0: &Phylogeny,
    t1: &Phylogeny,
    model: &SubstitutionModel,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<LrErrors> {
    if trials == 0 {
        return Err(Error::param("trials must be positive"));
    }
    let under0 = LogRatioSampler::new(t0, t0, t1, model)?;
    let under1 = LogRatioSampler::new(t1, t0, t1, model)?;
    let rate = |sampler: &LogRatioSampler, branch: u64, prefer_t1: bool| -> (f64, f64) {
        let hits: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, &[branch, i as u64]);
                // L_{T1} ≤ L_{T0} iff ln μ^{T1} − ln μ^{T0} ≥ 0.
                let picks_t1 = sampler.draw(model, k, &mut rng) >= 0.0;
                if picks_t1 == prefer_t1 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        mean_se(&hits)
    };
    let (type1, type1_se) = rate(&under0, 0, true);
    let (type2, type2_se) = rate(&under1, 1, false);
    Ok(LrErrors {
        type1,
        type1_se,
        type2,
        type2_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_newick;

    fn quartets() -> (Phylogeny, Phylogeny) {
        (
            parse_newick("((1:0.3,2:0.3):0.3,3:0.3,4:0.3);", 10).unwrap(),
            parse_newick("((1:0.3,3:0.3):0.3,2:0.3,4:0.3);", 10).unwrap(),
        )
    }

    #[test]
    fn identical_trees_have_zero_divergence() {
        let (a, _) = quartets();
        let m = SubstitutionModel::cfn();
        assert_eq!(kl_divergence(&a, &a, &m, 14).unwrap(), 0.0);
        assert_eq!(tv_single_site(&a, &a, &m, 14).unwrap(), 0.0);
        let est = estimate_tv_k(&a, &a, &m, 50, 200, 1).unwrap();
        assert!(est.tv.abs() < 1e-12);
        let lr = lr_test_errors(&a, &a, &m, 20, 100, 1).unwrap();
        assert_eq!(lr.type1, 1.0);
        assert_eq!(lr.type2, 0.0);
    }

    #[test]
    fn different_quartets_are_separated() {
        let (a, b) = quartets();
        let m = SubstitutionModel::cfn();
        // Independent oracle: ½Σ|p − q| with p, q from explicit sums over
        // internal states.
        let tv = tv_single_site(&a, &b, &m, 14).unwrap();
        let brute = |t: &Phylogeny| -> Vec<f64> {
            let internal: Vec<usize> = (0..t.n_vertices()).filter(|&v| !t.is_leaf(v)).collect();
            let mut out = vec![0.0; 16];
            for code in 0..16usize {
                for mask in 0..(1usize << internal.len()) {
                    let mut st = vec![0u8; t.n_vertices()];
                    for (i, &v) in internal.iter().enumerate() {
                        st[v] = (mask >> i & 1) as u8;
                    }
                    for l in 0..4 {
                        st[t.leaf(l)] = (code >> l & 1) as u8;
                    }
                    let mut p = 0.5;
                    for e in t.edges() {
                        let d = m.delta(e.units as f64 / 10.0);
                        p *= if st[e.a] == st[e.b] { 1.0 - d } else { d };
                    }
                    out[code] += p;
                }
            }
            out
        };
        let (pa, pb) = (brute(&a), brute(&b));
        let oracle: f64 = 0.5 * pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).sum::<f64>();
        assert!(tv > 0.0);
        assert!((tv - oracle).abs() < 1e-14);
        assert!(kl_divergence(&a, &b, &m, 14).unwrap() > 0.0);
    }

    #[test]
    fn tv_grows_with_k() {
        let (a, b) = quartets();
        let m = SubstitutionModel::cfn();
        let small = estimate_tv_k(&a, &b, &m, 5, 2000, 3).unwrap();
        let large = estimate_tv_k(&a, &b, &m, 80, 2000, 3).unwrap();
        assert!(large.tv > small.tv);
        assert!((0.0..=1.0).contains(&large.tv));
    }

    #[test]
    fn one_site_estimate_matches_exact() {
        let (a, b) = quartets();
        let m = SubstitutionModel::cfn();
        let est = estimate_tv_k(&a, &b, &m, 1, 20000, 4).unwrap();
        let exact = tv_single_site(&a, &b, &m, 14).unwrap();
        assert!((est.tv - exact).abs() < 4.0 * est.tv_se + 1e-9);
    }

    #[test]
    fn simulated_path_agrees_with_exact_path() {
        // Sixteen leaves exceed the exact cap, so sites are simulated.
        let a = Phylogeny::homogeneous(4, 2, 10).unwrap();
        let b = a.swap_subtrees(a.leaf(0), a.leaf(15)).unwrap();
        let m = SubstitutionModel::cfn();
        let est = estimate_tv_k(&a, &b, &m, 40, 400, 8).unwrap();
        assert!(est.tv > 0.0 && est.tv < 1.0);
        let lr = lr_test_errors(&a, &b, &m, 40, 200, 8).unwrap();
        assert!(lr.type1 < 0.5 && lr.type2 < 0.5);
    }
}
