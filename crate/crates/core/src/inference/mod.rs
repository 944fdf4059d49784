//! Likelihood inference: pruning, maximum likelihood over several search
//! modes, ancestral reconstruction, divergences between leaf laws and
//! Monte Carlo error estimates for likelihood-ratio tests.

mod asr;
mod divergence;
mod likelihood;
mod swap_scorer;

pub use asr::{
    ancestral_posterior, flow_bound, mean_posterior_gap_exact, mean_posterior_gap_mc,
    reconstruction_accuracy, reconstruction_accuracy_mc, Posterior, RootEstimator, ASR_EXACT_LIMIT,
};
pub use divergence::{
    estimate_tv_k, kl_divergence, lr_test_errors, tv_single_site, LrErrors, TvEstimate,
    DIVERGENCE_EXACT_LIMIT,
};
pub use likelihood::{
    log_likelihood, ml_estimate, neg_log_likelihood_table, site_likelihood, MlEstimate, MlMode,
    NegLogLik, PatternTable, TIE_TOLERANCE,
};
pub use swap_scorer::{SwapScorer, SwapScores};
