//! Shared fixtures for the criterion benches.

use slr_core::model::{sample_markov, Alignment, SubstitutionModel};
use slr_core::rng::stream;
use slr_core::Phylogeny;

/// Homogeneous tree of height `h` at `g = 0.2` and an alignment of `k` sites.
pub fn fixture(h: usize, k: usize) -> (Phylogeny, Alignment) {
    let t = Phylogeny::homogeneous(h, 2, 10).expect("valid height");
    let a = sample_markov(
        &t,
        &SubstitutionModel::cfn(),
        k,
        &mut stream(1, &[h as u64, k as u64]),
    );
    (t, a)
}
