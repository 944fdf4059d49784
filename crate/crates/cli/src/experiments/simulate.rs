use crate::config::{ExperimentConfig, Sampler};
use crate::error::{CliError, CliResult};
use slr_core::model::{sample_markov, sample_random_cluster, Alignment, SubstitutionModel};
use slr_core::rng::stream;

/// Draws `k` sites on the configured tree. The stream depends only on the
/// seed, so a sampler and seed always give the same file.
pub fn run(cfg: &ExperimentConfig) -> CliResult<Alignment> {
    let t = cfg.build_tree(&cfg.tree, 0)?;
    let mut rng = stream(cfg.seed, &[0]);
    match cfg.sampler {
        Sampler::Markov => Ok(sample_markov(
            &t,
            &SubstitutionModel::new(cfg.r)?,
            cfg.k,
            &mut rng,
        )),
        Sampler::Cluster if cfg.r == 2 => Ok(sample_random_cluster(&t, cfg.k, &mut rng)),
        Sampler::Cluster => Err(CliError::Config(
            "the cluster sampler is two-state only".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_file() {
        let cfg = ExperimentConfig {
            k: 100,
            seed: 7,
            ..Default::default()
        };
        assert_eq!(run(&cfg).unwrap().to_text(), run(&cfg).unwrap().to_text());
        let other = ExperimentConfig {
            seed: 8,
            ..cfg.clone()
        };
        assert_ne!(run(&cfg).unwrap().to_text(), run(&other).unwrap().to_text());
    }

    #[test]
    fn zero_sites_is_a_header() {
        let cfg = ExperimentConfig {
            k: 0,
            ..Default::default()
        };
        assert_eq!(run(&cfg).unwrap().to_text(), "0 8 2\n");
    }
}
