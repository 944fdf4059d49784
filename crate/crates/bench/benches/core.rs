use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use slr_bench::fixture;
use slr_core::battery::{build_battery, estimate_means, instances, BuildOptions, MeansMode};
use slr_core::inference::{log_likelihood, PatternTable, SwapScorer};
use slr_core::model::{sample_markov, SubstitutionModel};
use slr_core::rng::stream;

fn pruning(c: &mut Criterion) {
    let mut g = c.benchmark_group("log_likelihood");
    for h in [3, 5, 7] {
        let (t, a) = fixture(h, 1000);
        g.bench_with_input(BenchmarkId::from_parameter(1usize << h), &h, |b, _| {
            b.iter(|| {
                log_likelihood(black_box(&t), &SubstitutionModel::cfn(), black_box(&a)).unwrap()
            })
        });
    }
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let (t, _) = fixture(5, 0);
    c.bench_function("sample_markov/n32_k1000", |b| {
        let mut rng = stream(2, &[]);
        b.iter(|| sample_markov(black_box(&t), &SubstitutionModel::cfn(), 1000, &mut rng))
    });
}

fn swap_scorer(c: &mut Criterion) {
    let mut g = c.benchmark_group("swap_scorer");
    for h in [3, 5] {
        let (t, a) = fixture(h, 256);
        let scorer = SwapScorer::new(&t).unwrap();
        let table = PatternTable::new(&a);
        g.bench_with_input(BenchmarkId::from_parameter(1usize << h), &h, |b, _| {
            b.iter(|| scorer.base_is_unique_best(black_box(&table)).unwrap())
        });
    }
    g.finish();
}

fn battery(c: &mut Criterion) {
    let (t0, ts) = instances::non_cohanging(8).unwrap();
    let opts = BuildOptions { ell: Some(2) };
    c.bench_function("build_battery/non_cohanging", |b| {
        b.iter(|| build_battery(black_box(&t0), black_box(&ts), &opts).unwrap())
    });
    let mut bat = build_battery(&t0, &ts, &opts).unwrap();
    assert!(bat.validate(&t0, &ts).unwrap().passed());
    c.bench_function("estimate_means/exact", |b| {
        b.iter(|| estimate_means(black_box(&bat), &t0, &ts, MeansMode::Exact).unwrap())
    });
}

criterion_group!(benches, pruning, sampling, swap_scorer, battery);
criterion_main!(benches);
