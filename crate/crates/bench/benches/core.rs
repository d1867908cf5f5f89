use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use slowthink_bench::{channel_sequence, gaussian_pair, ideal_process};
use slowthink_core::bounds::{self, CostCase};
use slowthink_core::hsic::{self, HsicConfig};
use slowthink_core::info::fano_check;
use slowthink_core::sim::{monte_carlo, run_trial};
use slowthink_core::{DecayModel, SelectionRule, SelectorModel, StrategySpec};

fn bench_bounds(c: &mut Criterion) {
    let decay = DecayModel::exponential(1.0).unwrap();
    let ideal = SelectorModel::Ideal;
    c.bench_function("bounds/width_exact_L5", |b| {
        b.iter(|| bounds::width_expansion_bound_exact(&decay, &ideal, black_box(5), 4, 2))
    });
    c.bench_function("bounds/mcts_worst_exact_L5", |b| {
        b.iter(|| bounds::mcts_worst_bound_exact(&decay, &ideal, black_box(5), 2))
    });
    c.bench_function("bounds/n_min_worst_b4_L5", |b| {
        b.iter(|| bounds::n_min(black_box(4), 5, CostCase::Worst))
    });
}

fn bench_trials(c: &mut Criterion) {
    let cfg = ideal_process(1.0, 5);
    let mut group = c.benchmark_group("trial");
    let strategies = [
        StrategySpec::SinglePath,
        StrategySpec::Bon { n: 16, rule: SelectionRule::SelfConsistency },
        StrategySpec::Beam { k: 4, b: 2 },
        StrategySpec::MctsWorst { b: 2 },
    ];
    for s in strategies {
        group.bench_with_input(BenchmarkId::from_parameter(s.to_string()), &s, |b, s| {
            let mut rng = slowthink_core::rng::stream(1, 0);
            b.iter(|| run_trial(&cfg, s, &mut rng).unwrap())
        });
    }
    group.finish();
    c.bench_function("monte_carlo/beam_10k", |b| {
        b.iter(|| monte_carlo(&cfg, &StrategySpec::Beam { k: 4, b: 2 }, 10_000, black_box(3)).unwrap())
    });
}

fn bench_info(c: &mut Criterion) {
    let seq = channel_sequence(11);
    c.bench_function("info/fano_check", |b| b.iter(|| fano_check(black_box(&seq), seq.len()).unwrap()));
}

fn bench_hsic(c: &mut Criterion) {
    let cfg = HsicConfig::new(1.0).unwrap();
    let mut group = c.benchmark_group("hsic");
    for n in [50, 200] {
        let (x, y) = gaussian_pair(n, 2, 5);
        group.bench_with_input(BenchmarkId::new("statistic", n), &n, |b, _| {
            b.iter(|| hsic::hsic(&x, &y, &cfg).unwrap())
        });
    }
    let (x, y) = gaussian_pair(200, 2, 5);
    group.sample_size(10);
    group.bench_function("permutation_100", |b| {
        b.iter(|| hsic::permutation_test(&x, &y, &cfg, 100, 9).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_bounds, bench_trials, bench_info, bench_hsic);
criterion_main!(benches);
