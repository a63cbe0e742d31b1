use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cellmis::fractopt::{admm_solve, centralized_oracle, compute_rates, AdmmConfig};
use cellmis::harness::{build_scenario, preset_config, run_pipeline};
use cellmis::intgraph::{build_graph_distance, random_bounded_degree};
use cellmis::miscolor::generate_family;
use cellmis::scheduler::build_cycle;
use cellmis::topology::channel_gain;
use cellmis::{MisParams, Objective, StreamKey};

fn coloring(c: &mut Criterion) {
    let mut group = c.benchmark_group("coloring");
    for n in [50, 200, 800] {
        let key = StreamKey::root(7);
        let g = random_bounded_degree(n, 5, 3 * n, &mut key.stream("graph").rng());
        let params = MisParams::for_graph(&g);
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| {
            b.iter(|| generate_family(g, &params, key.stream("coloring"), None).unwrap())
        });
    }
    group.finish();
}

fn fractions(c: &mut Criterion) {
    let cfg = preset_config("grid-bounds").unwrap();
    let s = build_scenario(&cfg).unwrap();
    let gains = channel_gain(&s, None).unwrap();
    let g = build_graph_distance(&s, cfg.graph.dth);
    let family = generate_family(&g, &MisParams::for_graph(&g), StreamKey::root(cfg.seed), None).unwrap();
    let rates = compute_rates(&s, &gains, &family.classes);
    let n = s.num_ues();
    let admm = AdmmConfig {
        iterations: 500,
        ..AdmmConfig::default()
    };

    let mut group = c.benchmark_group("fractions");
    for (name, obj) in [("sum", Objective::sum(n)), ("maxmin", Objective::MaxMin)] {
        group.bench_function(BenchmarkId::new("admm_500", name), |b| {
            b.iter(|| admm_solve(&rates, &s.rmin, &obj, &g, &admm).unwrap())
        });
        group.bench_function(BenchmarkId::new("simplex", name), |b| {
            b.iter(|| centralized_oracle(&rates, &s.rmin, &obj).unwrap())
        });
    }
    group.finish();
}

fn scheduling(c: &mut Criterion) {
    let gamma = [0.31, 0.07, 0.22, 0.13, 0.27];
    let mut group = c.benchmark_group("cycle");
    for d in [1, 3, 5] {
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, &d| {
            b.iter(|| build_cycle(black_box(&gamma), d).unwrap())
        });
    }
    group.finish();
}

fn end_to_end(c: &mut Criterion) {
    let cfg = preset_config("minimal").unwrap();
    c.bench_function("pipeline/minimal", |b| b.iter(|| run_pipeline(&cfg).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = coloring, fractions, scheduling, end_to_end
}
criterion_main!(benches);
