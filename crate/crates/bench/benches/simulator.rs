use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use uavnet_bench::{routing_graph, scenario, settled};
use uavnet_core::radio::compute_grid_with;
use uavnet_core::routing::dijkstra_tree;
use uavnet_core::{run, RunFlags};

fn routing(c: &mut Criterion) {
    let mut group = c.benchmark_group("dijkstra_tree");
    for users in [150, 600] {
        let sim = settled(users);
        let graph = routing_graph(&sim);
        group.bench_with_input(BenchmarkId::from_parameter(graph.len()), &graph, |b, g| {
            b.iter(|| dijkstra_tree(black_box(g)).unwrap())
        });
    }
    group.finish();
}

fn coverage(c: &mut Criterion) {
    let sim = settled(150);
    let mut group = c.benchmark_group("snr_grid");
    for step in [10.0, 5.0] {
        group.bench_with_input(BenchmarkId::from_parameter(step), &step, |b, &step| {
            b.iter(|| compute_grid_with(&sim.state.uavs, &sim.cfg, sim.cfg.grid_half_side(), step))
        });
    }
    group.finish();
}

fn full_run(c: &mut Criterion) {
    let mut group = c.benchmark_group("run");
    group.sample_size(10);
    for users in [150, 600] {
        let cfg = scenario(users, 30);
        group.bench_with_input(BenchmarkId::new("30_ticks", users), &cfg, |b, cfg| {
            b.iter(|| run(cfg.clone(), &RunFlags::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, routing, coverage, full_run);
criterion_main!(benches);
