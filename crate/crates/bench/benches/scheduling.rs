use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use shoplab::agents::Mlp;
use shoplab::eval::run_episode;
use shoplab::gantt::{render_svg, GanttOptions};
use shoplab::{generate_instance, solve_optimal, DispatchRule, GeneratorConfig, PolicyRng, RewardMode, SolveLimits};

fn instance_6x6(seed: u64) -> Arc<shoplab::Instance> {
    Arc::new(generate_instance(&GeneratorConfig::jssp(6, 6, 6, seed), 0).unwrap())
}

fn generation(c: &mut Criterion) {
    let config = GeneratorConfig::jssp(6, 6, 6, 1).flexible().with_tools(3);
    c.bench_function("generate 6x6 fjssp with tools", |b| b.iter(|| generate_instance(black_box(&config), 0).unwrap()));
}

fn episodes(c: &mut Criterion) {
    let inst = instance_6x6(2);
    c.bench_function("spt episode 6x6", |b| {
        b.iter(|| {
            let mut rule = DispatchRule::Spt;
            run_episode(&mut rule, Arc::clone(&inst), RewardMode::Dense, 0).unwrap().makespan
        })
    });
}

fn solver(c: &mut Criterion) {
    let inst = instance_6x6(3);
    let mut group = c.benchmark_group("solver");
    group.sample_size(10);
    group.bench_function("optimal 6x6", |b| b.iter(|| solve_optimal(black_box(&inst), SolveLimits::default()).unwrap().makespan));
    group.finish();
}

fn network(c: &mut Criterion) {
    let mut rng = PolicyRng::seed_from_u64(4);
    let net = Mlp::random(&[25, 64, 64, 6], 1.0, &mut rng).unwrap();
    let input = vec![0.1; 25];
    let upstream = vec![1.0; 6];
    c.bench_function("mlp forward 25-64-64-6", |b| b.iter(|| net.forward(black_box(&input)).unwrap()));
    c.bench_function("mlp gradient 25-64-64-6", |b| b.iter(|| net.gradient(black_box(&input), &upstream).unwrap()));
}

fn gantt(c: &mut Criterion) {
    let schedule = solve_optimal(&instance_6x6(5), SolveLimits::default()).unwrap().schedule;
    c.bench_function("render svg 6x6", |b| b.iter(|| render_svg(black_box(&schedule), &GanttOptions::default()).unwrap()));
}

criterion_group!(benches, generation, episodes, solver, network, gantt);
criterion_main!(benches);
