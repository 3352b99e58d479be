use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use modasm_bench::{angles, configs, graph, lateral_task};
use modasm_core::lattice::EnumerationLimits;
use modasm_core::{
    actuation_jacobian, actuation_matrix, allocate_bounded, augment_wrench_set, canonicalize, enumerate_exhaustive, propagate_poses,
    solve_single, support_in_direction, ModuleParams, SolverOptions,
};
use nalgebra::{Vector3, Vector6};

fn enumeration(c: &mut Criterion) {
    let mut g = c.benchmark_group("enumerate");
    for n in [5usize, 6, 7] {
        g.bench_function(format!("n{n}"), |b| b.iter(|| enumerate_exhaustive(black_box(n), EnumerationLimits::default()).unwrap()));
    }
    g.finish();
}

fn canonical(c: &mut Criterion) {
    let set = configs(7);
    c.bench_function("canonicalize/n7_all", |b| b.iter(|| set.iter().for_each(|cfg| drop(black_box(canonicalize(black_box(cfg)))))));
}

fn actuation(c: &mut Criterion) {
    let p = ModuleParams::default();
    let mut g = c.benchmark_group("actuation");
    for n in [4usize, 8] {
        let graph = graph(n);
        let alpha = angles(&graph);
        g.bench_function(format!("matrix_n{n}"), |b| {
            b.iter(|| actuation_matrix(&propagate_poses(black_box(&graph), &alpha, &p).unwrap(), &p))
        });
        g.bench_function(format!("jacobian_n{n}"), |b| b.iter(|| actuation_jacobian(black_box(&graph), &alpha, &p).unwrap()));
    }
    g.finish();
}

fn allocation_and_support(c: &mut Criterion) {
    let p = ModuleParams::default();
    let graph = graph(4);
    let a = actuation_matrix(&propagate_poses(&graph, &angles(&graph), &p).unwrap(), &p);
    let hover = Vector6::new(0.0, 0.0, p.weight(4), 0.0, 0.0, 0.0);
    c.bench_function("allocate_bounded/n4", |b| b.iter(|| allocate_bounded(&a, black_box(&hover), 1e-6, p.u_max())));
    let dir = Vector3::new(0.3, -0.2, 1.0).normalize();
    c.bench_function("support/n4", |b| b.iter(|| support_in_direction(&a, black_box(&dir), p.u_max()).unwrap()));
}

fn solve(c: &mut Criterion) {
    let p = ModuleParams::default();
    let mut g = c.benchmark_group("solve_single");
    g.sample_size(10);
    for n in [2usize, 4] {
        let graph = graph(n);
        let task = augment_wrench_set(&lateral_task(n, &p), n, &p);
        let opts = SolverOptions { restarts: 0, ..Default::default() };
        g.bench_function(format!("n{n}"), |b| {
            b.iter_batched(|| task.clone(), |t| solve_single(&graph, &t, &p, &opts).unwrap(), BatchSize::SmallInput)
        });
    }
    g.finish();
}

criterion_group!(benches, enumeration, canonical, actuation, allocation_and_support, solve);
criterion_main!(benches);
