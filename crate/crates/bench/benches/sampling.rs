use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use epsbias::bounds::plan_thm1;
use epsbias::transform::{sample_uniform, shorten_then_puncture, ExpanderGraph, WalkPolicy};
use epsbias_bench::rs_gf16;

fn samplers(c: &mut Criterion) {
    c.bench_function("uniform 8-subset of 1024", |b| b.iter(|| sample_uniform(1024, 8, black_box(5)).unwrap()));
    c.bench_function("build expander n=256 d=16", |b| b.iter(|| ExpanderGraph::build(256, 16, black_box(9)).unwrap()));
    let g = ExpanderGraph::build(256, 16, 9).unwrap();
    c.bench_function("expander walk s=16", |b| {
        b.iter(|| g.sample(16, WalkPolicy::DistinctUntilSize, black_box(3)).unwrap())
    });
}

fn pipeline_and_plan(c: &mut Criterion) {
    let rs = rs_gf16(5);
    c.bench_function("RS [15,5] shorten 2 then puncture 3", |b| {
        b.iter(|| shorten_then_puncture(&rs, 2, 3, black_box(7)).unwrap())
    });
    c.bench_function("plan_thm1 n=1e6", |b| {
        b.iter(|| plan_thm1(2, 0.4, 0.49, 0.1, 0.5, black_box(1_000_000)).unwrap())
    });
}

criterion_group!(benches, samplers, pipeline_and_plan);
criterion_main!(benches);
