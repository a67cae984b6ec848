use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use epsbias::transform::{shorten, IndexSet};
use epsbias::Field;
use epsbias_bench::{random_binary, rs_gf16};

fn field_ops(c: &mut Criterion) {
    let f = Field::with_order(256).unwrap();
    let xs: Vec<_> = f.nonzero_elements().collect();
    c.bench_function("gf256 mul+inv over all units", |b| {
        b.iter(|| xs.iter().fold(f.elem(1).unwrap(), |acc, &x| f.mul(acc, f.inv(black_box(x)).unwrap())))
    });
}

fn enumeration(c: &mut Criterion) {
    let binary = random_binary(64, 16, 1);
    c.bench_function("bias of random binary [64,16]", |b| b.iter(|| black_box(&binary).clone().bias().unwrap()));
    let rs = rs_gf16(4);
    c.bench_function("bias of RS [15,4] over GF(16)", |b| b.iter(|| black_box(&rs).bias().unwrap()));
    c.bench_function("distance of random binary [64,16]", |b| b.iter(|| random_binary(64, 16, 1).distance().unwrap()));
}

fn shortening(c: &mut Criterion) {
    let code = random_binary(128, 32, 2);
    let set = IndexSet::explicit(128, &[3, 17, 40, 41, 77, 90, 101, 127]).unwrap();
    c.bench_function("shorten [128,32] by 8", |b| b.iter(|| shorten(black_box(&code), &set).unwrap()));
}

criterion_group!(benches, field_ops, enumeration, shortening);
criterion_main!(benches);
