use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use lrdsc::{Encoder, Lattice};
use lrdsc_bench::{descriptions, hex_codec, inputs, intermediate_points};

const BATCH: usize = 1024;

fn nearest_point(c: &mut Criterion) {
    let codec = hex_codec(1e-2);
    let xs: Vec<Vec<f64>> = inputs(&codec, BATCH, 1).into_iter().map(|p| p.first).collect();
    let mut g = c.benchmark_group("nearest_point");
    for (name, lat) in [
        ("square", Lattice::integer_grid(2, 1e-2).unwrap()),
        ("hexagonal", Lattice::hexagonal(1e-2).unwrap()),
    ] {
        g.bench_function(name, |b| {
            b.iter(|| {
                for x in &xs {
                    black_box(lat.nearest_coeffs(black_box(x)).unwrap());
                }
            })
        });
    }
    g.finish();
}

fn encode(c: &mut Criterion) {
    let codec = hex_codec(1e-2);
    let pairs = inputs(&codec, BATCH, 2);
    c.bench_function("encode", |b| {
        b.iter(|| {
            for p in &pairs {
                black_box(codec.encode(Encoder::First, black_box(&p.first)).unwrap());
            }
        })
    });
}

fn central_decode(c: &mut Criterion) {
    let codec = hex_codec(1e-2);
    let descs = descriptions(&codec, &inputs(&codec, BATCH, 3));
    c.bench_function("central_decode", |b| {
        b.iter(|| {
            for (d1, d2) in &descs {
                black_box(codec.central_decode(black_box(d1), black_box(d2)).unwrap());
            }
        })
    });
}

fn beta(c: &mut Criterion) {
    let codec = hex_codec(1e-2);
    let points = intermediate_points(&codec, &inputs(&codec, BATCH, 4));
    let ctx = codec.labeling();
    c.bench_function("beta", |b| {
        b.iter(|| {
            for l in &points {
                black_box(ctx.beta(Encoder::First, black_box(l)));
                black_box(ctx.beta(Encoder::Second, black_box(l)));
            }
        })
    });
}

criterion_group!(benches, nearest_point, encode, central_decode, beta);
criterion_main!(benches);
