use std::hint::black_box;

use boundary_bubble::correction_solver::{correction_scalars, solve_reduced_bvp};
use boundary_bubble::expansion_check::{remainder_scaling, verify_i4_and_cross, verify_i5, Cutoff, ExpansionOptions};
use boundary_bubble_bench::{jet, params, profile};
use criterion::{criterion_group, criterion_main, Criterion};

const DELTAS: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

fn correction(c: &mut Criterion) {
    let j = jet(5);
    let mut g = c.benchmark_group("correction");
    g.sample_size(10);
    for m in [64, 128] {
        let p = params(m);
        g.bench_function(format!("solve {m}x{m}"), |b| b.iter(|| solve_reduced_bvp(&p, black_box(&j.h)).unwrap()));
    }
    let prof = profile(128, &j.h);
    g.bench_function("scalars 128x128", |b| b.iter(|| correction_scalars(black_box(&prof))));
    g.finish();
}

fn expansion(c: &mut Criterion) {
    let j = jet(5);
    let p = params(128);
    let prof = profile(128, &j.h);
    let o = ExpansionOptions::default();
    let mut g = c.benchmark_group("expansion");
    g.sample_size(10);
    g.bench_function("I5 four scales", |b| b.iter(|| verify_i5(&p, black_box(&j), &DELTAS, &o).unwrap()));
    g.bench_function("I4 and collapse", |b| b.iter(|| verify_i4_and_cross(&p, black_box(&j), &prof, &DELTAS, &o).unwrap()));
    g.bench_function("remainder bump", |b| b.iter(|| remainder_scaling(&p, black_box(&j), &[0.1, 0.05, 0.025], 1.0, Cutoff::Bump, &o).unwrap()));
    g.finish();
}

criterion_group!(benches, correction, expansion);
criterion_main!(benches);
