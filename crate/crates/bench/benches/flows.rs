use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use g2flow::almostabelian::{classify_soliton, closed_forms, matrix_bracket_flow, matrix_flow_rhs};
use g2flow::flow::{bracket_flow, bracket_flow_rhs, laplacian_flow};
use g2flow::io::default_phi;
use g2flow::liealg::hodge_laplacian;
use g2flow::G2Structure;
use g2flow_bench::{generic_matrix, nilpotent_bracket, short_run, standard_structure};

fn structure(c: &mut Criterion) {
    let phi = default_phi();
    c.bench_function("g2structure_new", |b| b.iter(|| G2Structure::new(black_box(&phi)).unwrap()));
    let s = standard_structure();
    let mu = nilpotent_bracket();
    let delta = hodge_laplacian(&mu, s.metric(), s.phi());
    c.bench_function("hodge_laplacian_phi", |b| b.iter(|| hodge_laplacian(black_box(&mu), s.metric(), s.phi())));
    c.bench_function("solve_q", |b| b.iter(|| s.solve_q(black_box(&delta)).unwrap()));
}

fn rhs(c: &mut Criterion) {
    let s = standard_structure();
    let mu = nilpotent_bracket();
    c.bench_function("bracket_flow_rhs", |b| b.iter(|| bracket_flow_rhs(black_box(&mu), &s).unwrap()));
    let a = generic_matrix();
    c.bench_function("matrix_flow_rhs", |b| b.iter(|| matrix_flow_rhs(black_box(a.adapted()))));
    c.bench_function("closed_forms", |b| b.iter(|| closed_forms(black_box(&a)).unwrap()));
    c.bench_function("classify_soliton", |b| b.iter(|| classify_soliton(black_box(&a)).unwrap()));
}

fn trajectories(c: &mut Criterion) {
    let mut g = c.benchmark_group("trajectories");
    g.sample_size(10);
    let s = standard_structure();
    let mu = nilpotent_bracket();
    let opts = short_run();
    g.bench_function("bracket_flow", |b| b.iter(|| bracket_flow(black_box(&mu), &s, &opts).unwrap()));
    g.bench_function("laplacian_flow", |b| b.iter(|| laplacian_flow(black_box(s.phi()), &mu, &opts).unwrap()));
    let a = generic_matrix();
    g.bench_function("matrix_bracket_flow", |b| b.iter(|| matrix_bracket_flow(black_box(&a), &opts).unwrap()));
    g.finish();
}

criterion_group!(benches, structure, rhs, trajectories);
criterion_main!(benches);
