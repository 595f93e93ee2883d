use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use leafwise::brownian::{path_rng, sample_path, PathConfig, WalkState};
use leafwise::contact::{build_alpha, build_beta, contact_volume};
use leafwise::lp::fixtures::{pants_complex, random_complex};
use leafwise::lp::{extract_complex, solve_beta_lp, verify_certificate};
use leafwise::make_instance;

fn path_stepping(c: &mut Criterion) {
    let pants = make_instance("example3-pants").unwrap();
    let x0 = pants.chart.node_point(pants.chart.node_index(4, 4, 0));
    c.bench_function("walk_step_pants_1000", |b| {
        b.iter_batched(
            || (WalkState::new(&pants.chart, x0), path_rng(3)),
            |(mut w, mut rng)| {
                for _ in 0..1000 {
                    w.step(&pants.chart, 0.01, &mut rng).unwrap();
                }
                w
            },
            BatchSize::SmallInput,
        )
    });
    let half = make_instance("example2-halfplane").unwrap();
    let y0 = half.chart.node_point(half.chart.node_index(3, 3, 0));
    let cfg = PathConfig::new(1.0, 0.01).unwrap();
    c.bench_function("sample_path_halfplane_100_steps", |b| b.iter(|| sample_path(&half.chart, black_box(y0), cfg, 11).unwrap()));
}

fn contact(c: &mut Criterion) {
    let inst = make_instance("example2-halfplane").unwrap();
    let beta = build_beta(&inst.chart, &inst.measure).unwrap();
    let alpha = build_alpha(&inst.measure, &beta, 0.25).unwrap();
    c.bench_function("contact_volume_halfplane", |b| b.iter(|| contact_volume(&inst.chart, black_box(&alpha)).unwrap()));
}

fn lp(c: &mut Criterion) {
    let pants = pants_complex();
    c.bench_function("lp_solve_pants_fixture", |b| b.iter(|| solve_beta_lp(black_box(&pants)).unwrap()));
    let (rand, _) = random_complex(1, 3, 120);
    let outcome = solve_beta_lp(&rand).unwrap();
    c.bench_function("lp_verify_random_complex", |b| b.iter(|| verify_certificate(black_box(&outcome), &rand).unwrap()));
    let inst = make_instance("example2-halfplane").unwrap();
    c.bench_function("extract_complex_halfplane_3_levels", |b| b.iter(|| extract_complex(&inst.chart, &inst.measure, 0, black_box(3)).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = path_stepping, contact, lp
}
criterion_main!(benches);
