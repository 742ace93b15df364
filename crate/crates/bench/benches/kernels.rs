use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use hspline::bspline_space::{overlap_set, Family, SplineRef};
use hspline::driver::{run, AuditLevel, RunConfig, Strategy};
use hspline::hierarchy::Lineage;
use hspline::index_algebra::{d_iter, m_iter, MultiIndex};
use hspline::oracle::is_linearly_independent;
use hspline::refinement::ga_refine;
use hspline::SpaceConfig;

fn grown(cfg: SpaceConfig, steps: usize) -> Lineage {
    let config = RunConfig {
        m: cfg.m,
        n: cfg.n,
        d: cfg.d,
        g: cfg.g,
        max_level: None,
        iterations: Some(steps),
        strategy: Strategy::RandomK { k: 3, seed: 42 },
        audit: AuditLevel::None,
        record_timing: false,
    };
    run(&config).expect("benchmark run").lineage
}

fn index_maps(c: &mut Criterion) {
    let cfg = SpaceConfig::new(3, 2, 3, 1).unwrap();
    let i = MultiIndex::new(&[5, -2, 17]);
    c.bench_function("m_iter_d3_k4", |b| b.iter(|| m_iter(&cfg, black_box(1), 4, black_box(&i)).unwrap()));
    c.bench_function("d_iter_d3_k4", |b| b.iter(|| d_iter(&cfg, black_box(1), 4, black_box(&i)).unwrap()));
}

fn overlaps(c: &mut Criterion) {
    let cfg = SpaceConfig::new(3, 2, 2, 1).unwrap();
    let lin = grown(cfg, 15);
    let depth = lin.depth();
    let fine: Vec<SplineRef> = lin.generator_iter().filter(|p| p.level == depth).take(8).collect();
    c.bench_function("overlap_set_coarser_generator", |b| {
        b.iter(|| overlap_set(&cfg, black_box(&fine), -1, lin.generator_family()).unwrap())
    });
    c.bench_function("overlap_set_finer_all", |b| b.iter(|| overlap_set(&cfg, black_box(&fine), 2, Family::All).unwrap()));
}

fn refinement_steps(c: &mut Criterion) {
    for &(m, d) in &[(2, 1), (3, 2)] {
        let cfg = SpaceConfig::new(m, 2, d, 1).unwrap();
        let lin = grown(cfg, 10);
        let mut marks: Vec<SplineRef> = lin.generator().to_vec();
        marks = marks.split_off(marks.len().saturating_sub(3));
        c.bench_function(&format!("ga_refine_m{m}_d{d}"), |b| {
            b.iter_batched(|| lin.clone(), |mut l| ga_refine(&mut l, &marks).unwrap(), BatchSize::SmallInput)
        });
    }
}

fn rank_test(c: &mut Criterion) {
    let cfg = SpaceConfig::new(2, 2, 2, 1).unwrap();
    let h = grown(cfg, 4).generator().to_vec();
    let mut g = c.benchmark_group("rank");
    g.sample_size(10);
    g.bench_function("independence_m2_d2", |b| b.iter(|| is_linearly_independent(&cfg, black_box(&h)).unwrap()));
    g.finish();
}

criterion_group!(benches, index_maps, overlaps, refinement_steps, rank_test);
criterion_main!(benches);
