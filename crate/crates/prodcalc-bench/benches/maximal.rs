//! Maximal-sweep benchmarks: the strong maximal prefix-sum sweep and the
//! three heat maximal variants over the dyadic time grid.

use criterion::{criterion_group, criterion_main, Criterion};
use prodcalc::calculus::synthesize;
use prodcalc::hardy::{heat_maximal, heat_profile, strong_maximal, MaximalParams, MaximalVariant};
use prodcalc::testset::decaying_random_fields_in_band;
use prodcalc_bench::desk_circle_product;
use std::hint::black_box;

fn bench_maximal(c: &mut Criterion) {
    let ps = desk_circle_product();
    let cf = decaying_random_fields_in_band(&ps, 1, 9, [8.0, 8.0]).remove(0);
    let grid = synthesize(&cf);
    let params = MaximalParams::default_desk();
    let phi = heat_profile();

    c.bench_function("strong_maximal_128x128", |b| {
        b.iter(|| black_box(strong_maximal(&ps, black_box(&grid), 1.0).unwrap()))
    });
    let mut group = c.benchmark_group("heat_maximal_128x128");
    group.sample_size(10);
    for (label, variant) in [
        ("plain", MaximalVariant::Plain),
        ("aperture", MaximalVariant::Aperture),
        ("weighted", MaximalVariant::Peetre),
    ] {
        group.bench_function(label, |b| {
            b.iter(|| black_box(heat_maximal(&ps, &cf, &phi, &params, variant).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_maximal);
criterion_main!(benches);
