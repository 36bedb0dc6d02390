use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use nli_bench::{desk_link, sources};
use nli_core::formats::{builtin, fit_mb_entropy, CcdmLayout, CcdmSpec};
use nli_core::moments::{ccdm_windowed_moments, exact_iid_moments, WindowAlignment};
use nli_core::nli::{
    channel_kernels, eta_from_kernels, eta_rp1_mc, link_kernels, Assignment, Estimator, KernelCube, McConfig, ModelConfig,
};
use nli_core::ssfm::{propagate, synthesize_wdm, SsfmConfig, StepRule};

fn bench_cube(c: &mut Criterion) {
    let link = desk_link(5, 1.12);
    let mut g = c.benchmark_group("kernel_cube");
    for n in [33usize, 65] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| KernelCube::build(&link, 2, Assignment([2, 2, 2]), black_box(n)))
        });
    }
    g.finish();
}

fn bench_channel_kernels(c: &mut Criterion) {
    let link = desk_link(5, 1.12);
    let cfg = ModelConfig::fixed(33);
    c.bench_function("channel_kernels_5ch_n33", |b| b.iter(|| channel_kernels(&link, black_box(2), &cfg)));
}

fn bench_contraction(c: &mut Criterion) {
    let link = desk_link(5, 1.12);
    let kernels = link_kernels(&link, &ModelConfig::fixed(33), &[]);
    let m = exact_iid_moments(&builtin("4D-64PRS").unwrap());
    c.bench_function("eta_from_kernels_5ch", |b| {
        b.iter(|| eta_from_kernels(&link, black_box(&kernels), &m, Estimator::FourD).unwrap())
    });
}

fn bench_windowed(c: &mut Criterion) {
    let ps = fit_mb_entropy(&builtin("PM-16QAM").unwrap(), 6.0).unwrap();
    let spec = CcdmSpec::new(&ps.shaped, 100, CcdmLayout::PerPolarization).unwrap();
    c.bench_function("ccdm_windowed_moments_w28", |b| {
        b.iter(|| ccdm_windowed_moments(&spec, black_box(28), WindowAlignment::Random, "ps").unwrap())
    });
}

fn bench_mc(c: &mut Criterion) {
    let link = desk_link(3, 1.12);
    let src = sources("PM-16QAM", 1, 1).remove(0);
    let cfg = McConfig { n: 32, realizations: 8, spill: true };
    c.bench_function("rp1_mc_3ch_n32_8real", |b| b.iter(|| eta_rp1_mc(&src, &link, black_box(1), &cfg).unwrap()));
}

fn bench_ssfm(c: &mut Criterion) {
    let link = desk_link(5, 0.0);
    let cfg = SsfmConfig { n_symbols: 1024, n_frames: 1, step: StepRule::Fixed(1.0), check_convergence: false, ..Default::default() };
    let frame = synthesize_wdm(&mut sources("PM-16QAM", 5, 1), &link.grid, &cfg).unwrap();
    let mut g = c.benchmark_group("ssfm");
    g.sample_size(10);
    g.bench_function("span_5ch_1024sym_1km", |b| {
        b.iter(|| {
            let mut w = frame.clone();
            propagate(&mut w, &link, &cfg).unwrap()
        })
    });
    g.finish();
}

criterion_group!(kernels, bench_cube, bench_channel_kernels, bench_contraction);
criterion_group!(moments, bench_windowed);
criterion_group!(estimators, bench_mc, bench_ssfm);
criterion_main!(kernels, moments, estimators);
