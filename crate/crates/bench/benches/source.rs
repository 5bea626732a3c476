use criterion::{criterion_group, criterion_main, Criterion};
use sagnac_core::detection::{fringe_scan, visibility};
use sagnac_core::pipeline::calibrate_dispersion;
use sagnac_core::source::{sagnac_state, PhaseProfile, SourceConfig, SpectralEnvelope};

fn broadband() -> SourceConfig {
    SourceConfig {
        phase_profile: PhaseProfile::quadratic(0.0074),
        ..SourceConfig::with_envelope(SpectralEnvelope::gaussian(20.0).unwrap())
    }
}

fn source(c: &mut Criterion) {
    let ideal = SourceConfig::ideal();
    let broad = broadband();
    c.bench_function("sagnac_state_ideal", |b| b.iter(|| sagnac_state(&ideal).unwrap()));
    c.bench_function("sagnac_state_broadband", |b| b.iter(|| sagnac_state(&broad).unwrap()));

    let state = sagnac_state(&broad).unwrap().conditional.unwrap();
    c.bench_function("fringe_scan_ad_16", |b| {
        b.iter(|| visibility(&fringe_scan(&state, std::f64::consts::FRAC_PI_4, 16).unwrap()).unwrap())
    });

    let base = SourceConfig::with_envelope(SpectralEnvelope::gaussian(20.0).unwrap());
    let mut group = c.benchmark_group("calibration");
    group.sample_size(10);
    group.bench_function("calibrate_0.78", |b| b.iter(|| calibrate_dispersion(0.78, &base, 16).unwrap()));
    group.finish();
}

criterion_group!(benches, source);
criterion_main!(benches);
