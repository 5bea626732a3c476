use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use sagnac_core::detection::{correlate_window, correlate_window_chunked, generate_timetags, DetectionConfig};

fn correlator(c: &mut Criterion) {
    let mut group = c.benchmark_group("correlate");
    group.sample_size(10);
    for duration_s in [1.0, 10.0] {
        let cfg = DetectionConfig { duration_s, seed: 1, ..DetectionConfig::default() };
        let stream = generate_timetags(&cfg).unwrap();
        group.throughput(Throughput::Elements(stream.len() as u64));
        group.bench_with_input(BenchmarkId::new("serial", duration_s), &stream, |b, s| {
            b.iter(|| correlate_window(s, 3.0).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("chunked", duration_s), &stream, |b, s| {
            b.iter(|| correlate_window_chunked(s, 3.0, chunk_count()).unwrap())
        });
    }
    group.finish();
}

fn chunk_count() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get() * 4)
}

fn generation(c: &mut Criterion) {
    let cfg = DetectionConfig { duration_s: 1.0, seed: 2, ..DetectionConfig::default() };
    c.bench_function("generate_timetags_1s", |b| b.iter(|| generate_timetags(&cfg).unwrap()));
}

criterion_group!(benches, correlator, generation);
criterion_main!(benches);
