use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use timereise_bench::{scaling_spec, Fixture};
use timereise_core::attribution::{
    feature_ablation, integrated_gradients, lime_surrogate, occlusion, timereise,
    AttributionRequest, Baseline, Perturbation, Target,
};
use timereise_core::generate_maskset;

fn timereise_scaling(c: &mut Criterion) {
    let mut group = c.benchmark_group("timereise");
    for t in [50, 200, 800] {
        let fx = Fixture::new(3, t);
        let req = AttributionRequest::new(&fx.sample, &fx.oracle, &fx.channel_means)
            .with_target(Target::Class(1));
        for n in [100, 200, 400] {
            let masks = generate_maskset(fx.shape, &scaling_spec(t, n)).unwrap();
            group.bench_with_input(BenchmarkId::new(format!("T{t}"), n), &masks, |b, masks| {
                b.iter(|| timereise(&req, masks, Perturbation::Multiply).unwrap())
            });
        }
    }
    group.finish();
}

fn baselines(c: &mut Criterion) {
    let fx = Fixture::new(3, 50);
    let req = AttributionRequest::new(&fx.sample, &fx.oracle, &fx.channel_means)
        .with_target(Target::Class(1))
        .with_seed(7);
    let mut group = c.benchmark_group("baselines_3x50");
    group.sample_size(20);
    group.bench_function("occlusion", |b| {
        b.iter(|| occlusion(&req, 1, 1, Baseline::ChannelMean).unwrap())
    });
    group.bench_function("feature_ablation", |b| {
        b.iter(|| feature_ablation(&req, 1, Baseline::ChannelMean).unwrap())
    });
    group.bench_function("lime", |b| b.iter(|| lime_surrogate(&req, 1000, 0.5, 1.0).unwrap()));
    let reference = Baseline::ChannelMean.sample(fx.shape, &fx.channel_means);
    group.bench_function("integrated_gradients", |b| {
        b.iter(|| integrated_gradients(&req, &reference, 50).unwrap())
    });
    group.finish();
}

criterion_group!(benches, timereise_scaling, baselines);
criterion_main!(benches);
