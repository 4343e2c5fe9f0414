use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use steerclone::dataset::{BatchSource, BatchStream, MemoryFrames, TrainStreamConfig};
use steerclone::imgproc::augment_sample;
use steerclone::nnet::{backward, forward, mse_grad, Adam, Mode};
use steerclone::simworld::{collect_in_memory, CollectConfig};
use steerclone::{
    AugmentationProbabilities, Behavior, CameraSlot, Dataset, Model, NetParams, NetSpec, PerspectiveShiftConfig, Rng,
    World,
};

fn fixture() -> (World, Dataset, MemoryFrames) {
    let world = World::builtin(Behavior::Simplistic).unwrap();
    let cfg = CollectConfig { laps: 1, rate_hz: 0.5, ..CollectConfig::default() };
    let (ds, frames) = collect_in_memory(&world, &cfg).unwrap();
    (world, ds, frames)
}

fn bench_pipeline(c: &mut Criterion) {
    let (world, ds, frames) = fixture();
    let spec = NetSpec::default();
    let model = Model::new(spec.clone(), NetParams::init(&spec, 1).unwrap()).unwrap();
    let spawn = world.spawn_state();
    let frame = world.render(&spawn, CameraSlot::Center);

    c.bench_function("render_center", |b| b.iter(|| world.render(black_box(&spawn), CameraSlot::Center)));
    c.bench_function("predict", |b| b.iter(|| model.predict(black_box(&frame))));

    let probs = AugmentationProbabilities::SIMPLISTIC;
    let persp = PerspectiveShiftConfig::default();
    let mut rng = Rng::seed_from(3);
    let mut i = 0;
    c.bench_function("augment_sample", |b| {
        b.iter(|| {
            i = (i + 1) % ds.len();
            augment_sample(&ds.samples[i], &probs, &persp, &frames, &mut rng).unwrap()
        })
    });

    let stream_cfg = TrainStreamConfig {
        batch_size: 64,
        augmentation_loops: 1,
        probabilities: probs,
        balance: Default::default(),
        perspective: persp,
        input_width: spec.input.width,
        input_height: spec.input.height,
        seed: 0,
    };
    let batch = BatchStream::new(&ds, &frames, stream_cfg).unwrap().next_batch().unwrap();
    let params = NetParams::init(&spec, 1).unwrap();
    let mut group = c.benchmark_group("train");
    group.sample_size(20);
    group.bench_function("step_batch64", |b| {
        b.iter_batched(
            || (params.clone(), Adam::new(&params, 1e-3)),
            |(mut p, mut adam)| {
                let mut rng = Rng::seed_from(5);
                let (pred, cache) = forward(&spec, &p, &batch.inputs, Mode::Train, &mut rng).unwrap();
                let grads = backward(&spec, &p, &cache, &mse_grad(&pred, &batch.labels).unwrap()).unwrap();
                adam.step(&mut p, &grads).unwrap();
                p
            },
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(benches, bench_pipeline);
criterion_main!(benches);
