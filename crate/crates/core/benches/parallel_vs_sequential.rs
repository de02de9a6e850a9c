use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mpad_core::classifier::{self, KernelMatrix, SvmParams};
use mpad_core::features::{embedding_difference, FeatureVector};
use mpad_core::geometry::{align_face_with, CropGeometry};
use mpad_core::model::Label;
use mpad_core::synth::warp_to_target_with;
use mpad_core::synthetic::{self, EmbeddingWorld, SubjectStyle};
use mpad_core::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn world_features() -> Vec<(FeatureVector, Label)> {
    EmbeddingWorld::default()
        .generate()
        .into_iter()
        .map(|(_, r, p, label, _)| (embedding_difference(&r, &p, false).unwrap(), label))
        .collect()
}

fn kernel_and_scoring(c: &mut Criterion) {
    let samples = world_features();
    let xs: Vec<Vec<f64>> = samples.iter().map(|(f, _)| f.values.clone()).collect();
    let (model, _) = classifier::train(&samples[..400], &SvmParams::default()).unwrap();
    let features: Vec<FeatureVector> = samples.iter().map(|(f, _)| f.clone()).collect();

    let mut group = c.benchmark_group("kernel_matrix_800x512");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| KernelMatrix::rbf(black_box(&xs), 0.01, exec))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("score_batch_800");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| model.score_batch(black_box(&features), exec).unwrap())
        });
    }
    group.finish();
}

fn imaging(c: &mut Criterion) {
    let crop = CropGeometry::default();
    let probe = synthetic::render_face(&SubjectStyle::random(1, false), &crop, 1);
    let target = synthetic::render_face(&SubjectStyle::random(2, true), &crop, 2);

    let mut group = c.benchmark_group("warp_224");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                warp_to_target_with(&probe.image, &probe.landmarks, &target.landmarks, exec)
                    .unwrap()
            })
        });
    }
    group.finish();

    let mut group = c.benchmark_group("align_224");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| align_face_with(&probe.image, &probe.landmarks, &crop, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, kernel_and_scoring, imaging);
criterion_main!(benches);
