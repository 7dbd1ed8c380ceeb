//! Corpus-level throughput, sequential against the rayon path. Built with
//! `--no-default-features` both strategies run sequentially, so the
//! comparison is only meaningful with the default `parallel` feature on.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use groundparse::model::{EmbeddingModel, ModelConfig};
use groundparse::par::Parallelism;
use groundparse::parser::{parse_corpus, trace_corpus_stochastic, TraceOptions};
use groundparse::synth::{generate, SynthConfig};
use groundparse::train::{train, RewardSource, TrainConfig};
use groundparse::types::{Caption, Corpus};
use groundparse::analysis::ConcretenessTable;
use std::hint::black_box;

const MODES: [(&str, Parallelism); 2] = [
    ("sequential", Parallelism::Sequential),
    ("parallel", Parallelism::Parallel),
];

fn bundle(size: usize) -> (Vec<Caption>, ConcretenessTable) {
    let data = generate(&SynthConfig {
        size,
        seed: 42,
        ..SynthConfig::default()
    })
    .unwrap();
    let norms = ConcretenessTable::from_pairs(data.concreteness.clone());
    (data.corpus.captions, norms)
}

fn model(captions: &[Caption], config: ModelConfig) -> EmbeddingModel {
    let vocab = captions
        .iter()
        .flat_map(|c| c.tokens().iter().map(|t| t.surface.clone()));
    EmbeddingModel::init(config, vocab, 7).unwrap()
}

fn reduced_config() -> ModelConfig {
    let mut config = ModelConfig::from_variant("1,ws,me").unwrap();
    config.d_full = 64;
    config.bottleneck_hidden = 32;
    config
}

fn mlp_config() -> ModelConfig {
    let mut config = ModelConfig::from_variant("64,mlp,l2sum").unwrap();
    config.score_hidden = 64;
    config
}

fn bench_parse(c: &mut Criterion) {
    let (captions, _) = bundle(256);
    let mut group = c.benchmark_group("parse_corpus");
    group.throughput(Throughput::Elements(captions.len() as u64));
    for (config_name, config) in [("ws_reduced", reduced_config()), ("mlp", mlp_config())] {
        let m = model(&captions, config);
        for (mode_name, par) in MODES {
            group.bench_with_input(
                BenchmarkId::new(config_name, mode_name),
                &par,
                |b, &par| {
                    b.iter(|| parse_corpus(&m, black_box(&captions), par).unwrap());
                },
            );
        }
    }
    group.finish();
}

fn bench_sample(c: &mut Criterion) {
    let (captions, _) = bundle(256);
    let m = model(&captions, mlp_config());
    let mut group = c.benchmark_group("sample_corpus");
    group.throughput(Throughput::Elements(captions.len() as u64));
    for (mode_name, par) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(mode_name), &par, |b, &par| {
            b.iter(|| {
                trace_corpus_stochastic(
                    &m,
                    black_box(&captions),
                    1.0,
                    9,
                    par,
                    TraceOptions::default(),
                )
                .unwrap()
            });
        });
    }
    group.finish();
}

fn bench_train(c: &mut Criterion) {
    let (captions, norms) = bundle(64);
    let corpus = Corpus::new(captions);
    let model_config = reduced_config();
    let train_config = TrainConfig {
        epochs: 1,
        batch_size: 16,
        reward: RewardSource::Concreteness,
        ..TrainConfig::default()
    };
    let seeds: Vec<u64> = (0..4).collect();
    let mut group = c.benchmark_group("train_epoch_4_seeds");
    group.sample_size(10);
    for (mode_name, par) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(mode_name), &par, |b, &par| {
            b.iter(|| {
                train(
                    black_box(&corpus),
                    &model_config,
                    &train_config,
                    &seeds,
                    Some(&norms),
                    par,
                )
                .unwrap()
            });
        });
    }
    group.finish();
}

criterion_group!(benches, bench_parse, bench_sample, bench_train);
criterion_main!(benches);
