//! Scoring throughput benchmarks.
//!
//! Benchmark ids carry the compiled execution mode, so results from the
//! default (rayon) build and a `--no-default-features` (sequential) build
//! land side by side in the same criterion target:
//!
//! ```bash
//! cargo bench -p evbench-core
//! cargo bench -p evbench-core --no-default-features
//! ```

use std::collections::BTreeMap;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use evbench_core::backends::{
    load_predictions_str, run_backend, PredictionsFileBackend, RunOptions, Task,
};
use evbench_core::corpus::Document;
use evbench_core::metrics::{f1_vs_threshold, multilabel, one_vs_rest, pr_curve, roc_curve};
use evbench_core::par;
use evbench_core::taxonomy::{AttackSet, AttackType, CategoryVector};
use evbench_core::Taxonomy;

const DOCS: usize = 40_000;

struct Fixture {
    gold: BTreeMap<String, AttackSet>,
    vectors: BTreeMap<String, CategoryVector>,
    pred_sets: BTreeMap<String, AttackSet>,
    docs: Vec<Document>,
    predictions_jsonl: String,
}

fn fixture() -> Fixture {
    let mut rng = StdRng::seed_from_u64(40);
    let mut gold = BTreeMap::new();
    let mut vectors = BTreeMap::new();
    let mut pred_sets = BTreeMap::new();
    let mut docs = Vec::with_capacity(DOCS);
    let mut predictions_jsonl = String::new();
    for i in 0..DOCS {
        let id = format!("d{i:05}");
        let mut gold_set = AttackSet::EMPTY;
        gold_set.insert(AttackType::from_ordinal(rng.random_range(0..9)).unwrap());
        let mut vector = CategoryVector::zero();
        for t in AttackType::ALL {
            if rng.random_bool(0.25) {
                vector.set(t, rng.random_range(0..=100) as f64 / 100.0);
            }
        }
        predictions_jsonl.push_str(&format!(
            "{{\"id\":\"{id}\",\"scores\":{{{}}}}}\n",
            AttackType::ALL
                .iter()
                .filter(|t| vector.get(**t) > 0.0)
                .map(|t| format!("\"{}\":{}", t.display_name(), vector.get(*t)))
                .collect::<Vec<_>>()
                .join(",")
        ));
        pred_sets.insert(id.clone(), vector.threshold(0.5));
        gold.insert(id.clone(), gold_set);
        vectors.insert(id.clone(), vector);
        docs.push(Document {
            id,
            text: "synthetic event report".into(),
            date: None,
            binary_label: None,
            attack_labels: Some(gold_set),
        });
    }
    Fixture {
        gold,
        vectors,
        pred_sets,
        docs,
        predictions_jsonl,
    }
}

fn bench_one_vs_rest(c: &mut Criterion) {
    let fx = fixture();
    let mut group = c.benchmark_group("one_vs_rest_40k");
    group.throughput(Throughput::Elements(DOCS as u64));
    group.bench_function(BenchmarkId::from_parameter(par::mode()), |b| {
        b.iter(|| one_vs_rest(&fx.gold, &fx.vectors, 0.5).unwrap())
    });
    group.finish();
}

fn bench_multilabel(c: &mut Criterion) {
    let fx = fixture();
    let mut group = c.benchmark_group("multilabel_40k");
    group.throughput(Throughput::Elements(DOCS as u64));
    group.bench_function(BenchmarkId::from_parameter(par::mode()), |b| {
        b.iter(|| multilabel(&fx.gold, &fx.pred_sets).unwrap())
    });
    group.finish();
}

fn bench_curve_battery(c: &mut Criterion) {
    let fx = fixture();
    let ids: Vec<&String> = fx.gold.keys().collect();
    let mut group = c.benchmark_group("curves_9_types_40k");
    group.sample_size(20);
    group.throughput(Throughput::Elements((DOCS * 9) as u64));
    group.bench_function(BenchmarkId::from_parameter(par::mode()), |b| {
        b.iter(|| {
            let results = par::map_indices(9, |ordinal| {
                let t = AttackType::from_ordinal(ordinal).unwrap();
                let gold: Vec<bool> = ids.iter().map(|id| fx.gold[*id].contains(t)).collect();
                let scores: Vec<f64> = ids.iter().map(|id| fx.vectors[*id].get(t)).collect();
                let roc = roc_curve(&scores, &gold).unwrap();
                let pr = pr_curve(&scores, &gold).unwrap();
                let f1 = f1_vs_threshold(&scores, &gold, None).unwrap();
                roc.points.len() + pr.points.len() + f1.points.len()
            });
            results.iter().sum::<usize>()
        })
    });
    group.finish();
}

fn bench_backend_throughput(c: &mut Criterion) {
    let fx = fixture();
    let taxonomy = Taxonomy::builtin();
    let set = load_predictions_str(&fx.predictions_jsonl, "synthetic", &taxonomy).unwrap();
    let backend = PredictionsFileBackend::from_set("synthetic", set);
    let mut group = c.benchmark_group("run_backend_per_doc");
    group.sample_size(20);
    group.throughput(Throughput::Elements(DOCS as u64));
    for concurrency in [1usize, 8] {
        group.bench_with_input(
            BenchmarkId::new(par::mode(), concurrency),
            &concurrency,
            |b, &concurrency| {
                let options = RunOptions {
                    concurrency,
                    batch_size: 128,
                };
                b.iter(|| run_backend(&backend, &fx.docs, Task::Attack, &options).unwrap())
            },
        );
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_one_vs_rest,
    bench_multilabel,
    bench_curve_battery,
    bench_backend_throughput
);
criterion_main!(benches);
