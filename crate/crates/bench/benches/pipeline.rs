use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use netstate_bench::{three_dc, trajectory};
use netstate_core::dataset::{all_combinations, sql_for, Generator};
use netstate_core::domain::SfcType;
use netstate_core::eval::recover_sql;
use netstate_core::nl2sql::Translator;
use netstate_core::prune::Pruner;
use netstate_core::{sim, sql, store};

fn simulate(c: &mut Criterion) {
    let config = three_dc();
    c.bench_function("simulate 200 steps", |b| b.iter(|| sim::run(black_box(&config), 200, 42).unwrap()));
}

fn ingest_and_query(c: &mut Criterion) {
    let traj = trajectory(200);
    let last = traj.last().unwrap();
    c.bench_function("ingest final snapshot", |b| b.iter(|| store::ingest(black_box(last)).unwrap()));

    let st = store::ingest(last).unwrap();
    let stmts: Vec<_> = all_combinations()
        .iter()
        .map(|combo| {
            let sfc = combo.iter().any(|m| m.is_latency()).then_some(SfcType::Vs);
            sql_for(combo, sfc, Some(2)).unwrap()
        })
        .collect();
    c.bench_function("execute 25 taxonomy queries", |b| {
        b.iter(|| {
            for s in &stmts {
                black_box(sql::execute(s, &st).unwrap());
            }
        })
    });
}

fn text_paths(c: &mut Criterion) {
    let translator = Translator::default();
    let pruner = Pruner::default();
    let q = "Quick check: what are the minimum E2E latency for VoIP and the number of idle VNFs at DC 3?";
    c.bench_function("translate question", |b| b.iter(|| translator.translate(black_box(q)).unwrap()));
    c.bench_function("prune schema", |b| b.iter(|| pruner.prune(black_box(q), 512).unwrap()));
    let raw = format!("Question: {q} SQL: {} Answer: 4", translator.translate(q).unwrap());
    c.bench_function("recover sql", |b| b.iter(|| recover_sql(black_box(&raw)).unwrap()));
}

fn generate(c: &mut Criterion) {
    let traj = trajectory(200);
    let mut group = c.benchmark_group("generate");
    group.sample_size(10);
    group.bench_function("2000 records", |b| {
        b.iter_batched(Generator::default, |g| g.generate(&traj, 2000, 42).unwrap(), BatchSize::SmallInput)
    });
    group.finish();
}

criterion_group!(benches, simulate, ingest_and_query, text_paths, generate);
criterion_main!(benches);
