use std::hint::black_box;

use causal_subsets::bounds::{binary_bound, required_k, BoundSpec, Variant};
use causal_subsets::search::{fit_local, LocalSearch};
use causal_subsets::synth::{sample_graph, sample_queries_iid, GraphParams, QueryUniverse};
use causal_subsets::{d_separated, LabeledQuery, ModelClass, QueryKind};
use criterion::{criterion_group, criterion_main, Criterion};

fn dsep(c: &mut Criterion) {
    let model = sample_graph(ModelClass::Dag, 20, 7, &GraphParams::default()).unwrap();
    let dag = model.as_dag().unwrap();
    let z: Vec<usize> = (2..8).collect();
    c.bench_function("d_separated n=20 |Z|=6", |b| {
        b.iter(|| d_separated(black_box(dag), 0, 19, black_box(&z)).unwrap())
    });
}

fn local_search(c: &mut Criterion) {
    let truth = sample_graph(ModelClass::Polytree, 10, 3, &GraphParams::default()).unwrap();
    let qs: Vec<LabeledQuery> = sample_queries_iid(&QueryUniverse::new(QueryKind::CondIndep, 10), 500, 3)
        .unwrap()
        .into_iter()
        .map(|q| {
            let o = truth.predict(&q).unwrap();
            LabeledQuery::new(q, o).unwrap()
        })
        .collect();
    let settings = LocalSearch {
        budget: 200,
        restarts: 2,
        seed: 1,
        warm_start: false,
    };
    let mut group = c.benchmark_group("search");
    group.sample_size(10);
    group.bench_function("fit_local polytree n=10 k=500", |b| {
        b.iter(|| fit_local(ModelClass::Polytree, 10, black_box(&qs), &settings).unwrap())
    });
    group.finish();
}

fn bounds(c: &mut Criterion) {
    c.bench_function("binary_bound", |b| b.iter(|| binary_bound(black_box(&BoundSpec::new(1000, 50.0, 0.1))).unwrap()));
    c.bench_function("required_k h=500", |b| {
        b.iter(|| required_k(black_box(500.0), 0.1, 0.1, Variant::Full).unwrap())
    });
}

criterion_group!(benches, dsep, local_search, bounds);
criterion_main!(benches);
