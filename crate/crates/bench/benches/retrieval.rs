use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use storyline_bench::workload;
use storyline_core::eval::{query_input, QueryMode};
use storyline_core::rankers::{rrf_fuse, CosineRanker, Pipeline, QueryEncoder, RrfConfig, System};
use storyline_core::{Bm25Params, Index, RankedList, RankerId, Scored, Timestamp};

fn index_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("index_build");
    for storylines in [15, 60] {
        let (bench, _) = workload(storylines);
        group.bench_with_input(BenchmarkId::from_parameter(bench.corpus.len()), &bench.corpus, |b, corpus| {
            b.iter(|| Index::build(black_box(corpus), Bm25Params::default()).unwrap())
        });
    }
    group.finish();
}

fn search(c: &mut Criterion) {
    let (bench, queries) = workload(60);
    let index = Index::build(&bench.corpus, Bm25Params::default()).unwrap();
    let ranker = CosineRanker {
        articles: bench.article_vectors.clone(),
        queries: QueryEncoder::Precomputed { vectors: bench.query_vectors.clone(), fallback: None },
    };
    let pipeline = Pipeline::new(&bench.corpus, &index).with_semantic(&ranker);
    let inputs: Vec<_> = queries.iter().take(200).map(|q| query_input(q, QueryMode::EC).unwrap()).collect();

    c.bench_function("bm25_search_top1000", |b| {
        let mut i = 0;
        b.iter(|| {
            let q = &inputs[i % inputs.len()];
            i += 1;
            index.search(black_box(&q.lexical_text()), q.timestamp, 1000)
        })
    });
    let mut group = c.benchmark_group("pipeline");
    for system in System::ALL {
        group.bench_function(system.as_str(), |b| {
            let mut i = 0;
            b.iter(|| {
                let q = &inputs[i % inputs.len()];
                i += 1;
                pipeline.run(black_box(q), system, 1000).unwrap()
            })
        });
    }
    group.finish();
}

fn rrf(c: &mut Criterion) {
    let lists: Vec<RankedList> = (0..3u64)
        .map(|l| {
            let mut ids: Vec<usize> = (0..1000).collect();
            // a cheap deterministic shuffle per list
            ids.sort_by_key(|&i| (i as u64).wrapping_mul(6364136223846793005).wrapping_add(l * 1442695040888963407));
            let entries = ids.iter().enumerate().map(|(r, i)| Scored::new(format!("d{i}"), (1000 - r) as f64)).collect();
            RankedList::new("q", RankerId::Bm25, entries)
        })
        .collect();
    let cfg = RrfConfig::new(60.0, vec![RankerId::Bm25, RankerId::Semantic, RankerId::Recency]).unwrap();
    c.bench_function("rrf_fuse_3x1000", |b| {
        b.iter(|| rrf_fuse(black_box(&lists), &cfg, |_| Timestamp::from_secs(0)).unwrap())
    });
}

criterion_group!(benches, index_build, search, rrf);
criterion_main!(benches);
