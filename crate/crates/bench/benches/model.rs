use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hegmn::dataset::{build_corpus, synth_source_graph, SamplerSpec};
use hegmn::model::{init_params, HeGMN, ModelConfig, Variant};
use hegmn::tensor::Tape;

fn scoring(c: &mut Criterion) {
    let src = synth_source_graph(3, 3, 5000, 2.0, 0).unwrap();
    let graphs = build_corpus(&src, 20, &SamplerSpec { max_nodes: 10, min_node_types: 2, seed: 1 }).unwrap();
    let mut cfg = ModelConfig::new(3, 3);
    cfg.max_nodes = 10;
    let model = HeGMN::new(cfg.clone()).unwrap();
    let params = init_params(&cfg, 0).unwrap();
    let inputs: Vec<_> = graphs.iter().map(|g| model.prepare(g).unwrap()).collect();
    let pairs: Vec<_> = (0..10).map(|i| (&inputs[i], &inputs[i + 10])).collect();

    let mut group = c.benchmark_group("score_10_pairs");
    for (name, variant) in [("full", Variant::Full), ("graph_match_only", Variant::GraphMatchOnly)] {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pairs.iter().map(|(a, c)| model.score(&params, a, c, variant).unwrap()).sum::<f64>())
        });
    }
    group.finish();

    c.bench_function("train_step_one_pair", |b| {
        b.iter(|| {
            let mut t = Tape::new();
            let l = model.pair_loss(&mut t, &params, pairs[0].0, pairs[0].1, 0.5).unwrap();
            let g = t.backward(l).unwrap();
            t.param_grads(g).len()
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = scoring
}
criterion_main!(benches);
