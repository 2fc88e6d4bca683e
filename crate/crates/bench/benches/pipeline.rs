use std::collections::BTreeMap;

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use bbin_core::*;

fn gid(s: &str) -> GeneId {
    GeneId::new(s).unwrap()
}

fn breast_graph() -> RegulatoryGraph {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../fixtures/breast.graph"
    ))
    .unwrap();
    RegulatoryGraph::parse(&text).unwrap()
}

fn bench_binarize(c: &mut Criterion) {
    let graph = breast_graph();
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../fixtures/table1.csv"
    ))
    .unwrap();
    let rows = parse_expression_csv(&text).unwrap();
    let cfg = BinarizerConfig::default();
    let markers = Biomarkers::new();
    c.bench_function("binarize table1 row against breast graph", |b| {
        b.iter(|| binarize_batch(&graph, black_box(&rows), &cfg, &markers).unwrap())
    });
}

fn bench_integrate(c: &mut Criterion) {
    let net = BooleanNetwork::parse("g1 = g3 & g4\ng2 = g1\ng3 = !g2\ng4 = g2\ng5 = g3 & !g4")
        .unwrap();
    let mut params = HillParams::uniform(net.genes(), 4.0, 0.5, 0.5, 4.0);
    for (g, k) in [("g1", 4.0), ("g2", 4.0), ("g3", 1.5), ("g4", 5.0), ("g5", 3.0)] {
        params.kappa.insert(gid(g), k);
    }
    let system = HillOdeSystem::build(&net, &params).unwrap();
    let x0: BTreeMap<GeneId, f64> =
        [("g1", 4.0), ("g2", 5.0), ("g3", 7.0), ("g4", 8.0), ("g5", 4.0)]
            .into_iter()
            .map(|(g, v)| (gid(g), v))
            .collect();
    let cfg = IntegrationConfig {
        dt: 0.01,
        t_end: 20.0,
        ..Default::default()
    };
    c.bench_function("rk4 five genes 2000 steps", |b| {
        b.iter(|| integrate_rk4(&system, black_box(&x0), &cfg).unwrap())
    });
}

criterion_group!(benches, bench_binarize, bench_integrate);
criterion_main!(benches);
