//! Parallel vs sequential execution of the flow's inner loops.

use std::f64::consts::{FRAC_PI_2, TAU};

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use flowerbed::experiment::random_flower;
use flowerbed::shortening::{birkhoff_edge_step, flow};
use flowerbed::{ChartPoint, Exec, FlowConfig, Flower, ModelKind, ModelManifold};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const STRATEGIES: [(&str, Exec); 2] = [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)];

fn bumped_equator(m: &ModelManifold) -> Flower {
    let pts: Vec<_> = (1..24)
        .map(|i| {
            let phi = TAU * i as f64 / 24.0;
            ChartPoint::new(0, FRAC_PI_2 + 0.2 * (3.0 * phi).sin(), phi)
        })
        .collect();
    Flower::from_loops(m, ChartPoint::new(0, FRAC_PI_2, 0.0), &[pts]).unwrap()
}

fn many_loops(m: &ModelManifold, loops: usize) -> Flower {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    random_flower(m, &mut rng, loops, 0.6, 12).unwrap()
}

fn birkhoff_all_edges(c: &mut Criterion) {
    let mut group = c.benchmark_group("birkhoff_all_edges");
    for name in ["torus", "double-cusp"] {
        let m = ModelManifold::new(ModelKind::from_name(name, None).unwrap()).unwrap();
        let f = many_loops(&m, 8);
        for (label, exec) in STRATEGIES {
            let cfg = FlowConfig { exec, ..FlowConfig::for_model(&m) };
            group.bench_with_input(BenchmarkId::new(label, name), &f, |b, f| {
                b.iter(|| exec.map(f.edges(), |e| birkhoff_edge_step(&m, e, &cfg).unwrap().length()))
            });
        }
    }
    group.finish();
}

fn full_flow(c: &mut Criterion) {
    let mut group = c.benchmark_group("flow");
    group.sample_size(10);
    let sphere = ModelManifold::new(ModelKind::RoundSphere { radius: 1.0 }).unwrap();
    let cusp = ModelManifold::new(ModelKind::from_name("double-cusp", None).unwrap()).unwrap();
    let cases = [("sphere_equator", &sphere, bumped_equator(&sphere)), ("cusp_random", &cusp, many_loops(&cusp, 6))];
    for (case, m, f) in &cases {
        for (label, exec) in STRATEGIES {
            let cfg = FlowConfig { exec, max_iters: 60, ..FlowConfig::for_model(m) };
            group.bench_with_input(BenchmarkId::new(label, case), f, |b, f| b.iter(|| flow(m, f, &cfg).unwrap().final_length()));
        }
    }
    group.finish();
}

criterion_group!(benches, birkhoff_all_edges, full_flow);
criterion_main!(benches);
