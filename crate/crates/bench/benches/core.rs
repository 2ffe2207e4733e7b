use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use sigmavol::cells::{init_params, SigmaLstmGraph};
use sigmavol::econo::{garch11_filter, garch11_fit, GarchParams};
use sigmavol::simgen::{simulate_garch11, SplitMix64, DEFAULT_BURN_IN};

fn sigma_lstm_window(c: &mut Criterion) {
    for hidden in [4, 8, 16] {
        let graph = SigmaLstmGraph::new(hidden, 22).unwrap();
        let flat = init_params(hidden, 1).unwrap().to_flat();
        let mut g = SplitMix64::new(2);
        let r: Vec<f64> = (0..23).map(|_| 0.1 * g.next_normal()).collect();
        let noise = g.normals(22 * hidden);
        c.bench_function(&format!("sigma_lstm_window_gradient_h{hidden}"), |b| {
            b.iter(|| graph.objective_and_gradient(black_box(&flat), &r[..22], &r[1..], &noise).unwrap())
        });
    }
}

fn garch(c: &mut Criterion) {
    let p = GarchParams::garch11(0.05, 0.1, 0.85).unwrap();
    let path = simulate_garch11(&p, 5_000, 3, DEFAULT_BURN_IN).unwrap();
    c.bench_function("garch11_filter_5000", |b| {
        b.iter(|| garch11_filter(&p, black_box(&path.returns), None).unwrap())
    });
    let mut group = c.benchmark_group("garch11_fit");
    group.sample_size(10);
    group.bench_function("n5000", |b| b.iter(|| garch11_fit(black_box(&path.returns)).unwrap()));
    group.finish();
}

criterion_group!(benches, sigma_lstm_window, garch);
criterion_main!(benches);
