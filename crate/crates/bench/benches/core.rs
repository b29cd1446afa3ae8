use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use gaussobs::fock::{density_matrix_at, Grid};
use gaussobs::observable::{noisy_homodyne, DEFAULT_TOL};
use gaussobs::testkit::{random_valid_parts, Rng};
use gaussobs::{extend, extended_williamson, RMat, RVec};

fn instances(n: usize) -> Vec<gaussobs::GaussianObservable> {
    let mut rng = Rng::seed(11);
    (0..n)
        .map(|_| random_valid_parts(&mut rng, 4, 0).observable())
        .collect()
}

fn williamson(c: &mut Criterion) {
    let obs = instances(32);
    c.bench_function("extended_williamson x32", |b| {
        b.iter(|| {
            for o in &obs {
                black_box(extended_williamson(o.alpha(), &o.delta_k(), DEFAULT_TOL).unwrap());
            }
        })
    });
}

fn naimark(c: &mut Criterion) {
    let obs = instances(32);
    c.bench_function("naimark extend x32", |b| {
        b.iter(|| {
            for o in &obs {
                black_box(extend(o, DEFAULT_TOL).unwrap());
            }
        })
    });
}

fn oracle(c: &mut Criterion) {
    let obs = noisy_homodyne(1, RMat::from_element(1, 1, 0.5)).unwrap();
    let z = RVec::zeros(1);
    let mut group = c.benchmark_group("fock density");
    group.sample_size(10);
    for cutoff in [10, 20] {
        group.bench_function(format!("noisy homodyne N={cutoff}"), |b| {
            b.iter(|| black_box(density_matrix_at(&obs, &z, cutoff, Grid::Auto).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, williamson, naimark, oracle);
criterion_main!(benches);
