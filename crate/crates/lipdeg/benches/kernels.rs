//! Data-parallel kernels on a one-worker pool against the default pool.
//! Build with `--no-default-features` to time the sequential fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lipdeg::exec;
use lipdeg::lp::{Grid, GridForm, Spectral};
use lipdeg::scalable::kge4_certificate;

fn random_form(grid: Grid, degree: usize) -> GridForm {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut a = GridForm::zeros(grid, degree).unwrap();
    for c in &mut a.components {
        c.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
    }
    a
}

fn pools() -> [(&'static str, usize); 2] {
    [("one_thread", 1), ("default", 0)]
}

fn spectral(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral");
    g.sample_size(10);
    for (dim, n) in [(2usize, 256usize), (3, 32)] {
        let grid = Grid::new(dim, n, 1.0).unwrap();
        let s = Spectral::new(grid);
        let a = random_form(grid, 1);
        for (name, threads) in pools() {
            let id = format!("{dim}d_n{n}");
            g.bench_with_input(BenchmarkId::new(format!("band_profile/{name}"), &id), &a, |b, a| {
                b.iter(|| exec::with_threads(threads, || s.band_profile(a).unwrap()))
            });
            g.bench_with_input(BenchmarkId::new(format!("derivative/{name}"), &id), &a, |b, a| {
                b.iter(|| exec::with_threads(threads, || s.exterior_derivative(a).unwrap()))
            });
        }
    }
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("kge4");
    g.sample_size(10);
    for (name, threads) in pools() {
        g.bench_function(name, |b| b.iter(|| exec::with_threads(threads, || kge4_certificate(4, 4096, 3).unwrap())));
    }
    g.finish();
}

criterion_group!(benches, spectral, sampling);
criterion_main!(benches);
