use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use jetprolong::contact::{rank4_type, PdeSurface};
use jetprolong::expr::Point;
use jetprolong::par;
use jetprolong::prolong::{fiber_topology, plucker_fiber};
use jetprolong::solutions::{verify_integral_surface, wave_solution_xt, InputFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn surface_points(f: &PdeSurface, n: usize) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut out = Vec::new();
    while out.len() < n {
        let v: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if let Some(p) = f.project(&Point::new(f.chart.clone(), v), "t") {
            out.push(p);
        }
    }
    out
}

fn fiber_work(f: &PdeSurface, p: &Point) -> usize {
    let s = f.induced_distribution(p).unwrap();
    let kind = rank4_type(&s).unwrap().kind as usize;
    fiber_topology(&plucker_fiber(&s).unwrap()).signature.0 + kind
}

fn fibers(c: &mut Criterion) {
    let f = PdeSurface::parse("r*t - s^2 - x*z + p^2").unwrap();
    let pts = surface_points(&f, 256);
    let mut g = c.benchmark_group("fiber_topology_256");
    g.bench_function(BenchmarkId::new("map", if par::is_parallel() { "rayon" } else { "fallback" }), |b| {
        b.iter(|| par::map(&pts, |p| fiber_work(&f, p)))
    });
    g.bench_function(BenchmarkId::new("map_sequential", "baseline"), |b| {
        b.iter(|| par::map_sequential(&pts, |p| fiber_work(&f, p)))
    });
    g.finish();
}

fn verification(c: &mut Criterion) {
    let y = InputFunction::parse("y", "t^3 - t", "t").unwrap();
    let z0 = InputFunction::parse("z0", "x^4", "x").unwrap();
    let s = wave_solution_xt(&y, &z0).unwrap();
    c.bench_function("verify_wave_xt_50x50", |b| b.iter(|| verify_integral_surface(&s, 50, [[-1.0, 1.0], [-1.0, 1.0]], 1e-9).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = fibers, verification
}
criterion_main!(benches);
