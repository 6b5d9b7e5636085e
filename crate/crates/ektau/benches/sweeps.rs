//! Parallel-vs-sequential timing for the two sweep shapes the crate
//! actually runs: full invariant evaluation over a parameter grid (what a
//! table export does) and the residual suite over a sampled point set
//! (what a verification pass does). Each workload is mapped once through
//! the rayon-backed entry point and once through its always-sequential
//! twin, so the speedup and the overhead floor are both visible.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use ektau::equations::{residual_alpha_e2, residual_eq1, residual_phi_quadratic};
use ektau::examples::coordinate_sphere;
use ektau::exec::{map_indexed, map_indexed_seq};
use ektau::linalg::Vec3;
use ektau::space::SpaceParams;
use ektau::surface::{point_data, FrameBranch, ParametrizedSurface};

fn twisted_sphere() -> ParametrizedSurface {
    coordinate_sphere(SpaceParams::new(0.0, 0.5), Vec3::new(0.0, 0.5, 0.0), 0.1)
}

/// One table row: the full invariant set at a grid point.
fn invariant_row(surface: &ParametrizedSurface, uv: [f64; 2]) -> [f64; 4] {
    match point_data(surface, uv, FrameBranch::Principal) {
        Ok(d) => {
            let (theta, w) = d
                .frame
                .as_ref()
                .map(|f| (f.theta, f.grad_norm))
                .unwrap_or((f64::NAN, f64::NAN));
            [d.k_ext, d.mean, theta, w]
        }
        Err(_) => [f64::NAN; 4],
    }
}

/// One verification sample: three pointwise residuals at a point.
fn residual_sample(surface: &ParametrizedSurface, uv: [f64; 2]) -> f64 {
    let mut worst = 0.0f64;
    if let Ok(r) = residual_eq1(surface, uv, FrameBranch::Principal, [0.7, 0.4]) {
        worst = worst.max(r.rel_residual);
    }
    if let Ok(r) = residual_alpha_e2(surface, uv, FrameBranch::Principal, [0.3, -0.8]) {
        worst = worst.max(r.rel_residual);
    }
    if let Ok(r) = residual_phi_quadratic(surface, uv, FrameBranch::Principal) {
        worst = worst.max(r.rel_residual);
    }
    worst
}

fn bench_sweeps(c: &mut Criterion) {
    let surface = twisted_sphere();

    let grid = surface.domain.grid(48, 64);
    let mut g = c.benchmark_group("invariant_grid");
    g.throughput(Throughput::Elements(grid.len() as u64));
    g.sample_size(10);
    g.bench_with_input(BenchmarkId::new("parallel", grid.len()), &grid, |b, grid| {
        b.iter(|| map_indexed(grid.len(), |i| invariant_row(&surface, grid[i])))
    });
    g.bench_with_input(BenchmarkId::new("sequential", grid.len()), &grid, |b, grid| {
        b.iter(|| map_indexed_seq(grid.len(), |i| invariant_row(&surface, grid[i])))
    });
    g.finish();

    let points = surface.domain.grid(24, 25);
    let mut g = c.benchmark_group("residual_sweep");
    g.throughput(Throughput::Elements(points.len() as u64));
    g.sample_size(10);
    g.bench_with_input(BenchmarkId::new("parallel", points.len()), &points, |b, pts| {
        b.iter(|| map_indexed(pts.len(), |i| residual_sample(&surface, pts[i])))
    });
    g.bench_with_input(BenchmarkId::new("sequential", points.len()), &points, |b, pts| {
        b.iter(|| map_indexed_seq(pts.len(), |i| residual_sample(&surface, pts[i])))
    });
    g.finish();
}

criterion_group!(benches, bench_sweeps);
criterion_main!(benches);
