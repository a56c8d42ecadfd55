//! Seeded sampling of test points, directions and weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::geometry::verify::SampleSpec;
use crate::linalg::norm;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn box_point<R: Rng>(rng: &mut R, dim: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(lo..hi)).collect()
}

/// `spec.count` points uniform in `[lo, hi]^dim`.
pub fn box_points(dim: usize, spec: &SampleSpec) -> Vec<Vec<f64>> {
    let mut r = rng(spec.seed);
    (0..spec.count).map(|_| box_point(&mut r, dim, spec.lo, spec.hi)).collect()
}

/// Uniform point on the unit sphere of `R^ambient`.
pub fn sphere_point<R: Rng>(rng: &mut R, ambient: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..ambient).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&v);
        if n > 1e-8 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

pub fn sphere_points(ambient: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..count).map(|_| sphere_point(&mut r, ambient)).collect()
}

/// Unit direction in `R^dim`.
pub fn unit_vector<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    sphere_point(rng, dim)
}

/// Symmetric Dirichlet(1) weights.
pub fn dirichlet_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = e.iter().sum();
    e.iter().map(|v| v / total).collect()
}
