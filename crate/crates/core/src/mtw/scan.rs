use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{mixed_hessian, mtw_tensor, stereographic, SmoothCost};
use crate::error::{Error, Result};
use crate::families::sphere::geodesic_distance;
use crate::linalg::dist;
use crate::report::SCHEMA_VERSION;
use crate::sampling::{box_point, rng, unit_vector, SeededRng};

/// Tolerance for nonnegativity claims on finite-difference tensors.
pub const FD_TOL: f64 = 1e-3;
/// Pairs with `|A|` below this count as orthogonal.
pub const ORTHO_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MtwSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    /// Tensor value.
    pub s: f64,
    /// Mixed-Hessian pairing of `xi` and `eta`.
    pub a: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// No sample has `S < -FD_TOL`.
    NnccConsistent,
    /// Negative values occur, but never on orthogonal pairs.
    MtwOnlyConsistent,
    Neither,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanSummary {
    pub schema: u32,
    pub cost: String,
    pub n_samples: usize,
    pub seed: u64,
    pub min_s: f64,
    pub witness: MtwSample,
    pub min_s_orthogonal: f64,
    pub witness_orthogonal: MtwSample,
    pub classification: Classification,
}

type PairSampler = dyn Fn(&mut SeededRng) -> (Vec<f64>, Vec<f64>) + Send + Sync;

/// Sampler of base pairs `(x, y)` for a curvature scan.
#[derive(Clone)]
pub struct ScanRegion {
    sampler: Arc<PairSampler>,
}

impl ScanRegion {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&mut SeededRng) -> (Vec<f64>, Vec<f64>) + Send + Sync + 'static,
    {
        Self { sampler: Arc::new(f) }
    }

    /// Pairs uniform in `[lo, hi]^dim` with separation in `[min_sep, max_sep]`.
    pub fn separated_box(dim: usize, lo: f64, hi: f64, min_sep: f64, max_sep: f64) -> Self {
        Self::new(move |r| loop {
            let x = box_point(r, dim, lo, hi);
            let y = box_point(r, dim, lo, hi);
            let d = dist(&x, &y);
            if d >= min_sep && d <= max_sep {
                return (x, y);
            }
        })
    }

    /// Stereographic coordinates of sphere pairs at geodesic distance at most `max_dist`.
    pub fn sphere_chart(n: usize, radius: f64, max_dist: f64) -> Self {
        Self::new(move |r| loop {
            let u = box_point(r, n, -radius, radius);
            let v = box_point(r, n, -radius, radius);
            if u.iter().map(|a| a * a).sum::<f64>() > radius * radius
                || v.iter().map(|a| a * a).sum::<f64>() > radius * radius
            {
                continue;
            }
            if geodesic_distance(&stereographic(&u), &stereographic(&v)) <= max_dist {
                return (u, v);
            }
        })
    }

    pub fn sample(&self, r: &mut SeededRng) -> (Vec<f64>, Vec<f64>) {
        (self.sampler)(r)
    }
}

struct Draw {
    x: Vec<f64>,
    y: Vec<f64>,
    xi: Vec<f64>,
    eta: Vec<f64>,
    free: Vec<f64>,
}

fn orthogonal_direction(c: &SmoothCost, d: &Draw) -> Result<Vec<f64>> {
    let h = mixed_hessian(c, &d.x, &d.y)?;
    let w = h.transpose() * DVector::from_column_slice(&d.xi);
    let v = DVector::from_column_slice(&d.free);
    let p = &v - &w * (v.dot(&w) / w.dot(&w));
    let n = p.norm();
    if n < 1e-12 {
        return Err(Error::Numeric("orthogonal direction collapsed".into()));
    }
    Ok((p / n).iter().copied().collect())
}

/// Samples the tensor at random points and directions.
///
/// Each draw contributes a random pair `(xi, eta)` and a pair with `eta`
/// projected onto the kernel of `xi^T H`, so orthogonal directions are
/// always represented.
pub fn nncc_scan(c: &SmoothCost, region: &ScanRegion, n_samples: usize, seed: u64) -> Result<ScanSummary> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("a scan needs at least one sample".into()));
    }
    let mut r = rng(seed);
    let draws: Vec<Draw> = (0..n_samples)
        .map(|_| {
            let (x, y) = region.sample(&mut r);
            let xi = unit_vector(&mut r, c.dim_x());
            let eta = unit_vector(&mut r, c.dim_y());
            let free = unit_vector(&mut r, c.dim_y());
            let _: f64 = r.random();
            Draw { x, y, xi, eta, free }
        })
        .collect();
    let results: Vec<Result<(MtwSample, MtwSample)>> = draws
        .par_iter()
        .map(|d| {
            let random = mtw_tensor(c, &d.x, &d.y, &d.xi, &d.eta)?;
            let eta_perp = orthogonal_direction(c, d)?;
            let ortho = mtw_tensor(c, &d.x, &d.y, &d.xi, &eta_perp)?;
            Ok((random, ortho))
        })
        .collect();

    let mut all: Option<MtwSample> = None;
    let mut orth: Option<MtwSample> = None;
    for res in results {
        let (a, b) = res?;
        for sample in [a, b] {
            if all.as_ref().is_none_or(|w| sample.s < w.s) {
                all = Some(sample.clone());
            }
            if sample.a.abs() <= ORTHO_TOL && orth.as_ref().is_none_or(|w| sample.s < w.s) {
                orth = Some(sample);
            }
        }
    }
    let witness = all.expect("at least one sample");
    let witness_orthogonal = orth.ok_or_else(|| Error::Numeric("no orthogonal sample was produced".into()))?;
    let classification = if witness.s >= -FD_TOL {
        Classification::NnccConsistent
    } else if witness_orthogonal.s >= -FD_TOL {
        Classification::MtwOnlyConsistent
    } else {
        Classification::Neither
    };
    Ok(ScanSummary {
        schema: SCHEMA_VERSION,
        cost: c.name().to_string(),
        n_samples,
        seed,
        min_s: witness.s,
        min_s_orthogonal: witness_orthogonal.s,
        witness,
        witness_orthogonal,
        classification,
    })
}
