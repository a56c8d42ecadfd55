use std::sync::Arc;

use super::Family;
use crate::error::{Error, Result};
use crate::geometry::{uniform_grid, CostSpace, RealVector};
use crate::linalg::dist;
use crate::mtw::{c_segment_solve, SmoothCost};
use crate::sampling::box_point;

fn log_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    let r = dist(x, y);
    if r == 0.0 {
        return Err(Error::Evaluation("log-distance cost is undefined on the diagonal".into()));
    }
    Ok(-r.ln())
}

/// `c(x, y) = -log |x - y|` off the diagonal.
pub fn log_distance_cost(dim: usize) -> CostSpace {
    CostSpace::from_real("log_distance", dim, dim, log_distance)
}

/// Smooth version used by the differential machinery; the domain keeps
/// `|x - y| >= min_sep` so that stencils stay off the diagonal.
pub fn log_distance_smooth(dim: usize, min_sep: f64) -> SmoothCost {
    SmoothCost::new("log_distance", dim, dim, |x, y| -dist(x, y).ln(), move |x, y| dist(x, y) >= min_sep)
}

/// Log-distance cost with c-segments from the Newton continuation solver.
pub fn log_distance_family(dim: usize) -> Result<Family> {
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let smooth = log_distance_smooth(dim, 1e-3);
    Ok(Family::new(
        "log_distance",
        log_distance_cost(dim),
        Arc::new(move |x0: &RealVector, x1: &RealVector, y: &RealVector| {
            c_segment_solve(&smooth, x0, x1, y, &uniform_grid(65))
        }),
        Arc::new(move |rng| box_point(rng, dim, -2.0, 2.0)),
    ))
}
