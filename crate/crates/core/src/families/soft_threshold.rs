use std::sync::Arc;

use super::hilbert::linear_segment;
use super::monge::monge_segment;
use super::Family;
use crate::error::{Error, Result};
use crate::geometry::product::{product_segment, submersion_project};
use crate::geometry::{CostSpace, RealVector, SegmentPath};
use crate::linalg::{add, dist, dist_sq, norm, scale, sub};
use crate::sampling::box_point;

/// Scalar profile: `t^2 / (2 eps)` for `t <= eps`, `t - eps/2` beyond.
pub fn soft_threshold_value(t: f64, eps: f64) -> f64 {
    if t <= eps {
        t * t / (2.0 * eps)
    } else {
        t - eps / 2.0
    }
}

pub fn soft_threshold_cost(dim: usize, eps: f64) -> CostSpace {
    CostSpace::from_real("soft_threshold", dim, dim, move |x, y| Ok(soft_threshold_value(dist(x, y), eps)))
}

/// Cost on the split space `(x', x'')`: `|x' - y'| + |x'' - y''|^2 / (2 eps)`.
pub fn split_cost(dim: usize, eps: f64) -> CostSpace {
    CostSpace::from_real("soft_threshold_split", 2 * dim, 2 * dim, move |x, y| {
        Ok(dist(&x[..dim], &y[..dim]) + dist_sq(&x[dim..], &y[dim..]) / (2.0 * eps))
    })
}

/// Shrinkage `d * min(1, eps / |d|)`: the quadratic share of an optimal split of `d`.
pub fn shrink(d: &[f64], eps: f64) -> Vec<f64> {
    let n = norm(d);
    if n <= eps {
        d.to_vec()
    } else {
        scale(d, eps / n)
    }
}

/// Optimal split of `x` relative to the fibre point `(y_bar, 0)`.
pub fn optimal_split(x: &[f64], y_bar: &[f64], eps: f64) -> RealVector {
    let d = sub(x, y_bar);
    let quad = shrink(&d, eps);
    let mut out = add(y_bar, &sub(&d, &quad));
    out.extend(quad);
    out
}

/// Segment in the split space, projected back by `(x', x'') -> x' + x''`.
pub fn soft_threshold_segment(
    dim: usize,
    eps: f64,
    x0: &[f64],
    x1: &[f64],
    y_bar: &[f64],
) -> Result<SegmentPath<RealVector>> {
    let (s0, s1) = (optimal_split(x0, y_bar, eps), optimal_split(x1, y_bar, eps));
    let zero = vec![0.0; dim];
    let first = monge_segment(&s0[..dim].to_vec(), &s1[..dim].to_vec(), &y_bar.to_vec());
    let second = linear_segment(&s0[dim..], &s1[dim..], &zero);
    let total = product_segment(&first, &second);
    let tol = 1e-12 * (1.0 + norm(&sub(x0, y_bar)) + norm(&sub(x1, y_bar)));
    submersion_project(
        &total,
        move |x: &RealVector| add(&x[..dim], &x[dim..]),
        move |y: &RealVector| add(&y[..dim], &y[dim..]),
        &split_cost(dim, eps),
        &soft_threshold_cost(dim, eps),
        tol,
    )
}

pub fn soft_threshold_family(dim: usize, eps: f64) -> Result<Family> {
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    Ok(Family::new(
        "soft_threshold",
        soft_threshold_cost(dim, eps),
        Arc::new(move |x0: &RealVector, x1: &RealVector, y: &RealVector| soft_threshold_segment(dim, eps, x0, x1, y)),
        Arc::new(move |rng| box_point(rng, dim, -2.0, 2.0)),
    ))
}
