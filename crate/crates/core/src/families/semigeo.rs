use std::sync::Arc;

use rand::Rng;

use super::Family;
use crate::error::{Error, Result};
use crate::geometry::{CostSpace, RealVector, SegmentPath};
use crate::linalg::{dist_sq, lerp};
use crate::sampling::box_point;

/// Points are `(x, a)` with the height `a` stored as the last coordinate.
/// `c((x, a), (y, b)) = |x - y|^2 / (2b) + g a / b`, defined for `b > 0`.
pub fn semi_geostrophic_family(dim: usize, g: f64) -> Result<Family> {
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    if g == 0.0 || !g.is_finite() {
        return Err(Error::InvalidInput("g must be finite and nonzero".into()));
    }
    let cost = CostSpace::from_real("semi_geostrophic", dim + 1, dim + 1, move |p, q| {
        let (a, b) = (p[dim], q[dim]);
        if !(b > 0.0) {
            return Err(Error::Domain(format!("height b = {b} must be positive")));
        }
        Ok(dist_sq(&p[..dim], &q[..dim]) / (2.0 * b) + g * a / b)
    });
    let segment = Arc::new(move |p0: &RealVector, p1: &RealVector, y: &RealVector| segment(dim, g, p0, p1, y));
    Ok(Family::new(
        "semi_geostrophic",
        cost,
        segment,
        Arc::new(move |rng| {
            let mut p = box_point(rng, dim, -2.0, 2.0);
            p.push(rng.random_range(0.5..2.0));
            p
        }),
    ))
}

fn segment(dim: usize, g: f64, p0: &[f64], p1: &[f64], y: &[f64]) -> Result<SegmentPath<RealVector>> {
    let (a0, a1) = (p0[dim], p1[dim]);
    let k = dist_sq(&p0[..dim], &p1[..dim]) / (2.0 * g);
    let height = move |s: f64| (1.0 - s) * a0 + s * a1 + s * (1.0 - s) * k;
    // Minimum of the height on [0, 1]: endpoints, plus the vertex when the parabola opens upward.
    let mut lowest = a0.min(a1);
    if k < 0.0 {
        let vertex = ((a1 - a0 + k) / (2.0 * k)).clamp(0.0, 1.0);
        lowest = lowest.min(height(vertex));
    }
    if !(lowest > 0.0) {
        return Err(Error::Domain(format!("segment height reaches {lowest} <= 0")));
    }
    let (x0, x1) = (p0[..dim].to_vec(), p1[..dim].to_vec());
    Ok(SegmentPath::new(y.to_vec(), p0.to_vec(), p1.to_vec(), move |s| {
        let mut p = lerp(&x0, &x1, s);
        p.push(height(s));
        Ok(p)
    }))
}
