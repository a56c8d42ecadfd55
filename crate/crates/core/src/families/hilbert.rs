use std::sync::Arc;

use super::Family;
use crate::error::{Error, Result};
use crate::geometry::{CostSpace, RealVector, SegmentPath};
use crate::linalg::{dist_sq, lerp};
use crate::sampling::box_point;

/// Straight-line segment, independent of the base point.
pub fn linear_segment(x0: &[f64], x1: &[f64], y_bar: &[f64]) -> SegmentPath<RealVector> {
    let (a, b) = (x0.to_vec(), x1.to_vec());
    SegmentPath::new(y_bar.to_vec(), x0.to_vec(), x1.to_vec(), move |s| Ok(lerp(&a, &b, s)))
}

/// `c(x, y) = |x - y|^2` with straight-line segments.
pub fn hilbert_family(dim: usize) -> Result<Family> {
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let cost = CostSpace::from_real("hilbert", dim, dim, |x, y| Ok(dist_sq(x, y)));
    Ok(Family::new(
        "hilbert",
        cost,
        Arc::new(|x0: &RealVector, x1: &RealVector, y: &RealVector| Ok(linear_segment(x0, x1, y))),
        Arc::new(move |rng| box_point(rng, dim, -2.0, 2.0)),
    ))
}

type Map = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// `c(x, y) = |F(x) - G(y)|^2` where `F` has convex image and inverse `f_inv`.
///
/// Segments are straight in the image of `F`: `x(s) = F^{-1}((1-s) F(x0) + s F(x1))`.
pub fn generalized_hilbert_family(dim_x: usize, dim_y: usize, f: Map, f_inv: Map, g: Map) -> Family {
    let (ff, gg) = (Arc::clone(&f), Arc::clone(&g));
    let cost = CostSpace::from_real("generalized_hilbert", dim_x, dim_y, move |x, y| Ok(dist_sq(&ff(x), &gg(y))));
    let segment = Arc::new(move |x0: &RealVector, x1: &RealVector, y: &RealVector| {
        let (f0, f1) = (f(x0), f(x1));
        let inv = Arc::clone(&f_inv);
        Ok(SegmentPath::new(y.clone(), x0.clone(), x1.clone(), move |s| Ok(inv(&lerp(&f0, &f1, s)))))
    });
    Family::new("generalized_hilbert", cost, segment, Arc::new(move |rng| box_point(rng, dim_x, -2.0, 2.0)))
}
