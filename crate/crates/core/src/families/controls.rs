//! Fixtures that must fail the checks.

use std::sync::Arc;

use super::hilbert::linear_segment;
use super::Family;
use crate::error::Error;
use crate::geometry::{CostSpace, RealVector, SegmentPath};
use crate::linalg::{dist_sq, dot};
use crate::sampling::box_point;

/// `c(x, y) = ((x1 - y1)^2 + 4 (x2 - y2)^2)^2` paired with straight segments,
/// which are not variational c-segments for this cost.
pub fn anisotropic_quartic_family() -> Family {
    let cost = CostSpace::from_real("anisotropic_quartic", 2, 2, |x, y| {
        let (a, b) = (x[0] - y[0], x[1] - y[1]);
        let q = a * a + 4.0 * b * b;
        Ok(q * q)
    });
    Family::new(
        "anisotropic_quartic",
        cost,
        Arc::new(|x0: &RealVector, x1: &RealVector, y: &RealVector| Ok(linear_segment(x0, x1, y))),
        Arc::new(|rng| box_point(rng, 2, -1.0, 1.0)),
    )
}

/// Squared hyperbolic distance in the Poincare disk model.
pub fn poincare_d2() -> CostSpace {
    CostSpace::from_real("poincare_disk", 2, 2, |u, v| {
        let (nu, nv) = (dot(u, u), dot(v, v));
        if nu >= 1.0 || nv >= 1.0 {
            return Err(Error::Domain("point outside the open unit disk".into()));
        }
        let z = 2.0 * dist_sq(u, v) / ((1.0 - nu) * (1.0 - nv));
        let d = (z + (z * (z + 2.0)).sqrt()).ln_1p();
        Ok(d * d)
    })
}

/// Unit-speed-proportional geodesic along the diameter at `angle`, from signed
/// hyperbolic radius `r0` to `r1`. The base point is the start.
pub fn hyperbolic_diameter_geodesic(angle: f64, r0: f64, r1: f64) -> SegmentPath<RealVector> {
    let (sn, cs) = angle.sin_cos();
    let point = move |r: f64| {
        let t = (r / 2.0).tanh();
        vec![t * cs, t * sn]
    };
    let p0 = point(r0);
    SegmentPath::new(p0.clone(), p0, point(r1), move |s| Ok(point((1.0 - s) * r0 + s * r1)))
}
