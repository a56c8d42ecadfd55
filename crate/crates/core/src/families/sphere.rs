use std::f64::consts::PI;
use std::sync::Arc;

use super::Family;
use crate::error::{Error, Result};
use crate::geometry::{CostSpace, RealVector, SegmentPath};
use crate::linalg::{dot, lerp, norm, sub};
use crate::sampling::sphere_point;

const UNIT_TOL: f64 = 1e-12;
/// Minimal distance kept from the cut locus of the base point.
pub const CUT_MARGIN: f64 = 1e-6;

fn check_unit(x: &[f64]) -> Result<()> {
    let n = norm(x);
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::Domain(format!("point has norm {n}, expected 1")));
    }
    Ok(())
}

/// Great-circle distance, accurate for nearby and nearly antipodal points.
pub fn geodesic_distance(x: &[f64], y: &[f64]) -> f64 {
    let diff: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let sum: f64 = x.iter().zip(y).map(|(a, b)| (a + b) * (a + b)).sum();
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

/// Riemannian logarithm at `p`.
pub fn sphere_log(p: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let c = dot(x, p);
    let w: Vec<f64> = x.iter().zip(p).map(|(a, b)| a - c * b).collect();
    let wn = norm(&w);
    let theta = geodesic_distance(x, p);
    if theta > PI - CUT_MARGIN {
        return Err(Error::CutLocus { distance: theta });
    }
    if wn == 0.0 {
        return Ok(vec![0.0; p.len()]);
    }
    Ok(w.iter().map(|v| v * theta / wn).collect())
}

/// Riemannian exponential at `p`.
pub fn sphere_exp(p: &[f64], v: &[f64]) -> Vec<f64> {
    let t = norm(v);
    if t == 0.0 {
        return p.to_vec();
    }
    let (sn, cs) = t.sin_cos();
    let out: Vec<f64> = p.iter().zip(v).map(|(a, b)| cs * a + sn * b / t).collect();
    let n = norm(&out);
    out.iter().map(|x| x / n).collect()
}

/// Segment `exp_{y_bar}((1-s) log x0 + s log x1)`.
pub fn sphere_segment(x0: &[f64], x1: &[f64], y_bar: &[f64]) -> Result<SegmentPath<RealVector>> {
    for p in [x0, x1, y_bar] {
        check_unit(p)?;
    }
    let v0 = sphere_log(y_bar, x0)?;
    let v1 = sphere_log(y_bar, x1)?;
    let p = y_bar.to_vec();
    Ok(SegmentPath::new(y_bar.to_vec(), x0.to_vec(), x1.to_vec(), move |s| Ok(sphere_exp(&p, &lerp(&v0, &v1, s)))))
}

/// Constant-speed minimizing arc from `x0` to `x1`, based at `x0`.
pub fn sphere_geodesic(x0: &[f64], x1: &[f64]) -> Result<SegmentPath<RealVector>> {
    check_unit(x0)?;
    check_unit(x1)?;
    let v = sphere_log(x0, x1)?;
    let p = x0.to_vec();
    Ok(SegmentPath::new(x0.to_vec(), x0.to_vec(), x1.to_vec(), move |s| {
        Ok(sphere_exp(&p, &v.iter().map(|c| s * c).collect::<Vec<_>>()))
    }))
}

/// Squared geodesic distance on the unit sphere of `R^{n+1}`.
pub fn sphere_cost(n: usize) -> CostSpace {
    CostSpace::from_real("sphere", n + 1, n + 1, |x, y| {
        check_unit(x)?;
        check_unit(y)?;
        let d = geodesic_distance(x, y);
        Ok(d * d)
    })
}

pub fn sphere_family(n: usize) -> Result<Family> {
    if n == 0 {
        return Err(Error::InvalidInput("sphere dimension must be at least 1".into()));
    }
    Ok(Family::new(
        "sphere",
        sphere_cost(n),
        Arc::new(|x0: &RealVector, x1: &RealVector, y: &RealVector| sphere_segment(x0, x1, y)),
        Arc::new(move |rng| sphere_point(rng, n + 1)),
    ))
}

/// Whether the pair is at least `margin` away from antipodal.
pub fn away_from_cut(x: &[f64], y: &[f64], margin: f64) -> bool {
    geodesic_distance(x, y) <= PI - margin
}

/// Unit vector orthogonal to `p` in the plane of `p` and `x` (for tests and frames).
pub fn tangent_towards(p: &[f64], x: &[f64]) -> Option<Vec<f64>> {
    let w = sub(x, &p.iter().map(|v| v * dot(x, p)).collect::<Vec<_>>());
    let n = norm(&w);
    (n > 1e-14).then(|| w.iter().map(|v| v / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;

    #[test]
    fn exp_log_round_trip() {
        let mut rng = sampling::rng(11);
        for _ in 0..200 {
            let p = sphere_point(&mut rng, 3);
            let x = sphere_point(&mut rng, 3);
            if !away_from_cut(&p, &x, 1e-3) {
                continue;
            }
            let back = sphere_exp(&p, &sphere_log(&p, &x).unwrap());
            assert!(crate::linalg::max_abs_diff(&back, &x) < 1e-12);
        }
    }

    #[test]
    fn antipodal_rejected() {
        let r = sphere_log(&[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0]);
        assert!(matches!(r, Err(Error::CutLocus { .. })));
    }
}
