use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::Family;
use crate::error::{Error, Result};
use crate::geometry::{CostSpace, RealVector, SegmentPath};
use crate::linalg::{dot, lerp, norm, sub};
use crate::sampling::box_point;

/// A differentiable convex potential on a convex domain.
pub trait Potential: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;
    fn in_domain(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.is_finite())
    }
    /// Closed-form inverse of the gradient, when one is known.
    fn gradient_inverse(&self, _q: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// `u(x) = |x|^2`.
pub struct Quadratic;

impl Potential for Quadratic {
    fn value(&self, x: &[f64]) -> f64 {
        dot(x, x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| 2.0 * v).collect()
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(x.len(), x.len()) * 2.0
    }
    fn gradient_inverse(&self, q: &[f64]) -> Option<Vec<f64>> {
        Some(q.iter().map(|v| v / 2.0).collect())
    }
}

/// `u(x) = sum x_i log x_i` on the positive orthant.
pub struct Entropy;

impl Potential for Entropy {
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 }).sum()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| v.ln() + 1.0).collect()
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(x.len(), x.iter().map(|v| 1.0 / v)))
    }
    fn in_domain(&self, x: &[f64]) -> bool {
        x.iter().all(|&v| v > 0.0 && v.is_finite())
    }
    fn gradient_inverse(&self, q: &[f64]) -> Option<Vec<f64>> {
        Some(q.iter().map(|v| (v - 1.0).exp()).collect())
    }
}

/// `u(x) = |x|^4`; its gradient has no convenient inverse, so reverse
/// segments go through Newton's method.
pub struct Quartic;

impl Potential for Quartic {
    fn value(&self, x: &[f64]) -> f64 {
        let r = dot(x, x);
        r * r
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r = dot(x, x);
        x.iter().map(|v| 4.0 * r * v).collect()
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let v = DVector::from_column_slice(x);
        DMatrix::identity(n, n) * (4.0 * dot(x, x)) + (&v * v.transpose()) * 8.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Quadratic,
    Entropy,
    Quartic,
}

impl PotentialKind {
    pub fn build(self) -> Arc<dyn Potential> {
        match self {
            PotentialKind::Quadratic => Arc::new(Quadratic),
            PotentialKind::Entropy => Arc::new(Entropy),
            PotentialKind::Quartic => Arc::new(Quartic),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BregmanMode {
    /// `c(x, y) = u(x) - u(y) - <grad u(y), x - y>`.
    Forward,
    /// `c(x, y) = u(y) - u(x) - <grad u(x), y - x>`.
    Reverse,
}

/// Bregman divergence `u(a) - u(b) - <grad u(b), a - b>`.
pub fn bregman_divergence(u: &dyn Potential, a: &[f64], b: &[f64]) -> Result<f64> {
    if !u.in_domain(a) || !u.in_domain(b) {
        return Err(Error::Domain("point outside the potential's domain".into()));
    }
    Ok(u.value(a) - u.value(b) - dot(&u.gradient(b), &sub(a, b)))
}

const NEWTON_MAX_ITER: usize = 50;
const NEWTON_TOL: f64 = 1e-12;

/// Solves `grad u(x) = q` by damped Newton from `start`.
pub fn invert_gradient(u: &dyn Potential, q: &[f64], start: &[f64]) -> Result<Vec<f64>> {
    if let Some(x) = u.gradient_inverse(q) {
        return Ok(x);
    }
    let target = NEWTON_TOL * norm(q).max(1.0);
    let mut x = start.to_vec();
    let mut res = sub(&u.gradient(&x), q);
    let mut rn = norm(&res);
    for _ in 0..NEWTON_MAX_ITER {
        if rn <= target {
            return Ok(x);
        }
        let h = u.hessian(&x);
        let step = h
            .lu()
            .solve(&DVector::from_column_slice(&res))
            .ok_or_else(|| Error::Numeric("singular Hessian in gradient inversion".into()))?;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a - t * d).collect();
            if u.in_domain(&trial) {
                let tr = sub(&u.gradient(&trial), q);
                let tn = norm(&tr);
                if tn < rn || t < 1e-10 {
                    x = trial;
                    res = tr;
                    rn = tn;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::Newton { iterations: NEWTON_MAX_ITER, residual: rn });
            }
        }
    }
    if rn <= target {
        Ok(x)
    } else {
        Err(Error::Newton { iterations: NEWTON_MAX_ITER, residual: rn })
    }
}

/// Reverse-mode segment: `grad u(x(s)) = (1-s) grad u(x0) + s grad u(x1)`.
pub fn reverse_segment(
    u: Arc<dyn Potential>,
    x0: &[f64],
    x1: &[f64],
    y_bar: &[f64],
) -> Result<SegmentPath<RealVector>> {
    if !u.in_domain(x0) || !u.in_domain(x1) {
        return Err(Error::Domain("segment endpoint outside the potential's domain".into()));
    }
    let (q0, q1) = (u.gradient(x0), u.gradient(x1));
    let (a, b) = (x0.to_vec(), x1.to_vec());
    Ok(SegmentPath::new(y_bar.to_vec(), x0.to_vec(), x1.to_vec(), move |s| {
        invert_gradient(u.as_ref(), &lerp(&q0, &q1, s), &lerp(&a, &b, s))
    }))
}

/// Bregman cost with its segment builder.
pub fn bregman_family(dim: usize, kind: PotentialKind, mode: BregmanMode) -> Result<Family> {
    bregman_family_with(dim, kind.build(), mode, kind == PotentialKind::Entropy)
}

/// Bregman family for an arbitrary potential; `positive` restricts sampling to the positive orthant.
pub fn bregman_family_with(dim: usize, u: Arc<dyn Potential>, mode: BregmanMode, positive: bool) -> Result<Family> {
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let uc = Arc::clone(&u);
    let cost = CostSpace::from_real("bregman", dim, dim, move |x, y| match mode {
        BregmanMode::Forward => bregman_divergence(uc.as_ref(), x, y),
        BregmanMode::Reverse => bregman_divergence(uc.as_ref(), y, x),
    });
    let segment = Arc::new(move |x0: &RealVector, x1: &RealVector, y: &RealVector| match mode {
        BregmanMode::Forward => Ok(super::hilbert::linear_segment(x0, x1, y)),
        BregmanMode::Reverse => reverse_segment(Arc::clone(&u), x0, x1, y),
    });
    let (lo, hi) = if positive { (0.1, 2.0) } else { (-2.0, 2.0) };
    Ok(Family::new("bregman", cost, segment, Arc::new(move |rng| box_point(rng, dim, lo, hi))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_inverts_quartic_gradient() {
        let q = Quartic.gradient(&[0.3, -0.7]);
        let x = invert_gradient(&Quartic, &q, &[1.0, 1.0]).unwrap();
        assert!((x[0] - 0.3).abs() < 1e-12 && (x[1] + 0.7).abs() < 1e-12);
    }

    #[test]
    fn entropy_divergence_is_kl_form() {
        let d = bregman_divergence(&Entropy, &[0.2, 0.8], &[0.5, 0.5]).unwrap();
        let expected = 0.2 * (0.2_f64 / 0.5).ln() + 0.8 * (0.8_f64 / 0.5).ln();
        assert!((d - expected).abs() < 1e-14);
    }
}
