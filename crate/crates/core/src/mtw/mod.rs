//! Finite-difference calculus for smooth costs: mixed Hessian, MTW tensor,
//! curvature scans and the c-segment solver.
//!
//! Derivatives are tensor products of second-order central stencils, each
//! refined by one Richardson step (`(4 D(h/2) - D(h)) / 3`). Steps are powers
//! of two so that stencil offsets are exact in binary.
//!
//! Sign convention: with `H = d2c/dx dy` and `K = H^{-1}`,
//! `S = sum c_{ik,m} K_{m r} c_{r,jl} xi^i xi^k eta^j eta^l - c_{ik,jl} xi^i xi^k eta^j eta^l`.
//! It vanishes for quadratic costs and is nonnegative for the squared
//! geodesic distance on the round sphere.

mod scan;
mod segment;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CostSpace;

pub use scan::{nncc_scan, Classification, MtwSample, ScanRegion, ScanSummary, FD_TOL};
pub use segment::{auto_csegment_check, c_segment_solve, CsegmentResidual};

/// Step sizes by total derivative order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdSteps {
    pub first: f64,
    pub second: f64,
    pub third: f64,
    pub fourth: f64,
    /// Apply one Richardson step on top of each central difference.
    pub richardson: bool,
}

impl Default for FdSteps {
    fn default() -> Self {
        Self {
            first: 2f64.powi(-14),
            second: 2f64.powi(-11),
            third: 2f64.powi(-9),
            fourth: 2f64.powi(-7),
            richardson: true,
        }
    }
}

impl FdSteps {
    fn for_order(&self, order: u32) -> f64 {
        match order {
            0 | 1 => self.first,
            2 => self.second,
            3 => self.third,
            _ => self.fourth,
        }
    }

    /// Same steps scaled by `k` (used for convergence studies).
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            first: self.first * k,
            second: self.second * k,
            third: self.third * k,
            fourth: self.fourth * k,
            richardson: self.richardson,
        }
    }
}

type RealFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;
type DomainFn = dyn Fn(&[f64], &[f64]) -> bool + Send + Sync;

/// A cost that is `C^4` on a declared open domain.
#[derive(Clone)]
pub struct SmoothCost {
    name: String,
    dim_x: usize,
    dim_y: usize,
    f: Arc<RealFn>,
    domain: Arc<DomainFn>,
    pub steps: FdSteps,
}

impl fmt::Debug for SmoothCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothCost")
            .field("name", &self.name)
            .field("dim_x", &self.dim_x)
            .field("dim_y", &self.dim_y)
            .field("steps", &self.steps)
            .finish()
    }
}

/// One scalar parameter of a directional derivative: a direction and its order (1 or 2).
type Axis<'a> = (&'a [f64], u32);

const STENCIL_1: [(f64, f64); 2] = [(-1.0, -0.5), (1.0, 0.5)];
const STENCIL_2: [(f64, f64); 3] = [(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)];

impl SmoothCost {
    pub fn new<F, D>(name: impl Into<String>, dim_x: usize, dim_y: usize, f: F, domain: D) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        D: Fn(&[f64], &[f64]) -> bool + Send + Sync + 'static,
    {
        Self { name: name.into(), dim_x, dim_y, f: Arc::new(f), domain: Arc::new(domain), steps: FdSteps::default() }
    }

    pub fn with_steps(mut self, steps: FdSteps) -> Self {
        self.steps = steps;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    pub fn dim_y(&self) -> usize {
        self.dim_y
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.f)(x, y)
    }

    pub fn in_domain(&self, x: &[f64], y: &[f64]) -> bool {
        x.len() == self.dim_x && y.len() == self.dim_y && (self.domain)(x, y)
    }

    pub fn as_cost_space(&self) -> CostSpace {
        let (f, d) = (Arc::clone(&self.f), Arc::clone(&self.domain));
        CostSpace::from_real(self.name.clone(), self.dim_x, self.dim_y, move |x, y| {
            if !d(x, y) {
                return Err(Error::Domain("outside the smooth domain".into()));
            }
            Ok(f(x, y))
        })
    }

    fn require_domain(&self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.dim_x {
            return Err(Error::DimensionMismatch { expected: self.dim_x, got: x.len() });
        }
        if y.len() != self.dim_y {
            return Err(Error::DimensionMismatch { expected: self.dim_y, got: y.len() });
        }
        if !(self.domain)(x, y) {
            return Err(Error::NotSmooth(format!("{} at x = {x:?}, y = {y:?}", self.name)));
        }
        Ok(())
    }

    fn stencil(&self, x: &[f64], y: &[f64], xs: &[Axis], ys: &[Axis], h: f64) -> Result<f64> {
        let axes: Vec<(&[f64], u32, bool)> =
            xs.iter().map(|&(d, o)| (d, o, true)).chain(ys.iter().map(|&(d, o)| (d, o, false))).collect();
        let mut idx = vec![0usize; axes.len()];
        let mut total = 0.0;
        let mut px = x.to_vec();
        let mut py = y.to_vec();
        loop {
            let mut w = 1.0;
            px.copy_from_slice(x);
            py.copy_from_slice(y);
            for (k, &(dir, order, on_x)) in axes.iter().enumerate() {
                let (off, wk) = if order == 1 { STENCIL_1[idx[k]] } else { STENCIL_2[idx[k]] };
                w *= wk;
                if off != 0.0 {
                    let target = if on_x { &mut px } else { &mut py };
                    for (t, d) in target.iter_mut().zip(dir) {
                        *t += off * h * d;
                    }
                }
            }
            if !(self.domain)(&px, &py) {
                return Err(Error::NotSmooth(format!("stencil leaves the domain of {}", self.name)));
            }
            total += w * (self.f)(&px, &py);
            // Advance the mixed-radix counter over stencil nodes.
            let mut k = 0;
            loop {
                if k == axes.len() {
                    let order: u32 = axes.iter().map(|a| a.1).sum();
                    return Ok(total / h.powi(order as i32));
                }
                idx[k] += 1;
                let len = if axes[k].1 == 1 { STENCIL_1.len() } else { STENCIL_2.len() };
                if idx[k] < len {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    /// Directional derivative `prod_x d^{o}_{dir} prod_y d^{o}_{dir} c(x, y)`.
    pub fn derivative(&self, x: &[f64], y: &[f64], xs: &[Axis], ys: &[Axis]) -> Result<f64> {
        self.require_domain(x, y)?;
        let order: u32 = xs.iter().chain(ys).map(|a| a.1).sum();
        let h = self.steps.for_order(order);
        let coarse = self.stencil(x, y, xs, ys, h)?;
        if !self.steps.richardson {
            return Ok(coarse);
        }
        let fine = self.stencil(x, y, xs, ys, h / 2.0)?;
        Ok((4.0 * fine - coarse) / 3.0)
    }

    /// Gradient of `c(x, .)` at `y`.
    pub fn grad_y(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        (0..self.dim_y)
            .map(|j| {
                let e = unit(self.dim_y, j);
                self.derivative(x, y, &[], &[(&e, 1)])
            })
            .collect()
    }

    /// Mixed Hessian without the conditioning check; rows index x, columns y.
    pub fn mixed_hessian_raw(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        let mut h = DMatrix::zeros(self.dim_x, self.dim_y);
        for i in 0..self.dim_x {
            let ei = unit(self.dim_x, i);
            for j in 0..self.dim_y {
                let ej = unit(self.dim_y, j);
                h[(i, j)] = self.derivative(x, y, &[(&ei, 1)], &[(&ej, 1)])?;
            }
        }
        Ok(h)
    }
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

pub const MAX_CONDITION: f64 = 1e8;

/// Condition number `sigma_max / sigma_min` (infinite when singular).
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `d2c / dx_i dy_j` by central differences, rejected when its condition number exceeds `1e8`.
pub fn mixed_hessian(c: &SmoothCost, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    if c.dim_x != c.dim_y {
        return Err(Error::Unsupported("mixed Hessian of a non-square cost".into()));
    }
    let h = c.mixed_hessian_raw(x, y)?;
    let condition = condition_number(&h);
    if !(condition < MAX_CONDITION) {
        return Err(Error::Degenerate { condition });
    }
    Ok(h)
}

/// MTW tensor `S(xi, eta)` and the pairing `A = H(xi, eta)` at `(x, y)`.
pub fn mtw_tensor(c: &SmoothCost, x: &[f64], y: &[f64], xi: &[f64], eta: &[f64]) -> Result<MtwSample> {
    let h = mixed_hessian(c, x, y)?;
    let n = c.dim_x;
    let mut t1 = DVector::zeros(n);
    let mut t2 = DVector::zeros(n);
    for m in 0..n {
        let e = unit(n, m);
        t1[m] = c.derivative(x, y, &[(xi, 2)], &[(&e, 1)])?;
        t2[m] = c.derivative(x, y, &[(&e, 1)], &[(eta, 2)])?;
    }
    let q = c.derivative(x, y, &[(xi, 2)], &[(eta, 2)])?;
    let z = h.clone().lu().solve(&t2).ok_or(Error::Degenerate { condition: f64::INFINITY })?;
    let s = t1.dot(&z) - q;
    let a = (DVector::from_column_slice(xi).transpose() * &h * DVector::from_column_slice(eta))[(0, 0)];
    Ok(MtwSample { x: x.to_vec(), y: y.to_vec(), xi: xi.to_vec(), eta: eta.to_vec(), s, a })
}

/// Squared distance on the unit sphere of `R^{n+1}`, in stereographic coordinates
/// `u -> (2u, 1 - |u|^2) / (1 + |u|^2)` on both factors.
///
/// The domain keeps pairs at least `margin` away from antipodal.
pub fn sphere_chart_cost(n: usize, margin: f64) -> SmoothCost {
    SmoothCost::new(
        "sphere_stereographic",
        n,
        n,
        |u, v| {
            let d = crate::families::sphere::geodesic_distance(&stereographic(u), &stereographic(v));
            d * d
        },
        move |u, v| crate::families::sphere::away_from_cut(&stereographic(u), &stereographic(v), margin),
    )
}

/// Inverse stereographic projection onto the unit sphere.
pub fn stereographic(u: &[f64]) -> Vec<f64> {
    let r2: f64 = u.iter().map(|v| v * v).sum();
    let k = 1.0 + r2;
    let mut p: Vec<f64> = u.iter().map(|v| 2.0 * v / k).collect();
    p.push((1.0 - r2) / k);
    p
}

/// Stereographic coordinates of a unit vector (not the pole `(0, .., 0, -1)`).
pub fn stereographic_inverse(p: &[f64]) -> Vec<f64> {
    let n = p.len() - 1;
    let k = 1.0 + p[n];
    p[..n].iter().map(|v| v / k).collect()
}
