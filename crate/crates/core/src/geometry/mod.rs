//! Cost spaces, sampled segments and the inequality verifiers built on them.

pub mod finite;
pub mod product;
pub mod verify;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ext_real::ExtReal;

pub type RealVector = Vec<f64>;

/// A cost `c : X x Y -> [-inf, +inf]`.
///
/// Implementations must be deterministic and never produce an undefined
/// value; failures to evaluate are reported as errors.
pub trait Cost: Send + Sync {
    type X: Clone + Send + Sync;
    type Y: Clone + Send + Sync;

    fn eval(&self, x: &Self::X, y: &Self::Y) -> Result<ExtReal>;

    fn name(&self) -> &str {
        "cost"
    }
}

type VecCostFn = dyn Fn(&[f64], &[f64]) -> Result<ExtReal> + Send + Sync;

/// A cost on coordinate vectors of fixed dimensions.
#[derive(Clone)]
pub struct CostSpace {
    name: String,
    dim_x: usize,
    dim_y: usize,
    f: Arc<VecCostFn>,
}

impl CostSpace {
    pub fn new<F>(name: impl Into<String>, dim_x: usize, dim_y: usize, f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> Result<ExtReal> + Send + Sync + 'static,
    {
        Self { name: name.into(), dim_x, dim_y, f: Arc::new(f) }
    }

    /// Cost from a function that is always finite where defined.
    pub fn from_real<F>(name: impl Into<String>, dim_x: usize, dim_y: usize, f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        Self::new(name, dim_x, dim_y, move |x, y| ExtReal::from_f64(f(x, y)?))
    }

    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    pub fn dim_y(&self) -> usize {
        self.dim_y
    }

    pub fn eval_slices(&self, x: &[f64], y: &[f64]) -> Result<ExtReal> {
        if x.len() != self.dim_x {
            return Err(Error::DimensionMismatch { expected: self.dim_x, got: x.len() });
        }
        if y.len() != self.dim_y {
            return Err(Error::DimensionMismatch { expected: self.dim_y, got: y.len() });
        }
        (self.f)(x, y)
    }

    /// Finite value of the cost or an evaluation error.
    pub fn eval_finite(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self.eval_slices(x, y)? {
            ExtReal::Finite(v) => Ok(v),
            other => Err(Error::Evaluation(format!("{} is {other} at ({x:?}, {y:?})", self.name))),
        }
    }
}

impl fmt::Debug for CostSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CostSpace")
            .field("name", &self.name)
            .field("dim_x", &self.dim_x)
            .field("dim_y", &self.dim_y)
            .finish()
    }
}

impl Cost for CostSpace {
    type X = RealVector;
    type Y = RealVector;

    fn eval(&self, x: &RealVector, y: &RealVector) -> Result<ExtReal> {
        self.eval_slices(x, y)
    }

    fn name(&self) -> &str {
        &self.name
    }
}

type InteriorFn<X> = dyn Fn(f64) -> Result<X> + Send + Sync;

/// A path `s -> x(s)` on `[0, 1]` attached to a base point `y_bar`.
///
/// The endpoints are stored and returned verbatim at `s = 0` and `s = 1`;
/// the interior evaluator is only consulted for `0 < s < 1`.
pub struct SegmentPath<X, Y = X> {
    base_y: Y,
    x0: X,
    x1: X,
    interior: Arc<InteriorFn<X>>,
}

impl<X: Clone, Y: Clone> Clone for SegmentPath<X, Y> {
    fn clone(&self) -> Self {
        Self {
            base_y: self.base_y.clone(),
            x0: self.x0.clone(),
            x1: self.x1.clone(),
            interior: Arc::clone(&self.interior),
        }
    }
}

impl<X: Clone + 'static, Y: Clone> SegmentPath<X, Y> {
    pub fn new<F>(base_y: Y, x0: X, x1: X, interior: F) -> Self
    where
        F: Fn(f64) -> Result<X> + Send + Sync + 'static,
    {
        Self { base_y, x0, x1, interior: Arc::new(interior) }
    }

    /// The constant path at `x`.
    pub fn constant(base_y: Y, x: X) -> Self
    where
        X: Send + Sync,
    {
        let xc = x.clone();
        Self::new(base_y, x.clone(), x, move |_| Ok(xc.clone()))
    }

    pub fn base(&self) -> &Y {
        &self.base_y
    }

    pub fn x0(&self) -> &X {
        &self.x0
    }

    pub fn x1(&self) -> &X {
        &self.x1
    }

    pub fn at(&self, s: f64) -> Result<X> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidInput(format!("segment parameter {s} outside [0, 1]")));
        }
        if s == 0.0 {
            Ok(self.x0.clone())
        } else if s == 1.0 {
            Ok(self.x1.clone())
        } else {
            (self.interior)(s)
        }
    }

    /// Same path attached to a different base point.
    pub fn with_base<Z>(&self, base: Z) -> SegmentPath<X, Z> {
        SegmentPath { base_y: base, x0: self.x0.clone(), x1: self.x1.clone(), interior: Arc::clone(&self.interior) }
    }

    /// Pushes the path and its base through maps `p1` on X and `p2` on Y.
    pub fn map<XB, YB, P1, P2>(&self, p1: P1, p2: P2) -> SegmentPath<XB, YB>
    where
        XB: Clone + 'static,
        P1: Fn(&X) -> XB + Send + Sync + 'static,
        P2: Fn(&Y) -> YB,
        X: Send + Sync,
    {
        let p1 = Arc::new(p1);
        let inner = Arc::clone(&self.interior);
        let pm = Arc::clone(&p1);
        SegmentPath {
            base_y: p2(&self.base_y),
            x0: p1(&self.x0),
            x1: p1(&self.x1),
            interior: Arc::new(move |s| inner(s).map(|x| pm(&x))),
        }
    }
}

/// Builds a segment from `(x0, x1, y_bar)`.
pub type SegmentFn<X, Y = X> = Arc<dyn Fn(&X, &X, &Y) -> Result<SegmentPath<X, Y>> + Send + Sync>;

/// `n` equispaced nodes on `[0, 1]`, including both ends.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2, "a grid needs at least two nodes");
    let m = (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { 1.0 } else { i as f64 / m }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_returned_verbatim() {
        let x0 = vec![0.1, 0.2];
        let x1 = vec![0.3, 0.7];
        let (a, b) = (x0.clone(), x1.clone());
        let seg = SegmentPath::new(vec![0.0, 0.0], x0.clone(), x1.clone(), move |s| {
            Ok(a.iter().zip(&b).map(|(p, q)| (1.0 - s) * p + s * q).collect())
        });
        assert_eq!(seg.at(0.0).unwrap(), x0);
        assert_eq!(seg.at(1.0).unwrap(), x1);
        assert!(seg.at(1.5).is_err());
    }

    #[test]
    fn grid_contains_ends() {
        let g = uniform_grid(33);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[32], 1.0);
        assert_eq!(g[16], 0.5);
    }

    #[test]
    fn dimension_checked() {
        let c = CostSpace::from_real("dot", 2, 2, |x, y| Ok(x[0] * y[0] + x[1] * y[1]));
        assert!(matches!(c.eval_slices(&[1.0], &[1.0, 2.0]), Err(Error::DimensionMismatch { expected: 2, got: 1 })));
    }
}
