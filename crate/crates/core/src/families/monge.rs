use std::sync::Arc;

use rand::Rng;

use super::Family;
use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::geometry::{Cost, CostSpace, RealVector, SegmentPath};
use crate::linalg::dist;
use crate::sampling::box_point;

/// The Monge segment: `x(0) = x0`, `x(s) = y_bar` for `0 < s < 1`, `x(1) = x1`.
pub fn monge_segment<P: Clone + Send + Sync + 'static>(x0: &P, x1: &P, y_bar: &P) -> SegmentPath<P> {
    let yb = y_bar.clone();
    SegmentPath::new(y_bar.clone(), x0.clone(), x1.clone(), move |_| Ok(yb.clone()))
}

/// `c(x, y) = |x - y|` on `R^dim`.
pub fn monge_family(dim: usize) -> Result<Family> {
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let cost = CostSpace::from_real("monge", dim, dim, |x, y| Ok(dist(x, y)));
    Ok(Family::new(
        "monge",
        cost,
        Arc::new(|x0: &RealVector, x1: &RealVector, y: &RealVector| Ok(monge_segment(x0, x1, y))),
        Arc::new(move |rng| box_point(rng, dim, -2.0, 2.0)),
    ))
}

/// A metric on `{0, ..., n-1}`, validated on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMetric {
    n: usize,
    d: Vec<f64>,
}

const METRIC_TOL: f64 = 1e-12;

impl FiniteMetric {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("distance matrix must be square".into()));
        }
        let d: Vec<f64> = rows.into_iter().flatten().collect();
        let m = Self { n, d };
        for i in 0..n {
            if m.get(i, i).abs() > METRIC_TOL {
                return Err(Error::InvalidInput(format!("d({i},{i}) is not zero")));
            }
            for j in 0..n {
                let v = m.get(i, j);
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::InvalidInput(format!("d({i},{j}) = {v} is not a finite nonnegative number")));
                }
                if (v - m.get(j, i)).abs() > METRIC_TOL {
                    return Err(Error::InvalidInput(format!("d is not symmetric at ({i},{j})")));
                }
                for k in 0..n {
                    if v > m.get(i, k) + m.get(k, j) + METRIC_TOL {
                        return Err(Error::InvalidInput(format!("triangle inequality fails for ({i},{k},{j})")));
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.d.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn diameter(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }

    /// Shortest-path metric of a complete graph with random edge weights in `[lo, hi]`.
    pub fn random<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Self {
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let w = rng.random_range(lo..hi);
                d[i * n + j] = w;
                d[j * n + i] = w;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i * n + k] + d[k * n + j];
                    if via < d[i * n + j] {
                        d[i * n + j] = via;
                    }
                }
            }
        }
        Self { n, d }
    }

    /// Metric induced by points of `R^k`.
    pub fn from_points(points: &[Vec<f64>]) -> Self {
        let n = points.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = dist(&points[i], &points[j]);
            }
        }
        Self { n, d }
    }
}

impl Cost for FiniteMetric {
    type X = usize;
    type Y = usize;

    fn eval(&self, x: &usize, y: &usize) -> Result<ExtReal> {
        if *x >= self.n || *y >= self.n {
            return Err(Error::InvalidInput(format!("point index out of range for {} points", self.n)));
        }
        Ok(ExtReal::finite(self.get(*x, *y)))
    }

    fn name(&self) -> &str {
        "finite_monge"
    }
}

/// Monge segments in a finite metric space.
pub fn finite_monge_segment(x0: usize, x1: usize, y_bar: usize) -> SegmentPath<usize> {
    monge_segment(&x0, &x1, &y_bar)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_violation_rejected() {
        let bad = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        assert!(FiniteMetric::new(bad).is_err());
    }

    #[test]
    fn random_metric_is_valid() {
        let mut rng = crate::sampling::rng(3);
        let m = FiniteMetric::random(&mut rng, 7, 0.1, 3.0);
        assert!(FiniteMetric::new(m.rows()).is_ok());
    }

    #[test]
    fn interior_is_base_point() {
        let seg = finite_monge_segment(0, 1, 2);
        assert_eq!(seg.at(0.0).unwrap(), 0);
        assert_eq!(seg.at(0.3).unwrap(), 2);
        assert_eq!(seg.at(0.9).unwrap(), 2);
        assert_eq!(seg.at(1.0).unwrap(), 1);
    }
}
