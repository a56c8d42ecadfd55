//! Exact discrete optimal transport and lifts of c-segments to measures.

mod counterexample;
mod lift;
mod simplex;

pub use counterexample::{counterexample_curve, counterexample_lmp, Counterexample};
pub use lift::{
    glue, glue_with, sample_measures, wasserstein_nncc_check, wasserstein_nncc_check_with, GlueRule, Lift, ThreePlan,
    WassersteinCost,
};
pub use simplex::{ot_solve, ot_solve_measures, CostMatrix, OtSolution};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RealVector;
use crate::linalg::dist;
use crate::measure::ProbVector;
use crate::report::Coords;
use crate::sampling::{box_point, dirichlet_weights, rng};

/// Atoms closer than this are merged.
pub const MERGE_TOL: f64 = 1e-12;
const MARGINAL_TOL: f64 = 1e-10;

/// Finitely supported probability measure on `R^d`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(try_from = "RawMeasure")]
pub struct DiscreteMeasure {
    support: Vec<RealVector>,
    weights: ProbVector,
}

#[derive(Deserialize)]
struct RawMeasure {
    support: Vec<RealVector>,
    weights: Vec<f64>,
}

impl TryFrom<RawMeasure> for DiscreteMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        Self::new(raw.support, raw.weights)
    }
}

impl DiscreteMeasure {
    /// Validates the weights and merges atoms closer than `MERGE_TOL`.
    pub fn new(support: Vec<RealVector>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: support.len(), got: weights.len() });
        }
        let dim = support.first().map_or(0, Vec::len);
        if support.iter().any(|x| x.len() != dim) {
            return Err(Error::InvalidInput("support points have different dimensions".into()));
        }
        let weights = ProbVector::new(weights)?;
        Ok(Self::merged(support, weights.weights()))
    }

    /// Unit mass at `x`.
    pub fn dirac(x: RealVector) -> Self {
        Self { support: vec![x], weights: ProbVector::from_raw(vec![1.0]) }
    }

    /// Pushforward of weighted atoms, merging coincident images.
    pub(crate) fn merged(points: Vec<RealVector>, weights: &[f64]) -> Self {
        let mut support: Vec<RealVector> = Vec::new();
        let mut w: Vec<f64> = Vec::new();
        for (x, &m) in points.into_iter().zip(weights) {
            match support.iter().position(|p| dist(p, &x) <= MERGE_TOL) {
                Some(k) => w[k] += m,
                None => {
                    support.push(x);
                    w.push(m);
                }
            }
        }
        Self { support, weights: ProbVector::from_raw(w) }
    }

    pub fn support(&self) -> &[RealVector] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        self.weights.weights()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.support.first().map_or(0, Vec::len)
    }
}

impl Serialize for DiscreteMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("DiscreteMeasure", 2)?;
        st.serialize_field("support", &self.support)?;
        st.serialize_field("weights", self.weights())?;
        st.end()
    }
}

impl Coords for DiscreteMeasure {
    /// Weight followed by the coordinates, atom by atom.
    fn coords(&self) -> Vec<f64> {
        self.support
            .iter()
            .zip(self.weights())
            .flat_map(|(x, w)| std::iter::once(*w).chain(x.iter().copied()))
            .collect()
    }
}

/// `n_atoms` points uniform in `[lo, hi]^dim` with Dirichlet(1) weights.
pub fn random_measure(n_atoms: usize, dim: usize, lo: f64, hi: f64, seed: u64) -> Result<DiscreteMeasure> {
    if n_atoms == 0 {
        return Err(Error::InvalidInput("a measure needs at least one atom".into()));
    }
    let mut r = rng(seed);
    Ok(random_measure_with(&mut r, n_atoms, |r| box_point(r, dim, lo, hi)))
}

/// Random measure with atoms drawn by `point`.
pub fn random_measure_with<R: Rng>(
    r: &mut R,
    n_atoms: usize,
    mut point: impl FnMut(&mut R) -> RealVector,
) -> DiscreteMeasure {
    let support: Vec<RealVector> = (0..n_atoms).map(|_| point(r)).collect();
    let weights = if n_atoms == 1 { vec![1.0] } else { dirichlet_weights(r, n_atoms) };
    DiscreteMeasure::merged(support, &weights)
}

/// Nonnegative `n x m` matrix with prescribed marginals, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Coupling {
    n: usize,
    m: usize,
    plan: Vec<f64>,
}

impl Coupling {
    pub fn new(n: usize, m: usize, plan: Vec<f64>) -> Result<Self> {
        if plan.len() != n * m {
            return Err(Error::DimensionMismatch { expected: n * m, got: plan.len() });
        }
        if plan.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidInput("coupling entries must be nonnegative".into()));
        }
        Ok(Self { n, m, plan })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.plan[i * self.m + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.m).map(|j| self.get(i, j)).sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.m).map(|j| (0..self.n).map(|i| self.get(i, j)).sum()).collect()
    }

    /// Largest deviation of the marginals from `a` and `b`.
    pub fn marginal_residual(&self, a: &[f64], b: &[f64]) -> f64 {
        let r = self.row_sums().iter().zip(a).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let c = self.col_sums().iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        r.max(c)
    }

    /// Errors when the marginals deviate from `a` and `b` by more than `1e-10`.
    pub fn check_marginals(&self, a: &[f64], b: &[f64]) -> Result<()> {
        if a.len() != self.n || b.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.n + self.m, got: a.len() + b.len() });
        }
        let residual = self.marginal_residual(a, b);
        if residual > MARGINAL_TOL {
            return Err(Error::MarginalMismatch { residual });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_coincident_atoms() {
        let m = DiscreteMeasure::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1e-13]], vec![0.25, 0.5, 0.25])
            .unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn random_measures() {
        assert_eq!(random_measure(1, 2, -1.0, 1.0, 0).unwrap().len(), 1);
        assert_eq!(random_measure(4, 2, -1.0, 1.0, 7).unwrap(), random_measure(4, 2, -1.0, 1.0, 7).unwrap());
        for seed in 0..1000 {
            let m = random_measure(5, 2, -1.0, 1.0, seed).unwrap();
            assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let m = DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![0.25, 0.75]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<DiscreteMeasure>(&s).unwrap(), m);
    }
}
