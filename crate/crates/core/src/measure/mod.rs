//! Geometry of finite probability vectors and of positive semi-definite matrices.

mod bw;
mod divergence;

pub use bw::{bw_distance_sq, bw_segment, bw_smooth_cost, psd_sqrt, BwCost, Psd};
pub use divergence::{
    bhattacharyya, fisher_rao, fr_segment, hellinger_segment, hellinger_segment_weighted, hellinger_sq, kl,
    kl_identity_residual, kl_segment, FisherRaoCost, HellingerCost, KlCost,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::Coords;
use crate::sampling::dirichlet_weights;

const SUM_TOL: f64 = 1e-12;

/// Nonnegative weights summing to one over a fixed index set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("probability vector is empty".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput(format!("weight {w} is not a nonnegative real")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidInput(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self(weights))
    }

    /// Divides by the total mass.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("weights have no mass".into()));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    /// Built by the segment constructors, whose outputs sum to one up to rounding.
    pub(crate) fn from_raw(weights: Vec<f64>) -> Self {
        Self(weights.into_iter().map(|w| w.max(0.0)).collect())
    }

    /// Dirichlet(1) sample on `n` points.
    pub fn random<R: Rng>(rng: &mut R, n: usize) -> Self {
        Self::from_raw(dirichlet_weights(rng, n))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Entrywise square roots.
    pub fn sqrt(&self) -> Vec<f64> {
        self.0.iter().map(|w| w.sqrt()).collect()
    }

    fn same_support(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: other.len() });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

impl Coords for ProbVector {
    fn coords(&self) -> Vec<f64> {
        self.0.clone()
    }
}
