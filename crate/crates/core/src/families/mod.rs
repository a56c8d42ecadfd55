//! Closed-form cost families and their segment builders.

pub mod bregman;
pub mod controls;
pub mod hilbert;
pub mod log_distance;
pub mod monge;
pub mod semigeo;
pub mod soft_threshold;
pub mod sphere;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CostSpace, RealVector, SegmentFn, SegmentPath};
use crate::sampling::SeededRng;

pub use bregman::{bregman_family, BregmanMode, PotentialKind};
pub use controls::{anisotropic_quartic_family, hyperbolic_diameter_geodesic, poincare_d2};
pub use hilbert::{generalized_hilbert_family, hilbert_family, linear_segment};
pub use log_distance::{log_distance_cost, log_distance_family};
pub use monge::{finite_monge_segment, monge_family, FiniteMetric};
pub use semigeo::semi_geostrophic_family;
pub use soft_threshold::soft_threshold_family;
pub use sphere::{sphere_family, sphere_geodesic};

pub type PointSampler = Arc<dyn Fn(&mut SeededRng) -> RealVector + Send + Sync>;

/// A cost on coordinate vectors with its segment builder and a sampler for
/// points of its natural domain.
#[derive(Clone)]
pub struct Family {
    pub name: String,
    pub cost: CostSpace,
    pub segment: SegmentFn<RealVector>,
    pub sampler: PointSampler,
}

impl Family {
    pub fn new(
        name: impl Into<String>,
        cost: CostSpace,
        segment: SegmentFn<RealVector>,
        sampler: PointSampler,
    ) -> Self {
        Self { name: name.into(), cost, segment, sampler }
    }

    pub fn segment(&self, x0: &[f64], x1: &[f64], y_bar: &[f64]) -> Result<SegmentPath<RealVector>> {
        (self.segment)(&x0.to_vec(), &x1.to_vec(), &y_bar.to_vec())
    }

    pub fn sample(&self, rng: &mut SeededRng) -> RealVector {
        (self.sampler)(rng)
    }
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Family").field("name", &self.name).field("cost", &self.cost).finish()
    }
}

fn default_dim() -> usize {
    2
}

fn default_n() -> usize {
    2
}

fn default_radius() -> f64 {
    1.0
}

/// Serializable description of a family, e.g. `{"family":"sphere","n":2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Hilbert {
        #[serde(default = "default_dim")]
        dim: usize,
    },
    Bregman {
        #[serde(default = "default_dim")]
        dim: usize,
        potential: PotentialKind,
        mode: BregmanMode,
    },
    SemiGeostrophic {
        #[serde(default = "default_dim")]
        dim: usize,
        g: f64,
    },
    Monge {
        #[serde(default = "default_dim")]
        dim: usize,
    },
    SoftThreshold {
        #[serde(default = "default_dim")]
        dim: usize,
        eps: f64,
    },
    Sphere {
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    LogDistance {
        #[serde(default = "default_dim")]
        dim: usize,
    },
    AnisotropicQuartic,
}

impl FamilySpec {
    pub fn build(&self) -> Result<Family> {
        match *self {
            FamilySpec::Hilbert { dim } => hilbert_family(dim),
            FamilySpec::Bregman { dim, potential, mode } => bregman_family(dim, potential, mode),
            FamilySpec::SemiGeostrophic { dim, g } => semi_geostrophic_family(dim, g),
            FamilySpec::Monge { dim } => monge_family(dim),
            FamilySpec::SoftThreshold { dim, eps } => soft_threshold_family(dim, eps),
            FamilySpec::Sphere { n, radius } => {
                if radius != 1.0 {
                    return Err(Error::InvalidInput("only the unit sphere is supported".into()));
                }
                sphere_family(n)
            }
            FamilySpec::LogDistance { dim } => log_distance_family(dim),
            FamilySpec::AnisotropicQuartic => Ok(anisotropic_quartic_family()),
        }
    }

    /// Whether the family is expected to fail the chord check.
    pub fn is_negative_control(&self) -> bool {
        matches!(self, FamilySpec::LogDistance { .. } | FamilySpec::AnisotropicQuartic)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parses_from_json() {
        let spec: FamilySpec = serde_json::from_str(r#"{"family":"sphere","n":2}"#).unwrap();
        assert_eq!(spec, FamilySpec::Sphere { n: 2, radius: 1.0 });
        let b: FamilySpec =
            serde_json::from_str(r#"{"family":"bregman","dim":3,"potential":"entropy","mode":"reverse"}"#).unwrap();
        assert_eq!(b, FamilySpec::Bregman { dim: 3, potential: PotentialKind::Entropy, mode: BregmanMode::Reverse });
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(FamilySpec::SoftThreshold { dim: 2, eps: 0.0 }.build().is_err());
        assert!(FamilySpec::SemiGeostrophic { dim: 2, g: 0.0 }.build().is_err());
        assert!(FamilySpec::Sphere { n: 2, radius: 2.0 }.build().is_err());
    }
}
