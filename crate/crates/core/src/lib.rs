//! Numerical laboratory for nonnegative cross-curvature of cost spaces.
//!
//! The crate builds explicit variational c-segments for a catalogue of
//! costs, checks the chord, maximum-principle and convexity inequalities
//! along them by dense sampling, evaluates the MTW tensor by finite
//! differences, and lifts segments to discrete Wasserstein spaces using an
//! exact transportation solver.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod ext_real;
pub mod families;
pub mod geometry;
pub mod gw_uot;
pub mod linalg;
pub mod measure;
pub mod mtw;
pub mod report;
pub mod sampling;
pub mod transport;

pub use error::{Error, Result};
pub use ext_real::{Combined, ExtRational, ExtReal, Extended, UndefinedRule};
pub use geometry::finite::{c_subdifferential, c_transform, fkm_pointwise_check, FiniteCostTable};
pub use geometry::product::{product_cost, product_segment, submersion_project};
pub use geometry::verify::{
    conv_check, geodesic_is_vcs, lmp_check, nncc_check, one_convexity_check, pc_check, CheckKind, SampleSpec,
    VerifierConfig, ViolationReport, Witness,
};
pub use geometry::{uniform_grid, Cost, CostSpace, RealVector, SegmentFn, SegmentPath};
pub use report::{to_json, Coords};
