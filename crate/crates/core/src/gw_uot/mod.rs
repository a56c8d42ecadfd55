//! Gromov–Wasserstein segments, cone costs of unbalanced transport and
//! Gromov–Hausdorff distances on tiny instances.

mod cone;
mod gh;
mod gw;

pub use cone::{
    cone_cost, cone_nncc_check, cone_segment, wfr_base_cost, wfr_cone_cost, ConeBase, ConePoint, Entropy, WfrConeCost,
};
pub use gh::{gh_distance, GH_MAX_POINTS};
pub use gw::{gw_cost, gw_nncc_check, gw_segment, gw_solve_tiny, GaugedSpace, GwCost, GwSolution, GwVerdict, MAX_FREE};
