use serde::Serialize;

use super::{DiscreteMeasure, WassersteinCost};
use crate::error::{Error, Result};
use crate::families::log_distance_cost;
use crate::geometry::verify::{lmp_check, VerifierConfig, ViolationReport};
use crate::geometry::{uniform_grid, SegmentPath};
use crate::linalg::dist;

const Y_BAR: [f64; 2] = [-0.5, 0.0];
const Y_TEST: [f64; 2] = [0.5, 0.0];
const T_NODES: usize = 101;

/// The four base c-segments for `-log|x - y|` with base `(-1/2, 0)` joining
/// `(+-1, 0)` to `(0, +-1)`, in closed form (`index` in `1..=4`).
pub fn counterexample_curve(index: usize, s: f64) -> Result<[f64; 2]> {
    let p = 8.0 * s * s - 12.0 * s + 5.0;
    let q = 8.0 * s * s - 4.0 * s + 5.0;
    let a = -(4.0 * s * s - 9.0 * s + 5.0) / p;
    let b = -(4.0 * s * s + s - 5.0) / q;
    match index {
        1 => Ok([a, s / p]),
        2 => Ok([b, 9.0 * s / q]),
        3 => Ok([b, -9.0 * s / q]),
        4 => Ok([a, -s / p]),
        _ => Err(Error::InvalidInput(format!("curve index {index} not in 1..=4"))),
    }
}

fn cost(x: &[f64], y: &[f64]) -> f64 {
    -dist(x, y).ln()
}

/// Difference of transport costs to the two Diracs for the pair of curves.
fn gap_curve(pair: (usize, usize), s: f64) -> Result<f64> {
    let (u, v) = (counterexample_curve(pair.0, s)?, counterexample_curve(pair.1, s)?);
    Ok(0.5 * (cost(&u, &Y_BAR) - cost(&u, &Y_TEST)) + 0.5 * (cost(&v, &Y_BAR) - cost(&v, &Y_TEST)))
}

fn lifted(pair: (usize, usize)) -> Result<SegmentPath<DiscreteMeasure>> {
    let at = move |s: f64| -> Result<DiscreteMeasure> {
        let (u, v) = (counterexample_curve(pair.0, s)?, counterexample_curve(pair.1, s)?);
        DiscreteMeasure::new(vec![u.to_vec(), v.to_vec()], vec![0.5, 0.5])
    };
    Ok(SegmentPath::new(DiscreteMeasure::dirac(Y_BAR.to_vec()), at(0.0)?, at(1.0)?, at))
}

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub s: Vec<f64>,
    /// Gap along the lift through curves 1 and 3.
    pub f1: Vec<f64>,
    /// Gap along the lift through curves 2 and 4.
    pub f2: Vec<f64>,
    /// `min_t max_{0<s<1} ((1-t) f1 + t f2)(s)`; positive means no lift satisfies the maximum principle.
    pub min_over_glues: f64,
    pub argmin_t: f64,
    /// Maximum-principle check of the first lift against the Dirac at `(1/2, 0)`.
    pub report: ViolationReport,
}

/// Tabulates the transport-cost gaps along both extreme lifts on `n_s` nodes
/// and scans the convex combinations of the two glues.
pub fn counterexample_lmp(n_s: usize) -> Result<Counterexample> {
    if n_s < 3 {
        return Err(Error::InvalidInput("need at least 3 grid nodes".into()));
    }
    let s = uniform_grid(n_s);
    let f1 = s.iter().map(|&t| gap_curve((1, 3), t)).collect::<Result<Vec<_>>>()?;
    let f2 = s.iter().map(|&t| gap_curve((2, 4), t)).collect::<Result<Vec<_>>>()?;
    let mut min_over_glues = f64::INFINITY;
    let mut argmin_t = 0.0;
    for t in uniform_grid(T_NODES) {
        let worst = (1..n_s - 1).map(|k| (1.0 - t) * f1[k] + t * f2[k]).fold(f64::NEG_INFINITY, f64::max);
        if worst < min_over_glues {
            min_over_glues = worst;
            argmin_t = t;
        }
    }
    let cfg = VerifierConfig { s_grid: s.clone(), tol: 0.0, ..VerifierConfig::default() };
    let sigma = DiscreteMeasure::dirac(Y_TEST.to_vec());
    let report = lmp_check(&lifted((1, 3))?, &WassersteinCost::new(log_distance_cost(2)), &[sigma], &cfg)?;
    Ok(Counterexample { s, f1, f2, min_over_glues, argmin_t, report })
}
