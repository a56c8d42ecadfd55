use nalgebra::DVector;
use serde::Serialize;

use super::{mixed_hessian, SmoothCost};
use crate::error::{Error, Result};
use crate::geometry::{RealVector, SegmentPath};
use crate::linalg::{lerp, norm, sub};

const NEWTON_ITER: usize = 30;
const RESIDUAL_TOL: f64 = 1e-10;
const MAX_BISECTIONS: u32 = 6;

struct Problem {
    c: SmoothCost,
    y_bar: Vec<f64>,
    q0: Vec<f64>,
    q1: Vec<f64>,
    tol: f64,
}

impl Problem {
    fn target(&self, s: f64) -> Vec<f64> {
        lerp(&self.q0, &self.q1, s)
    }

    fn residual(&self, x: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        Ok(sub(&self.c.grad_y(x, &self.y_bar)?, q))
    }

    /// Newton's method on `grad_y c(x, y_bar) = q(s)` from `start`.
    fn newton(&self, s: f64, start: &[f64]) -> Result<Vec<f64>> {
        let q = self.target(s);
        let mut x = start.to_vec();
        let mut f = self.residual(&x, &q)?;
        let mut fnorm = norm(&f);
        for it in 0..NEWTON_ITER {
            if fnorm <= self.tol {
                return Ok(x);
            }
            let h = mixed_hessian(&self.c, &x, &self.y_bar)?;
            // d/dx_i of (grad_y c)_j is H_ij, so the Jacobian is H^T.
            let step = h
                .transpose()
                .lu()
                .solve(&DVector::from_column_slice(&f))
                .ok_or(Error::Degenerate { condition: f64::INFINITY })?;
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a - t * d).collect();
                if self.c.in_domain(&trial, &self.y_bar) {
                    if let Ok(ft) = self.residual(&trial, &q) {
                        let tn = norm(&ft);
                        if tn < fnorm {
                            x = trial;
                            f = ft;
                            fnorm = tn;
                            break;
                        }
                    }
                }
                t *= 0.5;
                if t < 1e-8 {
                    return Err(Error::Newton { iterations: it + 1, residual: fnorm });
                }
            }
        }
        if fnorm <= self.tol {
            Ok(x)
        } else {
            Err(Error::Newton { iterations: NEWTON_ITER, residual: fnorm })
        }
    }

    /// Moves a solution from `s_from` to `s_to`, halving the step on failure.
    fn continue_to(&self, s_from: f64, x_from: &[f64], s_to: f64, depth: u32) -> Result<Vec<f64>> {
        match self.newton(s_to, x_from) {
            Ok(x) => Ok(x),
            Err(e) if depth >= MAX_BISECTIONS => {
                Err(Error::Continuation { last_good_s: s_from, reason: e.to_string() })
            }
            Err(_) => {
                let mid = 0.5 * (s_from + s_to);
                let x_mid = self.continue_to(s_from, x_from, mid, depth + 1)?;
                self.continue_to(mid, &x_mid, s_to, depth + 1)
            }
        }
    }
}

/// Solves `grad_y c(x(s), y_bar) = (1-s) grad_y c(x0, y_bar) + s grad_y c(x1, y_bar)`
/// on `s_grid` by continuation; other parameters are solved on demand from
/// the nearest grid node.
pub fn c_segment_solve(
    c: &SmoothCost,
    x0: &[f64],
    x1: &[f64],
    y_bar: &[f64],
    s_grid: &[f64],
) -> Result<SegmentPath<RealVector>> {
    let q0 = c.grad_y(x0, y_bar)?;
    let q1 = c.grad_y(x1, y_bar)?;
    mixed_hessian(c, x0, y_bar)?;
    mixed_hessian(c, x1, y_bar)?;
    let tol = RESIDUAL_TOL * norm(&q0).max(norm(&q1)).max(1.0);
    let problem = Problem { c: c.clone(), y_bar: y_bar.to_vec(), q0, q1, tol };

    let mut nodes: Vec<(f64, Vec<f64>)> = vec![(0.0, x0.to_vec())];
    for &s in s_grid.iter().filter(|&&s| s > 0.0 && s < 1.0) {
        let (sp, xp) = nodes.last().cloned().expect("nonempty");
        let x = problem.continue_to(sp, &xp, s, 0)?;
        nodes.push((s, x));
    }
    nodes.push((1.0, x1.to_vec()));

    Ok(SegmentPath::new(y_bar.to_vec(), x0.to_vec(), x1.to_vec(), move |s| {
        let k = nodes.partition_point(|(t, _)| *t < s);
        if k < nodes.len() && nodes[k].0 == s {
            return Ok(nodes[k].1.clone());
        }
        let (sn, xn) = if k == 0 {
            &nodes[0]
        } else if k == nodes.len() || s - nodes[k - 1].0 <= nodes[k].0 - s {
            &nodes[k - 1]
        } else {
            &nodes[k]
        };
        problem.continue_to(*sn, xn, s, 0)
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CsegmentResidual {
    /// `max_s |grad_y c(x(s), y_bar) - ((1-s) q0 + s q1)|`.
    pub max_residual: f64,
    pub worst_s: f64,
}

/// How far a segment is from solving the c-segment equation.
pub fn auto_csegment_check(seg: &SegmentPath<RealVector>, c: &SmoothCost, s_grid: &[f64]) -> Result<CsegmentResidual> {
    let y_bar = seg.base();
    let q0 = c.grad_y(seg.x0(), y_bar)?;
    let q1 = c.grad_y(seg.x1(), y_bar)?;
    let mut out = CsegmentResidual { max_residual: 0.0, worst_s: 0.0 };
    for &s in s_grid {
        let x = seg.at(s)?;
        let g = c.grad_y(&x, y_bar)?;
        let r = norm(&sub(&g, &lerp(&q0, &q1, s)));
        if r > out.max_residual {
            out = CsegmentResidual { max_residual: r, worst_s: s };
        }
    }
    Ok(out)
}
