//! Products of cost spaces and projection of segments through cost submersions.

use super::{Cost, CostSpace, RealVector, SegmentPath};
use crate::error::{Error, Result};

/// `c((x1, x2), (y1, y2)) = c1(x1, y1) + c2(x2, y2)` on concatenated coordinates.
pub fn product_cost(c1: &CostSpace, c2: &CostSpace) -> CostSpace {
    let (a, b) = (c1.clone(), c2.clone());
    let (dx, dy) = (c1.dim_x(), c1.dim_y());
    CostSpace::new(
        format!("{}x{}", c1.name(), c2.name()),
        c1.dim_x() + c2.dim_x(),
        c1.dim_y() + c2.dim_y(),
        move |x, y| {
            let v1 = a.eval_slices(&x[..dx], &y[..dy])?;
            let v2 = b.eval_slices(&x[dx..], &y[dy..])?;
            v1.add_ext(v2).defined().ok_or_else(|| Error::Evaluation("product cost sums +inf and -inf".into()))
        },
    )
}

fn concat(a: &[f64], b: &[f64]) -> RealVector {
    a.iter().chain(b).copied().collect()
}

/// Pairs two segments sharing the same parameter.
pub fn product_segment(seg1: &SegmentPath<RealVector>, seg2: &SegmentPath<RealVector>) -> SegmentPath<RealVector> {
    let (a, b) = (seg1.clone(), seg2.clone());
    SegmentPath::new(
        concat(seg1.base(), seg2.base()),
        concat(seg1.x0(), seg2.x0()),
        concat(seg1.x1(), seg2.x1()),
        move |s| Ok(concat(&a.at(s)?, &b.at(s)?)),
    )
}

/// Projects a segment of the total space to the base space of a cost submersion.
///
/// The endpoints must be optimal in their fibres:
/// `c_total(x_i, y0) = c_base(P1 x_i, P2 y0)` within `tol`.
pub fn submersion_project<CT, CB, P1, P2>(
    total: &SegmentPath<CT::X, CT::Y>,
    p1: P1,
    p2: P2,
    c_total: &CT,
    c_base: &CB,
    tol: f64,
) -> Result<SegmentPath<CB::X, CB::Y>>
where
    CT: Cost,
    CB: Cost,
    CT::X: 'static,
    CB::X: 'static,
    P1: Fn(&CT::X) -> CB::X + Send + Sync + 'static,
    P2: Fn(&CT::Y) -> CB::Y,
{
    let y0 = total.base();
    let yb = p2(y0);
    let mut worst = 0.0_f64;
    for x in [total.x0(), total.x1()] {
        let up = c_total.eval(x, y0)?;
        let down = c_base.eval(&p1(x), &yb)?;
        let residual = match (up.finite_value(), down.finite_value()) {
            (Some(a), Some(b)) => (a - b).abs(),
            _ if up == down => 0.0,
            _ => f64::INFINITY,
        };
        worst = worst.max(residual);
    }
    if !(worst <= tol) {
        return Err(Error::NotOptimal { residual: worst });
    }
    Ok(total.map(p1, p2))
}
