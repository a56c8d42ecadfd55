//! Gromov–Hausdorff distance between very small metric spaces.

use crate::error::{Error, Result};
use crate::families::monge::FiniteMetric;

pub const GH_MAX_POINTS: usize = 5;

struct Search<'a> {
    x: &'a FiniteMetric,
    y: &'a FiniteMetric,
    chosen: Vec<(usize, usize)>,
    row_cover: Vec<u32>,
    col_cover: Vec<u32>,
    best: f64,
}

impl Search<'_> {
    fn added_distortion(&self, i: usize, j: usize) -> f64 {
        self.chosen.iter().map(|&(a, b)| (self.x.get(i, a) - self.y.get(j, b)).abs()).fold(0.0, f64::max)
    }

    /// Visits cells in row-major order. A cell is only taken when it covers a
    /// new row or column, which still reaches every minimal correspondence.
    fn visit(&mut self, cell: usize, current: f64) {
        let m = self.y.len();
        if current >= self.best {
            return;
        }
        if cell == self.x.len() * m {
            if self.row_cover.iter().all(|&c| c > 0) && self.col_cover.iter().all(|&c| c > 0) {
                self.best = current;
            }
            return;
        }
        let (i, j) = (cell / m, cell % m);
        if j == 0 && i > 0 && self.row_cover[i - 1] == 0 {
            return;
        }
        if self.row_cover[i] == 0 || self.col_cover[j] == 0 {
            let worse = current.max(self.added_distortion(i, j));
            self.chosen.push((i, j));
            self.row_cover[i] += 1;
            self.col_cover[j] += 1;
            self.visit(cell + 1, worse);
            self.chosen.pop();
            self.row_cover[i] -= 1;
            self.col_cover[j] -= 1;
        }
        self.visit(cell + 1, current);
    }
}

/// Smallest distortion `max |d_X(x, x') - d_Y(y, y')|` over correspondences.
///
/// No factor one half is applied.
pub fn gh_distance(x: &FiniteMetric, y: &FiniteMetric) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidInput("metric spaces must be nonempty".into()));
    }
    if x.len() > GH_MAX_POINTS || y.len() > GH_MAX_POINTS {
        return Err(Error::SizeGuard(format!("GH enumeration is limited to {GH_MAX_POINTS} points per space")));
    }
    let mut search = Search {
        x,
        y,
        chosen: Vec::new(),
        row_cover: vec![0; x.len()],
        col_cover: vec![0; y.len()],
        best: f64::INFINITY,
    };
    search.visit(0, 0.0);
    Ok(search.best)
}
