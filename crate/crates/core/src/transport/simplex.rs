//! Transportation simplex with Bland's rule.
//!
//! Forbidden cells (`+inf` cost) are handled lexicographically: a cost is the
//! pair (number of infinities, finite part), so the method first minimizes the
//! mass on forbidden cells and then the finite cost.

use std::collections::VecDeque;

use serde::Serialize;

use super::{Coupling, DiscreteMeasure};
use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::geometry::CostSpace;

const BALANCE_TOL: f64 = 1e-10;
const FORBIDDEN_MASS_TOL: f64 = 1e-14;

/// Dense cost matrix with entries in `(-inf, +inf]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    n: usize,
    m: usize,
    data: Vec<ExtReal>,
}

impl CostMatrix {
    pub fn new(n: usize, m: usize, data: Vec<ExtReal>) -> Result<Self> {
        if data.len() != n * m {
            return Err(Error::DimensionMismatch { expected: n * m, got: data.len() });
        }
        if data.contains(&ExtReal::NEG_INF) {
            return Err(Error::Unsupported("transport costs equal to -inf".into()));
        }
        Ok(Self { n, m, data })
    }

    pub fn from_real(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidInput("cost rows have different lengths".into()));
        }
        Self::new(n, m, rows.iter().flatten().map(|&v| ExtReal::from_f64(v)).collect::<Result<_>>()?)
    }

    /// `c(x_i, y_j)` over the supports of `mu` and `nu`.
    pub fn between(c: &CostSpace, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Self> {
        let mut data = Vec::with_capacity(mu.len() * nu.len());
        for x in mu.support() {
            for y in nu.support() {
                data.push(c.eval_slices(x, y)?);
            }
        }
        Self::new(mu.len(), nu.len(), data)
    }

    pub fn get(&self, i: usize, j: usize) -> ExtReal {
        self.data[i * self.m + j]
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.m
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OtSolution {
    pub plan: Coupling,
    /// `sum c_ij pi_ij` over charged cells.
    pub value: f64,
    pub row_duals: Vec<f64>,
    pub col_duals: Vec<f64>,
    pub pivots: usize,
}

impl OtSolution {
    /// `sum a_i u_i + sum b_j v_j`.
    pub fn dual_objective(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(&self.row_duals).map(|(x, u)| x * u).sum::<f64>()
            + b.iter().zip(&self.col_duals).map(|(x, v)| x * v).sum::<f64>()
    }

    /// Smallest `c_ij - u_i - v_j` over finite cells.
    pub fn min_reduced_cost(&self, c: &CostMatrix) -> f64 {
        let mut out = f64::INFINITY;
        for i in 0..c.n {
            for j in 0..c.m {
                if let Some(v) = c.get(i, j).finite_value() {
                    out = out.min(v - self.row_duals[i] - self.col_duals[j]);
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Lex {
    inf: f64,
    fin: f64,
}

impl Lex {
    fn of(v: ExtReal) -> Self {
        match v {
            ExtReal::Finite(f) => Lex { inf: 0.0, fin: f },
            _ => Lex { inf: 1.0, fin: 0.0 },
        }
    }

    fn sub(self, o: Lex) -> Lex {
        Lex { inf: self.inf - o.inf, fin: self.fin - o.fin }
    }
}

struct Tableau<'a> {
    c: &'a CostMatrix,
    flow: Vec<f64>,
    basic: Vec<bool>,
    cells: Vec<usize>,
}

impl Tableau<'_> {
    fn cost(&self, cell: usize) -> Lex {
        Lex::of(self.c.data[cell])
    }

    /// Adjacency of the basis tree; nodes `0..n` are rows and `n..n+m` columns.
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let (n, m) = (self.c.n, self.c.m);
        let mut adj = vec![Vec::new(); n + m];
        for &cell in &self.cells {
            let (i, j) = (cell / m, cell % m);
            adj[i].push((n + j, cell));
            adj[n + j].push((i, cell));
        }
        adj
    }

    fn duals(&self, adj: &[Vec<(usize, usize)>]) -> Result<(Vec<Lex>, Vec<Lex>)> {
        let (n, m) = (self.c.n, self.c.m);
        let mut pot: Vec<Option<Lex>> = vec![None; n + m];
        pot[0] = Some(Lex::default());
        let mut queue = VecDeque::from([0]);
        while let Some(a) = queue.pop_front() {
            let pa = pot[a].expect("visited");
            for &(b, cell) in &adj[a] {
                if pot[b].is_none() {
                    pot[b] = Some(self.cost(cell).sub(pa));
                    queue.push_back(b);
                }
            }
        }
        let pot: Vec<Lex> = pot
            .into_iter()
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Solver("basis is not a spanning tree".into()))?;
        Ok((pot[..n].to_vec(), pot[n..].to_vec()))
    }

    /// Basis cells on the tree path from column node of `je` to row `ie`, in that order.
    fn path(&self, adj: &[Vec<(usize, usize)>], ie: usize, je: usize) -> Result<Vec<usize>> {
        let n = self.c.n;
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; adj.len()];
        let mut seen = vec![false; adj.len()];
        seen[ie] = true;
        let mut queue = VecDeque::from([ie]);
        while let Some(a) = queue.pop_front() {
            for &(b, cell) in &adj[a] {
                if !seen[b] {
                    seen[b] = true;
                    parent[b] = Some((a, cell));
                    queue.push_back(b);
                }
            }
        }
        let mut out = Vec::new();
        let mut node = n + je;
        while node != ie {
            let (p, cell) = parent[node].ok_or_else(|| Error::Solver("entering cell not connected".into()))?;
            out.push(cell);
            node = p;
        }
        Ok(out)
    }
}

fn northwest_corner(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<bool>, Vec<usize>) {
    let (n, m) = (a.len(), b.len());
    let mut flow = vec![0.0; n * m];
    let mut basic = vec![false; n * m];
    let mut cells = Vec::with_capacity(n + m - 1);
    let (mut ra, mut rb) = (a[0], b[0]);
    let (mut i, mut j) = (0, 0);
    loop {
        let x = ra.min(rb).max(0.0);
        let cell = i * m + j;
        flow[cell] = x;
        basic[cell] = true;
        cells.push(cell);
        ra -= x;
        rb -= x;
        if i + 1 == n && j + 1 == m {
            break;
        }
        if j + 1 == m || (i + 1 < n && ra <= rb) {
            i += 1;
            ra = a[i];
        } else {
            j += 1;
            rb = b[j];
        }
    }
    (flow, basic, cells)
}

/// Optimal coupling of `a` and `b` for the cost matrix `c`.
///
/// Errors with `Infeasible` when every coupling charges a `+inf` cell.
pub fn ot_solve(c: &CostMatrix, a: &[f64], b: &[f64]) -> Result<OtSolution> {
    let (n, m) = (c.n, c.m);
    if a.len() != n || b.len() != m {
        return Err(Error::DimensionMismatch { expected: n + m, got: a.len() + b.len() });
    }
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("empty transport problem".into()));
    }
    if a.iter().chain(b).any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidInput("marginals must be nonnegative".into()));
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if (sa - sb).abs() > BALANCE_TOL * sa.max(1.0) {
        return Err(Error::MarginalMismatch { residual: (sa - sb).abs() });
    }
    let b: Vec<f64> = b.iter().map(|w| w * sa / sb).collect();

    let (flow, basic, cells) = northwest_corner(a, &b);
    let mut t = Tableau { c, flow, basic, cells };
    let scale = 1.0 + c.data.iter().filter_map(|v| v.finite_value()).fold(0.0_f64, |s, v| s.max(v.abs()));
    let tol = 1e-12 * scale;
    let max_pivots = 10_000 + 50 * (n + m) * (n + m);
    let mut pivots = 0;
    let (u, v) = loop {
        let adj = t.adjacency();
        let (u, v) = t.duals(&adj)?;
        let entering = (0..n * m).find(|&cell| {
            if t.basic[cell] {
                return false;
            }
            let r = t.cost(cell).sub(u[cell / m]).sub(v[cell % m]);
            r.inf < -0.5 || (r.inf.abs() < 0.5 && r.fin < -tol)
        });
        let Some(enter) = entering else { break (u, v) };
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Solver("pivot limit reached".into()));
        }
        let path = t.path(&adj, enter / m, enter % m)?;
        // Signs alternate starting with a decrease on the cell adjacent to the entering column.
        let leave = path
            .iter()
            .step_by(2)
            .copied()
            .min_by(|&p, &q| t.flow[p].total_cmp(&t.flow[q]).then(p.cmp(&q)))
            .expect("path has at least one cell");
        let theta = t.flow[leave];
        for (k, &cell) in path.iter().enumerate() {
            if k % 2 == 0 {
                t.flow[cell] -= theta;
            } else {
                t.flow[cell] += theta;
            }
        }
        t.flow[enter] = theta;
        t.flow[leave] = 0.0;
        t.basic[leave] = false;
        t.basic[enter] = true;
        let pos = t.cells.iter().position(|&x| x == leave).expect("leaving cell is basic");
        t.cells[pos] = enter;
    };

    let mut value = 0.0;
    let mut plan = t.flow;
    for (cell, x) in plan.iter_mut().enumerate() {
        match c.data[cell] {
            ExtReal::Finite(cv) => value += cv * *x,
            _ if *x > FORBIDDEN_MASS_TOL => return Err(Error::Infeasible),
            _ => *x = 0.0,
        }
    }
    Ok(OtSolution {
        plan: Coupling::new(n, m, plan)?,
        value,
        row_duals: u.iter().map(|l| l.fin).collect(),
        col_duals: v.iter().map(|l| l.fin).collect(),
        pivots,
    })
}

/// Optimal transport between discrete measures for a cost on their supports.
pub fn ot_solve_measures(c: &CostSpace, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<OtSolution> {
    ot_solve(&CostMatrix::between(c, mu, nu)?, mu.weights(), nu.weights())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{dirichlet_weights, rng};
    use rand::Rng;

    /// Minimum over all basic feasible solutions, enumerated as spanning trees of cells.
    fn brute_force(c: &[Vec<f64>], a: &[f64], b: &[f64]) -> f64 {
        let (n, m) = (a.len(), b.len());
        let k = n + m - 1;
        let total = n * m;
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << total) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let cells: Vec<usize> = (0..total).filter(|&q| mask >> q & 1 == 1).collect();
            // Leaf elimination solves the flows on a tree and detects cycles.
            let (mut ra, mut rb) = (a.to_vec(), b.to_vec());
            let mut alive = cells.clone();
            let mut flow = vec![0.0; total];
            let mut ok = true;
            while !alive.is_empty() {
                let row_deg = |i: usize| alive.iter().filter(|&&q| q / m == i).count();
                let col_deg = |j: usize| alive.iter().filter(|&&q| q % m == j).count();
                let Some(p) = alive.iter().position(|&q| row_deg(q / m) == 1 || col_deg(q % m) == 1) else {
                    ok = false;
                    break;
                };
                let q = alive[p];
                let (i, j) = (q / m, q % m);
                let x = if row_deg(i) == 1 { ra[i] } else { rb[j] };
                alive.remove(p);
                flow[q] = x;
                ra[i] -= x;
                rb[j] -= x;
            }
            if !ok || flow.iter().any(|&x| x < -1e-12) || ra.iter().chain(&rb).any(|r| r.abs() > 1e-9) {
                continue;
            }
            let v: f64 = cells.iter().map(|&q| c[q / m][q % m] * flow[q]).sum();
            best = best.min(v);
        }
        best
    }

    #[test]
    fn identity_and_swap() {
        let c = CostMatrix::from_real(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let sol = ot_solve(&c, &[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert_eq!(sol.value, 0.0);
        assert_eq!(sol.plan.get(0, 1), 0.0);
    }

    #[test]
    fn matches_vertex_enumeration() {
        let mut r = rng(1);
        for _ in 0..100 {
            let c: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| r.random_range(0.0..1.0)).collect()).collect();
            let a = dirichlet_weights(&mut r, 3);
            let b = dirichlet_weights(&mut r, 3);
            let sol = ot_solve(&CostMatrix::from_real(&c).unwrap(), &a, &b).unwrap();
            let want = brute_force(&c, &a, &b);
            assert!((sol.value - want).abs() < 1e-10, "{} vs {want}", sol.value);
            assert!((sol.value - sol.dual_objective(&a, &b)).abs() < 1e-9);
            assert!(sol.min_reduced_cost(&CostMatrix::from_real(&c).unwrap()) >= -1e-10);
            sol.plan.check_marginals(&a, &b).unwrap();
        }
    }

    #[test]
    fn degenerate_marginals() {
        let c = CostMatrix::from_real(&[vec![1.0, 2.0, 3.0], vec![2.0, 1.0, 5.0], vec![3.0, 2.0, 1.0]]).unwrap();
        let w = [1.0 / 3.0; 3];
        let sol = ot_solve(&c, &w, &w).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn forbidden_cells() {
        let inf = ExtReal::POS_INF;
        let f = ExtReal::finite;
        let c = CostMatrix::new(2, 2, vec![inf, f(1.0), f(2.0), inf]).unwrap();
        let sol = ot_solve(&c, &[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert!((sol.value - 1.5).abs() < 1e-15);
        let c = CostMatrix::new(2, 2, vec![inf, f(1.0), f(2.0), f(0.0)]).unwrap();
        assert_eq!(ot_solve(&c, &[0.5, 0.5], &[0.9, 0.1]), Err(Error::Infeasible));
    }
}
