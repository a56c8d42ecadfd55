//! Gromov–Wasserstein between tiny gauged spaces.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::geometry::verify::{nncc_check, VerifierConfig, ViolationReport};
use crate::geometry::{Cost, SegmentPath};
use crate::measure::ProbVector;
use crate::report::Coords;
use crate::transport::{glue, Coupling, ThreePlan};

const SYM_TOL: f64 = 1e-12;
const GRID_NODES: usize = 65;
/// Largest number of free coordinates of the coupling polytope.
pub const MAX_FREE: usize = 4;
const OPTIMALITY_TOL: f64 = 1e-9;
const DESCENT_SWEEPS: usize = 10_000;

/// A finite set with a symmetric gauge and a probability vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGauged")]
pub struct GaugedSpace {
    gauge: Vec<Vec<f64>>,
    weights: ProbVector,
}

#[derive(Deserialize)]
struct RawGauged {
    gauge: Vec<Vec<f64>>,
    weights: ProbVector,
}

impl TryFrom<RawGauged> for GaugedSpace {
    type Error = Error;

    fn try_from(raw: RawGauged) -> Result<Self> {
        Self::new(raw.gauge, raw.weights)
    }
}

impl GaugedSpace {
    pub fn new(gauge: Vec<Vec<f64>>, weights: ProbVector) -> Result<Self> {
        let n = weights.len();
        if gauge.len() != n || gauge.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: gauge.len() });
        }
        for i in 0..n {
            for j in 0..n {
                if !gauge[i][j].is_finite() {
                    return Err(Error::InvalidInput(format!("gauge entry ({i},{j}) is not finite")));
                }
                if (gauge[i][j] - gauge[j][i]).abs() > SYM_TOL {
                    return Err(Error::InvalidInput(format!("gauge is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { gauge, weights })
    }

    /// Two points at gauge distance `gap`, zero on the diagonal.
    pub fn two_point(gap: f64, weights: [f64; 2]) -> Result<Self> {
        Self::new(vec![vec![0.0, gap], vec![gap, 0.0]], ProbVector::new(weights.to_vec())?)
    }

    /// Random 2-point space with gap in `[lo, hi]` and Dirichlet weights.
    pub fn random_two_point<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Self {
        let gap = rng.random_range(lo..hi);
        let weights = ProbVector::random(rng, 2);
        Self { gauge: vec![vec![0.0, gap], vec![gap, 0.0]], weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn gauge(&self, i: usize, j: usize) -> f64 {
        self.gauge[i][j]
    }

    pub fn gauge_rows(&self) -> &[Vec<f64>] {
        &self.gauge
    }

    pub fn weights(&self) -> &[f64] {
        self.weights.weights()
    }

    /// Adds `k` to every gauge entry.
    pub fn shifted(&self, k: f64) -> Self {
        let gauge = self.gauge.iter().map(|r| r.iter().map(|v| v + k).collect()).collect();
        Self { gauge, weights: self.weights.clone() }
    }

    /// `sum_ij f_ij w_i w_j`.
    pub fn mean_gauge(&self) -> f64 {
        let w = self.weights();
        let mut acc = 0.0;
        for (i, row) in self.gauge.iter().enumerate() {
            for (j, f) in row.iter().enumerate() {
                acc += f * w[i] * w[j];
            }
        }
        acc
    }
}

impl Coords for GaugedSpace {
    fn coords(&self) -> Vec<f64> {
        let mut out = vec![self.len() as f64];
        out.extend(self.gauge.iter().flatten());
        out.extend(self.weights());
        out
    }
}

/// `B(P, Q) = sum (f_ii' - g_jj')^2 P_ij Q_i'j'`.
fn bilinear(x: &GaugedSpace, y: &GaugedSpace, p: &[f64], q: &[f64]) -> f64 {
    let (n, m) = (x.len(), y.len());
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..m {
            let pij = p[i * m + j];
            if pij == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for i2 in 0..n {
                for j2 in 0..m {
                    let d = x.gauge[i][i2] - y.gauge[j][j2];
                    inner += d * d * q[i2 * m + j2];
                }
            }
            acc += pij * inner;
        }
    }
    acc
}

/// Distortion of the coupling `pi`.
pub fn gw_cost(pi: &Coupling, x: &GaugedSpace, y: &GaugedSpace) -> Result<f64> {
    if pi.rows() != x.len() || pi.cols() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len() * y.len(), got: pi.rows() * pi.cols() });
    }
    pi.check_marginals(x.weights(), y.weights())?;
    let p: Vec<f64> = (0..x.len()).flat_map(|i| (0..y.len()).map(move |j| (i, j))).map(|(i, j)| pi.get(i, j)).collect();
    Ok(bilinear(x, y, &p, &p))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GwSolution {
    pub plan: Coupling,
    pub value: f64,
    /// Best value on the grid before local descent.
    pub grid_value: f64,
    /// Largest projected partial derivative at the returned plan.
    pub stationarity: f64,
}

/// Affine chart of the transportation polytope on its free cells.
struct Chart {
    n: usize,
    m: usize,
    base: Vec<f64>,
    free: Vec<(usize, usize)>,
    upper: Vec<f64>,
    constant: f64,
    linear: Vec<f64>,
    quad: Vec<Vec<f64>>,
}

impl Chart {
    fn new(x: &GaugedSpace, y: &GaugedSpace) -> Self {
        let (n, m) = (x.len(), y.len());
        let (mu, nu) = (x.weights(), y.weights());
        let mut base = vec![0.0; n * m];
        for i in 0..n - 1 {
            base[i * m + m - 1] = mu[i];
        }
        for j in 0..m - 1 {
            base[(n - 1) * m + j] = nu[j];
        }
        base[n * m - 1] = 1.0 - mu[..n - 1].iter().sum::<f64>() - nu[..m - 1].iter().sum::<f64>();
        let free: Vec<(usize, usize)> = (0..n - 1).flat_map(|i| (0..m - 1).map(move |j| (i, j))).collect();
        let upper = free.iter().map(|&(i, j)| mu[i].min(nu[j])).collect();
        let basis: Vec<Vec<f64>> = free
            .iter()
            .map(|&(i, j)| {
                let mut e = vec![0.0; n * m];
                e[i * m + j] = 1.0;
                e[i * m + m - 1] = -1.0;
                e[(n - 1) * m + j] = -1.0;
                e[n * m - 1] = 1.0;
                e
            })
            .collect();
        let constant = bilinear(x, y, &base, &base);
        let linear = basis.iter().map(|e| 2.0 * bilinear(x, y, e, &base)).collect();
        let quad = basis.iter().map(|e| basis.iter().map(|f| bilinear(x, y, e, f)).collect()).collect();
        Self { n, m, base, free, upper, constant, linear, quad }
    }

    fn value(&self, t: &[f64]) -> f64 {
        let mut v = self.constant;
        for k in 0..t.len() {
            let mut row = 0.0;
            for l in 0..t.len() {
                row += self.quad[k][l] * t[l];
            }
            v += t[k] * (self.linear[k] + row);
        }
        v
    }

    fn plan(&self, t: &[f64]) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        let mut p = self.base.clone();
        for (k, &(i, j)) in self.free.iter().enumerate() {
            p[i * m + j] += t[k];
            p[i * m + m - 1] -= t[k];
            p[(n - 1) * m + j] -= t[k];
            p[n * m - 1] += t[k];
        }
        p
    }

    /// Feasible interval for coordinate `k` with the others fixed.
    fn interval(&self, t: &[f64], k: usize) -> (f64, f64) {
        let (ik, jk) = self.free[k];
        let mut lo = 0.0_f64;
        let mut hi = self.upper[k];
        let others: f64 = t.iter().enumerate().filter(|(l, _)| *l != k).map(|(_, v)| v).sum();
        lo = lo.max(-(self.base[self.n * self.m - 1] + others));
        let row: f64 = self
            .free
            .iter()
            .zip(t)
            .enumerate()
            .filter(|(l, ((i, _), _))| *l != k && *i == ik)
            .map(|(_, (_, v))| v)
            .sum();
        let col: f64 = self
            .free
            .iter()
            .zip(t)
            .enumerate()
            .filter(|(l, ((_, j), _))| *l != k && *j == jk)
            .map(|(_, (_, v))| v)
            .sum();
        hi = hi.min(self.base[ik * self.m + self.m - 1] - row).min(self.base[(self.n - 1) * self.m + jk] - col);
        (lo, hi.max(lo))
    }

    fn partial(&self, t: &[f64], k: usize) -> f64 {
        self.linear[k] + 2.0 * (0..t.len()).map(|l| self.quad[k][l] * t[l]).sum::<f64>()
    }

    fn grid_search(&self) -> (Vec<f64>, f64) {
        let dim = self.free.len();
        let total = GRID_NODES.pow(dim as u32);
        let step = (GRID_NODES - 1) as f64;
        let forms = self.cell_forms();
        let decode = |mut idx: usize| -> [f64; MAX_FREE] {
            let mut t = [0.0; MAX_FREE];
            for k in 0..dim {
                let u = idx % GRID_NODES;
                idx /= GRID_NODES;
                t[k] = self.upper[k] * u as f64 / step;
            }
            t
        };
        let best = (0..total)
            .into_par_iter()
            .filter_map(|idx| {
                let t = decode(idx);
                let t = &t[..dim];
                let feasible =
                    forms.iter().all(|(a, b)| a.iter().zip(t).map(|(x, y)| x * y).sum::<f64>() + b >= -1e-15);
                feasible.then(|| (self.value(t), idx))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let best = best.map(|(v, idx)| (decode(idx)[..dim].to_vec(), v));
        match best {
            Some(found) => found,
            None => {
                // The grid always contains t = 0 when the corner cell is feasible;
                // otherwise start from the northwest-corner plan.
                let t = self.northwest();
                let v = self.value(&t);
                (t, v)
            }
        }
    }

    fn northwest(&self) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        let mut a: Vec<f64> = (0..n).map(|i| self.base[i * m + m - 1]).collect();
        let mut b: Vec<f64> = (0..m).map(|j| self.base[(n - 1) * m + j]).collect();
        a[n - 1] = 1.0 - a[..n - 1].iter().sum::<f64>();
        b[m - 1] = 1.0 - b[..m - 1].iter().sum::<f64>();
        let mut t = vec![0.0; self.free.len()];
        let (mut i, mut j) = (0, 0);
        while i < n && j < m {
            let x = a[i].min(b[j]);
            if let Some(k) = self.free.iter().position(|&c| c == (i, j)) {
                t[k] = x;
            }
            a[i] -= x;
            b[j] -= x;
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        t
    }

    /// Exact coordinate descent; returns the final point.
    fn descend(&self, mut t: Vec<f64>) -> Vec<f64> {
        for _ in 0..DESCENT_SWEEPS {
            let mut moved = 0.0_f64;
            for k in 0..t.len() {
                let (lo, hi) = self.interval(&t, k);
                let a = self.quad[k][k];
                let b = self.partial(&t, k) - 2.0 * a * t[k];
                let along = |v: f64| a * v * v + b * v;
                let mut best = if along(lo) <= along(hi) { lo } else { hi };
                if a > 0.0 {
                    let v = (-b / (2.0 * a)).clamp(lo, hi);
                    if along(v) < along(best) {
                        best = v;
                    }
                }
                if along(best) < along(t[k]) {
                    moved = moved.max((best - t[k]).abs());
                    t[k] = best;
                }
            }
            if moved < 1e-16 {
                break;
            }
        }
        t
    }

    /// Affine form `(a, b)` of every cell, `plan = a . t + b`.
    fn cell_forms(&self) -> Vec<(Vec<f64>, f64)> {
        let dim = self.free.len();
        (0..self.n * self.m)
            .map(|c| {
                let a = (0..dim)
                    .map(|k| {
                        let mut e = vec![0.0; dim];
                        e[k] = 1.0;
                        self.plan(&e)[c] - self.base[c]
                    })
                    .collect();
                (a, self.base[c])
            })
            .collect()
    }

    /// Best feasible stationary point over the faces of the polytope.
    ///
    /// The minimum of a quadratic on a polytope is a stationary point of its
    /// restriction to some face; faces with a singular restriction also attain
    /// their minimum on a smaller face, so solving every nonsingular KKT system
    /// and keeping the feasible solutions reaches the global minimum.
    fn face_search(&self) -> Option<(Vec<f64>, f64)> {
        let dim = self.free.len();
        if dim == 0 {
            return None;
        }
        let forms = self.cell_forms();
        let mut best: Option<(Vec<f64>, f64)> = None;
        let mut active = Vec::new();
        self.faces(&forms, 0, &mut active, &mut best);
        best
    }

    fn faces(
        &self,
        forms: &[(Vec<f64>, f64)],
        next: usize,
        active: &mut Vec<usize>,
        best: &mut Option<(Vec<f64>, f64)>,
    ) {
        let dim = self.free.len();
        if let Some(t) = self.kkt_point(forms, active) {
            let feasible = forms.iter().all(|(a, b)| a.iter().zip(&t).map(|(x, y)| x * y).sum::<f64>() + b >= -1e-13);
            if feasible {
                let v = self.value(&t);
                if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
                    *best = Some((t, v));
                }
            }
        }
        if active.len() == dim {
            return;
        }
        for c in next..forms.len() {
            active.push(c);
            self.faces(forms, c + 1, active, best);
            active.pop();
        }
    }

    fn kkt_point(&self, forms: &[(Vec<f64>, f64)], active: &[usize]) -> Option<Vec<f64>> {
        let dim = self.free.len();
        let size = dim + active.len();
        let mut k = DMatrix::<f64>::zeros(size, size);
        let mut rhs = DVector::<f64>::zeros(size);
        for i in 0..dim {
            for j in 0..dim {
                k[(i, j)] = 2.0 * self.quad[i][j];
            }
            rhs[i] = -self.linear[i];
        }
        for (r, &c) in active.iter().enumerate() {
            let (a, b) = &forms[c];
            for i in 0..dim {
                k[(dim + r, i)] = a[i];
                k[(i, dim + r)] = -a[i];
            }
            rhs[dim + r] = -b;
        }
        let sol = k.clone().lu().solve(&rhs)?;
        if sol.iter().any(|v| !v.is_finite()) || (&k * &sol - &rhs).amax() > 1e-12 * (1.0 + rhs.amax()) {
            return None;
        }
        Some(sol.rows(0, dim).iter().copied().collect())
    }

    fn stationarity(&self, t: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for k in 0..t.len() {
            let (lo, hi) = self.interval(t, k);
            let g = self.partial(t, k);
            let at_lo = t[k] - lo <= 1e-14;
            let at_hi = hi - t[k] <= 1e-14;
            let blocked = (at_lo && g > 0.0) || (at_hi && g < 0.0) || (at_lo && at_hi);
            if !blocked {
                worst = worst.max(g.abs());
            }
        }
        worst
    }
}

fn check_size(n: usize, m: usize) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("gauged spaces must be nonempty".into()));
    }
    if (n - 1) * (m - 1) > MAX_FREE {
        return Err(Error::SizeGuard(format!(
            "{n} x {m} coupling polytope has {} free coordinates",
            (n - 1) * (m - 1)
        )));
    }
    Ok(())
}

/// Global GW minimizer by dense grid search plus coordinate descent.
pub fn gw_solve_tiny(x: &GaugedSpace, y: &GaugedSpace) -> Result<GwSolution> {
    let (n, m) = (x.len(), y.len());
    check_size(n, m)?;
    let chart = Chart::new(x, y);
    let (t0, grid_value) = chart.grid_search();
    let mut t = chart.descend(t0);
    if let Some((tf, vf)) = chart.face_search() {
        if vf < chart.value(&t) {
            t = chart.descend(tf);
        }
    }
    let stationarity = chart.stationarity(&t);
    let plan: Vec<f64> = chart.plan(&t).into_iter().map(|v| v.max(0.0)).collect();
    let plan = Coupling::new(n, m, plan)?;
    let value = gw_cost(&plan, x, y)?;
    Ok(GwSolution { plan, value, grid_value, stationarity })
}

/// Squared GW between gauged spaces, through [`gw_solve_tiny`].
#[derive(Clone, Copy, Debug, Default)]
pub struct GwCost;

impl Cost for GwCost {
    type X = GaugedSpace;
    type Y = GaugedSpace;

    fn eval(&self, x: &GaugedSpace, y: &GaugedSpace) -> Result<ExtReal> {
        Ok(ExtReal::finite(gw_solve_tiny(x, y)?.value))
    }

    fn name(&self) -> &str {
        "gw"
    }
}

fn pulled_back(
    x0: &GaugedSpace,
    x1: &GaugedSpace,
    pairs: &[(usize, usize)],
    weights: &ProbVector,
    s: f64,
) -> GaugedSpace {
    let gauge = pairs
        .iter()
        .map(|&(i, j)| pairs.iter().map(|&(i2, j2)| (1.0 - s) * x0.gauge[i][i2] + s * x1.gauge[j][j2]).collect())
        .collect();
    GaugedSpace { gauge, weights: weights.clone() }
}

/// Segment between `x0` and `x1` built on the charged pairs of `gamma`.
pub fn gw_segment(
    x0: &GaugedSpace,
    x1: &GaugedSpace,
    y: &GaugedSpace,
    gamma: &ThreePlan,
) -> Result<SegmentPath<GaugedSpace>> {
    let (n0, n1, m) = gamma.dims();
    if n0 != x0.len() || n1 != x1.len() || m != y.len() {
        return Err(Error::DimensionMismatch { expected: x0.len() * x1.len() * y.len(), got: n0 * n1 * m });
    }
    for (plan, x) in [(gamma.proj_first(), x0), (gamma.proj_second(), x1)] {
        let cost = gw_cost(&plan, x, y)?;
        let best = gw_solve_tiny(x, y)?.value;
        let residual = cost - best;
        if residual > OPTIMALITY_TOL * (1.0 + best.abs()) {
            return Err(Error::NotOptimal { residual });
        }
    }
    let mut pairs = Vec::new();
    let mut mass = Vec::new();
    for i in 0..n0 {
        for j in 0..n1 {
            let w: f64 = (0..m).map(|k| gamma.get(i, j, k)).sum();
            if w > 0.0 {
                pairs.push((i, j));
                mass.push(w);
            }
        }
    }
    let weights = ProbVector::normalized(mass)?;
    let (a, b) = (x0.clone(), x1.clone());
    Ok(SegmentPath::new(y.clone(), x0.clone(), x1.clone(), move |s| Ok(pulled_back(&a, &b, &pairs, &weights, s))))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum GwVerdict {
    Checked {
        report: ViolationReport,
    },
    /// No optimality certificate is available for some evaluation.
    Inconclusive {
        reason: String,
    },
}

impl GwVerdict {
    pub fn passed(&self) -> Option<bool> {
        match self {
            Self::Checked { report } => Some(report.passed),
            Self::Inconclusive { .. } => None,
        }
    }
}

/// NNCC check of the GW segment from certified optimal plans, glued independently.
pub fn gw_nncc_check(
    x0: &GaugedSpace,
    x1: &GaugedSpace,
    y: &GaugedSpace,
    zs: &[GaugedSpace],
    cfg: &VerifierConfig,
) -> Result<GwVerdict> {
    let inconclusive = |e: Error| match e {
        Error::SizeGuard(reason) => Ok(GwVerdict::Inconclusive { reason }),
        other => Err(other),
    };
    let (p0, p1) = match (gw_solve_tiny(x0, y), gw_solve_tiny(x1, y)) {
        (Ok(a), Ok(b)) => (a.plan, b.plan),
        (Err(e), _) | (_, Err(e)) => return inconclusive(e),
    };
    let gamma = glue(&p0, &p1)?;
    let n_s = gamma.charged().iter().map(|&(i, j, _, _)| (i, j)).collect::<std::collections::BTreeSet<_>>().len();
    for z in zs.iter().chain(std::iter::once(y)) {
        if let Err(e) = check_size(n_s.max(x0.len()).max(x1.len()), z.len()) {
            return inconclusive(e);
        }
    }
    let seg = gw_segment(x0, x1, y, &gamma)?;
    match nncc_check(&seg, &GwCost, zs, cfg) {
        Ok(report) => Ok(GwVerdict::Checked { report }),
        Err(e) => inconclusive(e),
    }
}
