//! Sampled verification of the chord, max, convexity, 1-convexity and
//! comparison inequalities along segments.
//!
//! A passing report means no violation was found among the evaluated
//! samples; it is not a proof over the continuum of test points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Cost, SegmentPath};
use crate::error::{Error, Result};
use crate::ext_real::{ExtReal, Extended, UndefinedRule};
use crate::report::{Coords, SCHEMA_VERSION};

/// Sampling specification for test points `y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub count: usize,
    pub seed: u64,
    /// Lower corner of the sampling box (applied to every coordinate).
    pub lo: f64,
    /// Upper corner of the sampling box.
    pub hi: f64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self { count: 64, seed: 0, lo: -2.0, hi: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifierConfig {
    pub s_grid: Vec<f64>,
    pub tol: f64,
    pub samples: SampleSpec,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        Self { s_grid: super::uniform_grid(33), tol: 1e-9, samples: SampleSpec::default() }
    }
}

impl VerifierConfig {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.samples.seed = seed;
        self
    }

    pub fn with_grid(mut self, n: usize) -> Self {
        self.s_grid = super::uniform_grid(n);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.s_grid;
        if g.len() < 2 || g[0] != 0.0 || *g.last().unwrap() != 1.0 {
            return Err(Error::InvalidInput("s_grid must start at 0 and end at 1".into()));
        }
        if g.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("s_grid must be strictly increasing".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidInput("tolerance must be nonnegative".into()));
        }
        Ok(())
    }

    fn interior(&self) -> Vec<f64> {
        self.s_grid.iter().copied().filter(|&s| s > 0.0 && s < 1.0).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Nncc,
    Lmp,
    Conv,
    OneConvex,
    Pc,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub s: f64,
    pub y: Vec<f64>,
    pub lhs: ExtReal,
    pub rhs: ExtReal,
}

/// Outcome of one sampled check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViolationReport {
    pub schema: u32,
    pub check_kind: CheckKind,
    /// No violation found among the evaluated samples: `max_gap <= tol`.
    pub passed: bool,
    /// Largest violation `lhs - rhs`, floored at zero.
    pub max_gap: f64,
    /// Smallest finite `lhs - rhs`; together with `max_gap` this bounds `|gap|`.
    pub min_gap: f64,
    pub tol: f64,
    /// Sample attaining the largest `lhs - rhs`.
    pub witness: Option<Witness>,
    pub n_evaluated: usize,
    pub seed: u64,
}

impl ViolationReport {
    /// Largest absolute gap among finite evaluations.
    pub fn max_abs_gap(&self) -> f64 {
        self.max_gap.max(-self.min_gap)
    }
}

/// `lhs - rhs` in the extended sense: infinite when the comparison is decided
/// by an infinity, `-inf` when the inequality `lhs <= rhs` holds trivially.
pub fn ext_gap(lhs: ExtReal, rhs: ExtReal) -> f64 {
    match (lhs, rhs) {
        (Extended::Finite(a), Extended::Finite(b)) => a - b,
        _ if lhs <= rhs => f64::NEG_INFINITY,
        _ => f64::INFINITY,
    }
}

/// Running maximum over evaluated gaps, with the first sample winning ties.
#[derive(Clone, Debug)]
struct GapTracker {
    best: f64,
    min_finite: f64,
    witness: Option<(f64, usize, ExtReal, ExtReal)>,
    count: usize,
}

impl GapTracker {
    fn new() -> Self {
        Self { best: f64::NEG_INFINITY, min_finite: 0.0, witness: None, count: 0 }
    }

    fn push(&mut self, s: f64, y_index: usize, lhs: ExtReal, rhs: ExtReal, gap: f64) {
        self.count += 1;
        if gap.is_finite() && gap < self.min_finite {
            self.min_finite = gap;
        }
        if self.witness.is_none() || gap > self.best {
            self.best = gap;
            self.witness = Some((s, y_index, lhs, rhs));
        }
    }

    fn merge(&mut self, other: GapTracker) {
        self.count += other.count;
        self.min_finite = self.min_finite.min(other.min_finite);
        if let Some(w) = other.witness {
            if self.witness.is_none() || other.best > self.best {
                self.best = other.best;
                self.witness = Some(w);
            }
        }
    }

    fn into_report<Y: Coords>(self, kind: CheckKind, probes: &[&Y], cfg: &VerifierConfig) -> ViolationReport {
        let max_gap = if self.witness.is_some() { self.best.max(0.0) } else { 0.0 };
        ViolationReport {
            schema: SCHEMA_VERSION,
            check_kind: kind,
            passed: max_gap <= cfg.tol,
            max_gap,
            min_gap: self.min_finite,
            tol: cfg.tol,
            witness: self.witness.map(|(s, i, lhs, rhs)| Witness { s, y: probes[i].coords(), lhs, rhs }),
            n_evaluated: self.count,
            seed: cfg.samples.seed,
        }
    }
}

fn finite_or<E>(v: ExtReal, err: E) -> std::result::Result<f64, E> {
    v.finite_value().ok_or(err)
}

/// Endpoint costs to the base, and the segment points with their costs to the base.
struct BaseValues<X> {
    c0: f64,
    c1: f64,
    xs: Vec<X>,
    cs: Vec<f64>,
}

fn base_values<C: Cost>(seg: &SegmentPath<C::X, C::Y>, c: &C, ss: &[f64]) -> Result<BaseValues<C::X>>
where
    C::X: 'static,
{
    let y_bar = seg.base();
    let c0 = finite_or(c.eval(seg.x0(), y_bar)?, Error::Precondition("c(x0, y_bar) is not finite".into()))?;
    let c1 = finite_or(c.eval(seg.x1(), y_bar)?, Error::Precondition("c(x1, y_bar) is not finite".into()))?;
    let xs: Vec<C::X> = ss.iter().map(|&s| seg.at(s)).collect::<Result<_>>()?;
    let cs = ss
        .iter()
        .zip(&xs)
        .map(|(&s, x)| {
            let v = c.eval(x, y_bar).map_err(|e| Error::SegmentInvalid { s, reason: e.to_string() })?;
            finite_or(v, Error::SegmentInvalid { s, reason: format!("c(x(s), y_bar) = {v}") })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(BaseValues { c0, c1, xs, cs })
}

fn probe_list<'a, Y>(y_bar: &'a Y, ys: &'a [Y]) -> Vec<&'a Y> {
    std::iter::once(y_bar).chain(ys.iter()).collect()
}

fn reduce(parts: Vec<Result<GapTracker>>) -> Result<GapTracker> {
    let mut total = GapTracker::new();
    for p in parts {
        total.merge(p?);
    }
    Ok(total)
}

fn endpoint_sweep<C: Cost>(
    kind: CheckKind,
    seg: &SegmentPath<C::X, C::Y>,
    c: &C,
    ys: &[C::Y],
    cfg: &VerifierConfig,
) -> Result<ViolationReport>
where
    C::X: 'static,
    C::Y: Coords,
{
    cfg.validate()?;
    let ss = cfg.interior();
    let BaseValues { c0, c1, xs, cs } = base_values(seg, c, &ss)?;
    let probes = probe_list(seg.base(), ys);
    let parts: Vec<Result<GapTracker>> = probes
        .par_iter()
        .enumerate()
        .map(|(yi, y)| {
            let mut t = GapTracker::new();
            let a0 = ExtReal::finite(c0).sub_ext(c.eval(seg.x0(), y)?).resolve(UndefinedRule::ToPosInf);
            let a1 = ExtReal::finite(c1).sub_ext(c.eval(seg.x1(), y)?).resolve(UndefinedRule::ToPosInf);
            for ((&s, x), &cb) in ss.iter().zip(&xs).zip(&cs) {
                let lhs = ExtReal::finite(cb).sub_ext(c.eval(x, y)?).resolve(UndefinedRule::ToPosInf);
                let rhs = match kind {
                    CheckKind::Lmp => a0.max_ext(a1),
                    _ => a0.scale(1.0 - s).add_ext(a1.scale(s)).resolve(UndefinedRule::ToPosInf),
                };
                t.push(s, yi, lhs, rhs, ext_gap(lhs, rhs));
            }
            Ok(t)
        })
        .collect();
    Ok(reduce(parts)?.into_report(kind, &probes, cfg))
}

/// Chord inequality along `seg` against `y_bar` and every point of `ys`.
pub fn nncc_check<C: Cost>(
    seg: &SegmentPath<C::X, C::Y>,
    c: &C,
    ys: &[C::Y],
    cfg: &VerifierConfig,
) -> Result<ViolationReport>
where
    C::X: 'static,
    C::Y: Coords,
{
    endpoint_sweep(CheckKind::Nncc, seg, c, ys, cfg)
}

/// Maximum-principle inequality: the difference stays below its larger endpoint value.
pub fn lmp_check<C: Cost>(
    seg: &SegmentPath<C::X, C::Y>,
    c: &C,
    ys: &[C::Y],
    cfg: &VerifierConfig,
) -> Result<ViolationReport>
where
    C::X: 'static,
    C::Y: Coords,
{
    endpoint_sweep(CheckKind::Lmp, seg, c, ys, cfg)
}

/// Discrete convexity of `s -> c(x(s), y_bar) - c(x(s), y)` on an equispaced grid.
///
/// Gaps are normalized by `1 + max |g|` over the grid, so the pass criterion
/// `max_gap <= tol` is the relative criterion `tol * (1 + |g|_max)`.
pub fn conv_check<C: Cost>(
    seg: &SegmentPath<C::X, C::Y>,
    c: &C,
    ys: &[C::Y],
    cfg: &VerifierConfig,
) -> Result<ViolationReport>
where
    C::X: 'static,
    C::Y: Coords,
{
    cfg.validate()?;
    let grid = &cfg.s_grid;
    let h = grid[1] - grid[0];
    if grid.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-12) {
        return Err(Error::InvalidInput("conv_check needs an equispaced grid".into()));
    }
    let BaseValues { c0, c1, xs: xs_in, cs: cs_in } = base_values(seg, c, &cfg.interior())?;
    let mut xs = Vec::with_capacity(grid.len());
    xs.push(seg.x0().clone());
    xs.extend(xs_in);
    xs.push(seg.x1().clone());
    let mut cs = vec![c0];
    cs.extend(cs_in);
    cs.push(c1);

    let probes = probe_list(seg.base(), ys);
    let parts: Vec<Result<GapTracker>> = probes
        .par_iter()
        .enumerate()
        .map(|(yi, y)| {
            let g = xs
                .iter()
                .zip(&cs)
                .map(|(x, &cb)| Ok(ExtReal::finite(cb).sub_ext(c.eval(x, y)?).resolve(UndefinedRule::ToPosInf)))
                .collect::<Result<Vec<ExtReal>>>()?;
            let scale = 1.0 + g.iter().filter_map(|v| v.finite_value()).fold(0.0_f64, |m, v| m.max(v.abs()));
            let mut t = GapTracker::new();
            for k in 1..g.len() - 1 {
                let lhs = g[k];
                let rhs = g[k - 1].add_ext(g[k + 1]).resolve(UndefinedRule::ToPosInf).scale(0.5);
                let gap = match (g[k - 1], g[k], g[k + 1]) {
                    (Extended::Finite(a), Extended::Finite(b), Extended::Finite(d)) => -(a - 2.0 * b + d) / scale,
                    _ => ext_gap(lhs, rhs),
                };
                t.push(grid[k], yi, lhs, rhs, gap);
            }
            Ok(t)
        })
        .collect();
    Ok(reduce(parts)?.into_report(CheckKind::Conv, &probes, cfg))
}

fn finite_d2<C: Cost>(d2: &C, a: &C::X, b: &C::Y) -> Result<f64> {
    let v = d2.eval(a, b)?;
    v.finite_value().ok_or_else(|| Error::Precondition(format!("squared distance is {v}")))
}

/// `d^2(x(s), y_bar) <= (1-s) d^2(x0, y_bar) + s d^2(x1, y_bar) - s(1-s) d^2(x0, x1)`.
pub fn one_convexity_check<C, P>(seg: &SegmentPath<P, P>, d2: &C, cfg: &VerifierConfig) -> Result<ViolationReport>
where
    P: Clone + Send + Sync + Coords + 'static,
    C: Cost<X = P, Y = P>,
{
    cfg.validate()?;
    let y_bar = seg.base();
    let span = finite_d2(d2, seg.x0(), seg.x1())?;
    let e0 = finite_d2(d2, seg.x0(), y_bar)?;
    let e1 = finite_d2(d2, seg.x1(), y_bar)?;
    let mut t = GapTracker::new();
    for &s in &cfg.s_grid {
        let x = seg.at(s)?;
        let lhs = finite_d2(d2, &x, y_bar)?;
        let rhs = (1.0 - s) * e0 + s * e1 - s * (1.0 - s) * span;
        t.push(s, 0, ExtReal::finite(lhs), ExtReal::finite(rhs), lhs - rhs);
    }
    Ok(t.into_report(CheckKind::OneConvex, &[y_bar], cfg))
}

/// Checks that `geodesic` is parametrized proportionally to arc length.
pub fn constant_speed_deviation<C, P>(geodesic: &SegmentPath<P, P>, d2: &C, grid: &[f64]) -> Result<f64>
where
    P: Clone + Send + Sync + 'static,
    C: Cost<X = P, Y = P>,
{
    let len = finite_d2(d2, geodesic.x0(), geodesic.x1())?.max(0.0).sqrt();
    let pts: Vec<P> = grid.iter().map(|&s| geodesic.at(s)).collect::<Result<_>>()?;
    let mut worst = 0.0_f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = finite_d2(d2, &pts[i], &pts[j])?.max(0.0).sqrt();
            worst = worst.max((d - (grid[j] - grid[i]) * len).abs());
        }
    }
    Ok(worst)
}

/// Comparison inequality of positively curved spaces along a geodesic:
/// `(1-s) d^2(g0, y) + s d^2(g1, y) - s(1-s) d^2(g0, g1) <= d^2(g(s), y)`.
pub fn pc_check<C, P>(geodesic: &SegmentPath<P, P>, d2: &C, ys: &[P], cfg: &VerifierConfig) -> Result<ViolationReport>
where
    P: Clone + Send + Sync + Coords + 'static,
    C: Cost<X = P, Y = P>,
{
    cfg.validate()?;
    let span = finite_d2(d2, geodesic.x0(), geodesic.x1())?;
    let deviation = constant_speed_deviation(geodesic, d2, &cfg.s_grid)?;
    if deviation > 1e-7 * (1.0 + span.sqrt()) {
        return Err(Error::Parametrization { deviation });
    }
    let ss = cfg.interior();
    let xs: Vec<P> = ss.iter().map(|&s| geodesic.at(s)).collect::<Result<_>>()?;
    let probes = probe_list(geodesic.base(), ys);
    let parts: Vec<Result<GapTracker>> = probes
        .par_iter()
        .enumerate()
        .map(|(yi, y)| {
            let mut t = GapTracker::new();
            let e0 = finite_d2(d2, geodesic.x0(), y)?;
            let e1 = finite_d2(d2, geodesic.x1(), y)?;
            for (&s, x) in ss.iter().zip(&xs) {
                let lhs = (1.0 - s) * e0 + s * e1 - s * (1.0 - s) * span;
                let rhs = finite_d2(d2, x, y)?;
                t.push(s, yi, ExtReal::finite(lhs), ExtReal::finite(rhs), lhs - rhs);
            }
            Ok(t)
        })
        .collect();
    Ok(reduce(parts)?.into_report(CheckKind::Pc, &probes, cfg))
}

/// Runs the chord check on the geodesic with its base moved to `g(t)`.
pub fn geodesic_is_vcs<C, P>(
    geodesic: &SegmentPath<P, P>,
    d2: &C,
    t: f64,
    ys: &[P],
    cfg: &VerifierConfig,
) -> Result<ViolationReport>
where
    P: Clone + Send + Sync + Coords + 'static,
    C: Cost<X = P, Y = P>,
{
    let base = geodesic.at(t)?;
    nncc_check(&geodesic.with_base(base), d2, ys, cfg)
}

/// The structured test points `x0`, `x1` and `x(s)` for interior grid nodes.
pub fn structured_probes<P: Clone + 'static>(seg: &SegmentPath<P, P>, cfg: &VerifierConfig) -> Result<Vec<P>> {
    let mut out = vec![seg.x0().clone(), seg.x1().clone()];
    for s in cfg.interior() {
        out.push(seg.at(s)?);
    }
    Ok(out)
}
