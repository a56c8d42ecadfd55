//! Cone costs of unbalanced transport.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::families::sphere::geodesic_distance;
use crate::geometry::verify::{nncc_check, structured_probes, VerifierConfig, ViolationReport};
use crate::geometry::{Cost, SegmentPath};
use crate::linalg::{lerp, norm, scale};
use crate::report::Coords;
use crate::sampling::{rng, sphere_point};

const GOLDEN_ITERS: usize = 300;
const NEWTON_ITERS: usize = 30;
const UNIT_TOL: f64 = 1e-9;

/// Marginal penalty, a convex function on `[0, inf)` vanishing at 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entropy {
    /// `t log t - t + 1`.
    Kl,
    /// `|t - 1|`.
    Tv,
}

impl FromStr for Entropy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kl" => Ok(Self::Kl),
            "tv" => Ok(Self::Tv),
            other => Err(Error::Unsupported(format!("entropy `{other}` is not a known convex entropy"))),
        }
    }
}

impl Entropy {
    pub fn value(self, t: f64) -> f64 {
        match self {
            Self::Kl if t == 0.0 => 1.0,
            Self::Kl => t * t.ln() - t + 1.0,
            Self::Tv => (t - 1.0).abs(),
        }
    }

    fn slope(self, t: f64) -> f64 {
        match self {
            Self::Kl => t.ln(),
            Self::Tv => (t - 1.0).signum(),
        }
    }

    fn curvature(self, t: f64) -> f64 {
        match self {
            Self::Kl => 1.0 / t,
            Self::Tv => 0.0,
        }
    }

    /// Slope at infinity.
    pub fn recession(self) -> f64 {
        match self {
            Self::Kl => f64::INFINITY,
            Self::Tv => 1.0,
        }
    }

    /// `r F(z / r)`, extended by `z F'(inf)` at `r = 0`.
    fn perspective(self, r: f64, z: f64) -> f64 {
        if r > 0.0 {
            r * self.value(z / r)
        } else if z == 0.0 {
            0.0
        } else {
            z * self.recession()
        }
    }
}

struct Objective {
    f0: Entropy,
    f1: Entropy,
    c: f64,
    r: f64,
    s: f64,
}

impl Objective {
    fn at(&self, z: f64) -> f64 {
        let lin = if z == 0.0 { 0.0 } else { self.c * z };
        self.f0.perspective(self.r, z) + self.f1.perspective(self.s, z) + lin
    }

    fn newton(&self, mut z: f64) -> f64 {
        if self.r == 0.0 || self.s == 0.0 {
            return z;
        }
        for _ in 0..NEWTON_ITERS {
            if z <= 0.0 {
                break;
            }
            let g = self.f0.slope(z / self.r) + self.f1.slope(z / self.s) + self.c;
            let h = self.f0.curvature(z / self.r) / self.r + self.f1.curvature(z / self.s) / self.s;
            if !(h > 0.0) || !g.is_finite() {
                break;
            }
            let next = z - g / h;
            if !(next > 0.0) || self.at(next) > self.at(z) {
                break;
            }
            if next == z {
                break;
            }
            z = next;
        }
        z
    }
}

/// `inf_{z >= 0} r F0(z/r) + s F1(z/s) + base_c z`.
///
/// `base_c = +inf` forces `z = 0`. The result is `-inf` when the objective
/// is unbounded below.
pub fn cone_cost(f0: Entropy, f1: Entropy, base_c: f64, r: f64, s: f64) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite() && s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidInput(format!("masses must be finite and nonnegative, got ({r}, {s})")));
    }
    if base_c.is_nan() || base_c == f64::NEG_INFINITY {
        return Err(Error::InvalidInput(format!("base cost {base_c} not allowed")));
    }
    let obj = Objective { f0, f1, c: base_c, r, s };
    let at_zero = obj.at(0.0);
    if base_c == f64::INFINITY {
        return Ok(at_zero);
    }
    if r == 0.0 && s == 0.0 {
        let slope = f0.recession() + f1.recession() + base_c;
        return Ok(if slope >= 0.0 { 0.0 } else { f64::NEG_INFINITY });
    }
    // Bracket the minimizer of a convex function.
    let mut hi = r.max(s).max(1.0);
    let mut doublings = 0;
    while obj.at(2.0 * hi) < obj.at(hi) {
        hi *= 2.0;
        doublings += 1;
        if doublings > 1100 || !hi.is_finite() {
            return Ok(f64::NEG_INFINITY);
        }
    }
    let (mut a, mut b) = (0.0_f64, 2.0 * hi);
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut v1, mut v2) = (obj.at(x1), obj.at(x2));
    for _ in 0..GOLDEN_ITERS {
        if b - a <= f64::EPSILON * b {
            break;
        }
        if v1 <= v2 {
            b = x2;
            x2 = x1;
            v2 = v1;
            x1 = b - g * (b - a);
            v1 = obj.at(x1);
        } else {
            a = x1;
            x1 = x2;
            v1 = v2;
            x2 = a + g * (b - a);
            v2 = obj.at(x2);
        }
    }
    let z = obj.newton(0.5 * (a + b));
    Ok(obj.at(z).min(at_zero))
}

/// `r + s - 2 sqrt(rs) cos(min(d, pi))`.
pub fn wfr_cone_cost(d: f64, r: f64, s: f64) -> Result<f64> {
    if !(d >= 0.0) || !(r >= 0.0) || !(s >= 0.0) {
        return Err(Error::InvalidInput(format!("wfr cone cost needs d, r, s >= 0, got ({d}, {r}, {s})")));
    }
    Ok(r + s - 2.0 * (r * s).sqrt() * d.min(PI).cos())
}

/// `-log cos^2(min(d, pi))`, the base cost whose KL cone cost is the WFR cone cost.
pub fn wfr_base_cost(d: f64) -> f64 {
    let c = d.min(PI).cos();
    if c == 0.0 {
        f64::INFINITY
    } else {
        -(c * c).ln()
    }
}

/// A point `[x, r]` of the cone over a base space.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConePoint {
    pub base: Vec<f64>,
    pub radius: f64,
}

impl PartialEq for ConePoint {
    fn eq(&self, other: &Self) -> bool {
        if self.radius == 0.0 && other.radius == 0.0 {
            return true;
        }
        self.radius == other.radius && self.base == other.base
    }
}

impl ConePoint {
    pub fn new(base: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("cone radius {radius} must be finite and nonnegative")));
        }
        Ok(Self { base, radius })
    }

    pub fn is_apex(&self) -> bool {
        self.radius == 0.0
    }

    /// `sqrt(r) x` in the ambient space of the sphere.
    pub fn embed(&self) -> Vec<f64> {
        scale(&self.base, self.radius.sqrt())
    }

    /// Inverse of [`ConePoint::embed`]; the apex gets the first basis vector as base.
    pub fn unembed(z: &[f64]) -> Self {
        let n = norm(z);
        if n == 0.0 {
            let mut base = vec![0.0; z.len()];
            if let Some(b) = base.first_mut() {
                *b = 1.0;
            }
            return Self { base, radius: 0.0 };
        }
        Self { base: scale(z, 1.0 / n), radius: n * n }
    }

    pub fn random_on_sphere<R: Rng>(rng: &mut R, ambient: usize, max_radius: f64) -> Self {
        let base = sphere_point(rng, ambient);
        Self { base, radius: rng.random_range(0.0..max_radius) }
    }
}

impl Coords for ConePoint {
    fn coords(&self) -> Vec<f64> {
        let mut out = self.base.clone();
        out.push(self.radius);
        out
    }
}

/// WFR cone cost over the round sphere.
#[derive(Clone, Copy, Debug, Default)]
pub struct WfrConeCost;

impl Cost for WfrConeCost {
    type X = ConePoint;
    type Y = ConePoint;

    fn eval(&self, x: &ConePoint, y: &ConePoint) -> Result<ExtReal> {
        let d = if x.is_apex() || y.is_apex() { 0.0 } else { geodesic_distance(&x.base, &y.base) };
        Ok(ExtReal::finite(wfr_cone_cost(d, x.radius, y.radius)?))
    }

    fn name(&self) -> &str {
        "wfr_cone"
    }
}

/// Base space of the cone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ConeBase {
    Sphere {
        ambient: usize,
    },
    /// Unit-trace PSD matrices; recognised but not implemented.
    PsdUnitTrace,
}

fn check_on_sphere(p: &ConePoint, ambient: usize) -> Result<()> {
    if p.base.len() != ambient {
        return Err(Error::DimensionMismatch { expected: ambient, got: p.base.len() });
    }
    if !p.is_apex() && (norm(&p.base) - 1.0).abs() > UNIT_TOL {
        return Err(Error::Domain(format!("cone base has norm {}, expected 1", norm(&p.base))));
    }
    Ok(())
}

/// Linear segment in the ambient embedding, read back on the cone.
pub fn cone_segment(x0: &ConePoint, x1: &ConePoint, y_bar: &ConePoint) -> SegmentPath<ConePoint> {
    let (z0, z1) = (x0.embed(), x1.embed());
    SegmentPath::new(y_bar.clone(), x0.clone(), x1.clone(), move |s| Ok(ConePoint::unembed(&lerp(&z0, &z1, s))))
}

/// NNCC check of the cone cost on one triple, against random cone points
/// with radius below `cfg.samples.hi` plus the structured probes.
pub fn cone_nncc_check(
    base: ConeBase,
    x0: &ConePoint,
    x1: &ConePoint,
    y_bar: &ConePoint,
    cfg: &VerifierConfig,
) -> Result<ViolationReport> {
    let ambient = match base {
        ConeBase::Sphere { ambient } => ambient,
        ConeBase::PsdUnitTrace => {
            return Err(Error::Unsupported("cone over unit-trace PSD matrices is not implemented".into()))
        }
    };
    for p in [x0, x1, y_bar] {
        check_on_sphere(p, ambient)?;
    }
    let seg = cone_segment(x0, x1, y_bar);
    let mut r = rng(cfg.samples.seed);
    let max_radius = cfg.samples.hi.abs().max(1e-3);
    let mut ys: Vec<ConePoint> =
        (0..cfg.samples.count).map(|_| ConePoint::random_on_sphere(&mut r, ambient, max_radius)).collect();
    ys.push(ConePoint::unembed(&vec![0.0; ambient]));
    ys.extend(structured_probes(&seg, cfg)?);
    nncc_check(&seg, &WfrConeCost, &ys, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dist_sq;

    #[test]
    fn wfr_at_zero_distance() {
        assert_eq!(wfr_cone_cost(0.0, 2.0, 2.0).unwrap(), 0.0);
        let v = wfr_cone_cost(0.0, 4.0, 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kl_closed_form_minimizer() {
        for &(d, r, s) in &[(0.3, 1.0, 2.0), (1.2, 0.5, 0.1), (0.0, 3.0, 3.0), (1.5, 2.0, 0.7)] {
            let c = wfr_base_cost(d);
            let numeric = cone_cost(Entropy::Kl, Entropy::Kl, c, r, s).unwrap();
            let z = (r * s).sqrt() * (-c / 2.0).exp();
            let direct = r * Entropy::Kl.value(z / r) + s * Entropy::Kl.value(z / s) + c * z;
            assert!((numeric - direct).abs() < 1e-12, "{numeric} {direct}");
            assert!((numeric - wfr_cone_cost(d, r, s).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_conventions() {
        assert_eq!(cone_cost(Entropy::Kl, Entropy::Kl, 0.5, 0.0, 2.0).unwrap(), 2.0);
        assert_eq!(cone_cost(Entropy::Kl, Entropy::Kl, f64::INFINITY, 1.0, 2.0).unwrap(), 3.0);
        assert_eq!(cone_cost(Entropy::Kl, Entropy::Kl, 0.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(cone_cost(Entropy::Tv, Entropy::Tv, -3.0, 0.0, 0.0).unwrap(), f64::NEG_INFINITY);
        // TV with r = 0: min over z of z + |z - s| + c z.
        let v = cone_cost(Entropy::Tv, Entropy::Tv, 0.5, 0.0, 2.0).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tv_is_piecewise_linear() {
        // min_z |z - r| + |z - s| + c z with r <= s is attained at z = r or z = 0.
        for &(c, r, s) in &[(0.1, 1.0, 2.0), (1.5, 1.0, 2.0), (3.0, 0.5, 1.0)] {
            let expect =
                [0.0, r, s].iter().map(|&z: &f64| (z - r).abs() + (z - s).abs() + c * z).fold(f64::INFINITY, f64::min);
            let v = cone_cost(Entropy::Tv, Entropy::Tv, c, r, s).unwrap();
            assert!((v - expect).abs() < 1e-12, "{v} {expect}");
        }
    }

    #[test]
    fn unknown_entropy_rejected() {
        assert!(matches!("power".parse::<Entropy>(), Err(Error::Unsupported(_))));
        assert_eq!("kl".parse::<Entropy>().unwrap(), Entropy::Kl);
    }

    #[test]
    fn embedding_is_isometric() {
        let mut r = rng(5);
        for _ in 0..200 {
            let p = ConePoint::random_on_sphere(&mut r, 3, 2.0);
            let q = ConePoint::random_on_sphere(&mut r, 3, 2.0);
            let c = WfrConeCost.eval(&p, &q).unwrap().to_f64();
            assert!((c - dist_sq(&p.embed(), &q.embed())).abs() < 1e-10);
        }
    }

    #[test]
    fn apex_ignores_base() {
        let a = ConePoint::new(vec![1.0, 0.0, 0.0], 0.0).unwrap();
        let b = ConePoint::new(vec![0.0, 1.0, 0.0], 0.0).unwrap();
        assert_eq!(a, b);
        assert!(ConePoint::new(vec![1.0], -1.0).is_err());
    }

    #[test]
    fn apex_triple_has_zero_gaps() {
        let apex = ConePoint::new(vec![1.0, 0.0, 0.0], 0.0).unwrap();
        let rep =
            cone_nncc_check(ConeBase::Sphere { ambient: 3 }, &apex, &apex, &apex, &VerifierConfig::default()).unwrap();
        assert!(rep.passed);
        assert!(rep.max_abs_gap() < 1e-12, "{}", rep.max_abs_gap());
    }

    #[test]
    fn psd_base_unsupported() {
        let p = ConePoint::new(vec![1.0], 1.0).unwrap();
        let err = cone_nncc_check(ConeBase::PsdUnitTrace, &p, &p, &p, &VerifierConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }
}
