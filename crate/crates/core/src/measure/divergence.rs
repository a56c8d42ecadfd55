use std::f64::consts::FRAC_PI_2;

use super::ProbVector;
use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::families::sphere::{geodesic_distance, sphere_segment};
use crate::geometry::{Cost, SegmentPath};
use crate::linalg::{dot, lerp};

const BC_TOL: f64 = 1e-12;
const FRAME_TOL: f64 = 1e-10;

/// Relative entropy `sum F(mu_i / nu_i) nu_i` with `F(t) = t log t - t + 1`.
pub fn kl(mu: &ProbVector, nu: &ProbVector) -> Result<ExtReal> {
    mu.same_support(nu)?;
    let mut total = 0.0;
    for (&m, &n) in mu.weights().iter().zip(nu.weights()) {
        if n > 0.0 {
            total += if m > 0.0 { m * (m / n).ln() - m + n } else { n };
        } else if m > 0.0 {
            return Ok(ExtReal::POS_INF);
        }
    }
    Ok(ExtReal::finite(total))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct KlCost;

impl Cost for KlCost {
    type X = ProbVector;
    type Y = ProbVector;

    fn eval(&self, x: &ProbVector, y: &ProbVector) -> Result<ExtReal> {
        kl(x, y)
    }

    fn name(&self) -> &str {
        "kl"
    }
}

/// Mixture segment `(1-s) mu0 + s mu1`; it does not depend on the base.
pub fn kl_segment(mu0: &ProbVector, mu1: &ProbVector, nu_bar: &ProbVector) -> Result<SegmentPath<ProbVector>> {
    mu0.same_support(mu1)?;
    mu0.same_support(nu_bar)?;
    let (a, b) = (mu0.weights().to_vec(), mu1.weights().to_vec());
    Ok(SegmentPath::new(nu_bar.clone(), mu0.clone(), mu1.clone(), move |s| Ok(ProbVector::from_raw(lerp(&a, &b, s)))))
}

/// `|(1-s) KL(mu0, nu) + s KL(mu1, nu) - KL(mu(s), nu) - [(1-s) KL(mu0, mu(s)) + s KL(mu1, mu(s))]|`.
pub fn kl_identity_residual(mu0: &ProbVector, mu1: &ProbVector, nu: &ProbVector, s: f64) -> Result<f64> {
    let k0 = kl(mu0, nu)?;
    let k1 = kl(mu1, nu)?;
    let (Some(k0), Some(k1)) = (k0.finite_value(), k1.finite_value()) else {
        return Err(Error::Precondition("KL(mu_i, nu) must be finite".into()));
    };
    let ms = kl_segment(mu0, mu1, nu)?.at(s)?;
    let ks = kl(&ms, nu)?.finite_value().ok_or_else(|| Error::Numeric("KL(mu(s), nu) is infinite".into()))?;
    let lhs = (1.0 - s) * k0 + s * k1 - ks;
    let rhs = kl(mu0, &ms)?.scale(1.0 - s).add_ext(kl(mu1, &ms)?.scale(s));
    let rhs = rhs
        .defined()
        .and_then(|v| v.finite_value())
        .ok_or_else(|| Error::Numeric("identity right-hand side is infinite".into()))?;
    Ok((lhs - rhs).abs())
}

/// `sum (sqrt mu_i - sqrt nu_i)^2`.
pub fn hellinger_sq(mu: &ProbVector, nu: &ProbVector) -> Result<f64> {
    mu.same_support(nu)?;
    Ok(mu.weights().iter().zip(nu.weights()).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum())
}

/// Bhattacharyya coefficient `sum sqrt(mu_i nu_i)`, clamped to `[0, 1]`.
pub fn bhattacharyya(mu: &ProbVector, nu: &ProbVector) -> Result<f64> {
    mu.same_support(nu)?;
    let bc: f64 = mu.weights().iter().zip(nu.weights()).map(|(a, b)| (a * b).sqrt()).sum();
    if bc > 1.0 + BC_TOL {
        return Err(Error::Numeric(format!("Bhattacharyya coefficient {bc} exceeds 1")));
    }
    Ok(bc.min(1.0))
}

/// `arccos(BC(mu, nu))`, evaluated as the great-circle angle of the square roots.
pub fn fisher_rao(mu: &ProbVector, nu: &ProbVector) -> Result<f64> {
    bhattacharyya(mu, nu)?;
    Ok(geodesic_distance(&mu.sqrt(), &nu.sqrt()).min(FRAC_PI_2))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct HellingerCost;

impl Cost for HellingerCost {
    type X = ProbVector;
    type Y = ProbVector;

    fn eval(&self, x: &ProbVector, y: &ProbVector) -> Result<ExtReal> {
        Ok(ExtReal::finite(hellinger_sq(x, y)?))
    }

    fn name(&self) -> &str {
        "hellinger"
    }
}

/// Squared Fisher-Rao distance.
#[derive(Clone, Copy, Debug, Default)]
pub struct FisherRaoCost;

impl Cost for FisherRaoCost {
    type X = ProbVector;
    type Y = ProbVector;

    fn eval(&self, x: &ProbVector, y: &ProbVector) -> Result<ExtReal> {
        let d = fisher_rao(x, y)?;
        Ok(ExtReal::finite(d * d))
    }

    fn name(&self) -> &str {
        "fisher_rao"
    }
}

fn wdot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

fn sqrt_density(mu: &ProbVector, lambda: &[f64]) -> Result<Vec<f64>> {
    mu.weights()
        .iter()
        .zip(lambda)
        .map(|(&m, &l)| match (m > 0.0, l > 0.0) {
            (_, true) => Ok((m / l).sqrt()),
            (false, false) => Ok(0.0),
            (true, false) => Err(Error::InvalidInput("reference measure does not dominate".into())),
        })
        .collect()
}

/// Hellinger segment with square-root densities taken against the reference weights `lambda`.
///
/// The orthogonal part to `sqrt(d nu_bar / d lambda)` is interpolated linearly
/// and the result is lifted back onto the unit sphere of `L^2(lambda)`.
pub fn hellinger_segment_weighted(
    mu0: &ProbVector,
    mu1: &ProbVector,
    nu_bar: &ProbVector,
    lambda: &[f64],
) -> Result<SegmentPath<ProbVector>> {
    mu0.same_support(mu1)?;
    mu0.same_support(nu_bar)?;
    if lambda.len() != mu0.len() {
        return Err(Error::DimensionMismatch { expected: mu0.len(), got: lambda.len() });
    }
    let w = lambda.to_vec();
    let beta = sqrt_density(nu_bar, &w)?;
    let perp = |a: Vec<f64>| -> Vec<f64> {
        let k = wdot(&w, &a, &beta);
        a.iter().zip(&beta).map(|(x, b)| x - k * b).collect()
    };
    let p0 = perp(sqrt_density(mu0, &w)?);
    let p1 = perp(sqrt_density(mu1, &w)?);
    Ok(SegmentPath::new(nu_bar.clone(), mu0.clone(), mu1.clone(), move |s| {
        let p = lerp(&p0, &p1, s);
        let lift = (1.0 - wdot(&w, &p, &p)).max(0.0).sqrt();
        Ok(ProbVector::from_raw(p.iter().zip(&beta).zip(&w).map(|((x, b), l)| l * (x + lift * b).powi(2)).collect()))
    }))
}

/// Hellinger segment with the counting measure as reference.
pub fn hellinger_segment(mu0: &ProbVector, mu1: &ProbVector, nu_bar: &ProbVector) -> Result<SegmentPath<ProbVector>> {
    hellinger_segment_weighted(mu0, mu1, nu_bar, &vec![1.0; mu0.len()])
}

/// Orthonormal family spanning `vs`, built by Gram-Schmidt and dropping dependent vectors.
fn frame(vs: &[&[f64]]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vs {
        let mut w = v.to_vec();
        for _ in 0..2 {
            for e in &out {
                let k = dot(&w, e);
                w.iter_mut().zip(e).for_each(|(a, b)| *a -= k * b);
            }
        }
        let n = dot(&w, &w).sqrt();
        if n > FRAME_TOL {
            out.push(w.iter().map(|a| a / n).collect());
        }
    }
    out
}

fn frame_coords(f: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = f.iter().map(|e| dot(e, v)).collect();
    c.resize(3, 0.0);
    let n = dot(&c, &c).sqrt();
    c.iter().map(|a| a / n).collect()
}

/// Fisher-Rao segment: the sphere segment through the square roots, computed
/// in an orthonormal frame adapted to `(sqrt nu_bar, sqrt mu0, sqrt mu1)`.
pub fn fr_segment(mu0: &ProbVector, mu1: &ProbVector, nu_bar: &ProbVector) -> Result<SegmentPath<ProbVector>> {
    mu0.same_support(mu1)?;
    mu0.same_support(nu_bar)?;
    let (a0, a1, b) = (mu0.sqrt(), mu1.sqrt(), nu_bar.sqrt());
    let f = frame(&[&b, &a0, &a1]);
    let sphere = sphere_segment(&frame_coords(&f, &a0), &frame_coords(&f, &a1), &frame_coords(&f, &b))?;
    let n = mu0.len();
    Ok(SegmentPath::new(nu_bar.clone(), mu0.clone(), mu1.clone(), move |s| {
        let c = sphere.at(s)?;
        let mut alpha = vec![0.0; n];
        for (ck, e) in c.iter().zip(&f) {
            alpha.iter_mut().zip(e).for_each(|(a, x)| *a += ck * x);
        }
        Ok(ProbVector::from_raw(alpha.iter().map(|a| a * a).collect()))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng;

    fn p(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn kl_examples() {
        let mu = p(&[0.3, 0.7]);
        assert_eq!(kl(&mu, &mu).unwrap(), ExtReal::ZERO);
        let v = kl(&p(&[1.0, 0.0]), &p(&[0.5, 0.5])).unwrap().to_f64();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert_eq!(kl(&p(&[0.5, 0.5]), &p(&[1.0, 0.0])).unwrap(), ExtReal::POS_INF);
    }

    #[test]
    fn kl_identity_on_random_positive_vectors() {
        let mut r = rng(3);
        for _ in 0..20 {
            let (a, b, c) =
                (ProbVector::random(&mut r, 5), ProbVector::random(&mut r, 5), ProbVector::random(&mut r, 5));
            assert!(kl_identity_residual(&a, &b, &c, 0.3).unwrap() <= 1e-12);
        }
        let a = p(&[0.2, 0.8]);
        assert_eq!(kl_identity_residual(&a, &a, &p(&[0.5, 0.5]), 0.4).unwrap(), 0.0);
    }

    #[test]
    fn hellinger_examples() {
        let mu = p(&[0.2, 0.3, 0.5]);
        assert_eq!(hellinger_sq(&mu, &mu).unwrap(), 0.0);
        assert!((hellinger_sq(&p(&[0.4, 0.6, 0.0]), &p(&[0.0, 0.0, 1.0])).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn fisher_rao_examples() {
        let mu = p(&[0.2, 0.8]);
        assert_eq!(fisher_rao(&mu, &mu).unwrap(), 0.0);
        assert!((fisher_rao(&p(&[1.0, 0.0]), &p(&[0.0, 1.0])).unwrap() - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn representations_agree() {
        let mut r = rng(9);
        for _ in 0..50 {
            let (a, b) = (ProbVector::random(&mut r, 6), ProbVector::random(&mut r, 6));
            let h2 = hellinger_sq(&a, &b).unwrap();
            let bc = bhattacharyya(&a, &b).unwrap();
            assert!((h2 - (2.0 - 2.0 * bc)).abs() < 1e-12);
            assert!((fisher_rao(&a, &b).unwrap() - (1.0 - h2 / 2.0).acos()).abs() < 1e-12);
        }
    }

    #[test]
    fn hellinger_segment_is_reference_invariant() {
        let mut r = rng(4);
        let (a, b, c) = (ProbVector::random(&mut r, 6), ProbVector::random(&mut r, 6), ProbVector::random(&mut r, 6));
        let lambda = [0.5, 2.0, 1.0, 3.0, 0.25, 1.5];
        let s1 = hellinger_segment(&a, &b, &c).unwrap();
        let s2 = hellinger_segment_weighted(&a, &b, &c, &lambda).unwrap();
        for s in [0.1, 0.5, 0.9] {
            let (u, v) = (s1.at(s).unwrap(), s2.at(s).unwrap());
            for (x, y) in u.weights().iter().zip(v.weights()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fr_segment_handles_degenerate_frame() {
        let a = p(&[0.5, 0.5, 0.0]);
        let seg = fr_segment(&a, &p(&[0.1, 0.2, 0.7]), &a).unwrap();
        let mid = seg.at(0.5).unwrap();
        assert!((mid.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let seg = fr_segment(&a, &a, &a).unwrap();
        assert!(seg.at(0.5).unwrap().weights().iter().zip(a.weights()).all(|(x, y)| (x - y).abs() < 1e-12));
    }
}
