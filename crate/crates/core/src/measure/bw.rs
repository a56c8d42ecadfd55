use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::geometry::{Cost, SegmentPath};
use crate::mtw::SmoothCost;
use crate::report::Coords;

const SYM_TOL: f64 = 1e-12;
const EIG_TOL: f64 = 1e-12;
const ENDPOINT_TOL: f64 = 1e-8;

/// Symmetric positive semi-definite matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Psd(DMatrix<f64>);

impl Psd {
    /// Validates symmetry and the spectrum, clamping eigenvalues in `[-1e-12, 0)` to zero.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidInput("PSD matrix must be square and nonempty".into()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("PSD matrix has non-finite entries".into()));
        }
        let asym = (&m - m.transpose()).norm();
        if asym > SYM_TOL {
            return Err(Error::InvalidInput(format!("matrix is not symmetric (defect {asym:e})")));
        }
        let sym = (&m + m.transpose()) * 0.5;
        let eig = sym.clone().symmetric_eigen();
        let min = eig.eigenvalues.min();
        if min < -EIG_TOL {
            return Err(Error::InvalidInput(format!("matrix has eigenvalue {min:e}")));
        }
        if min < 0.0 {
            return Ok(Self(spectral(&eig, |l| l.max(0.0))));
        }
        Ok(Self(sym))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("PSD rows must form a square matrix".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// `m m^T`, which is PSD by construction.
    pub fn gram(m: &DMatrix<f64>) -> Self {
        let g = m * m.transpose();
        Self((&g + g.transpose()) * 0.5)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Upper-triangular entries, row by row.
    pub fn upper(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).map(|(i, j)| self.0[(i, j)]).collect()
    }

    /// Symmetric matrix from upper-triangular entries; not validated.
    pub fn sym_from_upper(v: &[f64]) -> Result<DMatrix<f64>> {
        let n = ((((8 * v.len() + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
        if n * (n + 1) / 2 != v.len() {
            return Err(Error::InvalidInput(format!("{} is not a triangular number", v.len())));
        }
        let mut m = DMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                m[(i, j)] = v[k];
                m[(j, i)] = v[k];
                k += 1;
            }
        }
        Ok(m)
    }
}

impl TryFrom<Vec<Vec<f64>>> for Psd {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<Psd> for Vec<Vec<f64>> {
    fn from(p: Psd) -> Self {
        p.0.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

impl Coords for Psd {
    fn coords(&self) -> Vec<f64> {
        self.0.transpose().iter().copied().collect()
    }
}

fn spectral(eig: &nalgebra::SymmetricEigen<f64, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    let m = &eig.eigenvectors * d * eig.eigenvectors.transpose();
    (&m + m.transpose()) * 0.5
}

/// Eigenvalues below this multiple of the largest are treated as rounding noise.
const RANK_REL: f64 = 64.0 * f64::EPSILON;

fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let cut = RANK_REL * eig.eigenvalues.amax();
    spectral(&eig, |l| if l > cut { l.sqrt() } else { 0.0 })
}

/// Symmetric square root.
pub fn psd_sqrt(s: &Psd) -> DMatrix<f64> {
    sym_sqrt(s.matrix())
}

/// `tr (R1 S2 R1)^{1/2}` as the nuclear norm of `S2^{1/2} R1`.
fn cross_term(r1: &DMatrix<f64>, r2: &DMatrix<f64>) -> f64 {
    (r2 * r1).singular_values().sum()
}

/// `tr S1 + tr S2 - 2 tr (S1^{1/2} S2 S1^{1/2})^{1/2}`, floored at zero.
pub fn bw_distance_sq(s1: &Psd, s2: &Psd) -> Result<f64> {
    if s1.dim() != s2.dim() {
        return Err(Error::DimensionMismatch { expected: s1.dim(), got: s2.dim() });
    }
    let cross = cross_term(&psd_sqrt(s1), &psd_sqrt(s2));
    Ok((s1.trace() + s2.trace() - 2.0 * cross).max(0.0))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct BwCost;

impl Cost for BwCost {
    type X = Psd;
    type Y = Psd;

    fn eval(&self, x: &Psd, y: &Psd) -> Result<ExtReal> {
        Ok(ExtReal::finite(bw_distance_sq(x, y)?))
    }

    fn name(&self) -> &str {
        "bures_wasserstein"
    }
}

/// Orthogonal polar factor `U` of `A = U P`, from the SVD `A = W S V^T` as `U = W V^T`.
fn polar_factor(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = a.clone().svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(w), Some(vt)) => Ok(w * vt),
        _ => Err(Error::Solver("SVD failed".into())),
    }
}

/// Square-root factor `M` with `M M^T = S` closest to `N = S_bar^{1/2}`.
fn aligned_factor(s: &Psd, r_bar: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let r = psd_sqrt(s);
    let u = polar_factor(&(r_bar * &r))?;
    Ok(r * u.transpose())
}

/// Bures-Wasserstein segment `S(s) = M(s) M(s)^T` with
/// `M(s) = (1-s) S0^{1/2} U0^T + s S1^{1/2} U1^T`, where `U_i` is the orthogonal
/// polar factor of `S2^{1/2} S_i^{1/2}`.
pub fn bw_segment(s0: &Psd, s1: &Psd, s2: &Psd) -> Result<SegmentPath<Psd>> {
    for s in [s1, s2] {
        if s.dim() != s0.dim() {
            return Err(Error::DimensionMismatch { expected: s0.dim(), got: s.dim() });
        }
    }
    let r2 = psd_sqrt(s2);
    let m0 = aligned_factor(s0, &r2)?;
    let m1 = aligned_factor(s1, &r2)?;
    for (m, s) in [(&m0, s0), (&m1, s1)] {
        let err = (m * m.transpose() - s.matrix()).amax();
        if err > ENDPOINT_TOL * (1.0 + s.matrix().amax()) {
            return Err(Error::Numeric(format!("segment endpoint mismatch {err:e}")));
        }
    }
    Ok(SegmentPath::new(s2.clone(), s0.clone(), s1.clone(), move |s| Ok(Psd::gram(&(&m0 * (1.0 - s) + &m1 * s)))))
}

/// Squared Bures-Wasserstein distance in upper-triangular coordinates,
/// smooth on pairs of matrices with smallest eigenvalue above `min_eig`.
pub fn bw_smooth_cost(n: usize, min_eig: f64) -> SmoothCost {
    let k = n * (n + 1) / 2;
    let pd = move |v: &[f64]| Psd::sym_from_upper(v).is_ok_and(|m| m.symmetric_eigen().eigenvalues.min() > min_eig);
    SmoothCost::new(
        "bures_wasserstein",
        k,
        k,
        |x, y| {
            let (a, b) = (Psd::sym_from_upper(x).unwrap(), Psd::sym_from_upper(y).unwrap());
            a.trace() + b.trace() - 2.0 * cross_term(&sym_sqrt(&a), &sym_sqrt(&b))
        },
        move |x, y| pd(x) && pd(y),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng;
    use rand::Rng;

    fn random_psd(r: &mut impl Rng, n: usize, rank: usize) -> Psd {
        let g = DMatrix::from_fn(n, rank, |_, _| r.random_range(-1.0..1.0));
        Psd::gram(&g)
    }

    fn diag(v: &[f64]) -> Psd {
        Psd::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v))).unwrap()
    }

    #[test]
    fn validation_and_clamp() {
        assert!(Psd::from_rows(&[vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
        assert!(Psd::from_rows(&[vec![-1.0, 0.0], vec![0.0, 1.0]]).is_err());
        let p = Psd::from_rows(&[vec![-1e-13, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(p.matrix().clone().symmetric_eigen().eigenvalues.min() >= 0.0);
        let json: Psd = serde_json::from_str("[[2.0, 1.0], [1.0, 2.0]]").unwrap();
        assert_eq!(json.dim(), 2);
    }

    #[test]
    fn commuting_distance() {
        let (a, b) = ([1.0, 4.0, 0.25], [9.0, 1.0, 0.0]);
        let want: f64 = a.iter().zip(&b).map(|(x, y): (&f64, &f64)| (x.sqrt() - y.sqrt()).powi(2)).sum();
        assert!((bw_distance_sq(&diag(&a), &diag(&b)).unwrap() - want).abs() < 1e-12);
        assert!(bw_distance_sq(&diag(&a), &diag(&a)).unwrap() < 1e-12);
    }

    #[test]
    fn variational_form_on_2x2() {
        let mut r = rng(11);
        for _ in 0..10 {
            let (s1, s2) = (random_psd(&mut r, 2, 2), random_psd(&mut r, 2, 2));
            let (r1, r2) = (psd_sqrt(&s1), psd_sqrt(&s2));
            let mut best = f64::INFINITY;
            for k in 0..20000 {
                let t = k as f64 * std::f64::consts::TAU / 20000.0;
                let (sn, cs) = t.sin_cos();
                for q in [
                    DMatrix::from_row_slice(2, 2, &[cs, -sn, sn, cs]),
                    DMatrix::from_row_slice(2, 2, &[cs, sn, sn, -cs]),
                ] {
                    best = best.min((&r1 * q - &r2).norm_squared());
                }
            }
            let d = bw_distance_sq(&s1, &s2).unwrap();
            assert!(d <= best + 1e-12);
            assert!(best - d < 1e-6, "grid {best} vs {d}");
        }
    }

    #[test]
    fn commuting_segment() {
        let (a, b, c) = ([1.0, 4.0, 0.0], [9.0, 1.0, 2.0], [1.0, 2.0, 3.0]);
        let seg = bw_segment(&diag(&a), &diag(&b), &diag(&c)).unwrap();
        for s in [0.25, 0.5, 0.75] {
            let m = seg.at(s).unwrap();
            for i in 0..3 {
                let want = ((1.0 - s) * a[i].sqrt() + s * b[i].sqrt()).powi(2);
                assert!((m.matrix()[(i, i)] - want).abs() < 1e-12);
            }
            assert!((m.matrix() - DMatrix::from_diagonal(&m.matrix().diagonal())).amax() < 1e-12);
        }
    }

    #[test]
    fn constant_segment() {
        let mut r = rng(2);
        let (a, c) = (random_psd(&mut r, 3, 3), random_psd(&mut r, 3, 3));
        let seg = bw_segment(&a, &a, &c).unwrap();
        assert!((seg.at(0.4).unwrap().matrix() - a.matrix()).amax() < 1e-10);
    }

    #[test]
    fn symmetric_and_separating() {
        let mut r = rng(5);
        for _ in 0..20 {
            let (a, b) = (random_psd(&mut r, 3, 3), random_psd(&mut r, 3, 2));
            let (d1, d2) = (bw_distance_sq(&a, &b).unwrap(), bw_distance_sq(&b, &a).unwrap());
            assert!((d1 - d2).abs() < 1e-9);
            assert!(d1 > 1e-9);
        }
    }
}
