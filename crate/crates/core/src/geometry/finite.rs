//! Costs on finite sets: c-transforms, c-subdifferentials and the pointwise
//! equivalence between the chord inequality and convexity of contact sets.
//!
//! Everything is generic over the scalar so the same code runs on `f64`
//! (with an absolute tolerance) and on exact rationals.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Rational64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ext_real::{Extended, UndefinedRule};

/// Scalars usable in finite cost tables.
pub trait TableScalar:
    Copy
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
    + Send
    + Sync
{
    /// Equality used for contact sets.
    fn approx_eq(a: Self, b: Self) -> bool;
    /// `a <= b` up to the same tolerance.
    fn approx_le(a: Self, b: Self) -> bool;
    fn from_int(v: i64) -> Self;
}

/// Absolute tolerance for float contact-set equalities.
pub const FLOAT_CONTACT_TOL: f64 = 1e-10;

impl TableScalar for f64 {
    fn approx_eq(a: f64, b: f64) -> bool {
        (a - b).abs() <= FLOAT_CONTACT_TOL
    }
    fn approx_le(a: f64, b: f64) -> bool {
        a <= b + FLOAT_CONTACT_TOL
    }
    fn from_int(v: i64) -> f64 {
        v as f64
    }
}

impl TableScalar for Rational64 {
    fn approx_eq(a: Self, b: Self) -> bool {
        a == b
    }
    fn approx_le(a: Self, b: Self) -> bool {
        a <= b
    }
    fn from_int(v: i64) -> Self {
        Rational64::from_integer(v)
    }
}

fn ext_eq<T: TableScalar>(a: Extended<T>, b: Extended<T>) -> bool {
    match (a, b) {
        (Extended::Finite(x), Extended::Finite(y)) => T::approx_eq(x, y),
        (Extended::PosInf, Extended::PosInf) | (Extended::NegInf, Extended::NegInf) => true,
        _ => false,
    }
}

fn ext_le<T: TableScalar>(a: Extended<T>, b: Extended<T>) -> bool {
    match (a, b) {
        (Extended::Finite(x), Extended::Finite(y)) => T::approx_le(x, y),
        _ => a <= b,
    }
}

/// Dense `nx x ny` table of extended costs.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteCostTable<T> {
    nx: usize,
    ny: usize,
    data: Vec<Extended<T>>,
}

impl<T: TableScalar> FiniteCostTable<T> {
    pub fn new(nx: usize, ny: usize, data: Vec<Extended<T>>) -> Result<Self> {
        if data.len() != nx * ny {
            return Err(Error::DimensionMismatch { expected: nx * ny, got: data.len() });
        }
        Ok(Self { nx, ny, data })
    }

    pub fn from_rows(rows: Vec<Vec<Extended<T>>>) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ny) {
            return Err(Error::InvalidInput("ragged cost table".into()));
        }
        Self::new(nx, ny, rows.into_iter().flatten().collect())
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn get(&self, x: usize, y: usize) -> Extended<T> {
        self.data[x * self.ny + y]
    }

    /// Swaps the roles of X and Y.
    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.ny {
            for x in 0..self.nx {
                data.push(self.get(x, y));
            }
        }
        Self { nx: self.ny, ny: self.nx, data }
    }
}

impl FiniteCostTable<Rational64> {
    pub fn from_ints(rows: &[Vec<i64>]) -> Result<Self> {
        Self::from_rows(
            rows.iter().map(|r| r.iter().map(|&v| Extended::Finite(Rational64::from_integer(v))).collect()).collect(),
        )
    }
}

/// `phi^c(x) = min_y c(x, y) - phi(y)`, with `(+inf) - (+inf)` and
/// `(-inf) - (-inf)` counted as `+inf`; an empty minimum is `+inf`.
pub fn c_transform<T: TableScalar>(phi: &[Extended<T>], c: &FiniteCostTable<T>) -> Result<Vec<Extended<T>>> {
    if phi.len() != c.ny {
        return Err(Error::DimensionMismatch { expected: c.ny, got: phi.len() });
    }
    Ok((0..c.nx)
        .map(|x| {
            (0..c.ny).fold(Extended::PosInf, |m: Extended<T>, y| {
                m.min_ext(c.get(x, y).sub_ext(phi[y]).resolve(UndefinedRule::ToPosInf))
            })
        })
        .collect())
}

/// Indices `x` with `c(x, y_bar)` finite and `phi^c(x) + phi(y_bar) = c(x, y_bar)`.
pub fn c_subdifferential<T: TableScalar>(
    phi: &[Extended<T>],
    c: &FiniteCostTable<T>,
    y_bar: usize,
) -> Result<Vec<usize>> {
    if y_bar >= c.ny {
        return Err(Error::InvalidInput(format!("y index {y_bar} out of range")));
    }
    let phi_bar = phi.get(y_bar).copied().unwrap_or(Extended::PosInf);
    if !matches!(phi_bar, Extended::Finite(_)) {
        return Ok(Vec::new());
    }
    let phic = c_transform(phi, c)?;
    Ok((0..c.nx)
        .filter(|&x| {
            let cxy = c.get(x, y_bar);
            matches!(cxy, Extended::Finite(_)) && phic[x].add_ext(phi_bar).defined().is_some_and(|v| ext_eq(v, cxy))
        })
        .collect())
}

/// `phi_s = (1-s) phi0 + s phi1` with `(+inf) + (-inf) = -inf`.
pub fn interpolate_potentials<T: TableScalar>(phi0: &[Extended<T>], phi1: &[Extended<T>], s: T) -> Vec<Extended<T>> {
    phi0.iter()
        .zip(phi1)
        .map(|(&a, &b)| a.scale(T::one() - s).add_ext(b.scale(s)).resolve(UndefinedRule::ToNegInf))
        .collect()
}

/// Result of the pointwise contact-set characterization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FkmOutcome {
    /// The chord inequality at `x_tilde` holds for every `y`.
    pub chord_holds: bool,
    /// Every tested pair `(phi0, phi1)` with `x_i` in their contact sets at
    /// `y_bar` has `x_tilde` in the contact set of `phi_s`.
    pub subdiff_implication_holds: bool,
    /// Number of tested pairs satisfying the hypothesis.
    pub pairs_tested: usize,
}

/// Checks the chord statement and the contact-set statement at one point.
///
/// The potential family always contains the canonical pair `phi_i = c(x_i, .)`
/// and `n_random` seeded perturbations of it (shifts, nonnegative bumps
/// vanishing at `y_bar`, and `-inf` entries).
#[allow(clippy::too_many_arguments)]
pub fn fkm_pointwise_check<T: TableScalar>(
    c: &FiniteCostTable<T>,
    x0: usize,
    x1: usize,
    x_tilde: usize,
    y_bar: usize,
    s: T,
    n_random: usize,
    seed: u64,
) -> Result<FkmOutcome> {
    for &x in &[x0, x1, x_tilde] {
        if x >= c.nx {
            return Err(Error::InvalidInput(format!("x index {x} out of range")));
        }
    }
    if y_bar >= c.ny {
        return Err(Error::InvalidInput(format!("y index {y_bar} out of range")));
    }
    let c0 = c.get(x0, y_bar);
    let c1 = c.get(x1, y_bar);
    if !c0.is_finite() || !c1.is_finite() {
        return Err(Error::Precondition("c(x0, y_bar) and c(x1, y_bar) must be finite".into()));
    }

    let ct = c.get(x_tilde, y_bar);
    let chord_holds = ct.is_finite()
        && (0..c.ny).all(|y| {
            let lhs = ct.sub_ext(c.get(x_tilde, y)).resolve(UndefinedRule::ToPosInf);
            let a0 = c0.sub_ext(c.get(x0, y)).resolve(UndefinedRule::ToPosInf);
            let a1 = c1.sub_ext(c.get(x1, y)).resolve(UndefinedRule::ToPosInf);
            let rhs = a0.scale(T::one() - s).add_ext(a1.scale(s)).resolve(UndefinedRule::ToPosInf);
            ext_le(lhs, rhs)
        });

    let canonical = |x: usize| (0..c.ny).map(|y| c.get(x, y)).collect::<Vec<_>>();
    let mut pairs = vec![(canonical(x0), canonical(x1))];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_random {
        let mut perturb = |base: Vec<Extended<T>>| -> Vec<Extended<T>> {
            let shift = T::from_int(rng.random_range(-3..=3));
            base.into_iter()
                .enumerate()
                .map(|(y, v)| {
                    let bump = if y == y_bar {
                        Extended::Finite(T::zero())
                    } else {
                        match rng.random_range(0..6) {
                            0 => Extended::PosInf,
                            k => Extended::Finite(T::from_int(k as i64 - 1)),
                        }
                    };
                    v.sub_ext(bump)
                        .resolve(UndefinedRule::ToNegInf)
                        .add_ext(Extended::Finite(shift))
                        .resolve(UndefinedRule::ToNegInf)
                })
                .collect()
        };
        let p0 = perturb(canonical(x0));
        let p1 = perturb(canonical(x1));
        pairs.push((p0, p1));
    }

    let mut implication = true;
    let mut tested = 0;
    for (p0, p1) in &pairs {
        let in0 = c_subdifferential(p0, c, y_bar)?.contains(&x0);
        let in1 = c_subdifferential(p1, c, y_bar)?.contains(&x1);
        if !(in0 && in1) {
            continue;
        }
        tested += 1;
        let ps = interpolate_potentials(p0, p1, s);
        if !c_subdifferential(&ps, c, y_bar)?.contains(&x_tilde) {
            implication = false;
        }
    }
    Ok(FkmOutcome { chord_holds, subdiff_implication_holds: implication, pairs_tested: tested })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: i64) -> Extended<Rational64> {
        Extended::Finite(Rational64::from_integer(v))
    }

    #[test]
    fn hand_computed_transform() {
        let c = FiniteCostTable::from_ints(&[vec![0, 1], vec![1, 0]]).unwrap();
        let phic = c_transform(&[r(0), r(-1)], &c).unwrap();
        assert_eq!(phic, vec![r(0), r(1)]);
    }

    #[test]
    fn zero_potential_gives_row_minimum() {
        let c = FiniteCostTable::from_ints(&[vec![3, 1, 2], vec![5, 4, 6]]).unwrap();
        assert_eq!(c_transform(&[r(0), r(0), r(0)], &c).unwrap(), vec![r(1), r(4)]);
    }

    #[test]
    fn infinite_potential_gives_infinite_transform() {
        let c = FiniteCostTable::from_ints(&[vec![3, 1], vec![5, 4]]).unwrap();
        let phic = c_transform(&[Extended::NegInf, Extended::NegInf], &c).unwrap();
        assert_eq!(phic, vec![Extended::PosInf, Extended::PosInf]);
        // Finite cost minus +inf is -inf, a defined value.
        let phic = c_transform(&[Extended::PosInf, Extended::PosInf], &c).unwrap();
        assert_eq!(phic, vec![Extended::NegInf, Extended::NegInf]);
        // (+inf) - (+inf) resolves to +inf inside the minimum.
        let inf = FiniteCostTable::<Rational64>::new(2, 2, vec![Extended::PosInf; 4]).unwrap();
        let phic = c_transform(&[Extended::PosInf, Extended::PosInf], &inf).unwrap();
        assert_eq!(phic, vec![Extended::PosInf, Extended::PosInf]);
    }

    #[test]
    fn empty_subdifferential_at_infinite_potential() {
        let c = FiniteCostTable::from_ints(&[vec![0, 1], vec![1, 0]]).unwrap();
        assert!(c_subdifferential(&[Extended::PosInf, r(0)], &c, 0).unwrap().is_empty());
        assert!(c_subdifferential(&[Extended::NegInf, r(0)], &c, 0).unwrap().is_empty());
    }

    #[test]
    fn canonical_potential_contains_its_point() {
        let c = FiniteCostTable::from_ints(&[vec![2, 7, 1], vec![4, 0, 3], vec![5, 5, 5]]).unwrap();
        for x in 0..3 {
            let phi: Vec<_> = (0..3).map(|y| c.get(x, y)).collect();
            for y in 0..3 {
                assert!(c_subdifferential(&phi, &c, y).unwrap().contains(&x));
            }
        }
    }

    #[test]
    fn endpoint_tilde_passes_both() {
        let c = FiniteCostTable::from_ints(&[vec![0, 3], vec![2, 1]]).unwrap();
        let out = fkm_pointwise_check(&c, 0, 1, 0, 0, Rational64::new(1, 3), 20, 1).unwrap();
        assert!(out.chord_holds && out.subdiff_implication_holds);
    }

    #[test]
    fn phi_s_uses_negative_infinity_rule() {
        let out = interpolate_potentials(&[Extended::PosInf], &[Extended::NegInf], Rational64::new(1, 2));
        assert_eq!(out, vec![Extended::NegInf]);
    }
}
