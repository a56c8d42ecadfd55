use std::f64::consts::PI;

use crosscurve::families::monge::FiniteMetric;
use crosscurve::families::{
    bregman_family, hilbert_family, monge_family, semi_geostrophic_family, sphere_family, BregmanMode, Family,
    PotentialKind,
};
use crosscurve::geometry::finite::{c_transform, fkm_pointwise_check, FiniteCostTable};
use crosscurve::gw_uot::{cone_cost, gh_distance, gw_cost, gw_solve_tiny, Entropy, GaugedSpace};
use crosscurve::measure::{bhattacharyya, bw_distance_sq, fisher_rao, hellinger_sq, ProbVector, Psd};
use crosscurve::mtw::{mtw_tensor, sphere_chart_cost};
use crosscurve::sampling::rng;
use crosscurve::transport::{glue, ot_solve, CostMatrix, Coupling};
use crosscurve::{lmp_check, nncc_check, ExtRational, ExtReal, Extended, VerifierConfig};
use nalgebra::DMatrix;
use num_rational::Rational64;
use proptest::prelude::*;

fn ext_real() -> impl Strategy<Value = ExtReal> {
    prop_oneof![
        1 => Just(ExtReal::NEG_INF),
        1 => Just(ExtReal::POS_INF),
        4 => (-1e6..1e6f64).prop_map(ExtReal::finite),
    ]
}

fn prob(n: usize) -> impl Strategy<Value = ProbVector> {
    prop::collection::vec(0.01..1.0f64, n).prop_map(|w| ProbVector::normalized(w).unwrap())
}

fn int_table(nx: usize, ny: usize) -> impl Strategy<Value = FiniteCostTable<Rational64>> {
    prop::collection::vec(-5i64..6, nx * ny).prop_map(move |v| {
        let rows: Vec<Vec<i64>> = v.chunks(ny).map(<[i64]>::to_vec).collect();
        FiniteCostTable::from_ints(&rows).unwrap()
    })
}

fn rat(v: i64) -> ExtRational {
    Extended::Finite(Rational64::from_integer(v))
}

fn families() -> Vec<Family> {
    vec![
        hilbert_family(2).unwrap(),
        bregman_family(2, PotentialKind::Entropy, BregmanMode::Forward).unwrap(),
        bregman_family(2, PotentialKind::Quartic, BregmanMode::Reverse).unwrap(),
        semi_geostrophic_family(2, 1.5).unwrap(),
        monge_family(2).unwrap(),
        sphere_family(2).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ext_addition_follows_ordered_set_rules(a in ext_real(), b in ext_real()) {
        let sum = a.add_ext(b);
        prop_assert_eq!(sum, b.add_ext(a));
        match (a, b) {
            (Extended::PosInf, Extended::NegInf) | (Extended::NegInf, Extended::PosInf) => prop_assert!(sum.is_undefined()),
            (Extended::PosInf, _) | (_, Extended::PosInf) => prop_assert_eq!(sum.defined(), Some(ExtReal::POS_INF)),
            (Extended::NegInf, _) | (_, Extended::NegInf) => prop_assert_eq!(sum.defined(), Some(ExtReal::NEG_INF)),
            (Extended::Finite(x), Extended::Finite(y)) => prop_assert_eq!(sum.defined(), Some(ExtReal::finite(x + y))),
        }
        prop_assert_eq!(a.sub_ext(b), a.add_ext(b.negate()));
    }

    #[test]
    fn ext_order_is_total(a in ext_real(), b in ext_real()) {
        prop_assert!(ExtReal::NEG_INF <= a && a <= ExtReal::POS_INF);
        let (hi, lo) = (a.max_ext(b), a.min_ext(b));
        prop_assert!(lo <= hi);
        prop_assert!(hi == a || hi == b);
        prop_assert_eq!(a.scale(0.0), ExtReal::ZERO);
    }

    #[test]
    fn c_transform_reverses_order(c in int_table(3, 4), phi in prop::collection::vec(-4i64..5, 4), bump in prop::collection::vec(0i64..3, 4)) {
        let lo: Vec<ExtRational> = phi.iter().map(|&v| rat(v)).collect();
        let hi: Vec<ExtRational> = phi.iter().zip(&bump).map(|(&v, &b)| rat(v + b)).collect();
        let (tl, th) = (c_transform(&lo, &c).unwrap(), c_transform(&hi, &c).unwrap());
        for (a, b) in tl.iter().zip(&th) {
            prop_assert!(a >= b);
        }
    }

    #[test]
    fn triple_transform_is_single_transform(c in int_table(4, 3), phi in prop::collection::vec(-4i64..5, 3)) {
        let phi: Vec<ExtRational> = phi.into_iter().map(rat).collect();
        let ct = c.transpose();
        let once = c_transform(&phi, &c).unwrap();
        let twice = c_transform(&once, &ct).unwrap();
        let thrice = c_transform(&twice, &c).unwrap();
        prop_assert_eq!(once, thrice);
    }

    #[test]
    fn fkm_booleans_agree(c in int_table(4, 4), x0 in 0usize..4, x1 in 0usize..4, xt in 0usize..4, yb in 0usize..4, num in 0i64..=4, seed in 0u64..1000) {
        let s = Rational64::new(num, 4);
        let out = fkm_pointwise_check(&c, x0, x1, xt, yb, s, 10, seed).unwrap();
        prop_assert_eq!(out.chord_holds, out.subdiff_implication_holds);
    }

    #[test]
    fn hellinger_and_fisher_rao_agree(mu in prob(6), nu in prob(6)) {
        let h2 = hellinger_sq(&mu, &nu).unwrap();
        let bc = bhattacharyya(&mu, &nu).unwrap();
        prop_assert!((h2 - (2.0 - 2.0 * bc)).abs() < 1e-12);
        let fr = fisher_rao(&mu, &nu).unwrap();
        prop_assert!((fr - (1.0 - h2 / 2.0).clamp(-1.0, 1.0).acos()).abs() < 1e-12 || fr < 1e-6);
    }

    #[test]
    fn bw_is_symmetric(a in prop::collection::vec(-1.0..1.0f64, 9), b in prop::collection::vec(-1.0..1.0f64, 6)) {
        let s1 = Psd::gram(&DMatrix::from_row_slice(3, 3, &a));
        let s2 = Psd::gram(&DMatrix::from_row_slice(3, 2, &b));
        let d12 = bw_distance_sq(&s1, &s2).unwrap();
        let d21 = bw_distance_sq(&s2, &s1).unwrap();
        prop_assert!((d12 - d21).abs() < 1e-9);
        prop_assert!(bw_distance_sq(&s1, &s1).unwrap() < 1e-9);
    }

    #[test]
    fn ot_duality_and_glue_projections(
        c0 in prop::collection::vec(0.0..5.0f64, 9),
        c1 in prop::collection::vec(0.0..5.0f64, 6),
        a in prob(3), a1 in prob(2), b in prob(3),
    ) {
        let m0 = CostMatrix::from_real(&c0.chunks(3).map(<[f64]>::to_vec).collect::<Vec<_>>()).unwrap();
        let m1 = CostMatrix::from_real(&c1.chunks(3).map(<[f64]>::to_vec).collect::<Vec<_>>()).unwrap();
        let s0 = ot_solve(&m0, a.weights(), b.weights()).unwrap();
        let s1 = ot_solve(&m1, a1.weights(), b.weights()).unwrap();
        prop_assert!((s0.value - s0.dual_objective(a.weights(), b.weights())).abs() < 1e-9);
        prop_assert!(s0.min_reduced_cost(&m0) >= -1e-10);
        let g = glue(&s0.plan, &s1.plan).unwrap();
        prop_assert!((g.total_mass() - 1.0).abs() < 1e-12);
        let (p0, p1) = (g.proj_first(), g.proj_second());
        for i in 0..3 {
            for k in 0..3 {
                prop_assert!((p0.get(i, k) - s0.plan.get(i, k)).abs() < 1e-12);
            }
        }
        for j in 0..2 {
            for k in 0..3 {
                prop_assert!((p1.get(j, k) - s1.plan.get(j, k)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cone_cost_homogeneous(c in -0.5..3.0f64, r in 0.0..2.0f64, s in 0.0..2.0f64, lam in 0.1..10.0f64) {
        for (f0, f1) in [(Entropy::Kl, Entropy::Kl), (Entropy::Tv, Entropy::Kl)] {
            let v = cone_cost(f0, f1, c, r, s).unwrap();
            let w = cone_cost(f0, f1, c, lam * r, lam * s).unwrap();
            prop_assert!((w - lam * v).abs() <= 1e-10 * (1.0 + w.abs()));
        }
    }

    #[test]
    fn gh_symmetric(seed in 0u64..10_000, n in 1usize..=4, m in 1usize..=4) {
        let mut r = rng(seed);
        let x = FiniteMetric::random(&mut r, n, 0.1, 2.0);
        let y = FiniteMetric::random(&mut r, m, 0.1, 2.0);
        prop_assert_eq!(gh_distance(&x, &y).unwrap(), gh_distance(&y, &x).unwrap());
    }

    #[test]
    fn segments_return_endpoints_bit_exactly(seed in 0u64..10_000) {
        let mut r = rng(seed);
        for fam in families() {
            let (x0, x1, y) = (fam.sample(&mut r), fam.sample(&mut r), fam.sample(&mut r));
            if let Ok(seg) = fam.segment(&x0, &x1, &y) {
                prop_assert_eq!(seg.at(0.0).unwrap(), x0.clone());
                prop_assert_eq!(seg.at(1.0).unwrap(), x1.clone());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mtw_even_and_quartic(seed in 0u64..10_000, a in 0.5..2.0f64, b in 0.5..2.0f64) {
        let c = sphere_chart_cost(2, 0.5);
        let mut r = rng(seed);
        use rand::Rng;
        let x: Vec<f64> = (0..2).map(|_| r.random_range(-0.6..0.6)).collect();
        let y: Vec<f64> = (0..2).map(|_| r.random_range(-0.6..0.6)).collect();
        let xi: Vec<f64> = (0..2).map(|_| r.random_range(-1.0..1.0)).collect();
        let eta: Vec<f64> = (0..2).map(|_| r.random_range(-1.0..1.0)).collect();
        let base = mtw_tensor(&c, &x, &y, &xi, &eta).unwrap().s;
        let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
        let flipped = mtw_tensor(&c, &x, &y, &neg, &eta).unwrap().s;
        // Finite differences along -xi use a mirrored stencil, so agreement is up to truncation error.
        prop_assert!((base - flipped).abs() <= 1e-4 * (1.0 + base.abs()), "{} {}", base, flipped);
        let xs: Vec<f64> = xi.iter().map(|v| a * v).collect();
        let es: Vec<f64> = eta.iter().map(|v| b * v).collect();
        let scaled = mtw_tensor(&c, &x, &y, &xs, &es).unwrap().s;
        prop_assert!((scaled - a * a * b * b * base).abs() <= 1e-4 * (1.0 + scaled.abs()));
    }

    #[test]
    fn lmp_gap_dominated_by_nncc_gap(seed in 0u64..10_000) {
        let mut cfg = VerifierConfig::default().with_seed(seed).with_grid(17);
        cfg.samples.count = 16;
        let mut r = rng(seed);
        for fam in [sphere_family(2).unwrap(), hilbert_family(2).unwrap()] {
            let (x0, x1, y) = (fam.sample(&mut r), fam.sample(&mut r), fam.sample(&mut r));
            let Ok(seg) = fam.segment(&x0, &x1, &y) else { continue };
            let ys: Vec<Vec<f64>> = (0..16).map(|_| fam.sample(&mut r)).collect();
            let n = nncc_check(&seg, &fam.cost, &ys, &cfg).unwrap();
            let l = lmp_check(&seg, &fam.cost, &ys, &cfg).unwrap();
            prop_assert!(l.max_gap <= n.max_gap + cfg.tol);
        }
    }

    #[test]
    fn monge_interior_is_constant(seed in 0u64..10_000) {
        let fam = monge_family(3).unwrap();
        let mut r = rng(seed);
        let (x0, x1, y) = (fam.sample(&mut r), fam.sample(&mut r), fam.sample(&mut r));
        let seg = fam.segment(&x0, &x1, &y).unwrap();
        let mid = seg.at(0.5).unwrap();
        for s in [0.01, 0.3, 0.99] {
            prop_assert_eq!(seg.at(s).unwrap(), mid.clone());
        }
    }

    #[test]
    fn gw_value_below_feasible_plans(seed in 0u64..10_000, w in prob(3), t in 0.0..1.0f64) {
        let mut r = rng(seed);
        let x = GaugedSpace::random_two_point(&mut r, 0.0, 2.0);
        let y = GaugedSpace::new(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.5], vec![2.0, 1.5, 0.0]], w).unwrap();
        let best = gw_solve_tiny(&x, &y).unwrap().value;
        let (a, b) = (x.weights(), y.weights());
        // Mix the product plan with the northwest-corner plan.
        let prod: Vec<f64> = (0..6).map(|k| a[k / 3] * b[k % 3]).collect();
        let nw = northwest(a, b);
        let plan: Vec<f64> = prod.iter().zip(&nw).map(|(p, q)| (1.0 - t) * p + t * q).collect();
        let cost = gw_cost(&Coupling::new(2, 3, plan).unwrap(), &x, &y).unwrap();
        prop_assert!(cost >= best - 1e-12);
    }
}

fn northwest(a: &[f64], b: &[f64]) -> Vec<f64> {
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    let m = b.len();
    let mut out = vec![0.0; a.len() * m];
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < m {
        let x = a[i].min(b[j]);
        out[i * m + j] = x;
        a[i] -= x;
        b[j] -= x;
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

#[test]
fn fisher_rao_capped() {
    let a = ProbVector::new(vec![1.0, 0.0]).unwrap();
    let b = ProbVector::new(vec![0.0, 1.0]).unwrap();
    assert!((fisher_rao(&a, &b).unwrap() - PI / 2.0).abs() < 1e-15);
}
