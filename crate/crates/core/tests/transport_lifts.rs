use crosscurve::families::{anisotropic_quartic_family, hilbert_family, monge_family, sphere_family, Family};
use crosscurve::geometry::verify::structured_probes;
use crosscurve::sampling::rng;
use crosscurve::transport::{
    random_measure, random_measure_with, wasserstein_nncc_check, DiscreteMeasure, Lift, WassersteinCost,
};
use crosscurve::{nncc_check, uniform_grid, VerifierConfig};

fn family_measure(fam: &Family, n: usize, seed: u64) -> DiscreteMeasure {
    let mut r = rng(seed);
    random_measure_with(&mut r, n, |r| fam.sample(r))
}

#[test]
fn hilbert_lifts_pass() {
    let fam = hilbert_family(2).unwrap();
    let mut cfg = VerifierConfig::default().with_tol(1e-8);
    cfg.samples.count = 50;
    for seed in 0..3 {
        let mu0 = random_measure(5, 2, -2.0, 2.0, 10 * seed).unwrap();
        let mu1 = random_measure(5, 2, -2.0, 2.0, 10 * seed + 1).unwrap();
        let nu = random_measure(5, 2, -2.0, 2.0, 10 * seed + 2).unwrap();
        let rep = wasserstein_nncc_check(&mu0, &mu1, &nu, &fam, &cfg.clone().with_seed(seed)).unwrap();
        assert!(rep.passed, "{rep:?}");
    }
}

#[test]
fn sphere_lifts_pass() {
    let fam = sphere_family(2).unwrap();
    let mut cfg = VerifierConfig::default().with_tol(1e-6).with_grid(17);
    cfg.samples.count = 30;
    for seed in 0..3 {
        let (mu0, mu1, nu) = (
            family_measure(&fam, 4, 3 * seed),
            family_measure(&fam, 4, 3 * seed + 1),
            family_measure(&fam, 4, 3 * seed + 2),
        );
        let rep = wasserstein_nncc_check(&mu0, &mu1, &nu, &fam, &cfg).unwrap();
        assert!(rep.passed, "{rep:?}");
    }
}

#[test]
fn monge_lifts_pass() {
    let fam = monge_family(2).unwrap();
    let mut cfg = VerifierConfig::default().with_tol(1e-9).with_grid(17);
    cfg.samples.count = 30;
    let (mu0, mu1, nu) = (family_measure(&fam, 4, 7), family_measure(&fam, 4, 8), family_measure(&fam, 3, 9));
    let rep = wasserstein_nncc_check(&mu0, &mu1, &nu, &fam, &cfg).unwrap();
    assert!(rep.passed, "{rep:?}");
}

#[test]
fn lifted_plans_are_optimal() {
    for fam in [hilbert_family(2).unwrap(), sphere_family(2).unwrap()] {
        for seed in 0..5 {
            let (mu0, mu1, nu) = (
                family_measure(&fam, 4, 3 * seed),
                family_measure(&fam, 5, 3 * seed + 1),
                family_measure(&fam, 3, 3 * seed + 2),
            );
            let lift = Lift::new(&mu0, &mu1, &nu, &fam).unwrap();
            for s in uniform_grid(11) {
                assert!(lift.optimality_gap(s).unwrap().abs() <= 1e-8);
            }
        }
    }
}

#[test]
fn dirac_lifts_inherit_base_violations() {
    let fam = anisotropic_quartic_family();
    let cfg = VerifierConfig::default().with_grid(17);
    let mut r = rng(5);
    // Brute-force search for a base violation of the straight segments.
    let witness = (0..200)
        .find_map(|_| {
            let (x0, x1, yb) = (fam.sample(&mut r), fam.sample(&mut r), fam.sample(&mut r));
            let seg = fam.segment(&x0, &x1, &yb).unwrap();
            let ys: Vec<Vec<f64>> = (0..20).map(|_| fam.sample(&mut r)).collect();
            let rep = nncc_check(&seg, &fam.cost, &ys, &cfg).unwrap();
            (!rep.passed).then(|| (x0, x1, yb, rep.witness.unwrap().y))
        })
        .expect("the quartic control has violations");
    let (x0, x1, yb, y) = witness;
    let lift =
        Lift::new(&DiscreteMeasure::dirac(x0), &DiscreteMeasure::dirac(x1), &DiscreteMeasure::dirac(yb), &fam).unwrap();
    let seg = lift.segment();
    let mut sigmas = vec![DiscreteMeasure::dirac(y)];
    sigmas.extend(structured_probes(&seg, &cfg).unwrap());
    let rep = nncc_check(&seg, &WassersteinCost::new(fam.cost.clone()), &sigmas, &cfg).unwrap();
    assert!(!rep.passed);
}

#[test]
fn reports_are_deterministic() {
    let fam = hilbert_family(2).unwrap();
    let mut cfg = VerifierConfig::default().with_grid(9);
    cfg.samples.count = 10;
    let run = || {
        let mu0 = random_measure(4, 2, -1.0, 1.0, 1).unwrap();
        let mu1 = random_measure(4, 2, -1.0, 1.0, 2).unwrap();
        let nu = random_measure(4, 2, -1.0, 1.0, 3).unwrap();
        crosscurve::to_json(&wasserstein_nncc_check(&mu0, &mu1, &nu, &fam, &cfg).unwrap()).unwrap()
    };
    assert_eq!(run(), run());
}
