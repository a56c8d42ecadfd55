use std::path::{Path, PathBuf};

use clap::ValueEnum;
use crosscurve::families::log_distance::log_distance_smooth;
use crosscurve::families::monge::FiniteMetric;
use crosscurve::families::{
    hyperbolic_diameter_geodesic, linear_segment, poincare_d2, sphere_geodesic, Family, FamilySpec,
};
use crosscurve::geometry::verify::structured_probes;
use crosscurve::gw_uot::{gh_distance, gw_nncc_check, gw_solve_tiny, GaugedSpace, GwSolution, GwVerdict};
use crosscurve::mtw::{nncc_scan, sphere_chart_cost, ScanRegion, SmoothCost};
use crosscurve::sampling::{box_point, rng, SeededRng};
use crosscurve::transport::{counterexample_lmp, random_measure_with, wasserstein_nncc_check_with, GlueRule, Lift};
use crosscurve::{
    conv_check, lmp_check, nncc_check, one_convexity_check, pc_check, to_json, uniform_grid, Cost, RealVector, Result,
    SegmentPath, VerifierConfig, ViolationReport,
};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    Check, CounterexampleArgs, FamilyArgs, GhArgs, Glue, GwArgs, LiftArgs, MtwArgs, MtwCostName, VerifyArgs,
};
use crate::fail::Failure;
use crate::output::{read_json, write_csv};

const SCHEMA: u32 = 1;

/// Shared run settings after config merging.
pub struct Run {
    pub seed: u64,
    pub force: bool,
}

/// A finished command: its JSON report and whether it met its success condition.
pub struct Finished {
    pub json: String,
    pub ok: bool,
    pub summary: String,
}

fn value_name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

fn family_spec(a: &FamilyArgs) -> std::result::Result<FamilySpec, Failure> {
    let name = a.family.as_deref().ok_or_else(|| Failure::Usage("--family is required".into()))?;
    let mut obj = serde_json::Map::new();
    obj.insert("family".into(), name.into());
    let dim = a.dim.unwrap_or(2);
    match name {
        "sphere" => {
            obj.insert("n".into(), dim.into());
        }
        "anisotropic_quartic" => {}
        _ => {
            obj.insert("dim".into(), dim.into());
        }
    }
    if name == "bregman" {
        obj.insert("potential".into(), a.potential.as_deref().unwrap_or("quadratic").into());
        obj.insert("mode".into(), a.mode.as_deref().unwrap_or("forward").into());
    }
    if name == "semi_geostrophic" {
        obj.insert("g".into(), a.g.unwrap_or(1.0).into());
    }
    if name == "soft_threshold" {
        obj.insert("eps".into(), a.eps.unwrap_or(0.5).into());
    }
    serde_json::from_value(serde_json::Value::Object(obj)).map_err(|e| Failure::Usage(format!("family `{name}`: {e}")))
}

fn build_family(a: &FamilyArgs) -> std::result::Result<Family, Failure> {
    family_spec(a)?.build().map_err(|e| Failure::Usage(e.to_string()))
}

#[derive(Serialize)]
struct VerifyReport {
    schema: u32,
    command: &'static str,
    check: String,
    family: String,
    seed: u64,
    trials: usize,
    skipped: usize,
    failed: usize,
    passed: bool,
    expect_fail: bool,
    max_gap: f64,
    first_skip_reason: Option<String>,
    worst: Option<ViolationReport>,
}

fn disk_point(r: &mut SeededRng) -> RealVector {
    loop {
        let p = box_point(r, 2, -0.9, 0.9);
        if p[0] * p[0] + p[1] * p[1] < 0.81 {
            return p;
        }
    }
}

fn verify_trial(
    check: Check,
    family: Option<&Family>,
    cfg: &VerifierConfig,
    r: &mut SeededRng,
) -> Result<ViolationReport> {
    let Some(fam) = family else {
        // Hyperbolic plane, only reachable for the pc check.
        let geo = hyperbolic_diameter_geodesic(
            r.random_range(0.0..std::f64::consts::PI),
            r.random_range(-2.0..0.0),
            r.random_range(0.5..2.5),
        );
        let ys: Vec<RealVector> = (0..cfg.samples.count).map(|_| disk_point(r)).collect();
        return pc_check(&geo, &poincare_d2(), &ys, cfg);
    };
    let (x0, x1, yb) = (fam.sample(r), fam.sample(r), fam.sample(r));
    let mut ys: Vec<RealVector> = (0..cfg.samples.count).map(|_| fam.sample(r)).collect();
    match check {
        Check::Pc => {
            let geo: SegmentPath<RealVector> =
                if fam.name == "sphere" { sphere_geodesic(&x0, &x1)? } else { linear_segment(&x0, &x1, &x0) };
            pc_check(&geo, &fam.cost, &ys, cfg)
        }
        Check::OneConvex => one_convexity_check(&fam.segment(&x0, &x1, &yb)?, &fam.cost, cfg),
        Check::Nncc | Check::Lmp | Check::Conv => {
            let seg = fam.segment(&x0, &x1, &yb)?;
            // Probes sit on the segment itself, where a singular cost is undefined.
            if fam.cost.eval(&x0, &x0).is_ok_and(|v| v.is_finite()) {
                ys.extend(structured_probes(&seg, cfg)?);
            }
            match check {
                Check::Nncc => nncc_check(&seg, &fam.cost, &ys, cfg),
                Check::Lmp => lmp_check(&seg, &fam.cost, &ys, cfg),
                _ => conv_check(&seg, &fam.cost, &ys, cfg),
            }
        }
    }
}

pub fn verify(a: &VerifyArgs, run: &Run) -> std::result::Result<Finished, Failure> {
    let check = a.check.ok_or_else(|| Failure::Usage("--check is required".into()))?;
    let name = a.family.family.clone().ok_or_else(|| Failure::Usage("--family is required".into()))?;
    let family = if name == "hyperbolic" {
        if check != Check::Pc {
            return Err(Failure::Usage("the hyperbolic fixture only supports --check pc".into()));
        }
        None
    } else {
        if matches!(check, Check::Pc | Check::OneConvex) && !matches!(name.as_str(), "hilbert" | "sphere") {
            return Err(Failure::Usage(format!(
                "--check {} needs a squared-distance family (hilbert or sphere)",
                value_name(check)
            )));
        }
        Some(build_family(&a.family)?)
    };
    let trials = a.trials.unwrap_or(100);
    let mut cfg =
        VerifierConfig::default().with_grid(a.grid.unwrap_or(33)).with_tol(a.tol.unwrap_or(1e-9)).with_seed(run.seed);
    cfg.samples.count = a.samples.unwrap_or(64);
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    let outcomes: Vec<Result<ViolationReport>> = (0..trials)
        .into_par_iter()
        .map(|k| verify_trial(check, family.as_ref(), &cfg, &mut rng(run.seed.wrapping_add(k as u64))))
        .collect();

    let mut skipped = 0;
    let mut first_skip_reason = None;
    let mut worst: Option<ViolationReport> = None;
    let mut failed = 0;
    for outcome in outcomes {
        match outcome {
            Ok(rep) => {
                failed += usize::from(!rep.passed);
                if worst.as_ref().is_none_or(|w| rep.max_gap > w.max_gap) {
                    worst = Some(rep);
                }
            }
            Err(e) => {
                skipped += 1;
                first_skip_reason.get_or_insert(e.to_string());
            }
        }
    }
    let evaluated = trials - skipped;
    let passed = evaluated > 0 && failed == 0;
    let ok = evaluated > 0 && if a.expect_fail { failed > 0 } else { passed };
    let max_gap = worst.as_ref().map_or(0.0, |w| w.max_gap);
    let report = VerifyReport {
        schema: SCHEMA,
        command: "verify",
        check: value_name(check),
        family: name.clone(),
        seed: run.seed,
        trials,
        skipped,
        failed,
        passed,
        expect_fail: a.expect_fail,
        max_gap,
        first_skip_reason,
        worst,
    };
    let summary = format!(
        "{} on {name}: {failed} of {evaluated} trials violated (max gap {max_gap:.3e}, {skipped} skipped){}",
        value_name(check),
        if a.expect_fail { ", violation expected" } else { "" }
    );
    Ok(Finished { json: to_json(&report)?, ok, summary })
}

#[derive(Serialize)]
struct CounterexampleReport<'a> {
    schema: u32,
    command: &'static str,
    confirmed: bool,
    csv: Vec<String>,
    result: &'a crosscurve::transport::Counterexample,
}

pub fn counterexample(a: &CounterexampleArgs, run: &Run) -> std::result::Result<Finished, Failure> {
    let n_s = a.n_s.unwrap_or(101);
    if n_s < 3 {
        return Err(Failure::Usage("--n-s must be at least 3".into()));
    }
    let ce = counterexample_lmp(n_s)?;
    let dir = a.csv_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    if !dir.is_dir() {
        return Err(Failure::Io(format!("{} is not a directory", dir.display())));
    }
    let curve = |f: &[f64]| -> Vec<Vec<f64>> { ce.s.iter().zip(f).map(|(s, v)| vec![*s, *v]).collect() };
    let mut glues = Vec::new();
    for t in uniform_grid(11) {
        for (k, s) in ce.s.iter().enumerate() {
            glues.push(vec![t, *s, (1.0 - t) * ce.f1[k] + t * ce.f2[k]]);
        }
    }
    let files = [
        ("mu1.csv", curve(&ce.f1), &["s", "f"][..]),
        ("mu2.csv", curve(&ce.f2), &["s", "f"][..]),
        ("glues.csv", glues, &["t", "s", "f"][..]),
    ];
    let mut written = Vec::new();
    for (file, rows, header) in &files {
        let path = dir.join(file);
        write_csv(&path, run.force, header, rows)?;
        written.push(path.display().to_string());
    }
    let ends = [ce.f1[0], ce.f1[n_s - 1], ce.f2[0], ce.f2[n_s - 1]].iter().map(|v| v.abs()).fold(0.0, f64::max);
    let confirmed = ends <= 1e-12 && ce.min_over_glues > 0.0;
    let summary = format!(
        "endpoint gaps <= {ends:.1e}; min over glues of max interior gap {:.6e}{}",
        ce.min_over_glues,
        if confirmed { ": no glue satisfies the maximum principle" } else { "" }
    );
    let report =
        CounterexampleReport { schema: SCHEMA, command: "counterexample", confirmed, csv: written, result: &ce };
    Ok(Finished { json: to_json(&report)?, ok: confirmed, summary })
}

fn hilbert_smooth(dim: usize) -> SmoothCost {
    SmoothCost::new("hilbert", dim, dim, |x, y| x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum(), |_, _| true)
}

pub fn mtw(a: &MtwArgs, run: &Run) -> std::result::Result<Finished, Failure> {
    let cost = a.cost.ok_or_else(|| Failure::Usage("--cost is required".into()))?;
    let dim = a.dim.unwrap_or(2);
    if dim == 0 {
        return Err(Failure::Usage("--dim must be positive".into()));
    }
    let (c, region) = match cost {
        MtwCostName::Hilbert => (hilbert_smooth(dim), ScanRegion::separated_box(dim, -2.0, 2.0, 0.5, 3.0)),
        MtwCostName::Sphere => (sphere_chart_cost(dim, 0.3), ScanRegion::sphere_chart(dim, 1.5, 2.6)),
        MtwCostName::LogDistance => {
            (log_distance_smooth(dim, 1e-3), ScanRegion::separated_box(dim, -2.0, 2.0, 1.0, 2.0))
        }
    };
    let scan = nncc_scan(&c, &region, a.samples.unwrap_or(500), run.seed)?;
    let summary = format!(
        "{}: {} (min S {:.3e}, min S on orthogonal pairs {:.3e})",
        value_name(cost),
        value_name_classification(&scan),
        scan.min_s,
        scan.min_s_orthogonal
    );
    Ok(Finished { json: to_json(&scan)?, ok: true, summary })
}

fn value_name_classification(scan: &crosscurve::mtw::ScanSummary) -> String {
    to_json(&scan.classification).map(|s| s.trim_matches('"').to_string()).unwrap_or_default()
}

#[derive(Serialize)]
struct LiftAttempt {
    glue: String,
    optimality_gap: f64,
    report: ViolationReport,
}

#[derive(Serialize)]
struct LiftReport {
    schema: u32,
    command: &'static str,
    base: String,
    seed: u64,
    atoms: usize,
    passed: bool,
    attempts: Vec<LiftAttempt>,
}

fn rule(g: Glue) -> GlueRule {
    match g {
        Glue::Independent => GlueRule::Independent,
        Glue::Northwest => GlueRule::Northwest,
    }
}

pub fn lift(a: &LiftArgs, run: &Run) -> std::result::Result<Finished, Failure> {
    let base = a.base.clone().ok_or_else(|| Failure::Usage("--base is required".into()))?;
    let fam = build_family(&FamilyArgs { family: Some(base.clone()), dim: a.dim, ..FamilyArgs::default() })?;
    let atoms = a.atoms.unwrap_or(5);
    if atoms == 0 {
        return Err(Failure::Usage("--atoms must be positive".into()));
    }
    let tol = a.tol.unwrap_or(if base == "sphere" { 1e-6 } else { 1e-8 });
    let mut cfg = VerifierConfig::default().with_grid(a.grid.unwrap_or(33)).with_tol(tol).with_seed(run.seed);
    cfg.samples.count = a.sigmas.unwrap_or(50);
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    let mut r = rng(run.seed);
    let [mu0, mu1, nu] = [0; 3].map(|_| random_measure_with(&mut r, atoms, |r| fam.sample(r)));
    let chosen = a.glue.unwrap_or(Glue::Independent);
    let mut rules = vec![chosen];
    if a.glue_search {
        rules.extend([Glue::Independent, Glue::Northwest].into_iter().filter(|g| *g != chosen));
    }
    let mut attempts = Vec::new();
    for g in rules {
        let lift = Lift::with_rule(&mu0, &mu1, &nu, &fam, rule(g))?;
        let mut gap = 0.0_f64;
        for &s in &cfg.s_grid {
            gap = gap.max(lift.optimality_gap(s)?.abs());
        }
        let report = wasserstein_nncc_check_with(&mu0, &mu1, &nu, &fam, &cfg, rule(g))?;
        let done = report.passed && gap <= 1e-8;
        attempts.push(LiftAttempt { glue: value_name(g), optimality_gap: gap, report });
        if done {
            break;
        }
    }
    let passed = attempts.iter().any(|t| t.report.passed && t.optimality_gap <= 1e-8);
    let last = attempts.last().expect("at least one glue rule is tried");
    let summary = format!(
        "{base} lift with {} glue: max gap {:.3e}, plan optimality {:.1e}",
        last.glue, last.report.max_gap, last.optimality_gap
    );
    let report = LiftReport { schema: SCHEMA, command: "lift", base, seed: run.seed, atoms, passed, attempts };
    Ok(Finished { json: to_json(&report)?, ok: passed, summary })
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> std::result::Result<&'a Path, Failure> {
    p.as_deref().ok_or_else(|| Failure::Usage(format!("--{flag} is required")))
}

#[derive(Serialize)]
struct GwSolveReport<'a> {
    schema: u32,
    command: &'static str,
    solution: &'a GwSolution,
}

#[derive(Serialize)]
struct GwCheckReport<'a> {
    schema: u32,
    command: &'static str,
    seed: u64,
    tests: usize,
    #[serde(flatten)]
    verdict: &'a GwVerdict,
}

pub fn gw(a: &GwArgs, run: &Run) -> std::result::Result<Finished, Failure> {
    let x: GaugedSpace = read_json(required(&a.x, "x")?)?;
    let y: GaugedSpace = read_json(required(&a.y, "y")?)?;
    let Some(x1_path) = &a.x1 else {
        let sol = gw_solve_tiny(&x, &y)?;
        let summary = format!(
            "GW^2 = {:.12e} (grid value {:.6e}, stationarity {:.1e})",
            sol.value, sol.grid_value, sol.stationarity
        );
        let json = to_json(&GwSolveReport { schema: SCHEMA, command: "gw", solution: &sol })?;
        return Ok(Finished { json, ok: true, summary });
    };
    let x1: GaugedSpace = read_json(x1_path)?;
    let tests = a.tests.unwrap_or(50);
    let mut r = rng(run.seed);
    let zs: Vec<GaugedSpace> = (0..tests).map(|_| GaugedSpace::random_two_point(&mut r, 0.0, 3.0)).collect();
    let mut cfg =
        VerifierConfig::default().with_grid(a.grid.unwrap_or(17)).with_tol(a.tol.unwrap_or(1e-6)).with_seed(run.seed);
    cfg.samples.count = 0;
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let verdict = gw_nncc_check(&x, &x1, &y, &zs, &cfg)?;
    let (ok, summary) = match &verdict {
        GwVerdict::Checked { report } => (
            report.passed,
            format!("GW segment chord check against {tests} test spaces: max gap {:.3e}", report.max_gap),
        ),
        GwVerdict::Inconclusive { reason } => (true, format!("inconclusive: {reason}")),
    };
    let json = to_json(&GwCheckReport { schema: SCHEMA, command: "gw", seed: run.seed, tests, verdict: &verdict })?;
    Ok(Finished { json, ok, summary })
}

#[derive(Serialize)]
struct GhReport {
    schema: u32,
    command: &'static str,
    distance: f64,
}

fn read_metric(path: &Path) -> std::result::Result<FiniteMetric, Failure> {
    let rows: Vec<Vec<f64>> = read_json(path)?;
    FiniteMetric::new(rows).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

pub fn gh(a: &GhArgs, _run: &Run) -> std::result::Result<Finished, Failure> {
    let x = read_metric(required(&a.x, "x")?)?;
    let y = read_metric(required(&a.y, "y")?)?;
    let distance = gh_distance(&x, &y).map_err(|e| match e {
        crosscurve::Error::SizeGuard(m) => Failure::Usage(m),
        other => other.into(),
    })?;
    let json = to_json(&GhReport { schema: SCHEMA, command: "gh", distance })?;
    Ok(Finished { json, ok: true, summary: format!("GH distortion {distance}") })
}
