use rand::Rng;
use serde::{Deserialize, Serialize};

use super::simplex::{ot_solve_measures, CostMatrix};
use super::{random_measure_with, Coupling, DiscreteMeasure};
use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::families::Family;
use crate::geometry::verify::structured_probes;
use crate::geometry::verify::{nncc_check, VerifierConfig, ViolationReport};
use crate::geometry::{Cost, CostSpace, RealVector, SegmentPath};
use crate::sampling::rng;

const GLUE_TOL: f64 = 1e-10;
const OPTIMALITY_TOL: f64 = 1e-9;

/// Nonnegative `n0 x n1 x m` array, indexed `(i, j, k)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThreePlan {
    n0: usize,
    n1: usize,
    m: usize,
    data: Vec<f64>,
}

impl ThreePlan {
    pub fn new(n0: usize, n1: usize, m: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n0 * n1 * m {
            return Err(Error::DimensionMismatch { expected: n0 * n1 * m, got: data.len() });
        }
        if data.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidInput("three-plan entries must be nonnegative".into()));
        }
        Ok(Self { n0, n1, m, data })
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n1 + j) * self.m + k]
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n0, self.n1, self.m)
    }

    pub fn total_mass(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Marginal on the first and third factors.
    pub fn proj_first(&self) -> Coupling {
        let mut p = vec![0.0; self.n0 * self.m];
        for i in 0..self.n0 {
            for j in 0..self.n1 {
                for k in 0..self.m {
                    p[i * self.m + k] += self.get(i, j, k);
                }
            }
        }
        Coupling { n: self.n0, m: self.m, plan: p }
    }

    /// Marginal on the second and third factors.
    pub fn proj_second(&self) -> Coupling {
        let mut p = vec![0.0; self.n1 * self.m];
        for i in 0..self.n0 {
            for j in 0..self.n1 {
                for k in 0..self.m {
                    p[j * self.m + k] += self.get(i, j, k);
                }
            }
        }
        Coupling { n: self.n1, m: self.m, plan: p }
    }

    /// Charged triples `(i, j, k, mass)`.
    pub fn charged(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n0 {
            for j in 0..self.n1 {
                for k in 0..self.m {
                    let w = self.get(i, j, k);
                    if w > 0.0 {
                        out.push((i, j, k, w));
                    }
                }
            }
        }
        out
    }
}

/// How the two plans are coupled along their common marginal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlueRule {
    /// `gamma_ijk = pi0_ik pi1_jk / nu_k`.
    #[default]
    Independent,
    /// Conditionals given `k` coupled by the northwest-corner rule.
    Northwest,
}

fn check_common_marginal(pi0: &Coupling, pi1: &Coupling) -> Result<Vec<f64>> {
    if pi0.cols() != pi1.cols() {
        return Err(Error::DimensionMismatch { expected: pi0.cols(), got: pi1.cols() });
    }
    let (nu0, nu1) = (pi0.col_sums(), pi1.col_sums());
    let residual = nu0.iter().zip(&nu1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if residual > GLUE_TOL {
        return Err(Error::MarginalMismatch { residual });
    }
    Ok(nu0)
}

/// Gluing of two plans sharing their second marginal, by conditional independence.
pub fn glue(pi0: &Coupling, pi1: &Coupling) -> Result<ThreePlan> {
    glue_with(pi0, pi1, GlueRule::Independent)
}

pub fn glue_with(pi0: &Coupling, pi1: &Coupling, rule: GlueRule) -> Result<ThreePlan> {
    let nu = check_common_marginal(pi0, pi1)?;
    let (n0, n1, m) = (pi0.rows(), pi1.rows(), pi0.cols());
    let mut data = vec![0.0; n0 * n1 * m];
    for (k, &nk) in nu.iter().enumerate() {
        if nk <= 0.0 {
            continue;
        }
        match rule {
            GlueRule::Independent => {
                for i in 0..n0 {
                    for j in 0..n1 {
                        data[(i * n1 + j) * m + k] = pi0.get(i, k) * pi1.get(j, k) / nk;
                    }
                }
            }
            GlueRule::Northwest => {
                let scale = pi1.col_sums()[k] / nk;
                let mut ra: Vec<f64> = (0..n0).map(|i| pi0.get(i, k)).collect();
                let mut rb: Vec<f64> = (0..n1).map(|j| pi1.get(j, k) / scale).collect();
                let (mut i, mut j) = (0, 0);
                while i < n0 && j < n1 {
                    let x = ra[i].min(rb[j]);
                    data[(i * n1 + j) * m + k] += x;
                    ra[i] -= x;
                    rb[j] -= x;
                    if ra[i] <= rb[j] {
                        i += 1;
                    } else {
                        j += 1;
                    }
                }
            }
        }
    }
    Ok(ThreePlan { n0, n1, m, data })
}

/// Lift of base c-segments along a three-plan.
#[derive(Clone)]
pub struct Lift {
    mu0: DiscreteMeasure,
    mu1: DiscreteMeasure,
    nu: DiscreteMeasure,
    gamma: ThreePlan,
    cost: CostSpace,
    /// `(mass, k, base segment)` for every charged triple.
    pieces: Vec<(f64, usize, SegmentPath<RealVector>)>,
}

fn plan_cost(c: &CostMatrix, p: &Coupling) -> f64 {
    let mut v = 0.0;
    for i in 0..p.rows() {
        for j in 0..p.cols() {
            let x = p.get(i, j);
            if x > 0.0 {
                v += x * c.get(i, j).finite_value().unwrap_or(f64::INFINITY);
            }
        }
    }
    v
}

impl Lift {
    /// Lift using optimal endpoint plans and the default gluing.
    pub fn new(mu0: &DiscreteMeasure, mu1: &DiscreteMeasure, nu: &DiscreteMeasure, family: &Family) -> Result<Self> {
        Self::with_rule(mu0, mu1, nu, family, GlueRule::Independent)
    }

    pub fn with_rule(
        mu0: &DiscreteMeasure,
        mu1: &DiscreteMeasure,
        nu: &DiscreteMeasure,
        family: &Family,
        rule: GlueRule,
    ) -> Result<Self> {
        let pi0 = ot_solve_measures(&family.cost, mu0, nu)?.plan;
        let pi1 = ot_solve_measures(&family.cost, mu1, nu)?.plan;
        Self::build(mu0, mu1, nu, &pi0, &pi1, family, rule)
    }

    /// Lift along given endpoint plans, which must be optimal.
    pub fn with_plans(
        mu0: &DiscreteMeasure,
        mu1: &DiscreteMeasure,
        nu: &DiscreteMeasure,
        pi0: &Coupling,
        pi1: &Coupling,
        family: &Family,
    ) -> Result<Self> {
        for (mu, pi) in [(mu0, pi0), (mu1, pi1)] {
            pi.check_marginals(mu.weights(), nu.weights())?;
            let c = CostMatrix::between(&family.cost, mu, nu)?;
            let best = ot_solve_measures(&family.cost, mu, nu)?.value;
            let residual = plan_cost(&c, pi) - best;
            if residual > OPTIMALITY_TOL * (1.0 + best.abs()) {
                return Err(Error::NotOptimal { residual });
            }
        }
        Self::build(mu0, mu1, nu, pi0, pi1, family, GlueRule::Independent)
    }

    fn build(
        mu0: &DiscreteMeasure,
        mu1: &DiscreteMeasure,
        nu: &DiscreteMeasure,
        pi0: &Coupling,
        pi1: &Coupling,
        family: &Family,
        rule: GlueRule,
    ) -> Result<Self> {
        let gamma = glue_with(pi0, pi1, rule)?;
        let pieces = gamma
            .charged()
            .into_iter()
            .map(|(i, j, k, w)| {
                let seg = family.segment(&mu0.support()[i], &mu1.support()[j], &nu.support()[k])?;
                Ok((w, k, seg))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { mu0: mu0.clone(), mu1: mu1.clone(), nu: nu.clone(), gamma, cost: family.cost.clone(), pieces })
    }

    pub fn gamma(&self) -> &ThreePlan {
        &self.gamma
    }

    /// Pushforward of the three-plan by the base segments at time `s`.
    pub fn measure_at(&self, s: f64) -> Result<DiscreteMeasure> {
        if s == 0.0 {
            return Ok(self.mu0.clone());
        }
        if s == 1.0 {
            return Ok(self.mu1.clone());
        }
        let mut pts = Vec::with_capacity(self.pieces.len());
        let mut ws = Vec::with_capacity(self.pieces.len());
        for (w, _, seg) in &self.pieces {
            pts.push(seg.at(s)?);
            ws.push(*w);
        }
        Ok(DiscreteMeasure::merged(pts, &ws))
    }

    pub fn segment(&self) -> SegmentPath<DiscreteMeasure> {
        let me = self.clone();
        SegmentPath::new(self.nu.clone(), self.mu0.clone(), self.mu1.clone(), move |s| me.measure_at(s))
    }

    /// Cost of the plan `sum gamma_ijk c(x_ijk(s), y_k)`.
    pub fn plan_cost(&self, s: f64) -> Result<f64> {
        let mut v = 0.0;
        for (w, k, seg) in &self.pieces {
            v += w * self.cost.eval_finite(&seg.at(s)?, &self.nu.support()[*k])?;
        }
        Ok(v)
    }

    /// `plan_cost(s) - T_c(mu(s), nu)`; zero when the lifted plan is optimal.
    pub fn optimality_gap(&self, s: f64) -> Result<f64> {
        let best = ot_solve_measures(&self.cost, &self.measure_at(s)?, &self.nu)?.value;
        Ok(self.plan_cost(s)? - best)
    }
}

/// Optimal transport cost between discrete measures for a base cost.
#[derive(Clone, Debug)]
pub struct WassersteinCost {
    pub base: CostSpace,
}

impl WassersteinCost {
    pub fn new(base: CostSpace) -> Self {
        Self { base }
    }
}

impl Cost for WassersteinCost {
    type X = DiscreteMeasure;
    type Y = DiscreteMeasure;

    fn eval(&self, x: &DiscreteMeasure, y: &DiscreteMeasure) -> Result<ExtReal> {
        match ot_solve_measures(&self.base, x, y) {
            Ok(sol) => Ok(ExtReal::finite(sol.value)),
            Err(Error::Infeasible) => Ok(ExtReal::POS_INF),
            Err(e) => Err(e),
        }
    }

    fn name(&self) -> &str {
        "transport"
    }
}

/// Random test measures with 3 to 6 atoms drawn from the family's sampler.
pub fn sample_measures(family: &Family, count: usize, seed: u64) -> Vec<DiscreteMeasure> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let n = r.random_range(3..=6);
            random_measure_with(&mut r, n, |r| family.sample(r))
        })
        .collect()
}

/// Chord check on the transport cost along the lifted segment from `(mu0, nu)` to `(mu1, nu)`.
///
/// Test measures are `cfg.samples.count` random measures plus `mu0`, `mu1`
/// and the lifted measures at the interior grid nodes.
pub fn wasserstein_nncc_check(
    mu0: &DiscreteMeasure,
    mu1: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    family: &Family,
    cfg: &VerifierConfig,
) -> Result<ViolationReport> {
    wasserstein_nncc_check_with(mu0, mu1, nu, family, cfg, GlueRule::Independent)
}

pub fn wasserstein_nncc_check_with(
    mu0: &DiscreteMeasure,
    mu1: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    family: &Family,
    cfg: &VerifierConfig,
    rule: GlueRule,
) -> Result<ViolationReport> {
    let seg = Lift::with_rule(mu0, mu1, nu, family, rule)?.segment();
    let mut sigmas = sample_measures(family, cfg.samples.count, cfg.samples.seed);
    sigmas.extend(structured_probes(&seg, cfg)?);
    nncc_check(&seg, &WassersteinCost::new(family.cost.clone()), &sigmas, cfg)
}
