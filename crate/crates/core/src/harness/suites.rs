//! Verification suites: one generator and one evaluator per identity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::charfn::{
    cf_modulus_slack, corollary_rhs, esseen_integral, lattice_inversion, p_of, q_of_h,
    CharacteristicFunction,
};
use crate::concentration::{concentration, exact_sum_distribution, regularity_factor};
use crate::error::{Error, Result};
use crate::measures::{
    CoefficientVector, CompoundPoissonSpec, DiscreteDistribution, SpectralMeasure, DEFAULT_ATOM_CAP,
};
use crate::scalar::{Rat, Scalar};
use crate::structure::{
    arak_rhs, arak_rhs_regular, beta_upper, inverse_detect, k1_structure_report, DetectConfig,
    K1Config,
};

use super::instances::{
    planted_cube, planted_instance, small_instances, sum_instance, Law, SumInstance,
};

/// Identity or bound checked by a suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    /// `Q(F, mu) <= (1 + floor(mu/lambda))^d Q(F, lambda)`.
    Regularity,
    /// `Q(F_a, tau) = Q(F_{va}, v tau)`.
    Scaling,
    /// `|W^(t)| <= exp(-(1 - |W^(t)|^2)/2)`.
    CfModulus,
    /// Exact `Q(H, tau)` against the Esséen functional.
    Sandwich,
    /// `Q(F_a, tau)` against `Q(H_1^{p(tau/kappa)}, kappa)`.
    HBound,
    /// `Q(F_a, tau)` against `(1 + floor(kappa/delta)) Q(H_1^{p(tau/kappa)}, delta)`.
    HBoundDelta,
    /// `Q(F_a, tau)` against the Arak-type bound with `beta_{1,m}(M_0, delta)`.
    BetaBound,
    /// `Q(F_a, 0)` against `H_1^{p(0)}{0}`.
    HAtom,
    /// Detector witness volume against `prod max(1/(q_j rho sqrt(n')), 1)`.
    DetectShape,
    /// Signed-cube rank against `sum (|log q_j| + log(tau_j/delta_j) + 1)`.
    CubeShape,
}

impl Identity {
    pub const ALL: [Identity; 10] = [
        Identity::Regularity,
        Identity::Scaling,
        Identity::CfModulus,
        Identity::Sandwich,
        Identity::HBound,
        Identity::HBoundDelta,
        Identity::BetaBound,
        Identity::HAtom,
        Identity::DetectShape,
        Identity::CubeShape,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Identity::Regularity => "regularity",
            Identity::Scaling => "scaling",
            Identity::CfModulus => "cf-modulus",
            Identity::Sandwich => "sandwich",
            Identity::HBound => "h-bound",
            Identity::HBoundDelta => "h-bound-delta",
            Identity::BetaBound => "beta-bound",
            Identity::HAtom => "h-atom",
            Identity::DetectShape => "detect-shape",
            Identity::CubeShape => "cube-shape",
        }
    }

    pub fn parse(s: &str) -> Option<Identity> {
        Identity::ALL.into_iter().find(|i| i.name() == s)
    }

    /// Holds with no unknown constant; records get pass/fail.
    pub fn constant_free(self) -> bool {
        matches!(
            self,
            Identity::Regularity | Identity::Scaling | Identity::CfModulus
        )
    }

    fn index(self) -> u64 {
        Identity::ALL
            .iter()
            .position(|i| *i == self)
            .expect("listed") as u64
    }
}

/// Case ids are `identity index * CASE_STRIDE + case number`.
pub const CASE_STRIDE: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteRecord {
    pub case_id: u64,
    pub identity: Identity,
    /// SHA-256 of the canonical JSON of the case inputs.
    pub digest: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs/rhs` for `rhs > 0` (0 when `rhs` is infinite); absent when both vanish.
    pub ratio: Option<f64>,
    /// Absent for ratio-only records.
    pub pass: Option<bool>,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    Default,
    Quick,
}

impl SuiteKind {
    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Default => "default",
            SuiteKind::Quick => "quick",
        }
    }
}

pub const HARNESS_SCHEMA: &str = "harness/v1";

fn default_schema() -> String {
    HARNESS_SCHEMA.into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarnessConfig {
    pub schema: String,
    pub suite: SuiteKind,
    pub seed: u64,
    /// Empty means every identity.
    pub identities: Vec<Identity>,
    pub esseen_tol: f64,
    pub beta_budget: usize,
    /// Relative headroom over the stored calibration.
    pub drift_tolerance: f64,
    pub check_drift: bool,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            schema: default_schema(),
            suite: SuiteKind::Default,
            seed: 7,
            identities: Vec::new(),
            esseen_tol: 1e-10,
            beta_budget: 200,
            drift_tolerance: 0.05,
            check_drift: true,
        }
    }
}

impl HarnessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema != HARNESS_SCHEMA {
            return Err(Error::invalid(format!("unknown schema {:?}", self.schema)));
        }
        if !(self.esseen_tol > 0.0) || !(self.drift_tolerance >= 0.0) {
            return Err(Error::invalid(
                "esseen_tol must be positive and drift_tolerance nonnegative",
            ));
        }
        Ok(())
    }

    pub fn selected(&self) -> Vec<Identity> {
        if self.identities.is_empty() {
            Identity::ALL.to_vec()
        } else {
            let mut ids = self.identities.clone();
            ids.sort();
            ids.dedup();
            ids
        }
    }

    fn rng(&self, id: Identity) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id.index() + 1);
        rng
    }

    fn quick(&self) -> bool {
        self.suite == SuiteKind::Quick
    }
}

/// Every selected identity, records in `case_id` order. Case failures are
/// recorded, never raised.
pub fn run_suite(cfg: &HarnessConfig) -> Result<Vec<SuiteRecord>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for id in cfg.selected() {
        out.extend(run_identity(id, cfg));
    }
    Ok(out)
}

pub fn run_identity(id: Identity, cfg: &HarnessConfig) -> Vec<SuiteRecord> {
    match id {
        Identity::Regularity => evaluate(id, regularity_cases(cfg), eval_regularity),
        Identity::Scaling => evaluate(id, scaling_cases(cfg), eval_scaling),
        Identity::CfModulus => evaluate(id, cf_cases(cfg), eval_cf),
        Identity::Sandwich => evaluate(id, sandwich_cases(cfg), |c| {
            eval_sandwich(c, cfg.esseen_tol)
        }),
        Identity::HBound => evaluate(id, bound_cases(cfg, id), |c| {
            eval_h_bound(c, cfg.esseen_tol)
        }),
        Identity::HBoundDelta => evaluate(id, bound_cases(cfg, id), |c| {
            eval_h_bound_delta(c, cfg.esseen_tol)
        }),
        Identity::BetaBound => evaluate(id, bound_cases(cfg, id), |c| {
            eval_beta(c, cfg.beta_budget, cfg.seed)
        }),
        Identity::HAtom => evaluate(id, atom_cases(cfg), |c| eval_atom(c, cfg.esseen_tol)),
        Identity::DetectShape => evaluate(id, detect_cases(cfg), eval_detect),
        Identity::CubeShape => evaluate(id, cube_cases(cfg), eval_cube),
    }
}

/// `(lhs, rhs, pass)`; `pass` is decided by the evaluator for constant-free
/// identities and ignored otherwise.
type Outcome = (f64, f64, bool);

pub fn input_digest<I: Serialize>(id: Identity, input: &I) -> String {
    let v = json!({ "identity": id, "input": input });
    hex::encode(Sha256::digest(
        serde_json::to_vec(&v).expect("serializable input"),
    ))
}

fn evaluate<I, F>(id: Identity, inputs: Vec<I>, f: F) -> Vec<SuiteRecord>
where
    I: Serialize + Sync,
    F: Fn(&I) -> Result<Outcome> + Sync,
{
    inputs
        .par_iter()
        .enumerate()
        .map(|(k, input)| {
            let case_id = id.index() * CASE_STRIDE + k as u64;
            let digest = input_digest(id, input);
            match f(input) {
                Ok((lhs, rhs, exact_pass)) => {
                    make_record(case_id, id, digest, lhs, rhs, exact_pass)
                }
                Err(e) => SuiteRecord {
                    case_id,
                    identity: id,
                    digest,
                    lhs: f64::NAN,
                    rhs: f64::NAN,
                    ratio: None,
                    pass: id.constant_free().then_some(false),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

pub(crate) fn make_record(
    case_id: u64,
    id: Identity,
    digest: String,
    lhs: f64,
    rhs: f64,
    exact_pass: bool,
) -> SuiteRecord {
    let (ratio, zero_rhs_fail) = ratio_of(lhs, rhs);
    let pass = if id.constant_free() {
        Some(exact_pass && !zero_rhs_fail)
    } else if zero_rhs_fail {
        Some(false)
    } else {
        None
    };
    SuiteRecord {
        case_id,
        identity: id,
        digest,
        lhs,
        rhs,
        ratio,
        pass,
        error: None,
    }
}

/// Ratio and whether `rhs = 0 < lhs`.
pub fn ratio_of(lhs: f64, rhs: f64) -> (Option<f64>, bool) {
    if rhs > 0.0 {
        (Some(if rhs.is_infinite() { 0.0 } else { lhs / rhs }), false)
    } else if lhs == 0.0 {
        (None, false)
    } else {
        (None, true)
    }
}

fn frac<T: Scalar>((n, d): (i64, i64)) -> T {
    T::from_frac(n, d)
}

fn exact_q<T: Scalar>(inst: &SumInstance, tau: &T) -> Result<T> {
    let f = exact_sum_distribution(
        &inst.coefficients::<T>(),
        &inst.law.distribution::<T>(),
        DEFAULT_ATOM_CAP,
    )?;
    Ok(concentration(&f, tau)?.value())
}

// ---- regularity -------------------------------------------------------

#[derive(Serialize)]
struct RegularityCase {
    instance: SumInstance,
    lambda: (i64, i64),
    ratio: (i64, i64),
}

const LAMBDAS: [(i64, i64); 5] = [(1, 2), (1, 1), (3, 2), (2, 1), (3, 1)];
const MU_RATIOS: [(i64, i64); 4] = [(1, 2), (1, 1), (2, 1), (5, 2)];

fn regularity_cases(cfg: &HarnessConfig) -> Vec<RegularityCase> {
    let mut rng = cfg.rng(Identity::Regularity);
    let count = if cfg.quick() { 40 } else { 200 };
    let mut out = Vec::new();
    for _ in 0..count {
        let instance = sum_instance(&mut rng, 10);
        let lambda = LAMBDAS[rng.gen_range(0..LAMBDAS.len())];
        for ratio in MU_RATIOS {
            out.push(RegularityCase {
                instance: instance.clone(),
                lambda,
                ratio,
            });
        }
    }
    out
}

fn eval_regularity(c: &RegularityCase) -> Result<Outcome> {
    let lambda: Rat = frac(c.lambda);
    let mu = lambda * frac::<Rat>(c.ratio);
    let f = exact_sum_distribution(
        &c.instance.coefficients::<Rat>(),
        &c.instance.law.distribution(),
        DEFAULT_ATOM_CAP,
    )?;
    let lhs = concentration(&f, &mu)?.value();
    let factor = regularity_factor(&mu, &lambda, 1)?;
    let rhs = concentration(&f, &lambda)?.value() * Rat::from_integer(factor as i128);
    Ok((lhs.to_f64(), rhs.to_f64(), lhs <= rhs))
}

// ---- scaling ----------------------------------------------------------

#[derive(Serialize)]
struct ScalingCase {
    instance: SumInstance,
    tau: (i64, i64),
    v: (i64, i64),
}

const SCALES: [(i64, i64); 3] = [(1, 3), (2, 1), (7, 1)];
const TAUS: [(i64, i64); 4] = [(0, 1), (1, 2), (1, 1), (2, 1)];

fn scaling_cases(cfg: &HarnessConfig) -> Vec<ScalingCase> {
    let mut rng = cfg.rng(Identity::Scaling);
    let count = if cfg.quick() { 15 } else { 50 };
    let mut out = Vec::new();
    for _ in 0..count {
        let instance = sum_instance(&mut rng, 10);
        let tau = TAUS[rng.gen_range(0..TAUS.len())];
        for v in SCALES {
            out.push(ScalingCase {
                instance: instance.clone(),
                tau,
                v,
            });
        }
    }
    out
}

fn eval_scaling(c: &ScalingCase) -> Result<Outcome> {
    let tau: Rat = frac(c.tau);
    let v: Rat = frac(c.v);
    let x = c.instance.law.distribution::<Rat>();
    let a = c.instance.coefficients::<Rat>();
    let lhs = concentration(&exact_sum_distribution(&a, &x, DEFAULT_ATOM_CAP)?, &tau)?.value();
    let scaled = exact_sum_distribution(&a.scale(&v)?, &x, DEFAULT_ATOM_CAP)?;
    let rhs = concentration(&scaled, &(tau * v))?.value();
    Ok((lhs.to_f64(), rhs.to_f64(), lhs == rhs))
}

// ---- cf modulus -------------------------------------------------------

#[derive(Serialize)]
struct CfCase {
    atoms: Vec<(f64, f64)>,
    t_max: f64,
    grid: usize,
}

/// Grid size per law.
pub const CF_GRID: usize = 10_000;
/// Allowed negative slack.
pub const CF_SLACK: f64 = 1e-12;

fn cf_cases(cfg: &HarnessConfig) -> Vec<CfCase> {
    let mut rng = cfg.rng(Identity::CfModulus);
    let count = if cfg.quick() { 10 } else { 50 };
    (0..count)
        .map(|_| {
            let k = rng.gen_range(1..=6);
            let raw: Vec<(f64, f64)> = (0..k)
                .map(|_| (rng.gen_range(-4.0..4.0), rng.gen_range(0.05..1.0)))
                .collect();
            let total: f64 = raw.iter().map(|(_, w)| w).sum();
            CfCase {
                atoms: raw.into_iter().map(|(x, w)| (x, w / total)).collect(),
                t_max: 20.0,
                grid: CF_GRID,
            }
        })
        .collect()
}

fn eval_cf(c: &CfCase) -> Result<Outcome> {
    let w = DiscreteDistribution::from_scalar_atoms(c.atoms.clone())?;
    let mut worst = (f64::INFINITY, 0.0);
    for i in 0..c.grid {
        let t = -c.t_max + 2.0 * c.t_max * i as f64 / (c.grid - 1) as f64;
        let s = cf_modulus_slack(&w, &[t]);
        if s < worst.0 {
            worst = (s, t);
        }
    }
    let r = w.cf(&[worst.1]).norm();
    Ok((r, r + worst.0, worst.0 >= -CF_SLACK))
}

// ---- sandwich ---------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
struct SandwichCase {
    a: Vec<i64>,
    lambda: f64,
    tau: f64,
}

fn small_sets() -> Vec<Vec<i64>> {
    let mut sets: Vec<Vec<i64>> = small_instances()
        .into_iter()
        .filter(|s| s.law == Law::Rademacher && s.a.len() <= 3)
        .map(|s| s.a)
        .collect();
    sets.dedup();
    sets
}

fn sandwich_cases(cfg: &HarnessConfig) -> Vec<SandwichCase> {
    let mut out = vec![SandwichCase {
        a: vec![1],
        lambda: 0.0,
        tau: 1.0,
    }];
    let (lambdas, taus): (&[f64], &[f64]) = if cfg.quick() {
        (&[1.0], &[1.0])
    } else {
        (&[0.5, 1.0], &[0.5, 1.0, 2.0])
    };
    for a in small_sets() {
        for &lambda in lambdas {
            for &tau in taus {
                out.push(SandwichCase {
                    a: a.clone(),
                    lambda,
                    tau,
                });
            }
        }
    }
    let mut rng = cfg.rng(Identity::Sandwich);
    for _ in 0..if cfg.quick() { 5 } else { 30 } {
        let n = rng.gen_range(1..=8);
        let a = (0..n).map(|_| rng.gen_range(1..=6)).collect();
        let lambda = [0.25, 0.5, 1.0][rng.gen_range(0..3)];
        let tau = [0.5, 1.0, 2.0][rng.gen_range(0..3)];
        out.push(SandwichCase { a, lambda, tau });
    }
    out
}

fn to_f64_coeffs(a: &[i64]) -> Result<CoefficientVector<f64>> {
    CoefficientVector::from_scalars(a.iter().map(|&v| v as f64).collect())
}

fn eval_sandwich(c: &SandwichCase, tol: f64) -> Result<Outcome> {
    let a = to_f64_coeffs(&c.a)?;
    let spec = CompoundPoissonSpec::h_measure(&a, c.lambda, 1.0)?;
    let exact = exact_h_q(&spec, c.tau)?;
    let est = esseen_integral(&spec, c.tau, tol)?;
    Ok((exact, est.value, true))
}

/// Exact `Q(H, tau)` for a one-dimensional lattice compound Poisson law.
fn exact_h_q(spec: &CompoundPoissonSpec, tau: f64) -> Result<f64> {
    if spec.dim() != 1 {
        return Err(Error::invalid("the exact path is one-dimensional"));
    }
    let law = crate::charfn::compound_poisson_exact(spec, 1e-15)?;
    Ok(concentration(&law, &tau)?.value())
}

/// Member of an `H`-suite: a symmetric compound Poisson law and a radius.
#[derive(Clone, Debug, PartialEq)]
pub struct HMember {
    pub spec: CompoundPoissonSpec,
    pub tau: f64,
}

/// `(min, max)` of exact `Q(H, tau)` over the Esséen functional across the
/// suite; fails unless the lower end is positive.
pub fn verify_sandwich_band(suite: &[HMember], tol: f64) -> Result<(f64, f64)> {
    if suite.is_empty() {
        return Err(Error::EmptyClass("sandwich".into()));
    }
    let ratios: Vec<f64> = suite
        .par_iter()
        .map(|m| {
            let q = exact_h_q(&m.spec, m.tau)?;
            let e = esseen_integral(&m.spec, m.tau, tol)?;
            Ok(q / e.value)
        })
        .collect::<Result<_>>()?;
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    if !(lo > 0.0) {
        return Err(Error::invalid(format!(
            "sandwich band collapses: low end {lo}"
        )));
    }
    Ok((lo, hi))
}

/// The members used by the sandwich suite.
pub fn sandwich_suite(cfg: &HarnessConfig) -> Result<Vec<HMember>> {
    sandwich_cases(cfg)
        .into_iter()
        .map(|c| {
            Ok(HMember {
                spec: CompoundPoissonSpec::h_measure(&to_f64_coeffs(&c.a)?, c.lambda, 1.0)?,
                tau: c.tau,
            })
        })
        .collect()
}

// ---- bounds through H -------------------------------------------------

#[derive(Clone, Debug, Serialize)]
struct BoundCase {
    instance: SumInstance,
    tau: (i64, i64),
    kappa: (i64, i64),
    delta: (i64, i64),
    m: usize,
}

/// `(tau, kappa, delta)` grids per identity.
fn bound_grid(id: Identity) -> Vec<((i64, i64), (i64, i64), (i64, i64))> {
    let half = (1, 2);
    let one = (1, 1);
    let two = (2, 1);
    match id {
        Identity::HBound => {
            let mut g = Vec::new();
            for tau in [half, one, two] {
                for kappa in [half, one, two] {
                    g.push((tau, kappa, kappa));
                }
            }
            g
        }
        Identity::HBoundDelta => {
            let mut g = Vec::new();
            for tau in [half, one, two] {
                for (kappa, delta) in [(one, half), (two, half), (one, (1, 4)), (two, one)] {
                    g.push((tau, kappa, delta));
                }
            }
            g
        }
        _ => vec![
            ((0, 1), one, (0, 1)),
            (one, one, half),
            (one, two, one),
            (two, two, one),
            (half, one, half),
        ],
    }
}

fn bound_cases(cfg: &HarnessConfig, id: Identity) -> Vec<BoundCase> {
    let grid = bound_grid(id);
    let ms: &[usize] = if id == Identity::BetaBound {
        &[1, 3, 5]
    } else {
        &[1]
    };
    let mut out = Vec::new();
    let small = small_instances();
    let small = if cfg.quick() {
        small
            .into_iter()
            .filter(|s| s.law == Law::Rademacher)
            .collect()
    } else {
        small
    };
    for instance in small {
        for &(tau, kappa, delta) in &grid {
            for &m in ms {
                out.push(BoundCase {
                    instance: instance.clone(),
                    tau,
                    kappa,
                    delta,
                    m,
                });
            }
        }
    }
    let mut rng = cfg.rng(id);
    for _ in 0..if cfg.quick() { 20 } else { 100 } {
        let instance = sum_instance(&mut rng, 10);
        let (tau, kappa, delta) = grid[rng.gen_range(0..grid.len())];
        let m = ms[rng.gen_range(0..ms.len())];
        out.push(BoundCase {
            instance,
            tau,
            kappa,
            delta,
            m,
        });
    }
    out
}

fn lhs_of(c: &BoundCase) -> Result<f64> {
    Ok(exact_q::<Rat>(&c.instance, &frac(c.tau))?.to_f64())
}

fn eval_h_bound(c: &BoundCase, tol: f64) -> Result<Outcome> {
    let kappa: f64 = frac(c.kappa);
    let p = p_of(
        &c.instance.law.distribution::<Rat>(),
        &(frac::<Rat>(c.tau) / frac::<Rat>(c.kappa)),
    )?
    .to_f64();
    let q = q_of_h(&c.instance.coefficients(), p, kappa, tol)?;
    Ok((lhs_of(c)?, q.value, true))
}

fn eval_h_bound_delta(c: &BoundCase, tol: f64) -> Result<Outcome> {
    let x = c.instance.law.distribution::<f64>();
    let r = corollary_rhs(
        &c.instance.coefficients(),
        &x,
        frac(c.tau),
        frac(c.kappa),
        frac(c.delta),
        tol,
    )?;
    Ok((lhs_of(c)?, r.value, true))
}

fn eval_beta(c: &BoundCase, budget: usize, seed: u64) -> Result<Outcome> {
    let tau_r: Rat = frac(c.tau);
    let p = p_of(
        &c.instance.law.distribution::<Rat>(),
        &(tau_r / frac::<Rat>(c.kappa)),
    )?
    .to_f64();
    if !(p > 0.0) {
        return Err(Error::invalid("the bound needs p(tau/kappa) > 0"));
    }
    let a = c.instance.coefficients::<f64>();
    let m0 = SpectralMeasure::symmetric_from_coefficients(&a).scaled(&(p / 4.0));
    let delta: f64 = frac(c.delta);
    let beta = beta_upper(&m0, 1, c.m, delta, budget, seed)?.upper;
    let rhs = if tau_r == Rat::from_integer(0) {
        arak_rhs(beta, 1, c.m, 1.0)
    } else {
        arak_rhs_regular(beta, 1, c.m, 1.0, frac(c.kappa), delta)
    };
    Ok((lhs_of(c)?, rhs, true))
}

// ---- atom at zero -----------------------------------------------------

#[derive(Serialize)]
struct AtomCase {
    instance: SumInstance,
}

fn atom_cases(cfg: &HarnessConfig) -> Vec<AtomCase> {
    let mut out: Vec<AtomCase> = small_instances()
        .into_iter()
        .map(|instance| AtomCase { instance })
        .collect();
    let mut rng = cfg.rng(Identity::HAtom);
    for _ in 0..if cfg.quick() { 20 } else { 100 } {
        out.push(AtomCase {
            instance: sum_instance(&mut rng, 10),
        });
    }
    out
}

fn eval_atom(c: &AtomCase, tol: f64) -> Result<Outcome> {
    let lhs = exact_q::<Rat>(&c.instance, &Rat::from_integer(0))?.to_f64();
    let p0 = p_of(&c.instance.law.distribution::<Rat>(), &Rat::from_integer(0))?.to_f64();
    let rhs = if p0 == 0.0 {
        1.0
    } else {
        let spec = CompoundPoissonSpec::h_measure(&c.instance.coefficients::<f64>(), p0, 1.0)?;
        lattice_inversion(&spec, &[0.0], tol)?
    };
    Ok((lhs, rhs, true))
}

// ---- detector shape ---------------------------------------------------

#[derive(Serialize)]
struct DetectCase {
    a: Vec<Vec<f64>>,
    tau: f64,
    rho: f64,
    n_prime: usize,
}

/// Planted detector instance and its noise level: rank at most 2, volume at
/// most 25, at most `n/8` outliers, noise `0.05` of the smallest step or none.
pub fn planted_detect_inputs(rng: &mut ChaCha8Rng) -> Result<(super::instances::Planted, f64)> {
    let rank = rng.gen_range(1..=2);
    let volume = rng.gen_range(rank * 2..=25);
    let steps: Vec<f64> = (0..rank)
        .map(|_| [1.0, 2.0, 3.0, 0.5][rng.gen_range(0..4)])
        .collect();
    let noisy = rng.gen_bool(0.5);
    let n = if noisy {
        rng.gen_range(8..=16)
    } else {
        rng.gen_range(16..=40)
    };
    let outliers = rng.gen_range(0..=n / 8);
    let h_min = steps.iter().copied().fold(f64::INFINITY, f64::min);
    let tau = if noisy { 0.05 * h_min } else { 0.0 };
    let p = planted_instance(rank, &steps, volume, n, outliers, tau, rng)?;
    Ok((p, tau))
}

fn detect_cases(cfg: &HarnessConfig) -> Vec<DetectCase> {
    let mut rng = cfg.rng(Identity::DetectShape);
    let count = if cfg.quick() { 20 } else { 100 };
    (0..count)
        .map(|_| {
            let (p, tau) = planted_detect_inputs(&mut rng).expect("valid planted parameters");
            DetectCase {
                a: p.a.entries().map(<[f64]>::to_vec).collect(),
                tau,
                rho: 1.0,
                n_prime: p.outliers.len().max(1),
            }
        })
        .collect()
}

fn eval_detect(c: &DetectCase) -> Result<Outcome> {
    let a = CoefficientVector::new(c.a.clone())?;
    let rep = inverse_detect(
        &a,
        &DiscreteDistribution::rademacher(),
        &c.tau,
        &c.rho,
        c.n_prime,
        &DetectConfig::default(),
    )?;
    let t = rep.target("cardinality").expect("detector target");
    Ok((t.lhs, t.rhs, true))
}

// ---- signed-cube shape ------------------------------------------------

#[derive(Serialize)]
struct CubeCase {
    a: Vec<f64>,
    tau: f64,
    delta: f64,
}

fn cube_cases(cfg: &HarnessConfig) -> Vec<CubeCase> {
    let mut rng = cfg.rng(Identity::CubeShape);
    let count = if cfg.quick() { 10 } else { 40 };
    (0..count)
        .map(|_| {
            let r = rng.gen_range(1..=3);
            let u: Vec<i64> = (0..r)
                .map(|j| rng.gen_range(1..=3) * 10i64.pow(j as u32))
                .collect();
            let n = rng.gen_range(2..=12);
            let a =
                planted_cube(&u, n, Rat::from_integer(0), &mut rng).expect("valid cube parameters");
            let (tau, delta) = if rng.gen_bool(0.5) {
                (0.0, 0.0)
            } else {
                (1.0, 0.5)
            };
            CubeCase {
                a: a.to_f64().entries().map(|e| e[0]).collect(),
                tau,
                delta,
            }
        })
        .collect()
}

fn eval_cube(c: &CubeCase) -> Result<Outcome> {
    let a = CoefficientVector::from_scalars(c.a.clone())?;
    let rep = k1_structure_report(
        &a,
        &DiscreteDistribution::rademacher(),
        &[c.tau],
        &[c.delta],
        &K1Config::default(),
    )?;
    let t = rep.target("rank").expect("rank target");
    Ok((t.lhs, t.rhs, true))
}
