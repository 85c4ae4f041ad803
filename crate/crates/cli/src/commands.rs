//! One function per subcommand. Every argument struct doubles as the schema
//! of the `--input` object for its subcommand.

use std::path::PathBuf;

use clap::Args;
use concfn::charfn::{
    compound_poisson_exact, esseen_integral_with, lattice_law, q_of_h, CHARFN_SCHEMA,
    DEFAULT_PANEL_BUDGET,
};
use concfn::concentration::{concentration as q_of, exact_sum_distribution};
use concfn::harness::{
    calibration_sweep, planted_instance, stored_table, verify_against, write_csv, HarnessConfig,
    Identity, StoredCalibration, SuiteKind,
};
use concfn::measures::DEFAULT_ATOM_CAP;
use concfn::progressions::Progression;
use concfn::structure::{
    beta_exact_r1, beta_upper, fit_progression_1d, fit_smallest, fit_with_budget, inverse_detect,
    k1_structure_report, DetectConfig, K1Config, DEFAULT_STEP_BUDGET, STRUCTURE_SCHEMA,
};
use concfn::{CompoundPoissonSpec, Error, Rat, Result, Scalar, SpectralMeasure};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::input::{
    coefficients, compound, law, number, numbers, object, opt_number, required, spectral, JsonArg,
};
use crate::{Format, Global, Outcome};

const DEFAULT_SEED: u64 = 7;

fn json_out(v: &Value, g: &Global) -> Result<Outcome> {
    if g.format == Format::Csv {
        return Err(Error::invalid(
            "csv output is available for `verify` and `hdist` only",
        ));
    }
    Ok(Outcome {
        text: serde_json::to_string_pretty(v)? + "\n",
        code: 0,
    })
}

fn law_arg(x: &Option<JsonArg>) -> Value {
    x.as_ref()
        .map_or_else(|| Value::String("rademacher".into()), |j| j.0.clone())
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationArgs {
    /// Coefficients: `[1,2]`, `[[1,0],[0,1]]` or a coefficients object.
    #[arg(long)]
    pub a: Option<JsonArg>,
    /// Law of X: `rademacher`, `lazy:P`, `uniform:K` or a discrete object.
    #[arg(long)]
    pub x: Option<JsonArg>,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<JsonArg>,
    /// Rational arithmetic throughout.
    #[arg(long)]
    #[serde(default)]
    pub exact: bool,
    #[arg(long)]
    pub atom_cap: Option<usize>,
}

fn concentration_t<T: Scalar>(a: &ConcentrationArgs) -> Result<Value> {
    let coef = coefficients::<T>(&required(&a.a, "a")?.0)?;
    let x = law::<T>(&law_arg(&a.x))?;
    let tau = opt_number(&a.tau, "tau", T::zero())?;
    let f = exact_sum_distribution(&coef, &x, a.atom_cap.unwrap_or(DEFAULT_ATOM_CAP))?;
    Ok(q_of(&f, &tau)?.to_json_value())
}

pub fn concentration(a: ConcentrationArgs, g: &Global) -> Result<Outcome> {
    let v = if a.exact {
        concentration_t::<Rat>(&a)?
    } else {
        concentration_t::<f64>(&a)?
    };
    json_out(&v, g)
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectArgs {
    #[arg(long)]
    pub a: Option<JsonArg>,
    #[arg(long)]
    pub x: Option<JsonArg>,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<JsonArg>,
    /// Tolerance multiplier in (0, 1].
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<JsonArg>,
    /// Values each coordinate fit may leave uncovered.
    #[arg(long)]
    pub n_prime: Option<usize>,
    #[arg(long)]
    pub calibration_c: Option<f64>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub m_cap: Option<usize>,
    #[arg(long)]
    pub step_budget: Option<usize>,
    #[arg(long)]
    pub atom_cap: Option<usize>,
    #[arg(long)]
    #[serde(default)]
    pub exact: bool,
    /// Metadata written by `plant`; read from `--input` only.
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub planted: Option<Value>,
}

fn detect_t<T: Scalar>(a: &DetectArgs) -> Result<Value> {
    let coef = coefficients::<T>(&required(&a.a, "a")?.0)?;
    let x = law::<T>(&law_arg(&a.x))?;
    let tau = opt_number(&a.tau, "tau", T::zero())?;
    let rho = opt_number(&a.rho, "rho", T::one())?;
    let d = DetectConfig::default();
    let cfg = DetectConfig {
        calibration_c: a.calibration_c.unwrap_or(d.calibration_c),
        r: a.r.unwrap_or(d.r),
        m_cap: a.m_cap.unwrap_or(d.m_cap),
        step_budget: a.step_budget.unwrap_or(d.step_budget),
        support_cap: a.atom_cap.unwrap_or(d.support_cap),
    };
    let report = inverse_detect(&coef, &x, &tau, &rho, a.n_prime.unwrap_or(0), &cfg)?;
    Ok(report.to_json_value())
}

pub fn detect(a: DetectArgs, g: &Global) -> Result<Outcome> {
    let v = if a.exact {
        detect_t::<Rat>(&a)?
    } else {
        detect_t::<f64>(&a)?
    };
    json_out(&v, g)
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitArgs {
    /// Values to fit, e.g. `[0, 1, 2, 10]`.
    #[arg(long, allow_hyphen_values = true)]
    pub values: Option<JsonArg>,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<JsonArg>,
    /// Largest number of terms `2L + 1`.
    #[arg(long)]
    pub m_cap: Option<usize>,
    #[arg(long)]
    pub outlier_budget: Option<usize>,
    /// Shortest progression within the outlier budget instead of the one
    /// with the fewest outliers.
    #[arg(long)]
    #[serde(default)]
    pub smallest: bool,
    #[arg(long)]
    pub step_budget: Option<usize>,
    #[arg(long)]
    #[serde(default)]
    pub exact: bool,
}

fn fit_t<T: Scalar>(a: &FitArgs) -> Result<Value> {
    let values = numbers::<T>(&required(&a.values, "values")?.0, "values")?;
    let tau = opt_number(&a.tau, "tau", T::zero())?;
    let m_cap = a.m_cap.unwrap_or(101);
    let budget = a.outlier_budget.unwrap_or(0);
    let fit = match (a.smallest, a.step_budget) {
        (true, s) => fit_smallest(
            &values,
            &tau,
            m_cap,
            budget,
            s.unwrap_or(DEFAULT_STEP_BUDGET),
        )?,
        (false, Some(s)) => fit_with_budget(&values, &tau, m_cap, budget, s)?,
        (false, None) => fit_progression_1d(&values, &tau, m_cap, budget)?,
    };
    Ok(json!({
        "schema": STRUCTURE_SCHEMA,
        "type": "fit",
        "start": fit.start.to_json(),
        "step": fit.step.to_json(),
        "half_length": fit.half_length,
        "volume": fit.volume(),
        "outliers": fit.outliers,
        "within_budget": fit.within_budget,
        "truncated": fit.truncated,
        "progression": Progression::Cgap(fit.progression.clone()).to_json_value(),
    }))
}

pub fn fit(a: FitArgs, g: &Global) -> Result<Outcome> {
    let v = if a.exact {
        fit_t::<Rat>(&a)?
    } else {
        fit_t::<f64>(&a)?
    };
    json_out(&v, g)
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaArgs {
    /// Measure W: a spectral object or `[[point, weight], ...]`.
    #[arg(long, allow_hyphen_values = true)]
    pub w: Option<JsonArg>,
    /// Coefficients; W becomes `sum_k (E_{a_k} + E_{-a_k})`.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<JsonArg>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<JsonArg>,
    /// Exact rational scan; needs r = 1.
    #[arg(long)]
    #[serde(default)]
    pub exact: bool,
    /// Random proposals per rank above one.
    #[arg(long)]
    pub budget: Option<usize>,
}

fn measure<T: Scalar>(a: &BetaArgs) -> Result<SpectralMeasure<T>> {
    match (&a.w, &a.a) {
        (Some(w), None) => spectral(&w.0),
        (None, Some(c)) => Ok(SpectralMeasure::symmetric_from_coefficients(&coefficients(
            &c.0,
        )?)),
        _ => Err(Error::invalid("give exactly one of `w` and `a`")),
    }
}

pub fn beta(a: BetaArgs, g: &Global) -> Result<Outcome> {
    let r = a.r.unwrap_or(1);
    let m = a.m.unwrap_or(3);
    let v = if a.exact {
        if r != 1 {
            return Err(Error::invalid("--exact needs r = 1"));
        }
        let tau = opt_number(&a.tau, "tau", Rat::from_integer(0))?;
        beta_exact_r1(&measure::<Rat>(&a)?, m, &tau)?.to_json_value()
    } else {
        let tau = opt_number(&a.tau, "tau", 0.0)?;
        let seed = g.seed.unwrap_or(DEFAULT_SEED);
        beta_upper(
            &measure::<f64>(&a)?,
            r,
            m,
            tau,
            a.budget.unwrap_or(200),
            seed,
        )?
        .to_json_value()
    };
    json_out(&v, g)
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HdistArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<JsonArg>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Dilation of the Lévy measure.
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<f64>,
    /// Also report Q(H_1^lambda, kappa).
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Atoms with mass at or below this are dropped from the law.
    #[arg(long)]
    pub threshold: Option<f64>,
}

pub fn hdist(a: HdistArgs, g: &Global) -> Result<Outcome> {
    let coef = coefficients::<f64>(&required(&a.a, "a")?.0)?;
    let lambda = *required(&a.lambda, "lambda")?;
    let tol = a.tol.unwrap_or(1e-12);
    let spec = CompoundPoissonSpec::h_measure(&coef, lambda, a.z.unwrap_or(1.0))?;
    let (dist, aliasing) = match lattice_law(&spec, tol) {
        Ok(l) => (
            l.to_distribution(a.threshold.unwrap_or(0.0)),
            l.aliasing_bound,
        ),
        Err(Error::NonLattice) => (compound_poisson_exact(&spec, tol)?, 0.0),
        Err(e) => return Err(e),
    };
    if g.format == Format::Csv {
        let mut text = String::new();
        let d = dist.dim();
        let head: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
        text.push_str(&format!("{},mass\n", head.join(",")));
        for (p, w) in dist.iter() {
            let cells: Vec<String> = p.iter().map(|v| concfn::harness::fmt_num(*v)).collect();
            text.push_str(&format!(
                "{},{}\n",
                cells.join(","),
                concfn::harness::fmt_num(*w)
            ));
        }
        return Ok(Outcome { text, code: 0 });
    }
    let q = match a.kappa {
        Some(k) => serde_json::to_value(q_of_h(&coef, lambda.min(1.0), k, tol)?)?,
        None => Value::Null,
    };
    let v = object(vec![
        ("schema", CHARFN_SCHEMA.into()),
        ("type", "hdist".into()),
        ("levy", spec.to_json_value()),
        ("law", dist.to_json_value()),
        ("aliasing_bound", aliasing.into()),
        ("q", q),
    ]);
    json_out(&v, g)
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EssenArgs {
    /// A law: `rademacher`, `lazy:P` or a discrete object.
    #[arg(long)]
    pub law: Option<JsonArg>,
    /// A compound Poisson object.
    #[arg(long)]
    pub spec: Option<JsonArg>,
    /// Coefficients: with `x`, the law of S_a; with `lambda`, H_z^lambda.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<JsonArg>,
    #[arg(long)]
    pub x: Option<JsonArg>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub panels: Option<usize>,
}

pub fn essen(a: EssenArgs, g: &Global) -> Result<Outcome> {
    let tau = *required(&a.tau, "tau")?;
    let tol = a.tol.unwrap_or(1e-10);
    let panels = a.panels.unwrap_or(DEFAULT_PANEL_BUDGET);
    let est = match (&a.law, &a.spec, &a.a) {
        (Some(l), None, None) => esseen_integral_with(&law::<f64>(&l.0)?, tau, tol, panels)?,
        (None, Some(s), None) => esseen_integral_with(&compound(&s.0)?, tau, tol, panels)?,
        (None, None, Some(c)) => {
            let coef = coefficients::<f64>(&c.0)?;
            match (a.lambda, &a.x) {
                (Some(l), None) => {
                    let spec = CompoundPoissonSpec::h_measure(&coef, l, a.z.unwrap_or(1.0))?;
                    esseen_integral_with(&spec, tau, tol, panels)?
                }
                (None, x) => {
                    let f = exact_sum_distribution(&coef, &law(&law_arg(x))?, DEFAULT_ATOM_CAP)?;
                    esseen_integral_with(&f, tau, tol, panels)?
                }
                (Some(_), Some(_)) => {
                    return Err(Error::invalid("give `lambda` or `x` with `a`, not both"))
                }
            }
        }
        _ => return Err(Error::invalid("give exactly one of `law`, `spec` and `a`")),
    };
    json_out(&est.to_json_value(), g)
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    /// Comma-separated identity names; all when absent.
    #[arg(long, value_delimiter = ',')]
    pub identities: Option<Vec<String>>,
    /// Write the record CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the JSON summary here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Calibration file to measure drift against instead of the built-in one.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Skip the comparison with the stored calibration.
    #[arg(long)]
    #[serde(default)]
    pub no_drift: bool,
    /// Write a calibration table pooled over seeds 1..=N for both suites.
    #[arg(long)]
    pub emit_calibration: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    #[serde(default)]
    pub calibration_seeds: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Default,
    Quick,
}

impl From<Suite> for SuiteKind {
    fn from(s: Suite) -> Self {
        match s {
            Suite::Default => SuiteKind::Default,
            Suite::Quick => SuiteKind::Quick,
        }
    }
}

/// The `--input` object of `verify` is a harness configuration.
pub fn verify(a: VerifyArgs, file: Option<Value>, g: &Global) -> Result<Outcome> {
    let mut cfg: HarnessConfig = match file {
        Some(v) => serde_json::from_value(v)?,
        None => HarnessConfig::default(),
    };
    if let Some(s) = a.suite {
        cfg.suite = s.into();
    }
    if let Some(ids) = &a.identities {
        cfg.identities = ids
            .iter()
            .map(|s| {
                Identity::parse(s).ok_or_else(|| Error::invalid(format!("unknown identity `{s}`")))
            })
            .collect::<Result<_>>()?;
    }
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if a.no_drift {
        cfg.check_drift = false;
    }
    cfg.validate()?;
    if let Some(path) = &a.emit_calibration {
        if a.calibration_seeds == 0 {
            return Err(Error::invalid("--calibration-seeds must be positive"));
        }
        let seeds: Vec<u64> = (1..=a.calibration_seeds).collect();
        let runs = [SuiteKind::Default, SuiteKind::Quick]
            .into_iter()
            .map(|kind| {
                let c = HarnessConfig {
                    suite: kind,
                    identities: Vec::new(),
                    ..cfg.clone()
                };
                Ok((kind, calibration_sweep(&c, &seeds)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let table = serde_json::to_string_pretty(&stored_table(&seeds, &runs))? + "\n";
        std::fs::write(path, &table).map_err(|e| Error::invalid(format!("{path:?}: {e}")))?;
        return json_out(&serde_json::from_str(&table)?, g);
    }
    let stored = match &a.calibration {
        Some(p) => StoredCalibration::parse(
            &std::fs::read_to_string(p).map_err(|e| Error::invalid(format!("{p:?}: {e}")))?,
        )?,
        None => StoredCalibration::builtin()?,
    };
    let ver = verify_against(&cfg, &stored)?;
    let mut csv = Vec::new();
    write_csv(&ver.records, &mut csv)?;
    let summary = serde_json::to_string_pretty(&ver.summary())? + "\n";
    let write = |p: &PathBuf, bytes: &[u8]| {
        std::fs::write(p, bytes).map_err(|e| Error::invalid(format!("{p:?}: {e}")))
    };
    if let Some(p) = &a.csv {
        write(p, &csv)?;
    }
    if let Some(p) = &a.summary {
        write(p, summary.as_bytes())?;
    }
    let text = match g.format {
        Format::Csv => String::from_utf8(csv).map_err(|e| Error::invalid(e.to_string()))?,
        Format::Json => summary,
    };
    Ok(Outcome {
        text,
        code: if ver.ok() { 0 } else { 4 },
    })
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantArgs {
    #[arg(long)]
    pub rank: Option<usize>,
    /// One step per coordinate, e.g. `[1, 0.5]`.
    #[arg(long)]
    pub steps: Option<JsonArg>,
    /// Product of the per-coordinate term counts.
    #[arg(long)]
    pub volume: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub outliers: Option<usize>,
    /// Uniform jitter radius on the progression points.
    #[arg(long)]
    pub noise: Option<f64>,
}

pub fn plant(a: PlantArgs, g: &Global) -> Result<Outcome> {
    let rank = a.rank.unwrap_or(1);
    let steps = match &a.steps {
        Some(s) => numbers::<f64>(&s.0, "steps")?,
        None => vec![1.0; rank],
    };
    let n = *required(&a.n, "n")?;
    let volume = a.volume.unwrap_or(5usize.pow(rank as u32));
    let outliers = a.outliers.unwrap_or(0);
    let noise = a.noise.unwrap_or(0.0);
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(Error::invalid("noise must be finite and nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed.unwrap_or(DEFAULT_SEED));
    let p = planted_instance(rank, &steps, volume, n, outliers, noise, &mut rng)?;
    let v = json!({
        "a": p.a.to_json_value(),
        "x": "rademacher",
        "tau": noise,
        "rho": 1,
        "n_prime": outliers,
        "planted": {
            "lengths": p.lengths,
            "steps": p.steps,
            "volume": p.volume(),
            "outliers": p.outliers,
        },
    });
    json_out(&v, g)
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct K1Args {
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<JsonArg>,
    #[arg(long)]
    pub x: Option<JsonArg>,
    /// Per-coordinate radii, or one radius for every coordinate.
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<JsonArg>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<JsonArg>,
    #[arg(long)]
    pub rank_constant: Option<f64>,
    #[arg(long)]
    pub calibration_c: Option<f64>,
    #[arg(long)]
    pub atom_cap: Option<usize>,
    #[arg(long)]
    #[serde(default)]
    pub exact: bool,
}

fn radii<T: Scalar>(v: &Option<JsonArg>, name: &str, d: usize) -> Result<Vec<T>> {
    match v {
        None => Ok(vec![T::zero(); d]),
        Some(JsonArg(Value::Array(xs))) => xs.iter().map(|x| number(x, name)).collect(),
        Some(JsonArg(x)) => Ok(vec![number(x, name)?; d]),
    }
}

fn k1_t<T: Scalar>(a: &K1Args) -> Result<Value> {
    let coef = coefficients::<T>(&required(&a.a, "a")?.0)?;
    let x = law::<T>(&law_arg(&a.x))?;
    let d = coef.dim();
    let tau = radii::<T>(&a.tau, "tau", d)?;
    let delta = radii::<T>(&a.delta, "delta", d)?;
    let base = K1Config::default();
    let cfg = K1Config {
        rank_constant: a.rank_constant.unwrap_or(base.rank_constant),
        calibration_c: a.calibration_c.unwrap_or(base.calibration_c),
        support_cap: a.atom_cap.unwrap_or(base.support_cap),
        ..base
    };
    Ok(k1_structure_report(&coef, &x, &tau, &delta, &cfg)?.to_json_value())
}

pub fn k1(a: K1Args, g: &Global) -> Result<Outcome> {
    let v = if a.exact {
        k1_t::<Rat>(&a)?
    } else {
        k1_t::<f64>(&a)?
    };
    json_out(&v, g)
}
