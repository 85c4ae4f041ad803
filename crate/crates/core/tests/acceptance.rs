//! Acceptance criteria 1 to 11. Prints one line per criterion and exits
//! nonzero when any fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use concfn::charfn::{compound_poisson_exact, lattice_inversion};
use concfn::concentration::{concentration, exact_sum_distribution};
use concfn::harness::{
    calibrate, planted_cube, planted_detect_inputs, run_identity, run_suite, sandwich_suite,
    verify, verify_sandwich_band, write_csv, HarnessConfig, Identity, StoredCalibration, SuiteKind,
    SuiteRecord,
};
use concfn::measures::DEFAULT_ATOM_CAP;
use concfn::structure::{
    beta_exact_r1, inverse_detect, k1_structure_report, DetectConfig, K1Config,
};
use concfn::{CoefficientVector, CompoundPoissonSpec, DiscreteDistribution, Rat, SpectralMeasure};
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn r(n: i128, d: i128) -> Rat {
    Rat::new(n, d)
}

fn zero() -> Rat {
    Rat::from_integer(0)
}

/// Rademacher when `lazy` is `None`, else `P(0) = 1 - p`, `P(+-1) = p/2`.
fn step_law(lazy: Option<Rat>) -> Vec<(Rat, Rat)> {
    match lazy {
        None => vec![(r(-1, 1), r(1, 2)), (r(1, 1), r(1, 2))],
        Some(p) => vec![
            (r(-1, 1), p / r(2, 1)),
            (zero(), r(1, 1) - p),
            (r(1, 1), p / r(2, 1)),
        ],
    }
}

/// Law of `sum_k X_k a_k` by walking every outcome pattern. Coefficients
/// are scaled to integers and probabilities to integer counts so the walk
/// stays in machine integers; the result is mapped back exactly.
fn brute_sum(a: &[Rat], law: &[(Rat, Rat)]) -> BTreeMap<Rat, Rat> {
    let lcm = |x: i128, y: i128| x / gcd(x, y) * y;
    let den = a.iter().fold(1, |acc, x| lcm(acc, *x.denom()));
    let pden = law.iter().fold(1, |acc, (_, w)| lcm(acc, *w.denom()));
    let ints: Vec<i64> = a
        .iter()
        .map(|x| (*x * Rat::from_integer(den)).to_integer() as i64)
        .collect();
    let steps: Vec<(i64, u64)> = law
        .iter()
        .map(|(x, w)| {
            (
                x.to_integer() as i64,
                (*w * Rat::from_integer(pden)).to_integer() as u64,
            )
        })
        .collect();
    let k = steps.len();
    let mut counts: BTreeMap<i64, u128> = BTreeMap::new();
    for mut code in 0..k.pow(a.len() as u32) {
        let mut s = 0i64;
        let mut p = 1u128;
        for ak in &ints {
            let (x, w) = steps[code % k];
            code /= k;
            s += x * ak;
            p *= w as u128;
        }
        *counts.entry(s).or_default() += p;
    }
    let total = (pden as u128).pow(a.len() as u32) as i128;
    counts
        .into_iter()
        .filter(|(_, c)| *c > 0)
        .map(|(s, c)| (Rat::new(s as i128, den), Rat::new(c as i128, total)))
        .collect()
}

fn gcd(x: i128, y: i128) -> i128 {
    if y == 0 {
        x.abs()
    } else {
        gcd(y, x % y)
    }
}

/// Enumerated laws of the small instances, computed once.
fn oracle_laws() -> &'static [BTreeMap<Rat, Rat>] {
    static LAWS: OnceLock<Vec<BTreeMap<Rat, Rat>>> = OnceLock::new();
    LAWS.get_or_init(|| {
        small_instances()
            .iter()
            .map(|c| brute_sum(&c.a, &step_law(c.lazy)))
            .collect()
    })
}

/// Largest mass of a closed window of length `tau`, over all left ends.
fn brute_window(dist: &BTreeMap<Rat, Rat>, tau: Rat) -> Rat {
    dist.keys()
        .map(|left| {
            dist.range(*left..=*left + tau)
                .fold(zero(), |acc, (_, p)| acc + *p)
        })
        .max()
        .unwrap_or_else(zero)
}

struct SmallInstance {
    a: Vec<Rat>,
    lazy: Option<Rat>,
}

fn small_instances() -> Vec<SmallInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    (0..100)
        .map(|i| {
            let n = 1 + i % 12;
            let a = (0..n)
                .map(|_| r(rng.gen_range(-6..=6), rng.gen_range(1..=3)))
                .collect();
            let lazy = match i % 3 {
                0 => None,
                1 => Some(r(1, 2)),
                _ => Some(r(1, 4)),
            };
            SmallInstance { a, lazy }
        })
        .collect()
}

fn law_of(lazy: Option<Rat>) -> DiscreteDistribution<Rat> {
    DiscreteDistribution::from_scalar_atoms(step_law(lazy)).expect("valid step law")
}

fn criterion_1() -> Check {
    let cases = small_instances();
    for (i, (c, oracle)) in cases.iter().zip(oracle_laws()).enumerate() {
        let a = CoefficientVector::from_scalars(c.a.clone()).map_err(|e| e.to_string())?;
        let f = exact_sum_distribution(&a, &law_of(c.lazy), DEFAULT_ATOM_CAP)
            .map_err(|e| e.to_string())?;
        let got: BTreeMap<Rat, Rat> = f.iter().map(|(p, w)| (p[0], *w)).collect();
        if &got != oracle {
            return Err(format!("instance {i}: law differs from enumeration"));
        }
        let q = concentration(&f, &zero()).map_err(|e| e.to_string())?;
        let want = oracle.values().copied().max().unwrap_or_else(zero);
        if q.lower != want || q.upper != want {
            return Err(format!(
                "instance {i}: Q(F, 0) = {} but enumeration gives {want}",
                q.lower
            ));
        }
    }
    Ok(format!("{} instances, n <= 12, exact", cases.len()))
}

fn suite_passes(id: Identity, expected: usize) -> Result<usize, String> {
    let cfg = HarnessConfig::default();
    let recs = run_identity(id, &cfg);
    if recs.len() < expected {
        return Err(format!(
            "{}: {} records, expected {expected}",
            id.name(),
            recs.len()
        ));
    }
    if let Some(bad) = recs.iter().find(|r| r.pass != Some(true)) {
        return Err(format!(
            "{} case {} failed: lhs {} rhs {} {:?}",
            id.name(),
            bad.case_id,
            bad.lhs,
            bad.rhs,
            bad.error
        ));
    }
    Ok(recs.len())
}

/// Strict floor: largest integer `k < x`.
fn strict_floor(x: Rat) -> i128 {
    let f = x.floor().to_integer();
    if Rat::from_integer(f) == x {
        f - 1
    } else {
        f
    }
}

fn criterion_2() -> Check {
    let n = suite_passes(Identity::Regularity, 800)?;
    let lambdas = [r(1, 2), r(1, 1), r(3, 2), r(2, 1), r(3, 1)];
    let ratios = [r(1, 2), r(1, 1), r(2, 1), r(5, 2)];
    let mut checked = 0;
    for dist in oracle_laws() {
        for lambda in lambdas {
            for t in ratios {
                let mu = lambda * t;
                let factor = Rat::from_integer(1 + strict_floor(mu / lambda).max(0));
                if brute_window(dist, mu) > factor * brute_window(dist, lambda) {
                    return Err(format!("oracle violation at mu {mu}, lambda {lambda}"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!(
        "{n} suite records, {checked} oracle checks, 0 violations"
    ))
}

fn criterion_3() -> Check {
    let n = suite_passes(Identity::Scaling, 150)?;
    let mut checked = 0;
    for c in small_instances().into_iter().filter(|c| c.a.len() <= 8) {
        let dist = brute_sum(&c.a, &step_law(c.lazy));
        for v in [r(1, 3), r(2, 1), r(7, 1)] {
            let scaled: Vec<Rat> = c.a.iter().map(|x| *x * v).collect();
            let sdist = brute_sum(&scaled, &step_law(c.lazy));
            for tau in [zero(), r(1, 2), r(1, 1), r(2, 1)] {
                if brute_window(&dist, tau) != brute_window(&sdist, tau * v) {
                    return Err(format!("oracle mismatch at v {v}, tau {tau}"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!(
        "{n} suite records, {checked} oracle checks, all equal"
    ))
}

fn criterion_4() -> Check {
    let n = suite_passes(Identity::CfModulus, 50)?;
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let k = rng.gen_range(1..=6);
        let pts: Vec<f64> = (0..k).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let ws: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = ws.iter().sum();
        for i in 0..10_000 {
            let t = -20.0 + 40.0 * i as f64 / 9_999.0;
            let (re, im) = pts.iter().zip(&ws).fold((0.0, 0.0), |(re, im), (x, w)| {
                (
                    re + w / total * (t * x).cos(),
                    im + w / total * (t * x).sin(),
                )
            });
            let m = re.hypot(im).min(1.0);
            worst = worst.min((-(1.0 - m * m) / 2.0).exp() - m);
        }
    }
    if worst < -1e-12 {
        return Err(format!("oracle slack {worst:e}"));
    }
    Ok(format!(
        "{n} suite laws on 10^4 points, oracle min slack {worst:.3e}"
    ))
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst = 0.0f64;
    let mut worst_sum = 0.0f64;
    for s in 0..20 {
        let k = rng.gen_range(1..=4);
        let atoms: Vec<(Vec<f64>, f64)> = (0..k)
            .flat_map(|_| {
                let x = rng.gen_range(1..=3) as f64;
                let w = rng.gen_range(1..=8) as f64 / 4.0;
                [(vec![x], w), (vec![-x], w)]
            })
            .collect();
        let levy = SpectralMeasure::new(1, atoms).map_err(|e| e.to_string())?;
        let spec = CompoundPoissonSpec::new(levy).map_err(|e| e.to_string())?;
        let exact = compound_poisson_exact(&spec, 1e-15).map_err(|e| e.to_string())?;
        let mut inv_sum = 0.0;
        let lo = exact
            .iter()
            .map(|(p, _)| p[0])
            .fold(f64::INFINITY, f64::min) as i64;
        let hi = exact
            .iter()
            .map(|(p, _)| p[0])
            .fold(f64::NEG_INFINITY, f64::max) as i64;
        for x in lo - 2..=hi + 2 {
            let inv = lattice_inversion(&spec, &[x as f64], 1e-13).map_err(|e| e.to_string())?;
            let ex = exact.mass_at(&[x as f64]);
            worst = worst.max((inv - ex).abs());
            inv_sum += inv;
        }
        let ex_sum: f64 = exact.iter().map(|(_, w)| *w).sum();
        worst_sum = worst_sum
            .max((inv_sum - 1.0).abs())
            .max((ex_sum - 1.0).abs());
        if worst > 1e-10 || worst_sum > 1e-8 {
            return Err(format!(
                "spec {s}: mass gap {worst:e}, sum gap {worst_sum:e}"
            ));
        }
    }
    Ok(format!(
        "20 specs, max mass gap {worst:.2e}, max sum gap {worst_sum:.2e}"
    ))
}

fn stored(id: Identity) -> Result<(f64, f64), String> {
    let table = StoredCalibration::builtin().map_err(|e| e.to_string())?;
    let row = table
        .table(SuiteKind::Default)
        .and_then(|t| t.iter().find(|r| r.identity == id))
        .ok_or_else(|| format!("no stored calibration for {}", id.name()))?;
    Ok((row.min, row.max))
}

fn criterion_6() -> Check {
    let (smin, smax) = stored(Identity::Sandwich)?;
    let mut out = Vec::new();
    for seed in [7, 8, 9] {
        let cfg = HarnessConfig {
            seed,
            ..HarnessConfig::default()
        };
        let suite = sandwich_suite(&cfg).map_err(|e| e.to_string())?;
        if suite.len() < 100 {
            return Err(format!("H-suite has {} members", suite.len()));
        }
        let (lo, hi) = verify_sandwich_band(&suite, cfg.esseen_tol).map_err(|e| e.to_string())?;
        if !(lo > 0.0 && hi.is_finite() && lo >= smin * 0.95 && hi <= smax * 1.05) {
            return Err(format!(
                "seed {seed}: band [{lo:.4}, {hi:.4}] vs stored [{smin:.4}, {smax:.4}]"
            ));
        }
        out.push(format!("[{lo:.4}, {hi:.4}]"));
    }
    Ok(format!(
        "bands {} within stored [{smin:.4}, {smax:.4}] +-5%",
        out.join(" ")
    ))
}

fn criterion_7() -> Check {
    let ids = [Identity::HBound, Identity::HBoundDelta, Identity::BetaBound];
    let mut maxima: BTreeMap<Identity, Vec<f64>> = BTreeMap::new();
    for seed in [7, 8, 9] {
        let cfg = HarnessConfig {
            seed,
            identities: ids.to_vec(),
            ..HarnessConfig::default()
        };
        let recs = run_suite(&cfg).map_err(|e| e.to_string())?;
        if let Some(bad) = recs
            .iter()
            .find(|r| r.error.is_some() || r.pass == Some(false))
        {
            return Err(format!("case {} failed: {:?}", bad.case_id, bad.error));
        }
        for row in calibrate(&recs, &ids).map_err(|e| e.to_string())? {
            let (_, c) = stored(row.identity)?;
            let over: Vec<&SuiteRecord> = recs
                .iter()
                .filter(|r| r.identity == row.identity && r.lhs > c * r.rhs * (1.0 + 1e-12))
                .collect();
            if !over.is_empty() {
                return Err(format!(
                    "{} seed {seed}: {} cases exceed C = {c}",
                    row.identity.name(),
                    over.len()
                ));
            }
            maxima.entry(row.identity).or_default().push(row.max);
        }
    }
    let mut parts = Vec::new();
    for (id, ms) in &maxima {
        let (_, c) = stored(*id)?;
        if !c.is_finite() || ms.iter().any(|m| (m / c - 1.0).abs() > 0.05) {
            return Err(format!("{}: maxima {ms:?} vs stored {c}", id.name()));
        }
        parts.push(format!("{} C = {c:.4}", id.name()));
    }
    Ok(format!("seeds 7, 8, 9: {}", parts.join(", ")))
}

/// Best coverage by `t` consecutive terms `s + j h`, scanning every vertex
/// where two window edges meet, plus all single-point progressions.
fn brute_beta(atoms: &[(Rat, Rat)], m: usize, tau: Rat) -> Rat {
    let t = 2 * ((m - 1) / 2) + 1;
    let total = atoms.iter().fold(zero(), |acc, (_, w)| acc + *w);
    let covered = |s: Rat, h: Rat| {
        atoms.iter().fold(zero(), |acc, (v, w)| {
            let hit = (0..t).any(|j| (*v - s - h * Rat::from_integer(j as i128)).abs() <= tau);
            if hit {
                acc + *w
            } else {
                acc
            }
        })
    };
    let edges: Vec<Rat> = atoms
        .iter()
        .flat_map(|(v, _)| [*v - tau, *v, *v + tau])
        .collect();
    let mut best = zero();
    for &s in &edges {
        best = best.max(covered(s, zero()));
    }
    for &e1 in &edges {
        for &e2 in &edges {
            for j1 in 0..t {
                for j2 in j1 + 1..t {
                    // s + j1 h = e1, s + j2 h = e2
                    let h = (e2 - e1) / Rat::from_integer((j2 - j1) as i128);
                    let s = e1 - h * Rat::from_integer(j1 as i128);
                    best = best.max(covered(s, h));
                }
            }
        }
    }
    total - best
}

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for i in 0..50 {
        let k = rng.gen_range(1..=16);
        let mut atoms: BTreeMap<Rat, Rat> = BTreeMap::new();
        for _ in 0..k {
            let v = r(rng.gen_range(-12..=12), rng.gen_range(1..=3));
            *atoms.entry(v).or_insert_with(zero) += r(rng.gen_range(1..=6), rng.gen_range(1..=4));
        }
        let atoms: Vec<(Rat, Rat)> = atoms.into_iter().collect();
        let m = rng.gen_range(1..=7);
        let tau = [zero(), r(1, 3), r(1, 2)][rng.gen_range(0..3)];
        let w = SpectralMeasure::new(1, atoms.iter().map(|(v, w)| (vec![*v], *w)).collect())
            .map_err(|e| e.to_string())?;
        let got = beta_exact_r1(&w, m, &tau).map_err(|e| e.to_string())?;
        let want = brute_beta(&atoms, m, tau);
        if got.upper != want || !got.exact {
            return Err(format!(
                "instance {i}: beta {} but scan gives {want} (m {m}, tau {tau})",
                got.upper
            ));
        }
    }
    Ok("50 rational instances, support <= 16, exact match".into())
}

fn criterion_9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut worst_vol = 0.0f64;
    for i in 0..100 {
        let (p, tau) = planted_detect_inputs(&mut rng).map_err(|e| e.to_string())?;
        let n = p.a.n();
        let report = inverse_detect(
            &p.a,
            &DiscreteDistribution::rademacher(),
            &tau,
            &1.0,
            p.outliers.len(),
            &DetectConfig::default(),
        )
        .map_err(|e| e.to_string())?;
        let pts = report
            .progression
            .points(1 << 20)
            .map_err(|e| e.to_string())?;
        let covered =
            p.a.entries()
                .filter(|x| {
                    pts.iter().any(|(q, _)| {
                        x.iter()
                            .zip(q)
                            .all(|(a, b)| (a - b).abs() <= tau + 1e-9 * (1.0 + a.abs()))
                    })
                })
                .count();
        let need = n - p.outliers.len();
        if covered < need || report.covered < need {
            return Err(format!(
                "instance {i}: covers {covered} (report {}), need {need}",
                report.covered
            ));
        }
        let ratio = report.volume as f64 / p.volume() as f64;
        worst_vol = worst_vol.max(ratio);
        if ratio > 4.0 {
            return Err(format!(
                "instance {i}: volume {} vs planted {}",
                report.volume,
                p.volume()
            ));
        }
        for g in report.progression.generators() {
            if g.iter().filter(|x| **x != 0.0).count() != 1 {
                return Err(format!("instance {i}: generator {g:?}"));
            }
        }
    }
    Ok(format!(
        "100 planted instances, worst volume ratio {worst_vol:.2}"
    ))
}

fn criterion_10() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let x = DiscreteDistribution::<Rat>::rademacher();
    let mut max_rank_ratio = 0.0f64;
    let mut paired = 0;
    for i in 0..40 {
        let r_star = rng.gen_range(1..=3);
        let u: Vec<i64> = (0..r_star)
            .map(|j| rng.gen_range(1..=3) * 10i64.pow(j as u32))
            .collect();
        let n = rng.gen_range(2..=12);
        let noise = if i % 2 == 0 { zero() } else { r(1, 4) };
        let a = planted_cube(&u, n, noise, &mut rng).map_err(|e| e.to_string())?;
        let cfg = K1Config::default();
        let delta = r(1, 2);
        let p1 =
            k1_structure_report(&a, &x, &[r(1, 1)], &[delta], &cfg).map_err(|e| e.to_string())?;
        let mut reports = vec![("p(1)", p1)];
        if noise == zero() {
            for tau in [zero(), r(1, 1)] {
                let rep = k1_structure_report(&a, &x, &[tau], &[zero()], &cfg)
                    .map_err(|e| e.to_string())?;
                reports.push((if tau == zero() { "p(0)" } else { "p(1)" }, rep));
            }
        }
        for (kind, rep) in &reports {
            if rep.factor_kind != *kind {
                return Err(format!("instance {i}: path {} for {kind}", rep.factor_kind));
            }
            if rep.residual_mass != 0.0 || rep.rank > 2 * r_star {
                return Err(format!(
                    "instance {i} ({kind}): residual {} rank {} with r* = {r_star}",
                    rep.residual_mass, rep.rank
                ));
            }
            max_rank_ratio = max_rank_ratio.max(rep.rank as f64 / r_star as f64);
        }
        // Rademacher has p(0) = p(1), so at delta = 0 both paths must agree.
        if let [_, (_, p0), (_, p1)] = reports.as_slice() {
            let same = p0.factor == p1.factor
                && p0.rank == p1.rank
                && p0.residual_mass == p1.residual_mass
                && p0.progression == p1.progression;
            if !same {
                return Err(format!(
                    "instance {i}: p(0) path (factor {}, rank {}) vs p(1) path (factor {}, rank {})",
                    p0.factor, p0.rank, p1.factor, p1.rank
                ));
            }
            paired += 1;
        }
    }
    Ok(format!(
        "40 planted cubes, residual 0, max rank / r* = {max_rank_ratio:.2}, p(0) and p(1) paths agree on {paired}"
    ))
}

fn csv_with_threads(threads: usize) -> Result<Vec<u8>, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    let cfg = HarnessConfig::default();
    let ver = pool.install(|| verify(&cfg)).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    write_csv(&ver.records, &mut out).map_err(|e| e.to_string())?;
    Ok(out)
}

fn criterion_11() -> Check {
    let runs = [1, 1, 8, 8]
        .into_iter()
        .map(csv_with_threads)
        .collect::<Result<Vec<_>, _>>()?;
    if runs.iter().any(|r| r != &runs[0]) {
        return Err("CSV differs between runs".into());
    }
    Ok(format!(
        "{} bytes identical over 2 runs at 1 and 8 threads",
        runs[0].len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("exact oracle equivalence", criterion_1),
        ("regularity", criterion_2),
        ("scaling", criterion_3),
        ("characteristic function modulus", criterion_4),
        ("compound Poisson oracles", criterion_5),
        ("sandwich band", criterion_6),
        ("calibrated bound shapes", criterion_7),
        ("beta exactness at r = 1", criterion_8),
        ("inverse recovery", criterion_9),
        ("signed cube report", criterion_10),
        ("determinism", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = f();
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!(
                "criterion {:>2} PASS  {name}: {detail} ({secs:.1} s)",
                i + 1
            ),
            Err(detail) => {
                failed += 1;
                println!(
                    "criterion {:>2} FAIL  {name}: {detail} ({secs:.1} s)",
                    i + 1
                );
            }
        }
    }
    println!("acceptance: {} of 11 criteria pass", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
