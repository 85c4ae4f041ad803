//! `beta_{r,m}(W, tau)`: the least `W`-mass left outside `[K]_tau` over
//! shifted CGAPs `K` of rank `r` with `|Z^r ∩ V| <= m`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measures::SpectralMeasure;
use crate::progressions::{Body, Cgap, DEFAULT_POINT_CAP};
use crate::scalar::{Rat, Scalar};

use super::apsearch::{search, Weighted};

/// Largest support handled by the exact path.
pub const EXACT_SUPPORT_CAP: usize = 64;
/// Largest denominator accepted by the exact path.
pub const EXACT_DENOMINATOR_CAP: i128 = 1_000_000;
const EXACT_STEP_BUDGET: usize = 20_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct BetaResult<T = f64> {
    /// `W`-mass outside `[witness]_tau`.
    pub upper: T,
    pub witness: Cgap<T>,
    pub exact: bool,
    pub r: usize,
    pub m: usize,
    pub tau: T,
}

impl<T: Scalar> BetaResult<T> {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "schema": super::STRUCTURE_SCHEMA,
            "type": "beta",
            "upper": self.upper.to_json(),
            "exact": self.exact,
            "r": self.r,
            "m": self.m,
            "tau": self.tau.to_json(),
            "witness": crate::progressions::Progression::Cgap(self.witness.clone()).to_json_value(),
        })
    }
}

fn support<T: Scalar>(w: &SpectralMeasure<T>) -> Result<Weighted<T>> {
    if w.dim() != 1 {
        return Err(Error::invalid("beta needs a one-dimensional measure"));
    }
    Ok(Weighted::new(
        w.iter()
            .filter(|(_, m)| **m > T::zero())
            .map(|(p, m)| (p[0].clone(), m.clone()))
            .collect(),
    ))
}

fn trivial<T: Scalar>(r: usize) -> Result<Cgap<T>> {
    Cgap::new(
        vec![vec![T::one()]; r],
        Body::cube(r, 0.5),
        vec![T::zero()],
        DEFAULT_POINT_CAP,
    )
}

fn padded<T: Scalar>(start: T, step: T, l: usize, r: usize) -> Result<Cgap<T>> {
    let mut h = vec![vec![step.clone()]];
    let mut radii = vec![l as f64 + 0.5];
    for _ in 1..r {
        h.push(vec![T::one()]);
        radii.push(0.5);
    }
    let shift = start + step * T::from_i64(l as i64);
    Cgap::new(h, Body::Box { radii }, vec![shift], DEFAULT_POINT_CAP)
}

/// Mass within `tau` of the single point `0`.
fn mass_near_zero<T: Scalar>(w: &Weighted<T>, tau: &T) -> T {
    let mut s = T::zero();
    for (v, m) in w.values.iter().zip(&w.weights) {
        if v.abs() <= tau.clone() + T::slack(v) {
            s = s + m.clone();
        }
    }
    s
}

/// Best rank-one witness padded to rank `r` with zero-length generators.
fn rank_one<T: Scalar>(
    w: &Weighted<T>,
    m: usize,
    tau: &T,
    budget: usize,
    r: usize,
) -> (T, Cgap<T>, bool) {
    let total = w.total();
    let max_l = (m - 1) / 2;
    let out = search(w, tau, max_l, budget);
    let best = out.per_l[max_l].weight.clone();
    let l = (0..=max_l)
        .find(|&l| out.per_l[l].weight == best)
        .unwrap_or(max_l);
    let b = &out.per_l[l];
    let step = if l == 0 { T::one() } else { b.step.clone() };
    let witness = padded(b.start.clone(), step, l, r).expect("rank-one witness");
    (total - best, witness, out.truncated)
}

/// Exact `beta_{1,m}(W, tau)` over rationals.
pub fn beta_exact_r1(w: &SpectralMeasure<Rat>, m: usize, tau: &Rat) -> Result<BetaResult<Rat>> {
    if m == 0 {
        return Err(Error::invalid("m must be positive"));
    }
    if *tau < Rat::from_integer(0) {
        return Err(Error::invalid("tau must be nonnegative"));
    }
    let ws = support(w)?;
    if ws.len() > EXACT_SUPPORT_CAP {
        return Err(Error::invalid(format!(
            "support of {} exceeds {EXACT_SUPPORT_CAP}",
            ws.len()
        )));
    }
    for v in ws.values.iter().chain(std::iter::once(tau)) {
        if *v.denom() > EXACT_DENOMINATOR_CAP {
            return Err(Error::RationalityCap(EXACT_DENOMINATOR_CAP as i64));
        }
    }
    let result = |upper: Rat, witness: Cgap<Rat>| BetaResult {
        upper,
        witness,
        exact: true,
        r: 1,
        m,
        tau: *tau,
    };
    if ws.len() == 0 || mass_near_zero(&ws, tau) == ws.total() {
        return Ok(result(Rat::from_integer(0), trivial(1)?));
    }
    let (upper, witness, truncated) = rank_one(&ws, m, tau, EXACT_STEP_BUDGET, 1);
    if truncated {
        return Err(Error::invalid("m too large for the exhaustive step scan"));
    }
    Ok(result(upper, witness))
}

/// Upper bound on `beta_{r,m}(W, tau)` for `r <= 3`. Rank one is the exact
/// scan in floating point; higher ranks add a seeded random search over box
/// bodies started from the rank-one witness.
pub fn beta_upper(
    w: &SpectralMeasure<f64>,
    r: usize,
    m: usize,
    tau: f64,
    budget: usize,
    seed: u64,
) -> Result<BetaResult<f64>> {
    if !(1..=3).contains(&r) {
        return Err(Error::invalid("beta_upper supports 1 <= r <= 3"));
    }
    if m == 0 {
        return Err(Error::invalid("m must be positive"));
    }
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::invalid("tau must be finite and nonnegative"));
    }
    let ws = support(w)?;
    let total = ws.total();
    let near_zero = mass_near_zero(&ws, &tau);
    let result = |upper: f64, witness: Cgap<f64>| BetaResult {
        upper,
        witness,
        exact: false,
        r,
        m,
        tau,
    };
    if ws.len() == 0 || near_zero >= total {
        return Ok(result(0.0, trivial(r)?));
    }
    let mut best_upper = total - near_zero;
    let mut best = trivial(r)?;
    if budget == 0 {
        return Ok(result(best_upper, best));
    }
    let (u1, w1, _) = rank_one(&ws, m, &tau, budget.max(1000) * 64, r);
    if u1 < best_upper {
        best_upper = u1;
        best = w1;
    }
    if r == 1 || best_upper <= 0.0 {
        return Ok(result(best_upper.max(0.0), best));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = ws.len();
    for _ in 0..budget {
        let radii = random_radii(&mut rng, r, m);
        let mut h = Vec::with_capacity(r);
        for &l in &radii {
            let a = ws.values[rng.gen_range(0..n)];
            let b = ws.values[rng.gen_range(0..n)];
            let k = rng.gen_range(1..=(2 * l).max(1)) as f64;
            let mut step = (a - b).abs() / k;
            if step == 0.0 {
                step = a.abs().max(1.0) / k;
            }
            h.push(step);
        }
        let pts = box_points(&h, &radii);
        for _ in 0..8 {
            let s = ws.values[rng.gen_range(0..n)];
            let p = pts[rng.gen_range(0..pts.len())];
            let shift = s - p;
            let covered = covered_mass(&ws, &pts, shift, tau);
            if total - covered < best_upper {
                best_upper = total - covered;
                best = Cgap::new(
                    h.iter().map(|x| vec![*x]).collect(),
                    Body::Box {
                        radii: radii.iter().map(|l| *l as f64 + 0.5).collect(),
                    },
                    vec![shift],
                    DEFAULT_POINT_CAP,
                )?;
            }
        }
    }
    Ok(result(best_upper.max(0.0), best))
}

/// Half-lengths with `prod (2 L_i + 1) <= m`.
fn random_radii(rng: &mut ChaCha8Rng, r: usize, m: usize) -> Vec<usize> {
    let mut left = m;
    let mut out = Vec::with_capacity(r);
    for _ in 0..r {
        let max_l = (left.max(1) - 1) / 2;
        let l = rng.gen_range(0..=max_l);
        out.push(l);
        left /= 2 * l + 1;
    }
    out
}

fn box_points(h: &[f64], radii: &[usize]) -> Vec<f64> {
    let mut pts = vec![0.0];
    for (g, &l) in h.iter().zip(radii) {
        let l = l as i64;
        pts = pts
            .iter()
            .flat_map(|p| (-l..=l).map(move |j| p + j as f64 * g))
            .collect();
    }
    pts.sort_by(f64::total_cmp);
    pts
}

fn covered_mass(ws: &Weighted<f64>, sorted_pts: &[f64], shift: f64, tau: f64) -> f64 {
    let mut s = 0.0;
    for (v, m) in ws.values.iter().zip(&ws.weights) {
        let x = v - shift;
        let i = sorted_pts.partition_point(|p| *p < x);
        let near = [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter_map(|k| sorted_pts.get(k))
            .any(|p| (x - p).abs() <= tau + f64::slack(&x));
        if near {
            s += m;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::CoefficientVector;

    fn rat_measure(pts: &[i128]) -> SpectralMeasure<Rat> {
        SpectralMeasure::new(
            1,
            pts.iter()
                .map(|&p| (vec![Rat::from_integer(p)], Rat::from_integer(1)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn step_five_leaves_one() {
        let b = beta_exact_r1(&rat_measure(&[0, 5, 10, 11]), 3, &Rat::from_integer(0)).unwrap();
        assert_eq!(b.upper, Rat::from_integer(1));
        assert!(b.exact);
        assert_eq!(b.witness.h[0][0], Rat::from_integer(5));
    }

    #[test]
    fn large_m_on_common_step_is_zero() {
        let b = beta_exact_r1(&rat_measure(&[-4, 2, 6, 8]), 9, &Rat::from_integer(0)).unwrap();
        assert_eq!(b.upper, Rat::from_integer(0));
    }

    #[test]
    fn m_one_is_best_window() {
        let w = rat_measure(&[0, 1, 2, 7, 8]);
        let b = beta_exact_r1(&w, 1, &Rat::new(1, 2)).unwrap();
        assert_eq!(b.upper, Rat::from_integer(3));
    }

    #[test]
    fn ones_vector() {
        let a = CoefficientVector::from_scalars(vec![1.0; 5]).unwrap();
        let ms = SpectralMeasure::symmetric_from_coefficients(&a);
        let b = beta_upper(&ms, 1, 3, 0.0, 100, 1).unwrap();
        assert_eq!(b.upper, 0.0);
        assert_eq!(b.witness.volume().unwrap(), 3);
    }

    #[test]
    fn wide_tau_is_trivial() {
        let w = rat_measure(&[-3, 1, 2]).to_f64();
        let b = beta_upper(&w, 2, 3, 3.0, 10, 0).unwrap();
        assert_eq!(b.upper, 0.0);
        assert_eq!(b.witness.shift, vec![0.0]);
    }

    #[test]
    fn upper_dominates_exact_and_rank_helps() {
        let pts = [-8, -4, -2, -1, 1, 2, 4, 8];
        let exact = beta_exact_r1(&rat_measure(&pts), 3, &Rat::from_integer(0)).unwrap();
        let w = rat_measure(&pts).to_f64();
        let u1 = beta_upper(&w, 1, 3, 0.0, 100, 3).unwrap();
        assert_eq!(u1.upper, exact.upper.to_f64());
        let u2 = beta_upper(&w, 2, 9, 0.0, 2000, 3).unwrap();
        let u1_9 = beta_upper(&w, 1, 9, 0.0, 100, 3).unwrap();
        assert!(u2.upper <= u1_9.upper);
        assert!(u2.witness.volume().unwrap() <= 9);
    }
}
