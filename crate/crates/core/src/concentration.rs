//! Concentration functions `Q(F, tau) = sup_x P(Y in x + tau B)` where `B` is
//! the closed Euclidean ball of radius 1/2.
//!
//! In d = 1 the ball `x + tau B` is the closed interval `[x - tau/2, x + tau/2]`
//! and `Q` is computed exactly by a sliding window over the sorted atoms. In
//! d >= 2 and `tau > 0` a certified bracket is returned: the lower end is the
//! best ball mass over a finite set of candidate centres, the upper end is the
//! largest mass of an axis-parallel closed cube of side `tau` (every ball of
//! diameter `tau` fits inside such a cube).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::atoms::Atoms;
use crate::error::{Error, Result};
use crate::measures::{CoefficientVector, DiscreteDistribution, DEFAULT_ATOM_CAP};
use crate::scalar::{point_key, sum_scalars, Scalar, ScalarKey};

pub const CONCENTRATION_SCHEMA: &str = "concentration/v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactWindow,
    BracketCandidates,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationResult<T = f64> {
    pub lower: T,
    pub upper: T,
    pub tau: T,
    pub method: Method,
    pub witness_center: Option<Vec<T>>,
}

impl<T: Scalar> ConcentrationResult<T> {
    /// The exact value when the method is exact, else the lower end.
    pub fn value(&self) -> T {
        self.lower.clone()
    }

    pub fn is_exact(&self) -> bool {
        self.method == Method::ExactWindow
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "schema": CONCENTRATION_SCHEMA,
            "lower": self.lower.to_json(),
            "upper": self.upper.to_json(),
            "tau": self.tau.to_json(),
            "method": self.method,
            "witness_center": self.witness_center.as_ref().map(|c| c.iter().map(Scalar::to_json).collect::<Vec<_>>()),
        })
    }

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::invalid("expected an object"))?;
        if obj.get("schema").and_then(Value::as_str) != Some(CONCENTRATION_SCHEMA) {
            return Err(Error::invalid("expected schema concentration/v1"));
        }
        let allowed = [
            "schema",
            "lower",
            "upper",
            "tau",
            "method",
            "witness_center",
        ];
        if let Some(k) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::invalid(format!("unknown field `{k}`")));
        }
        let num = |k: &str| {
            obj.get(k)
                .and_then(T::from_json)
                .ok_or_else(|| Error::invalid(format!("missing or bad `{k}`")))
        };
        let method: Method =
            serde_json::from_value(obj.get("method").cloned().unwrap_or(Value::Null))?;
        let witness_center = match obj.get("witness_center") {
            None | Some(Value::Null) => None,
            Some(Value::Array(xs)) => Some(
                xs.iter()
                    .map(|x| {
                        T::from_json(x).ok_or_else(|| Error::invalid("bad witness coordinate"))
                    })
                    .collect::<Result<Vec<T>>>()?,
            ),
            Some(_) => return Err(Error::invalid("bad `witness_center`")),
        };
        let r = ConcentrationResult {
            lower: num("lower")?,
            upper: num("upper")?,
            tau: num("tau")?,
            method,
            witness_center,
        };
        if r.lower < T::zero() || r.lower > r.upper || r.upper > T::one() + T::slack(&T::one()) {
            return Err(Error::invalid("need 0 <= lower <= upper <= 1"));
        }
        Ok(r)
    }
}

impl<T: Scalar> Serialize for ConcentrationResult<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json_value().serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for ConcentrationResult<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        Self::from_json_value(&v).map_err(serde::de::Error::custom)
    }
}

/// Exact law of `S_a = sum_k X_k a_k` for a scalar law `X`.
///
/// Equal coefficients are grouped first (their partial sums overlap heavily),
/// then groups are convolved in increasing order of support size.
pub fn exact_sum_distribution<T: Scalar>(
    a: &CoefficientVector<T>,
    x: &DiscreteDistribution<T>,
    support_cap: usize,
) -> Result<DiscreteDistribution<T>> {
    if x.dim() != 1 {
        return Err(Error::invalid("X must be one-dimensional"));
    }
    let d = a.dim();
    let mut groups: BTreeMap<Vec<ScalarKey>, (Vec<T>, usize)> = BTreeMap::new();
    for e in a.entries() {
        groups
            .entry(point_key(e))
            .or_insert_with(|| (e.to_vec(), 0))
            .1 += 1;
    }
    let mut group_laws = Vec::with_capacity(groups.len());
    for (_, (coef, mult)) in groups {
        let step = x.scale_into(&coef)?;
        let mut law = step.clone();
        for _ in 1..mult {
            law = law.convolve(&step, support_cap)?;
        }
        group_laws.push(law);
    }
    group_laws.sort_by_key(DiscreteDistribution::len);
    let mut acc = DiscreteDistribution::point_mass(vec![T::zero(); d]);
    for g in &group_laws {
        acc = acc.convolve(g, support_cap)?;
    }
    Ok(acc)
}

/// `Q(F, tau)`: exact in d = 1 or at `tau = 0`, a certified bracket otherwise.
pub fn concentration<T: Scalar>(
    f: &DiscreteDistribution<T>,
    tau: &T,
) -> Result<ConcentrationResult<T>> {
    if *tau < T::zero() || !tau.is_finite() {
        return Err(Error::invalid("tau must be finite and nonnegative"));
    }
    if tau.is_zero() {
        let (i, m) = argmax(f.atoms().weights());
        return Ok(ConcentrationResult {
            lower: m.clone(),
            upper: m,
            tau: tau.clone(),
            method: Method::ExactWindow,
            witness_center: Some(f.atoms().point(i).to_vec()),
        });
    }
    if f.dim() == 1 {
        let (mass, left) = max_window(f.atoms(), tau);
        return Ok(ConcentrationResult {
            lower: mass.clone(),
            upper: mass,
            tau: tau.clone(),
            method: Method::ExactWindow,
            witness_center: Some(vec![left + tau.half()]),
        });
    }
    let (lower, center) = best_candidate_ball(f.atoms(), tau);
    let upper = max_cube_mass(f.atoms(), tau);
    let upper = if upper < lower { lower.clone() } else { upper };
    Ok(ConcentrationResult {
        lower,
        upper,
        tau: tau.clone(),
        method: Method::BracketCandidates,
        witness_center: Some(center),
    })
}

/// Concentration of the law of `S_a`.
pub fn concentration_of_sum<T: Scalar>(
    a: &CoefficientVector<T>,
    x: &DiscreteDistribution<T>,
    tau: &T,
) -> Result<ConcentrationResult<T>> {
    let f = exact_sum_distribution(a, x, DEFAULT_ATOM_CAP)?;
    concentration(&f, tau)
}

/// `a -> v a`, with `Q(F_a, tau) = Q(F_{va}, v tau)`.
pub fn scale_coefficients<T: Scalar>(
    a: &CoefficientVector<T>,
    v: &T,
) -> Result<CoefficientVector<T>> {
    a.scale(v)
}

/// `(1 + floor(mu/lambda))^d` with the strict floor (largest integer `k < x`).
///
/// At `mu = 0` the strict floor would be -1; the factor is then 1, which keeps
/// `Q(F, 0) <= Q(F, lambda)` true.
pub fn regularity_factor<T: Scalar>(mu: &T, lambda: &T, d: usize) -> Result<u128> {
    if *lambda <= T::zero() {
        return Err(Error::invalid("lambda must be positive"));
    }
    if *mu < T::zero() {
        return Err(Error::invalid("mu must be nonnegative"));
    }
    let k = (mu.clone() / lambda.clone()).strict_floor_i64().max(0) as u128;
    (1 + k)
        .checked_pow(d as u32)
        .ok_or_else(|| Error::invalid("regularity factor overflows"))
}

fn argmax<T: Scalar>(ws: &[T]) -> (usize, T) {
    let mut best = 0;
    for (i, w) in ws.iter().enumerate() {
        if *w > ws[best] {
            best = i;
        }
    }
    (best, ws[best].clone())
}

/// Largest mass of a closed interval of length `tau` over sorted 1-D atoms;
/// returns the mass and the left end of a maximizing interval.
fn max_window<T: Scalar>(atoms: &Atoms<T>, tau: &T) -> (T, T) {
    let n = atoms.len();
    let mut best = T::zero();
    let mut best_left = atoms.point(0)[0].clone();
    let mut j = 0;
    let mut window = T::zero();
    for i in 0..n {
        let left = atoms.point(i)[0].clone();
        let limit = left.clone() + tau.clone();
        let slack = T::slack(&(limit.abs()));
        while j < n && atoms.point(j)[0] <= limit.clone() + slack.clone() {
            window = window + atoms.weight(j).clone();
            j += 1;
        }
        if window > best {
            best = window.clone();
            best_left = left;
        }
        window = window - atoms.weight(i).clone();
    }
    if !T::EXACT {
        // recompute the winning window without running-sum drift
        let limit = best_left.clone() + tau.clone();
        let slack = T::slack(&(limit.abs()));
        let masses = atoms
            .iter()
            .filter(|(p, _)| p[0] >= best_left && p[0] <= limit.clone() + slack.clone())
            .map(|(_, w)| w);
        best = sum_scalars(masses);
    }
    (best, best_left)
}

fn sq_dist<T: Scalar>(p: &[T], q: &[T]) -> T {
    p.iter().zip(q).fold(T::zero(), |acc, (a, b)| {
        let d = a.clone() - b.clone();
        acc + d.clone() * d
    })
}

/// Lower end of the bracket: best closed ball of radius `tau/2` centred at an
/// atom or at the midpoint of two atoms at distance at most `tau`.
fn best_candidate_ball<T: Scalar>(atoms: &Atoms<T>, tau: &T) -> (T, Vec<T>) {
    let n = atoms.len();
    let r2 = {
        let h = tau.half();
        h.clone() * h
    };
    let tau2 = tau.clone() * tau.clone();
    // atoms sorted lexicographically, so the first coordinate is nondecreasing
    let mut centers: Vec<Vec<T>> = (0..n).map(|i| atoms.point(i).to_vec()).collect();
    const MAX_CANDIDATES: usize = 200_000;
    'outer: for i in 0..n {
        for j in i + 1..n {
            let (p, q) = (atoms.point(i), atoms.point(j));
            if q[0].clone() - p[0].clone() > tau.clone() {
                break;
            }
            if sq_dist(p, q) <= tau2 {
                centers.push(
                    p.iter()
                        .zip(q)
                        .map(|(a, b)| (a.clone() + b.clone()).half())
                        .collect(),
                );
                if centers.len() >= MAX_CANDIDATES {
                    break 'outer;
                }
            }
        }
    }
    let mut best = T::zero();
    let mut best_c = centers[0].clone();
    for c in centers {
        let lo = c[0].clone() - tau.half();
        let hi = c[0].clone() + tau.half();
        let start = atoms_lower_bound(atoms, &lo);
        let mut mass = T::zero();
        for k in start..n {
            let p = atoms.point(k);
            if p[0] > hi {
                break;
            }
            let slack = T::slack(&r2);
            if sq_dist(p, &c) <= r2.clone() + slack {
                mass = mass + atoms.weight(k).clone();
            }
        }
        if mass > best {
            best = mass;
            best_c = c;
        }
    }
    (best, best_c)
}

fn atoms_lower_bound<T: Scalar>(atoms: &Atoms<T>, x0: &T) -> usize {
    let (mut lo, mut hi) = (0, atoms.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if atoms.point(mid)[0] < *x0 {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Largest mass of a closed cube `x + [0, tau]^d`.
fn max_cube_mass<T: Scalar>(atoms: &Atoms<T>, tau: &T) -> T {
    let idx: Vec<usize> = (0..atoms.len()).collect();
    max_box_rec(atoms, tau, &idx, 0)
}

fn max_box_rec<T: Scalar>(atoms: &Atoms<T>, tau: &T, idx: &[usize], coord: usize) -> T {
    let d = atoms.dim();
    if coord == d {
        return sum_scalars(idx.iter().map(|&i| atoms.weight(i)));
    }
    let mut sorted = idx.to_vec();
    sorted.sort_by(|&i, &j| atoms.point(i)[coord].total_cmp(&atoms.point(j)[coord]));
    let mut best = T::zero();
    let mut j = 0;
    for i in 0..sorted.len() {
        if i > 0 && atoms.point(sorted[i])[coord] == atoms.point(sorted[i - 1])[coord] {
            continue;
        }
        let left = atoms.point(sorted[i])[coord].clone();
        let limit = left + tau.clone();
        let slack = T::slack(&limit.abs());
        j = j.max(i);
        while j < sorted.len() && atoms.point(sorted[j])[coord] <= limit.clone() + slack.clone() {
            j += 1;
        }
        let m = max_box_rec(atoms, tau, &sorted[i..j], coord + 1);
        if m > best {
            best = m;
        }
    }
    best
}

/// Law of `S_a` by direct enumeration of all `|supp X|^n` outcome patterns.
/// Exponential; meant as an independent oracle for small `n`.
pub fn enumerate_sum_distribution<T: Scalar>(
    a: &CoefficientVector<T>,
    x: &DiscreteDistribution<T>,
) -> Result<DiscreteDistribution<T>> {
    let n = a.n();
    let k = x.len();
    let total = (k as u128)
        .checked_pow(n as u32)
        .filter(|t| *t <= 1 << 24)
        .ok_or(Error::AtomCap {
            needed: usize::MAX,
            cap: 1 << 24,
        })? as usize;
    let d = a.dim();
    let xs: Vec<(T, T)> = x.iter().map(|(p, m)| (p[0].clone(), m.clone())).collect();
    let mut points = Vec::with_capacity(total * d);
    let mut masses = Vec::with_capacity(total);
    let mut digits = vec![0usize; n];
    for _ in 0..total {
        let mut s = vec![T::zero(); d];
        let mut m = T::one();
        for (kk, &dg) in digits.iter().enumerate() {
            let (v, w) = &xs[dg];
            for (sj, aj) in s.iter_mut().zip(a.entry(kk)) {
                *sj = sj.clone() + v.clone() * aj.clone();
            }
            m = m * w.clone();
        }
        points.extend(s);
        masses.push(m);
        for dg in digits.iter_mut() {
            *dg += 1;
            if *dg < k {
                break;
            }
            *dg = 0;
        }
    }
    let atoms = Atoms::merged(d, points, masses);
    Ok(DiscreteDistribution::from_atoms_unchecked(atoms))
}
