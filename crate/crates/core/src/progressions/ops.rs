//! Distances, covering, embedding, products and properization.

use crate::error::{Error, Result};
use crate::measures::CoefficientVector;
use crate::scalar::Scalar;

use super::body::Body;
use super::gap::{Cgap, Gap, PointSet, SignedCube, DEFAULT_POINT_CAP, VOLUME_CAP};
use super::Progression;

pub const MAX_PROPERIZE_RETRIES: usize = 16;

/// `min_{y in K} |x - y|` in the max-norm.
pub fn neighborhood_distance<T: Scalar>(x: &[T], k: &Progression<T>) -> Result<T> {
    if x.len() != k.dim() {
        return Err(Error::invalid("point dimension mismatch"));
    }
    Ok(k.points(DEFAULT_POINT_CAP)?.distance(x))
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Cover {
    pub covered: usize,
    /// 0-based indices of coefficients outside `[K]_tau`, increasing.
    pub outliers: Vec<usize>,
}

pub fn cover_count<T: Scalar>(
    a: &CoefficientVector<T>,
    k: &Progression<T>,
    tau: &T,
) -> Result<Cover> {
    if a.dim() != k.dim() {
        return Err(Error::invalid(
            "coefficient and progression dimensions differ",
        ));
    }
    Ok(cover_count_points(a, &k.points(DEFAULT_POINT_CAP)?, tau))
}

/// Counts `a_k` with `dist(a_k, K) <= tau`.
pub fn cover_count_points<T: Scalar>(a: &CoefficientVector<T>, k: &PointSet<T>, tau: &T) -> Cover {
    let slack = T::slack(tau);
    let mut outliers = Vec::new();
    for (i, e) in a.entries().enumerate() {
        if k.distance(e) > tau.clone() + slack.clone() {
            outliers.push(i);
        }
    }
    Cover {
        covered: a.n() - outliers.len(),
        outliers,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding<T = f64> {
    pub gap: Gap<T>,
    /// Distinct points of the CGAP.
    pub cgap_size: usize,
    pub gap_volume: u128,
    /// `Vol(GAP) / |K|`.
    pub volume_ratio: f64,
}

/// Bounding-box GAP on the same generators: bounds are the coordinatewise
/// maxima of `|nu_j|` over `Z^r ∩ V`.
pub fn embed_cgap_in_gap<T: Scalar>(k: &Cgap<T>) -> Result<Embedding<T>> {
    let nus = k.lattice_points()?;
    let mut bounds = vec![0i64; k.rank()];
    for nu in &nus {
        for (b, v) in bounds.iter_mut().zip(nu) {
            *b = (*b).max(v.abs());
        }
    }
    let lower = bounds.iter().map(|b| -b).collect();
    let gap = Gap::new(k.shift.clone(), k.h.clone(), lower, bounds)?;
    let gap_volume = gap.volume()?;
    let cgap_size = k.points()?.len();
    Ok(Embedding {
        gap,
        cgap_size,
        gap_volume,
        volume_ratio: gap_volume as f64 / cgap_size as f64,
    })
}

fn embed_axis<T: Scalar>(g: &[T], j: usize, d: usize) -> Vec<T> {
    let mut v = vec![T::zero(); d];
    v[j] = g[0].clone();
    v
}

fn as_gap<T: Scalar>(p: &Progression<T>) -> Result<Gap<T>> {
    match p {
        Progression::Gap(g) => Ok(g.clone()),
        Progression::Cube(u) => Ok(u.to_gap()),
        Progression::Cgap(c) => match &c.body {
            Body::Box { radii } => {
                let b: Vec<i64> = radii
                    .iter()
                    .map(|r| (r * (1.0 + 1e-12)).floor() as i64)
                    .collect();
                Gap::new(
                    c.shift.clone(),
                    c.h.clone(),
                    b.iter().map(|x| -x).collect(),
                    b,
                )
            }
            _ => Err(Error::invalid(
                "only box CGAPs mix with other progressions in a product",
            )),
        },
    }
}

/// Product of one-dimensional progressions: part `j` sits on coordinate `j`,
/// so every generator has a single nonzero coordinate.
pub fn product<T: Scalar>(parts: &[Progression<T>]) -> Result<Progression<T>> {
    let d = parts.len();
    if d == 0 {
        return Err(Error::invalid("product needs at least one part"));
    }
    if parts.iter().any(|p| p.dim() != 1) {
        return Err(Error::invalid("product parts must be one-dimensional"));
    }
    let mut vol: u128 = 1;
    for p in parts {
        vol = vol.saturating_mul(p.volume()?);
        if vol > VOLUME_CAP {
            return Err(Error::VolumeCap {
                volume: vol,
                cap: VOLUME_CAP,
            });
        }
    }
    if parts.iter().all(|p| matches!(p, Progression::Cube(_))) {
        let mut u = Vec::new();
        for (j, p) in parts.iter().enumerate() {
            u.extend(p.generators().iter().map(|g| embed_axis(g, j, d)));
        }
        return Ok(Progression::Cube(SignedCube::new(u, d)?));
    }
    if parts.iter().all(|p| matches!(p, Progression::Cgap(_))) {
        let (mut h, mut blocks, mut shift) = (Vec::new(), Vec::new(), Vec::new());
        for (j, p) in parts.iter().enumerate() {
            let Progression::Cgap(c) = p else {
                unreachable!()
            };
            h.extend(c.h.iter().map(|g| embed_axis(g, j, d)));
            blocks.push(c.body.clone());
            shift.push(c.shift[0].clone());
        }
        return Ok(Progression::Cgap(Cgap::new(
            h,
            Body::Product { blocks },
            shift,
            DEFAULT_POINT_CAP,
        )?));
    }
    let (mut g0, mut gens, mut lower, mut upper) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (j, p) in parts.iter().enumerate() {
        let g = as_gap(p)?;
        g0.push(g.g0[0].clone());
        gens.extend(g.generators.iter().map(|x| embed_axis(x, j, d)));
        lower.extend(g.lower);
        upper.extend(g.upper);
    }
    Ok(Progression::Gap(Gap::new(g0, gens, lower, upper)?))
}

fn primes(count: usize) -> Vec<i64> {
    let mut out = Vec::with_capacity(count);
    let mut n = 2i64;
    while out.len() < count {
        if out.iter().take_while(|p| *p * *p <= n).all(|p| n % p != 0) {
            out.push(n);
        }
        n += 1;
    }
    out
}

/// Proper GAP with the same `g0`, bounds and volume, whose generators differ
/// from `K`'s by `delta_j = tau p_j / (2 Vol P)` in every coordinate (`p_j`
/// the primes used, `P` the largest). Each retry moves to the next block of
/// primes. Points move by at most `tau/2`, so `[K]_tau ⊂ [K*]_{2tau}`.
pub fn properize<T: Scalar>(k: &Gap<T>, tau: &T) -> Result<Gap<T>> {
    if *tau <= T::zero() {
        return Err(Error::invalid("tau must be positive"));
    }
    let vol = k.volume()?;
    let cap = DEFAULT_POINT_CAP;
    if k.is_proper(cap)? {
        return Ok(k.clone());
    }
    let r = k.rank();
    let ps = primes(r * (MAX_PROPERIZE_RETRIES + 1));
    let vol_t = T::from_i64(vol as i64);
    for attempt in 0..MAX_PROPERIZE_RETRIES {
        let used = &ps[attempt * r..(attempt + 1) * r];
        let big = T::from_i64(*used.iter().max().unwrap_or(&1));
        let mut cand = k.clone();
        for (g, &p) in cand.generators.iter_mut().zip(used) {
            let delta =
                tau.clone() * T::from_i64(p) / (T::from_i64(2) * vol_t.clone() * big.clone());
            for x in g.iter_mut() {
                *x = x.clone() + delta.clone();
            }
        }
        if cand.is_proper(cap)? {
            return Ok(cand);
        }
    }
    Err(Error::Properize(MAX_PROPERIZE_RETRIES))
}

impl<T: Scalar> SignedCube<T> {
    /// Properization keeping the signed-cube shape.
    pub fn properize(&self, tau: &T) -> Result<SignedCube<T>> {
        let g = properize(&self.to_gap(), tau)?;
        SignedCube::new(g.generators, self.dim)
    }
}
