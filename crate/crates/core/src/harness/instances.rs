//! Seeded instance families.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{CoefficientVector, DiscreteDistribution};
use crate::scalar::{Rat, Scalar};

/// Law of the summands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    Rademacher,
    /// `P{X = 0} = 1 - num/den`, `P{X = ±1} = num/(2 den)`.
    Lazy {
        num: i64,
        den: i64,
    },
}

impl Law {
    pub fn distribution<T: Scalar>(&self) -> DiscreteDistribution<T> {
        match *self {
            Law::Rademacher => DiscreteDistribution::rademacher(),
            Law::Lazy { num, den } => DiscreteDistribution::lazy_rademacher(T::from_frac(num, den))
                .expect("lazy parameter in (0, 1]"),
        }
    }
}

/// Integer coefficients with a summand law.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SumInstance {
    pub family: &'static str,
    pub a: Vec<i64>,
    pub law: Law,
}

impl SumInstance {
    pub fn coefficients<T: Scalar>(&self) -> CoefficientVector<T> {
        CoefficientVector::from_scalars(self.a.iter().map(|&v| T::from_i64(v)).collect())
            .expect("nonzero coefficients")
    }
}

const LAZY: [(i64, i64); 3] = [(1, 4), (1, 2), (3, 4)];

fn random_law(rng: &mut ChaCha8Rng) -> Law {
    if rng.gen_bool(0.5) {
        Law::Rademacher
    } else {
        let (num, den) = *LAZY.choose(rng).expect("nonempty");
        Law::Lazy { num, den }
    }
}

/// Rademacher or lazy sums over four families: uniform small integers,
/// powers of two, planted progressions `{0, ±h, ±2h}` and all-equal vectors.
pub fn sum_instance(rng: &mut ChaCha8Rng, max_n: usize) -> SumInstance {
    let n = rng.gen_range(1..=max_n);
    let law = random_law(rng);
    match rng.gen_range(0..4) {
        0 => SumInstance {
            family: "uniform",
            a: (0..n)
                .map(|_| rng.gen_range(1..=6) * if rng.gen_bool(0.5) { 1 } else { -1 })
                .collect(),
            law,
        },
        1 => SumInstance {
            family: "dissociated",
            a: (0..n.min(8)).map(|k| 1i64 << k).collect(),
            law,
        },
        2 => {
            let h = rng.gen_range(1..=3);
            let mut a: Vec<i64> = (0..n).map(|_| h * rng.gen_range(-2..=2)).collect();
            if a.iter().all(|v| *v == 0) {
                a[0] = h;
            }
            SumInstance {
                family: "planted",
                a,
                law,
            }
        }
        _ => SumInstance {
            family: "constant",
            a: vec![rng.gen_range(1..=4); n],
            law,
        },
    }
}

/// Nonzero multisets over `values` with at most `max_len` elements.
fn multisets(values: &[i64], max_len: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut stack: Vec<Vec<i64>> = vec![Vec::new()];
    while let Some(v) = stack.pop() {
        if !v.is_empty() && v.iter().any(|x| *x != 0) {
            out.push(v.clone());
        }
        if v.len() < max_len {
            let from = v
                .last()
                .map_or(0, |x| values.iter().position(|y| y == x).expect("member"));
            for &y in &values[from..] {
                let mut w = v.clone();
                w.push(y);
                stack.push(w);
            }
        }
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    out
}

/// Deterministic core of the bound suites under three laws: multisets over
/// `{0, 1, 2}` of size at most 10 and over `{1, 2, 3}` of size at most 3.
/// Signs are omitted since the laws are symmetric.
pub fn small_instances() -> Vec<SumInstance> {
    let mut sets = multisets(&[0, 1, 2], 10);
    for s in multisets(&[1, 2, 3], 3) {
        if s.contains(&3) {
            sets.push(s);
        }
    }
    let mut out = Vec::new();
    for law in [
        Law::Rademacher,
        Law::Lazy { num: 1, den: 2 },
        Law::Lazy { num: 1, den: 4 },
    ] {
        for s in &sets {
            out.push(SumInstance {
                family: "small",
                a: s.clone(),
                law,
            });
        }
    }
    out
}

/// Planted coefficient vector together with its ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct Planted {
    pub a: CoefficientVector<f64>,
    /// Per-coordinate number of progression terms.
    pub lengths: Vec<usize>,
    pub steps: Vec<f64>,
    /// Indices of the far points.
    pub outliers: Vec<usize>,
}

impl Planted {
    pub fn volume(&self) -> usize {
        self.lengths.iter().product()
    }
}

/// Splits `volume` into `rank` lengths with product at most `volume`.
fn split_volume(volume: usize, rank: usize) -> Vec<usize> {
    match rank {
        1 => vec![volume],
        _ => {
            let first = (volume as f64).sqrt().floor().max(1.0) as usize;
            let mut rest = split_volume(volume / first, rank - 1);
            rest.insert(0, first);
            rest
        }
    }
}

/// `n - outliers` points of a product of one-dimensional progressions with
/// the given steps (rank = dimension), jittered by at most `noise_tau` in
/// max-norm, and `outliers` points at distance at least ten diameters in
/// every coordinate and off every short sub-lattice.
pub fn planted_instance(
    rank: usize,
    steps: &[f64],
    volume: usize,
    n: usize,
    outliers: usize,
    noise_tau: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Planted> {
    if rank == 0 || steps.len() != rank || volume == 0 || outliers > n || n == 0 {
        return Err(Error::invalid(
            "need rank >= 1 steps, volume >= 1 and outliers <= n",
        ));
    }
    if steps.iter().any(|h| !(*h > 0.0)) || !(noise_tau >= 0.0) {
        return Err(Error::invalid(
            "steps must be positive and noise nonnegative",
        ));
    }
    let lengths = split_volume(volume, rank);
    let starts: Vec<i64> = lengths.iter().map(|&l| -((l as i64 - 1) / 2)).collect();
    let diameter = lengths
        .iter()
        .zip(steps)
        .map(|(&l, h)| (l as f64 - 1.0) * h)
        .fold(0.0, f64::max);
    let mut far_idx: Vec<usize> = (0..n).collect();
    far_idx.shuffle(rng);
    let mut far_idx: Vec<usize> = far_idx.into_iter().take(outliers).collect();
    far_idx.sort_unstable();
    // an irrational fraction of the step keeps outliers off every
    // progression of step h/q for small q
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let mut entries = Vec::with_capacity(n);
    for k in 0..n {
        let mut e = Vec::with_capacity(rank);
        for j in 0..rank {
            let h = steps[j];
            if far_idx.binary_search(&k).is_ok() {
                let lo = (10.0 * diameter.max(h) / h).ceil() as i64 + lengths[j] as i64;
                let m = rng.gen_range(lo..2 * lo) as f64;
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                e.push(sign * (m + golden) * h);
            } else {
                let i = starts[j] + rng.gen_range(0..lengths[j] as i64);
                let jitter = if noise_tau > 0.0 {
                    rng.gen_range(-noise_tau..=noise_tau)
                } else {
                    0.0
                };
                e.push(i as f64 * h + jitter);
            }
        }
        entries.push(e);
    }
    if entries.iter().flatten().all(|v| *v == 0.0) {
        entries[0][0] = steps[0];
    }
    let a = CoefficientVector::new(entries)?;
    Ok(Planted {
        a,
        lengths,
        steps: steps.to_vec(),
        outliers: far_idx,
    })
}

/// Coefficients drawn from `K_1(u)` for integer `u` on one coordinate,
/// jittered by at most `noise`.
pub fn planted_cube(
    u: &[i64],
    n: usize,
    noise: Rat,
    rng: &mut ChaCha8Rng,
) -> Result<CoefficientVector<Rat>> {
    if u.is_empty() || n == 0 {
        return Err(Error::invalid("need a nonempty u and n >= 1"));
    }
    let mut vals = Vec::with_capacity(n);
    for _ in 0..n {
        let mut v: i64 = u.iter().map(|x| x * rng.gen_range(-1..=1)).sum();
        if v == 0 {
            v = u[rng.gen_range(0..u.len())];
        }
        let jitter = if noise > Rat::from_integer(0) {
            noise * Rat::new(rng.gen_range(-8..=8), 8)
        } else {
            Rat::from_integer(0)
        };
        vals.push(Rat::from_integer(v as i128) + jitter);
    }
    CoefficientVector::from_scalars(vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::progressions::{cover_count, Cgap, Progression};
    use rand::SeedableRng;

    #[test]
    fn multiset_counts() {
        // C(k + 2, 2) multisets of size k over three values, minus all-zero
        assert_eq!(multisets(&[0, 1, 2], 2).len(), 2 + 5);
        assert_eq!(multisets(&[1, 2, 3], 3).len(), 3 + 6 + 10);
        assert_eq!(small_instances().len(), 3 * (275 + 10));
    }

    #[test]
    fn five_term_progression() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = planted_instance(1, &[3.0], 5, 16, 0, 0.0, &mut rng).unwrap();
        assert!(p
            .a
            .entries()
            .all(|e| (e[0] / 3.0).fract() == 0.0 && e[0].abs() <= 6.0));
    }

    #[test]
    fn all_outliers() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = planted_instance(2, &[1.0, 2.0], 9, 8, 8, 0.0, &mut rng).unwrap();
        assert_eq!(p.outliers, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn noisy_points_stay_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = planted_instance(1, &[1.0], 7, 40, 5, 0.01, &mut rng).unwrap();
        let k = Progression::Cgap(Cgap::arithmetic_progression(-3.0, 1.0, 3).unwrap());
        let c = cover_count(&p.a, &k, &0.01).unwrap();
        assert_eq!(c.covered, 35);
        assert_eq!(c.outliers, p.outliers);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = planted_instance(
            2,
            &[1.0, 3.0],
            20,
            30,
            3,
            0.05,
            &mut ChaCha8Rng::seed_from_u64(9),
        )
        .unwrap();
        let b = planted_instance(
            2,
            &[1.0, 3.0],
            20,
            30,
            3,
            0.05,
            &mut ChaCha8Rng::seed_from_u64(9),
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
