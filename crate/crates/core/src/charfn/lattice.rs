//! Lattice detection, FFT inversion of lattice compound Poisson laws, and the
//! Poisson-series oracle.

use num_complex::Complex64;
use num_integer::Integer;
use rustfft::FftPlanner;

use crate::atoms::Atoms;
use crate::error::{Error, Result};
use crate::measures::{CompoundPoissonSpec, DiscreteDistribution, DEFAULT_ATOM_CAP};
use crate::scalar::{compensated_sum, rational_reconstruct};

/// Denominator cap for rational reconstruction of coefficient ratios.
pub const MAX_DENOMINATOR: i64 = 1_000_000;
/// Largest FFT grid (total points).
pub const MAX_GRID: usize = 1 << 24;

const RATIO_TOL: f64 = 1e-14;
const INDEX_TOL: f64 = 1e-9;

/// Product lattice `h_1 Z x ... x h_d Z`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    pub steps: Vec<f64>,
}

impl Lattice {
    /// Integer coordinates of `x`, or `None` when `x` is off the lattice.
    pub fn index(&self, x: &[f64]) -> Option<Vec<i64>> {
        x.iter()
            .zip(&self.steps)
            .map(|(v, h)| {
                let q = v / h;
                let k = q.round();
                ((q - k).abs() <= INDEX_TOL * k.abs().max(1.0)).then_some(k as i64)
            })
            .collect()
    }

    pub fn point(&self, k: &[i64]) -> Vec<f64> {
        k.iter()
            .zip(&self.steps)
            .map(|(&i, h)| i as f64 * h)
            .collect()
    }
}

/// Finds the coarsest product lattice containing all points, by continued
/// fraction reconstruction of the ratios to the smallest nonzero coordinate.
pub fn detect_lattice(dim: usize, points: &[&[f64]]) -> Option<Lattice> {
    let mut steps = Vec::with_capacity(dim);
    for j in 0..dim {
        let vals: Vec<f64> = points
            .iter()
            .map(|p| p[j].abs())
            .filter(|v| *v > 0.0)
            .collect();
        let Some(base) = vals.iter().copied().reduce(f64::min) else {
            steps.push(1.0);
            continue;
        };
        let mut fracs = Vec::with_capacity(vals.len());
        let mut den = 1i64;
        for v in &vals {
            let (p, q) = rational_reconstruct(v / base, MAX_DENOMINATOR, RATIO_TOL)?;
            den = den.lcm(&q);
            if den > MAX_DENOMINATOR {
                return None;
            }
            fracs.push((p, q));
        }
        let mut g = 0i64;
        for &(p, q) in &fracs {
            g = g.gcd(&p.checked_mul(den / q)?);
        }
        let h = base * g as f64 / den as f64;
        if vals.iter().any(|v| {
            let q = v / h;
            (q - q.round()).abs() > INDEX_TOL * q.abs().max(1.0)
        }) {
            return None;
        }
        steps.push(h);
    }
    Some(Lattice { steps })
}

/// Dense masses of a lattice law on the box `[-R_1, R_1] x ... x [-R_d, R_d]`.
#[derive(Clone, Debug)]
pub struct LatticeLaw {
    pub lattice: Lattice,
    pub radius: Vec<i64>,
    masses: Vec<f64>,
    /// Upper bound on the mass lost to wrap-around.
    pub aliasing_bound: f64,
}

impl LatticeLaw {
    pub fn dim(&self) -> usize {
        self.radius.len()
    }

    fn offset(&self, k: &[i64]) -> Option<usize> {
        let mut off = 0usize;
        for (i, r) in k.iter().zip(&self.radius) {
            if i.abs() > *r {
                return None;
            }
            off = off * (2 * *r as usize + 1) + (i + r) as usize;
        }
        Some(off)
    }

    pub fn mass_at_index(&self, k: &[i64]) -> f64 {
        self.offset(k).map_or(0.0, |o| self.masses[o])
    }

    /// Sum of all computed masses.
    pub fn total(&self) -> f64 {
        compensated_sum(self.masses.iter().copied())
    }

    /// `(index, mass)` for every grid point with mass above `threshold`.
    pub fn atoms(&self, threshold: f64) -> Vec<(Vec<i64>, f64)> {
        let widths: Vec<usize> = self.radius.iter().map(|r| 2 * *r as usize + 1).collect();
        let mut out = Vec::new();
        for (off, &m) in self.masses.iter().enumerate() {
            if m > threshold {
                let mut rem = off;
                let mut k = vec![0i64; widths.len()];
                for j in (0..widths.len()).rev() {
                    k[j] = (rem % widths[j]) as i64 - self.radius[j];
                    rem /= widths[j];
                }
                out.push((k, m));
            }
        }
        out
    }

    /// The law as atoms in `R^d`, dropping grid points with mass `<= threshold`.
    pub fn to_distribution(&self, threshold: f64) -> DiscreteDistribution<f64> {
        let d = self.dim();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (k, m) in self.atoms(threshold) {
            points.extend(self.lattice.point(&k));
            weights.push(m);
        }
        DiscreteDistribution::from_atoms_unchecked(Atoms::merged(d, points, weights))
    }

    /// In d = 1: the largest total mass of `len` consecutive lattice points,
    /// and the index of the first one.
    pub fn max_consecutive(&self, len: usize) -> (f64, i64) {
        assert_eq!(self.dim(), 1);
        let n = self.masses.len();
        let len = len.min(n).max(1);
        let mut run: f64 = self.masses[..len].iter().sum();
        let (mut best, mut best_start) = (run, 0usize);
        for s in 1..=n - len {
            run += self.masses[s + len - 1] - self.masses[s - 1];
            if run > best {
                best = run;
                best_start = s;
            }
        }
        // re-sum the winner without running-sum drift
        let exact = compensated_sum(self.masses[best_start..best_start + len].iter().copied());
        (exact.clamp(0.0, 1.0), best_start as i64 - self.radius[0])
    }
}

/// Poisson `pmf(k)` for `k = 0..=kmax`, computed in log space.
fn poisson_pmf(rate: f64, kmax: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax + 1);
    let mut lp = -rate;
    for k in 0..=kmax {
        if k > 0 {
            lp += rate.ln() - (k as f64).ln();
        }
        out.push(lp.exp());
    }
    out
}

/// Smallest `K` with `P(Poisson(rate) > K) <= target`, and that tail bound.
fn poisson_cutoff(rate: f64, target: f64) -> (usize, f64) {
    let mut lp = -rate;
    let mut k = 0usize;
    loop {
        // P(J > k) <= pmf(k+1) / (1 - rate/(k+2)) once k + 2 > rate
        let next = lp + rate.ln() - ((k + 1) as f64).ln();
        let ratio = rate / (k + 2) as f64;
        if ratio < 1.0 {
            let bound = next.exp() / (1.0 - ratio);
            if bound <= target {
                return (k, bound);
            }
        }
        lp = next;
        k += 1;
    }
}

/// Integer jump sizes and weights of a lattice Lévy measure.
fn integer_levy(spec: &CompoundPoissonSpec) -> Result<(Lattice, Vec<(Vec<i64>, f64)>)> {
    let levy = spec.levy();
    let d = levy.dim();
    let lattice = detect_lattice(d, &levy.iter().map(|(x, _)| x).collect::<Vec<_>>())
        .ok_or(Error::NonLattice)?;
    let jumps = levy
        .iter()
        .map(|(x, w)| lattice.index(x).map(|k| (k, *w)).ok_or(Error::NonLattice))
        .collect::<Result<Vec<_>>>()?;
    Ok((lattice, jumps))
}

fn fft_nd(buf: &mut [Complex64], dims: &[usize], planner: &mut FftPlanner<f64>) {
    match dims {
        [n] => planner.plan_fft_forward(*n).process(buf),
        [n1, n2] => {
            let row = planner.plan_fft_forward(*n2);
            for r in buf.chunks_mut(*n2) {
                row.process(r);
            }
            let col = planner.plan_fft_forward(*n1);
            let mut tmp = vec![Complex64::new(0.0, 0.0); *n1];
            for c in 0..*n2 {
                for r in 0..*n1 {
                    tmp[r] = buf[r * n2 + c];
                }
                col.process(&mut tmp);
                for r in 0..*n1 {
                    buf[r * n2 + c] = tmp[r];
                }
            }
        }
        _ => unreachable!("fft dimension checked by caller"),
    }
}

/// Law of a lattice compound Poisson distribution, by FFT inversion of its
/// characteristic function on a grid wide enough that only paths with more
/// than `J*` jumps can wrap around, where `P(J > J*) <= tol / 10`.
pub fn lattice_law(spec: &CompoundPoissonSpec, tol: f64) -> Result<LatticeLaw> {
    let d = spec.dim();
    if d > 2 {
        return Err(Error::invalid("lattice inversion supports d <= 2"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol must be positive"));
    }
    let (lattice, jumps) = integer_levy(spec)?;
    let rate = compensated_sum(jumps.iter().map(|(_, w)| *w));
    if rate == 0.0 {
        return Ok(LatticeLaw {
            lattice,
            radius: vec![0; d],
            masses: vec![1.0],
            aliasing_bound: 0.0,
        });
    }
    let (jmax, aliasing_bound) = poisson_cutoff(rate, (tol / 10.0).max(1e-16));
    let mut radius = Vec::with_capacity(d);
    let mut dims = Vec::with_capacity(d);
    let mut grid = 1usize;
    for j in 0..d {
        let kmax = jumps
            .iter()
            .map(|(k, _)| k[j].unsigned_abs())
            .max()
            .unwrap_or(0) as usize;
        let r = jmax.saturating_mul(kmax);
        let n = (2 * r + 1).next_power_of_two();
        grid = grid.saturating_mul(n);
        if grid > MAX_GRID {
            return Err(Error::AtomCap {
                needed: grid,
                cap: MAX_GRID,
            });
        }
        radius.push(r as i64);
        dims.push(n);
    }
    let wrap = |k: &[i64]| -> usize {
        k.iter().zip(&dims).fold(0usize, |acc, (&i, &n)| {
            acc * n + i.rem_euclid(n as i64) as usize
        })
    };
    // exponent psi(t) = sum_k w_k cos<k,t> - Lambda, itself a DFT of the jump weights
    let mut buf = vec![Complex64::new(0.0, 0.0); grid];
    for (k, w) in &jumps {
        buf[wrap(k)] += Complex64::new(*w, 0.0);
    }
    let mut planner = FftPlanner::new();
    fft_nd(&mut buf, &dims, &mut planner);
    for v in buf.iter_mut() {
        *v = Complex64::new((v.re - rate).min(0.0).exp(), 0.0);
    }
    fft_nd(&mut buf, &dims, &mut planner);
    let scale = 1.0 / grid as f64;
    let widths: Vec<usize> = radius.iter().map(|r| 2 * *r as usize + 1).collect();
    let total: usize = widths.iter().product();
    let mut masses = Vec::with_capacity(total);
    let mut k = vec![0i64; d];
    for off in 0..total {
        let mut rem = off;
        for j in (0..d).rev() {
            k[j] = (rem % widths[j]) as i64 - radius[j];
            rem /= widths[j];
        }
        masses.push(buf[wrap(&k)].re * scale);
    }
    Ok(LatticeLaw {
        lattice,
        radius,
        masses,
        aliasing_bound,
    })
}

/// Mass of the lattice compound Poisson law at the point `k` (0 off the lattice).
pub fn lattice_inversion(spec: &CompoundPoissonSpec, k: &[f64], tol: f64) -> Result<f64> {
    if k.len() != spec.dim() {
        return Err(Error::invalid("point dimension mismatch"));
    }
    let law = lattice_law(spec, tol)?;
    Ok(law
        .lattice
        .index(k)
        .map_or(0.0, |idx| law.mass_at_index(&idx)))
}

/// `D = sum_k e^{-Lambda} Lambda^k / k! W^{*k}` truncated once the Poisson
/// tail is below `tail_tol`; the truncated law is renormalized.
pub fn compound_poisson_exact(
    spec: &CompoundPoissonSpec,
    tail_tol: f64,
) -> Result<DiscreteDistribution<f64>> {
    compound_poisson_exact_capped(spec, tail_tol, DEFAULT_ATOM_CAP)
}

pub fn compound_poisson_exact_capped(
    spec: &CompoundPoissonSpec,
    tail_tol: f64,
    cap: usize,
) -> Result<DiscreteDistribution<f64>> {
    if !(tail_tol > 0.0) {
        return Err(Error::invalid("tail_tol must be positive"));
    }
    let d = spec.dim();
    let rate = spec.rate();
    if rate == 0.0 {
        return Ok(DiscreteDistribution::point_mass(vec![0.0; d]));
    }
    let w = spec.base()?;
    let (kmax, _) = poisson_cutoff(rate, tail_tol);
    let pmf = poisson_pmf(rate, kmax);
    let mut power = DiscreteDistribution::point_mass(vec![0.0; d]);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (k, p) in pmf.iter().enumerate() {
        if k > 0 {
            power = power.convolve(&w, cap)?;
        }
        for (x, m) in power.iter() {
            points.extend_from_slice(x);
            weights.push(m * p);
        }
        if weights.len() > cap.saturating_mul(16) {
            return Err(Error::AtomCap {
                needed: weights.len(),
                cap,
            });
        }
    }
    let merged = Atoms::merged(d, points, weights);
    if merged.len() > cap {
        return Err(Error::AtomCap {
            needed: merged.len(),
            cap,
        });
    }
    let total = merged.total();
    Ok(DiscreteDistribution::from_atoms_unchecked(
        merged.map_weights(|m| m / total),
    ))
}
