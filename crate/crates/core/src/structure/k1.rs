//! Greedy signed cubes `K_1(u)` covering a measure coordinatewise.

use rayon::prelude::*;

use crate::charfn::{compound_poisson_exact, p_of};
use crate::concentration::concentration;
use crate::error::{Error, Result};
use crate::measures::{
    CoefficientVector, CompoundPoissonSpec, DiscreteDistribution, SpectralMeasure, DEFAULT_ATOM_CAP,
};
use crate::progressions::{Progression, SignedCube, MAX_RANK};
use crate::scalar::Scalar;

use super::detect::coordinate_q;
use super::{log_ratio, BoundTarget, CoordinateDetail, StructureReport};

#[derive(Clone, Debug, PartialEq)]
pub struct K1Config {
    /// Multiplies `|log q_j| + log(tau_j/delta_j) + 1` in the rank cap.
    pub rank_constant: f64,
    /// Stands in for the unknown constants of the asserted bounds.
    pub calibration_c: f64,
    /// Per-coordinate rank ceiling.
    pub max_rank: usize,
    pub support_cap: usize,
    /// Poisson tail left out of the compound laws.
    pub tail_tol: f64,
}

impl Default for K1Config {
    fn default() -> Self {
        K1Config {
            rank_constant: 2.0,
            calibration_c: 1.0,
            max_rank: MAX_RANK,
            support_cap: DEFAULT_ATOM_CAP,
            tail_tol: 1e-12,
        }
    }
}

fn near<T: Scalar>(x: &T, sorted: &[T], delta: &T) -> bool {
    let i = sorted.partition_point(|p| p < x);
    [i.checked_sub(1), Some(i)]
        .into_iter()
        .flatten()
        .filter_map(|k| sorted.get(k))
        .any(|p| (x.clone() - p.clone()).abs() <= delta.clone() + T::slack(x))
}

fn sorted_dedup<T: Scalar>(mut v: Vec<T>) -> Vec<T> {
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup_by(|a, b| a.approx_eq(b));
    v
}

/// Greedy `u` for one coordinate: each new element maximizes the newly
/// covered mass within `delta` of `K_1(u)`; ties go to the smaller element.
/// Returns `u` and the sorted points of `K_1(u)`.
fn grow<T: Scalar>(atoms: &[(T, T)], delta: &T, cap: usize) -> (Vec<T>, Vec<T>) {
    let mut u: Vec<T> = Vec::new();
    let mut k: Vec<T> = vec![T::zero()];
    let two = T::from_i64(2);
    while u.len() < cap {
        let residual: Vec<&(T, T)> = atoms.iter().filter(|(x, _)| !near(x, &k, delta)).collect();
        if residual.is_empty() {
            break;
        }
        let mut cands = Vec::new();
        for (x, _) in &residual {
            let ax = x.abs();
            cands.push(ax.clone());
            cands.push(ax.clone() / two.clone());
            for p in &k {
                cands.push((ax.clone() - p.clone()).abs());
            }
        }
        let cands: Vec<T> = sorted_dedup(cands)
            .into_iter()
            .filter(|c| *c > T::slack(c))
            .collect();
        let gains: Vec<T> = cands
            .par_iter()
            .map(|c| {
                let mut g = T::zero();
                for (x, w) in &residual {
                    if near(&(x.clone() - c.clone()), &k, delta)
                        || near(&(x.clone() + c.clone()), &k, delta)
                    {
                        g = g + w.clone();
                    }
                }
                g
            })
            .collect();
        let mut best: Option<usize> = None;
        for (i, g) in gains.iter().enumerate() {
            if *g > T::zero() && best.map_or(true, |b| *g > gains[b]) {
                best = Some(i);
            }
        }
        let Some(b) = best else { break };
        let c = cands[b].clone();
        let mut next = Vec::with_capacity(3 * k.len());
        for p in &k {
            next.push(p.clone() - c.clone());
            next.push(p.clone());
            next.push(p.clone() + c.clone());
        }
        k = sorted_dedup(next);
        u.push(c);
    }
    (u, k)
}

struct Input<'a, T> {
    kind: &'static str,
    /// Atoms of the measure being covered.
    atoms: Vec<(Vec<T>, T)>,
    factor: f64,
    factor_kind: &'static str,
    gammas: Vec<f64>,
    tau: &'a [T],
    delta: &'a [T],
    /// Points whose coverage defines `covered`/`outliers` (coefficients or atoms).
    items: Vec<Vec<T>>,
}

fn check_radii<T: Scalar>(tau: &[T], delta: &[T], d: usize) -> Result<()> {
    if tau.len() != d || delta.len() != d {
        return Err(Error::invalid(format!("tau and delta need {d} entries")));
    }
    for (t, s) in tau.iter().zip(delta) {
        if !(t.is_finite() && s.is_finite() && *s >= T::zero() && *t >= *s) {
            return Err(Error::invalid("need tau_j >= delta_j >= 0"));
        }
    }
    Ok(())
}

fn build<T: Scalar>(input: Input<'_, T>, cfg: &K1Config) -> Result<StructureReport<T>> {
    let d = input.tau.len();
    let terms: Vec<f64> = (0..d)
        .map(|j| {
            input.gammas[j].ln().abs()
                + log_ratio(input.tau[j].to_f64(), input.delta[j].to_f64())
                + 1.0
        })
        .collect();
    let caps: Vec<usize> = terms
        .iter()
        .map(|t| {
            let c = (cfg.rank_constant * t).ceil();
            if c.is_finite() {
                (c as usize).clamp(1, cfg.max_rank)
            } else {
                cfg.max_rank
            }
        })
        .collect();
    let grown: Vec<(Vec<T>, Vec<T>)> = (0..d)
        .into_par_iter()
        .map(|j| {
            let proj: Vec<(T, T)> = input
                .atoms
                .iter()
                .map(|(p, w)| (p[j].clone(), w.clone()))
                .collect();
            grow(&proj, &input.delta[j], caps[j])
        })
        .collect();
    let inside = |p: &[T]| (0..d).all(|j| near(&p[j], &grown[j].1, &input.delta[j]));
    let residual: f64 = input.factor
        * crate::scalar::compensated_sum(
            input
                .atoms
                .iter()
                .filter(|(p, _)| !inside(p))
                .map(|(_, w)| w.to_f64()),
        );
    let outliers: Vec<usize> = (0..input.items.len())
        .filter(|&i| !inside(&input.items[i]))
        .collect();
    let mut gens = Vec::new();
    for (j, (u, _)) in grown.iter().enumerate() {
        for c in u {
            let mut g = vec![T::zero(); d];
            g[j] = c.clone();
            gens.push(g);
        }
    }
    let cube = SignedCube::new(gens, d)?;
    let rank = cube.rank();
    let coordinates: Vec<CoordinateDetail> = (0..d)
        .map(|j| {
            let lost = input
                .atoms
                .iter()
                .filter(|(p, _)| !near(&p[j], &grown[j].1, &input.delta[j]));
            CoordinateDetail {
                q: input.gammas[j],
                cap: caps[j],
                size: grown[j].0.len(),
                generators: grown[j].0.iter().map(Scalar::to_f64).collect(),
                outliers: input
                    .items
                    .iter()
                    .filter(|p| !near(&p[j], &grown[j].1, &input.delta[j]))
                    .count(),
                residual_mass: input.factor
                    * crate::scalar::compensated_sum(lost.map(|(_, w)| w.to_f64())),
                truncated: false,
            }
        })
        .collect();
    let c = cfg.calibration_c;
    let sum1: f64 = terms.iter().sum();
    let sum3: f64 = terms.iter().map(|t| t.powi(3)).sum();
    let bound_targets = vec![
        BoundTarget::at_most("rank", rank as f64, c * sum1, c),
        BoundTarget::at_most("residual_mass", residual, c * sum3, c),
    ];
    Ok(StructureReport {
        kind: input.kind.into(),
        volume: 3u128.saturating_pow(rank as u32),
        rank,
        n: input.items.len(),
        covered: input.items.len() - outliers.len(),
        outliers,
        residual_mass: residual,
        factor: input.factor,
        factor_kind: input.factor_kind.into(),
        degenerate: input.factor == 0.0,
        coordinates,
        bound_targets,
        progression: Progression::Cube(cube),
    })
}

/// Signed cube covering `M*` of `a` coordinatewise within `delta_j`. The
/// residual is weighted by `p(1)`, or by `p(0)` when every `tau_j` is zero.
pub fn k1_structure_report<T: Scalar>(
    a: &CoefficientVector<T>,
    x: &DiscreteDistribution<T>,
    tau: &[T],
    delta: &[T],
    cfg: &K1Config,
) -> Result<StructureReport<T>> {
    let d = a.dim();
    check_radii(tau, delta, d)?;
    let all_zero = tau.iter().all(|t| t.is_zero());
    let (radius, factor_kind) = if all_zero {
        (T::zero(), "p(0)")
    } else {
        (T::one(), "p(1)")
    };
    let factor = p_of(x, &radius)?.to_f64();
    let gammas: Vec<f64> = (0..d)
        .into_par_iter()
        .map(|j| coordinate_q(&a.coordinate(j)?, x, &tau[j], cfg.support_cap))
        .collect::<Result<_>>()?;
    let m_star = SpectralMeasure::symmetric_from_coefficients(a);
    let atoms = m_star
        .iter()
        .map(|(p, w)| (p.to_vec(), w.clone()))
        .collect();
    let items = a.entries().map(<[T]>::to_vec).collect();
    build(
        Input {
            kind: "k1",
            atoms,
            factor,
            factor_kind,
            gammas,
            tau,
            delta,
            items,
        },
        cfg,
    )
}

/// Signed cube covering the Lévy measure of `exp{alpha (W - E)}`, with
/// `gamma_j` the concentration of its coordinate laws.
pub fn k1_report_compound(
    spec: &CompoundPoissonSpec,
    tau: &[f64],
    delta: &[f64],
    cfg: &K1Config,
) -> Result<StructureReport<f64>> {
    let d = spec.dim();
    check_radii(tau, delta, d)?;
    let gammas: Vec<f64> = (0..d)
        .map(|j| {
            let law = compound_poisson_exact(&spec.project(j)?, cfg.tail_tol)?;
            Ok(concentration(&law, &tau[j])?.value())
        })
        .collect::<Result<_>>()?;
    let atoms: Vec<(Vec<f64>, f64)> = spec.levy().iter().map(|(p, w)| (p.to_vec(), *w)).collect();
    let items = atoms.iter().map(|(p, _)| p.clone()).collect();
    build(
        Input {
            kind: "k1_compound",
            atoms,
            factor: 1.0,
            factor_kind: "levy",
            gammas,
            tau,
            delta,
            items,
        },
        cfg,
    )
}

/// Signed cube covering `n F`, with `gamma_j` the concentration of the
/// `n`-fold convolution of the coordinate laws.
pub fn k1_report_power<T: Scalar>(
    f: &DiscreteDistribution<T>,
    n: usize,
    tau: &[T],
    delta: &[T],
    cfg: &K1Config,
) -> Result<StructureReport<T>> {
    let d = f.dim();
    check_radii(tau, delta, d)?;
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let gammas: Vec<f64> = (0..d)
        .map(|j| {
            let fj = f.project(j)?;
            let mut acc = DiscreteDistribution::point_mass(vec![T::zero()]);
            let mut base = fj;
            let mut e = n;
            while e > 0 {
                if e & 1 == 1 {
                    acc = acc.convolve(&base, cfg.support_cap)?;
                }
                e >>= 1;
                if e > 0 {
                    base = base.convolve(&base, cfg.support_cap)?;
                }
            }
            Ok(concentration(&acc, &tau[j])?.value().to_f64())
        })
        .collect::<Result<_>>()?;
    let atoms: Vec<(Vec<T>, T)> = f.iter().map(|(p, w)| (p.to_vec(), w.clone())).collect();
    let items = atoms.iter().map(|(p, _)| p.clone()).collect();
    build(
        Input {
            kind: "k1_power",
            atoms,
            factor: n as f64,
            factor_kind: "n",
            gammas,
            tau,
            delta,
            items,
        },
        cfg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rat;

    fn r(n: i128) -> Rat {
        Rat::from_integer(n)
    }

    #[test]
    fn equal_entries_need_one_generator() {
        let a = CoefficientVector::from_scalars(vec![r(7); 5]).unwrap();
        let x = DiscreteDistribution::<Rat>::rademacher();
        let rep = k1_structure_report(&a, &x, &[r(1)], &[r(1)], &K1Config::default()).unwrap();
        assert_eq!(rep.rank, 1);
        assert_eq!(rep.progression.generators()[0], vec![r(7)]);
        assert_eq!(rep.residual_mass, 0.0);
        assert!(rep.satisfied());
    }

    #[test]
    fn odd_pattern_uses_one_and_two() {
        let a =
            CoefficientVector::from_scalars(vec![r(1), r(-1), r(3), r(-3), r(1), r(3)]).unwrap();
        let x = DiscreteDistribution::<Rat>::rademacher();
        let rep = k1_structure_report(&a, &x, &[r(0)], &[r(0)], &K1Config::default()).unwrap();
        assert_eq!(rep.residual_mass, 0.0);
        assert_eq!(rep.rank, 2);
        let pts = rep.progression.points(100).unwrap();
        for v in [-3, -1, 1, 3] {
            assert!(pts.contains(&[r(v)]));
        }
        assert_eq!(rep.factor_kind, "p(0)");
    }

    #[test]
    fn degenerate_when_p_vanishes() {
        let a = CoefficientVector::from_scalars(vec![r(1), r(5)]).unwrap();
        let x = DiscreteDistribution::<Rat>::from_scalar_atoms(vec![
            (Rat::new(-1, 4), Rat::new(1, 2)),
            (Rat::new(1, 4), Rat::new(1, 2)),
        ])
        .unwrap();
        let rep =
            k1_structure_report(&a, &x, &[r(1)], &[Rat::new(1, 2)], &K1Config::default()).unwrap();
        assert!(rep.degenerate);
        assert_eq!(rep.residual_mass, 0.0);
        assert!(rep.target("residual_mass").unwrap().satisfied);
    }

    #[test]
    fn compound_and_power_variants() {
        let w = DiscreteDistribution::from_scalar_atoms(vec![
            (-2.0, 0.25),
            (2.0, 0.25),
            (-1.0, 0.25),
            (1.0, 0.25),
        ])
        .unwrap();
        let spec = CompoundPoissonSpec::from_alpha_base(3.0, &w).unwrap();
        let rep = k1_report_compound(&spec, &[0.5], &[0.5], &K1Config::default()).unwrap();
        assert_eq!(rep.residual_mass, 0.0);
        assert!(rep.rank <= 2);
        let rep = k1_report_power(&w, 4, &[0.0], &[0.0], &K1Config::default()).unwrap();
        assert_eq!(rep.residual_mass, 0.0);
        assert_eq!(rep.factor, 4.0);
    }

    #[test]
    fn rejects_bad_radii() {
        let a = CoefficientVector::from_scalars(vec![1.0]).unwrap();
        let x = DiscreteDistribution::rademacher();
        assert!(k1_structure_report(&a, &x, &[0.5], &[1.0], &K1Config::default()).is_err());
        assert!(
            k1_structure_report(&a, &x, &[1.0, 1.0], &[1.0, 1.0], &K1Config::default()).is_err()
        );
    }
}
