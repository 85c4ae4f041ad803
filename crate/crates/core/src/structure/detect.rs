//! Coordinatewise progression detector for coefficient vectors with large
//! concentration.

use rayon::prelude::*;

use crate::charfn::p_of;
use crate::concentration::{concentration, exact_sum_distribution};
use crate::error::{Error, Result};
use crate::measures::{CoefficientVector, DiscreteDistribution, DEFAULT_ATOM_CAP};
use crate::progressions::{product, Progression};
use crate::scalar::Scalar;

use super::fit::{fit_smallest, Fit, DEFAULT_STEP_BUDGET};
use super::{BoundTarget, CoordinateDetail, StructureReport};

#[derive(Clone, Debug, PartialEq)]
pub struct DetectConfig {
    /// Stands in for the unknown absolute constant.
    pub calibration_c: f64,
    /// Rank parameter `r` in the volume cap.
    pub r: usize,
    /// Hard cap on the per-coordinate volume.
    pub m_cap: usize,
    pub step_budget: usize,
    pub support_cap: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            calibration_c: 1.0,
            r: 1,
            m_cap: 101,
            step_budget: DEFAULT_STEP_BUDGET,
            support_cap: DEFAULT_ATOM_CAP,
        }
    }
}

/// `Q` of the law of `sum_k X_k a_kj` at radius `tau`.
pub(super) fn coordinate_q<T: Scalar>(
    coord: &[T],
    x: &DiscreteDistribution<T>,
    tau: &T,
    cap: usize,
) -> Result<f64> {
    if coord.iter().all(|c| c.is_zero()) {
        return Ok(1.0);
    }
    let a = CoefficientVector::from_scalars(coord.to_vec())?;
    let f = exact_sum_distribution(&a, x, cap)?;
    Ok(concentration(&f, tau)?.value().to_f64())
}

/// Volume cap `floor(4 c^{r+1} / (rho q sqrt(p n'/4))) + 1`, clipped to `m_cap`.
fn volume_cap(c: f64, r: usize, rho: f64, q: f64, p1: f64, n_prime: usize, m_cap: usize) -> usize {
    let y = 4.0 * c.powi(r as i32 + 1) / (rho * q * (p1 * n_prime as f64 / 4.0).sqrt());
    if y.is_finite() && y < m_cap as f64 {
        y.floor() as usize + 1
    } else {
        m_cap
    }
}

/// Fits to each coordinate of `a`, at tolerance `tau rho`, the shortest
/// progression within the volume cap missing at most `n_prime` values, and
/// returns their product. Every generator has a single nonzero coordinate.
pub fn inverse_detect<T: Scalar>(
    a: &CoefficientVector<T>,
    x: &DiscreteDistribution<T>,
    tau: &T,
    rho: &T,
    n_prime: usize,
    config: &DetectConfig,
) -> Result<StructureReport<T>> {
    if *tau < T::zero() || !tau.is_finite() {
        return Err(Error::invalid("tau must be finite and nonnegative"));
    }
    if !(*rho > T::zero() && *rho <= T::one()) {
        return Err(Error::invalid("rho must lie in (0, 1]"));
    }
    if !(config.calibration_c > 0.0) || config.m_cap == 0 {
        return Err(Error::invalid(
            "calibration constant and m_cap must be positive",
        ));
    }
    let d = a.dim();
    let n = a.n();
    let tol = tau.clone() * rho.clone();
    let p1 = p_of(x, &T::one())?.to_f64();
    let rho_f = rho.to_f64();
    let coords: Vec<Vec<T>> = (0..d).map(|j| a.coordinate(j)).collect::<Result<_>>()?;
    let fits: Vec<(f64, usize, Fit<T>)> = coords
        .par_iter()
        .map(|coord| {
            let q = coordinate_q(coord, x, tau, config.support_cap)?;
            let cap = volume_cap(
                config.calibration_c,
                config.r,
                rho_f,
                q,
                p1,
                n_prime,
                config.m_cap,
            );
            let fit = fit_smallest(coord, &tol, cap, n_prime, config.step_budget)?;
            Ok((q, cap, fit))
        })
        .collect::<Result<_>>()?;
    let parts: Vec<Progression<T>> = fits
        .iter()
        .map(|(_, _, f)| Progression::Cgap(f.progression.clone()))
        .collect();
    let progression = product(&parts)?;
    let mut outliers = Vec::new();
    for k in 0..n {
        let e = a.entry(k);
        if !fits.iter().zip(e).all(|((_, _, f), v)| f.covers(v, &tol)) {
            outliers.push(k);
        }
    }
    let volume: u128 = fits.iter().map(|(_, _, f)| f.volume() as u128).product();
    let coordinates: Vec<CoordinateDetail> = fits
        .iter()
        .map(|(q, cap, f)| CoordinateDetail {
            q: *q,
            cap: *cap,
            size: f.half_length,
            generators: vec![f.step.to_f64()],
            outliers: f.outliers.len(),
            residual_mass: f.outliers.len() as f64,
            truncated: f.truncated,
        })
        .collect();
    let c = config.calibration_c;
    let card_rhs: f64 = fits
        .iter()
        .map(|(q, _, _)| (c / (q * rho_f * (n_prime as f64).sqrt())).max(1.0))
        .product();
    let covered = n - outliers.len();
    let bound_targets = vec![
        BoundTarget::at_most("cardinality", volume as f64, card_rhs, c),
        BoundTarget::at_least("coverage", covered as f64, n as f64 - (d * n_prime) as f64),
    ];
    Ok(StructureReport {
        kind: "inverse_detect".into(),
        rank: progression.rank(),
        volume,
        n,
        covered,
        residual_mass: outliers.len() as f64,
        outliers,
        factor: p1,
        factor_kind: "p(1)".into(),
        degenerate: p1 == 0.0,
        coordinates,
        bound_targets,
        progression,
    })
}
