//! `Q(H_1^lambda, kappa)` and the right-hand side built from it.

use serde::Serialize;

use super::lattice::lattice_law;
use super::quadrature::esseen_integral;
use crate::concentration::{concentration, regularity_factor};
use crate::error::{Error, Result};
use crate::measures::{
    CoefficientVector, CompoundPoissonSpec, DiscreteDistribution, Radius, DEFAULT_ATOM_CAP,
};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QhPath {
    /// `lambda = 0`: `H` is the point mass at 0.
    Degenerate,
    /// Exact window sum over FFT-inverted lattice masses (d = 1).
    Lattice,
    /// Lattice masses, then the d >= 2 concentration bracket.
    LatticeBracket,
    /// Esséen functional `kappa^d int_{|t|<=1/kappa} H^(t) dt` as a surrogate.
    Esseen,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QhResult {
    pub value: f64,
    /// Numerical error bound on `value` for the path taken.
    pub error: f64,
    pub path: QhPath,
    /// Certified bracket on the lattice-bracket path.
    pub bracket: Option<(f64, f64)>,
}

/// `p(delta) = G{|z| > delta}` where `G` is the law of `X1 - X2`.
pub fn p_of<T: Scalar>(x: &DiscreteDistribution<T>, delta: &T) -> Result<T> {
    if *delta < T::zero() {
        return Err(Error::invalid("delta must be nonnegative"));
    }
    let g = x.symmetrize(DEFAULT_ATOM_CAP)?;
    Ok(g.tail_mass(&Radius::Finite(delta.clone())))
}

/// `Q(H_1^lambda, kappa)`: exact through lattice inversion when the
/// coefficients share a scaled integer lattice, else the Esséen surrogate.
pub fn q_of_h(a: &CoefficientVector<f64>, lambda: f64, kappa: f64, tol: f64) -> Result<QhResult> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid("lambda must lie in [0, 1]"));
    }
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::invalid("kappa must be positive and finite"));
    }
    if lambda == 0.0 {
        return Ok(QhResult {
            value: 1.0,
            error: 0.0,
            path: QhPath::Degenerate,
            bracket: None,
        });
    }
    let spec = CompoundPoissonSpec::h_measure(a, lambda, 1.0)?;
    match lattice_law(&spec, tol) {
        Ok(law) if law.dim() == 1 => {
            let h = law.lattice.steps[0];
            let len = ((kappa / h) * (1.0 + 1e-12)).floor() as usize + 1;
            let (value, _) = law.max_consecutive(len);
            let error = law.aliasing_bound + 1e-13;
            Ok(QhResult {
                value,
                error,
                path: QhPath::Lattice,
                bracket: None,
            })
        }
        Ok(law) => {
            let dist = law.to_distribution(0.0);
            let q = concentration(&dist, &kappa)?;
            let error = law.aliasing_bound + 1e-13;
            Ok(QhResult {
                value: q.lower,
                error,
                path: QhPath::LatticeBracket,
                bracket: Some((q.lower, q.upper)),
            })
        }
        Err(Error::NonLattice) | Err(Error::AtomCap { .. }) => {
            let est = esseen_integral(&spec, kappa, tol)?;
            Ok(QhResult {
                value: est.value,
                error: est.quadrature_error,
                path: QhPath::Esseen,
                bracket: None,
            })
        }
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorollaryRhs {
    pub value: f64,
    pub factor: u128,
    pub p: f64,
    pub q: QhResult,
}

/// `(1 + floor(kappa/delta))^d Q(H_1^{p(tau/kappa)}, delta)` with the strict floor.
pub fn corollary_rhs(
    a: &CoefficientVector<f64>,
    x: &DiscreteDistribution<f64>,
    tau: f64,
    kappa: f64,
    delta: f64,
    tol: f64,
) -> Result<CorollaryRhs> {
    if !(kappa > 0.0) || !(delta > 0.0) || !(tau >= 0.0) {
        return Err(Error::invalid("need kappa, delta > 0 and tau >= 0"));
    }
    let p = p_of(x, &(tau / kappa))?.clamp(0.0, 1.0);
    let factor = regularity_factor(&kappa, &delta, a.dim())?;
    let q = q_of_h(a, p, delta, tol)?;
    Ok(CorollaryRhs {
        value: factor as f64 * q.value,
        factor,
        p,
        q,
    })
}
