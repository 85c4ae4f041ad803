//! Characteristic functions, Esséen integrals, lattice inversion and exact
//! compound Poisson laws.

mod lattice;
mod qh;
mod quadrature;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::measures::{CompoundPoissonSpec, DiscreteDistribution};
use crate::scalar::compensated_sum;

pub use lattice::{
    compound_poisson_exact, detect_lattice, lattice_inversion, lattice_law, Lattice, LatticeLaw,
};
pub use qh::{corollary_rhs, p_of, q_of_h, CorollaryRhs, QhPath, QhResult};
pub use quadrature::{esseen_integral, esseen_integral_with, EsseenEstimate, DEFAULT_PANEL_BUDGET};

pub const CHARFN_SCHEMA: &str = "charfn/v1";

/// Anything with a characteristic function on `R^d`.
pub trait CharacteristicFunction: Sync {
    fn dim(&self) -> usize;

    /// `E exp(i <t, Y>)`.
    fn cf(&self, t: &[f64]) -> Complex64;

    /// `max |x_j|` over the support, per coordinate; sets the oscillation scale.
    fn frequency_bounds(&self) -> Vec<f64>;

    /// Modulus of the characteristic function; real-valued laws may override.
    fn cf_abs(&self, t: &[f64]) -> f64 {
        self.cf(t).norm()
    }
}

fn dot(t: &[f64], x: &[f64]) -> f64 {
    t.iter().zip(x).map(|(a, b)| a * b).sum()
}

fn coordinate_bounds<'a>(dim: usize, points: impl Iterator<Item = &'a [f64]>) -> Vec<f64> {
    let mut out = vec![0.0f64; dim];
    for p in points {
        for (o, x) in out.iter_mut().zip(p) {
            *o = o.max(x.abs());
        }
    }
    out
}

impl CharacteristicFunction for DiscreteDistribution<f64> {
    fn dim(&self) -> usize {
        DiscreteDistribution::dim(self)
    }

    fn cf(&self, t: &[f64]) -> Complex64 {
        let re = compensated_sum(self.iter().map(|(x, m)| m * dot(t, x).cos()));
        let im = compensated_sum(self.iter().map(|(x, m)| m * dot(t, x).sin()));
        Complex64::new(re, im)
    }

    fn frequency_bounds(&self) -> Vec<f64> {
        coordinate_bounds(self.dim(), self.iter().map(|(x, _)| x))
    }
}

impl CharacteristicFunction for CompoundPoissonSpec {
    fn dim(&self) -> usize {
        CompoundPoissonSpec::dim(self)
    }

    fn cf(&self, t: &[f64]) -> Complex64 {
        Complex64::new(self.cf_real(t), 0.0)
    }

    fn frequency_bounds(&self) -> Vec<f64> {
        coordinate_bounds(self.dim(), self.levy().iter().map(|(x, _)| x))
    }

    fn cf_abs(&self, t: &[f64]) -> f64 {
        self.cf_real(t)
    }
}

impl CompoundPoissonSpec {
    /// `exp( -sum_x L{x} (1 - cos<t,x>) )`, with `1 - cos` taken as `2 sin^2`.
    pub fn cf_real(&self, t: &[f64]) -> f64 {
        let e = compensated_sum(self.levy().iter().map(|(x, w)| {
            let s = (0.5 * dot(t, x)).sin();
            2.0 * w * s * s
        }));
        (-e).exp()
    }
}

/// `F^(z t)`; `z` defaults to 1. For `H_1^lambda` this is `H_z^lambda`.
pub fn cf_eval<C: CharacteristicFunction + ?Sized>(
    obj: &C,
    t: &[f64],
    z: Option<f64>,
) -> Complex64 {
    match z {
        None => obj.cf(t),
        Some(z) => {
            let zt: Vec<f64> = t.iter().map(|v| v * z).collect();
            obj.cf(&zt)
        }
    }
}

/// Slack in `|W^(t)| <= exp(-(1 - |W^(t)|^2)/2)`; nonnegative when it holds.
pub fn cf_modulus_slack<C: CharacteristicFunction + ?Sized>(w: &C, t: &[f64]) -> f64 {
    let r = w.cf(t).norm().min(1.0);
    (-(1.0 - r * r) / 2.0).exp() - r
}

/// Which object a CLI or config refers to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CfObject {
    Compound(CompoundPoissonSpec),
    Discrete(DiscreteDistribution<f64>),
}

impl CharacteristicFunction for CfObject {
    fn dim(&self) -> usize {
        match self {
            CfObject::Compound(c) => CharacteristicFunction::dim(c),
            CfObject::Discrete(d) => CharacteristicFunction::dim(d),
        }
    }

    fn cf(&self, t: &[f64]) -> Complex64 {
        match self {
            CfObject::Compound(c) => c.cf(t),
            CfObject::Discrete(d) => d.cf(t),
        }
    }

    fn frequency_bounds(&self) -> Vec<f64> {
        match self {
            CfObject::Compound(c) => c.frequency_bounds(),
            CfObject::Discrete(d) => d.frequency_bounds(),
        }
    }

    fn cf_abs(&self, t: &[f64]) -> f64 {
        match self {
            CfObject::Compound(c) => c.cf_abs(t),
            CfObject::Discrete(d) => d.cf_abs(t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::CoefficientVector;
    use std::f64::consts::PI;

    fn h(a: &[f64], lambda: f64, z: f64) -> CompoundPoissonSpec {
        CompoundPoissonSpec::h_measure(
            &CoefficientVector::from_scalars(a.to_vec()).unwrap(),
            lambda,
            z,
        )
        .unwrap()
    }

    #[test]
    fn h_cf_examples() {
        let spec = h(&[1.0], 1.0, 1.0);
        assert!((cf_eval(&spec, &[0.0], None).re - 1.0).abs() < 1e-15);
        assert!((cf_eval(&spec, &[PI], None).re - (-1.0f64).exp()).abs() < 1e-12);
        let spec = h(&[1.0, 2.5, -3.0], 1.0, 0.7);
        for t in [0.3, 1.1, 4.0] {
            let a = cf_eval(&spec, &[t], None);
            let b = cf_eval(&spec, &[-t], None);
            assert_eq!(a, b);
            assert!(a.re > 0.0 && a.re <= 1.0 && a.im == 0.0);
        }
    }

    #[test]
    fn dilation_parameter_matches_dilated_spec() {
        let base = h(&[1.0, 2.0], 1.0, 1.0);
        let dil = h(&[1.0, 2.0], 1.0, 2.0);
        for t in [0.1, 0.9, 2.2] {
            assert!((cf_eval(&base, &[t], Some(2.0)).re - dil.cf_real(&[t])).abs() < 1e-14);
        }
    }

    #[test]
    fn symmetrized_cf_is_squared_modulus() {
        let x = DiscreteDistribution::new(
            1,
            vec![(vec![0.0], 0.2), (vec![1.0], 0.5), (vec![3.5], 0.3)],
        )
        .unwrap();
        let g = x.symmetrize(1000).unwrap();
        for i in 0..50 {
            let t = [i as f64 * 0.137 - 3.0];
            let lhs = g.cf(&t);
            assert!((lhs.re - x.cf(&t).norm_sqr()).abs() < 1e-12);
            assert!(lhs.im.abs() < 1e-12);
        }
    }

    #[test]
    fn modulus_inequality_on_a_grid() {
        let w = DiscreteDistribution::new(2, vec![(vec![0.0, 1.0], 0.25), (vec![1.0, -2.0], 0.75)])
            .unwrap();
        for i in 0..40 {
            for j in 0..40 {
                let t = [i as f64 * 0.2 - 4.0, j as f64 * 0.2 - 4.0];
                assert!(cf_modulus_slack(&w, &t) >= -1e-12);
            }
        }
    }
}
