//! Numerical laboratory for concentration functions of weighted sums
//! `S_a = sum_k X_k a_k` and the additive structure of their coefficients.
//!
//! * [`measures`]: discrete laws, spectral measures, compound Poisson specs.
//! * [`concentration`]: exact and bracketed `Q(F, tau)`.
//! * [`charfn`]: characteristic functions, Esséen integrals, lattice inversion.
//! * [`progressions`]: GAPs, convex progressions, signed cubes.
//! * [`structure`]: `beta_{r,m}`, Arak-type right-hand sides, inverse detection.
//! * [`harness`]: instance families, verification suites, calibration.

pub mod atoms;
pub mod charfn;
pub mod concentration;
pub mod error;
pub mod harness;
pub mod measures;
pub mod progressions;
pub mod scalar;
pub mod structure;

pub use error::{Error, Result};
pub use measures::{
    CoefficientVector, CompoundPoissonSpec, DiscreteDistribution, Radius, SpectralMeasure,
};
pub use scalar::{Rat, Scalar};
