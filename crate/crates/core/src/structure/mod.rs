//! Structure search: `beta_{r,m}`, the Arak-type right-hand sides, the
//! progression detector and the signed-cube report.

mod apsearch;
mod arak;
mod beta;
mod detect;
mod fit;
mod json;
mod k1;

use serde::Serialize;
use serde_json::{json, Value};

use crate::progressions::Progression;
use crate::scalar::Scalar;

pub use arak::{arak_rhs, arak_rhs_regular};
pub use beta::{beta_exact_r1, beta_upper, BetaResult, EXACT_DENOMINATOR_CAP, EXACT_SUPPORT_CAP};
pub use detect::{inverse_detect, DetectConfig};
pub use fit::{fit_progression_1d, fit_smallest, fit_with_budget, Fit, DEFAULT_STEP_BUDGET};
pub use k1::{k1_report_compound, k1_report_power, k1_structure_report, K1Config};

pub const STRUCTURE_SCHEMA: &str = "structure/v1";

/// One asserted bound, evaluated with a calibration constant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundTarget {
    pub name: String,
    pub lhs: f64,
    /// `inf` when the bound is vacuous.
    pub rhs: f64,
    pub constant: f64,
    pub satisfied: bool,
}

impl BoundTarget {
    fn at_most(name: &str, lhs: f64, rhs: f64, constant: f64) -> Self {
        BoundTarget {
            name: name.into(),
            lhs,
            rhs,
            constant,
            satisfied: lhs <= rhs * (1.0 + 1e-12),
        }
    }

    fn at_least(name: &str, lhs: f64, rhs: f64) -> Self {
        BoundTarget {
            name: name.into(),
            lhs,
            rhs,
            constant: 1.0,
            satisfied: lhs >= rhs,
        }
    }

    fn to_json_value(&self) -> Value {
        json!({
            "name": self.name,
            "lhs": self.lhs.to_json(),
            "rhs": self.rhs.to_json(),
            "constant": self.constant,
            "satisfied": self.satisfied,
        })
    }
}

/// Per-coordinate record.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CoordinateDetail {
    /// Concentration of the coordinate law.
    pub q: f64,
    /// Volume cap (detector) or rank cap (signed cube).
    pub cap: usize,
    /// Half-length (detector) or rank `r_j` (signed cube).
    pub size: usize,
    pub generators: Vec<f64>,
    pub outliers: usize,
    pub residual_mass: f64,
    pub truncated: bool,
}

impl CoordinateDetail {
    fn to_json_value(&self) -> Value {
        json!({
            "q": self.q.to_json(),
            "cap": self.cap,
            "size": self.size,
            "generators": self.generators.iter().map(Scalar::to_json).collect::<Vec<_>>(),
            "outliers": self.outliers,
            "residual_mass": self.residual_mass.to_json(),
            "truncated": self.truncated,
        })
    }
}

/// Outcome of the detector or of the signed-cube construction.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureReport<T = f64> {
    /// `inverse_detect`, `k1`, `k1_compound` or `k1_power`.
    pub kind: String,
    pub progression: Progression<T>,
    pub rank: usize,
    pub volume: u128,
    /// Atoms (or coefficients) the report is about.
    pub n: usize,
    pub covered: usize,
    pub outliers: Vec<usize>,
    pub residual_mass: f64,
    /// Weight on the covered measure: `p(1)`, `p(0)` when every `tau_j` is
    /// zero, `1` for a Lévy measure, `n` for a power of a law.
    pub factor: f64,
    /// `p(1)`, `p(0)`, `levy` or `n`.
    pub factor_kind: String,
    pub degenerate: bool,
    pub coordinates: Vec<CoordinateDetail>,
    pub bound_targets: Vec<BoundTarget>,
}

impl<T: Scalar> StructureReport<T> {
    pub fn satisfied(&self) -> bool {
        self.bound_targets.iter().all(|b| b.satisfied)
    }

    pub fn target(&self, name: &str) -> Option<&BoundTarget> {
        self.bound_targets.iter().find(|b| b.name == name)
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "schema": STRUCTURE_SCHEMA,
            "type": self.kind,
            "progression": self.progression.to_json_value(),
            "rank": self.rank,
            "volume": self.volume.to_string(),
            "n": self.n,
            "covered": self.covered,
            "outliers": self.outliers,
            "residual_mass": self.residual_mass.to_json(),
            "factor": self.factor.to_json(),
            "factor_kind": self.factor_kind,
            "degenerate": self.degenerate,
            "coordinates": self.coordinates.iter().map(CoordinateDetail::to_json_value).collect::<Vec<_>>(),
            "bound_targets": self.bound_targets.iter().map(BoundTarget::to_json_value).collect::<Vec<_>>(),
            "satisfied": self.satisfied(),
        })
    }
}

impl<T: Scalar> Serialize for StructureReport<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json_value().serialize(s)
    }
}

impl<T: Scalar> Serialize for BetaResult<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json_value().serialize(s)
    }
}

/// `log(tau/delta)` with `0/0 = 1`; infinite when only `delta` vanishes.
pub(crate) fn log_ratio(tau: f64, delta: f64) -> f64 {
    if tau == 0.0 && delta == 0.0 {
        0.0
    } else if delta == 0.0 {
        f64::INFINITY
    } else {
        (tau / delta).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_over_zero_is_one() {
        assert_eq!(log_ratio(0.0, 0.0), 0.0);
        assert_eq!(log_ratio(1.0, 0.0), f64::INFINITY);
        assert!((log_ratio(2.0, 1.0) - 2f64.ln()).abs() < 1e-15);
    }
}
