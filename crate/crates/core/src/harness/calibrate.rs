//! Per-identity ratio tables and drift checks against a stored table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::suites::{Identity, SuiteKind, SuiteRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub identity: Identity,
    pub count: usize,
    pub max: f64,
    pub min: f64,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
}

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// One row per identity from the records' finite ratios.
pub fn calibrate(records: &[SuiteRecord], identities: &[Identity]) -> Result<Vec<CalibrationRow>> {
    let mut ids = identities.to_vec();
    ids.sort();
    ids.dedup();
    let mut by_id: BTreeMap<Identity, Vec<f64>> = BTreeMap::new();
    for r in records {
        if let Some(x) = r.ratio.filter(|x| x.is_finite()) {
            by_id.entry(r.identity).or_default().push(x);
        }
    }
    ids.into_iter()
        .map(|id| {
            let mut v = by_id
                .remove(&id)
                .ok_or_else(|| Error::EmptyClass(id.name().into()))?;
            v.sort_by(f64::total_cmp);
            Ok(CalibrationRow {
                identity: id,
                count: v.len(),
                max: v[v.len() - 1],
                min: v[0],
                median: quantile(&v, 0.5),
                q05: quantile(&v, 0.05),
                q95: quantile(&v, 0.95),
            })
        })
        .collect()
}

/// Stored tables, one per suite kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoredCalibration {
    pub schema: String,
    /// Seeds pooled into each table.
    pub seeds: Vec<u64>,
    pub suites: BTreeMap<String, Vec<CalibrationRow>>,
}

pub const CALIBRATION_SCHEMA: &str = "calibration/v1";

const DEFAULT_CALIBRATION: &str = include_str!("../../calibration/default.json");

impl StoredCalibration {
    pub fn builtin() -> Result<Self> {
        Self::parse(DEFAULT_CALIBRATION)
    }

    pub fn parse(s: &str) -> Result<Self> {
        let c: StoredCalibration = serde_json::from_str(s)?;
        if c.schema != CALIBRATION_SCHEMA {
            return Err(Error::invalid(format!(
                "unknown calibration schema {:?}",
                c.schema
            )));
        }
        Ok(c)
    }

    pub fn table(&self, kind: SuiteKind) -> Option<&[CalibrationRow]> {
        self.suites.get(kind.name()).map(Vec::as_slice)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftResult {
    pub identity: Identity,
    pub max: f64,
    pub stored_max: f64,
    pub min: f64,
    pub stored_min: f64,
    pub pass: bool,
}

/// Ratio-only identities must keep their max within `(1 + tol)` of the
/// stored max; the sandwich band must also keep its min above `(1 - tol)`
/// of the stored min. Identities absent from the stored table are skipped.
pub fn check_drift(
    current: &[CalibrationRow],
    stored: &[CalibrationRow],
    tol: f64,
) -> Vec<DriftResult> {
    current
        .iter()
        .filter(|row| !row.identity.constant_free())
        .filter_map(|row| {
            let s = stored.iter().find(|s| s.identity == row.identity)?;
            let mut pass = row.max <= s.max * (1.0 + tol);
            if row.identity == Identity::Sandwich {
                pass &= row.min >= s.min * (1.0 - tol);
            }
            Some(DriftResult {
                identity: row.identity,
                max: row.max,
                stored_max: s.max,
                min: row.min,
                stored_min: s.min,
                pass,
            })
        })
        .collect()
}
