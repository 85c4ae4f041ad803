//! Instance families, verification suites and calibration of implied
//! constants.

mod calibrate;
mod instances;
mod suites;

use std::collections::BTreeMap;
use std::io::Write;

use serde_json::{json, Value};

use crate::error::{Error, Result};

pub use calibrate::{
    calibrate, check_drift, quantile, CalibrationRow, DriftResult, StoredCalibration,
    CALIBRATION_SCHEMA,
};
pub use instances::{
    planted_cube, planted_instance, small_instances, sum_instance, Law, Planted, SumInstance,
};
pub use suites::{
    input_digest, planted_detect_inputs, ratio_of, run_identity, run_suite, sandwich_suite,
    verify_sandwich_band, HMember, HarnessConfig, Identity, SuiteKind, SuiteRecord, CASE_STRIDE,
    CF_GRID, CF_SLACK, HARNESS_SCHEMA,
};

/// Records plus their calibration and drift verdicts.
#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub config: HarnessConfig,
    pub records: Vec<SuiteRecord>,
    pub calibration: Vec<CalibrationRow>,
    pub drift: Vec<DriftResult>,
}

impl Verification {
    /// Every constant-free record passed.
    pub fn identities_ok(&self) -> bool {
        self.records
            .iter()
            .filter(|r| r.identity.constant_free())
            .all(|r| r.pass == Some(true))
    }

    /// No ratio record has `rhs = 0 < lhs`.
    pub fn ratios_ok(&self) -> bool {
        self.records
            .iter()
            .filter(|r| !r.identity.constant_free())
            .all(|r| r.pass != Some(false))
    }

    pub fn drift_ok(&self) -> bool {
        self.drift.iter().all(|d| d.pass)
    }

    pub fn ok(&self) -> bool {
        self.identities_ok() && self.ratios_ok() && self.drift_ok()
    }

    pub fn summary(&self) -> Value {
        let mut per: BTreeMap<&str, Value> = BTreeMap::new();
        for id in self.config.selected() {
            let rs: Vec<&SuiteRecord> = self.records.iter().filter(|r| r.identity == id).collect();
            let ratios: Vec<f64> = rs.iter().filter_map(|r| r.ratio).collect();
            per.insert(
                id.name(),
                json!({
                    "records": rs.len(),
                    "passed": rs.iter().filter(|r| r.pass == Some(true)).count(),
                    "failed": rs.iter().filter(|r| r.pass == Some(false)).count(),
                    "errors": rs.iter().filter(|r| r.error.is_some()).count(),
                    "ratio_min": ratios.iter().copied().reduce(f64::min),
                    "ratio_max": ratios.iter().copied().reduce(f64::max),
                    "constant_free": id.constant_free(),
                }),
            );
        }
        json!({
            "schema": HARNESS_SCHEMA,
            "suite": self.config.suite,
            "seed": self.config.seed,
            "identities": per,
            "calibration": self.calibration,
            "drift": self.drift,
            "identities_ok": self.identities_ok(),
            "ratios_ok": self.ratios_ok(),
            "drift_ok": self.drift_ok(),
        })
    }
}

/// Runs the suite, calibrates the ratio identities that produced a ratio and
/// compares them with the built-in table when `check_drift` is set.
pub fn verify(cfg: &HarnessConfig) -> Result<Verification> {
    verify_against(cfg, &StoredCalibration::builtin()?)
}

/// [`verify`] with drift measured against `stored`.
pub fn verify_against(cfg: &HarnessConfig, stored: &StoredCalibration) -> Result<Verification> {
    let records = run_suite(cfg)?;
    let ids: Vec<Identity> = cfg
        .selected()
        .into_iter()
        .filter(|id| {
            records
                .iter()
                .any(|r| r.identity == *id && r.ratio.is_some())
        })
        .collect();
    let calibration = calibrate(&records, &ids)?;
    let drift = match stored.table(cfg.suite) {
        Some(t) if cfg.check_drift => check_drift(&calibration, t, cfg.drift_tolerance),
        _ => Vec::new(),
    };
    Ok(Verification {
        config: cfg.clone(),
        records,
        calibration,
        drift,
    })
}

/// `{:.16e}`: 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// CSV with columns `case_id, identity, lhs, rhs, ratio, pass`.
pub fn write_csv<W: Write>(records: &[SuiteRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::invalid(format!("csv: {e}"));
    out.write_record(["case_id", "identity", "lhs", "rhs", "ratio", "pass"])
        .map_err(io)?;
    for r in records {
        out.write_record([
            r.case_id.to_string(),
            r.identity.name().to_string(),
            fmt_num(r.lhs),
            fmt_num(r.rhs),
            r.ratio.map(fmt_num).unwrap_or_default(),
            r.pass.map(|p| p.to_string()).unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    out.flush()
        .map_err(|e| Error::invalid(format!("csv: {e}")))?;
    Ok(())
}

/// Calibration over the union of the suites drawn with each seed; the
/// stored table comes from such a sweep so that single-seed runs compare
/// against the spread of the random families, not one draw of them.
pub fn calibration_sweep(cfg: &HarnessConfig, seeds: &[u64]) -> Result<Vec<CalibrationRow>> {
    let mut records = Vec::new();
    for &seed in seeds {
        let c = HarnessConfig {
            seed,
            ..cfg.clone()
        };
        records.extend(run_suite(&c)?);
    }
    let ids: Vec<Identity> = cfg
        .selected()
        .into_iter()
        .filter(|id| !id.constant_free())
        .collect();
    calibrate(&records, &ids)
}

/// Stored calibration file from one sweep per suite kind.
pub fn stored_table(seeds: &[u64], runs: &[(SuiteKind, Vec<CalibrationRow>)]) -> StoredCalibration {
    StoredCalibration {
        schema: CALIBRATION_SCHEMA.into(),
        seeds: seeds.to_vec(),
        suites: runs
            .iter()
            .map(|(k, t)| (k.name().to_string(), t.clone()))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_has_seventeen_digits() {
        assert_eq!(fmt_num(0.375), "3.7500000000000000e-1");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_layout() {
        let r = SuiteRecord {
            case_id: 3,
            identity: Identity::HAtom,
            digest: String::new(),
            lhs: 0.5,
            rhs: 1.0,
            ratio: Some(0.5),
            pass: None,
            error: None,
        };
        let mut buf = Vec::new();
        write_csv(&[r], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "case_id,identity,lhs,rhs,ratio,pass\n3,h-atom,5.0000000000000000e-1,1.0000000000000000e0,5.0000000000000000e-1,\n");
    }
}
