//! Parsing of the structure JSON forms back into their types.

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::progressions::Progression;
use crate::scalar::Scalar;

use super::{BetaResult, BoundTarget, CoordinateDetail, StructureReport, STRUCTURE_SCHEMA};

type Obj = Map<String, Value>;

fn object<'a>(v: &'a Value, allowed: &[&str]) -> Result<&'a Obj> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::invalid("expected an object"))?;
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::invalid(format!("unknown field `{k}`"))),
        None => Ok(obj),
    }
}

fn get<'a>(obj: &'a Obj, k: &str) -> Result<&'a Value> {
    obj.get(k)
        .ok_or_else(|| Error::invalid(format!("missing `{k}`")))
}

fn num<T: Scalar>(obj: &Obj, k: &str) -> Result<T> {
    T::from_json(get(obj, k)?).ok_or_else(|| Error::invalid(format!("bad `{k}`")))
}

fn uint(obj: &Obj, k: &str) -> Result<usize> {
    get(obj, k)?
        .as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::invalid(format!("bad `{k}`")))
}

fn flag(obj: &Obj, k: &str) -> Result<bool> {
    get(obj, k)?
        .as_bool()
        .ok_or_else(|| Error::invalid(format!("bad `{k}`")))
}

fn text(obj: &Obj, k: &str) -> Result<String> {
    get(obj, k)?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| Error::invalid(format!("bad `{k}`")))
}

fn list<'a>(obj: &'a Obj, k: &str) -> Result<&'a Vec<Value>> {
    get(obj, k)?
        .as_array()
        .ok_or_else(|| Error::invalid(format!("bad `{k}`")))
}

fn check_schema(obj: &Obj, kind: Option<&str>) -> Result<()> {
    if obj.get("schema").and_then(Value::as_str) != Some(STRUCTURE_SCHEMA) {
        return Err(Error::invalid("expected schema structure/v1"));
    }
    if let Some(kind) = kind {
        if obj.get("type").and_then(Value::as_str) != Some(kind) {
            return Err(Error::invalid(format!("expected type {kind}")));
        }
    }
    Ok(())
}

impl BoundTarget {
    fn from_json_value(v: &Value) -> Result<Self> {
        let o = object(v, &["name", "lhs", "rhs", "constant", "satisfied"])?;
        Ok(BoundTarget {
            name: text(o, "name")?,
            lhs: num(o, "lhs")?,
            rhs: num(o, "rhs")?,
            constant: num(o, "constant")?,
            satisfied: flag(o, "satisfied")?,
        })
    }
}

impl CoordinateDetail {
    fn from_json_value(v: &Value) -> Result<Self> {
        let o = object(
            v,
            &[
                "q",
                "cap",
                "size",
                "generators",
                "outliers",
                "residual_mass",
                "truncated",
            ],
        )?;
        Ok(CoordinateDetail {
            q: num(o, "q")?,
            cap: uint(o, "cap")?,
            size: uint(o, "size")?,
            generators: list(o, "generators")?
                .iter()
                .map(|g| f64::from_json(g).ok_or_else(|| Error::invalid("bad generator")))
                .collect::<Result<_>>()?,
            outliers: uint(o, "outliers")?,
            residual_mass: num(o, "residual_mass")?,
            truncated: flag(o, "truncated")?,
        })
    }
}

impl<T: Scalar> StructureReport<T> {
    pub fn from_json_value(v: &Value) -> Result<Self> {
        let o = object(
            v,
            &[
                "schema",
                "type",
                "progression",
                "rank",
                "volume",
                "n",
                "covered",
                "outliers",
                "residual_mass",
                "factor",
                "factor_kind",
                "degenerate",
                "coordinates",
                "bound_targets",
                "satisfied",
            ],
        )?;
        check_schema(o, None)?;
        let volume = text(o, "volume")?
            .parse()
            .map_err(|_| Error::invalid("bad `volume`"))?;
        let report = StructureReport {
            kind: text(o, "type")?,
            progression: Progression::from_json_value(get(o, "progression")?)?,
            rank: uint(o, "rank")?,
            volume,
            n: uint(o, "n")?,
            covered: uint(o, "covered")?,
            outliers: list(o, "outliers")?
                .iter()
                .map(|i| {
                    i.as_u64()
                        .map(|x| x as usize)
                        .ok_or_else(|| Error::invalid("bad outlier index"))
                })
                .collect::<Result<_>>()?,
            residual_mass: num(o, "residual_mass")?,
            factor: num(o, "factor")?,
            factor_kind: text(o, "factor_kind")?,
            degenerate: flag(o, "degenerate")?,
            coordinates: list(o, "coordinates")?
                .iter()
                .map(CoordinateDetail::from_json_value)
                .collect::<Result<_>>()?,
            bound_targets: list(o, "bound_targets")?
                .iter()
                .map(BoundTarget::from_json_value)
                .collect::<Result<_>>()?,
        };
        if report.satisfied() != flag(o, "satisfied")? {
            return Err(Error::invalid(
                "`satisfied` disagrees with the bound targets",
            ));
        }
        Ok(report)
    }
}

impl<T: Scalar> BetaResult<T> {
    pub fn from_json_value(v: &Value) -> Result<Self> {
        let o = object(
            v,
            &[
                "schema", "type", "upper", "exact", "r", "m", "tau", "witness",
            ],
        )?;
        check_schema(o, Some("beta"))?;
        let witness = match Progression::from_json_value(get(o, "witness")?)? {
            Progression::Cgap(c) => c,
            _ => return Err(Error::invalid("the witness must be a cgap")),
        };
        Ok(BetaResult {
            upper: num(o, "upper")?,
            witness,
            exact: flag(o, "exact")?,
            r: uint(o, "r")?,
            m: uint(o, "m")?,
            tau: num(o, "tau")?,
        })
    }
}
