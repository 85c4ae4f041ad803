//! Argument values that may come from a flag or from an input file.

use std::str::FromStr;

use concfn::measures::DiscreteDistribution;
use concfn::{CoefficientVector, CompoundPoissonSpec, Error, Result, Scalar, SpectralMeasure};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// A flag value read as JSON when it parses, else as a string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JsonArg(pub Value);

impl FromStr for JsonArg {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(JsonArg(
            serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.to_string())),
        ))
    }
}

/// Flags override the fields of `--input`; unknown fields are rejected.
/// An absent flag (`null`, or `false` for a switch) leaves the file value.
pub fn merge<A: Serialize + DeserializeOwned>(flags: A, file: Option<Value>) -> Result<A> {
    let Some(file) = file else {
        return Ok(flags);
    };
    let Value::Object(mut base) = file else {
        return Err(Error::invalid("input file must hold a JSON object"));
    };
    if let Value::Object(over) = serde_json::to_value(&flags)? {
        for (k, v) in over {
            if !v.is_null() && v != Value::Bool(false) {
                base.insert(k, v);
            }
        }
    }
    Ok(serde_json::from_value(Value::Object(base))?)
}

pub fn required<'a, T>(v: &'a Option<T>, name: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::invalid(format!("missing `{name}`")))
}

pub fn number<T: Scalar>(v: &Value, name: &str) -> Result<T> {
    T::from_json(v).ok_or_else(|| Error::invalid(format!("`{name}` is not a number: {v}")))
}

pub fn opt_number<T: Scalar>(v: &Option<JsonArg>, name: &str, default: T) -> Result<T> {
    v.as_ref().map_or(Ok(default), |j| number(&j.0, name))
}

pub fn numbers<T: Scalar>(v: &Value, name: &str) -> Result<Vec<T>> {
    match v {
        Value::Array(xs) => xs.iter().map(|x| number(x, name)).collect(),
        other => Ok(vec![number(other, name)?]),
    }
}

/// `[1, 2]`, `[[1, 0], [0, 1]]` or a `coefficients` object.
pub fn coefficients<T: Scalar>(v: &Value) -> Result<CoefficientVector<T>> {
    match v {
        Value::Object(_) => CoefficientVector::from_json_value(v),
        Value::Array(xs) if xs.iter().all(Value::is_array) => {
            let rows = xs
                .iter()
                .map(|r| numbers(r, "a"))
                .collect::<Result<Vec<Vec<T>>>>()?;
            CoefficientVector::new(rows)
        }
        Value::Array(_) => CoefficientVector::from_scalars(numbers(v, "a")?),
        _ => Err(Error::invalid(
            "`a` must be an array or a coefficients object",
        )),
    }
}

/// `rademacher`, `lazy:P`, `uniform:K` or a `discrete` object.
pub fn law<T: Scalar>(v: &Value) -> Result<DiscreteDistribution<T>> {
    match v {
        Value::String(s) => {
            let (name, arg) = s.split_once(':').unwrap_or((s.as_str(), ""));
            match name {
                "rademacher" => Ok(DiscreteDistribution::rademacher()),
                "lazy" => {
                    let p = T::parse_decimal(arg)
                        .ok_or_else(|| Error::invalid("lazy needs `lazy:P`"))?;
                    DiscreteDistribution::lazy_rademacher(p)
                }
                "uniform" => {
                    let k = arg
                        .parse()
                        .map_err(|_| Error::invalid("uniform needs `uniform:K`"))?;
                    DiscreteDistribution::uniform_int(k)
                }
                _ => Err(Error::invalid(format!("unknown law `{s}`"))),
            }
        }
        Value::Object(_) => DiscreteDistribution::from_json_value(v),
        _ => Err(Error::invalid(
            "`x` must be a law name or a discrete object",
        )),
    }
}

/// A `spectral` object or a list of `[point, weight]` pairs.
pub fn spectral<T: Scalar>(v: &Value) -> Result<SpectralMeasure<T>> {
    match v {
        Value::Object(_) => SpectralMeasure::from_json_value(v),
        Value::Array(rows) => {
            let mut atoms = Vec::with_capacity(rows.len());
            let mut dim = None;
            for r in rows {
                let pair = r.as_array().filter(|p| p.len() == 2).ok_or_else(|| {
                    Error::invalid("measure atoms must be `[point, weight]` pairs")
                })?;
                let p = numbers::<T>(&pair[0], "point")?;
                if *dim.get_or_insert(p.len()) != p.len() {
                    return Err(Error::invalid("atoms of different dimensions"));
                }
                atoms.push((p, number(&pair[1], "weight")?));
            }
            SpectralMeasure::new(dim.unwrap_or(1), atoms)
        }
        _ => Err(Error::invalid("`w` must be a spectral object or atom list")),
    }
}

pub fn compound(v: &Value) -> Result<CompoundPoissonSpec> {
    CompoundPoissonSpec::from_json_value(v)
}

/// Reads `--input`: a path, or inline JSON when it starts with `{`.
pub fn read_input(arg: &Option<String>) -> Result<Option<Value>> {
    let Some(s) = arg else { return Ok(None) };
    let text = if s.trim_start().starts_with('{') {
        s.clone()
    } else {
        std::fs::read_to_string(s).map_err(|e| Error::invalid(format!("{s}: {e}")))?
    };
    Ok(Some(serde_json::from_str(&text)?))
}

pub fn object(pairs: Vec<(&str, Value)>) -> Value {
    Value::Object(
        pairs
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect::<Map<_, _>>(),
    )
}
