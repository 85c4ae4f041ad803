//! Generalized arithmetic progressions: GAPs, convex-body progressions (CGAPs)
//! and signed cubes `K_1(u)`.

mod body;
mod gap;
mod ops;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use body::{enumerate_lattice_points, Body, MAX_RANK, MAX_SCAN};
pub use gap::{Cgap, Gap, PointSet, SignedCube, DEFAULT_POINT_CAP, VOLUME_CAP};
pub use ops::{
    cover_count, cover_count_points, embed_cgap_in_gap, neighborhood_distance, product, properize,
    Cover, Embedding, MAX_PROPERIZE_RETRIES,
};

pub const PROGRESSIONS_SCHEMA: &str = "progressions/v1";

/// Any of the three progression representations.
#[derive(Clone, Debug, PartialEq)]
pub enum Progression<T = f64> {
    Gap(Gap<T>),
    Cgap(Cgap<T>),
    Cube(SignedCube<T>),
}

impl<T: Scalar> Progression<T> {
    pub fn dim(&self) -> usize {
        match self {
            Progression::Gap(g) => g.dim(),
            Progression::Cgap(c) => c.dim(),
            Progression::Cube(u) => u.dim,
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            Progression::Gap(g) => g.rank(),
            Progression::Cgap(c) => c.rank(),
            Progression::Cube(u) => u.rank(),
        }
    }

    /// Number of parameter vectors (`Vol` for GAPs, `|Z^r ∩ V|` for CGAPs).
    pub fn volume(&self) -> Result<u128> {
        match self {
            Progression::Gap(g) => g.volume(),
            Progression::Cgap(c) => c.volume(),
            Progression::Cube(u) => Ok(3u128.pow(u.rank() as u32)),
        }
    }

    pub fn points(&self, cap: usize) -> Result<PointSet<T>> {
        match self {
            Progression::Gap(g) => g.points(cap),
            Progression::Cgap(c) => {
                let p = c.points()?;
                if p.volume > cap as u128 {
                    return Err(Error::VolumeCap {
                        volume: p.volume,
                        cap: cap as u128,
                    });
                }
                Ok(p)
            }
            Progression::Cube(u) => u.points(cap),
        }
    }

    /// Generators, whatever the representation.
    pub fn generators(&self) -> &[Vec<T>] {
        match self {
            Progression::Gap(g) => &g.generators,
            Progression::Cgap(c) => &c.h,
            Progression::Cube(u) => &u.u,
        }
    }

    pub fn to_f64(&self) -> Progression<f64> {
        match self {
            Progression::Gap(g) => Progression::Gap(g.to_f64()),
            Progression::Cgap(c) => Progression::Cgap(c.to_f64()),
            Progression::Cube(u) => Progression::Cube(u.to_f64()),
        }
    }

    pub fn to_json_value(&self) -> Value {
        let vecs = |vs: &[Vec<T>]| -> Value { vs.iter().map(|v| vec_json(v)).collect() };
        match self {
            Progression::Gap(g) => json!({
                "schema": PROGRESSIONS_SCHEMA,
                "type": "gap",
                "g0": vec_json(&g.g0),
                "generators": vecs(&g.generators),
                "lower": g.lower,
                "upper": g.upper,
            }),
            Progression::Cgap(c) => json!({
                "schema": PROGRESSIONS_SCHEMA,
                "type": "cgap",
                "h": vecs(&c.h),
                "shift": vec_json(&c.shift),
                "body": serde_json::to_value(&c.body).unwrap_or(Value::Null),
                "m_cap": c.m_cap,
            }),
            Progression::Cube(u) => json!({
                "schema": PROGRESSIONS_SCHEMA,
                "type": "signed_cube",
                "dim": u.dim,
                "u": vecs(&u.u),
            }),
        }
    }

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::invalid("expected an object"))?;
        if obj.get("schema").and_then(Value::as_str) != Some(PROGRESSIONS_SCHEMA) {
            return Err(Error::invalid("expected schema progressions/v1"));
        }
        let kind = obj.get("type").and_then(Value::as_str).unwrap_or("");
        match kind {
            "gap" => {
                only(
                    obj,
                    &["schema", "type", "g0", "generators", "lower", "upper"],
                )?;
                let g0 = read_vec(field(obj, "g0")?)?;
                let generators = read_vecs(field(obj, "generators")?)?;
                let lower = serde_json::from_value(field(obj, "lower")?.clone())?;
                let upper = serde_json::from_value(field(obj, "upper")?.clone())?;
                Ok(Progression::Gap(Gap::new(g0, generators, lower, upper)?))
            }
            "cgap" => {
                only(obj, &["schema", "type", "h", "shift", "body", "m_cap"])?;
                let h = read_vecs(field(obj, "h")?)?;
                let shift = read_vec(field(obj, "shift")?)?;
                let body: Body = serde_json::from_value(field(obj, "body")?.clone())?;
                let m_cap = field(obj, "m_cap")?
                    .as_u64()
                    .ok_or_else(|| Error::invalid("bad `m_cap`"))?
                    as usize;
                Ok(Progression::Cgap(Cgap::new(h, body, shift, m_cap)?))
            }
            "signed_cube" => {
                only(obj, &["schema", "type", "dim", "u"])?;
                let dim = field(obj, "dim")?
                    .as_u64()
                    .ok_or_else(|| Error::invalid("bad `dim`"))? as usize;
                Ok(Progression::Cube(SignedCube::new(
                    read_vecs(field(obj, "u")?)?,
                    dim,
                )?))
            }
            other => Err(Error::invalid(format!(
                "unknown progression type `{other}`"
            ))),
        }
    }
}

fn vec_json<T: Scalar>(v: &[T]) -> Value {
    v.iter().map(Scalar::to_json).collect()
}

fn only(obj: &Map<String, Value>, allowed: &[&str]) -> Result<()> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::invalid(format!("unknown field `{k}`"))),
        None => Ok(()),
    }
}

fn field<'a>(obj: &'a Map<String, Value>, k: &str) -> Result<&'a Value> {
    obj.get(k)
        .ok_or_else(|| Error::invalid(format!("missing `{k}`")))
}

fn read_vec<T: Scalar>(v: &Value) -> Result<Vec<T>> {
    v.as_array()
        .ok_or_else(|| Error::invalid("expected an array"))?
        .iter()
        .map(|x| T::from_json(x).ok_or_else(|| Error::invalid("bad number")))
        .collect()
}

fn read_vecs<T: Scalar>(v: &Value) -> Result<Vec<Vec<T>>> {
    v.as_array()
        .ok_or_else(|| Error::invalid("expected an array"))?
        .iter()
        .map(read_vec)
        .collect()
}

impl<T: Scalar> serde::Serialize for Progression<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json_value().serialize(s)
    }
}

impl<'de, T: Scalar> serde::Deserialize<'de> for Progression<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Self::from_json_value(&Value::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}
