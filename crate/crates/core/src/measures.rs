//! Discrete laws, spectral measures and compound Poisson specifications.
//!
//! The max-norm `|x| = max_j |x_j|` is used for every tail and annulus
//! computation in this module.

use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::atoms::Atoms;
use crate::error::{Error, Result};
use crate::scalar::{max_norm, Scalar};

pub const MEASURES_SCHEMA: &str = "measures/v1";

/// Default cap on the number of atoms any single construction may produce.
pub const DEFAULT_ATOM_CAP: usize = 5_000_000;

/// A radius that may be infinite, so `C_2 = inf` in annulus conditions is expressible.
#[derive(Clone, Debug, PartialEq)]
pub enum Radius<T> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> Radius<T> {
    pub fn exceeded_by(&self, x: &T) -> bool {
        match self {
            Radius::Finite(r) => x > r,
            Radius::Infinite => false,
        }
    }

    pub fn contains_strict(&self, x: &T) -> bool {
        match self {
            Radius::Finite(r) => x < r,
            Radius::Infinite => true,
        }
    }
}

/// The multiset `a = (a_1, ..., a_n)` of weights in R^d. Multiplicity is kept.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientVector<T = f64> {
    dim: usize,
    coords: Vec<T>,
}

impl<T: Scalar> CoefficientVector<T> {
    pub fn new(entries: Vec<Vec<T>>) -> Result<Self> {
        let dim = entries.first().map(Vec::len).unwrap_or(0);
        if entries.is_empty() || dim == 0 {
            return Err(Error::invalid(
                "coefficient vector needs n >= 1 entries of dimension d >= 1",
            ));
        }
        if entries.iter().any(|e| e.len() != dim) {
            return Err(Error::invalid("coefficient entries have mixed dimensions"));
        }
        let coords: Vec<T> = entries.into_iter().flatten().collect();
        Self::from_flat(dim, coords)
    }

    /// One-dimensional coefficients.
    pub fn from_scalars(values: Vec<T>) -> Result<Self> {
        Self::from_flat(1, values)
    }

    pub fn from_flat(dim: usize, coords: Vec<T>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::invalid(
                "coefficient vector needs n >= 1 entries of dimension d >= 1",
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coefficients must be finite"));
        }
        if coords.iter().all(Zero::is_zero) {
            return Err(Error::invalid("coefficient vector must be nonzero"));
        }
        Ok(CoefficientVector { dim, coords })
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, k: usize) -> &[T] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn entries(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// The coordinate slice `a^(j) = (a_1j, ..., a_nj)`.
    pub fn coordinate(&self, j: usize) -> Result<Vec<T>> {
        check_index(j, self.dim)?;
        Ok(self.entries().map(|e| e[j].clone()).collect())
    }

    /// Multiplies every entry by `v > 0`.
    pub fn scale(&self, v: &T) -> Result<Self> {
        if *v <= T::zero() {
            return Err(Error::invalid("scale factor must be positive"));
        }
        Ok(CoefficientVector {
            dim: self.dim,
            coords: self.coords.iter().map(|c| c.clone() * v.clone()).collect(),
        })
    }

    pub fn max_abs(&self) -> T {
        max_norm(&self.coords)
    }

    pub fn to_f64(&self) -> CoefficientVector<f64> {
        CoefficientVector {
            dim: self.dim,
            coords: self.coords.iter().map(Scalar::to_f64).collect(),
        }
    }

    pub fn to_json_value(&self) -> Value {
        let entries: Vec<Value> = self
            .entries()
            .map(|e| Value::Array(e.iter().map(Scalar::to_json).collect()))
            .collect();
        json!({"schema": MEASURES_SCHEMA, "type": "coefficients", "dim": self.dim, "entries": entries})
    }

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let obj = expect_object(v, "coefficients", &["schema", "type", "dim", "entries"])?;
        let dim = read_dim(obj)?;
        let entries = obj
            .get("entries")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::invalid("missing `entries`"))?;
        let mut coords = Vec::with_capacity(entries.len() * dim);
        for e in entries {
            let row = read_point::<T>(e, dim)?;
            coords.extend(row);
        }
        Self::from_flat(dim, coords)
    }
}

/// Law of a random vector with finitely many atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDistribution<T = f64> {
    atoms: Atoms<T>,
}

impl<T: Scalar> DiscreteDistribution<T> {
    /// Builds a law from `(point, mass)` pairs; coinciding points are merged.
    pub fn new(dim: usize, atoms: Vec<(Vec<T>, T)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be >= 1"));
        }
        let mut points = Vec::with_capacity(atoms.len() * dim);
        let mut masses = Vec::with_capacity(atoms.len());
        for (p, m) in atoms {
            if p.len() != dim {
                return Err(Error::invalid("atom has wrong dimension"));
            }
            if p.iter().any(|x| !x.is_finite()) || !m.is_finite() {
                return Err(Error::invalid("atoms must be finite"));
            }
            if m <= T::zero() {
                return Err(Error::invalid("atom masses must be strictly positive"));
            }
            points.extend(p);
            masses.push(m);
        }
        let law = DiscreteDistribution {
            atoms: Atoms::merged(dim, points, masses),
        };
        law.check_normalized()?;
        Ok(law)
    }

    /// One-dimensional law from `(value, mass)` pairs.
    pub fn from_scalar_atoms(atoms: Vec<(T, T)>) -> Result<Self> {
        Self::new(1, atoms.into_iter().map(|(x, m)| (vec![x], m)).collect())
    }

    pub(crate) fn from_atoms_unchecked(atoms: Atoms<T>) -> Self {
        DiscreteDistribution { atoms }
    }

    fn check_normalized(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(Error::invalid("distribution has no atoms"));
        }
        let total = self.atoms.total();
        let ok = if T::EXACT {
            total == T::one()
        } else {
            (total.to_f64() - 1.0).abs() <= 1e-12
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("masses sum to {:?}, not 1", total)))
        }
    }

    pub fn point_mass(point: Vec<T>) -> Self {
        let dim = point.len();
        DiscreteDistribution {
            atoms: Atoms::merged(dim, point, vec![T::one()]),
        }
    }

    /// Random sign: +-1 with probability 1/2 each.
    pub fn rademacher() -> Self {
        Self::lazy_rademacher(T::one()).expect("p = 1 is valid")
    }

    /// `P{X = 0} = 1 - p`, `P{X = 1} = P{X = -1} = p/2`.
    pub fn lazy_rademacher(p: T) -> Result<Self> {
        if p <= T::zero() || p > T::one() {
            return Err(Error::invalid(
                "lazy Rademacher parameter must lie in (0, 1]",
            ));
        }
        let half = p.half();
        let mut atoms = vec![(T::one(), half.clone()), (-T::one(), half)];
        if p < T::one() {
            atoms.push((T::zero(), T::one() - p));
        }
        Self::from_scalar_atoms(atoms)
    }

    /// Uniform on `{0, 1, ..., k-1}`.
    pub fn uniform_int(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("uniform law needs k >= 1"));
        }
        let m = T::from_frac(1, k as i64);
        Self::from_scalar_atoms((0..k).map(|i| (T::from_i64(i as i64), m.clone())).collect())
    }

    pub fn dim(&self) -> usize {
        self.atoms.dim()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &Atoms<T> {
        &self.atoms
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[T], &T)> + '_ {
        self.atoms.iter()
    }

    pub fn mass_at(&self, p: &[T]) -> T {
        self.atoms.weight_at(p)
    }

    pub fn max_atom_mass(&self) -> T {
        self.atoms
            .weights()
            .iter()
            .fold(T::zero(), |acc, m| if *m > acc { m.clone() } else { acc })
    }

    pub fn is_symmetric(&self) -> bool {
        self.atoms.is_symmetric()
    }

    /// Law of `X_1 - X_2` for independent copies.
    pub fn symmetrize(&self, cap: usize) -> Result<Self> {
        let neg = DiscreteDistribution {
            atoms: self.atoms.negated(),
        };
        self.convolve(&neg, cap)
    }

    /// Law of the sum of independent vectors with these laws.
    pub fn convolve(&self, other: &Self, cap: usize) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::invalid(
                "cannot convolve laws of different dimensions",
            ));
        }
        let needed = self.len().saturating_mul(other.len());
        if needed > cap.saturating_mul(16) {
            return Err(Error::AtomCap { needed, cap });
        }
        let d = self.dim();
        let mut points = Vec::with_capacity(needed * d);
        let mut masses = Vec::with_capacity(needed);
        for (p, m) in self.iter() {
            for (q, w) in other.iter() {
                points.extend(p.iter().zip(q).map(|(x, y)| x.clone() + y.clone()));
                masses.push(m.clone() * w.clone());
            }
        }
        let atoms = Atoms::merged(d, points, masses);
        if atoms.len() > cap {
            return Err(Error::AtomCap {
                needed: atoms.len(),
                cap,
            });
        }
        Ok(DiscreteDistribution { atoms })
    }

    /// Law of `v * X` for a scalar law `X` and a vector `v`.
    pub fn scale_into(&self, v: &[T]) -> Result<Self> {
        if self.dim() != 1 {
            return Err(Error::invalid(
                "only a one-dimensional law can multiply a vector",
            ));
        }
        let d = v.len();
        let atoms = self
            .atoms
            .map_points(d, |x| v.iter().map(|c| c.clone() * x[0].clone()).collect());
        Ok(DiscreteDistribution { atoms })
    }

    /// `p(delta) = G{ z : |z| > delta }`, strict inequality.
    pub fn tail_mass(&self, delta: &Radius<T>) -> T {
        let masses = self
            .iter()
            .filter(|(p, _)| delta.exceeded_by(&max_norm(p)))
            .map(|(_, m)| m);
        crate::scalar::sum_scalars(masses)
    }

    /// Mass of the open annulus `{c1 < |x| < c2}` and whether it reaches `c3`.
    pub fn check_spread_condition(&self, c1: &T, c2: &Radius<T>, c3: &T) -> Result<SpreadCheck<T>> {
        if *c1 < T::zero() || !c2.contains_strict(c1) {
            return Err(Error::invalid("spread condition needs 0 <= C1 < C2"));
        }
        if *c3 < T::zero() || *c3 > T::one() {
            return Err(Error::invalid("spread condition needs C3 in [0, 1]"));
        }
        let masses = self
            .iter()
            .filter(|(p, _)| {
                let r = max_norm(p);
                r > *c1 && c2.contains_strict(&r)
            })
            .map(|(_, m)| m);
        let mass = crate::scalar::sum_scalars(masses);
        Ok(SpreadCheck {
            holds: mass >= *c3,
            mass,
        })
    }

    pub fn project(&self, j: usize) -> Result<Self> {
        check_index(j, self.dim())?;
        Ok(DiscreteDistribution {
            atoms: self.atoms.project(j),
        })
    }

    pub fn to_f64(&self) -> DiscreteDistribution<f64> {
        DiscreteDistribution {
            atoms: self.atoms.to_f64(),
        }
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "schema": MEASURES_SCHEMA,
            "type": "discrete",
            "dim": self.dim(),
            "atoms": atoms_json(&self.atoms),
        })
    }

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let obj = expect_object(v, "discrete", &["schema", "type", "dim", "atoms"])?;
        let dim = read_dim(obj)?;
        let atoms = read_atoms::<T>(obj, dim)?;
        Self::new(dim, atoms)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpreadCheck<T> {
    pub holds: bool,
    pub mass: T,
}

/// Finite nonnegative atomic measure (`M`, `M*`, `M_0`, Lévy measures).
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMeasure<T = f64> {
    atoms: Atoms<T>,
}

impl<T: Scalar> SpectralMeasure<T> {
    pub fn new(dim: usize, atoms: Vec<(Vec<T>, T)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be >= 1"));
        }
        let mut points = Vec::with_capacity(atoms.len() * dim);
        let mut weights = Vec::with_capacity(atoms.len());
        for (p, w) in atoms {
            if p.len() != dim {
                return Err(Error::invalid("atom has wrong dimension"));
            }
            if p.iter().any(|x| !x.is_finite()) || !w.is_finite() || w < T::zero() {
                return Err(Error::invalid(
                    "spectral weights must be finite and nonnegative",
                ));
            }
            points.extend(p);
            weights.push(w);
        }
        Ok(SpectralMeasure {
            atoms: Atoms::merged(dim, points, weights),
        })
    }

    pub(crate) fn from_atoms_unchecked(atoms: Atoms<T>) -> Self {
        SpectralMeasure { atoms }
    }

    /// `M = sum_k E_{a_k}`.
    pub fn from_coefficients(a: &CoefficientVector<T>) -> Self {
        let weights = vec![T::one(); a.n()];
        SpectralMeasure {
            atoms: Atoms::merged(a.dim(), a.coords.clone(), weights),
        }
    }

    /// `M* = sum_k (E_{a_k} + E_{-a_k})`.
    pub fn symmetric_from_coefficients(a: &CoefficientVector<T>) -> Self {
        let mut points = a.coords.clone();
        points.extend(a.coords.iter().map(|x| -x.clone()));
        let weights = vec![T::one(); 2 * a.n()];
        SpectralMeasure {
            atoms: Atoms::merged(a.dim(), points, weights),
        }
    }

    pub fn scaled(&self, factor: &T) -> Self {
        SpectralMeasure {
            atoms: self.atoms.map_weights(|w| w.clone() * factor.clone()),
        }
    }

    /// Pushforward under `x -> z x`.
    pub fn dilated(&self, z: &T) -> Self {
        let d = self.dim();
        SpectralMeasure {
            atoms: self
                .atoms
                .map_points(d, |p| p.iter().map(|x| x.clone() * z.clone()).collect()),
        }
    }

    pub fn dim(&self) -> usize {
        self.atoms.dim()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &Atoms<T> {
        &self.atoms
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[T], &T)> + '_ {
        self.atoms.iter()
    }

    pub fn total_mass(&self) -> T {
        self.atoms.total()
    }

    pub fn weight_at(&self, p: &[T]) -> T {
        self.atoms.weight_at(p)
    }

    pub fn is_symmetric(&self) -> bool {
        self.atoms.is_symmetric()
    }

    /// Atomwise domination `self <= other`.
    pub fn dominated_by(&self, other: &Self) -> bool {
        self.iter().all(|(p, w)| {
            let o = other.weight_at(p);
            *w <= o.clone() + T::slack(&o)
        })
    }

    /// Probability law `W = L / L(R^d)`.
    pub fn normalized(&self) -> Result<DiscreteDistribution<T>> {
        let total = self.total_mass();
        if total <= T::zero() {
            return Err(Error::invalid("cannot normalize a zero measure"));
        }
        let kept: Vec<(Vec<T>, T)> = self
            .iter()
            .filter(|(_, w)| **w > T::zero())
            .map(|(p, w)| (p.to_vec(), w.clone() / total.clone()))
            .collect();
        let dim = self.dim();
        let mut points = Vec::new();
        let mut masses = Vec::new();
        for (p, m) in kept {
            points.extend(p);
            masses.push(m);
        }
        Ok(DiscreteDistribution::from_atoms_unchecked(Atoms::merged(
            dim, points, masses,
        )))
    }

    pub fn project(&self, j: usize) -> Result<Self> {
        check_index(j, self.dim())?;
        Ok(SpectralMeasure {
            atoms: self.atoms.project(j),
        })
    }

    pub fn to_f64(&self) -> SpectralMeasure<f64> {
        SpectralMeasure {
            atoms: self.atoms.to_f64(),
        }
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "schema": MEASURES_SCHEMA,
            "type": "spectral",
            "dim": self.dim(),
            "total_mass": self.total_mass().to_json(),
            "atoms": atoms_json(&self.atoms),
        })
    }

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let obj = expect_object(
            v,
            "spectral",
            &["schema", "type", "dim", "atoms", "total_mass"],
        )?;
        let dim = read_dim(obj)?;
        let atoms = read_atoms::<T>(obj, dim)?;
        let m = Self::new(dim, atoms)?;
        if let Some(t) = obj.get("total_mass") {
            let t = T::from_json(t).ok_or_else(|| Error::invalid("bad `total_mass`"))?;
            let total = m.total_mass();
            let ok = if T::EXACT {
                t == total
            } else {
                (t.to_f64() - total.to_f64()).abs() <= 1e-12 * (1.0 + total.to_f64().abs())
            };
            if !ok {
                return Err(Error::invalid(
                    "`total_mass` disagrees with the atom weights",
                ));
            }
        }
        Ok(m)
    }
}

/// The measures `M*`, `M` and `M_0 = (scale/4) M*` built from a coefficient vector.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMeasures<T> {
    pub m_star: SpectralMeasure<T>,
    pub m: SpectralMeasure<T>,
    pub m0: SpectralMeasure<T>,
}

pub fn spectral_measures<T: Scalar>(
    a: &CoefficientVector<T>,
    scale: &T,
) -> Result<SpectralMeasures<T>> {
    if *scale < T::zero() || *scale > T::one() {
        return Err(Error::invalid("scale must lie in [0, 1]"));
    }
    let m_star = SpectralMeasure::symmetric_from_coefficients(a);
    let m = SpectralMeasure::from_coefficients(a);
    let m0 = m_star.scaled(&(scale.clone() / T::from_i64(4)));
    Ok(SpectralMeasures { m_star, m, m0 })
}

/// Symmetric compound Poisson law given by its Lévy measure `L`:
/// characteristic function `exp( int (cos<t,x> - 1) L(dx) )`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompoundPoissonSpec {
    levy: SpectralMeasure<f64>,
}

impl CompoundPoissonSpec {
    pub fn new(levy: SpectralMeasure<f64>) -> Result<Self> {
        if !levy.is_symmetric() {
            return Err(Error::invalid("Lévy measure must be symmetric"));
        }
        Ok(CompoundPoissonSpec { levy })
    }

    /// `exp{ alpha (W^(t) - 1) }` for a symmetric law `W`.
    pub fn from_alpha_base(alpha: f64, base: &DiscreteDistribution<f64>) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::invalid("alpha must be finite and nonnegative"));
        }
        let levy = SpectralMeasure::from_atoms_unchecked(base.atoms().map_weights(|m| m * alpha));
        Self::new(levy)
    }

    /// `H_z^lambda`: Lévy measure `(lambda/4) M*` pushed forward by `x -> z x`.
    pub fn h_measure<T: Scalar>(a: &CoefficientVector<T>, lambda: f64, z: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::invalid("lambda must be finite and nonnegative"));
        }
        if !z.is_finite() {
            return Err(Error::invalid("z must be finite"));
        }
        let m_star = SpectralMeasure::symmetric_from_coefficients(&a.to_f64());
        Ok(CompoundPoissonSpec {
            levy: m_star.scaled(&(lambda / 4.0)).dilated(&z),
        })
    }

    pub fn levy(&self) -> &SpectralMeasure<f64> {
        &self.levy
    }

    pub fn dim(&self) -> usize {
        self.levy.dim()
    }

    /// Total Lévy mass `Lambda = alpha`.
    pub fn rate(&self) -> f64 {
        self.levy.total_mass()
    }

    pub fn base(&self) -> Result<DiscreteDistribution<f64>> {
        self.levy.normalized()
    }

    pub fn project(&self, j: usize) -> Result<Self> {
        Ok(CompoundPoissonSpec {
            levy: self.levy.project(j)?,
        })
    }

    pub fn to_json_value(&self) -> Value {
        json!({"schema": MEASURES_SCHEMA, "type": "compound_poisson", "levy": self.levy.to_json_value()})
    }

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let obj = expect_object(v, "compound_poisson", &["schema", "type", "levy"])?;
        let levy = obj
            .get("levy")
            .ok_or_else(|| Error::invalid("missing `levy`"))?;
        Self::new(SpectralMeasure::from_json_value(levy)?)
    }
}

/// Coordinate projections `F^(j)`, `M*_j`, `a^(j)` (0-based `j`).
pub trait CoordinateProjection: Sized {
    fn coordinate_projection(&self, j: usize) -> Result<Self>;
}

impl<T: Scalar> CoordinateProjection for DiscreteDistribution<T> {
    fn coordinate_projection(&self, j: usize) -> Result<Self> {
        self.project(j)
    }
}

impl<T: Scalar> CoordinateProjection for SpectralMeasure<T> {
    fn coordinate_projection(&self, j: usize) -> Result<Self> {
        self.project(j)
    }
}

impl<T: Scalar> CoordinateProjection for CoefficientVector<T> {
    fn coordinate_projection(&self, j: usize) -> Result<Self> {
        let c = self.coordinate(j)?;
        if c.iter().all(Zero::is_zero) {
            // a zero coordinate slice is still a valid projection target
            return Ok(CoefficientVector { dim: 1, coords: c });
        }
        CoefficientVector::from_scalars(c)
    }
}

fn check_index(j: usize, dim: usize) -> Result<()> {
    if j >= dim {
        Err(Error::IndexOutOfRange { index: j, dim })
    } else {
        Ok(())
    }
}

fn atoms_json<T: Scalar>(atoms: &Atoms<T>) -> Value {
    Value::Array(
        atoms
            .iter()
            .map(|(p, w)| {
                let mut row: Vec<Value> = p.iter().map(Scalar::to_json).collect();
                row.push(w.to_json());
                Value::Array(row)
            })
            .collect(),
    )
}

pub(crate) fn expect_object<'a>(
    v: &'a Value,
    kind: &str,
    allowed: &[&str],
) -> Result<&'a Map<String, Value>> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::invalid(format!("expected a `{kind}` object")))?;
    if let Some(schema) = obj.get("schema") {
        if schema.as_str() != Some(MEASURES_SCHEMA) {
            return Err(Error::invalid(format!("unsupported schema {schema}")));
        }
    }
    if let Some(t) = obj.get("type") {
        if t.as_str() != Some(kind) {
            return Err(Error::invalid(format!("expected type `{kind}`, found {t}")));
        }
    }
    if let Some(unknown) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::invalid(format!("unknown field `{unknown}`")));
    }
    Ok(obj)
}

fn read_dim(obj: &Map<String, Value>) -> Result<usize> {
    obj.get("dim")
        .and_then(Value::as_u64)
        .filter(|d| *d >= 1)
        .map(|d| d as usize)
        .ok_or_else(|| Error::invalid("missing or invalid `dim`"))
}

pub(crate) fn read_point<T: Scalar>(v: &Value, dim: usize) -> Result<Vec<T>> {
    match v {
        Value::Array(xs) if xs.len() == dim => xs
            .iter()
            .map(|x| T::from_json(x).ok_or_else(|| Error::invalid(format!("bad number {x}"))))
            .collect(),
        // scalars are accepted for d = 1
        other if dim == 1 && !other.is_array() => {
            Ok(vec![T::from_json(other).ok_or_else(|| {
                Error::invalid(format!("bad number {other}"))
            })?])
        }
        _ => Err(Error::invalid(format!(
            "expected a point of dimension {dim}"
        ))),
    }
}

fn read_atoms<T: Scalar>(obj: &Map<String, Value>, dim: usize) -> Result<Vec<(Vec<T>, T)>> {
    let rows = obj
        .get("atoms")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::invalid("missing `atoms`"))?;
    rows.iter()
        .map(|row| {
            let row = row
                .as_array()
                .filter(|r| r.len() == dim + 1)
                .ok_or_else(|| {
                    Error::invalid(format!(
                        "each atom must be [point..., mass] with {} numbers",
                        dim + 1
                    ))
                })?;
            let vals: Vec<T> = row
                .iter()
                .map(|x| T::from_json(x).ok_or_else(|| Error::invalid(format!("bad number {x}"))))
                .collect::<Result<_>>()?;
            let (p, m) = vals.split_at(dim);
            Ok((p.to_vec(), m[0].clone()))
        })
        .collect()
}

macro_rules! json_serde {
    ($ty:ident < $t:ident >) => {
        impl<$t: Scalar> Serialize for $ty<$t> {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                self.to_json_value().serialize(s)
            }
        }
        impl<'de, $t: Scalar> Deserialize<'de> for $ty<$t> {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let v = Value::deserialize(d)?;
                Self::from_json_value(&v).map_err(serde::de::Error::custom)
            }
        }
    };
    ($ty:ident) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                self.to_json_value().serialize(s)
            }
        }
        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let v = Value::deserialize(d)?;
                Self::from_json_value(&v).map_err(serde::de::Error::custom)
            }
        }
    };
}

json_serde!(CoefficientVector<T>);
json_serde!(DiscreteDistribution<T>);
json_serde!(SpectralMeasure<T>);
json_serde!(CompoundPoissonSpec);
