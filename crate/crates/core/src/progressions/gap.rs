//! GAPs, CGAPs, signed cubes and their point sets.

use num_traits::Zero;

use crate::atoms::Atoms;
use crate::error::{Error, Result};
use crate::scalar::{max_norm_dist, Scalar};

use super::body::{enumerate_lattice_points, Body};

/// Volume cap for GAP bookkeeping.
pub const VOLUME_CAP: u128 = 1_000_000_000;
/// Default cap on enumerated points.
pub const DEFAULT_POINT_CAP: usize = 5_000_000;

/// `{g0 + m_1 g_1 + ... + m_r g_r : L_j <= m_j <= L'_j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gap<T = f64> {
    pub g0: Vec<T>,
    pub generators: Vec<Vec<T>>,
    pub lower: Vec<i64>,
    pub upper: Vec<i64>,
}

impl<T: Scalar> Gap<T> {
    pub fn new(
        g0: Vec<T>,
        generators: Vec<Vec<T>>,
        lower: Vec<i64>,
        upper: Vec<i64>,
    ) -> Result<Self> {
        let d = g0.len();
        if d == 0 {
            return Err(Error::invalid("GAP dimension must be positive"));
        }
        if generators.len() != lower.len() || lower.len() != upper.len() {
            return Err(Error::invalid(
                "generators and bounds must have equal length",
            ));
        }
        if generators.iter().any(|g| g.len() != d) {
            return Err(Error::invalid("generator dimension mismatch"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::invalid("need L_j <= L'_j"));
        }
        if g0
            .iter()
            .chain(generators.iter().flatten())
            .any(|x| !x.is_finite())
        {
            return Err(Error::invalid("GAP entries must be finite"));
        }
        let gap = Gap {
            g0,
            generators,
            lower,
            upper,
        };
        gap.volume()?;
        Ok(gap)
    }

    /// Symmetric GAP `{sum m_j g_j : |m_j| <= L_j}`.
    pub fn symmetric(generators: Vec<Vec<T>>, bounds: Vec<i64>, dim: usize) -> Result<Self> {
        let lower = bounds.iter().map(|b| -b).collect();
        Self::new(vec![T::zero(); dim], generators, lower, bounds)
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn dim(&self) -> usize {
        self.g0.len()
    }

    /// `prod (L'_j - L_j + 1)`, at most `VOLUME_CAP`.
    pub fn volume(&self) -> Result<u128> {
        let mut v: u128 = 1;
        for (l, u) in self.lower.iter().zip(&self.upper) {
            v = v.saturating_mul((u - l) as u128 + 1);
            if v > VOLUME_CAP {
                return Err(Error::VolumeCap {
                    volume: v,
                    cap: VOLUME_CAP,
                });
            }
        }
        Ok(v)
    }

    pub fn is_symmetric(&self) -> bool {
        self.g0.iter().all(Zero::is_zero)
            && self.lower.iter().zip(&self.upper).all(|(l, u)| *l == -*u)
    }

    pub fn point(&self, m: &[i64]) -> Vec<T> {
        let mut p = self.g0.clone();
        for (g, &mj) in self.generators.iter().zip(m) {
            if mj != 0 {
                let c = T::from_i64(mj);
                for (pi, gi) in p.iter_mut().zip(g) {
                    *pi = pi.clone() + c.clone() * gi.clone();
                }
            }
        }
        p
    }

    pub fn points(&self, cap: usize) -> Result<PointSet<T>> {
        let vol = self.volume()?;
        if vol > cap as u128 {
            return Err(Error::VolumeCap {
                volume: vol,
                cap: cap as u128,
            });
        }
        let r = self.rank();
        let mut pts = Vec::with_capacity(vol as usize * self.dim());
        let mut m = self.lower.clone();
        loop {
            pts.extend(self.point(&m));
            let mut j = r;
            loop {
                if j == 0 {
                    return Ok(PointSet::from_points(self.dim(), pts, vol));
                }
                j -= 1;
                if m[j] < self.upper[j] {
                    m[j] += 1;
                    break;
                }
                m[j] = self.lower[j];
            }
        }
    }

    pub fn is_proper(&self, cap: usize) -> Result<bool> {
        Ok(self.points(cap)?.is_proper())
    }

    pub fn to_f64(&self) -> Gap<f64> {
        Gap {
            g0: self.g0.iter().map(Scalar::to_f64).collect(),
            generators: self
                .generators
                .iter()
                .map(|g| g.iter().map(Scalar::to_f64).collect())
                .collect(),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
    }
}

/// `{shift + <nu, h> : nu in Z^r ∩ V}` for a symmetric body `V`; `shift = 0`
/// is the centred class.
#[derive(Clone, Debug, PartialEq)]
pub struct Cgap<T = f64> {
    pub h: Vec<Vec<T>>,
    pub body: Body,
    pub shift: Vec<T>,
    pub m_cap: usize,
}

impl<T: Scalar> Cgap<T> {
    pub fn new(h: Vec<Vec<T>>, body: Body, shift: Vec<T>, m_cap: usize) -> Result<Self> {
        let d = shift.len();
        if d == 0 {
            return Err(Error::invalid("CGAP dimension must be positive"));
        }
        if h.len() != body.dim() {
            return Err(Error::invalid("body dimension must equal the rank"));
        }
        if h.iter().any(|g| g.len() != d) {
            return Err(Error::invalid("generator dimension mismatch"));
        }
        body.validate()?;
        Ok(Cgap {
            h,
            body,
            shift,
            m_cap,
        })
    }

    pub fn centered(h: Vec<Vec<T>>, body: Body, dim: usize, m_cap: usize) -> Result<Self> {
        Self::new(h, body, vec![T::zero(); dim], m_cap)
    }

    /// `{c + j h : j = 0..2L}` in d = 1, as a shifted CGAP on the box of radius `L + 1/2`.
    pub fn arithmetic_progression(c: T, h: T, half_length: i64) -> Result<Self> {
        let shift = c + h.clone() * T::from_i64(half_length);
        Self::new(
            vec![vec![h]],
            Body::cube(1, half_length as f64 + 0.5),
            vec![shift],
            DEFAULT_POINT_CAP,
        )
    }

    pub fn rank(&self) -> usize {
        self.h.len()
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn is_centered(&self) -> bool {
        self.shift.iter().all(Zero::is_zero)
    }

    pub fn lattice_points(&self) -> Result<Vec<Vec<i64>>> {
        enumerate_lattice_points(&self.body, self.m_cap)
    }

    /// `|Z^r ∩ V|`.
    pub fn volume(&self) -> Result<u128> {
        Ok(self.lattice_points()?.len() as u128)
    }

    pub fn point(&self, nu: &[i64]) -> Vec<T> {
        let mut p = self.shift.clone();
        for (g, &v) in self.h.iter().zip(nu) {
            if v != 0 {
                let c = T::from_i64(v);
                for (pi, gi) in p.iter_mut().zip(g) {
                    *pi = pi.clone() + c.clone() * gi.clone();
                }
            }
        }
        p
    }

    pub fn points(&self) -> Result<PointSet<T>> {
        let nus = self.lattice_points()?;
        let vol = nus.len() as u128;
        let pts = nus.iter().flat_map(|nu| self.point(nu)).collect();
        Ok(PointSet::from_points(self.dim(), pts, vol))
    }

    pub fn to_f64(&self) -> Cgap<f64> {
        Cgap {
            h: self
                .h
                .iter()
                .map(|g| g.iter().map(Scalar::to_f64).collect())
                .collect(),
            body: self.body.clone(),
            shift: self.shift.iter().map(Scalar::to_f64).collect(),
            m_cap: self.m_cap,
        }
    }
}

/// `K_1(u) = {sum n_j u_j : n_j in {-1, 0, 1}}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedCube<T = f64> {
    pub u: Vec<Vec<T>>,
    pub dim: usize,
}

impl<T: Scalar> SignedCube<T> {
    pub fn new(u: Vec<Vec<T>>, dim: usize) -> Result<Self> {
        if dim == 0 || u.iter().any(|g| g.len() != dim) {
            return Err(Error::invalid(
                "signed cube generators must share a positive dimension",
            ));
        }
        Ok(SignedCube { u, dim })
    }

    pub fn rank(&self) -> usize {
        self.u.len()
    }

    pub fn to_gap(&self) -> Gap<T> {
        let r = self.rank();
        Gap {
            g0: vec![T::zero(); self.dim],
            generators: self.u.clone(),
            lower: vec![-1; r],
            upper: vec![1; r],
        }
    }

    pub fn to_cgap(&self) -> Cgap<T> {
        Cgap {
            h: self.u.clone(),
            body: Body::cube(self.rank(), 1.5),
            shift: vec![T::zero(); self.dim],
            m_cap: DEFAULT_POINT_CAP,
        }
    }

    pub fn points(&self, cap: usize) -> Result<PointSet<T>> {
        self.to_gap().points(cap)
    }

    pub fn to_f64(&self) -> SignedCube<f64> {
        SignedCube {
            u: self
                .u
                .iter()
                .map(|g| g.iter().map(Scalar::to_f64).collect())
                .collect(),
            dim: self.dim,
        }
    }
}

/// Distinct points of a progression with the number of parameter vectors
/// mapping to each; `volume` counts parameter vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet<T = f64> {
    atoms: Atoms<T>,
    pub volume: u128,
}

impl<T: Scalar> PointSet<T> {
    pub fn from_points(dim: usize, points: Vec<T>, volume: u128) -> Self {
        let n = points.len().checked_div(dim).unwrap_or(volume as usize);
        PointSet {
            atoms: Atoms::merged(dim, points, vec![T::one(); n]),
            volume,
        }
    }

    pub fn dim(&self) -> usize {
        self.atoms.dim()
    }

    /// Number of distinct points `|K|`.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_proper(&self) -> bool {
        self.len() as u128 == self.volume
    }

    pub fn point(&self, i: usize) -> &[T] {
        self.atoms.point(i)
    }

    pub fn multiplicity(&self, i: usize) -> u64 {
        self.atoms.weight(i).to_f64().round() as u64
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[T], u64)> + '_ {
        self.atoms
            .iter()
            .map(|(p, w)| (p, w.to_f64().round() as u64))
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.atoms.find(x).is_some()
    }

    /// `min_y |x - y|` in the max-norm.
    pub fn distance(&self, x: &[T]) -> T {
        if self.is_empty() {
            return T::zero();
        }
        if self.dim() == 1 {
            let n = self.len();
            let (mut lo, mut hi) = (0, n);
            while lo < hi {
                let mid = (lo + hi) / 2;
                if self.point(mid)[0] < x[0] {
                    lo = mid + 1;
                } else {
                    hi = mid;
                }
            }
            let mut best: Option<T> = None;
            for i in [lo.wrapping_sub(1), lo] {
                if i < n {
                    let d = (self.point(i)[0].clone() - x[0].clone()).abs();
                    best = Some(match best {
                        Some(b) if b <= d => b,
                        _ => d,
                    });
                }
            }
            return best.unwrap_or_else(T::zero);
        }
        let mut best = max_norm_dist(x, self.point(0));
        for i in 1..self.len() {
            let d = max_norm_dist(x, self.point(i));
            if d < best {
                best = d;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rat;

    fn r(n: i128) -> Rat {
        Rat::from_integer(n)
    }

    #[test]
    fn gap_examples() {
        let g = Gap::symmetric(vec![vec![r(3)]], vec![2], 1).unwrap();
        let p = g.points(100).unwrap();
        let xs: Vec<Rat> = p.iter().map(|(x, _)| x[0]).collect();
        assert_eq!(xs, vec![r(-6), r(-3), r(0), r(3), r(6)]);
        assert!(p.is_proper());
        assert!(g.is_symmetric());

        let collinear = Gap::symmetric(vec![vec![r(1)], vec![r(1)]], vec![1, 1], 1).unwrap();
        let p = collinear.points(100).unwrap();
        assert_eq!((p.len(), p.volume), (5, 9));
        assert!(!p.is_proper());
        assert_eq!(p.multiplicity(2), 3);
    }

    #[test]
    fn cgap_examples() {
        let c = Cgap::centered(vec![vec![r(2)]], Body::cube(1, 2.5), 1, 100).unwrap();
        let xs: Vec<Rat> = c.points().unwrap().iter().map(|(x, _)| x[0]).collect();
        assert_eq!(xs, vec![r(-4), r(-2), r(0), r(2), r(4)]);
        let ap = Cgap::arithmetic_progression(r(5), r(3), 1).unwrap();
        let xs: Vec<Rat> = ap.points().unwrap().iter().map(|(x, _)| x[0]).collect();
        assert_eq!(xs, vec![r(5), r(8), r(11)]);
    }

    #[test]
    fn signed_cube_representations_agree() {
        let cube = SignedCube::new(vec![vec![r(1), r(0)], vec![r(2), r(5)]], 2).unwrap();
        let a = cube.points(100).unwrap();
        let b = cube.to_gap().points(100).unwrap();
        let c = cube.to_cgap().points().unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a.len(), 9);
    }

    #[test]
    fn distances_use_the_max_norm() {
        let g = Gap::symmetric(vec![vec![3.0]], vec![2], 1).unwrap();
        let p = g.points(100).unwrap();
        assert_eq!(p.distance(&[4.0]), 1.0);
        assert_eq!(p.distance(&[3.0]), 0.0);
        assert_eq!(p.distance(&[-7.5]), 1.5);
        let grid = Gap::new(vec![0.0, 0.0], vec![vec![3.0, 0.0]], vec![0], vec![2]).unwrap();
        assert_eq!(grid.points(100).unwrap().distance(&[4.0, 0.0]), 1.0);
        assert_eq!(grid.points(100).unwrap().distance(&[4.0, 0.5]), 1.0);
    }

    #[test]
    fn volume_cap() {
        let g = Gap::symmetric(vec![vec![1.0]; 4], vec![100; 4], 1);
        assert!(matches!(g, Err(Error::VolumeCap { .. })));
    }
}
