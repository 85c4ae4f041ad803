//! Symmetric convex bodies and their integer points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack for membership tests of integer points.
const BODY_RTOL: f64 = 1e-12;
/// Largest bounding box scanned during enumeration.
pub const MAX_SCAN: u128 = 200_000_000;
pub const MAX_RANK: usize = 8;

/// A symmetric convex body `V = -V` in `R^r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Body {
    /// `{x : |x_j| <= R_j}`.
    Box { radii: Vec<f64> },
    /// `{x : sum (x_j / R_j)^2 <= 1}`.
    Ellipsoid { radii: Vec<f64> },
    /// `{x : |<w_i, x>| <= 1 for all i}`.
    Slabs { normals: Vec<Vec<f64>> },
    /// Cartesian product of bodies on consecutive coordinate blocks.
    Product { blocks: Vec<Body> },
}

impl Body {
    pub fn cube(r: usize, radius: f64) -> Body {
        Body::Box {
            radii: vec![radius; r],
        }
    }

    pub fn ball(r: usize, radius: f64) -> Body {
        Body::Ellipsoid {
            radii: vec![radius; r],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Body::Box { radii } | Body::Ellipsoid { radii } => radii.len(),
            Body::Slabs { normals } => normals.first().map_or(0, Vec::len),
            Body::Product { blocks } => blocks.iter().map(Body::dim).sum(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Body::Box { radii } | Body::Ellipsoid { radii } => {
                if radii.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
                    return Err(Error::invalid("body radii must be finite and nonnegative"));
                }
            }
            Body::Slabs { normals } => {
                let r = self.dim();
                if normals
                    .iter()
                    .any(|w| w.len() != r || w.iter().any(|x| !x.is_finite()))
                {
                    return Err(Error::invalid(
                        "slab normals must be finite with equal length",
                    ));
                }
            }
            Body::Product { blocks } => {
                for b in blocks {
                    b.validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        match self {
            Body::Box { radii } => x
                .iter()
                .zip(radii)
                .all(|(v, r)| (*v as f64).abs() <= r * (1.0 + BODY_RTOL)),
            Body::Ellipsoid { radii } => {
                let mut s = 0.0;
                for (v, r) in x.iter().zip(radii) {
                    if *v == 0 {
                        continue;
                    }
                    if *r == 0.0 {
                        return false;
                    }
                    let q = *v as f64 / r;
                    s += q * q;
                }
                s <= 1.0 + BODY_RTOL
            }
            Body::Slabs { normals } => normals.iter().all(|w| {
                let s: f64 = w.iter().zip(x).map(|(a, b)| a * *b as f64).sum();
                s.abs() <= 1.0 + BODY_RTOL
            }),
            Body::Product { blocks } => {
                let mut off = 0;
                blocks.iter().all(|b| {
                    let k = b.dim();
                    let ok = b.contains(&x[off..off + k]);
                    off += k;
                    ok
                })
            }
        }
    }

    /// Half-widths of an axis-parallel box containing the body.
    pub fn bounding_radii(&self) -> Result<Vec<f64>> {
        match self {
            Body::Box { radii } | Body::Ellipsoid { radii } => Ok(radii.clone()),
            Body::Slabs { normals } => slab_bounds(normals, self.dim()),
            Body::Product { blocks } => {
                let mut out = Vec::new();
                for b in blocks {
                    out.extend(b.bounding_radii()?);
                }
                Ok(out)
            }
        }
    }
}

/// Picks `r` independent normals `W_S`; then `x = W_S^{-1} y` with `|y| <= 1`
/// bounds `|x_j|` by the absolute row sums of `W_S^{-1}`.
fn slab_bounds(normals: &[Vec<f64>], r: usize) -> Result<Vec<f64>> {
    if r == 0 {
        return Ok(Vec::new());
    }
    let mut chosen: Vec<Vec<f64>> = Vec::new();
    let mut reduced: Vec<Vec<f64>> = Vec::new();
    for w in normals {
        // Gram-Schmidt style independence test
        let mut v = w.clone();
        for b in &reduced {
            let nb: f64 = b.iter().map(|x| x * x).sum();
            let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / nb;
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nv > 1e-9 * nw.max(1e-300) {
            reduced.push(v);
            chosen.push(w.clone());
            if chosen.len() == r {
                break;
            }
        }
    }
    if chosen.len() < r {
        return Err(Error::UnboundedBody);
    }
    let inv = invert(&chosen).ok_or(Error::UnboundedBody)?;
    Ok(inv
        .iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>() * (1.0 + 1e-9))
        .collect())
}

fn invert(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        let p = a[col][col];
        for x in a[col].iter_mut() {
            *x /= p;
        }
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                if f != 0.0 {
                    let pivot_row = a[col].clone();
                    for (x, y) in a[i].iter_mut().zip(&pivot_row) {
                        *x -= f * y;
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// `Z^r ∩ V` in lexicographic order, by a bounding-box scan.
pub fn enumerate_lattice_points(body: &Body, cap: usize) -> Result<Vec<Vec<i64>>> {
    body.validate()?;
    let r = body.dim();
    if r > MAX_RANK {
        return Err(Error::invalid(format!("rank {r} exceeds {MAX_RANK}")));
    }
    let bounds: Vec<i64> = body
        .bounding_radii()?
        .iter()
        .map(|b| (b * (1.0 + BODY_RTOL)).floor() as i64)
        .collect();
    let scan = bounds
        .iter()
        .try_fold(1u128, |acc, b| acc.checked_mul(2 * *b as u128 + 1));
    match scan {
        Some(s) if s <= MAX_SCAN => {}
        _ => {
            return Err(Error::VolumeCap {
                volume: scan.unwrap_or(u128::MAX),
                cap: MAX_SCAN,
            })
        }
    }
    let mut out = Vec::new();
    let mut x: Vec<i64> = bounds.iter().map(|b| -b).collect();
    loop {
        if body.contains(&x) {
            if out.len() == cap {
                return Err(Error::VolumeCap {
                    volume: cap as u128 + 1,
                    cap: cap as u128,
                });
            }
            out.push(x.clone());
        }
        // odometer, last coordinate fastest
        let mut j = r;
        loop {
            if j == 0 {
                return Ok(out);
            }
            j -= 1;
            if x[j] < bounds[j] {
                x[j] += 1;
                break;
            }
            x[j] = -bounds[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_and_ball_examples() {
        let pts = enumerate_lattice_points(&Body::cube(1, 2.5), 100).unwrap();
        assert_eq!(pts, vec![vec![-2], vec![-1], vec![0], vec![1], vec![2]]);
        assert_eq!(
            enumerate_lattice_points(&Body::cube(1, 0.5), 100).unwrap(),
            vec![vec![0]]
        );
        let disk = enumerate_lattice_points(&Body::ball(2, 1.5), 100).unwrap();
        assert_eq!(disk.len(), 9);
        assert!(disk.iter().all(|v| v[0].abs() <= 1 && v[1].abs() <= 1));
    }

    #[test]
    fn rank_zero_body_has_the_origin() {
        assert_eq!(
            enumerate_lattice_points(&Body::cube(0, 1.0), 10).unwrap(),
            vec![Vec::<i64>::new()]
        );
    }

    #[test]
    fn slabs_and_unbounded_detection() {
        // |x + y| <= 1, |x - y| <= 1: the diamond |x| + |y| <= 1
        let diamond = Body::Slabs {
            normals: vec![vec![1.0, 1.0], vec![1.0, -1.0]],
        };
        assert_eq!(enumerate_lattice_points(&diamond, 100).unwrap().len(), 5);
        let strip = Body::Slabs {
            normals: vec![vec![1.0, 0.0]],
        };
        assert!(matches!(
            enumerate_lattice_points(&strip, 100),
            Err(Error::UnboundedBody)
        ));
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            enumerate_lattice_points(&Body::cube(2, 3.0), 10),
            Err(Error::VolumeCap { .. })
        ));
    }

    #[test]
    fn product_body() {
        let b = Body::Product {
            blocks: vec![Body::cube(1, 1.0), Body::ball(2, 1.0)],
        };
        assert_eq!(enumerate_lattice_points(&b, 100).unwrap().len(), 3 * 5);
    }

    #[test]
    fn json_rejects_unknown_fields() {
        let b: Body = serde_json::from_str(r#"{"kind":"box","radii":[1.5]}"#).unwrap();
        assert_eq!(b, Body::cube(1, 1.5));
        assert!(serde_json::from_str::<Body>(r#"{"kind":"box","radii":[1.5],"x":1}"#).is_err());
    }
}
