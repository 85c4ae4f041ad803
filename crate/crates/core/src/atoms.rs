//! Flat storage for finite atomic measures on R^d.
//!
//! Points are kept in lexicographic order and pairwise distinct: two points
//! coincide when their max-norm distance is within the scalar's slack
//! (`1e-12 * (1 + max |coord|)` for floats, exact equality for rationals).

use std::cmp::Ordering;

use crate::scalar::{lex_cmp, max_norm, max_norm_dist, smax, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct Atoms<T> {
    dim: usize,
    points: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> Atoms<T> {
    pub fn empty(dim: usize) -> Self {
        Atoms {
            dim,
            points: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Sorts and merges coinciding points, summing their weights.
    pub fn merged(dim: usize, points: Vec<T>, weights: Vec<T>) -> Self {
        debug_assert_eq!(points.len(), weights.len() * dim);
        let n = weights.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            lex_cmp(
                &points[i * dim..(i + 1) * dim],
                &points[j * dim..(j + 1) * dim],
            )
        });

        let mut out_points: Vec<T> = Vec::with_capacity(points.len());
        let mut out_weights: Vec<T> = Vec::with_capacity(n);
        if T::EXACT || dim == 1 {
            // Equal (or, for floats in d=1, near-equal) points are adjacent.
            for &i in &order {
                let p = &points[i * dim..(i + 1) * dim];
                if let Some(last) = out_weights.len().checked_sub(1) {
                    let q = &out_points[last * dim..(last + 1) * dim];
                    if coincide(p, q) {
                        out_weights[last] = out_weights[last].clone() + weights[i].clone();
                        continue;
                    }
                }
                out_points.extend_from_slice(p);
                out_weights.push(weights[i].clone());
            }
        } else {
            // Near-equal float points need not be lexicographic neighbours.
            let mut open: Vec<usize> = Vec::new();
            for &i in &order {
                let p = &points[i * dim..(i + 1) * dim];
                let slack = T::slack(&max_norm(p));
                open.retain(|&c| {
                    let lead = &out_points[c * dim];
                    p[0].clone() - lead.clone() <= slack.clone() + slack.clone()
                });
                let hit = open
                    .iter()
                    .copied()
                    .find(|&c| coincide(p, &out_points[c * dim..(c + 1) * dim]));
                match hit {
                    Some(c) => out_weights[c] = out_weights[c].clone() + weights[i].clone(),
                    None => {
                        open.push(out_weights.len());
                        out_points.extend_from_slice(p);
                        out_weights.push(weights[i].clone());
                    }
                }
            }
        }
        Atoms {
            dim,
            points: out_points,
            weights: out_weights,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> &T {
        &self.weights[i]
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[T], &T)> + '_ {
        self.points
            .chunks_exact(self.dim.max(1))
            .zip(self.weights.iter())
    }

    pub fn total(&self) -> T {
        crate::scalar::sum_scalars(self.weights.iter())
    }

    pub fn find(&self, p: &[T]) -> Option<usize> {
        if T::EXACT || self.dim == 1 {
            let idx = self.bsearch(p);
            for i in [idx.wrapping_sub(1), idx] {
                if i < self.len() && coincide(self.point(i), p) {
                    return Some(i);
                }
            }
            None
        } else {
            (0..self.len()).find(|&i| coincide(self.point(i), p))
        }
    }

    fn bsearch(&self, p: &[T]) -> usize {
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if lex_cmp(self.point(mid), p) == Ordering::Less {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    pub fn weight_at(&self, p: &[T]) -> T {
        self.find(p)
            .map(|i| self.weights[i].clone())
            .unwrap_or_else(T::zero)
    }

    pub fn map_points<F: Fn(&[T]) -> Vec<T>>(&self, new_dim: usize, f: F) -> Self {
        let mut pts = Vec::with_capacity(self.len() * new_dim);
        for (p, _) in self.iter() {
            let q = f(p);
            debug_assert_eq!(q.len(), new_dim);
            pts.extend(q);
        }
        Atoms::merged(new_dim, pts, self.weights.clone())
    }

    pub fn map_weights<F: Fn(&T) -> T>(&self, f: F) -> Self {
        Atoms {
            dim: self.dim,
            points: self.points.clone(),
            weights: self.weights.iter().map(f).collect(),
        }
    }

    pub fn negated(&self) -> Self {
        self.map_points(self.dim, |p| p.iter().map(|x| -x.clone()).collect())
    }

    /// `true` when the weight at `x` equals the weight at `-x` for every atom.
    pub fn is_symmetric(&self) -> bool {
        self.iter().all(|(p, w)| {
            let neg: Vec<T> = p.iter().map(|x| -x.clone()).collect();
            match self.find(&neg) {
                Some(j) => w.approx_eq(&self.weights[j]),
                None => false,
            }
        })
    }

    pub fn project(&self, j: usize) -> Self {
        self.map_points(1, |p| vec![p[j].clone()])
    }

    pub fn into_parts(self) -> (usize, Vec<T>, Vec<T>) {
        (self.dim, self.points, self.weights)
    }

    pub fn to_f64(&self) -> Atoms<f64> {
        Atoms {
            dim: self.dim,
            points: self.points.iter().map(Scalar::to_f64).collect(),
            weights: self.weights.iter().map(Scalar::to_f64).collect(),
        }
    }
}

pub(crate) fn coincide<T: Scalar>(p: &[T], q: &[T]) -> bool {
    if T::EXACT {
        return p == q;
    }
    let scale = smax(max_norm(p), max_norm(q));
    max_norm_dist(p, q) <= T::slack(&scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rat;

    #[test]
    fn merges_near_equal_float_points() {
        let a = Atoms::merged(
            1,
            vec![1.0, 0.5, 1.0 + 1e-15, -2.0],
            vec![0.25, 0.25, 0.25, 0.25],
        );
        assert_eq!(a.len(), 3);
        assert_eq!(a.weight_at(&[1.0]), 0.5);
    }

    #[test]
    fn merges_non_adjacent_points_in_2d() {
        let a = Atoms::merged(
            2,
            vec![1.0, 5.0, 1.0, 6.0, 1.0 + 1e-15, 5.0],
            vec![1.0, 1.0, 1.0],
        );
        assert_eq!(a.len(), 2);
        assert_eq!(a.weight_at(&[1.0, 5.0]), 2.0);
    }

    #[test]
    fn exact_points_merge_only_when_equal() {
        let a = Atoms::merged(
            1,
            vec![Rat::new(1, 3), Rat::new(2, 6), Rat::new(1, 2)],
            vec![Rat::new(1, 3), Rat::new(1, 3), Rat::new(1, 3)],
        );
        assert_eq!(a.len(), 2);
        assert_eq!(a.weight_at(&[Rat::new(1, 3)]), Rat::new(2, 3));
    }
}
