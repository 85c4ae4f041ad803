//! One-dimensional progression fitting with outliers.

use crate::error::{Error, Result};
use crate::progressions::Cgap;
use crate::scalar::Scalar;

use super::apsearch::{ap_covers, search_to, Weighted};

/// Largest number of candidate steps scanned per fit.
pub const DEFAULT_STEP_BUDGET: usize = 2_000_000;

/// A fitted progression `{start + j step : j = 0..2L}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Fit<T = f64> {
    pub progression: Cgap<T>,
    pub start: T,
    pub step: T,
    pub half_length: usize,
    /// Indices of values farther than `tau` from the progression.
    pub outliers: Vec<usize>,
    pub within_budget: bool,
    /// The step scan was shortened to respect the budget.
    pub truncated: bool,
}

impl<T: Scalar> Fit<T> {
    pub fn volume(&self) -> usize {
        2 * self.half_length + 1
    }

    pub fn covers(&self, x: &T, tau: &T) -> bool {
        ap_covers(x, &self.start, &self.step, self.half_length, tau)
    }
}

/// Progression with `2L + 1 <= m_cap` terms leaving the fewest values
/// farther than `tau`; ties go to the smaller volume, then the smaller step.
pub fn fit_progression_1d<T: Scalar>(
    values: &[T],
    tau: &T,
    m_cap: usize,
    outlier_budget: usize,
) -> Result<Fit<T>> {
    fit_with_budget(values, tau, m_cap, outlier_budget, DEFAULT_STEP_BUDGET)
}

pub fn fit_with_budget<T: Scalar>(
    values: &[T],
    tau: &T,
    m_cap: usize,
    outlier_budget: usize,
    step_budget: usize,
) -> Result<Fit<T>> {
    fit_impl(values, tau, m_cap, outlier_budget, step_budget, false)
}

/// Smallest progression with `2L + 1 <= m_cap` terms leaving at most
/// `outlier_budget` values farther than `tau`; ties go to the smaller step.
/// Falls back to [`fit_progression_1d`] when no progression meets the budget.
pub fn fit_smallest<T: Scalar>(
    values: &[T],
    tau: &T,
    m_cap: usize,
    outlier_budget: usize,
    step_budget: usize,
) -> Result<Fit<T>> {
    fit_impl(values, tau, m_cap, outlier_budget, step_budget, true)
}

fn fit_impl<T: Scalar>(
    values: &[T],
    tau: &T,
    m_cap: usize,
    outlier_budget: usize,
    step_budget: usize,
    smallest: bool,
) -> Result<Fit<T>> {
    if values.is_empty() {
        return Err(Error::invalid("no values to fit"));
    }
    if values.iter().any(|v| !v.is_finite()) || !tau.is_finite() || *tau < T::zero() {
        return Err(Error::invalid(
            "values and tau must be finite, tau nonnegative",
        ));
    }
    if m_cap == 0 {
        return Err(Error::invalid("m_cap must be positive"));
    }
    let w = Weighted::new(values.iter().map(|v| (v.clone(), T::one())).collect());
    let max_l = (m_cap - 1) / 2;
    let need = T::from_i64(values.len().saturating_sub(outlier_budget) as i64);
    let out = if smallest {
        // short progressions need few candidate steps, so grow the cap
        let mut lim = 1.min(max_l);
        loop {
            let out = search_to(&w, tau, lim, step_budget, Some(&need));
            if lim == max_l || out.per_l[lim].weight >= need {
                break out;
            }
            lim = (2 * lim).min(max_l);
        }
    } else {
        search_to(&w, tau, max_l, step_budget, None)
    };
    let top = out.per_l.len() - 1;
    let best = out.per_l[top].weight.clone();
    let target = if smallest && need <= best { need } else { best };
    let l = (0..=top)
        .find(|&l| out.per_l[l].weight >= target)
        .unwrap_or(top);
    let b = &out.per_l[l];
    let step = if l == 0 { T::one() } else { b.step.clone() };
    let start = b.start.clone();
    let outliers: Vec<usize> = (0..values.len())
        .filter(|&i| !ap_covers(&values[i], &start, &step, l, tau))
        .collect();
    let progression = Cgap::arithmetic_progression(start.clone(), step.clone(), l as i64)?;
    Ok(Fit {
        progression,
        start,
        step,
        half_length: l,
        within_budget: outliers.len() <= outlier_budget,
        outliers,
        truncated: out.truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rat;

    fn rs(v: &[i128]) -> Vec<Rat> {
        v.iter().map(|&x| Rat::from_integer(x)).collect()
    }

    #[test]
    fn clean_progression() {
        let f = fit_progression_1d(&rs(&[3, 6, 9, 12]), &Rat::from_integer(0), 9, 0).unwrap();
        assert_eq!(f.step, Rat::from_integer(3));
        assert!(f.outliers.is_empty());
        assert_eq!(f.volume(), 5);
    }

    #[test]
    fn single_outlier() {
        let f = fit_progression_1d(&rs(&[3, 6, 9, 100]), &Rat::from_integer(0), 9, 1).unwrap();
        assert_eq!(f.step, Rat::from_integer(3));
        assert_eq!(f.outliers, vec![3]);
        assert!(f.within_budget);
        assert_eq!(f.volume(), 3);
    }

    #[test]
    fn equal_values_give_a_point() {
        for tau in [0.0, 0.5, 3.0] {
            let f = fit_progression_1d(&[2.5; 6], &tau, 9, 0).unwrap();
            assert_eq!(f.volume(), 1);
            assert!(f.outliers.is_empty());
            let pts = f.progression.points().unwrap();
            assert_eq!(pts.len(), 1);
        }
    }

    #[test]
    fn noisy_progression_in_floats() {
        let vals = [0.02, 0.98, 2.01, 3.0, 3.97, 50.0];
        let f = fit_progression_1d(&vals, &0.05, 9, 1).unwrap();
        assert_eq!(f.outliers, vec![5]);
        assert_eq!(f.volume(), 5);
    }

    #[test]
    fn smallest_uses_the_outlier_budget() {
        let vals = [0.0, 1.0, 2.0, 3.0, 4.0, 10.0];
        let f = fit_smallest(&vals, &0.0, 21, 1, DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(f.outliers, vec![5]);
        assert_eq!(f.volume(), 5);
        let g = fit_progression_1d(&vals, &0.0, 21, 1).unwrap();
        assert!(g.outliers.is_empty());
        assert_eq!(g.volume(), 11);
    }

    #[test]
    fn dissociated_values_report_outliers() {
        let vals: Vec<f64> = (0..10).map(|k| 2f64.powi(k)).collect();
        let f = fit_progression_1d(&vals, &0.0, 3, 0).unwrap();
        // powers of two contain no 3-term progression
        assert_eq!(f.outliers.len(), 8);
        assert!(!f.within_budget);
    }
}
