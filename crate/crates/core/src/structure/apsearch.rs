//! Exact search over arithmetic progressions `{c + j h : j = 0..2L}` in R.
//!
//! For a fixed assignment of covered values to terms, the feasible `(c, h)`
//! set is a convex polygon cut out by `|s - c - j h| <= tau`. Its vertices
//! have two tight constraints from different terms, so every optimal step is
//! among `h = (s_k - s_i + e tau) / dj` with `e in {-2, 0, 2}` and
//! `1 <= dj <= 2L`. For each candidate step the best offset is exact: every
//! maximal covered set is attained at some `c = s_i - tau (mod h)`.

use rayon::prelude::*;

use crate::scalar::Scalar;

/// Distinct sorted values with positive weights.
#[derive(Clone, Debug)]
pub(crate) struct Weighted<T> {
    pub values: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Scalar> Weighted<T> {
    pub fn new(mut pairs: Vec<(T, T)>) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut values: Vec<T> = Vec::with_capacity(pairs.len());
        let mut weights: Vec<T> = Vec::with_capacity(pairs.len());
        for (v, w) in pairs {
            match values.last() {
                Some(last) if last.approx_eq(&v) => {
                    let k = weights.len() - 1;
                    weights[k] = weights[k].clone() + w;
                }
                _ => {
                    values.push(v);
                    weights.push(w);
                }
            }
        }
        Weighted { values, weights }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn total(&self) -> T {
        crate::scalar::sum_scalars(&self.weights)
    }
}

/// Best progression found for one half-length `L`.
#[derive(Clone, Debug)]
pub(crate) struct Best<T> {
    pub weight: T,
    pub start: T,
    pub step: T,
}

fn within<T: Scalar>(x: &T, tau: &T) -> bool {
    x.abs() <= tau.clone() + T::slack(&(tau.clone() + x.abs()))
}

/// Candidate steps for half-lengths up to `max_l`; the second value reports
/// whether the `dj` range was shortened to respect `budget`.
pub(crate) fn candidate_steps<T: Scalar>(
    w: &Weighted<T>,
    tau: &T,
    max_l: usize,
    budget: usize,
) -> (Vec<T>, bool) {
    let n = w.len();
    let es: Vec<i64> = if tau.is_zero() {
        vec![0]
    } else {
        vec![-2, 0, 2]
    };
    let pairs = n * (n + 1) / 2;
    let mut max_dj = 2 * max_l;
    let mut truncated = false;
    while max_dj > 1 && pairs * es.len() * max_dj > budget {
        max_dj /= 2;
        truncated = true;
    }
    let mut steps = Vec::new();
    for i in 0..n {
        for k in i..n {
            let diff = w.values[k].clone() - w.values[i].clone();
            for &e in &es {
                let num = diff.clone() + T::from_i64(e) * tau.clone();
                if num <= T::slack(&diff) {
                    continue;
                }
                for dj in 1..=max_dj {
                    steps.push(num.clone() / T::from_i64(dj as i64));
                }
            }
        }
    }
    steps.sort_by(|a, b| a.total_cmp(b));
    steps.dedup_by(|a, b| a.approx_eq(b));
    (steps, truncated)
}

/// Largest weight coverable by the infinite progression `c + hZ`: an upper
/// bound for every finite length with step `h`.
fn infinite_bound<T: Scalar>(w: &Weighted<T>, tau: &T, h: &T) -> T {
    let two_tau = tau.clone() + tau.clone();
    if *h <= two_tau.clone() + T::slack(h) {
        return w.total();
    }
    let mut phases: Vec<(T, usize)> = w
        .values
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let q = T::from_i64((s.clone() / h.clone()).floor_i64());
            let mut ph = s.clone() - q * h.clone();
            if ph < T::zero() {
                ph = ph + h.clone();
            }
            if ph >= *h {
                ph = ph - h.clone();
            }
            (ph, i)
        })
        .collect();
    phases.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = phases.len();
    // circular two-pointer over phases doubled by +h
    let at = |k: usize| -> T {
        if k < n {
            phases[k].0.clone()
        } else {
            phases[k - n].0.clone() + h.clone()
        }
    };
    let wt = |k: usize| w.weights[phases[k % n].1].clone();
    let mut best = T::zero();
    let mut run = T::zero();
    let mut j = 0usize;
    for i in 0..n {
        if j < i {
            j = i;
            run = T::zero();
        }
        let limit = at(i) + two_tau.clone();
        while j < i + n && at(j) <= limit.clone() + T::slack(&limit) {
            run = run + wt(j);
            j += 1;
        }
        if run > best {
            best = run.clone();
        }
        run = run - wt(i);
    }
    best
}

/// Best covered weight and offset for each `L = 0..=max_l` at step `h`.
fn best_for_step<T: Scalar>(w: &Weighted<T>, tau: &T, h: &T, max_l: usize) -> Vec<Best<T>> {
    let n = w.len();
    let two_tau = tau.clone() + tau.clone();
    let mut out: Vec<Best<T>> = Vec::with_capacity(max_l + 1);
    if *h <= two_tau.clone() + T::slack(h) {
        // consecutive terms' windows touch: value s is covered iff
        // c in [s - 2Lh - tau, s + tau]
        for l in 0..=max_l {
            let span = h.clone() * T::from_i64(2 * l as i64);
            let mut ev: Vec<(T, bool, usize)> = Vec::with_capacity(2 * n);
            for (i, s) in w.values.iter().enumerate() {
                ev.push((s.clone() - span.clone() - tau.clone(), true, i));
                ev.push((s.clone() + tau.clone(), false, i));
            }
            // closed intervals: openings before closings at equal coordinates
            ev.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
            let mut run = T::zero();
            let mut best = Best {
                weight: T::zero(),
                start: w.values[0].clone(),
                step: h.clone(),
            };
            for (x, open, i) in ev {
                if open {
                    run = run + w.weights[i].clone();
                    if run > best.weight {
                        best = Best {
                            weight: run.clone(),
                            start: x,
                            step: h.clone(),
                        };
                    }
                } else {
                    run = run - w.weights[i].clone();
                }
            }
            out.push(best);
        }
        return out;
    }
    for _ in 0..=max_l {
        out.push(Best {
            weight: T::zero(),
            start: w.values[0].clone(),
            step: h.clone(),
        });
    }
    let half = T::from_frac(1, 2);
    let mut idx: Vec<(i64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        let base = w.values[i].clone() - tau.clone();
        idx.clear();
        for (k, s) in w.values.iter().enumerate() {
            let m = ((s.clone() - base.clone()) / h.clone() + half.clone()).floor_i64();
            let r = s.clone() - base.clone() - T::from_i64(m) * h.clone();
            if within(&r, tau) {
                idx.push((m, k));
            } else {
                // the rounding may pick the wrong neighbour at exactly tau
                let r2 = r.clone() + h.clone();
                if within(&r2, tau) {
                    idx.push((m - 1, k));
                }
            }
        }
        idx.sort_unstable();
        for (l, best) in out.iter_mut().enumerate() {
            let width = 2 * l as i64;
            let mut run = T::zero();
            let mut j = 0usize;
            for a in 0..idx.len() {
                if a > 0 && idx[a].0 == idx[a - 1].0 {
                    run = run - w.weights[idx[a - 1].1].clone();
                    continue;
                }
                if j < a {
                    j = a;
                    run = T::zero();
                }
                while j < idx.len() && idx[j].0 <= idx[a].0 + width {
                    run = run + w.weights[idx[j].1].clone();
                    j += 1;
                }
                if run > best.weight {
                    best.weight = run.clone();
                    best.start = base.clone() + T::from_i64(idx[a].0) * h.clone();
                }
                run = run - w.weights[idx[a].1].clone();
            }
        }
    }
    out
}

/// Best single window `[c - tau, c + tau]`.
fn best_point<T: Scalar>(w: &Weighted<T>, tau: &T) -> Best<T> {
    let n = w.len();
    let two_tau = tau.clone() + tau.clone();
    let mut best = Best {
        weight: T::zero(),
        start: w.values[0].clone(),
        step: T::one(),
    };
    let mut run = T::zero();
    let mut j = 0;
    for i in 0..n {
        if j < i {
            j = i;
            run = T::zero();
        }
        let limit = w.values[i].clone() + two_tau.clone();
        while j < n && w.values[j] <= limit.clone() + T::slack(&limit) {
            run = run + w.weights[j].clone();
            j += 1;
        }
        if run > best.weight {
            best.weight = run.clone();
            best.start = w.values[i].clone() + tau.clone();
        }
        run = run - w.weights[i].clone();
    }
    best
}

pub(crate) struct SearchOutcome<T> {
    /// Best per `L = 0..=max_l`, over the evaluated steps.
    pub per_l: Vec<Best<T>>,
    pub truncated: bool,
}

fn better<T: Scalar>(cand: &Best<T>, cur: &Best<T>) -> bool {
    cand.weight > cur.weight || (cand.weight == cur.weight && cand.step.abs() < cur.step.abs())
}

/// Best progression per half-length. Steps are scanned in decreasing order
/// of their infinite-progression bound and the scan stops once no remaining
/// step can beat the best weight at `max_l`, so the smallest `L` attaining
/// the overall best weight is exact.
pub(crate) fn search<T: Scalar>(
    w: &Weighted<T>,
    tau: &T,
    max_l: usize,
    budget: usize,
) -> SearchOutcome<T> {
    search_to(w, tau, max_l, budget, None)
}

/// As [`search`], and additionally every `per_l[l]` of weight at least
/// `floor` is exact: steps are scanned while their bound reaches `floor`.
pub(crate) fn search_to<T: Scalar>(
    w: &Weighted<T>,
    tau: &T,
    max_l: usize,
    budget: usize,
    floor: Option<&T>,
) -> SearchOutcome<T> {
    let point = best_point(w, tau);
    let mut per_l: Vec<Best<T>> = vec![point; max_l + 1];
    if max_l == 0 || w.len() < 2 {
        return SearchOutcome {
            per_l,
            truncated: false,
        };
    }
    let (steps, truncated) = candidate_steps(w, tau, max_l, budget);
    let mut ranked: Vec<(T, T)> = steps
        .into_par_iter()
        .map(|h| (infinite_bound(w, tau, &h), h))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    let chunk = 64;
    let mut pos = 0;
    while pos < ranked.len() {
        let bound = &ranked[pos].0;
        if *bound < per_l[max_l].weight && floor.is_none_or(|f| bound < f) {
            break;
        }
        let end = (pos + chunk).min(ranked.len());
        let results: Vec<Vec<Best<T>>> = ranked[pos..end]
            .par_iter()
            .map(|(_, h)| best_for_step(w, tau, h, max_l))
            .collect();
        for r in results {
            for (l, b) in r.into_iter().enumerate() {
                if l > 0 && better(&b, &per_l[l]) {
                    per_l[l] = b;
                }
            }
        }
        pos = end;
    }
    // a longer progression contains the shorter one
    for l in 1..=max_l {
        if per_l[l - 1].weight > per_l[l].weight {
            per_l[l] = per_l[l - 1].clone();
        }
    }
    SearchOutcome { per_l, truncated }
}

/// Whether `s` lies within `tau` of `{c + j h : j = 0..2L}`.
pub(crate) fn ap_covers<T: Scalar>(s: &T, start: &T, step: &T, l: usize, tau: &T) -> bool {
    if l == 0 || step.is_zero() {
        return within(&(s.clone() - start.clone()), tau);
    }
    let (lo, hi) = (0i64, 2 * l as i64);
    let q = ((s.clone() - start.clone()) / step.clone()).floor_i64();
    for j in [q - 1, q, q + 1, q + 2] {
        let j = j.clamp(lo, hi);
        let r = s.clone() - start.clone() - T::from_i64(j) * step.clone();
        if within(&r, tau) {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rat;

    fn r(n: i128) -> Rat {
        Rat::from_integer(n)
    }

    fn weighted(vals: &[i128]) -> Weighted<Rat> {
        Weighted::new(vals.iter().map(|&v| (r(v), r(1))).collect())
    }

    #[test]
    fn finds_step_five() {
        let w = weighted(&[0, 5, 10, 11]);
        let out = search(&w, &r(0), 1, 1_000_000);
        assert_eq!(out.per_l[1].weight, r(3));
        assert_eq!(out.per_l[1].step, r(5));
        assert_eq!(out.per_l[0].weight, r(1));
    }

    #[test]
    fn tolerance_widens_windows() {
        let w = weighted(&[0, 1, 2, 10]);
        let out = search(&w, &Rat::new(1, 2), 1, 1_000_000);
        assert_eq!(out.per_l[0].weight, r(2));
        // 0, 1, 2 fit a 3-term AP exactly; nothing reaches 10 as well
        assert_eq!(out.per_l[1].weight, r(3));
        let out = search(&w, &r(1), 1, 1_000_000);
        assert_eq!(out.per_l[0].weight, r(3));
    }

    #[test]
    fn coverage_predicate() {
        assert!(ap_covers(&r(9), &r(3), &r(3), 1, &r(0)));
        assert!(!ap_covers(&r(12), &r(3), &r(3), 1, &r(0)));
        assert!(!ap_covers(&r(0), &r(3), &r(3), 1, &r(0)));
        assert!(ap_covers(&r(1), &r(3), &r(3), 1, &r(2)));
    }
}
