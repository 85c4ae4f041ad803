//! Right-hand sides of the concentration bounds in terms of `beta`.

use crate::scalar::Scalar;

/// `c^{r+1} (1/(m sqrt(ab)) + (r+1)^{5r/2} / ab^{(r+1)/2})` with `ab = alpha beta`.
/// Infinite when `ab <= 0`.
pub fn arak_rhs(alpha_beta: f64, r: usize, m: usize, c: f64) -> f64 {
    if !(alpha_beta > 0.0) || m == 0 {
        return f64::INFINITY;
    }
    let rp = (r + 1) as f64;
    let first = 1.0 / (m as f64 * alpha_beta.sqrt());
    let second = rp.powf(2.5 * r as f64) / alpha_beta.powf(rp / 2.0);
    c.powf(rp) * (first + second)
}

/// The same bound multiplied by `1 + floor(kappa/delta)` (strict floor,
/// clamped at 0) for the `tau > 0` form.
pub fn arak_rhs_regular(
    alpha_beta: f64,
    r: usize,
    m: usize,
    c: f64,
    kappa: f64,
    delta: f64,
) -> f64 {
    let factor = if delta > 0.0 {
        1.0 + (kappa / delta).strict_floor_i64().max(0) as f64
    } else {
        f64::INFINITY
    };
    factor * arak_rhs(alpha_beta, r, m, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_examples() {
        assert!((arak_rhs(1.0, 1, 1, 1.0) - (1.0 + 2f64.powf(2.5))).abs() < 1e-12);
        assert!((arak_rhs(1.0, 1, 1, 1.0) - 6.65685).abs() < 1e-5);
        // the m-dependent term halves when m doubles
        let (a, b) = (arak_rhs(4.0, 2, 3, 1.5), arak_rhs(4.0, 2, 6, 1.5));
        let tail = 1.5f64.powi(3) * 3f64.powf(5.0) / 4f64.powf(1.5);
        assert!(((a - tail) / (b - tail) - 2.0).abs() < 1e-12);
        assert!((arak_rhs(4.0, 2, usize::MAX, 1.5) - tail).abs() < 1e-9);
        assert_eq!(arak_rhs(0.0, 1, 1, 1.0), f64::INFINITY);
    }

    #[test]
    fn regular_factor() {
        assert_eq!(
            arak_rhs_regular(2.0, 1, 3, 1.0, 1.0, 1.0),
            arak_rhs(2.0, 1, 3, 1.0)
        );
        assert_eq!(
            arak_rhs_regular(2.0, 1, 3, 1.0, 2.5, 1.0),
            3.0 * arak_rhs(2.0, 1, 3, 1.0)
        );
    }
}
