//! Real roots of the depressed cubic `t^3 + a t + b = 0`.
//!
//! Inside the three-root region the trigonometric form is used; outside it
//! the single real root comes from Cardano's formula with real cube roots.
//! Every root is polished with a few Newton steps.

use std::f64::consts::PI;

/// Real roots in ascending order. A double root is reported once per
/// multiplicity, so the length is always 1 or 3.
pub fn depressed_cubic_roots(a: f64, b: f64) -> Vec<f64> {
    let disc = 4.0 * a * a * a + 27.0 * b * b;
    let mut roots = if a < 0.0 && disc <= 0.0 {
        let m = 2.0 * (-a / 3.0).sqrt();
        let arg = (3.0 * b / (a * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let mut r: Vec<f64> = (0..3)
            .map(|k| m * (theta - 2.0 * PI * k as f64 / 3.0).cos())
            .collect();
        r.sort_by(f64::total_cmp);
        r
    } else {
        let half = b / 2.0;
        let s = (half * half + a * a * a / 27.0).max(0.0).sqrt();
        vec![(-half + s).cbrt() + (-half - s).cbrt()]
    };
    for r in roots.iter_mut() {
        *r = polish(*r, a, b);
    }
    roots.sort_by(f64::total_cmp);
    roots
}

fn polish(mut t: f64, a: f64, b: f64) -> f64 {
    for _ in 0..8 {
        let f = t * t * t + a * t + b;
        let df = 3.0 * t * t + a;
        if df.abs() < 1e-300 {
            break;
        }
        let next = t - f / df;
        // Newton can only improve a converged root by rounding; keep the
        // better of the two so double roots do not drift.
        let fn_next = next * next * next + a * next + b;
        if fn_next.abs() >= f.abs() {
            break;
        }
        t = next;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(t: f64, a: f64, b: f64) -> f64 {
        (t * t * t + a * t + b).abs()
    }

    #[test]
    fn three_roots_of_t_cubed_minus_3t() {
        let r = depressed_cubic_roots(-3.0, 0.0);
        assert_eq!(r.len(), 3);
        let s3 = 3f64.sqrt();
        assert!((r[0] + s3).abs() < 1e-14);
        assert!(r[1].abs() < 1e-14);
        assert!((r[2] - s3).abs() < 1e-14);
    }

    #[test]
    fn double_root_at_discriminant_zero() {
        // t^3 - 3t - 2 = (t + 1)^2 (t - 2)
        let r = depressed_cubic_roots(-3.0, -2.0);
        assert_eq!(r.len(), 3);
        assert!((r[0] + 1.0).abs() < 1e-7);
        assert!((r[1] + 1.0).abs() < 1e-7);
        assert!((r[2] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn single_root_outside() {
        let r = depressed_cubic_roots(-3.0, -3.0);
        assert_eq!(r.len(), 1);
        assert!(residual(r[0], -3.0, -3.0) < 1e-13);
    }

    #[test]
    fn positive_linear_coefficient_is_monotone() {
        let r = depressed_cubic_roots(2.0, 5.0);
        assert_eq!(r.len(), 1);
        assert!(residual(r[0], 2.0, 5.0) < 1e-12);
    }
}
