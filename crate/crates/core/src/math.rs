//! Floating-point helpers usable without `std`.

pub use libm::{atan, cos, exp, fabs as abs, log as ln, pow as powf, sin, sqrt, tanh};

use core::f64::consts::PI;

pub const TAU: f64 = 2.0 * PI;

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise (cascade) summation. The split points depend only on the slice
/// length, so the result is reproducible for a given input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        let mut acc = 0.0;
        for v in values {
            acc += *v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `g(v)` without materialising the mapped slice.
pub fn pairwise_sum_by(values: &[f64], g: &impl Fn(f64) -> f64) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        let mut acc = 0.0;
        for v in values {
            acc += g(*v);
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum_by(&values[..mid], g) + pairwise_sum_by(&values[mid..], g)
}

/// `|x|^p` with cheap paths for the exponents used most.
#[inline]
pub fn abs_pow(x: f64, p: f64) -> f64 {
    let a = abs(x);
    if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else if p == 4.0 {
        let s = a * a;
        s * s
    } else if a == 0.0 {
        0.0
    } else {
        powf(a, p)
    }
}

#[inline]
pub fn signum(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(abs(*v)))
}

/// Fractional part in `[0, 1)`.
pub fn frac(x: f64) -> f64 {
    let f = x - libm::floor(x);
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 45.0);
    }

    #[test]
    fn pairwise_is_accurate_on_long_input() {
        let v = vec![0.1; 1_000_000];
        assert!((pairwise_sum(&v) - 100_000.0).abs() < 1e-8);
    }

    #[test]
    fn abs_pow_paths_agree() {
        for &x in &[-1.7, 0.0, 0.3, 2.5] {
            for &p in &[1.0, 2.0, 4.0, 3.0, 1.5] {
                let expect = if x == 0.0 { 0.0 } else { f64::abs(x).powf(p) };
                assert!((abs_pow(x, p) - expect).abs() <= 1e-14 * expect.max(1.0));
            }
        }
    }

    #[test]
    fn frac_wraps_negative_values() {
        assert!((frac(-79.975) - 0.025).abs() < 1e-12);
        assert_eq!(frac(3.0), 0.0);
    }
}
