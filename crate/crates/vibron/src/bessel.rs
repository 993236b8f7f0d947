// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

//! Bessel functions of the first kind and the photon-assisted tunneling factors
//! built from them.
//!
//! `bessel_j` uses Miller's downward recurrence normalised with
//! `J_0 + 2 sum_k J_2k = 1`. The validated domain is `|n| <= 20`, `|x| <= 50`.

use crate::error::{invalid, Result};
use std::f64::consts::PI;

pub const MAX_ORDER: i32 = 20;
pub const MAX_ARG: f64 = 50.0;

/// First-kind Bessel function `J_n(x)`.
///
/// ```
/// let j1 = vibron::bessel::bessel_j(1, std::f64::consts::PI).unwrap();
/// assert!((j1 - 0.2846).abs() < 1e-4);
/// ```
pub fn bessel_j(order: i32, x: f64) -> Result<f64> {
    if order.abs() > MAX_ORDER || !(x.abs() <= MAX_ARG) {
        return Err(invalid(format!(
            "bessel_j({order}, {x}) outside |n| <= {MAX_ORDER}, |x| <= {MAX_ARG}"
        )));
    }
    let n = order.unsigned_abs() as usize;
    // J_{-n} = (-1)^n J_n and J_n(-x) = (-1)^n J_n(x)
    let mut sign = 1.0;
    if order < 0 && n % 2 == 1 {
        sign = -sign;
    }
    if x < 0.0 && n % 2 == 1 {
        sign = -sign;
    }
    Ok(sign * miller(n, x.abs()))
}

fn miller(n: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let top = n.max(x.ceil() as usize);
    let mut m = top + 30 + (10.0 * (top as f64).sqrt()) as usize;
    if m % 2 == 1 {
        m += 1;
    }
    let mut j_next = 0.0;
    let mut j_cur = 1e-300;
    let mut norm = 0.0;
    let mut result = 0.0;
    for k in (1..=m).rev() {
        let j_prev = 2.0 * k as f64 / x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        // j_cur is now the (unnormalised) J_{k-1}
        let idx = k - 1;
        if idx == n {
            result = j_cur;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * j_cur;
        }
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            norm *= 1e-250;
            result *= 1e-250;
        }
    }
    norm += j_cur;
    result / norm
}

/// Photon-assisted tunneling factor `J_1(zeta (1 + r s))` for spin `s = +-1`.
pub fn pat_tunneling_factor(zeta: f64, r: f64, spin: i8) -> Result<f64> {
    if !(zeta >= 0.0) {
        return Err(invalid("zeta must be non-negative"));
    }
    if spin != 1 && spin != -1 {
        return Err(invalid("spin must be +1 or -1"));
    }
    bessel_j(1, zeta * (1.0 + r * spin as f64))
}

/// Dimensionless spin-current coupling `2 zeta2 (J_0(pi) + J_2(pi)) / J_1(pi)`.
///
/// By the recurrence `J_0 + J_2 = (2/x) J_1` this equals `4 zeta2 / pi`.
pub fn spin_current_coupling(zeta2: f64) -> Result<f64> {
    if !(zeta2 >= 0.0) {
        return Err(invalid("zeta2 must be non-negative"));
    }
    let j0 = bessel_j(0, PI)?;
    let j1 = bessel_j(1, PI)?;
    let j2 = bessel_j(2, PI)?;
    Ok(2.0 * zeta2 * (j0 + j2) / j1)
}

/// First positive maximum of `J_1`, at `x = 1.8411837813...`.
pub fn first_max_j1() -> f64 {
    // Newton on J_1'(x) = J_0(x) - J_1(x)/x, with J_1'' from Bessel's equation.
    let mut x: f64 = 1.84;
    for _ in 0..20 {
        let j0 = miller(0, x);
        let j1 = miller(1, x);
        let d1 = j0 - j1 / x;
        let d2 = -d1 / x - (1.0 - 1.0 / (x * x)) * j1;
        let step = d1 / d2;
        x -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    // Power series with Kahan summation, accurate for |x| <= 10.
    fn series(n: usize, x: f64) -> f64 {
        let half = x / 2.0;
        let mut term = half.powi(n as i32);
        for k in 1..=n {
            term /= k as f64;
        }
        let (mut sum, mut c) = (0.0f64, 0.0f64);
        for k in 0..200 {
            let y = term - c;
            let t = sum + y;
            c = (t - sum) - y;
            sum = t;
            term *= -half * half / ((k + 1) as f64 * (k + 1 + n) as f64);
            if term.abs() < 1e-30 {
                break;
            }
        }
        sum
    }

    #[test]
    fn matches_series_oracle() {
        for n in 0..=20 {
            for i in 0..=100 {
                let x = -10.0 + 0.2 * i as f64;
                let expect = if x < 0.0 && n % 2 == 1 { -series(n, -x) } else { series(n, x.abs()) };
                let got = bessel_j(n as i32, x).unwrap();
                assert!((got - expect).abs() < 1e-12, "n={n} x={x} got={got} expect={expect}");
            }
        }
    }

    #[test]
    fn frozen_values() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
        assert!((bessel_j(1, PI).unwrap() - 0.284_615_343_179_752_8).abs() < 1e-13);
        assert!((bessel_j(0, 1.0).unwrap() - 0.765_197_686_557_966_6).abs() < 1e-14);
    }

    #[test]
    fn negative_order() {
        assert!((bessel_j(-3, 2.5).unwrap() + bessel_j(3, 2.5).unwrap()).abs() < 1e-15);
        assert!((bessel_j(-2, 2.5).unwrap() - bessel_j(2, 2.5).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn out_of_domain() {
        assert!(bessel_j(21, 1.0).is_err());
        assert!(bessel_j(1, 50.5).is_err());
        assert!(bessel_j(1, f64::NAN).is_err());
    }

    #[test]
    fn current_coupling_identity() {
        let l = spin_current_coupling(0.05).unwrap();
        assert!((l - 0.063_661_977_236_758_13).abs() < 1e-12);
        assert_eq!(spin_current_coupling(0.0).unwrap(), 0.0);
    }

    #[test]
    fn pat_switch() {
        assert_eq!(pat_tunneling_factor(0.9, 1.0, -1).unwrap(), 0.0);
        assert_eq!(pat_tunneling_factor(0.0, 1.0, 1).unwrap(), 0.0);
        let on = pat_tunneling_factor(0.9, 1.0, 1).unwrap();
        assert_eq!(on, bessel_j(1, 1.8).unwrap());
    }

    #[test]
    fn first_maximum() {
        assert!((first_max_j1() - 1.841_183_781_340_659_3).abs() < 1e-12);
    }
}
