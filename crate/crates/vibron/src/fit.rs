// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

//! Least-squares fit of `cos(a t) exp(-b t)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedCosineFit {
    /// rad/s, non-negative
    pub a: f64,
    /// 1/s
    pub b: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    /// Covariance of `(a, b)` from the Gauss-Newton normal matrix.
    pub covariance: [[f64; 2]; 2],
    pub rms_residual: f64,
    pub iterations: usize,
}

fn rss(t: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    t.iter().zip(y).map(|(&t, &y)| (y - (a * t).cos() * (-b * t).exp()).powi(2)).sum()
}

/// Grid seed followed by Levenberg-Marquardt on `(a, b)`.
pub fn fit_damped_cosine(t: &[f64], y: &[f64]) -> Result<DampedCosineFit> {
    let n = t.len();
    if n < 4 || y.len() != n {
        return Err(Error::FitFailed("need at least four samples".into()));
    }
    if t.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::FitFailed("non-finite samples".into()));
    }
    let span = t[n - 1] - t[0];
    if span <= 0.0 {
        return Err(Error::FitFailed("zero time span".into()));
    }
    let dt = span / (n - 1) as f64;
    let a_max = std::f64::consts::PI / dt;
    let na = (4 * n).max(64);
    let mut b_grid = vec![0.0];
    b_grid.extend((0..48).map(|k| 1e-3 / span * 10f64.powf(k as f64 * 4.5 / 47.0)));
    let (mut a, mut b, mut best) = (0.0, 0.0, f64::INFINITY);
    for ia in 0..=na {
        let ac = a_max * ia as f64 / na as f64;
        for &bc in &b_grid {
            let r = rss(t, y, ac, bc);
            if r < best {
                (a, b, best) = (ac, bc, r);
            }
        }
    }
    let mut mu = 1e-3;
    let mut iterations = 0;
    let mut jtj = [[0.0; 2]; 2];
    for it in 0..500 {
        iterations = it + 1;
        let mut g = [0.0; 2];
        jtj = [[0.0; 2]; 2];
        for (&ti, &yi) in t.iter().zip(y) {
            let e = (-b * ti).exp();
            let (s, c) = (a * ti).sin_cos();
            let r = yi - c * e;
            let ja = -ti * s * e;
            let jb = -ti * c * e;
            g[0] += ja * r;
            g[1] += jb * r;
            jtj[0][0] += ja * ja;
            jtj[0][1] += ja * jb;
            jtj[1][1] += jb * jb;
        }
        jtj[1][0] = jtj[0][1];
        let mut improved = false;
        for _ in 0..40 {
            let m00 = jtj[0][0] * (1.0 + mu);
            let m11 = jtj[1][1] * (1.0 + mu);
            let det = m00 * m11 - jtj[0][1] * jtj[1][0];
            if det == 0.0 || !det.is_finite() {
                mu *= 10.0;
                continue;
            }
            let da = (m11 * g[0] - jtj[0][1] * g[1]) / det;
            let db = (m00 * g[1] - jtj[1][0] * g[0]) / det;
            let (an, bn) = (a + da, b + db);
            let r = rss(t, y, an, bn);
            if r <= best {
                let rel = (da.abs() / a.abs().max(1e-300)).max(db.abs() / b.abs().max(1.0 / span));
                (a, b, best) = (an, bn, r);
                mu = (mu / 3.0).max(1e-12);
                improved = rel > 1e-13;
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::FitFailed("fit diverged".into()));
    }
    let a = a.abs();
    let s2 = best / (n - 2) as f64;
    let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
    let covariance = if det > 0.0 {
        [[s2 * jtj[1][1] / det, -s2 * jtj[0][1] / det], [-s2 * jtj[1][0] / det, s2 * jtj[0][0] / det]]
    } else {
        [[f64::NAN; 2]; 2]
    };
    let (sa, sb) = (covariance[0][0].sqrt(), covariance[1][1].sqrt());
    Ok(DampedCosineFit { a, b, sigma_a: sa, sigma_b: sb, covariance, rms_residual: (best / n as f64).sqrt(), iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_noiseless_parameters() {
        let t: Vec<f64> = (0..300).map(|k| k as f64 * 0.01).collect();
        let y: Vec<f64> = t.iter().map(|&t| (7.3 * t).cos() * (-0.9 * t).exp()).collect();
        let f = fit_damped_cosine(&t, &y).unwrap();
        assert!((f.a - 7.3).abs() < 1e-8, "{f:?}");
        assert!((f.b - 0.9).abs() < 1e-8, "{f:?}");
        assert!(f.rms_residual < 1e-10);
    }

    #[test]
    fn pure_decay() {
        let t: Vec<f64> = (0..100).map(|k| k as f64 * 0.05).collect();
        let y: Vec<f64> = t.iter().map(|&t| (-0.6 * t).exp()).collect();
        let f = fit_damped_cosine(&t, &y).unwrap();
        assert!(f.a.abs() < 1e-6 && (f.b - 0.6).abs() < 1e-8, "{f:?}");
    }

    #[test]
    fn rejects_short_input() {
        assert!(fit_damped_cosine(&[0.0, 1.0], &[1.0, 0.5]).is_err());
    }
}
