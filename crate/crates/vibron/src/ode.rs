// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

//! Dormand-Prince 5(4) integrator for complex vector ODEs.
//!
//! Steps are clipped so that every requested output time is hit exactly; no
//! dense interpolation is used. The error norm is the RMS of
//! `err_i / (atol + rtol max(|y_i|, |y_new_i|))`.

use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-9, atol: 1e-12, h_init: None, h_max: f64::INFINITY, max_steps: 50_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate `dy/dt = f(t, y)` from `t0`, reporting the state at every time in
/// `t_out` (ascending, `>= t0`) through `observe`. `fixup` runs on every
/// accepted state (e.g. to re-symmetrise) and returns whether it changed it.
/// `observe` may return `false` to stop early.
pub fn integrate<F, O, P>(
    mut rhs: F,
    t0: f64,
    y: &mut Vec<C64>,
    t_out: &[f64],
    opts: &OdeOptions,
    mut observe: O,
    mut fixup: P,
) -> Result<OdeStats>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    O: FnMut(f64, &[C64]) -> bool,
    P: FnMut(&mut [C64]) -> bool,
{
    let n = y.len();
    let mut stats = OdeStats::default();
    let mut k = vec![vec![C64::new(0.0, 0.0); n]; 7];
    let mut tmp = vec![C64::new(0.0, 0.0); n];
    let mut ynew = vec![C64::new(0.0, 0.0); n];
    let mut t = t0;
    let mut out_idx = 0;
    while out_idx < t_out.len() && t_out[out_idx] <= t0 {
        if !observe(t0, y) {
            return Ok(stats);
        }
        out_idx += 1;
    }
    if out_idx == t_out.len() {
        return Ok(stats);
    }
    rhs(t, y, &mut k[0]);
    stats.rhs_evals += 1;
    let mut h = match opts.h_init {
        Some(h) => h,
        None => initial_step(y, &k[0], opts, t_out[out_idx] - t0),
    }
    .min(opts.h_max);
    while out_idx < t_out.len() {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::TooManySteps { max_steps: opts.max_steps, t });
        }
        let target = t_out[out_idx];
        let mut hit = false;
        let mut hstep = h;
        if t + hstep >= target - 1e-13 * target.abs().max(hstep) {
            hstep = target - t;
            hit = true;
        }
        if hstep <= 1e-14 * t.abs().max(1e-300) || hstep <= 0.0 {
            return Err(Error::StepUnderflow { t });
        }
        // stages
        let (k0, rest) = k.split_at_mut(1);
        let k0 = &k0[0];
        for i in 0..n {
            tmp[i] = y[i] + k0[i] * (hstep * A21);
        }
        rhs(t + C2 * hstep, &tmp, &mut rest[0]);
        for i in 0..n {
            tmp[i] = y[i] + (k0[i] * A31 + rest[0][i] * A32) * hstep;
        }
        rhs(t + C3 * hstep, &tmp, &mut rest[1]);
        for i in 0..n {
            tmp[i] = y[i] + (k0[i] * A41 + rest[0][i] * A42 + rest[1][i] * A43) * hstep;
        }
        rhs(t + C4 * hstep, &tmp, &mut rest[2]);
        for i in 0..n {
            tmp[i] = y[i] + (k0[i] * A51 + rest[0][i] * A52 + rest[1][i] * A53 + rest[2][i] * A54) * hstep;
        }
        rhs(t + C5 * hstep, &tmp, &mut rest[3]);
        for i in 0..n {
            tmp[i] = y[i]
                + (k0[i] * A61 + rest[0][i] * A62 + rest[1][i] * A63 + rest[2][i] * A64 + rest[3][i] * A65) * hstep;
        }
        rhs(t + hstep, &tmp, &mut rest[4]);
        for i in 0..n {
            ynew[i] = y[i]
                + (k0[i] * A71 + rest[1][i] * A73 + rest[2][i] * A74 + rest[3][i] * A75 + rest[4][i] * A76) * hstep;
        }
        rhs(t + hstep, &ynew, &mut rest[5]);
        stats.rhs_evals += 6;
        let mut err = 0.0;
        for i in 0..n {
            let e = (k0[i] * E1 + rest[1][i] * E3 + rest[2][i] * E4 + rest[3][i] * E5 + rest[4][i] * E6 + rest[5][i] * E7)
                * hstep;
            let sc = opts.atol + opts.rtol * y[i].norm().max(ynew[i].norm());
            let r = e.norm() / sc;
            err += r * r;
        }
        let err = (err / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            stats.rejected += 1;
            h = hstep * 0.1;
            continue;
        }
        if err <= 1.0 {
            stats.accepted += 1;
            t = if hit { target } else { t + hstep };
            std::mem::swap(y, &mut ynew);
            if fixup(y) {
                rhs(t, y, &mut k[0]);
                stats.rhs_evals += 1;
            } else {
                let (first, last) = k.split_at_mut(6);
                first[0].copy_from_slice(&last[0]);
            }
            if hit {
                while out_idx < t_out.len() && t_out[out_idx] <= t {
                    if !observe(t, y) {
                        return Ok(stats);
                    }
                    out_idx += 1;
                }
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            // an output-clipped step says nothing about the natural step size
            let base = if hit { h.max(hstep) } else { hstep };
            h = (base * fac).min(opts.h_max);
        } else {
            stats.rejected += 1;
            h = hstep * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
    }
    Ok(stats)
}

fn initial_step(y: &[C64], f0: &[C64], opts: &OdeOptions, span: f64) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (yi, fi) in y.iter().zip(f0) {
        let sc = opts.atol + opts.rtol * yi.norm();
        d0 += (yi.norm() / sc).powi(2);
        d1 += (fi.norm() / sc).powi(2);
    }
    let n = y.len().max(1) as f64;
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span } else { 0.01 * d0 / d1 };
    h.min(span).max(1e-12 * span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_and_rotation() {
        let lam = C64::new(-0.3, 2.0);
        let mut y = vec![C64::new(1.0, 0.0)];
        let times: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let mut got = Vec::new();
        integrate(
            |_, y, dy| dy[0] = lam * y[0],
            0.0,
            &mut y,
            &times,
            &OdeOptions::default(),
            |t, y| {
                got.push((t, y[0]));
                true
            },
            |_| false,
        )
        .unwrap();
        assert_eq!(got.len(), 11);
        for (t, v) in got {
            let exact = (lam * t).exp();
            assert!((v - exact).norm() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn fifth_order_convergence() {
        // fixed step comparison: halving h should cut the error by ~32
        let run = |h: f64| {
            let mut y = vec![C64::new(1.0, 0.0)];
            let opts = OdeOptions { rtol: 1.0, atol: 1.0, h_init: Some(h), h_max: h, ..Default::default() };
            integrate(|t, y, dy| dy[0] = y[0] * t.cos(), 0.0, &mut y, &[2.0], &opts, |_, _| true, |_| false).unwrap();
            (y[0].re - (2.0f64).sin().exp()).abs()
        };
        let ratio = run(0.1) / run(0.05);
        assert!(ratio > 20.0 && ratio < 50.0, "{ratio}");
    }

    #[test]
    fn output_at_start_time() {
        let mut y = vec![C64::new(2.0, 0.0)];
        let mut seen = Vec::new();
        integrate(|_, _, dy| dy[0] = C64::new(0.0, 0.0), 0.0, &mut y, &[0.0, 1.0], &OdeOptions::default(), |t, y| {
            seen.push((t, y[0].re));
            true
        }, |_| false)
        .unwrap();
        assert_eq!(seen, vec![(0.0, 2.0), (1.0, 2.0)]);
    }
}
