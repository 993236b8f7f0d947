// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

//! Laser parameters to model constants.
//!
//! A standing-wave cooling beam on a reservoir ion produces the coefficients
//!
//! `Lambda^pm = (Omega eta / 2)^2 / (Gamma/2 + i(-Delta pm w))`,
//!
//! from which the cooling rate `gamma = Re W`, the frequency shift
//! `delta = -Im W` (with `W = (Lambda^-)^* - Lambda^+`) and the reservoir
//! occupation `nbar = Re Lambda^+ / gamma` follow.

use crate::constants::{HBAR, TWO_PI};
use crate::error::{invalid, Result};
use crate::C64;
use serde::{Deserialize, Serialize};

/// Doppler cooling beam acting on one reservoir mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoolingSpec {
    /// Rabi frequency, rad/s.
    pub rabi: f64,
    /// Laser detuning `w_L - w_0`, rad/s.
    pub detuning: f64,
    /// rad/s
    pub linewidth: f64,
    pub lamb_dicke: f64,
    /// Frequency of the cooled mode, rad/s.
    pub mode_freq: f64,
}

/// Effective reservoir constants of one cooled site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservoirParams {
    pub lambda_plus: C64,
    pub lambda_minus: C64,
    /// rad/s
    pub gamma: f64,
    /// rad/s
    pub delta: f64,
    pub nbar: f64,
    /// `gamma <= 0`: the beam heats.
    pub heating: bool,
}

impl ReservoirParams {
    /// Reservoir with prescribed rate and occupation and no frequency shift.
    ///
    /// `Lambda^+ = gamma nbar`, `Lambda^- = gamma (nbar + 1)`.
    pub fn from_rates(gamma: f64, nbar: f64) -> Result<Self> {
        if !(gamma > 0.0) || !(nbar >= 0.0) {
            return Err(invalid("reservoir needs gamma > 0 and nbar >= 0"));
        }
        Ok(Self::from_lambdas(C64::new(gamma * nbar, 0.0), C64::new(gamma * (nbar + 1.0), 0.0)))
    }

    /// Derive `gamma`, `delta`, `nbar` from the two coefficients.
    pub fn from_lambdas(lambda_plus: C64, lambda_minus: C64) -> Self {
        let w = lambda_minus.conj() - lambda_plus;
        let gamma = w.re;
        let heating = !(gamma > 0.0);
        let nbar = if heating { f64::NAN } else { lambda_plus.re / gamma };
        ReservoirParams { lambda_plus, lambda_minus, gamma, delta: -w.im, nbar, heating }
    }

    /// `W = (Lambda^-)^* - Lambda^+ = gamma - i delta`.
    pub fn w(&self) -> C64 {
        self.lambda_minus.conj() - self.lambda_plus
    }
}

impl CoolingSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.linewidth > 0.0) {
            return Err(invalid("linewidth must be positive"));
        }
        if !(self.lamb_dicke > 0.0 && self.lamb_dicke < 1.0) {
            return Err(invalid("Lamb-Dicke parameter must lie in (0, 1)"));
        }
        if !(self.rabi >= 0.0) {
            return Err(invalid("Rabi frequency must be non-negative"));
        }
        if !self.detuning.is_finite() || !self.mode_freq.is_finite() {
            return Err(invalid("detuning and mode frequency must be finite"));
        }
        Ok(())
    }
}

/// Doppler cooling coefficients of a standing-wave beam.
///
/// ```
/// use vibron::laser::{CoolingSpec, doppler_coefficients, lamb_dicke};
/// use vibron::constants::*;
/// let gamma = hz(LINEWIDTH_HZ);
/// let w = hz(TRANSVERSE_HZ);
/// let spec = CoolingSpec {
///     rabi: gamma,
///     detuning: -0.6 * gamma,
///     linewidth: gamma,
///     lamb_dicke: lamb_dicke(LAMBDA_MG, MASS_MG24, w),
///     mode_freq: w,
/// };
/// let r = doppler_coefficients(&spec).unwrap();
/// assert!((to_hz(r.gamma) / 1e3 - 86.0).abs() < 1.0);
/// assert!((r.nbar - 1.65).abs() < 0.01);
/// ```
pub fn doppler_coefficients(spec: &CoolingSpec) -> Result<ReservoirParams> {
    spec.validate()?;
    let amp = 0.5 * spec.rabi * spec.lamb_dicke;
    let num = C64::new(amp * amp, 0.0);
    let half = 0.5 * spec.linewidth;
    let lp = num / C64::new(half, -spec.detuning + spec.mode_freq);
    let lm = num / C64::new(half, -spec.detuning - spec.mode_freq);
    Ok(ReservoirParams::from_lambdas(lp, lm))
}

/// Lamb-Dicke parameter `k sqrt(hbar / (2 m w))` for a beam of wavelength
/// `wavelength` along the mode direction.
pub fn lamb_dicke(wavelength: f64, mass: f64, mode_freq: f64) -> f64 {
    TWO_PI / wavelength * (HBAR / (2.0 * mass * mode_freq)).sqrt()
}

/// Spin-dependent on-site modulation `(dw+ + dw- sz)/2 cos(nu t - phi) n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub dw_plus: f64,
    pub dw_minus: f64,
    pub freq: f64,
    /// In `[0, 2 pi)`.
    pub phase: f64,
    pub site: usize,
}

impl DriveSpec {
    pub fn at_site(mut self, site: usize) -> Self {
        self.site = site;
        self
    }
}

/// AC-Stark drive constants from the two spin-conditioned Raman beams.
///
/// `dw_s = -|Omega_s| eta^2`, `dw^pm = dw_up pm dw_down`. The returned drive
/// is placed on site 0; use [`DriveSpec::at_site`] to move it.
pub fn drive_from_lasers(rabi_up: f64, rabi_down: f64, lamb_dicke: f64, freq: f64, phase: f64) -> Result<DriveSpec> {
    if !(lamb_dicke > 0.0 && lamb_dicke < 1.0) {
        return Err(invalid("Lamb-Dicke parameter must lie in (0, 1)"));
    }
    if !(freq >= 0.0) || !phase.is_finite() {
        return Err(invalid("drive frequency must be non-negative and phase finite"));
    }
    let up = -rabi_up.abs() * lamb_dicke * lamb_dicke;
    let down = -rabi_down.abs() * lamb_dicke * lamb_dicke;
    Ok(DriveSpec { dw_plus: up + down, dw_minus: up - down, freq, phase: phase.rem_euclid(TWO_PI), site: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::*;
    use proptest::prelude::*;

    fn spec(detuning_in_gamma: f64, rabi_in_gamma: f64) -> CoolingSpec {
        let g = hz(LINEWIDTH_HZ);
        let w = hz(TRANSVERSE_HZ);
        CoolingSpec {
            rabi: rabi_in_gamma * g,
            detuning: detuning_in_gamma * g,
            linewidth: g,
            lamb_dicke: lamb_dicke(LAMBDA_MG, MASS_MG24, w),
            mode_freq: w,
        }
    }

    #[test]
    fn lamb_dicke_mg() {
        let eta = lamb_dicke(LAMBDA_MG, MASS_MG24, hz(5e6));
        assert!((eta - 0.146).abs() < 0.001);
    }

    #[test]
    fn cooling_points() {
        let a = doppler_coefficients(&spec(-0.6, 1.0)).unwrap();
        assert!((to_hz(a.gamma) / 86e3 - 1.0).abs() < 0.05);
        assert!((a.nbar / 1.65 - 1.0).abs() < 0.05);
        let b = doppler_coefficients(&spec(-0.5, 1.0)).unwrap();
        assert!((to_hz(b.gamma) / 106e3 - 1.0).abs() < 0.05);
        assert!((b.nbar / 1.63 - 1.0).abs() < 0.05);
        assert!(!a.heating);
    }

    #[test]
    fn delta_is_negative_for_red_detuning() {
        let a = doppler_coefficients(&spec(-0.6, 1.0)).unwrap();
        assert!(a.delta < 0.0);
    }

    #[test]
    fn resonant_beam_does_not_cool() {
        let r = doppler_coefficients(&spec(0.0, 1.0)).unwrap();
        assert_eq!(r.gamma, 0.0);
        assert!(r.heating);
    }

    #[test]
    fn zero_linewidth_rejected() {
        let mut s = spec(-0.5, 1.0);
        s.linewidth = 0.0;
        assert!(doppler_coefficients(&s).is_err());
    }

    #[test]
    fn drive_mapping() {
        let d = drive_from_lasers(hz(100e3), 0.0, 0.15, 1.0, 0.0).unwrap();
        assert!((to_hz(d.dw_plus) + 2250.0).abs() < 1e-9);
        assert_eq!(d.dw_plus, d.dw_minus);
        let s = drive_from_lasers(5.0, 5.0, 0.1, 1.0, -1.0).unwrap();
        assert_eq!(s.dw_minus, 0.0);
        assert!(s.phase >= 0.0 && s.phase < TWO_PI);
    }

    proptest! {
        #[test]
        fn detuning_sign_flips_cooling(d in 0.05f64..3.0, o in 0.1f64..5.0) {
            let red = doppler_coefficients(&spec(-d, o)).unwrap();
            let blue = doppler_coefficients(&spec(d, o)).unwrap();
            prop_assert!(red.gamma > 0.0);
            prop_assert!(blue.gamma < 0.0);
            prop_assert!((red.gamma + blue.gamma).abs() <= 1e-12 * red.gamma.abs());
        }

        #[test]
        fn quadratic_in_rabi_and_nbar_independent(d in 0.05f64..3.0, o in 0.1f64..5.0) {
            let a = doppler_coefficients(&spec(-d, o)).unwrap();
            let b = doppler_coefficients(&spec(-d, 2.0 * o)).unwrap();
            prop_assert!((b.gamma / a.gamma - 4.0).abs() < 1e-12);
            prop_assert!((b.nbar - a.nbar).abs() < 1e-12 * a.nbar);
        }
    }
}
