// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

//! Physical constants (CODATA 2018, 10 significant digits) and unit helpers.
//!
//! | symbol | value | unit |
//! |---|---|---|
//! | `E_CHARGE` | 1.602176634e-19 | C |
//! | `EPSILON_0` | 8.854187813e-12 | F/m |
//! | `HBAR` | 1.054571817e-34 | J s |
//! | `AMU` | 1.660539067e-27 | kg |
//! | `E0_SQ` = e^2/(4 pi eps0) | 2.307077552e-28 | J m |

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;
pub const E_CHARGE: f64 = 1.602176634e-19;
pub const EPSILON_0: f64 = 8.854187813e-12;
pub const HBAR: f64 = 1.054571817e-34;
pub const AMU: f64 = 1.660539067e-27;
/// Coulomb constant times the elementary charge squared, e^2/(4 pi eps0).
pub const E0_SQ: f64 = E_CHARGE * E_CHARGE / (4.0 * PI * EPSILON_0);

pub const MASS_MG24: f64 = 23.985041697 * AMU;
pub const MASS_MG25: f64 = 24.98583696 * AMU;
pub const MASS_BE9: f64 = 9.0121831 * AMU;

/// Cooling wavelength of Mg+ (3s-3p, 280 nm).
pub const LAMBDA_MG: f64 = 280e-9;
/// Cooling wavelength of Be+ (2s-2p, 313 nm).
pub const LAMBDA_BE: f64 = 313e-9;
/// Natural linewidth Gamma/2pi used for every cooling transition.
pub const LINEWIDTH_HZ: f64 = 41.4e6;
/// Transverse trap frequency omega_x/2pi shared by all species.
pub const TRANSVERSE_HZ: f64 = 5.0e6;

/// Hz (omega/2pi) to rad/s.
pub fn hz(f: f64) -> f64 {
    TWO_PI * f
}

/// rad/s to Hz.
pub fn to_hz(w: f64) -> f64 {
    w / TWO_PI
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coulomb_constant_digits() {
        assert!((E0_SQ / 2.307077552e-28 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hz_round_trip() {
        assert_eq!(to_hz(hz(5.0e6)), 5.0e6);
    }
}
