// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

//! Vibron heat transport in laser-cooled trapped-ion chains.
//!
//! The crate is organised bottom-up:
//!
//! * [`chain`] builds the Coulomb crystal and its tight-binding model.
//! * [`laser`] turns laser parameters into reservoir and drive constants.
//! * [`gaussian`] evolves and solves the closed correlator equation for
//!   quadratic open dynamics (edge and bulk generators, dephasing, disorder).
//! * [`fock`] is the exact engine on truncated Fock and spin spaces: master
//!   equation, regression spectra, Ramsey probes, the spin switch.
//! * [`experiments`] wires everything into named scenarios.
//! * [`io`] handles configuration, manifests and dataset emission.
//!
//! Frequencies are angular (rad/s) everywhere inside the library. Config
//! files and CSV headers use Hz, i.e. `omega / 2 pi`.
//!
//! ```
//! use vibron::chain::{IonSpecies, TrapConfig, equilibrium_positions, tunneling_matrix};
//! use vibron::constants::TWO_PI;
//!
//! let species = [IonSpecies::mg24(), IonSpecies::mg25()];
//! let trap = TrapConfig::PaulTrap { axial_freq: TWO_PI * 0.5e6, n_sites: 2 };
//! let geom = equilibrium_positions(&trap, &species, &[1, 0]).unwrap();
//! let tb = tunneling_matrix(&geom).unwrap();
//! let j_khz = tb.tunneling[(0, 1)].re / TWO_PI / 1e3;
//! assert!((j_khz - 12.5).abs() < 0.1);
//! ```

pub mod bessel;
pub mod chain;
pub mod constants;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod fock;
pub mod gaussian;
pub mod io;
pub mod laser;
pub mod linalg;
pub mod ode;
pub mod sparse;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense real matrix.
pub type RMat = nalgebra::DMatrix<f64>;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/chain.md")]
    pub mod chain {}
    #[doc = include_str!("../../../book/src/reservoirs.md")]
    pub mod reservoirs {}
    #[doc = include_str!("../../../book/src/correlators.md")]
    pub mod correlators {}
    #[doc = include_str!("../../../book/src/bulk.md")]
    pub mod bulk {}
    #[doc = include_str!("../../../book/src/dephasing.md")]
    pub mod dephasing {}
    #[doc = include_str!("../../../book/src/fock.md")]
    pub mod fock {}
    #[doc = include_str!("../../../book/src/ramsey.md")]
    pub mod ramsey {}
    #[doc = include_str!("../../../book/src/switch.md")]
    pub mod switch {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
