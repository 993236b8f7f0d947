// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

//! Ion crystal geometry and the vibron tight-binding model.
//!
//! Transverse vibrations of neighbouring ions couple through the Coulomb
//! interaction. Under the rotating-wave approximation the transverse modes map
//! to bosons ("vibrons") hopping along the chain:
//!
//! `H = sum_i w_i n_i + sum_{i != j} J_ij a_i^dag a_j`,
//! `J_ij = e0^2 / (2 sqrt(m_i w_i m_j w_j) |z_i - z_j|^3)`,
//! `w_i = w_alpha - sum_{j != i} J_ij`.

use crate::constants::{self, E0_SQ, TWO_PI};
use crate::error::{invalid, Error, Result};
use crate::{CMat, C64};
use serde::{Deserialize, Serialize};

/// Role of an ion in the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// Transport (bulk) ion.
    Sigma,
    /// Laser-cooled reservoir ion.
    Tau,
    /// Probe or control ion.
    Kappa,
}

/// An ion species with its transverse trap frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonSpecies {
    pub label: Role,
    pub name: String,
    /// kg
    pub mass: f64,
    /// rad/s
    pub transverse_freq: f64,
    /// Natural linewidth of the cooling transition, rad/s.
    pub linewidth: f64,
    /// Cooling wavelength, m.
    pub cooling_wavelength: f64,
}

impl IonSpecies {
    fn preset(label: Role, name: &str, mass: f64, wavelength: f64) -> Self {
        IonSpecies {
            label,
            name: name.to_string(),
            mass,
            transverse_freq: constants::hz(constants::TRANSVERSE_HZ),
            linewidth: constants::hz(constants::LINEWIDTH_HZ),
            cooling_wavelength: wavelength,
        }
    }

    /// 24Mg+ reservoir ion.
    pub fn mg24() -> Self {
        Self::preset(Role::Tau, "24Mg+", constants::MASS_MG24, constants::LAMBDA_MG)
    }

    /// 25Mg+ transport ion.
    pub fn mg25() -> Self {
        Self::preset(Role::Sigma, "25Mg+", constants::MASS_MG25, constants::LAMBDA_MG)
    }

    /// 9Be+ probe ion.
    pub fn be9() -> Self {
        Self::preset(Role::Kappa, "9Be+", constants::MASS_BE9, constants::LAMBDA_BE)
    }

    /// Same species with a different role tag.
    pub fn with_role(mut self, label: Role) -> Self {
        self.label = label;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) {
            return Err(invalid(format!("species {}: mass must be positive", self.name)));
        }
        if !(self.transverse_freq > 0.0) {
            return Err(invalid(format!("species {}: transverse frequency must be positive", self.name)));
        }
        if !(self.linewidth >= 0.0) {
            return Err(invalid(format!("species {}: linewidth must be non-negative", self.name)));
        }
        Ok(())
    }
}

/// Trap geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrapConfig {
    /// Linear Paul trap with axial frequency in rad/s.
    PaulTrap { axial_freq: f64, n_sites: usize },
    /// Array of microtraps with fixed spacing in m.
    UniformLattice { spacing: f64, n_sites: usize },
}

impl TrapConfig {
    pub fn n_sites(&self) -> usize {
        match *self {
            TrapConfig::PaulTrap { n_sites, .. } | TrapConfig::UniformLattice { n_sites, .. } => n_sites,
        }
    }
}

/// Equilibrium positions plus the species at each site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainGeometry {
    /// m, strictly increasing.
    pub positions: Vec<f64>,
    /// Index into `species` for every site.
    pub species_of: Vec<usize>,
    pub species: Vec<IonSpecies>,
    /// Largest axial force residual relative to `m_min w_z^2 l`; zero for lattices.
    pub force_residual: f64,
    pub iterations: usize,
}

impl ChainGeometry {
    pub fn n_sites(&self) -> usize {
        self.positions.len()
    }

    pub fn species_at(&self, site: usize) -> &IonSpecies {
        &self.species[self.species_of[site]]
    }

    /// Distance between two sites, m.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        (self.positions[i] - self.positions[j]).abs()
    }
}

/// On-site energies and long-range tunnelings.
#[derive(Debug, Clone, PartialEq)]
pub struct TightBinding {
    /// `w_alpha + J_ii` plus any applied offsets, rad/s.
    pub onsite: Vec<f64>,
    /// Hermitian, zero diagonal, rad/s.
    pub tunneling: CMat,
    /// Accumulated static offsets, rad/s.
    pub offsets: Vec<f64>,
    /// Set when `max |J_ij| / (w_i + w_j) > 0.05`.
    pub rwa_warning: bool,
}

impl TightBinding {
    pub fn n_sites(&self) -> usize {
        self.onsite.len()
    }

    /// Build directly from on-site energies and a Hermitian tunneling matrix.
    pub fn from_parts(onsite: Vec<f64>, tunneling: CMat) -> Result<Self> {
        let n = onsite.len();
        if tunneling.nrows() != n || tunneling.ncols() != n {
            return Err(invalid("tunneling matrix shape does not match onsite length"));
        }
        for i in 0..n {
            if tunneling[(i, i)] != C64::new(0.0, 0.0) {
                return Err(invalid("tunneling diagonal must be zero"));
            }
            for j in 0..n {
                if tunneling[(i, j)] != tunneling[(j, i)].conj() {
                    return Err(invalid("tunneling matrix must be Hermitian"));
                }
            }
        }
        Ok(TightBinding { offsets: vec![0.0; n], onsite, tunneling, rwa_warning: false })
    }

    /// Add static per-site shifts to the on-site energies.
    pub fn apply_offsets(&self, offsets: &[f64]) -> Result<TightBinding> {
        if offsets.len() != self.n_sites() {
            return Err(invalid(format!(
                "offset length {} does not match {} sites",
                offsets.len(),
                self.n_sites()
            )));
        }
        let mut out = self.clone();
        for (i, &o) in offsets.iter().enumerate() {
            out.onsite[i] += o;
            out.offsets[i] += o;
        }
        Ok(out)
    }

    /// Real tunneling entry, for chains built from geometry.
    pub fn j(&self, i: usize, j: usize) -> f64 {
        self.tunneling[(i, j)].re
    }
}

/// Solve the axial force balance (Paul trap) or place ions on a lattice.
///
/// `species_of[i]` indexes into `species`.
pub fn equilibrium_positions(
    trap: &TrapConfig,
    species: &[IonSpecies],
    species_of: &[usize],
) -> Result<ChainGeometry> {
    let n = trap.n_sites();
    if n < 2 {
        return Err(invalid("a chain needs at least 2 sites"));
    }
    if species_of.len() != n {
        return Err(invalid(format!("species assignment has {} entries for {} sites", species_of.len(), n)));
    }
    for s in species {
        s.validate()?;
    }
    if let Some(&bad) = species_of.iter().find(|&&k| k >= species.len()) {
        return Err(invalid(format!("species index {bad} out of range")));
    }
    let mut geom = ChainGeometry {
        positions: Vec::new(),
        species_of: species_of.to_vec(),
        species: species.to_vec(),
        force_residual: 0.0,
        iterations: 0,
    };
    match *trap {
        TrapConfig::UniformLattice { spacing, .. } => {
            if !(spacing > 0.0) {
                return Err(invalid("lattice spacing must be positive"));
            }
            let c = (n as f64 - 1.0) / 2.0;
            geom.positions = (0..n).map(|i| (i as f64 - c) * spacing).collect();
        }
        TrapConfig::PaulTrap { axial_freq, .. } => {
            if !(axial_freq > 0.0) {
                return Err(invalid("axial frequency must be positive"));
            }
            let masses: Vec<f64> = species_of.iter().map(|&k| species[k].mass).collect();
            let m_min = masses.iter().cloned().fold(f64::INFINITY, f64::min);
            let ratios: Vec<f64> = masses.iter().map(|m| m / m_min).collect();
            let (u, iters, res) = solve_dimensionless(&ratios)?;
            let ell = (E0_SQ / (m_min * axial_freq * axial_freq)).cbrt();
            geom.positions = u.iter().map(|x| x * ell).collect();
            geom.force_residual = res;
            geom.iterations = iters;
        }
    }
    Ok(geom)
}

const NEWTON_TOL: f64 = 1e-13;
const NEWTON_MAX_ITER: usize = 200;

fn forces(mr: &[f64], u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| {
            let mut f = -mr[i] * u[i];
            for j in 0..n {
                if j != i {
                    let d = u[i] - u[j];
                    f += d.signum() / (d * d);
                }
            }
            f
        })
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Newton iteration on `mr_i u_i = sum_j sign(u_i - u_j)/(u_i - u_j)^2`.
fn solve_dimensionless(mr: &[f64]) -> Result<(Vec<f64>, usize, f64)> {
    let n = mr.len();
    let half = n.saturating_sub(1) as f64 / 2.0;
    let scale = (n as f64).powf(0.56) / half.max(1.0);
    let mut u: Vec<f64> = (0..n).map(|i| (i as f64 - half) * scale).collect();
    let mut f = forces(mr, &u);
    for it in 1..=NEWTON_MAX_ITER {
        // Jacobian of the residual -F: diag(mr + sum K) - K, K_ij = 2/|d|^3
        let mut jac = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            jac[(i, i)] = mr[i];
            for j in 0..n {
                if j != i {
                    let k = 2.0 / (u[i] - u[j]).abs().powi(3);
                    jac[(i, i)] += k;
                    jac[(i, j)] -= k;
                }
            }
        }
        let rhs = nalgebra::DVector::from_vec(f.clone());
        let step = jac
            .lu()
            .solve(&rhs)
            .ok_or(Error::NoConvergence { iterations: it, residual: max_abs(&f) })?;
        // Damp until ordering is kept and the residual does not grow.
        let mut alpha = 1.0;
        let f0 = max_abs(&f);
        loop {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, s)| a + alpha * s).collect();
            let ordered = trial.windows(2).all(|w| w[1] > w[0]);
            if ordered {
                let ft = forces(mr, &trial);
                if max_abs(&ft) <= f0 || alpha < 1e-3 {
                    u = trial;
                    f = ft;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-6 {
                return Err(Error::NoConvergence { iterations: it, residual: f0 });
            }
        }
        let step_norm = alpha * max_abs(step.as_slice());
        if step_norm < NEWTON_TOL && max_abs(&f) < 1e-12 {
            return Ok((u, it, max_abs(&f)));
        }
    }
    Err(Error::NoConvergence { iterations: NEWTON_MAX_ITER, residual: max_abs(&f) })
}

/// Net axial force on every ion, N.
pub fn axial_forces(geom: &ChainGeometry, axial_freq: f64) -> Vec<f64> {
    let n = geom.n_sites();
    (0..n)
        .map(|i| {
            let m = geom.species_at(i).mass;
            let mut f = -m * axial_freq * axial_freq * geom.positions[i];
            for j in 0..n {
                if j != i {
                    let d = geom.positions[i] - geom.positions[j];
                    f += E0_SQ * d.signum() / (d * d);
                }
            }
            f
        })
        .collect()
}

/// Long-range tunneling matrix and renormalised on-site energies.
pub fn tunneling_matrix(geom: &ChainGeometry) -> Result<TightBinding> {
    let n = geom.n_sites();
    if geom.species_of.len() != n {
        return Err(Error::InvalidGeometry("species assignment length mismatch".into()));
    }
    let mut t = CMat::zeros(n, n);
    let mut rwa_warning = false;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = geom.distance(i, j);
            if !(d > 0.0) {
                return Err(Error::InvalidGeometry(format!("sites {i} and {j} coincide")));
            }
            let (si, sj) = (geom.species_at(i), geom.species_at(j));
            let denom = 2.0 * (si.mass * si.transverse_freq * sj.mass * sj.transverse_freq).sqrt() * d.powi(3);
            let jij = E0_SQ / denom;
            if jij / (si.transverse_freq + sj.transverse_freq) > 0.05 {
                rwa_warning = true;
            }
            t[(i, j)] = C64::new(jij, 0.0);
            t[(j, i)] = C64::new(jij, 0.0);
        }
    }
    let onsite = (0..n)
        .map(|i| {
            let s: f64 = (0..n).filter(|&j| j != i).map(|j| t[(i, j)].re).sum();
            geom.species_at(i).transverse_freq - s
        })
        .collect();
    Ok(TightBinding { onsite, tunneling: t, offsets: vec![0.0; n], rwa_warning })
}

/// `(i, j, J_ij / 2pi)` rows for every pair `i < j`.
pub fn tunneling_table(tb: &TightBinding) -> Vec<(usize, usize, f64)> {
    let n = tb.n_sites();
    let mut rows = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            rows.push((i, j, tb.tunneling[(i, j)].re / TWO_PI));
        }
    }
    rows
}
