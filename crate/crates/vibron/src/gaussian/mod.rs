// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

//! Closed correlator dynamics for quadratic open vibron models.
//!
//! For `C_ij = <a_i^dag a_j>` every quadratic Lindbladian considered here gives
//!
//! `dC/dt = A C + C A^dag - D o C + K`, `A = i J^T - W`,
//!
//! where `J` is the single-particle Hamiltonian, `W` the damping matrix, `K`
//! the pumping matrix and `D` the dephasing matrix (`o` is the elementwise
//! product). [`build_edge_generator`] keeps the reservoir ions explicitly;
//! [`build_bulk_generator`] eliminates them adiabatically.

mod currents;
mod disorder;
mod solve;

pub use currents::{
    current_operator, fano_factor, quadratic_noise, site_currents, theory_predictions, upsilon, NoiseResult,
    SiteCurrents, TheoryPrediction,
};
pub use disorder::{disorder_average, disorder_configs, DisorderMode, DisorderModel, DisorderResult};
pub use solve::{evolve, evolve_at, hurwitz_abscissa, rhs, steady_state, steady_state_with, unreached_sites, SteadyOptions};

use crate::chain::{ChainGeometry, TightBinding};
use crate::error::{invalid, Result};
use crate::laser::ReservoirParams;
use crate::{CMat, RMat, C64};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Reservoirs keyed by chain site.
pub type Reservoirs = BTreeMap<usize, ReservoirParams>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Edge,
    Bulk,
}

/// Matrices of the correlator equation.
///
/// `jmat` is stored relative to `frame_freq` (a uniform shift of all on-site
/// energies drops out of the commutator exactly and improves conditioning).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianGenerator {
    pub jmat: CMat,
    pub wmat: CMat,
    pub kmat: CMat,
    pub dmat: RMat,
    pub kind: GeneratorKind,
    /// Chain site of every row.
    pub sites: Vec<usize>,
    /// rad/s subtracted from the diagonal of `jmat`.
    pub frame_freq: f64,
    pub warnings: Vec<String>,
}

impl GaussianGenerator {
    pub fn dim(&self) -> usize {
        self.jmat.nrows()
    }

    /// `A = i J^T - W`.
    pub fn a_matrix(&self) -> CMat {
        self.jmat.transpose() * C64::new(0.0, 1.0) - &self.wmat
    }

    pub fn has_dephasing(&self) -> bool {
        self.dmat.iter().any(|&d| d != 0.0)
    }

    /// Replace the dephasing matrix by the rows/columns of a chain-sized `d`
    /// that belong to this generator's sites.
    pub fn with_dephasing(mut self, d: &RMat) -> Result<Self> {
        let n = self.dim();
        let nmax = self.sites.iter().max().map(|m| m + 1).unwrap_or(0);
        if d.nrows() < nmax || d.ncols() < nmax {
            return Err(invalid("dephasing matrix smaller than the chain"));
        }
        self.dmat = RMat::from_fn(n, n, |i, j| d[(self.sites[i], self.sites[j])]);
        Ok(self)
    }

    /// Row of chain site `site`, if present.
    pub fn row_of(&self, site: usize) -> Option<usize> {
        self.sites.iter().position(|&s| s == site)
    }

    /// Check the structural invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        for m in [&self.wmat, &self.kmat] {
            if m.nrows() != n || m.ncols() != n {
                return Err(invalid("generator matrices have inconsistent shapes"));
            }
        }
        if self.dmat.nrows() != n || self.dmat.ncols() != n {
            return Err(invalid("dephasing matrix has the wrong shape"));
        }
        let scale = crate::linalg::max_abs(&self.jmat).max(1.0);
        if crate::linalg::hermiticity_error(&self.jmat) > 1e-12 * scale {
            return Err(invalid("J matrix is not Hermitian"));
        }
        let kscale = crate::linalg::max_abs(&self.kmat).max(1e-300);
        if crate::linalg::hermiticity_error(&self.kmat) > 1e-12 * kscale {
            return Err(invalid("K matrix is not Hermitian"));
        }
        for i in 0..n {
            if self.dmat[(i, i)] != 0.0 {
                return Err(invalid("dephasing matrix must have zero diagonal"));
            }
            for j in 0..n {
                if self.dmat[(i, j)] != self.dmat[(j, i)] || self.dmat[(i, j)] < 0.0 {
                    return Err(invalid("dephasing matrix must be symmetric and non-negative"));
                }
            }
        }
        Ok(())
    }
}

/// Correlation matrix `C_ij = <a_i^dag a_j>` at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorState {
    pub cmat: CMat,
    /// s
    pub time: f64,
}

impl CorrelatorState {
    pub fn new(cmat: CMat, time: f64) -> Self {
        CorrelatorState { cmat, time }
    }

    /// Diagonal product state with the given occupations.
    pub fn diagonal(occ: &[f64]) -> Self {
        let n = occ.len();
        CorrelatorState::new(CMat::from_fn(n, n, |i, j| if i == j { C64::new(occ[i], 0.0) } else { C64::new(0.0, 0.0) }), 0.0)
    }

    pub fn occupations(&self) -> Vec<f64> {
        (0..self.cmat.nrows()).map(|i| self.cmat[(i, i)].re).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        crate::linalg::hermitian_eigenvalues(&self.cmat).first().cloned().unwrap_or(0.0)
    }

    /// Hermitian to 1e-10 (relative to 1 + max |C|), PSD to -1e-8.
    pub fn validate(&self) -> Result<()> {
        let scale = 1.0 + crate::linalg::max_abs(&self.cmat);
        if crate::linalg::hermiticity_error(&self.cmat) > 1e-10 * scale {
            return Err(invalid("correlator is not Hermitian"));
        }
        if self.min_eigenvalue() < -1e-8 * scale {
            return Err(invalid("correlator is not positive semidefinite"));
        }
        Ok(())
    }
}

/// Spatially correlated trap-frequency noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// rad/s
    pub gamma_d: f64,
    /// m
    pub xi_c: f64,
    /// s (metadata)
    pub tau_c: f64,
}

/// `D_ij = 2 Gamma_d (1 - exp(-|z_i - z_j| / xi_c))`.
pub fn dephasing_matrix(geom: &ChainGeometry, noise: &NoiseModel) -> Result<RMat> {
    if !(noise.gamma_d >= 0.0) || !(noise.xi_c > 0.0) {
        return Err(invalid("noise model needs gamma_d >= 0 and xi_c > 0"));
    }
    let n = geom.n_sites();
    Ok(RMat::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            2.0 * noise.gamma_d * (1.0 - (-geom.distance(i, j) / noise.xi_c).exp())
        }
    }))
}

fn check_reservoirs(tb: &TightBinding, reservoirs: &Reservoirs) -> Result<()> {
    for (&site, r) in reservoirs {
        if site >= tb.n_sites() {
            return Err(invalid(format!("reservoir on nonexistent site {site}")));
        }
        if r.heating || !(r.gamma > 0.0) {
            return Err(invalid(format!("reservoir at site {site} does not cool (gamma = {:.3e})", r.gamma)));
        }
    }
    Ok(())
}

fn mean_onsite(onsite: &[f64]) -> f64 {
    onsite.iter().sum::<f64>() / onsite.len().max(1) as f64
}

/// Generator with the reservoir ions kept explicitly.
///
/// `J = diag(w) + J_tb`, `W_ll = (Lambda^-)^* - Lambda^+`, `K_ll = 2 Re Lambda^+`.
pub fn build_edge_generator(tb: &TightBinding, reservoirs: &Reservoirs) -> Result<GaussianGenerator> {
    check_reservoirs(tb, reservoirs)?;
    let n = tb.n_sites();
    let frame = mean_onsite(&tb.onsite);
    let mut jmat = tb.tunneling.clone();
    for i in 0..n {
        jmat[(i, i)] = C64::new(tb.onsite[i] - frame, 0.0);
    }
    let mut wmat = CMat::zeros(n, n);
    let mut kmat = CMat::zeros(n, n);
    for (&l, r) in reservoirs {
        wmat[(l, l)] += r.w();
        kmat[(l, l)] += C64::new(2.0 * r.lambda_plus.re, 0.0);
    }
    Ok(GaussianGenerator {
        jmat,
        wmat,
        kmat,
        dmat: RMat::zeros(n, n),
        kind: GeneratorKind::Edge,
        sites: (0..n).collect(),
        frame_freq: frame,
        warnings: if tb.rwa_warning { vec!["tunneling not small against trap frequencies (RWA)".into()] } else { vec![] },
    })
}

/// Generator for the bulk after adiabatic elimination of the edge reservoirs.
///
/// `Upsilon^l_ij = J_il J_lj / (gamma_l - i(w_i - delta_l - w_l))`; its
/// imaginary part renormalises the bulk Hamiltonian, its real part weighted by
/// `nbar_l` (`nbar_l + 1`) gives the effective heating (cooling) matrices.
pub fn build_bulk_generator(tb: &TightBinding, reservoirs: &Reservoirs) -> Result<GaussianGenerator> {
    check_reservoirs(tb, reservoirs)?;
    let n = tb.n_sites();
    for &l in reservoirs.keys() {
        if l != 0 && l != n - 1 {
            return Err(invalid(format!("reservoir at site {l} is not at a chain edge")));
        }
    }
    let bulk: Vec<usize> = (0..n).filter(|s| !reservoirs.contains_key(s)).collect();
    if bulk.is_empty() {
        return Err(invalid("no bulk sites left after elimination"));
    }
    let nb = bulk.len();
    let mut warnings = Vec::new();
    let max_j = crate::linalg::max_abs(&tb.tunneling);
    let mut jt = CMat::from_fn(nb, nb, |a, b| tb.tunneling[(bulk[a], bulk[b])]);
    let mut lam_p = CMat::zeros(nb, nb);
    let mut lam_m = CMat::zeros(nb, nb);
    for (&l, r) in reservoirs {
        if 2.0 * r.gamma < 10.0 * max_j {
            warnings.push(format!(
                "weak cooling at site {l}: 2 gamma = {:.3e} < 10 max|J| = {:.3e}",
                2.0 * r.gamma,
                10.0 * max_j
            ));
        }
        let ups = upsilon(tb, &bulk, l, r);
        for a in 0..nb {
            for b in 0..nb {
                let u = ups[(a, b)];
                jt[(a, b)] += C64::new(u.im, 0.0);
                lam_p[(a, b)] += C64::new(u.re * r.nbar, 0.0);
                lam_m[(a, b)] += C64::new(u.re * (r.nbar + 1.0), 0.0);
            }
        }
    }
    let onsite: Vec<f64> = bulk.iter().map(|&s| tb.onsite[s]).collect();
    let frame = mean_onsite(&onsite);
    for a in 0..nb {
        jt[(a, a)] += C64::new(onsite[a] - frame, 0.0);
    }
    let jmat = crate::linalg::hermitian_part(&jt);
    let lam_p = crate::linalg::hermitian_part(&lam_p);
    let lam_m = crate::linalg::hermitian_part(&lam_m);
    let wmat = lam_m.map(|z| z.conj()) - &lam_p;
    let kmat = &lam_p + lam_p.adjoint();
    Ok(GaussianGenerator {
        jmat,
        wmat,
        kmat,
        dmat: RMat::zeros(nb, nb),
        kind: GeneratorKind::Bulk,
        sites: bulk,
        frame_freq: frame,
        warnings,
    })
}
