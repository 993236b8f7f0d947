// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

//! Exact dynamics on truncated Fock spaces tensored with spins.
//!
//! Basis ordering: modes first, then spins, each in declaration order; the
//! first factor is the most significant digit of the basis index. Spin state
//! `0` is `|up>` (`sz = +1`), state `1` is `|down>`.
//!
//! Dissipators follow the generic form
//! `D[L, O1, O2](rho) = L (O1 rho O2 - O2 O1 rho) + h.c.`; Doppler cooling of a
//! mode is `D[Lambda^-, a, a^dag] + D[Lambda^+, a^dag, a]`.

mod liouville;
mod operator;
mod probes;

pub use liouville::{
    expectation, lindblad_evolve, lindblad_observe, regression_spectrum, schrodinger_evolve, steady_state_dm,
    Liouvillian, Observed, SpectralResult, SpectrumMethod, Trajectory,
};
pub use operator::{Factor, Operator};
pub use probes::{
    current_operators, current_probe_exact, current_probe_setup, fano_factor, ramsey_probe, switch_scenario, CurrentProbe,
    CurrentProbeParams, RamseyOptions, RamseyResult, RamseyWindow, SwitchParams, SwitchResult,
};

use crate::error::{invalid, Error, Result};
use crate::gaussian::{GaussianGenerator, GeneratorKind};
use crate::laser::ReservoirParams;
use crate::sparse::Csr;
use crate::{CMat, RMat, C64};
use serde::{Deserialize, Serialize};

/// Largest Hilbert dimension accepted.
pub const MAX_HILBERT_DIM: usize = 4096;

/// A truncated bosonic mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub site: usize,
    pub n_max: usize,
}

/// `cos(freq t - phase)` time dependence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    /// rad/s
    pub freq: f64,
    /// rad
    pub phase: f64,
}

impl Envelope {
    pub fn at(&self, t: f64) -> f64 {
        (self.freq * t - self.phase).cos()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamTerm {
    pub op: Operator,
    pub envelope: Option<Envelope>,
}

/// `D[lambda, o1, o2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DissTerm {
    pub lambda: C64,
    pub o1: Operator,
    pub o2: Operator,
}

/// Modes, spins, Hamiltonian and dissipators.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FockSystem {
    pub modes: Vec<ModeSpec>,
    /// Site of every spin.
    pub spins: Vec<usize>,
    pub hamiltonian: Vec<HamTerm>,
    pub dissipators: Vec<DissTerm>,
}

/// Density matrix at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub rho: CMat,
    /// s
    pub time: f64,
}

impl DensityMatrix {
    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    /// Unit trace, Hermitian and PSD within the stated tolerances.
    pub fn validate(&self) -> Result<()> {
        if (self.trace() - C64::new(1.0, 0.0)).norm() > 1e-9 {
            return Err(invalid(format!("density matrix trace {} differs from 1", self.trace())));
        }
        if crate::linalg::hermiticity_error(&self.rho) > 1e-10 {
            return Err(invalid("density matrix is not Hermitian"));
        }
        if self.rho.nrows() <= 1024 {
            let ev = crate::linalg::hermitian_eigenvalues(&self.rho);
            if ev.first().is_some_and(|&e| e < -1e-8) {
                return Err(invalid("density matrix is not positive semidefinite"));
            }
        }
        Ok(())
    }
}

impl FockSystem {
    pub fn new(modes: Vec<ModeSpec>, spins: Vec<usize>) -> Self {
        FockSystem { modes, spins, hamiltonian: Vec::new(), dissipators: Vec::new() }
    }

    /// Local dimensions in basis order.
    pub fn dims(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.n_max + 1).chain(self.spins.iter().map(|_| 2)).collect()
    }

    pub fn dim(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn add_hamiltonian(&mut self, op: Operator) -> &mut Self {
        self.hamiltonian.push(HamTerm { op, envelope: None });
        self
    }

    pub fn add_drive(&mut self, op: Operator, freq: f64, phase: f64) -> &mut Self {
        self.hamiltonian.push(HamTerm { op, envelope: Some(Envelope { freq, phase }) });
        self
    }

    pub fn add_dissipator(&mut self, lambda: C64, o1: Operator, o2: Operator) -> &mut Self {
        self.dissipators.push(DissTerm { lambda, o1, o2 });
        self
    }

    /// Doppler cooling of mode `m`.
    pub fn add_cooling(&mut self, m: usize, r: &ReservoirParams) -> &mut Self {
        self.add_dissipator(r.lambda_minus, Operator::a(m), Operator::adag(m));
        self.add_dissipator(r.lambda_plus, Operator::adag(m), Operator::a(m));
        self
    }

    /// Index of the mode on chain site `site`.
    pub fn mode_of_site(&self, site: usize) -> Option<usize> {
        self.modes.iter().position(|m| m.site == site)
    }

    fn check_factors(&self, op: &Operator) -> Result<()> {
        for (_, prod) in &op.terms {
            for f in prod {
                let ok = match *f {
                    Factor::A(m) | Factor::Adag(m) | Factor::N(m) => m < self.modes.len(),
                    Factor::Sz(s) | Factor::Sp(s) | Factor::Sm(s) | Factor::Sx(s) => s < self.spins.len(),
                };
                if !ok {
                    return Err(invalid(format!("operator factor {f:?} refers to a missing mode or spin")));
                }
            }
        }
        Ok(())
    }

    /// Invariants: `n_max >= 1`, dimension guard, factor indices, Hermitian
    /// Hamiltonian within every envelope group.
    pub fn validate(&self) -> Result<()> {
        if self.modes.iter().any(|m| m.n_max < 1) {
            return Err(invalid("every mode needs n_max >= 1"));
        }
        let dim = self.dims().iter().try_fold(1usize, |a, &d| a.checked_mul(d)).unwrap_or(usize::MAX);
        if dim > MAX_HILBERT_DIM {
            return Err(Error::DimensionGuard { dim, limit: MAX_HILBERT_DIM });
        }
        for t in &self.hamiltonian {
            self.check_factors(&t.op)?;
        }
        for d in &self.dissipators {
            self.check_factors(&d.o1)?;
            self.check_factors(&d.o2)?;
        }
        for (env, op) in self.hamiltonian_groups() {
            let h = self.matrix(&op);
            let mut hd = h.transpose();
            hd.data.iter_mut().for_each(|v| *v = v.conj());
            let diff = crate::sparse::Csr::combine(&[(C64::new(1.0, 0.0), &h), (C64::new(-1.0, 0.0), &hd)]);
            let scale = h.data.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
            if diff.data.iter().any(|v| v.norm() > 1e-12 * scale) {
                return Err(invalid(format!("Hamiltonian group {env:?} is not Hermitian")));
            }
        }
        Ok(())
    }

    /// Hamiltonian terms summed per envelope (static group first).
    pub fn hamiltonian_groups(&self) -> Vec<(Option<Envelope>, Operator)> {
        let mut groups: Vec<(Option<Envelope>, Operator)> = vec![(None, Operator::zero())];
        for t in &self.hamiltonian {
            match groups.iter_mut().find(|g| g.0 == t.envelope) {
                Some(g) => g.1 = g.1.clone() + t.op.clone(),
                None => groups.push((t.envelope, t.op.clone())),
            }
        }
        groups
    }

    /// Sparse matrix of an operator in this system's basis.
    pub fn matrix(&self, op: &Operator) -> Csr {
        operator::to_csr(op, &self.dims(), self.modes.len())
    }

    /// Total vibron number of every basis state.
    pub fn charges(&self) -> Vec<usize> {
        let dims = self.dims();
        let nm = self.modes.len();
        (0..self.dim())
            .map(|s| operator::digits(s, &dims)[..nm].iter().sum())
            .collect()
    }

    /// Whether every term conserves total vibron number.
    pub fn conserves_number(&self) -> bool {
        self.hamiltonian.iter().all(|t| t.op.charge() == Some(0))
            && self.dissipators.iter().all(|d| match (d.o1.charge(), d.o2.charge()) {
                (Some(a), Some(b)) => a + b == 0,
                _ => false,
            })
    }

    /// Basis index of a product state given mode occupations and spin states
    /// (`true` = up).
    pub fn basis_index(&self, occupations: &[usize], spins_up: &[bool]) -> Result<usize> {
        if occupations.len() != self.modes.len() || spins_up.len() != self.spins.len() {
            return Err(invalid("product state does not match the system layout"));
        }
        let dims = self.dims();
        let mut idx = 0;
        for (k, &d) in dims.iter().enumerate() {
            let digit = if k < self.modes.len() {
                if occupations[k] > self.modes[k].n_max {
                    return Err(invalid("occupation above truncation"));
                }
                occupations[k]
            } else if spins_up[k - self.modes.len()] {
                0
            } else {
                1
            };
            idx = idx * d + digit;
        }
        Ok(idx)
    }

    /// Product of thermal mode states with the given mean occupations and
    /// pure spin states. The thermal tails are truncated and renormalised.
    pub fn thermal_state(&self, nbar: &[f64], spins_up: &[bool]) -> Result<DensityMatrix> {
        if nbar.len() != self.modes.len() || spins_up.len() != self.spins.len() {
            return Err(invalid("thermal state does not match the system layout"));
        }
        let dims = self.dims();
        let d = self.dim();
        let mut rho = CMat::zeros(d, d);
        let probs: Vec<Vec<f64>> = self
            .modes
            .iter()
            .zip(nbar)
            .map(|(m, &n)| {
                let q = n / (n + 1.0);
                let p: Vec<f64> = (0..=m.n_max).map(|k| q.powi(k as i32) / (n + 1.0)).collect();
                let z: f64 = p.iter().sum();
                p.iter().map(|x| x / z).collect()
            })
            .collect();
        for s in 0..d {
            let dg = operator::digits(s, &dims);
            let spin_ok = (0..self.spins.len()).all(|k| (dg[self.modes.len() + k] == 0) == spins_up[k]);
            if spin_ok {
                let p: f64 = (0..self.modes.len()).map(|k| probs[k][dg[k]]).product();
                rho[(s, s)] = C64::new(p, 0.0);
            }
        }
        Ok(DensityMatrix { rho, time: 0.0 })
    }

    /// Pure product state.
    pub fn product_state(&self, occupations: &[usize], spins_up: &[bool]) -> Result<DensityMatrix> {
        let idx = self.basis_index(occupations, spins_up)?;
        let d = self.dim();
        let mut rho = CMat::zeros(d, d);
        rho[(idx, idx)] = C64::new(1.0, 0.0);
        Ok(DensityMatrix { rho, time: 0.0 })
    }

    /// Correlator generator of a spinless, time-independent quadratic system.
    ///
    /// Hamiltonian terms must be `c a_i^dag a_j` or `c n_i`; dissipators must be
    /// `D[L, a_i, a_j^dag]` (damping) or `D[L, a_i^dag, a_j]` (pumping). These
    /// give `W = sum L_damp^dag - sum L_pump^T` and `K = sum (L_pump^T + conj L_pump)`.
    pub fn to_gaussian(&self) -> Result<GaussianGenerator> {
        if !self.spins.is_empty() {
            return Err(invalid("spins present; system is not Gaussian"));
        }
        let n = self.modes.len();
        let mut j = CMat::zeros(n, n);
        for t in &self.hamiltonian {
            if t.envelope.is_some() {
                return Err(invalid("time-dependent terms are not supported in the Gaussian mapping"));
            }
            for (c, prod) in &t.op.terms {
                match prod.as_slice() {
                    [Factor::N(i)] => j[(*i, *i)] += c,
                    [Factor::Adag(i), Factor::A(k)] => j[(*i, *k)] += c,
                    [] => {}
                    other => return Err(invalid(format!("non-quadratic Hamiltonian term {other:?}"))),
                }
            }
        }
        let mut w = CMat::zeros(n, n);
        let mut k = CMat::zeros(n, n);
        for d in &self.dissipators {
            for (c1, p1) in &d.o1.terms {
                for (c2, p2) in &d.o2.terms {
                    let lam = d.lambda * c1 * c2;
                    match (p1.as_slice(), p2.as_slice()) {
                        ([Factor::A(i)], [Factor::Adag(jj)]) => w[(*jj, *i)] += lam.conj(),
                        ([Factor::Adag(i)], [Factor::A(jj)]) => {
                            w[(*jj, *i)] -= lam;
                            k[(*jj, *i)] += lam;
                            k[(*i, *jj)] += lam.conj();
                        }
                        _ => return Err(invalid("dissipator is not of damping or pumping form")),
                    }
                }
            }
        }
        Ok(GaussianGenerator {
            jmat: j,
            wmat: w,
            kmat: k,
            dmat: RMat::zeros(n, n),
            kind: GeneratorKind::Edge,
            sites: self.modes.iter().map(|m| m.site).collect(),
            frame_freq: 0.0,
            warnings: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests;
