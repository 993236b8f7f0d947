// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

//! Ramsey probes, the single-spin switch, the current probe and Fano factors.

use super::liouville::{schrodinger_run, HamParts, Liouvillian};
use super::{
    lindblad_observe, regression_spectrum, DensityMatrix, Factor, FockSystem, ModeSpec, Operator, SpectralResult,
    SpectrumMethod,
};
use crate::bessel::{bessel_j, first_max_j1, spin_current_coupling};
use crate::chain::{equilibrium_positions, tunneling_matrix, IonSpecies, Role, TightBinding, TrapConfig};
use crate::constants::hz;
use crate::error::{invalid, Error, Result};
use crate::fit::{fit_damped_cosine, DampedCosineFit};
use crate::laser::ReservoirParams;
use crate::sparse::Csr;
use crate::{CMat, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Sampling of the probe coherence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RamseyWindow {
    /// Explicit ascending times, s.
    Grid(Vec<f64>),
    /// Uniform grid of `points` samples ending when the coherence has fallen
    /// below `e^-3`, searched up to `max_time` (s).
    Auto { points: usize, max_time: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamseyOptions {
    /// Chain site of the probe spin (labels the spin only).
    pub probe_site: usize,
    pub window: RamseyWindow,
}

/// Fitted probe coherence.
#[derive(Debug, Clone, PartialEq)]
pub struct RamseyResult {
    pub times: Vec<f64>,
    pub sx: Vec<f64>,
    pub sy: Vec<f64>,
    pub fit: Option<DampedCosineFit>,
    /// Set when the fit failed; the raw trace is still returned.
    pub fit_error: Option<String>,
    /// `a / lambda` with the sign of the precession.
    pub mean: Option<f64>,
    /// `b / lambda^2`
    pub noise0: Option<f64>,
    pub warnings: Vec<String>,
}

/// Smallest coherent or dissipative rate of a system, used for the weak-probe
/// warning.
fn slowest_rate(sys: &FockSystem) -> Option<f64> {
    let mut rates = Vec::new();
    for t in &sys.hamiltonian {
        for (c, p) in &t.op.terms {
            if let [Factor::Adag(i), Factor::A(j)] = p.as_slice() {
                if i != j && c.norm() > 0.0 {
                    rates.push(c.norm());
                }
            }
        }
    }
    let mut gamma = vec![0.0; sys.modes.len()];
    for d in &sys.dissipators {
        if let (Some((c1, p1)), Some((c2, p2))) = (d.o1.terms.first(), d.o2.terms.first()) {
            let lam = (d.lambda * c1 * c2).re * 2.0;
            match (p1.as_slice(), p2.as_slice()) {
                ([Factor::A(i)], [Factor::Adag(j)]) if i == j => gamma[*i] += lam,
                ([Factor::Adag(i)], [Factor::A(j)]) if i == j => gamma[*i] -= lam,
                _ => {}
            }
        }
    }
    rates.extend(gamma.into_iter().filter(|g| *g > 0.0));
    rates.into_iter().reduce(f64::min)
}

/// Couple a probe spin to `observable` through `lambda/2 O sigma^z`, start it in
/// `|+>` on top of the steady state, and fit `<sigma^x>(t)`.
pub fn ramsey_probe(sys: &FockSystem, lambda: f64, observable: &Operator, opts: &RamseyOptions) -> Result<RamseyResult> {
    if !(lambda.is_finite() && lambda != 0.0) {
        return Err(invalid("probe coupling must be finite and nonzero"));
    }
    sys.validate()?;
    let mut probe_check = FockSystem::new(sys.modes.clone(), sys.spins.clone());
    probe_check.add_hamiltonian(observable.clone());
    probe_check.validate().map_err(|_| invalid("probe observable must be Hermitian"))?;
    let mut warnings = Vec::new();
    if let Some(r) = slowest_rate(sys) {
        if lambda.abs() > 0.1 * r {
            warnings.push(format!(
                "probe coupling {:.3e} rad/s exceeds 0.1 x slowest system rate {:.3e} rad/s",
                lambda.abs(),
                r
            ));
        }
    }
    let mu = super::steady_state_dm(sys)?;
    let mean_o = super::expectation(sys, &mu, observable).re;

    let mut ext = sys.clone();
    ext.spins.push(opts.probe_site);
    let p = ext.spins.len() - 1;
    ext.add_hamiltonian(observable.clone() * Operator::sz(p) * (0.5 * lambda));
    let d = sys.dim();
    let mut rho = CMat::zeros(2 * d, 2 * d);
    for r in 0..d {
        for c in 0..d {
            let v = mu.rho[(r, c)] * 0.5;
            if v != ZERO {
                for s in 0..2 {
                    for s2 in 0..2 {
                        rho[(2 * r + s, 2 * c + s2)] = v;
                    }
                }
            }
        }
    }
    let rho0 = DensityMatrix { rho, time: 0.0 };
    let obs = [Operator::sx(p), Operator::sy(p)];

    let times = match &opts.window {
        RamseyWindow::Grid(t) => t.clone(),
        RamseyWindow::Auto { points, max_time } => {
            if *points < 8 || !(*max_time > 0.0) {
                return Err(invalid("auto window needs at least 8 points and a positive max_time"));
            }
            let freq = (lambda * mean_o).abs();
            let dt = if freq > 0.0 { (2.0 * PI / freq / 16.0).min(max_time / 64.0) } else { max_time / 400.0 };
            let n = (max_time / dt).ceil() as usize;
            let probe: Vec<f64> = (0..=n).map(|k| (k as f64 * dt).min(*max_time)).collect();
            let coarse = lindblad_observe_until(&ext, &rho0, &probe, &obs, (-3.0f64).exp())?;
            let t_end = match coarse {
                Some(t) => t,
                None => {
                    warnings.push(format!("coherence above e^-3 up to max_time {max_time:.3e} s"));
                    *max_time
                }
            };
            (0..*points).map(|k| t_end * k as f64 / (*points - 1) as f64).collect()
        }
    };
    let run = lindblad_observe(&ext, &rho0, &times, &obs)?;
    let sx = run.series(0);
    let sy = run.series(1);
    let (fit, fit_error) = match fit_damped_cosine(&times, &sx) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let (mean, noise0) = match &fit {
        Some(f) => {
            let proj: f64 = times.iter().zip(&sy).map(|(&t, &y)| y * (f.a * t).sin()).sum();
            let a = if proj < 0.0 { -f.a } else { f.a };
            (Some(a / lambda), Some(f.b / (lambda * lambda)))
        }
        None => (None, None),
    };
    Ok(RamseyResult { times, sx, sy, fit, fit_error, mean, noise0, warnings })
}

/// Evolve until `|<O_0> + i <O_1>|` falls below `threshold`; returns that time.
fn lindblad_observe_until(
    sys: &FockSystem,
    rho0: &DensityMatrix,
    times: &[f64],
    obs: &[Operator; 2],
    threshold: f64,
) -> Result<Option<f64>> {
    let l = Liouvillian::new(sys, true)?;
    let mut x = l.vectorize(&rho0.rho)?;
    let f: Vec<Vec<(usize, C64)>> = obs.iter().map(|o| l.functional(&sys.matrix(o))).collect();
    let mut hit = None;
    crate::ode::integrate(
        |t, x, y| l.apply(t, x, y),
        0.0,
        &mut x,
        times,
        &crate::ode::OdeOptions { rtol: 1e-8, atol: 1e-11, ..Default::default() },
        |t, x| {
            let v: Vec<C64> = f.iter().map(|fi| fi.iter().map(|&(k, c)| c * x[k]).sum()).collect();
            let coh = (v[0].re.powi(2) + v[1].re.powi(2)).sqrt();
            if coh < threshold {
                hit = Some(t);
                return false;
            }
            true
        },
        |_| false,
    )?;
    Ok(hit)
}

/// `sigma - kappa - sigma` chain used by the switch and the current probe.
fn switch_chain(axial_freq: f64) -> Result<TightBinding> {
    let species = vec![IonSpecies::mg25().with_role(Role::Sigma), IonSpecies::be9().with_role(Role::Kappa)];
    let geom = equilibrium_positions(&TrapConfig::PaulTrap { axial_freq, n_sites: 3 }, &species, &[0, 1, 0])?;
    tunneling_matrix(&geom)
}

/// Static part shared by the exact switch and current-probe Hamiltonians:
/// on-site energies relative to the dot, all tunnelings, and the frozen
/// sigma-spin shifts `1/2 (dw+ + dw- sz) n` on both leads.
fn lead_hamiltonian(tb: &TightBinding, dw_minus_sigma: f64) -> Operator {
    let w_ref = tb.onsite[1];
    let mut h = Operator::zero();
    for i in 0..3 {
        h = h + Operator::n(i) * (tb.onsite[i] - w_ref);
        for j in 0..3 {
            if i != j {
                h = h + Operator::adag(i) * Operator::a(j) * tb.j(i, j);
            }
        }
    }
    for (mode, spin) in [(0usize, 0usize), (2, 2)] {
        let dw_plus = 2.0 * (tb.onsite[1] - tb.onsite[mode]);
        h = h + Operator::n(mode) * (0.5 * dw_plus) + Operator::sz(spin) * Operator::n(mode) * (0.5 * dw_minus_sigma);
    }
    h
}

/// Parameters of the spin-controlled switch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchParams {
    pub zeta: f64,
    pub r: f64,
    /// Initial kappa spin.
    pub spin_up: bool,
    /// Requested pi-pulse times, s; snapped to whole drive periods.
    pub pulse_times: Vec<f64>,
    /// rad/s
    pub axial_freq: f64,
    /// Lead offset in units of the lead-dot tunneling.
    pub offset_ratio: f64,
    pub n_points: usize,
    /// Simulation window, s; defaults to the complete-transfer time of the
    /// optimal drive.
    pub t_final: Option<f64>,
}

impl Default for SwitchParams {
    fn default() -> Self {
        SwitchParams {
            zeta: first_max_j1() / 2.0,
            r: 1.0,
            spin_up: true,
            pulse_times: Vec::new(),
            axial_freq: hz(0.1e6),
            offset_ratio: 1e3,
            n_points: 200,
            t_final: None,
        }
    }
}

/// Populations of left lead, dot and right lead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchResult {
    pub times: Vec<f64>,
    pub exact: Vec<[f64; 3]>,
    pub pat: Vec<[f64; 3]>,
    /// Pulse times actually applied, s.
    pub pulse_times: Vec<f64>,
    /// Lead-dot tunneling, rad/s.
    pub j: f64,
    /// Drive frequency, rad/s.
    pub drive_freq: f64,
    pub window: f64,
    /// `max_t <n_R>` under the exact Hamiltonian.
    pub max_right_population: f64,
    /// `max_{t,i} |n_i^exact - n_i^PAT|`
    pub max_population_diff: f64,
    pub norm_drift: f64,
}

/// Evolve a state with instantaneous `sigma^x` pulses on spin `pulse_spin`,
/// sampling populations of modes 0..3.
fn run_with_pulses(
    sys: &FockSystem,
    psi0: Vec<C64>,
    times: &[f64],
    pulses: &[f64],
    pulse_spin: usize,
) -> Result<(Vec<[f64; 3]>, f64)> {
    let h = HamParts::new(sys)?;
    let obs: Vec<Csr> = (0..3).map(|i| sys.matrix(&Operator::n(i))).collect();
    let flip = sys.matrix(&Operator::sx(pulse_spin));
    let mut psi = psi0;
    let mut out = Vec::with_capacity(times.len());
    let mut drift = 0.0f64;
    let mut t0 = 0.0;
    let mut idx = 0;
    for seg_end in pulses.iter().copied().chain(std::iter::once(f64::INFINITY)) {
        let end = times.partition_point(|&t| t < seg_end);
        let seg: Vec<f64> = times[idx..end].to_vec();
        if !seg.is_empty() {
            drift = drift.max(schrodinger_run(&h, &mut psi, t0, &seg, &obs, &mut out)?);
        }
        idx = end;
        if seg_end.is_finite() {
            if let Some(&last) = seg.last() {
                t0 = last;
            }
            let mut tail = Vec::new();
            if seg_end > t0 {
                schrodinger_run(&h, &mut psi, t0, &[seg_end], &[], &mut tail)?;
            }
            t0 = seg_end;
            let mut next = vec![ZERO; psi.len()];
            flip.matvec(&psi, &mut next);
            psi = next;
        }
    }
    let pops = out.iter().map(|v| [v[0].re, v[1].re, v[2].re]).collect();
    Ok((pops, drift))
}

/// Single-spin switch: exact driven Hamiltonian against the photon-assisted
/// tunneling model `-/+ J J_1(zeta (1 + r sz))`.
pub fn switch_scenario(p: &SwitchParams) -> Result<SwitchResult> {
    if !(p.zeta >= 0.0 && p.r.is_finite() && p.offset_ratio > 0.0 && p.axial_freq > 0.0) || p.n_points < 2 {
        return Err(invalid("switch parameters out of range"));
    }
    let tb = switch_chain(p.axial_freq)?;
    let j = tb.j(0, 1);
    let dw_minus_sigma = p.offset_ratio * j;
    let nu = 0.5 * dw_minus_sigma;
    let period = 2.0 * PI / nu;
    let g_ref = j * bessel_j(1, first_max_j1())?;
    let window = p.t_final.unwrap_or(PI / (2f64.sqrt() * g_ref));
    if !(window > 0.0) {
        return Err(invalid("switch window must be positive"));
    }
    let mut pulses = Vec::with_capacity(p.pulse_times.len());
    for &t in &p.pulse_times {
        if !(t > 0.0 && t < window) {
            return Err(invalid(format!("pulse time {t:e} s lies outside the window (0, {window:e}) s")));
        }
        pulses.push((t / period).round() * period);
    }
    pulses.sort_by(f64::total_cmp);
    let times: Vec<f64> = (0..p.n_points)
        .map(|k| ((window * k as f64 / (p.n_points - 1) as f64) / period).round() * period)
        .collect();

    let modes: Vec<ModeSpec> = (0..3).map(|s| ModeSpec { site: s, n_max: 1 }).collect();
    let mut exact = FockSystem::new(modes.clone(), vec![0, 1, 2]);
    exact.add_hamiltonian(lead_hamiltonian(&tb, dw_minus_sigma));
    let dw_plus_k = 2.0 * nu * p.zeta;
    exact.add_drive(
        Operator::n(1) * (0.5 * dw_plus_k) + Operator::sz(1) * Operator::n(1) * (0.5 * p.r * dw_plus_k),
        nu,
        0.0,
    );
    let idx = exact.basis_index(&[1, 0, 0], &[false, p.spin_up, true])?;
    let mut psi = vec![ZERO; exact.dim()];
    psi[idx] = C64::new(1.0, 0.0);
    let (ex, drift_e) = run_with_pulses(&exact, psi, &times, &pulses, 1)?;

    let c_up = bessel_j(1, p.zeta * (1.0 + p.r))?;
    let c_dn = bessel_j(1, p.zeta * (1.0 - p.r))?;
    let pat_op = Operator::identity() * (0.5 * (c_up + c_dn)) + Operator::sz(0) * (0.5 * (c_up - c_dn));
    let mut pat = FockSystem::new(modes, vec![1]);
    let left = Operator::adag(0) * Operator::a(1) * pat_op.clone() * (-tb.j(0, 1));
    let right = Operator::adag(2) * Operator::a(1) * pat_op * tb.j(2, 1);
    pat.add_hamiltonian(left.clone() + left.adjoint() + right.clone() + right.adjoint());
    let idx = pat.basis_index(&[1, 0, 0], &[p.spin_up])?;
    let mut psi = vec![ZERO; pat.dim()];
    psi[idx] = C64::new(1.0, 0.0);
    let (pt, drift_p) = run_with_pulses(&pat, psi, &times, &pulses, 0)?;

    let max_right = ex.iter().map(|v| v[2]).fold(0.0, f64::max);
    let diff = ex
        .iter()
        .zip(&pt)
        .flat_map(|(a, b)| (0..3).map(move |i| (a[i] - b[i]).abs()))
        .fold(0.0, f64::max);
    Ok(SwitchResult {
        times,
        exact: ex,
        pat: pt,
        pulse_times: pulses,
        j,
        drive_freq: nu,
        window,
        max_right_population: max_right,
        max_population_diff: diff,
        norm_drift: drift_e.max(drift_p),
    })
}

/// Bichromatic drive settings for the current probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentProbeParams {
    pub zeta1: f64,
    /// rad
    pub phase1: f64,
    /// Spin-dependent amplitude of tone 1, rad/s.
    pub dw1_minus: f64,
    pub zeta2: f64,
    /// rad
    pub phase2: f64,
    /// Spin-independent amplitude of tone 2, rad/s.
    pub dw2_plus: f64,
    /// rad/s
    pub axial_freq: f64,
    /// Lead offset in units of the lead-dot tunneling.
    pub offset_ratio: f64,
    /// Optional cooling of the two leads.
    pub leads: Option<(ReservoirParams, ReservoirParams)>,
    /// Truncation used when leads are cooled.
    pub n_max: usize,
}

impl CurrentProbeParams {
    pub fn new(zeta2: f64) -> Self {
        CurrentProbeParams {
            zeta1: PI,
            phase1: PI / 2.0,
            dw1_minus: 0.0,
            zeta2,
            phase2: 0.0,
            dw2_plus: 0.0,
            axial_freq: hz(0.1e6),
            offset_ratio: 1e3,
            leads: None,
            n_max: 1,
        }
    }

    fn check(&self) -> Result<()> {
        let named = |ok: bool, what: &str| if ok { Ok(()) } else { Err(Error::Constraint(what.to_string())) };
        named((self.zeta1 - PI).abs() < 1e-9, "zeta1 = pi")?;
        named((self.phase1 - PI / 2.0).abs() < 1e-9, "phase1 = pi/2")?;
        named(self.dw1_minus == 0.0, "tone-1 spin-dependent amplitude = 0")?;
        named(self.phase2.abs() < 1e-9, "phase2 = 0")?;
        named(self.dw2_plus == 0.0, "tone-2 spin-independent amplitude = 0")?;
        named(self.zeta2 >= 0.0 && self.zeta2 <= 0.3, "0 <= zeta2 << 1 (at most 0.3)")?;
        named(self.offset_ratio > 0.0 && self.axial_freq > 0.0 && self.n_max >= 1, "positive offsets and trap")
    }
}

/// Effective current-probe model: spinless imaginary tunneling plus the
/// coupling and symmetrised current for [`ramsey_probe`].
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentProbe {
    /// Leads and dot (modes 0, 1, 2), no spins.
    pub system: FockSystem,
    /// Dimensionless spin-current coupling.
    pub coupling: f64,
    /// `(I_in + I_out) / 2` at the dot.
    pub current: Operator,
    /// Effective lead-dot tunneling coefficients of `a_L^dag a_p`, `a_R^dag a_p`.
    pub tunneling: [C64; 2],
    /// Drive frequency, rad/s.
    pub drive_freq: f64,
}

pub fn current_probe_setup(p: &CurrentProbeParams) -> Result<CurrentProbe> {
    p.check()?;
    let tb = switch_chain(p.axial_freq)?;
    let j1 = bessel_j(1, PI)?;
    let t_l = C64::new(0.0, -tb.j(0, 1) * j1);
    let t_r = C64::new(0.0, -tb.j(2, 1) * j1);
    let n_max = if p.leads.is_some() { p.n_max } else { 1 };
    let modes: Vec<ModeSpec> = (0..3).map(|s| ModeSpec { site: s, n_max }).collect();
    let mut sys = FockSystem::new(modes, Vec::new());
    sys.add_hamiltonian(Operator::hopping(0, 1, t_l) + Operator::hopping(2, 1, t_r));
    if let Some((l, r)) = &p.leads {
        sys.add_cooling(0, l);
        sys.add_cooling(2, r);
    }
    let (i_in, i_out) = current_operators(&sys, 1)?;
    Ok(CurrentProbe {
        system: sys,
        coupling: spin_current_coupling(p.zeta2)?,
        current: (i_in + i_out) * 0.5,
        tunneling: [t_l, t_r],
        drive_freq: 0.5 * p.offset_ratio * tb.j(0, 1),
    })
}

/// Exact bichromatic dynamics against the effective model with the spin
/// coupling, both started with one vibron on the left lead and the dot spin in
/// `|+>`. Returns `(times, exact, effective)` where each row is
/// `[n_L, n_p, n_R, <sx>, <sy>]` at whole drive periods.
pub fn current_probe_exact(p: &CurrentProbeParams, t_final: f64, n_points: usize) -> Result<(Vec<f64>, Vec<[f64; 5]>, Vec<[f64; 5]>)> {
    p.check()?;
    if p.leads.is_some() {
        return Err(invalid("exact comparison runs without lead cooling"));
    }
    if !(t_final > 0.0) || n_points < 2 {
        return Err(invalid("need a positive window and at least two samples"));
    }
    let tb = switch_chain(p.axial_freq)?;
    let dw_minus_sigma = p.offset_ratio * tb.j(0, 1);
    let nu = 0.5 * dw_minus_sigma;
    let period = 2.0 * PI / nu;
    let times: Vec<f64> =
        (0..n_points).map(|k| ((t_final * k as f64 / (n_points - 1) as f64) / period).round() * period).collect();
    let modes: Vec<ModeSpec> = (0..3).map(|s| ModeSpec { site: s, n_max: 1 }).collect();
    let mut exact = FockSystem::new(modes.clone(), vec![0, 1, 2]);
    exact.add_hamiltonian(lead_hamiltonian(&tb, dw_minus_sigma));
    exact.add_drive(Operator::n(1) * (0.5 * 2.0 * nu * p.zeta1), nu, p.phase1);
    exact.add_drive(Operator::sz(1) * Operator::n(1) * (0.5 * 2.0 * nu * p.zeta2), nu, p.phase2);
    let obs_e = [Operator::n(0), Operator::n(1), Operator::n(2), Operator::sx(1), Operator::sy(1)];
    let mut psi = vec![ZERO; exact.dim()];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    psi[exact.basis_index(&[1, 0, 0], &[false, true, true])?] = C64::new(s, 0.0);
    psi[exact.basis_index(&[1, 0, 0], &[false, false, true])?] = C64::new(s, 0.0);
    let ex = super::schrodinger_evolve(&exact, &psi, &times, &obs_e)?;

    let probe = current_probe_setup(p)?;
    let mut eff = FockSystem::new(modes, vec![1]);
    eff.hamiltonian = probe.system.hamiltonian.clone();
    eff.add_hamiltonian(probe.current.clone() * Operator::sz(0) * (0.5 * probe.coupling));
    let obs_f = [Operator::n(0), Operator::n(1), Operator::n(2), Operator::sx(0), Operator::sy(0)];
    let mut psi = vec![ZERO; eff.dim()];
    psi[eff.basis_index(&[1, 0, 0], &[true])?] = C64::new(s, 0.0);
    psi[eff.basis_index(&[1, 0, 0], &[false])?] = C64::new(s, 0.0);
    let ef = super::schrodinger_evolve(&eff, &psi, &times, &obs_f)?;
    let rows = |o: &super::Observed| -> Vec<[f64; 5]> {
        o.values.iter().map(|v| [v[0].re, v[1].re, v[2].re, v[3].re, v[4].re]).collect()
    };
    Ok((times, rows(&ex), rows(&ef)))
}

/// Inflow and outflow current operators of `mode` from the static hopping
/// terms; modes are ordered by chain site.
pub fn current_operators(sys: &FockSystem, mode: usize) -> Result<(Operator, Operator)> {
    if mode >= sys.modes.len() {
        return Err(invalid("current requested for a missing mode"));
    }
    let n = sys.modes.len();
    let mut jm = CMat::zeros(n, n);
    for t in &sys.hamiltonian {
        if t.envelope.is_some() {
            continue;
        }
        for (c, prod) in &t.op.terms {
            if let [Factor::Adag(i), Factor::A(j)] = prod.as_slice() {
                if i != j {
                    jm[(*i, *j)] += c;
                }
            }
        }
    }
    let site = sys.modes[mode].site;
    let mut i_in = Operator::zero();
    let mut i_out = Operator::zero();
    for j in 0..n {
        if j == mode || (jm[(mode, j)] == ZERO && jm[(j, mode)] == ZERO) {
            continue;
        }
        let term = Operator::adag(mode) * Operator::a(j) * (C64::new(0.0, -1.0) * jm[(mode, j)])
            + Operator::adag(j) * Operator::a(mode) * (C64::new(0.0, 1.0) * jm[(j, mode)]);
        if sys.modes[j].site < site {
            i_in = i_in + term;
        } else {
            i_out = i_out - term;
        }
    }
    if i_in.terms.is_empty() && i_out.terms.is_empty() {
        return Err(invalid("mode has no static hopping terms"));
    }
    Ok((i_in, i_out))
}

/// Fano factor of the symmetrised current through the mode on `dot_site`.
pub fn fano_factor(sys: &FockSystem, dot_site: usize) -> Result<SpectralResult> {
    let mode = sys.mode_of_site(dot_site).ok_or_else(|| invalid(format!("no mode on site {dot_site}")))?;
    let (i_in, i_out) = current_operators(sys, mode)?;
    let op = (i_in + i_out) * 0.5;
    let mut res = regression_spectrum(sys, &op, SpectrumMethod::Direct)?;
    let scale = op.terms.iter().map(|(c, _)| c.norm()).fold(0.0, f64::max);
    if res.mean.abs() <= 1e-9 * scale {
        return Err(Error::ZeroCurrent);
    }
    res.fano = Some(res.noise0 / (2.0 * res.mean));
    Ok(res)
}

#[cfg(test)]
pub(crate) mod tests_support {
    pub fn chain() -> crate::chain::TightBinding {
        super::switch_chain(crate::constants::hz(0.1e6)).unwrap()
    }
}
