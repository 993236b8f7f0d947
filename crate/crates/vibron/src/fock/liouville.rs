// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

//! Superoperator assembly, time evolution, steady states and regression
//! integrals.

use super::{DensityMatrix, Envelope, FockSystem, Operator};
use crate::error::{invalid, Error, Result};
use crate::ode::{integrate, OdeOptions};
use crate::sparse::{gmres, Csr, GmresOptions};
use crate::{CMat, C64};
use nalgebra::DVector;
use std::collections::HashMap;

/// Liouville-space dimension up to which dense LU is used.
pub const DENSE_LIOUVILLE_MAX: usize = 1024;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Index set of the density-matrix entries being evolved.
#[derive(Debug, Clone)]
struct PairSpace {
    d: usize,
    /// `None` for the full space; otherwise the vibron number of each state.
    charge: Option<Vec<usize>>,
    pos: Vec<usize>,
    offset: Vec<usize>,
    block: Vec<usize>,
    pairs: Vec<(usize, usize)>,
}

impl PairSpace {
    fn full(d: usize) -> Self {
        let pairs = (0..d).flat_map(|r| (0..d).map(move |c| (r, c))).collect();
        PairSpace { d, charge: None, pos: Vec::new(), offset: Vec::new(), block: Vec::new(), pairs }
    }

    fn sector(charge: Vec<usize>) -> Self {
        let d = charge.len();
        let qmax = charge.iter().copied().max().unwrap_or(0);
        let mut block = vec![0usize; qmax + 1];
        let mut pos = vec![0usize; d];
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); qmax + 1];
        for s in 0..d {
            pos[s] = block[charge[s]];
            block[charge[s]] += 1;
            members[charge[s]].push(s);
        }
        let mut offset = vec![0usize; qmax + 1];
        let mut acc = 0;
        for q in 0..=qmax {
            offset[q] = acc;
            acc += block[q] * block[q];
        }
        let mut pairs = Vec::with_capacity(acc);
        for m in &members {
            for &r in m {
                for &c in m {
                    pairs.push((r, c));
                }
            }
        }
        PairSpace { d, charge: Some(charge), pos, offset, block, pairs }
    }

    fn len(&self) -> usize {
        self.pairs.len()
    }

    fn index(&self, r: usize, c: usize) -> Option<usize> {
        match &self.charge {
            None => Some(r * self.d + c),
            Some(q) => {
                if q[r] != q[c] {
                    return None;
                }
                let b = self.block[q[r]];
                Some(self.offset[q[r]] + self.pos[r] * b + self.pos[c])
            }
        }
    }
}

/// Time-dependent Liouvillian `L0 + sum_g cos(nu_g t - phi_g) L_g` on a pair
/// space.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    space: PairSpace,
    static_part: Csr,
    drives: Vec<(Envelope, Csr)>,
    trace_idx: Vec<usize>,
}

impl Liouvillian {
    /// Assemble on the equal-number sector when `sector` is set and the system
    /// conserves vibron number, otherwise on the full space.
    pub fn new(sys: &FockSystem, sector: bool) -> Result<Self> {
        sys.validate()?;
        let d = sys.dim();
        let space = if sector && sys.conserves_number() {
            PairSpace::sector(sys.charges())
        } else {
            PairSpace::full(d)
        };
        let mut static_trip = Vec::new();
        let mut drives = Vec::new();
        for (env, op) in sys.hamiltonian_groups() {
            let h = sys.matrix(&op);
            let mut trip = Vec::new();
            commutator(&space, &h, &mut trip);
            match env {
                None => static_trip.extend(trip),
                Some(e) => drives.push((e, Csr::from_triplets(space.len(), space.len(), trip))),
            }
        }
        for dt in &sys.dissipators {
            let o1 = sys.matrix(&dt.o1);
            let o2 = sys.matrix(&dt.o2);
            let o1d = sys.matrix(&dt.o1.adjoint());
            let o2d = sys.matrix(&dt.o2.adjoint());
            let p = sys.matrix(&(dt.o2.clone() * dt.o1.clone()));
            let q = sys.matrix(&(dt.o1.adjoint() * dt.o2.adjoint()));
            let lam = dt.lambda;
            sandwich(&space, &o1, &o2, lam, &mut static_trip);
            left(&space, &p, -lam, &mut static_trip);
            sandwich(&space, &o2d, &o1d, lam.conj(), &mut static_trip);
            right(&space, &q, -lam.conj(), &mut static_trip);
        }
        let n = space.len();
        let static_part = Csr::from_triplets(n, n, static_trip);
        let trace_idx = (0..d).filter_map(|s| space.index(s, s)).collect();
        Ok(Liouvillian { space, static_part, drives, trace_idx })
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.len() == 0
    }

    pub fn is_time_dependent(&self) -> bool {
        !self.drives.is_empty()
    }

    /// Whether the space is the reduced number sector.
    pub fn is_sector(&self) -> bool {
        self.space.charge.is_some()
    }

    pub fn apply(&self, t: f64, x: &[C64], y: &mut [C64]) {
        self.static_part.matvec(x, y);
        for (e, l) in &self.drives {
            l.matvec_add(C64::new(e.at(t), 0.0), x, y);
        }
    }

    pub fn trace(&self, x: &[C64]) -> C64 {
        self.trace_idx.iter().map(|&k| x[k]).sum()
    }

    /// Coefficients `f` with `Tr(O rho) = sum f_k x_k`.
    pub fn functional(&self, o: &Csr) -> Vec<(usize, C64)> {
        let mut f = Vec::new();
        for c in 0..o.n_rows {
            for (r, v) in o.row(c) {
                if let Some(k) = self.space.index(r, c) {
                    f.push((k, v));
                }
            }
        }
        f
    }

    /// Left multiplication `rho -> O rho` as a pair-space matrix.
    pub fn left_multiplication(&self, o: &Csr) -> Csr {
        let mut trip = Vec::new();
        left(&self.space, o, ONE, &mut trip);
        Csr::from_triplets(self.len(), self.len(), trip)
    }

    pub fn vectorize(&self, rho: &CMat) -> Result<Vec<C64>> {
        let mut outside = 0.0f64;
        if self.space.charge.is_some() {
            for r in 0..rho.nrows() {
                for c in 0..rho.ncols() {
                    if self.space.index(r, c).is_none() {
                        outside = outside.max(rho[(r, c)].norm());
                    }
                }
            }
        }
        if outside > 1e-14 {
            return Err(invalid("state has coherences outside the number sector"));
        }
        Ok(self.space.pairs.iter().map(|&(r, c)| rho[(r, c)]).collect())
    }

    pub fn unvectorize(&self, x: &[C64]) -> CMat {
        let mut rho = CMat::zeros(self.space.d, self.space.d);
        for (k, &(r, c)) in self.space.pairs.iter().enumerate() {
            rho[(r, c)] = x[k];
        }
        rho
    }

    /// Steady state of the static part normalised to unit trace.
    pub fn steady_vector(&self) -> Result<Vec<C64>> {
        if self.is_time_dependent() {
            return Err(invalid("steady state requested for a time-dependent Liouvillian"));
        }
        let n = self.len();
        let mut u = vec![ZERO; n];
        let w = C64::new(1.0 / self.trace_idx.len() as f64, 0.0);
        for &k in &self.trace_idx {
            u[k] = w;
        }
        let x = self.solve_augmented(&u, &u)?;
        let tr = self.trace(&x);
        let x: Vec<C64> = x.iter().map(|v| v / tr).collect();
        let mut r = vec![ZERO; n];
        self.static_part.matvec(&x, &mut r);
        let lmax = self.static_part.data.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        let xmax = x.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        let residual = r.iter().map(|v| v.norm()).fold(0.0, f64::max) / (lmax * xmax);
        if residual > 1e-10 {
            return Err(Error::Residual { residual, tolerance: 1e-10 });
        }
        // hermitise
        let mut idx = HashMap::with_capacity(n);
        for (k, &(r, c)) in self.space.pairs.iter().enumerate() {
            idx.insert((r, c), k);
        }
        let mut out = x.clone();
        for (k, &(r, c)) in self.space.pairs.iter().enumerate() {
            let kt = idx[&(c, r)];
            out[k] = (x[k] + x[kt].conj()) * 0.5;
        }
        Ok(out)
    }

    /// Solve `(L + u t^T) x = b`.
    fn solve_augmented(&self, u: &[C64], b: &[C64]) -> Result<Vec<C64>> {
        let n = self.len();
        if n <= DENSE_LIOUVILLE_MAX {
            let mut m = self.static_part.to_dense();
            for r in 0..n {
                if u[r] != ZERO {
                    for &c in &self.trace_idx {
                        m[(r, c)] += u[r];
                    }
                }
            }
            let lu = m.lu();
            let ud = lu.u();
            let piv: Vec<f64> = (0..n).map(|i| ud[(i, i)].norm()).collect();
            let pmax = piv.iter().cloned().fold(0.0, f64::max);
            let small = piv.iter().filter(|&&p| p <= 1e-13 * pmax).count();
            if small > 0 {
                return Err(Error::DegenerateSteadyState { nullity: small + 1 });
            }
            let x = lu.solve(&DVector::from_column_slice(b)).ok_or(Error::DegenerateSteadyState { nullity: 2 })?;
            return Ok(x.as_slice().to_vec());
        }
        let diag = self.static_part.diagonal();
        let mut on_trace = vec![false; n];
        for &k in &self.trace_idx {
            on_trace[k] = true;
        }
        let precond: Vec<C64> = diag
            .iter()
            .enumerate()
            .map(|(k, dk)| {
                let v = dk + if on_trace[k] { u[k] } else { ZERO };
                if v.norm() > 1e-300 {
                    ONE / v
                } else {
                    ONE
                }
            })
            .collect();
        let mut x = b.to_vec();
        let apply = |x: &[C64], y: &mut [C64]| {
            self.static_part.matvec(x, y);
            let tx = self.trace(x);
            for (yi, ui) in y.iter_mut().zip(u) {
                *yi += ui * tx;
            }
        };
        let res = gmres(apply, &precond, b, &mut x, &GmresOptions::default())?;
        if res > 1e-9 {
            return Err(Error::NoConvergence { iterations: GmresOptions::default().max_iter, residual: res });
        }
        Ok(x)
    }
}

fn commutator(sp: &PairSpace, h: &Csr, trip: &mut Vec<(usize, usize, C64)>) {
    left(sp, h, -I, trip);
    right(sp, h, I, trip);
}

/// `rho -> c P rho`
fn left(sp: &PairSpace, p: &Csr, c: C64, trip: &mut Vec<(usize, usize, C64)>) {
    for (k, &(r, col)) in sp.pairs.iter().enumerate() {
        for (m, v) in p.row(r) {
            if let Some(q) = sp.index(m, col) {
                trip.push((k, q, c * v));
            }
        }
    }
}

/// `rho -> c rho Q`
fn right(sp: &PairSpace, q: &Csr, c: C64, trip: &mut Vec<(usize, usize, C64)>) {
    let qt = q.transpose();
    for (k, &(r, col)) in sp.pairs.iter().enumerate() {
        for (m, v) in qt.row(col) {
            if let Some(j) = sp.index(r, m) {
                trip.push((k, j, c * v));
            }
        }
    }
}

/// `rho -> c A rho B`
fn sandwich(sp: &PairSpace, a: &Csr, b: &Csr, c: C64, trip: &mut Vec<(usize, usize, C64)>) {
    let bt = b.transpose();
    for (k, &(r, col)) in sp.pairs.iter().enumerate() {
        for (m, va) in a.row(r) {
            for (l, vb) in bt.row(col) {
                if let Some(j) = sp.index(m, l) {
                    trip.push((k, j, c * va * vb));
                }
            }
        }
    }
}

fn ode_opts() -> OdeOptions {
    OdeOptions { rtol: 1e-9, atol: 1e-12, ..Default::default() }
}

/// Density matrices at the requested times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<DensityMatrix>,
    /// Largest `|Tr rho - 1|` seen at the output times.
    pub max_trace_drift: f64,
}

/// Expectation values `values[t][k] = <O_k>(t)`.
#[derive(Debug, Clone)]
pub struct Observed {
    pub times: Vec<f64>,
    pub values: Vec<Vec<C64>>,
    pub max_trace_drift: f64,
}

impl Observed {
    /// Real parts of observable `k` over time.
    pub fn series(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[k].re).collect()
    }
}

fn check_times(rho0_time: f64, times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("output times must be finite and ascending"));
    }
    if times.first().is_some_and(|&t| t < rho0_time) {
        return Err(invalid("output times precede the initial state"));
    }
    Ok(())
}

fn liouvillian_for(sys: &FockSystem, rho0: &DensityMatrix) -> Result<(Liouvillian, Vec<C64>)> {
    if rho0.rho.nrows() != sys.dim() || rho0.rho.ncols() != sys.dim() {
        return Err(invalid("initial state dimension does not match the system"));
    }
    let l = Liouvillian::new(sys, true)?;
    match l.vectorize(&rho0.rho) {
        Ok(x) => Ok((l, x)),
        Err(_) => {
            let l = Liouvillian::new(sys, false)?;
            let x = l.vectorize(&rho0.rho)?;
            Ok((l, x))
        }
    }
}

/// Integrate the master equation, returning full density matrices.
pub fn lindblad_evolve(sys: &FockSystem, rho0: &DensityMatrix, times: &[f64]) -> Result<Trajectory> {
    check_times(rho0.time, times)?;
    let (l, mut x) = liouvillian_for(sys, rho0)?;
    let mut states = Vec::with_capacity(times.len());
    let mut drift = 0.0f64;
    integrate(
        |t, x, y| l.apply(t, x, y),
        rho0.time,
        &mut x,
        times,
        &ode_opts(),
        |t, x| {
            drift = drift.max((l.trace(x) - ONE).norm());
            states.push(DensityMatrix { rho: l.unvectorize(x), time: t });
            true
        },
        |_| false,
    )?;
    Ok(Trajectory { states, max_trace_drift: drift })
}

/// Integrate the master equation, recording only expectation values.
pub fn lindblad_observe(
    sys: &FockSystem,
    rho0: &DensityMatrix,
    times: &[f64],
    observables: &[Operator],
) -> Result<Observed> {
    check_times(rho0.time, times)?;
    let (l, mut x) = liouvillian_for(sys, rho0)?;
    let funcs: Vec<Vec<(usize, C64)>> = observables.iter().map(|o| l.functional(&sys.matrix(o))).collect();
    let mut values = Vec::with_capacity(times.len());
    let mut drift = 0.0f64;
    integrate(
        |t, x, y| l.apply(t, x, y),
        rho0.time,
        &mut x,
        times,
        &ode_opts(),
        |_, x| {
            drift = drift.max((l.trace(x) - ONE).norm());
            values.push(funcs.iter().map(|f| f.iter().map(|&(k, v)| v * x[k]).sum()).collect());
            true
        },
        |_| false,
    )?;
    Ok(Observed { times: times.to_vec(), values, max_trace_drift: drift })
}

/// `Tr(O rho)`.
pub fn expectation(sys: &FockSystem, rho: &DensityMatrix, op: &Operator) -> C64 {
    let m = sys.matrix(op);
    let mut acc = ZERO;
    for c in 0..m.n_rows {
        for (r, v) in m.row(c) {
            acc += v * rho.rho[(r, c)];
        }
    }
    acc
}

/// Hamiltonian split into static and enveloped sparse parts.
pub(crate) struct HamParts {
    pub h0: Csr,
    pub drives: Vec<(Envelope, Csr)>,
}

impl HamParts {
    pub fn new(sys: &FockSystem) -> Result<Self> {
        sys.validate()?;
        let mut h0 = None;
        let mut drives = Vec::new();
        for (env, op) in sys.hamiltonian_groups() {
            let m = sys.matrix(&op);
            match env {
                None => h0 = Some(m),
                Some(e) => drives.push((e, m)),
            }
        }
        Ok(HamParts { h0: h0.expect("static group always present"), drives })
    }

    /// `dpsi = -i H(t) psi`
    pub fn rhs(&self, t: f64, psi: &[C64], dpsi: &mut [C64]) {
        self.h0.matvec(psi, dpsi);
        for (e, h) in &self.drives {
            h.matvec_add(C64::new(e.at(t), 0.0), psi, dpsi);
        }
        for v in dpsi.iter_mut() {
            *v *= -I;
        }
    }
}

pub(crate) fn pure_expectation(m: &Csr, psi: &[C64]) -> C64 {
    let mut acc = ZERO;
    for r in 0..m.n_rows {
        let mut row = ZERO;
        for (c, v) in m.row(r) {
            row += v * psi[c];
        }
        acc += psi[r].conj() * row;
    }
    acc
}

/// Integrate the Schrodinger equation of a dissipation-free system from `t0`,
/// writing expectation values at `times` into `out`. `psi` holds the final
/// state on return.
pub(crate) fn schrodinger_run(
    h: &HamParts,
    psi: &mut Vec<C64>,
    t0: f64,
    times: &[f64],
    obs: &[Csr],
    out: &mut Vec<Vec<C64>>,
) -> Result<f64> {
    let mut drift = 0.0f64;
    let opts = OdeOptions { rtol: 1e-10, atol: 1e-13, ..Default::default() };
    integrate(
        |t, x, y| h.rhs(t, x, y),
        t0,
        psi,
        times,
        &opts,
        |_, x| {
            let nrm: f64 = x.iter().map(|z| z.norm_sqr()).sum();
            drift = drift.max((nrm - 1.0).abs());
            out.push(obs.iter().map(|m| pure_expectation(m, x)).collect());
            true
        },
        |_| false,
    )?;
    Ok(drift)
}

/// Pure-state evolution of a system without dissipators.
pub fn schrodinger_evolve(sys: &FockSystem, psi0: &[C64], times: &[f64], observables: &[Operator]) -> Result<Observed> {
    if !sys.dissipators.is_empty() {
        return Err(invalid("pure-state evolution requires a system without dissipators"));
    }
    if psi0.len() != sys.dim() {
        return Err(invalid("initial state dimension does not match the system"));
    }
    check_times(0.0, times)?;
    let h = HamParts::new(sys)?;
    let obs: Vec<Csr> = observables.iter().map(|o| sys.matrix(o)).collect();
    let mut psi = psi0.to_vec();
    let mut values = Vec::with_capacity(times.len());
    let drift = schrodinger_run(&h, &mut psi, 0.0, times, &obs, &mut values)?;
    Ok(Observed { times: times.to_vec(), values, max_trace_drift: drift })
}

/// Unique steady state of a time-independent system.
pub fn steady_state_dm(sys: &FockSystem) -> Result<DensityMatrix> {
    let l = Liouvillian::new(sys, true)?;
    let x = l.steady_vector()?;
    Ok(DensityMatrix { rho: l.unvectorize(&x), time: 0.0 })
}

/// Route for the regression integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SpectrumMethod {
    /// Linear solve with the trace-augmented Liouvillian.
    Direct,
    /// Integrate the regression ODE until the correlator has decayed.
    TimeIntegration,
}

/// Steady-state mean and one-sided zero-frequency fluctuation integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralResult {
    pub mean: f64,
    /// `Re s0`
    pub noise0: f64,
    /// `int_0^inf <dO(t) dO(0)> dt`
    pub s0: C64,
    /// `noise0 / (2 mean)`, set for currents only.
    pub fano: Option<f64>,
    pub method: SpectrumMethod,
}

/// Regression-theorem integral of a Hermitian, number-conserving observable in
/// the steady state.
pub fn regression_spectrum(sys: &FockSystem, op: &Operator, method: SpectrumMethod) -> Result<SpectralResult> {
    if op.charge() != Some(0) {
        return Err(invalid("observable must conserve vibron number"));
    }
    let l = Liouvillian::new(sys, true)?;
    let mu = l.steady_vector()?;
    let om = sys.matrix(op);
    let lo = l.left_multiplication(&om);
    let func = l.functional(&om);
    let tr_o = |x: &[C64]| -> C64 { func.iter().map(|&(k, v)| v * x[k]).sum() };
    let mean = tr_o(&mu);
    let mut y = vec![ZERO; l.len()];
    lo.matvec(&mu, &mut y);
    for (yi, mi) in y.iter_mut().zip(&mu) {
        *yi -= mean * mi;
    }
    let s0 = match method {
        SpectrumMethod::Direct => {
            let n = l.len();
            let mut u = vec![ZERO; n];
            let w = C64::new(1.0 / l.trace_idx.len() as f64, 0.0);
            for &k in &l.trace_idx {
                u[k] = w;
            }
            let x = l.solve_augmented(&u, &y)?;
            -tr_o(&x)
        }
        SpectrumMethod::TimeIntegration => regression_by_integration(&l, &y, &func)?,
    };
    Ok(SpectralResult { mean: mean.re, noise0: s0.re, s0, fano: None, method })
}

fn regression_by_integration(l: &Liouvillian, y0: &[C64], func: &[(usize, C64)]) -> Result<C64> {
    let n = l.len();
    let ymax = y0.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if ymax == 0.0 {
        return Ok(ZERO);
    }
    let mut state = y0.to_vec();
    state.push(ZERO);
    let f0: C64 = func.iter().map(|&(k, v)| v * y0[k]).sum();
    let n0 = y0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let rate = l.static_part.diagonal().iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let t0 = 0.1 / rate;
    let checkpoints: Vec<f64> = (0..2000).map(|k| t0 * 1.05f64.powi(k)).collect();
    let opts = OdeOptions { rtol: 1e-10, atol: 1e-15 * ymax, max_steps: 2_000_000, ..Default::default() };
    let mut small = 0;
    let mut last = (0.0, f64::INFINITY);
    let mut done = false;
    let res = integrate(
        |t, x, dx| {
            l.apply(t, &x[..n], &mut dx[..n]);
            dx[n] = func.iter().map(|&(k, v)| v * x[k]).sum();
        },
        0.0,
        &mut state,
        &checkpoints,
        &opts,
        |t, x| {
            let f: C64 = func.iter().map(|&(k, v)| v * x[k]).sum();
            let nx = x[..n].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let rel = (nx / n0).max(if f0.norm() > 0.0 { f.norm() / f0.norm() } else { 0.0 });
            last = (t, rel);
            small = if rel < 1e-12 { small + 1 } else { 0 };
            done = small >= 3;
            !done
        },
        |_| false,
    );
    match res {
        Err(Error::TooManySteps { .. }) => return Err(Error::NonDecaying { t: last.0, magnitude: last.1 }),
        Err(e) => return Err(e),
        Ok(_) => {}
    }
    if !done {
        return Err(Error::NonDecaying { t: last.0, magnitude: last.1 });
    }
    Ok(state[n])
}
