// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

use super::{CorrelatorState, GaussianGenerator};
use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::ode::{integrate, OdeOptions};
use crate::{CMat, C64};

/// Largest system solved by the dense vectorised route.
pub const DENSE_MAX_DIM: usize = 60;
/// Largest system whose Hurwitz check uses the full vectorised spectrum.
pub const FULL_SPECTRUM_MAX_DIM: usize = 20;
const HURWITZ_TOL: f64 = -1e-12;

/// `dC/dt` for the generator.
pub fn rhs(gen: &GaussianGenerator, c: &CMat) -> CMat {
    let a = gen.a_matrix();
    let mut out = &a * c + c * a.adjoint() + &gen.kmat;
    if gen.has_dephasing() {
        let n = gen.dim();
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] -= c[(i, j)] * gen.dmat[(i, j)];
            }
        }
    }
    out
}

/// Sites (chain indices) with no tunneling path to a damped site.
pub fn unreached_sites(gen: &GaussianGenerator) -> Vec<usize> {
    let n = gen.dim();
    let mut reached: Vec<bool> = (0..n).map(|i| gen.wmat[(i, i)].re > 0.0).collect();
    let mut stack: Vec<usize> = (0..n).filter(|&i| reached[i]).collect();
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if !reached[j] && (gen.jmat[(i, j)].norm() > 0.0 || gen.wmat[(i, j)].norm() > 0.0) {
                reached[j] = true;
                stack.push(j);
            }
        }
    }
    (0..n).filter(|&i| !reached[i]).map(|i| gen.sites[i]).collect()
}

/// Largest real part of the homogeneous correlator generator.
///
/// Without dephasing the spectrum is `{l_i + conj(l_j)}` for the eigenvalues
/// `l` of `A`, so the abscissa is `2 max Re l`. With dephasing the full
/// vectorised operator is diagonalised up to [`FULL_SPECTRUM_MAX_DIM`] sites;
/// beyond that the dephasing-free bound is returned (dephasing only adds
/// damping to coherences) and the residual check guards the solve.
pub fn hurwitz_abscissa(gen: &GaussianGenerator) -> Result<f64> {
    let a = gen.a_matrix();
    if gen.has_dephasing() && gen.dim() <= FULL_SPECTRUM_MAX_DIM {
        linalg::spectral_abscissa(&linalg::lyapunov_superoperator(&a, Some(&gen.dmat)))
    } else {
        Ok(2.0 * linalg::spectral_abscissa(&a)?)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SteadyOptions {
    /// Residual tolerance relative to `||K||`.
    pub residual_tol: f64,
    /// Skip the Hurwitz eigenvalue check (callers that already checked it).
    pub skip_hurwitz: bool,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        SteadyOptions { residual_tol: 1e-10, skip_hurwitz: false }
    }
}

/// Fixed point of the correlator equation.
///
/// Lyapunov (Bartels-Stewart) without dephasing, dense vectorised LU with
/// dephasing up to [`DENSE_MAX_DIM`] sites, long-time integration above.
pub fn steady_state(gen: &GaussianGenerator) -> Result<CorrelatorState> {
    steady_state_with(gen, &SteadyOptions::default())
}

pub fn steady_state_with(gen: &GaussianGenerator, opts: &SteadyOptions) -> Result<CorrelatorState> {
    gen.validate()?;
    let unreached = unreached_sites(gen);
    if !unreached.is_empty() {
        return Err(Error::UnreachedSites { sites: unreached });
    }
    let n = gen.dim();
    let a = gen.a_matrix();
    if !opts.skip_hurwitz {
        let abscissa = hurwitz_abscissa(gen)?;
        if !(abscissa < HURWITZ_TOL) {
            return Err(Error::NotHurwitz { max_re: abscissa });
        }
    }
    let knorm = gen.kmat.norm();
    let mut c = if !gen.has_dephasing() {
        linalg::solve_lyapunov(&a, &(-&gen.kmat))?
    } else if n <= DENSE_MAX_DIM {
        let l = linalg::lyapunov_superoperator(&a, Some(&gen.dmat));
        let b = -linalg::vectorize(&gen.kmat);
        linalg::unvectorize(&linalg::lu_solve(l, &b)?, n)
    } else {
        integrate_to_steady(gen)?
    };
    c = linalg::hermitian_part(&c);
    let residual = rhs(gen, &c).norm();
    let tol = opts.residual_tol * knorm.max(f64::MIN_POSITIVE);
    if !(residual <= tol) {
        return Err(Error::Residual { residual, tolerance: tol });
    }
    Ok(CorrelatorState::new(c, 0.0))
}

fn integrate_to_steady(gen: &GaussianGenerator) -> Result<CMat> {
    let n = gen.dim();
    let rate = -hurwitz_abscissa(gen)?;
    let knorm = gen.kmat.norm();
    let mut c = CMat::zeros(n, n);
    let mut t = 0.0;
    let chunk = 5.0 / rate;
    for _ in 0..10_000 {
        let traj = evolve_at(gen, &CorrelatorState::new(c.clone(), t), &[t + chunk])?;
        c = traj.last().unwrap().cmat.clone();
        t += chunk;
        if rhs(gen, &c).norm() < 1e-10 * knorm {
            return Ok(c);
        }
    }
    Err(Error::SolverFailed("long-time integration did not reach the steady state".into()))
}

fn to_vec(c: &CMat) -> Vec<C64> {
    c.as_slice().to_vec()
}

fn from_vec(v: &[C64], n: usize) -> CMat {
    CMat::from_column_slice(n, n, v)
}

/// Correlator at the given times (ascending, not before `c0.time`).
pub fn evolve_at(gen: &GaussianGenerator, c0: &CorrelatorState, times: &[f64]) -> Result<Vec<CorrelatorState>> {
    evolve_impl(gen, c0, times, f64::INFINITY)
}

fn evolve_impl(gen: &GaussianGenerator, c0: &CorrelatorState, times: &[f64], h_max: f64) -> Result<Vec<CorrelatorState>> {
    gen.validate()?;
    let n = gen.dim();
    if c0.cmat.nrows() != n || c0.cmat.ncols() != n {
        return Err(invalid("initial correlator has the wrong shape"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < c0.time) {
        return Err(invalid("output times must be ascending and not before the initial time"));
    }
    let a = gen.a_matrix();
    let ad = a.adjoint();
    let dephase = gen.has_dephasing();
    let dmat = gen.dmat.map(|x| C64::new(x, 0.0));
    let mut y = to_vec(&c0.cmat);
    let mut out = Vec::with_capacity(times.len());
    let opts = OdeOptions { atol: 1e-12 * (1.0 + linalg::max_abs(&c0.cmat)), h_max, ..OdeOptions::default() };
    integrate(
        |_, y, dy| {
            let c = CMat::from_column_slice(n, n, y);
            let mut d = &a * &c + &c * &ad + &gen.kmat;
            if dephase {
                d -= dmat.component_mul(&c);
            }
            dy.copy_from_slice(d.as_slice());
        },
        c0.time,
        &mut y,
        times,
        &opts,
        |t, y| {
            out.push(CorrelatorState::new(from_vec(y, n), t));
            true
        },
        |y| {
            for i in 0..n {
                for j in 0..i {
                    let avg = (y[i + j * n] + y[j + i * n].conj()) * 0.5;
                    y[i + j * n] = avg;
                    y[j + i * n] = avg.conj();
                }
                y[i + i * n].im = 0.0;
            }
            true
        },
    )?;
    Ok(out)
}

/// Trajectory sampled every `dt_max` up to `t_final` (the step size never
/// exceeds `dt_max`).
pub fn evolve(gen: &GaussianGenerator, c0: &CorrelatorState, t_final: f64, dt_max: f64) -> Result<Vec<CorrelatorState>> {
    if !(dt_max > 0.0) || !(t_final >= c0.time) {
        return Err(invalid("evolve needs dt_max > 0 and t_final >= t0"));
    }
    let steps = ((t_final - c0.time) / dt_max).ceil() as usize;
    let times: Vec<f64> = (0..=steps).map(|k| (c0.time + k as f64 * dt_max).min(t_final)).collect();
    let mut times = times;
    times.dedup();
    evolve_impl(gen, c0, &times, dt_max)
}
