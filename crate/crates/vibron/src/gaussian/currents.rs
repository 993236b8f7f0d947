// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

use super::{CorrelatorState, GaussianGenerator, Reservoirs};
use crate::chain::TightBinding;
use crate::error::{invalid, Error, Result};
use crate::laser::ReservoirParams;
use crate::linalg;
use crate::{CMat, C64};
use serde::{Deserialize, Serialize};

/// Per-site inflow from the left and outflow to the right, vibrons/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteCurrents {
    pub inflow: Vec<f64>,
    pub outflow: Vec<f64>,
    /// `max_i |dC_ii/dt - (in - out) - local dissipative flux|`.
    pub continuity_residual: f64,
}

const I: C64 = C64::new(0.0, 1.0);

/// Coefficient matrices `M` with `I = sum_kl M_kl a_k^dag a_l` for the
/// inflow into `row` from all rows before it and the outflow to all rows
/// after it.
pub fn current_operator(gen: &GaussianGenerator, row: usize) -> (CMat, CMat) {
    let n = gen.dim();
    let mut m_in = CMat::zeros(n, n);
    let mut m_out = CMat::zeros(n, n);
    for j in 0..n {
        if j == row {
            continue;
        }
        // dn_row/dt from the bond (row, j): -i J_rj a_r^dag a_j + i J_jr a_j^dag a_r
        let (target, sign) = if j < row { (&mut m_in, 1.0) } else { (&mut m_out, -1.0) };
        target[(row, j)] += -I * gen.jmat[(row, j)] * sign;
        target[(j, row)] += I * gen.jmat[(j, row)] * sign;
    }
    (m_in, m_out)
}

fn expectation(m: &CMat, c: &CMat) -> C64 {
    m.iter().zip(c.iter()).map(|(a, b)| a * b).sum()
}

/// Steady or instantaneous currents through every site.
pub fn site_currents(gen: &GaussianGenerator, c: &CorrelatorState) -> SiteCurrents {
    let n = gen.dim();
    let mut inflow = vec![0.0; n];
    let mut outflow = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let flow = 2.0 * (-I * gen.jmat[(i, j)] * c.cmat[(i, j)]).re;
            if j < i {
                inflow[i] += flow;
            } else if j > i {
                outflow[i] -= flow;
            }
        }
    }
    let dc = super::rhs(gen, &c.cmat);
    let wc = &gen.wmat * &c.cmat + &c.cmat * gen.wmat.adjoint();
    let mut residual: f64 = 0.0;
    for i in 0..n {
        let local = -wc[(i, i)].re + gen.kmat[(i, i)].re;
        residual = residual.max((dc[(i, i)].re - (inflow[i] - outflow[i]) - local).abs());
    }
    SiteCurrents { inflow, outflow, continuity_residual: residual }
}

/// `Upsilon^l` restricted to the rows/columns in `rows` (chain indices).
pub fn upsilon(tb: &TightBinding, rows: &[usize], l: usize, r: &ReservoirParams) -> CMat {
    let w_l = tb.onsite[l];
    CMat::from_fn(rows.len(), rows.len(), |a, b| {
        let (i, j) = (rows[a], rows[b]);
        let num = tb.tunneling[(i, l)] * tb.tunneling[(l, j)];
        num / C64::new(r.gamma, -((tb.onsite[i] - r.delta) - w_l))
    })
}

/// Closed-form steady occupation and current of a chain between two reservoirs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryPrediction {
    pub n_ss: f64,
    /// vibrons/s
    pub i_ss: f64,
    /// rad/s
    pub gamma_l: f64,
    /// rad/s
    pub gamma_r: f64,
}

/// `n = (G_L n_L + G_R n_R)/(G_L + G_R)`, `I = G_L G_R (n_L - n_R)/(G_L + G_R)`
/// with `G_L = 2 Re Upsilon^L` on the site next to the left reservoir (and
/// likewise on the right).
pub fn theory_predictions(tb: &TightBinding, reservoirs: &Reservoirs) -> Result<TheoryPrediction> {
    let n = tb.n_sites();
    if n < 3 || reservoirs.len() != 2 || !reservoirs.contains_key(&0) || !reservoirs.contains_key(&(n - 1)) {
        return Err(invalid("theory predictions need one reservoir at each end of a chain of >= 3 sites"));
    }
    let (rl, rr) = (&reservoirs[&0], &reservoirs[&(n - 1)]);
    let gl = 2.0 * upsilon(tb, &[1], 0, rl)[(0, 0)].re;
    let gr = 2.0 * upsilon(tb, &[n - 2], n - 1, rr)[(0, 0)].re;
    Ok(TheoryPrediction {
        n_ss: (gl * rl.nbar + gr * rr.nbar) / (gl + gr),
        i_ss: gl * gr * (rl.nbar - rr.nbar) / (gl + gr),
        gamma_l: gl,
        gamma_r: gr,
    })
}

/// Mean and zero-frequency fluctuation integral of a quadratic observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseResult {
    pub mean: f64,
    /// `int_0^inf <dO(t) dO(0)> dt`
    pub s0: C64,
}

/// Exact regression integral of `O = sum_kl M_kl a_k^dag a_l` in the Gaussian
/// steady state `c`, via Wick factorisation.
///
/// `G_ij(0) = <a_i^dag a_j dO> = (C M^T (1 + C))_ij` evolves with the
/// homogeneous correlator generator, so `int G = -L^{-1} G(0)`.
pub fn quadratic_noise(gen: &GaussianGenerator, c: &CorrelatorState, m: &CMat) -> Result<NoiseResult> {
    let n = gen.dim();
    if m.nrows() != n || m.ncols() != n {
        return Err(invalid("observable matrix has the wrong shape"));
    }
    let cm = &c.cmat;
    let mean = expectation(m, cm);
    let g0 = cm * m.transpose() * (CMat::identity(n, n) + cm);
    let a = gen.a_matrix();
    let y = if gen.has_dephasing() {
        let l = linalg::lyapunov_superoperator(&a, Some(&gen.dmat));
        linalg::unvectorize(&linalg::lu_solve(l, &linalg::vectorize(&g0))?, n)
    } else {
        linalg::solve_lyapunov(&a, &g0)?
    };
    let s0 = -expectation(m, &y);
    Ok(NoiseResult { mean: mean.re, s0 })
}

/// Fano factor `Re S(0) / (2 <I>)` of the symmetrised current
/// `(I_in + I_out)/2` through chain site `site`.
pub fn fano_factor(gen: &GaussianGenerator, c: &CorrelatorState, site: usize) -> Result<(NoiseResult, f64)> {
    let row = gen.row_of(site).ok_or_else(|| invalid(format!("site {site} not in generator")))?;
    let (m_in, m_out) = current_operator(gen, row);
    let m = (m_in + m_out).scale(0.5);
    let res = quadratic_noise(gen, c, &m)?;
    let scale = linalg::max_abs(&gen.jmat).max(1.0) * linalg::max_abs(&c.cmat).max(1e-300);
    if res.mean.abs() <= 1e-12 * scale {
        return Err(Error::ZeroCurrent);
    }
    Ok((res, res.s0.re / (2.0 * res.mean)))
}
