// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex linear algebra on top of `nalgebra`: Schur-based Lyapunov and
//! Sylvester solvers, spectra, and small helpers.

use crate::error::{Error, Result};
use crate::{CMat, C64};
use nalgebra::{DVector, Schur, SymmetricEigen};

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 200_000;

fn schur(a: &CMat) -> Result<(CMat, CMat)> {
    let s = Schur::try_new(a.clone(), SCHUR_EPS, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::SolverFailed("complex Schur decomposition did not converge".into()))?;
    Ok(s.unpack())
}

/// Eigenvalues of a general complex matrix.
pub fn eigenvalues(a: &CMat) -> Result<Vec<C64>> {
    let (_, t) = schur(a)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Largest real part of the spectrum.
pub fn spectral_abscissa(a: &CMat) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().fold(f64::NEG_INFINITY, |m, z| m.max(z.re)))
}

/// Eigenvalues of the Hermitian part of `h`, ascending.
pub fn hermitian_eigenvalues(h: &CMat) -> Vec<f64> {
    let herm = hermitian_part(h);
    let mut v: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().cloned().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Frobenius norm of `a - a^dag`.
pub fn hermiticity_error(a: &CMat) -> f64 {
    (a - a.adjoint()).norm()
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Solve `A X + X A^dag = F` by Bartels-Stewart on the complex Schur form,
/// falling back to the dense vectorised system if the Schur iteration fails.
pub fn solve_lyapunov(a: &CMat, f: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let (q, t) = match schur(a) {
        Ok(qt) => qt,
        Err(_) if n <= 60 => {
            let v = lu_solve(lyapunov_superoperator(a, None), &vectorize(f))?;
            return Ok(unvectorize(&v, n));
        }
        Err(e) => return Err(e),
    };
    let ft = q.adjoint() * f * &q;
    let mut y = CMat::zeros(n, n);
    for j in (0..n).rev() {
        let mut rhs: Vec<C64> = (0..n).map(|i| ft[(i, j)]).collect();
        for k in (j + 1)..n {
            let c = t[(j, k)].conj();
            if c != C64::new(0.0, 0.0) {
                for i in 0..n {
                    rhs[i] -= c * y[(i, k)];
                }
            }
        }
        let shift = t[(j, j)].conj();
        upper_solve_shifted(&t, shift, &mut rhs)?;
        for i in 0..n {
            y[(i, j)] = rhs[i];
        }
    }
    Ok(&q * y * q.adjoint())
}

/// Solve `A X + X B = F` for general square `A`, `B`.
pub fn solve_sylvester(a: &CMat, b: &CMat, f: &CMat) -> Result<CMat> {
    let (n, m) = (a.nrows(), b.nrows());
    let (qa, ta) = schur(a)?;
    let (qb, tb) = schur(b)?;
    let ft = qa.adjoint() * f * &qb;
    let mut y = CMat::zeros(n, m);
    for j in 0..m {
        let mut rhs: Vec<C64> = (0..n).map(|i| ft[(i, j)]).collect();
        for k in 0..j {
            let c = tb[(k, j)];
            for i in 0..n {
                rhs[i] -= c * y[(i, k)];
            }
        }
        upper_solve_shifted(&ta, tb[(j, j)], &mut rhs)?;
        for i in 0..n {
            y[(i, j)] = rhs[i];
        }
    }
    Ok(&qa * y * qb.adjoint())
}

/// In-place solve of `(T + shift I) x = rhs` with `T` upper triangular.
fn upper_solve_shifted(t: &CMat, shift: C64, rhs: &mut [C64]) -> Result<()> {
    let n = rhs.len();
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for k in (i + 1)..n {
            acc -= t[(i, k)] * rhs[k];
        }
        let d = t[(i, i)] + shift;
        if d.norm() == 0.0 {
            return Err(Error::SolverFailed("singular Sylvester operator".into()));
        }
        rhs[i] = acc / d;
    }
    Ok(())
}

/// Row-major vectorisation index of `(i, j)` in an `n x n` matrix.
#[inline]
pub fn vec_index(n: usize, i: usize, j: usize) -> usize {
    i * n + j
}

pub fn vectorize(a: &CMat) -> DVector<C64> {
    let n = a.nrows();
    DVector::from_fn(n * n, |k, _| a[(k / n, k % n)])
}

pub fn unvectorize(v: &DVector<C64>, n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| v[vec_index(n, i, j)])
}

/// Dense `n^2 x n^2` matrix of `X -> A X + X A^dag - D o X`.
pub fn lyapunov_superoperator(a: &CMat, d: Option<&nalgebra::DMatrix<f64>>) -> CMat {
    let n = a.nrows();
    let mut l = CMat::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let row = vec_index(n, i, j);
            for k in 0..n {
                l[(row, vec_index(n, k, j))] += a[(i, k)];
                l[(row, vec_index(n, i, k))] += a[(j, k)].conj();
            }
            if let Some(d) = d {
                l[(row, row)] -= C64::new(d[(i, j)], 0.0);
            }
        }
    }
    l
}

/// Dense LU solve; errors on a singular matrix.
pub fn lu_solve(m: CMat, b: &DVector<C64>) -> Result<DVector<C64>> {
    m.lu().solve(b).ok_or_else(|| Error::SolverFailed("singular linear system".into()))
}
