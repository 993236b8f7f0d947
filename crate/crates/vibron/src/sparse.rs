// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

//! Compressed sparse row matrices and restarted GMRES.

use crate::error::{Error, Result};
use crate::C64;

/// Complex CSR matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub n_rows: usize,
    pub n_cols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<C64>,
}

impl Csr {
    /// Build from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut trip: Vec<(usize, usize, C64)>) -> Csr {
        trip.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; n_rows + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut data: Vec<C64> = Vec::with_capacity(trip.len());
        let mut rows = Vec::with_capacity(trip.len());
        for (r, c, v) in trip {
            if let (Some(&lr), Some(&lc)) = (rows.last(), indices.last()) {
                if lr == r && lc == c {
                    *data.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            indices.push(c);
            data.push(v);
        }
        let mut keep_idx = Vec::with_capacity(indices.len());
        let mut keep_data = Vec::with_capacity(indices.len());
        for k in 0..indices.len() {
            if data[k] != C64::new(0.0, 0.0) {
                indptr[rows[k] + 1] += 1;
                keep_idx.push(indices[k]);
                keep_data.push(data[k]);
            }
        }
        for r in 0..n_rows {
            indptr[r + 1] += indptr[r];
        }
        Csr { n_rows, n_cols, indptr, indices: keep_idx, data: keep_data }
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        for r in 0..self.n_rows {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            y[r] = acc;
        }
    }

    /// `y += alpha A x`
    pub fn matvec_add(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        for r in 0..self.n_rows {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            y[r] += alpha * acc;
        }
    }

    pub fn diagonal(&self) -> Vec<C64> {
        let mut d = vec![C64::new(0.0, 0.0); self.n_rows.min(self.n_cols)];
        for r in 0..d.len() {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.indices[k] == r {
                    d[r] += self.data[k];
                }
            }
        }
        d
    }

    pub fn to_dense(&self) -> crate::CMat {
        let mut m = crate::CMat::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                m[(r, self.indices[k])] += self.data[k];
            }
        }
        m
    }

    pub fn transpose(&self) -> Csr {
        let mut trip = Vec::with_capacity(self.nnz());
        for r in 0..self.n_rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                trip.push((self.indices[k], r, self.data[k]));
            }
        }
        Csr::from_triplets(self.n_cols, self.n_rows, trip)
    }

    /// Entries `(col, value)` of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k], self.data[k]))
    }

    /// Linear combination `sum_k c_k A_k` of matrices with equal shape.
    pub fn combine(parts: &[(C64, &Csr)]) -> Csr {
        let (nr, nc) = parts.first().map(|p| (p.1.n_rows, p.1.n_cols)).unwrap_or((0, 0));
        let mut trip = Vec::new();
        for (c, m) in parts {
            for r in 0..m.n_rows {
                for k in m.indptr[r]..m.indptr[r + 1] {
                    trip.push((r, m.indices[k], *c * m.data[k]));
                }
            }
        }
        Csr::from_triplets(nr, nc, trip)
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    pub restart: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions { restart: 80, tol: 1e-12, max_iter: 20_000 }
    }
}

/// Restarted GMRES with right Jacobi-style preconditioning `x = P z`.
///
/// `apply(x, y)` computes `y = A x`; `precond` multiplies elementwise. Returns
/// the final relative residual.
pub fn gmres<A>(mut apply: A, precond: &[C64], b: &[C64], x: &mut [C64], opts: &GmresOptions) -> Result<f64>
where
    A: FnMut(&[C64], &mut [C64]),
{
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        return Ok(0.0);
    }
    let m = opts.restart.min(n).max(1);
    let mut r = vec![C64::new(0.0, 0.0); n];
    let mut w = vec![C64::new(0.0, 0.0); n];
    let mut pz = vec![C64::new(0.0, 0.0); n];
    let mut v: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
    let mut iters = 0;
    let mut rel = f64::INFINITY;
    while iters < opts.max_iter {
        apply(x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel < opts.tol {
            return Ok(rel);
        }
        v.clear();
        v.push(r.iter().map(|z| z / beta).collect());
        let mut h = vec![vec![C64::new(0.0, 0.0); m]; m + 1];
        let mut cs = vec![C64::new(0.0, 0.0); m];
        let mut sn = vec![C64::new(0.0, 0.0); m];
        let mut g = vec![C64::new(0.0, 0.0); m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..m {
            iters += 1;
            for i in 0..n {
                pz[i] = precond[i] * v[k][i];
            }
            apply(&pz, &mut w);
            // modified Gram-Schmidt, twice for stability
            for _ in 0..2 {
                for j in 0..=k {
                    let hij = dot(&v[j], &w);
                    h[j][k] += hij;
                    for i in 0..n {
                        w[i] -= hij * v[j][i];
                    }
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = C64::new(hn, 0.0);
            for j in 0..k {
                let t = cs[j].conj() * h[j][k] + sn[j].conj() * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let (a, bb) = (h[k][k], h[k + 1][k]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if den == 0.0 {
                cs[k] = C64::new(1.0, 0.0);
                sn[k] = C64::new(0.0, 0.0);
            } else {
                cs[k] = a / den;
                sn[k] = bb / den;
            }
            h[k][k] = C64::new(den, 0.0);
            h[k + 1][k] = C64::new(0.0, 0.0);
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k].conj() * g[k];
            k_used = k + 1;
            rel = g[k + 1].norm() / bnorm;
            if rel < opts.tol || hn == 0.0 || iters >= opts.max_iter {
                break;
            }
            v.push(w.iter().map(|z| z / hn).collect());
        }
        // back substitution
        let mut yk = vec![C64::new(0.0, 0.0); k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for j in (i + 1)..k_used {
                acc -= h[i][j] * yk[j];
            }
            yk[i] = acc / h[i][i];
        }
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..k_used {
                acc += yk[j] * v[j][i];
            }
            x[i] += precond[i] * acc;
        }
    }
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let final_rel = norm(&r) / bnorm;
    if final_rel < opts.tol * 10.0 {
        Ok(final_rel)
    } else {
        Err(Error::SolverFailed(format!("GMRES stalled at relative residual {:.3e} (estimate {rel:.3e})", final_rel)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let m = Csr::from_triplets(
            2,
            2,
            vec![(1, 0, C64::new(1.0, 0.0)), (0, 1, C64::new(2.0, 0.0)), (1, 0, C64::new(3.0, 0.0)), (0, 0, C64::new(0.0, 0.0))],
        );
        assert_eq!(m.nnz(), 2);
        let d = m.to_dense();
        assert_eq!(d[(1, 0)], C64::new(4.0, 0.0));
        assert_eq!(d[(0, 1)], C64::new(2.0, 0.0));
    }

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        let n = 200;
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, C64::new(4.0 + i as f64 * 0.01, 1.0)));
            if i + 1 < n {
                trip.push((i, i + 1, C64::new(-1.0, 0.5)));
                trip.push((i + 1, i, C64::new(-1.5, 0.0)));
            }
        }
        let a = Csr::from_triplets(n, n, trip);
        let xs: Vec<C64> = (0..n).map(|i| C64::new((i as f64).sin(), 1.0)).collect();
        let mut b = vec![C64::new(0.0, 0.0); n];
        a.matvec(&xs, &mut b);
        let mut x = vec![C64::new(0.0, 0.0); n];
        let pre: Vec<C64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
        gmres(|u, v| a.matvec(u, v), &pre, &b, &mut x, &GmresOptions { restart: 30, ..Default::default() }).unwrap();
        for i in 0..n {
            assert!((x[i] - xs[i]).norm() < 1e-9);
        }
    }
}
