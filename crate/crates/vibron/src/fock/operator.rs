// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

//! Symbolic operators: sums of products of single-mode and single-spin factors.

use crate::sparse::Csr;
use crate::C64;
use std::ops::{Add, Mul, Neg, Sub};

/// Elementary factor acting on one mode or spin (by index in the system).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Factor {
    A(usize),
    Adag(usize),
    N(usize),
    Sz(usize),
    /// `|up><down|`
    Sp(usize),
    /// `|down><up|`
    Sm(usize),
    Sx(usize),
}

impl Factor {
    fn adjoint(self) -> Factor {
        match self {
            Factor::A(m) => Factor::Adag(m),
            Factor::Adag(m) => Factor::A(m),
            Factor::Sp(s) => Factor::Sm(s),
            Factor::Sm(s) => Factor::Sp(s),
            f => f,
        }
    }

    fn charge(self) -> i32 {
        match self {
            Factor::A(_) => -1,
            Factor::Adag(_) => 1,
            _ => 0,
        }
    }
}

/// `sum_k c_k F_k1 F_k2 ...`; an empty product is the identity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Operator {
    pub terms: Vec<(C64, Vec<Factor>)>,
}

impl Operator {
    pub fn zero() -> Self {
        Operator { terms: Vec::new() }
    }

    pub fn identity() -> Self {
        Operator { terms: vec![(C64::new(1.0, 0.0), Vec::new())] }
    }

    pub fn factor(f: Factor) -> Self {
        Operator { terms: vec![(C64::new(1.0, 0.0), vec![f])] }
    }

    pub fn a(m: usize) -> Self {
        Self::factor(Factor::A(m))
    }
    pub fn adag(m: usize) -> Self {
        Self::factor(Factor::Adag(m))
    }
    pub fn n(m: usize) -> Self {
        Self::factor(Factor::N(m))
    }
    pub fn sz(s: usize) -> Self {
        Self::factor(Factor::Sz(s))
    }
    pub fn sx(s: usize) -> Self {
        Self::factor(Factor::Sx(s))
    }
    pub fn sp(s: usize) -> Self {
        Self::factor(Factor::Sp(s))
    }
    pub fn sm(s: usize) -> Self {
        Self::factor(Factor::Sm(s))
    }
    /// `sigma_y = -i sigma^+ + i sigma^-`
    pub fn sy(s: usize) -> Self {
        Self::sp(s) * C64::new(0.0, -1.0) + Self::sm(s) * C64::new(0.0, 1.0)
    }

    /// `c a_i^dag a_j + conj(c) a_j^dag a_i`
    pub fn hopping(i: usize, j: usize, c: C64) -> Self {
        Self::adag(i) * Self::a(j) * c + Self::adag(j) * Self::a(i) * c.conj()
    }

    pub fn scale(mut self, c: C64) -> Self {
        for t in &mut self.terms {
            t.0 *= c;
        }
        self
    }

    pub fn adjoint(&self) -> Self {
        Operator {
            terms: self
                .terms
                .iter()
                .map(|(c, p)| (c.conj(), p.iter().rev().map(|f| f.adjoint()).collect()))
                .collect(),
        }
    }

    /// Common vibron-number change of all terms, if they agree.
    pub fn charge(&self) -> Option<i32> {
        let mut q = None;
        for (c, p) in &self.terms {
            if *c == C64::new(0.0, 0.0) {
                continue;
            }
            let qt: i32 = p.iter().map(|f| f.charge()).sum();
            match q {
                None => q = Some(qt),
                Some(q0) if q0 != qt => return None,
                _ => {}
            }
        }
        Some(q.unwrap_or(0))
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(mut self, rhs: Operator) -> Operator {
        self.terms.extend(rhs.terms);
        self
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        self + (-rhs)
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (c1, p1) in &self.terms {
            for (c2, p2) in &rhs.terms {
                let mut p = p1.clone();
                p.extend_from_slice(p2);
                terms.push((c1 * c2, p));
            }
        }
        Operator { terms }
    }
}

impl Mul<C64> for Operator {
    type Output = Operator;
    fn mul(self, c: C64) -> Operator {
        self.scale(c)
    }
}

impl Mul<f64> for Operator {
    type Output = Operator;
    fn mul(self, c: f64) -> Operator {
        self.scale(C64::new(c, 0.0))
    }
}

/// Digits of basis index `s` (first factor most significant).
pub(crate) fn digits(mut s: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = s % dims[k];
        s /= dims[k];
    }
    out
}

/// Apply one factor to a digit vector in place; returns the amplitude or
/// `None` when the result vanishes (including truncation).
fn apply_factor(f: Factor, dg: &mut [usize], dims: &[usize], n_modes: usize) -> Option<f64> {
    match f {
        Factor::A(m) => {
            let n = dg[m];
            if n == 0 {
                return None;
            }
            dg[m] = n - 1;
            Some((n as f64).sqrt())
        }
        Factor::Adag(m) => {
            let n = dg[m];
            if n + 1 >= dims[m] {
                return None;
            }
            dg[m] = n + 1;
            Some(((n + 1) as f64).sqrt())
        }
        Factor::N(m) => {
            if dg[m] == 0 {
                None
            } else {
                Some(dg[m] as f64)
            }
        }
        Factor::Sz(s) => Some(if dg[n_modes + s] == 0 { 1.0 } else { -1.0 }),
        Factor::Sp(s) => {
            if dg[n_modes + s] == 1 {
                dg[n_modes + s] = 0;
                Some(1.0)
            } else {
                None
            }
        }
        Factor::Sm(s) => {
            if dg[n_modes + s] == 0 {
                dg[n_modes + s] = 1;
                Some(1.0)
            } else {
                None
            }
        }
        Factor::Sx(s) => {
            dg[n_modes + s] ^= 1;
            Some(1.0)
        }
    }
}

pub(crate) fn to_csr(op: &Operator, dims: &[usize], n_modes: usize) -> Csr {
    let d: usize = dims.iter().product();
    let mut trip = Vec::new();
    for s in 0..d {
        let base = digits(s, dims);
        'term: for (c, prod) in &op.terms {
            let mut dg = base.clone();
            let mut amp = *c;
            for f in prod.iter().rev() {
                match apply_factor(*f, &mut dg, dims, n_modes) {
                    Some(a) => amp *= a,
                    None => continue 'term,
                }
            }
            let r = dg.iter().zip(dims).fold(0, |acc, (x, n)| acc * n + x);
            trip.push((r, s, amp));
        }
    }
    Csr::from_triplets(d, d, trip)
}
