//! Sparse multivariate polynomials over complex coefficients.
//!
//! Terms are kept in a `BTreeMap` from exponent vector to coefficient, so a
//! polynomial has exactly one canonical form: no zero coefficients are stored
//! and iteration order is lexicographic in the exponent vector. Everything
//! downstream (minors, Hefer quotients, frame evaluation) is built on
//! pointwise values of these polynomials and of their conjugates.

use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub type C64 = Complex64;

#[derive(Debug, Error, PartialEq)]
pub enum PolyError {
    #[error("dimension mismatch: polynomial in {expected} variables, point of dimension {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("not divisible: remainder keeps {terms} terms (max |coeff| {max_abs:.3e})")]
    NotDivisible { terms: usize, max_abs: f64 },
}

/// A point in C^n, the argument of every pointwise evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoint(pub Vec<C64>);

impl ComplexPoint {
    pub fn new(coords: Vec<C64>) -> Self {
        ComplexPoint(coords)
    }

    pub fn from_re(coords: &[f64]) -> Self {
        ComplexPoint(coords.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Concatenation (zeta, z), the argument for doubled-ring polynomials.
    pub fn doubled(&self, z: &ComplexPoint) -> ComplexPoint {
        let mut v = self.0.clone();
        v.extend_from_slice(&z.0);
        ComplexPoint(v)
    }
}

/// Sparse polynomial in `n_vars` complex variables.
#[derive(Debug, Clone, PartialEq)]
pub struct CPolynomial {
    n_vars: usize,
    terms: BTreeMap<Vec<u32>, C64>,
}

impl CPolynomial {
    pub fn zero(n_vars: usize) -> Self {
        CPolynomial {
            n_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n_vars: usize, c: C64) -> Self {
        let mut p = Self::zero(n_vars);
        p.add_term(vec![0; n_vars], c);
        p
    }

    pub fn one(n_vars: usize) -> Self {
        Self::constant(n_vars, C64::new(1.0, 0.0))
    }

    /// The coordinate polynomial z_{idx} (0-based).
    pub fn var(n_vars: usize, idx: usize) -> Self {
        assert!(idx < n_vars);
        let mut exp = vec![0u32; n_vars];
        exp[idx] = 1;
        Self::monomial(n_vars, exp, C64::new(1.0, 0.0))
    }

    pub fn monomial(n_vars: usize, exp: Vec<u32>, c: C64) -> Self {
        assert_eq!(exp.len(), n_vars);
        let mut p = Self::zero(n_vars);
        p.add_term(exp, c);
        p
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &C64)> {
        self.terms.iter()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Adds `c` to the coefficient at `exp`, pruning exact zeros.
    pub fn add_term(&mut self, exp: Vec<u32>, c: C64) {
        assert_eq!(exp.len(), self.n_vars, "exponent vector length");
        if c == C64::new(0.0, 0.0) {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exp) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let s = *e.get() + c;
                if s == C64::new(0.0, 0.0) {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &CPolynomial) -> CPolynomial {
        assert_eq!(self.n_vars, other.n_vars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &CPolynomial) -> CPolynomial {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> CPolynomial {
        let mut out = Self::zero(self.n_vars);
        if s == C64::new(0.0, 0.0) {
            return out;
        }
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &CPolynomial) -> CPolynomial {
        assert_eq!(self.n_vars, other.n_vars);
        let mut out = Self::zero(self.n_vars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let exp: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(exp, ca * cb);
            }
        }
        out
    }

    pub fn eval(&self, w: &ComplexPoint) -> Result<C64, PolyError> {
        if w.dim() != self.n_vars {
            return Err(PolyError::DimensionMismatch {
                expected: self.n_vars,
                got: w.dim(),
            });
        }
        let mut acc = C64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut t = *c;
            for (x, &k) in w.0.iter().zip(e.iter()) {
                if k > 0 {
                    t *= x.powu(k);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Holomorphic partial derivative with respect to variable `idx`.
    pub fn derivative(&self, idx: usize) -> CPolynomial {
        assert!(idx < self.n_vars);
        let mut out = Self::zero(self.n_vars);
        for (e, c) in &self.terms {
            if e[idx] == 0 {
                continue;
            }
            let mut exp = e.clone();
            exp[idx] -= 1;
            out.add_term(exp, c * C64::new(e[idx] as f64, 0.0));
        }
        out
    }

    /// All holomorphic partials (d/dz_1, ..., d/dz_n) evaluated at `w`.
    ///
    /// The antiholomorphic derivative of the conjugate polynomial at `w` is
    /// the complex conjugate of this value.
    pub fn wirtinger_grad(&self, w: &ComplexPoint) -> Result<Vec<C64>, PolyError> {
        if w.dim() != self.n_vars {
            return Err(PolyError::DimensionMismatch {
                expected: self.n_vars,
                got: w.dim(),
            });
        }
        let mut grad = vec![C64::new(0.0, 0.0); self.n_vars];
        for (e, c) in &self.terms {
            for l in 0..self.n_vars {
                if e[l] == 0 {
                    continue;
                }
                let mut t = c * C64::new(e[l] as f64, 0.0);
                for (i, (x, &k)) in w.0.iter().zip(e.iter()).enumerate() {
                    let kk = if i == l { k - 1 } else { k };
                    if kk > 0 {
                        t *= x.powu(kk);
                    }
                }
                grad[l] += t;
            }
        }
        Ok(grad)
    }

    /// Lifts a polynomial in n variables into a 2n-variable ring, placing the
    /// original variables at `offset`.
    pub fn lift(&self, total_vars: usize, offset: usize) -> CPolynomial {
        assert!(offset + self.n_vars <= total_vars);
        let mut out = Self::zero(total_vars);
        for (e, c) in &self.terms {
            let mut exp = vec![0u32; total_vars];
            exp[offset..offset + self.n_vars].copy_from_slice(e);
            out.add_term(exp, *c);
        }
        out
    }

    /// Renames variable `from` to variable `to` (same ring).
    pub fn rename_var(&self, from: usize, to: usize) -> CPolynomial {
        let mut out = Self::zero(self.n_vars);
        for (e, c) in &self.terms {
            let mut exp = e.clone();
            let k = exp[from];
            exp[from] = 0;
            exp[to] += k;
            out.add_term(exp, *c);
        }
        out
    }

    /// Exact division by the linear form (x_hi - x_lo). The dividend must
    /// vanish identically on the hyperplane x_hi = x_lo; the remainder is
    /// checked against a scale-aware tolerance.
    pub fn divide_by_linear(&self, hi: usize, lo: usize) -> Result<CPolynomial, PolyError> {
        assert!(hi < self.n_vars && lo < self.n_vars && hi != lo);
        // Split into coefficients of powers of x_hi.
        let mut by_deg: BTreeMap<u32, CPolynomial> = BTreeMap::new();
        for (e, c) in &self.terms {
            let d = e[hi];
            let mut exp = e.clone();
            exp[hi] = 0;
            by_deg
                .entry(d)
                .or_insert_with(|| CPolynomial::zero(self.n_vars))
                .add_term(exp, *c);
        }
        let deg = match by_deg.keys().next_back() {
            Some(&d) => d,
            None => return Ok(CPolynomial::zero(self.n_vars)),
        };
        let x_lo = CPolynomial::var(self.n_vars, lo);
        let zero = CPolynomial::zero(self.n_vars);
        // Synthetic division: q_{k-1} = c_k + x_lo * q_k, descending k.
        let mut quotient = CPolynomial::zero(self.n_vars);
        let mut carry = CPolynomial::zero(self.n_vars);
        for k in (1..=deg).rev() {
            let ck = by_deg.get(&k).unwrap_or(&zero);
            let qk = ck.add(&carry);
            for (e, c) in &qk.terms {
                let mut exp = e.clone();
                exp[hi] += k - 1;
                quotient.add_term(exp, *c);
            }
            carry = x_lo.mul(&qk);
        }
        let remainder = by_deg.get(&0).unwrap_or(&zero).add(&carry);
        let scale = self.max_abs_coeff().max(1.0);
        let max_abs = remainder.max_abs_coeff();
        if max_abs > 1e-10 * scale {
            return Err(PolyError::NotDivisible {
                terms: remainder.num_terms(),
                max_abs,
            });
        }
        Ok(quotient)
    }
}

impl fmt::Display for CPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6}{:+.6}i)", c.re, c.im)?;
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    write!(f, "*z{}^{}", i + 1, k)?;
                }
            }
        }
        Ok(())
    }
}
