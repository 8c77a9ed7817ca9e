//! Pointwise evaluation, outside the degeneracy set Z, of the minimal-inverse
//! data of a polynomial matrix: the least-norm right inverse
//! `sigma = f* (f f*)^{-1}` for the trivial metric, its antiholomorphic
//! derivative in closed form, and the forms `u_k` built from them.

use crate::graded::{Dims, GradedElement};
use crate::poly::{C64, CPolynomial, ComplexPoint};
use thiserror::Error;

pub const DEFAULT_GRAM_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum FrameError {
    #[error("gram matrix numerically singular at this point (min eigenvalue {sigma_min:.3e}); the point is too close to the degeneracy set")]
    SingularAtPoint { sigma_min: f64 },
    #[error("shape violation: {0}")]
    Shape(String),
}

/// Column grouping of the morphism: either one full r x m matrix or a direct
/// sum of blocks of sizes m_1, ..., m_r (one row per block).
#[derive(Debug, Clone, PartialEq)]
pub enum BlockStructure {
    Full,
    Blocks(Vec<usize>),
}

/// An r x m matrix of polynomials in n variables with optional block metadata.
#[derive(Debug, Clone)]
pub struct PolyMatrix {
    pub n: usize,
    pub r: usize,
    pub m: usize,
    rows: Vec<Vec<CPolynomial>>,
    pub blocks: BlockStructure,
}

impl PolyMatrix {
    pub fn new_full(n: usize, rows: Vec<Vec<CPolynomial>>) -> Result<Self, FrameError> {
        let r = rows.len();
        if r == 0 {
            return Err(FrameError::Shape("matrix needs at least one row".into()));
        }
        let m = rows[0].len();
        if m == 0 || rows.iter().any(|row| row.len() != m) {
            return Err(FrameError::Shape("ragged or empty rows".into()));
        }
        if r > m {
            return Err(FrameError::Shape(format!("r = {} exceeds m = {}", r, m)));
        }
        for row in &rows {
            for p in row {
                if p.n_vars() != n {
                    return Err(FrameError::Shape(format!(
                        "entry in {} variables, expected {}",
                        p.n_vars(),
                        n
                    )));
                }
            }
        }
        Ok(PolyMatrix {
            n,
            r,
            m,
            rows,
            blocks: BlockStructure::Full,
        })
    }

    /// One tuple, r = 1: the classical Koszul setting.
    pub fn koszul(n: usize, tuple: Vec<CPolynomial>) -> Result<Self, FrameError> {
        Self::new_full(n, vec![tuple])
    }

    /// Block-diagonal assembly of r tuples: row j carries tuple j in its own
    /// column block, zero elsewhere.
    pub fn product(n: usize, tuples: Vec<Vec<CPolynomial>>) -> Result<Self, FrameError> {
        let r = tuples.len();
        if r == 0 {
            return Err(FrameError::Shape("no tuples".into()));
        }
        let sizes: Vec<usize> = tuples.iter().map(|t| t.len()).collect();
        if sizes.iter().any(|&s| s == 0) {
            return Err(FrameError::Shape("empty tuple".into()));
        }
        let m: usize = sizes.iter().sum();
        let mut rows = Vec::with_capacity(r);
        let mut offset = 0usize;
        for (j, tuple) in tuples.iter().enumerate() {
            let mut row = vec![CPolynomial::zero(n); m];
            for (i, p) in tuple.iter().enumerate() {
                if p.n_vars() != n {
                    return Err(FrameError::Shape("tuple entry with wrong variable count".into()));
                }
                row[offset + i] = p.clone();
            }
            rows.push(row);
            offset += sizes[j];
        }
        let mut pm = Self::new_full(n, rows)?;
        pm.blocks = BlockStructure::Blocks(sizes);
        Ok(pm)
    }

    /// The same m-tuple duplicated across r blocks; realizes membership in the
    /// r-th power of the ideal.
    pub fn power(n: usize, tuple: Vec<CPolynomial>, r: usize) -> Result<Self, FrameError> {
        if r == 0 {
            return Err(FrameError::Shape("power exponent must be positive".into()));
        }
        Self::product(n, vec![tuple; r])
    }

    pub fn entry(&self, j: usize, k: usize) -> &CPolynomial {
        &self.rows[j][k]
    }

    pub fn rows(&self) -> &[Vec<CPolynomial>] {
        &self.rows
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.n, self.m, self.r)
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        match &self.blocks {
            BlockStructure::Full => vec![self.m],
            BlockStructure::Blocks(s) => s.clone(),
        }
    }

    /// Pointwise value, r x m.
    pub fn eval(&self, zeta: &ComplexPoint) -> Vec<Vec<C64>> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|p| p.eval(zeta).expect("dimension checked")).collect())
            .collect()
    }
}

/// Everything needed pointwise at an admissible zeta: the matrix value, its
/// holomorphic derivatives, the Gram matrix f f*, the minimal inverse sigma
/// and the closed-form antiholomorphic derivative of sigma.
#[derive(Debug, Clone)]
pub struct FramePoint {
    pub dims: Dims,
    pub zeta: ComplexPoint,
    /// r x m value of f.
    pub fval: Vec<Vec<C64>>,
    /// n x r x m values of df/dzeta_l.
    pub dfval: Vec<Vec<Vec<C64>>>,
    /// r x r Hermitian Gram matrix f f*.
    pub gram: Vec<Vec<C64>>,
    /// m x r minimal inverse f* (f f*)^{-1}.
    pub sigma: Vec<Vec<C64>>,
    /// n x m x r coefficients of dzbar_l in dbar(sigma).
    pub dbar_sigma: Vec<Vec<Vec<C64>>>,
    /// Smallest eigenvalue of the Gram matrix.
    pub sigma_min: f64,
}

pub fn frame_at(f: &PolyMatrix, zeta: &ComplexPoint) -> Result<FramePoint, FrameError> {
    frame_at_with_threshold(f, zeta, DEFAULT_GRAM_THRESHOLD)
}

pub fn frame_at_with_threshold(
    f: &PolyMatrix,
    zeta: &ComplexPoint,
    threshold: f64,
) -> Result<FramePoint, FrameError> {
    let (n, r, m) = (f.n, f.r, f.m);
    assert_eq!(zeta.dim(), n, "point dimension");
    let fval = f.eval(zeta);
    let mut dfval = vec![vec![vec![C64::new(0.0, 0.0); m]; r]; n];
    for j in 0..r {
        for k in 0..m {
            let grad = f.rows[j][k].wirtinger_grad(zeta).expect("dimension checked");
            for l in 0..n {
                dfval[l][j][k] = grad[l];
            }
        }
    }
    // gram = f f*
    let mut gram = vec![vec![C64::new(0.0, 0.0); r]; r];
    for a in 0..r {
        for b in 0..r {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..m {
                s += fval[a][k] * fval[b][k].conj();
            }
            gram[a][b] = s;
        }
    }
    let sigma_min = linalg::hermitian_min_eigenvalue(&gram);
    if !(sigma_min >= threshold) {
        return Err(FrameError::SingularAtPoint { sigma_min });
    }
    let ginv = linalg::invert(&gram).ok_or(FrameError::SingularAtPoint { sigma_min })?;

    // sigma = f* ginv  (m x r)
    let mut sigma = vec![vec![C64::new(0.0, 0.0); r]; m];
    for i in 0..m {
        for j in 0..r {
            let mut s = C64::new(0.0, 0.0);
            for t in 0..r {
                s += fval[t][i].conj() * ginv[t][j];
            }
            sigma[i][j] = s;
        }
    }

    // dbar_l sigma = (dbar_l f*) ginv - sigma (f (dbar_l f*)) ginv,
    // where (dbar_l f*)[i][j] = conj(d f_j^i / dzeta_l).
    let mut dbar_sigma = vec![vec![vec![C64::new(0.0, 0.0); r]; m]; n];
    for l in 0..n {
        // a = dbar_l f* (m x r)
        let mut a = vec![vec![C64::new(0.0, 0.0); r]; m];
        for i in 0..m {
            for j in 0..r {
                a[i][j] = dfval[l][j][i].conj();
            }
        }
        // t2 = f a (r x r), t3 = t2 ginv (r x r)
        let mut t2 = vec![vec![C64::new(0.0, 0.0); r]; r];
        for p in 0..r {
            for q in 0..r {
                let mut s = C64::new(0.0, 0.0);
                for i in 0..m {
                    s += fval[p][i] * a[i][q];
                }
                t2[p][q] = s;
            }
        }
        let mut t3 = vec![vec![C64::new(0.0, 0.0); r]; r];
        for p in 0..r {
            for q in 0..r {
                let mut s = C64::new(0.0, 0.0);
                for t in 0..r {
                    s += t2[p][t] * ginv[t][q];
                }
                t3[p][q] = s;
            }
        }
        for i in 0..m {
            for j in 0..r {
                let mut s = C64::new(0.0, 0.0);
                for t in 0..r {
                    s += a[i][t] * ginv[t][j] - sigma[i][t] * t3[t][j];
                }
                dbar_sigma[l][i][j] = s;
            }
        }
    }

    Ok(FramePoint {
        dims: f.dims(),
        zeta: zeta.clone(),
        fval,
        dfval,
        gram,
        sigma,
        dbar_sigma,
        sigma_min,
    })
}

impl FramePoint {
    /// The column sigma_j as an E-valued scalar element.
    pub fn sigma_element(&self, j: usize) -> GradedElement {
        let mut el = GradedElement::zero(self.dims);
        for i in 0..self.dims.m {
            let c = self.sigma[i][j];
            if c != C64::new(0.0, 0.0) {
                el.add_assign(&GradedElement::e_gen(self.dims, i + 1, c));
            }
        }
        el
    }

    /// The (0,1)-form dbar(sigma_j): sum over (i, l) of
    /// (dbar_l sigma_{ij}) dzbar_l ^ e_i, stored canonically (e before dzbar).
    pub fn dbar_sigma_element(&self, j: usize) -> GradedElement {
        let dims = self.dims;
        let mut el = GradedElement::zero(dims);
        for l in 0..dims.n {
            for i in 0..dims.m {
                let c = self.dbar_sigma[l][i][j];
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                // dzbar_l ^ e_i = - e_i ^ dzbar_l
                let blade = crate::graded::GradedElement::e_gen(dims, i + 1, C64::new(1.0, 0.0))
                    .wedge(&GradedElement::dzbar_gen(dims, l + 1, -c))
                    .expect("same dims");
                el.add_assign(&blade);
            }
        }
        el
    }

    /// The wedge sigma_1 ^ ... ^ sigma_r (no markers).
    fn sigma_wedge(&self) -> GradedElement {
        let mut acc = GradedElement::one(self.dims);
        for j in 0..self.dims.r {
            acc = acc.wedge(&self.sigma_element(j)).expect("same dims");
        }
        acc
    }
}

/// All compositions of `total` into `parts` nonnegative integers.
pub(crate) fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            let mut v = vec![first];
            v.append(&mut rest);
            out.push(v);
        }
    }
    out
}

/// The (0, k-1)-form u_k: the sigma-wedge times the (k-1)-st divided tensor
/// power of dbar(sigma), expanded over alpha with |alpha| = k-1, with the
/// det Q* flag set.
pub fn u_form(fp: &FramePoint, k: u32) -> GradedElement {
    assert!(k >= 1);
    let prefix = fp.sigma_wedge();
    assemble_with_prefix(fp, &prefix, k)
}

/// Closed-form dbar(u_k): the product rule applied over the sigma columns
/// only, since dbar(dbar sigma) = 0.
pub fn dbar_u_form(fp: &FramePoint, k: u32) -> GradedElement {
    assert!(k >= 1);
    let dims = fp.dims;
    let mut dbar_prefix = GradedElement::zero(dims);
    for j in 0..dims.r {
        let mut acc = GradedElement::one(dims);
        for t in 0..dims.r {
            let factor = if t == j {
                fp.dbar_sigma_element(t)
            } else {
                fp.sigma_element(t)
            };
            acc = acc.wedge(&factor).expect("same dims");
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        dbar_prefix.add_assign(&acc.scale(C64::new(sign, 0.0)));
    }
    assemble_with_prefix(fp, &dbar_prefix, k)
}

fn assemble_with_prefix(fp: &FramePoint, prefix: &GradedElement, k: u32) -> GradedElement {
    let dims = fp.dims;
    let mut out = GradedElement::zero(dims);
    if prefix.is_zero() {
        return out;
    }
    let dbar_elems: Vec<GradedElement> =
        (0..dims.r).map(|j| fp.dbar_sigma_element(j)).collect();
    // Wedge powers of each dbar(sigma_j) up to k-1.
    let mut powers: Vec<Vec<GradedElement>> = Vec::with_capacity(dims.r);
    for j in 0..dims.r {
        let mut pw = vec![GradedElement::one(dims)];
        for p in 1..=(k - 1) {
            let next = pw[(p - 1) as usize].wedge(&dbar_elems[j]).expect("same dims");
            pw.push(next);
        }
        powers.push(pw);
    }
    for alpha in compositions(k - 1, dims.r) {
        let mut term = prefix.clone();
        for j in 0..dims.r {
            if alpha[j] > 0 {
                term = term.wedge(&powers[j][alpha[j] as usize]).expect("same dims");
            }
            if term.is_zero() {
                break;
            }
        }
        if term.is_zero() {
            continue;
        }
        let marker = GradedElement::sym_marker(dims, &alpha)
            .wedge(&GradedElement::det_marker(dims))
            .expect("same dims");
        out.add_assign(&term.wedge(&marker).expect("same dims"));
    }
    out
}

/// Treats `tuple` as a 1 x N matrix (classical Koszul setting) and returns the
/// form u_k of the induced frame at `zeta`.
pub fn koszul_on_tuple(
    tuple: &[CPolynomial],
    zeta: &ComplexPoint,
    k: u32,
) -> Result<GradedElement, FrameError> {
    let n = zeta.dim();
    let pm = PolyMatrix::koszul(n, tuple.to_vec())?;
    let fp = frame_at(&pm, zeta)?;
    Ok(u_form(&fp, k))
}

/// Small dense complex linear algebra for the r x r Gram matrices.
pub(crate) mod linalg {
    use super::C64;
    use num_complex::Complex64;

    /// Smith's algorithm: complex division that survives denominators whose
    /// squared norm underflows (residue nodes sit exponentially close to the
    /// degeneracy set, so Gram entries reach 1e-200 territory).
    pub fn robust_div(a: C64, b: C64) -> C64 {
        if b.im.abs() <= b.re.abs() {
            let r = b.im / b.re;
            let den = b.re + b.im * r;
            C64::new((a.re + a.im * r) / den, (a.im - a.re * r) / den)
        } else {
            let r = b.re / b.im;
            let den = b.im + b.re * r;
            C64::new((a.re * r + a.im) / den, (a.im * r - a.re) / den)
        }
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn invert(a: &[Vec<C64>]) -> Option<Vec<Vec<C64>>> {
        let n = a.len();
        let mut m: Vec<Vec<C64>> = a.iter().map(|row| {
            let mut r = row.clone();
            r.resize(n, C64::new(0.0, 0.0));
            r
        }).collect();
        let mut inv: Vec<Vec<C64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            C64::new(1.0, 0.0)
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    })
                    .collect()
            })
            .collect();
        for col in 0..n {
            let mut piv = col;
            let mut best = m[col][col].norm();
            for row in (col + 1)..n {
                let v = m[row][col].norm();
                if v > best {
                    best = v;
                    piv = row;
                }
            }
            if best == 0.0 {
                return None;
            }
            m.swap(col, piv);
            inv.swap(col, piv);
            let d = m[col][col];
            for j in 0..n {
                m[col][j] = robust_div(m[col][j], d);
                inv[col][j] = robust_div(inv[col][j], d);
            }
            for row in 0..n {
                if row == col {
                    continue;
                }
                let factor = m[row][col];
                if factor == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let mcj = m[col][j];
                    let icj = inv[col][j];
                    m[row][j] -= factor * mcj;
                    inv[row][j] -= factor * icj;
                }
            }
        }
        Some(inv)
    }

    /// Smallest eigenvalue of a Hermitian positive semidefinite matrix.
    /// Closed forms for sizes 1..3, cyclic Jacobi sweeps beyond.
    pub fn hermitian_min_eigenvalue(a: &[Vec<C64>]) -> f64 {
        match a.len() {
            1 => a[0][0].re,
            2 => {
                let tr = a[0][0].re + a[1][1].re;
                let det = a[0][0].re * a[1][1].re - a[0][1].norm_sqr();
                let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
                0.5 * (tr - disc)
            }
            3 => {
                let q = (a[0][0].re + a[1][1].re + a[2][2].re) / 3.0;
                let p1 = a[0][1].norm_sqr() + a[0][2].norm_sqr() + a[1][2].norm_sqr();
                let p2 = (a[0][0].re - q).powi(2)
                    + (a[1][1].re - q).powi(2)
                    + (a[2][2].re - q).powi(2)
                    + 2.0 * p1;
                if p2 <= 0.0 {
                    return q;
                }
                let p = (p2 / 6.0).sqrt();
                // B = (A - q I)/p; det(B) is real for Hermitian A.
                let b: Vec<Vec<C64>> = (0..3)
                    .map(|i| {
                        (0..3)
                            .map(|j| {
                                let mut v = a[i][j];
                                if i == j {
                                    v -= C64::new(q, 0.0);
                                }
                                v / p
                            })
                            .collect()
                    })
                    .collect();
                let det_b = (b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
                    - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
                    + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]))
                    .re;
                let phi = (det_b / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
                // The smallest eigenvalue uses phi + 2 pi / 3.
                q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
            }
            _ => jacobi_min_eigenvalue(a),
        }
    }

    fn jacobi_min_eigenvalue(a: &[Vec<C64>]) -> f64 {
        let n = a.len();
        let mut m: Vec<Vec<Complex64>> = a.to_vec();
        for _ in 0..24 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += m[p][q].norm_sqr();
                }
            }
            if off < 1e-28 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[p][q];
                    if apq.norm() < 1e-300 {
                        continue;
                    }
                    let app = m[p][p].re;
                    let aqq = m[q][q].re;
                    // Complex Jacobi rotation: phase to make the pivot real,
                    // then a real rotation.
                    let phase = apq / apq.norm();
                    let g = apq.norm();
                    let theta = 0.5 * (2.0 * g).atan2(aqq - app);
                    let (c, s) = (theta.cos(), theta.sin());
                    let cs = Complex64::new(c, 0.0);
                    let sn = phase * s;
                    // Apply on both sides: rows/cols p, q.
                    for k in 0..n {
                        let mkp = m[k][p];
                        let mkq = m[k][q];
                        m[k][p] = mkp * cs - mkq * sn.conj();
                        m[k][q] = mkp * sn + mkq * cs;
                    }
                    for k in 0..n {
                        let mpk = m[p][k];
                        let mqk = m[q][k];
                        m[p][k] = mpk * cs - mqk * sn;
                        m[q][k] = mpk * sn.conj() + mqk * cs;
                    }
                }
            }
        }
        (0..n).map(|i| m[i][i].re).fold(f64::INFINITY, f64::min)
    }
}
