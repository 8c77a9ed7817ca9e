//! Hefer decompositions for polynomial rows.
//!
//! For every entry f_j^k the telescoping split produces quotients
//! b_{jkl}(zeta, z) in the doubled 2n-variable ring with
//! `f_j^k(zeta) - f_j^k(z) = sum_l (zeta_l - z_l) b_{jkl}(zeta, z)`,
//! exactly as polynomials. The operator delta_h contracts one e-generator,
//! wedges one dz from the left and lowers one unit of symmetric degree; its
//! divided powers drive the division formula.

use crate::frames::PolyMatrix;
use crate::graded::{Blade, Dims, GradedElement};
use crate::poly::{C64, CPolynomial, ComplexPoint};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Divided-difference quotients b_{jkl} indexed by row j, column k,
/// direction l; polynomials in (zeta_1..zeta_n, z_1..z_n).
#[derive(Debug, Clone)]
pub struct HeferData {
    pub n: usize,
    pub r: usize,
    pub m: usize,
    quotients: Vec<Vec<Vec<CPolynomial>>>,
}

/// Deterministic telescoping split: substitute z-coordinates one at a time in
/// the fixed order l = 1..n and divide each difference exactly by
/// (zeta_l - z_l). Polynomials always split, so this cannot fail.
pub fn hefer_split(f: &PolyMatrix) -> HeferData {
    let n = f.n;
    let total = 2 * n;
    let mut quotients = Vec::with_capacity(f.r);
    for j in 0..f.r {
        let mut row = Vec::with_capacity(f.m);
        for k in 0..f.m {
            // Lift to the doubled ring with zeta in slots 0..n.
            let p = f.entry(j, k).lift(total, 0);
            let mut quots = Vec::with_capacity(n);
            // stage_l = p with zeta_1..zeta_l renamed to z_1..z_l
            let mut current = p;
            for l in 0..n {
                let substituted = current.rename_var(l, n + l);
                let diff = current.sub(&substituted);
                let q = diff
                    .divide_by_linear(l, n + l)
                    .expect("telescoping difference vanishes on zeta_l = z_l");
                quots.push(q);
                current = substituted;
            }
            row.push(quots);
        }
        quotients.push(row);
    }
    HeferData {
        n,
        r: f.r,
        m: f.m,
        quotients,
    }
}

impl HeferData {
    pub fn quotient(&self, j: usize, k: usize, l: usize) -> &CPolynomial {
        &self.quotients[j][k][l]
    }

    /// Checks the defining identity exactly on the term maps.
    pub fn identity_defect(&self, f: &PolyMatrix) -> f64 {
        let total = 2 * self.n;
        let mut worst = 0.0f64;
        for j in 0..self.r {
            for k in 0..self.m {
                let p_zeta = f.entry(j, k).lift(total, 0);
                let p_z = f.entry(j, k).lift(total, self.n);
                let mut rhs = CPolynomial::zero(total);
                for l in 0..self.n {
                    let lin = CPolynomial::var(total, l).sub(&CPolynomial::var(total, self.n + l));
                    rhs = rhs.add(&lin.mul(&self.quotients[j][k][l]));
                }
                let defect = p_zeta.sub(&p_z).sub(&rhs).max_abs_coeff();
                worst = worst.max(defect);
            }
        }
        worst
    }

    /// All quotients evaluated at (zeta, z).
    pub fn eval_at(&self, zeta: &ComplexPoint, z: &ComplexPoint) -> HeferValues {
        let w = zeta.doubled(z);
        let vals = self
            .quotients
            .iter()
            .map(|row| {
                row.iter()
                    .map(|qs| qs.iter().map(|q| q.eval(&w).expect("doubled point")).collect())
                    .collect()
            })
            .collect();
        HeferValues {
            n: self.n,
            r: self.r,
            m: self.m,
            vals,
        }
    }
}

/// Pointwise quotient values b_{jkl}(zeta, z).
#[derive(Debug, Clone)]
pub struct HeferValues {
    pub n: usize,
    pub r: usize,
    pub m: usize,
    vals: Vec<Vec<Vec<C64>>>,
}

impl HeferValues {
    /// One application of delta_h: for each row j with alpha_j >= 1, contract
    /// e_k, wedge dz_l from the left, multiply by b_{jkl}/(2 pi i), lower
    /// alpha_j.
    pub fn delta_h(&self, a: &GradedElement) -> GradedElement {
        let dims = a.dims();
        debug_assert_eq!(dims.n, self.n);
        debug_assert_eq!(dims.m, self.m);
        debug_assert_eq!(dims.r, self.r);
        let inv_two_pi_i = Complex64::new(1.0, 0.0) / Complex64::new(0.0, 2.0 * PI);
        let mut out = GradedElement::zero(dims);
        for (b, coeff) in a.terms() {
            for j in 0..self.r {
                if b.alpha_get(j) == 0 {
                    continue;
                }
                let mut ebits = b.e;
                while ebits != 0 {
                    let k = ebits.trailing_zeros() as usize;
                    ebits &= ebits - 1;
                    // antiderivation sign: e-generators sit first in a blade
                    let before_e = (b.e & ((1u32 << k) - 1)).count_ones();
                    let contraction_sign = if before_e % 2 == 0 { 1.0 } else { -1.0 };
                    let e_after = b.e & !(1u32 << k);
                    let e_count_after = e_after.count_ones();
                    for l in 0..self.n {
                        let bval = self.vals[j][k][l];
                        if bval == C64::new(0.0, 0.0) {
                            continue;
                        }
                        if b.dz & (1u32 << l) != 0 {
                            continue;
                        }
                        // wedging dz_l from the left crosses the remaining
                        // e-generators and the dz-generators below l
                        let crossings =
                            e_count_after + (b.dz & ((1u32 << l) - 1)).count_ones();
                        let wedge_sign = if crossings % 2 == 0 { 1.0 } else { -1.0 };
                        let mut nb = *b;
                        nb.e = e_after;
                        nb.dz |= 1u32 << l;
                        nb = lower_alpha(nb, j);
                        out.add_term(
                            nb,
                            coeff * bval * inv_two_pi_i * contraction_sign * wedge_sign,
                        );
                    }
                }
            }
        }
        out
    }

    /// The divided power (delta_h)_k = delta_h^k / k!.
    pub fn delta_h_power(&self, k: u32, a: &GradedElement) -> GradedElement {
        let mut acc = a.clone();
        let mut factorial = 1.0f64;
        for i in 1..=k {
            acc = self.delta_h(&acc);
            factorial *= i as f64;
            if acc.is_zero() {
                return acc;
            }
        }
        acc.scale(C64::new(1.0 / factorial, 0.0))
    }
}

fn lower_alpha(b: Blade, j: usize) -> Blade {
    let mut alpha: Vec<u32> = (0..8).map(|t| b.alpha_get(t)).collect();
    alpha[j] -= 1;
    let mut nb = b;
    nb = nb.with_alpha(&alpha);
    nb
}

/// Spec-shaped convenience wrapper around [`HeferValues::delta_h_power`].
pub fn delta_h_power(
    hd: &HeferData,
    k: u32,
    a: &GradedElement,
    zeta: &ComplexPoint,
    z: &ComplexPoint,
) -> GradedElement {
    hd.eval_at(zeta, z).delta_h_power(k, a)
}

/// The form h as a graded element: for each quotient, the wedge
/// `(1/2 pi i) b_{jkl} dz_l ^ e_k` with one unit of alpha in lane j. The
/// e-generator encodes the contraction slot (the algebra has no E* factor),
/// and the dz-before-e order makes `delta_eta(h)` come out with coefficient
/// exactly f_j^k(zeta) - f_j^k(z) on the blade (e_k, alpha = delta_j).
pub fn h_form(hd: &HeferData, zeta: &ComplexPoint, z: &ComplexPoint) -> GradedElement {
    let dims = Dims::new(hd.n, hd.m, hd.r);
    let vals = hd.eval_at(zeta, z);
    let inv_two_pi_i = Complex64::new(1.0, 0.0) / Complex64::new(0.0, 2.0 * PI);
    let mut out = GradedElement::zero(dims);
    for j in 0..hd.r {
        let mut alpha = vec![0u32; hd.r];
        alpha[j] = 1;
        let marker = GradedElement::sym_marker(dims, &alpha);
        for k in 0..hd.m {
            for l in 0..hd.n {
                let b = vals.vals[j][k][l];
                if b == C64::new(0.0, 0.0) {
                    continue;
                }
                let term = GradedElement::dz_gen(dims, l + 1, b * inv_two_pi_i)
                    .wedge(&GradedElement::e_gen(dims, k + 1, C64::new(1.0, 0.0)))
                    .expect("same dims")
                    .wedge(&marker)
                    .expect("same dims");
                out.add_assign(&term);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::PolyMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_point(rng: &mut ChaCha8Rng, n: usize) -> ComplexPoint {
        ComplexPoint(
            (0..n)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
    }

    fn two_by_three() -> PolyMatrix {
        let n = 2;
        let one = CPolynomial::one(n);
        let zero = CPolynomial::zero(n);
        let z1 = CPolynomial::var(n, 0);
        let z2 = CPolynomial::var(n, 1);
        PolyMatrix::new_full(n, vec![vec![one.clone(), zero.clone(), z1], vec![zero, one, z2]])
            .unwrap()
    }

    #[test]
    fn split_square() {
        // p = zeta^2 (n = 1): b_1 = zeta + z.
        let pm = PolyMatrix::koszul(1, vec![CPolynomial::monomial(1, vec![2], c(1.0, 0.0))]).unwrap();
        let hd = hefer_split(&pm);
        let expect = CPolynomial::var(2, 0).add(&CPolynomial::var(2, 1));
        assert_eq!(hd.quotient(0, 0, 0), &expect);
        assert_eq!(hd.identity_defect(&pm), 0.0);
    }

    #[test]
    fn split_product_order() {
        // p = zeta1 zeta2: b_1 = zeta2, b_2 = z1 under the fixed order.
        let n = 2;
        let p = CPolynomial::var(n, 0).mul(&CPolynomial::var(n, 1));
        let pm = PolyMatrix::koszul(n, vec![p]).unwrap();
        let hd = hefer_split(&pm);
        assert_eq!(hd.quotient(0, 0, 0), &CPolynomial::var(4, 1)); // zeta2
        assert_eq!(hd.quotient(0, 0, 1), &CPolynomial::var(4, 2)); // z1
        assert_eq!(hd.identity_defect(&pm), 0.0);
    }

    #[test]
    fn split_constant_is_zero() {
        let pm = PolyMatrix::koszul(2, vec![CPolynomial::constant(2, c(3.0, -1.0))]).unwrap();
        let hd = hefer_split(&pm);
        assert!(hd.quotient(0, 0, 0).is_zero());
        assert!(hd.quotient(0, 0, 1).is_zero());
    }

    #[test]
    fn polynomial_identity_exact_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let n = rng.gen_range(1..=3);
            let r = rng.gen_range(1..=2usize);
            let m = rng.gen_range(r..=3);
            let rows: Vec<Vec<CPolynomial>> = (0..r)
                .map(|_| {
                    (0..m)
                        .map(|_| {
                            let mut p = CPolynomial::zero(n);
                            for _ in 0..4 {
                                let exp: Vec<u32> =
                                    (0..n).map(|_| rng.gen_range(0..=2)).collect();
                                p.add_term(
                                    exp,
                                    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                                );
                            }
                            p
                        })
                        .collect()
                })
                .collect();
            let pm = PolyMatrix::new_full(n, rows).unwrap();
            let hd = hefer_split(&pm);
            assert!(hd.identity_defect(&pm) <= 1e-12);
        }
    }

    #[test]
    fn delta_eta_of_h_recovers_difference() {
        let pm = two_by_three();
        let hd = hefer_split(&pm);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..200 {
            let zeta = random_point(&mut rng, 2);
            let z = random_point(&mut rng, 2);
            let h = h_form(&hd, &zeta, &z);
            let dh = h.delta_eta(&zeta, &z).unwrap();
            let fz = pm.eval(&zeta);
            let fw = pm.eval(&z);
            for j in 0..pm.r {
                let mut alpha = vec![0u32; pm.r];
                alpha[j] = 1;
                for k in 0..pm.m {
                    let base = GradedElement::e_gen(pm.dims(), k + 1, c(1.0, 0.0))
                        .wedge(&GradedElement::sym_marker(pm.dims(), &alpha))
                        .unwrap();
                    let blade = *base.terms().next().unwrap().0;
                    let got = dh.coeff(&blade);
                    let expect = fz[j][k] - fw[j][k];
                    assert!(
                        (got - expect).norm() <= 1e-10 * (1.0 + expect.norm()),
                        "j={} k={} got {:?} expect {:?}",
                        j,
                        k,
                        got,
                        expect
                    );
                }
            }
        }
    }

    #[test]
    fn h_at_diagonal_is_eta_closed() {
        let pm = two_by_three();
        let hd = hefer_split(&pm);
        let zeta = ComplexPoint(vec![c(0.3, 0.2), c(-0.1, 0.5)]);
        let h = h_form(&hd, &zeta, &zeta);
        assert!(!h.is_zero());
        assert!(h.delta_eta(&zeta, &zeta).unwrap().sup_norm() <= 1e-14);
    }

    #[test]
    fn linear_single_variable_h() {
        // r = 1, f = (z1): h = (1/2 pi i) dz1 with the e1 slot;
        // delta_eta h = zeta1 - z1.
        let pm = PolyMatrix::koszul(1, vec![CPolynomial::var(1, 0)]).unwrap();
        let hd = hefer_split(&pm);
        let zeta = ComplexPoint(vec![c(0.7, -0.2)]);
        let z = ComplexPoint(vec![c(0.1, 0.3)]);
        let h = h_form(&hd, &zeta, &z);
        let dh = h.delta_eta(&zeta, &z).unwrap();
        let expect = GradedElement::e_gen(pm.dims(), 1, zeta.0[0] - z.0[0])
            .wedge(&GradedElement::sym_marker(pm.dims(), &[1]))
            .unwrap();
        assert!(dh.max_diff(&expect) <= 1e-12);
    }

    #[test]
    fn delta_h_power_zero_is_identity() {
        let pm = two_by_three();
        let hd = hefer_split(&pm);
        let zeta = ComplexPoint(vec![c(0.2, 0.1), c(0.3, -0.4)]);
        let z = ComplexPoint(vec![c(0.0, 0.0), c(0.1, 0.1)]);
        let a = GradedElement::e_gen(pm.dims(), 1, c(1.5, -0.5))
            .wedge(&GradedElement::sym_marker(pm.dims(), &[2, 0]))
            .unwrap();
        let out = delta_h_power(&hd, 0, &a, &zeta, &z);
        assert_eq!(out, a);
    }

    #[test]
    fn hh_relation_at_random_points() {
        // delta_eta (delta_h)_k = (delta_h)_{k-1} delta_f - delta_{f(z)} (delta_h)_{k-1}
        // on dz-free arguments (where it is used); in general the left side is
        // the commutator with delta_eta.
        let pm = two_by_three();
        let hd = hefer_split(&pm);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let dims = pm.dims();
        for trial in 0..500 {
            let zeta = random_point(&mut rng, 2);
            let z = random_point(&mut rng, 2);
            let hv = hd.eval_at(&zeta, &z);
            let fz = pm.eval(&zeta);
            let fw = pm.eval(&z);
            // random dz-free argument with alpha headroom
            let mut a = GradedElement::zero(dims);
            for _ in 0..4 {
                let mut b = crate::graded::Blade::scalar();
                b.e = rng.gen_range(0..(1u32 << dims.m));
                b.dzbar = rng.gen_range(0..(1u32 << dims.n));
                let alpha: Vec<u32> = (0..dims.r).map(|_| rng.gen_range(0..3)).collect();
                b = b.with_alpha(&alpha);
                a.add_term(b, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            }
            let k = 1 + (trial % 3) as u32;
            let lhs = hv.delta_h_power(k, &a).delta_eta(&zeta, &z).unwrap();
            let prev = |x: &GradedElement| hv.delta_h_power(k - 1, x);
            let rhs = prev(&a.delta_f(&fz).unwrap()).sub(&prev(&a).delta_f(&fw).unwrap());
            let scale = 1.0 + lhs.sup_norm().max(rhs.sup_norm());
            assert!(lhs.max_diff(&rhs) <= 1e-10 * scale, "k = {}", k);
        }
    }

    #[test]
    fn block_mode_cross_annihilation() {
        // Block-diagonal rows give structurally zero quotients outside the
        // own block, so delta_{h_j} kills foreign-block generators exactly.
        let n = 2;
        let pm = PolyMatrix::product(
            n,
            vec![
                vec![CPolynomial::var(n, 0), CPolynomial::var(n, 1)],
                vec![CPolynomial::monomial(n, vec![1, 1], c(1.0, 0.0))],
            ],
        )
        .unwrap();
        let hd = hefer_split(&pm);
        // Row 1 has zero quotients in column 3 (foreign block), row 2 in 1, 2.
        for l in 0..n {
            assert!(hd.quotient(0, 2, l).is_zero());
            assert!(hd.quotient(1, 0, l).is_zero());
            assert!(hd.quotient(1, 1, l).is_zero());
        }
        // An element supported in block 2 with alpha only in lane 1 is killed.
        let dims = pm.dims();
        let zeta = ComplexPoint(vec![c(0.3, 0.0), c(0.2, 0.1)]);
        let z = ComplexPoint(vec![c(0.0, 0.1), c(0.1, 0.0)]);
        let a = GradedElement::e_gen(dims, 3, c(1.0, 0.0))
            .wedge(&GradedElement::sym_marker(dims, &[1, 0]))
            .unwrap();
        let out = hd.eval_at(&zeta, &z).delta_h(&a);
        assert!(out.is_zero());
    }
}
