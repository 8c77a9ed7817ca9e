//! The built-in identity suite: every algebraic law the library relies on,
//! run over deterministic corpora with explicit tolerances and reported in a
//! machine-readable form. The suite doubles as the sign-convention validator;
//! `Mutation::DeltaFSignFlip` switches the determinant contraction to the
//! alternative sign rule so a harness can confirm the normalization check
//! really fails under the wrong convention.

use crate::division;
use crate::frames::{self, PolyMatrix};
use crate::graded::{Blade, DeltaFSignRule, Dims, GradedElement};
use crate::hefer;
use crate::kernel::{self, KernelConfig};
use crate::poly::{C64, CPolynomial, ComplexPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;

const ALGEBRA_CASES: usize = 1000;
const FRAME_MATRICES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    DeltaFSignFlip,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityResult {
    pub id: String,
    pub description: String,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub identities: Vec<IdentityResult>,
    pub all_pass: bool,
}

fn result(id: &str, description: &str, cases: usize, max_error: f64, tolerance: f64) -> IdentityResult {
    IdentityResult {
        id: id.to_string(),
        description: description.to_string(),
        cases,
        max_error,
        tolerance,
        pass: max_error <= tolerance,
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_element(rng: &mut ChaCha8Rng, d: Dims, nterms: usize, with_alpha: bool) -> GradedElement {
    let mut el = GradedElement::zero(d);
    for _ in 0..nterms {
        let mut b = Blade::scalar();
        b.e = rng.gen_range(0..(1u32 << d.m));
        b.dz = rng.gen_range(0..(1u32 << d.n));
        b.dzbar = rng.gen_range(0..(1u32 << d.n));
        if with_alpha {
            let alpha: Vec<u32> = (0..d.r).map(|_| rng.gen_range(0..3)).collect();
            b = b.with_alpha(&alpha);
        }
        b.det_q = rng.gen_bool(0.5);
        el.add_term(b, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    }
    el
}

fn random_homogeneous(rng: &mut ChaCha8Rng, d: Dims, odd: u32) -> GradedElement {
    loop {
        let mut el = GradedElement::zero(d);
        for _ in 0..3 {
            let mut b = Blade::scalar();
            loop {
                b.e = rng.gen_range(0..(1u32 << d.m));
                b.dz = rng.gen_range(0..(1u32 << d.n));
                b.dzbar = rng.gen_range(0..(1u32 << d.n));
                if b.odd_degree() % 2 == odd {
                    break;
                }
            }
            el.add_term(b, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        if !el.is_zero() {
            return el;
        }
    }
}

fn random_matrix_value(rng: &mut ChaCha8Rng, d: Dims) -> Vec<Vec<C64>> {
    (0..d.r)
        .map(|_| {
            (0..d.m)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect()
        })
        .collect()
}

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> (ComplexPoint, ComplexPoint) {
    let p = ComplexPoint(
        (0..n)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect(),
    );
    let q = ComplexPoint(
        (0..n)
            .map(|_| c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
            .collect(),
    );
    (p, q)
}

/// The 2 x 3 matrix with rows (1, 0, z1), (0, 1, z2).
fn two_by_three() -> PolyMatrix {
    let n = 2;
    let one = CPolynomial::one(n);
    let zero = CPolynomial::zero(n);
    let z1 = CPolynomial::var(n, 0);
    let z2 = CPolynomial::var(n, 1);
    PolyMatrix::new_full(n, vec![vec![one.clone(), zero.clone(), z1], vec![zero, one, z2]])
        .unwrap()
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize) -> CPolynomial {
    let mut p = CPolynomial::zero(n);
    for _ in 0..3 {
        let exp: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=2)).collect();
        p.add_term(exp, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    }
    if p.is_zero() {
        p.add_term(vec![0; n], c(1.0, 0.0));
    }
    p
}

/// Corpus of random polynomial matrices with admissible sample points.
fn frame_corpus(seed: u64) -> Vec<(PolyMatrix, Vec<ComplexPoint>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = Vec::new();
    // the worked 2 x 3 example first
    let pm = two_by_three();
    let pts = admissible_points(&pm, &mut rng, 5);
    corpus.push((pm, pts));
    while corpus.len() < FRAME_MATRICES + 1 {
        let n = rng.gen_range(1..=3usize);
        let r = rng.gen_range(1..=3usize).min(3);
        let m = rng.gen_range(r..=3usize);
        let rows: Vec<Vec<CPolynomial>> = (0..r).map(|_| (0..m).map(|_| random_poly(&mut rng, n)).collect()).collect();
        let pm = match PolyMatrix::new_full(n, rows) {
            Ok(pm) => pm,
            Err(_) => continue,
        };
        let pts = admissible_points(&pm, &mut rng, 5);
        if pts.len() < 3 {
            continue;
        }
        corpus.push((pm, pts));
    }
    corpus
}

fn admissible_points(pm: &PolyMatrix, rng: &mut ChaCha8Rng, want: usize) -> Vec<ComplexPoint> {
    let mut pts = Vec::new();
    for _ in 0..200 {
        if pts.len() >= want {
            break;
        }
        let p = ComplexPoint(
            (0..pm.n)
                .map(|_| c(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9)))
                .collect(),
        );
        if let Ok(fp) = frames::frame_at(pm, &p) {
            if fp.sigma_min > 1e-6 {
                pts.push(p);
            }
        }
    }
    pts
}

/// Wedge and contraction laws of the superalgebra.
pub fn algebra_checks(mutation: Option<Mutation>) -> Vec<IdentityResult> {
    let rule = rule_for(mutation);
    vec![
        check_wedge_antisymmetry(),
        check_wedge_associativity(),
        check_wedge_supercommutativity(),
        check_delta_f_squared(),
        check_delta_eta_antiderivation(),
        check_delta_eta_squared(),
        check_delta_big_f_oracle(rule),
        check_delta_big_f_eta_anticommute(),
    ]
}

/// Minimal-inverse laws on the worked 2 x 3 example plus random matrices.
pub fn frame_checks(mutation: Option<Mutation>) -> Vec<IdentityResult> {
    let rule = rule_for(mutation);
    let corpus = frame_corpus(0xB5D1);
    vec![
        check_gamma_normalization(&corpus, rule),
        check_gamma_chain(&corpus),
        check_sigma_duality(&corpus),
        check_dbar_sigma_fd(&corpus),
        check_snorre_symmetry(&corpus),
    ]
}

/// Structural vanishing of high u_k terms.
pub fn vanishing_checks() -> Vec<IdentityResult> {
    vec![check_snark_vanishing()]
}

/// Hefer decomposition laws.
pub fn hefer_checks() -> Vec<IdentityResult> {
    vec![
        check_hefer_polynomial_identity(),
        check_hefer_eta_recovery(),
        check_hh_relation(),
        check_hefer_block_annihilation(),
    ]
}

/// Reproductions of the worked closed-form values.
pub fn example_checks() -> Vec<IdentityResult> {
    vec![check_two_by_three_sigma(), check_koszul_remark()]
}

/// Cutoff and weight-form laws.
pub fn kernel_checks() -> Vec<IdentityResult> {
    vec![
        check_chi_derivative(),
        check_g_support(),
        check_g_nabla_pattern(),
    ]
}

fn rule_for(mutation: Option<Mutation>) -> DeltaFSignRule {
    match mutation {
        None => DeltaFSignRule::FormDegree,
        Some(Mutation::DeltaFSignFlip) => DeltaFSignRule::TotalDegreePlusOne,
    }
}

pub fn run_suite(mutation: Option<Mutation>) -> SuiteReport {
    let mut identities = Vec::new();
    identities.extend(algebra_checks(mutation));
    identities.extend(frame_checks(mutation));
    identities.extend(vanishing_checks());
    identities.extend(hefer_checks());
    identities.extend(example_checks());
    identities.extend(kernel_checks());
    let all_pass = identities.iter().all(|i| i.pass);
    SuiteReport {
        identities,
        all_pass,
    }
}

fn check_wedge_antisymmetry() -> IdentityResult {
    let d = Dims::new(2, 3, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let mut worst = 0.0f64;
    for _ in 0..ALGEBRA_CASES {
        let i = rng.gen_range(1..=d.m);
        let j = rng.gen_range(1..=d.m);
        let a = GradedElement::e_gen(d, i, c(rng.gen_range(-1.0..1.0), 0.0));
        let b = GradedElement::e_gen(d, j, c(rng.gen_range(-1.0..1.0), 0.0));
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        worst = worst.max(ab.add(&ba).sup_norm());
        let w = GradedElement::dzbar_gen(d, rng.gen_range(1..=d.n), c(1.0, 0.0));
        worst = worst.max(w.wedge(&w).unwrap().sup_norm());
    }
    result(
        "wedge-antisymmetry",
        "odd generators anticommute; repeated generators vanish",
        ALGEBRA_CASES,
        worst,
        1e-12,
    )
}

fn check_wedge_associativity() -> IdentityResult {
    let d = Dims::new(2, 3, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let mut worst = 0.0f64;
    for _ in 0..ALGEBRA_CASES {
        let a = random_element(&mut rng, d, 4, true);
        let b = random_element(&mut rng, d, 4, true);
        let e = random_element(&mut rng, d, 4, true);
        let l = a.wedge(&b).unwrap().wedge(&e).unwrap();
        let r = a.wedge(&b.wedge(&e).unwrap()).unwrap();
        let scale = 1.0 + l.sup_norm().max(r.sup_norm());
        worst = worst.max(l.max_diff(&r) / scale);
    }
    result(
        "wedge-associativity",
        "(a ^ b) ^ c = a ^ (b ^ c) on random elements",
        ALGEBRA_CASES,
        worst,
        1e-12,
    )
}

fn check_wedge_supercommutativity() -> IdentityResult {
    let d = Dims::new(2, 3, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    let mut worst = 0.0f64;
    for _ in 0..ALGEBRA_CASES {
        let pa = rng.gen_range(0..2u32);
        let pb = rng.gen_range(0..2u32);
        let a = random_homogeneous(&mut rng, d, pa);
        let b = random_homogeneous(&mut rng, d, pb);
        let sign = if pa * pb % 2 == 0 { 1.0 } else { -1.0 };
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap().scale(c(sign, 0.0));
        let scale = 1.0 + ab.sup_norm();
        worst = worst.max(ab.max_diff(&ba) / scale);
    }
    result(
        "wedge-supercommutativity",
        "a ^ b = (-1)^{|a||b|} b ^ a for homogeneous elements",
        ALGEBRA_CASES,
        worst,
        1e-12,
    )
}

fn check_delta_f_squared() -> IdentityResult {
    let d = Dims::new(2, 3, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    let mut worst = 0.0f64;
    for _ in 0..ALGEBRA_CASES {
        let m = random_matrix_value(&mut rng, d);
        let a = random_element(&mut rng, d, 6, true);
        let dd = a.delta_f(&m).unwrap().delta_f(&m).unwrap();
        worst = worst.max(dd.sup_norm() / (1.0 + a.sup_norm()));
    }
    result(
        "delta-f-squared",
        "the row contraction is a differential: delta_f(delta_f(a)) = 0",
        ALGEBRA_CASES,
        worst,
        1e-12,
    )
}

fn check_delta_eta_antiderivation() -> IdentityResult {
    let d = Dims::new(2, 3, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let mut worst = 0.0f64;
    for _ in 0..ALGEBRA_CASES {
        let (zeta, z) = random_points(&mut rng, d.n);
        let pa = rng.gen_range(0..2u32);
        let a = random_homogeneous(&mut rng, d, pa);
        let b = random_element(&mut rng, d, 4, true);
        let sign = if pa % 2 == 0 { 1.0 } else { -1.0 };
        let lhs = a.wedge(&b).unwrap().delta_eta(&zeta, &z).unwrap();
        let rhs = a
            .delta_eta(&zeta, &z)
            .unwrap()
            .wedge(&b)
            .unwrap()
            .add(&a.wedge(&b.delta_eta(&zeta, &z).unwrap()).unwrap().scale(c(sign, 0.0)));
        let scale = 1.0 + lhs.sup_norm().max(rhs.sup_norm());
        worst = worst.max(lhs.max_diff(&rhs) / scale);
    }
    result(
        "delta-eta-antiderivation",
        "delta_eta(a ^ b) = delta_eta(a) ^ b + (-1)^{|a|} a ^ delta_eta(b)",
        ALGEBRA_CASES,
        worst,
        1e-12,
    )
}

fn check_delta_eta_squared() -> IdentityResult {
    let d = Dims::new(2, 3, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(1006);
    let mut worst = 0.0f64;
    for _ in 0..ALGEBRA_CASES {
        let (zeta, z) = random_points(&mut rng, d.n);
        let a = random_element(&mut rng, d, 6, true);
        let dd = a
            .delta_eta(&zeta, &z)
            .unwrap()
            .delta_eta(&zeta, &z)
            .unwrap();
        worst = worst.max(dd.sup_norm() / (1.0 + a.sup_norm()));
    }
    result(
        "delta-eta-squared",
        "the eta contraction squares to zero",
        ALGEBRA_CASES,
        worst,
        1e-12,
    )
}

/// Independent oracle for the determinant contraction: model the det factor
/// as an explicit ascending wedge of r markers, iterate the extended row
/// contraction r times, divide by r!, then apply the sign rule.
fn iterated_det_contraction(
    blade: Blade,
    coeff: C64,
    rows: &[Vec<C64>],
    rule: DeltaFSignRule,
) -> GradedElement {
    let r = rows.len();
    let full_eps = (1u32 << r) - 1;
    let dims = Dims::new(2, 3, r);
    let mut state: Vec<(Blade, u32, C64)> = vec![(blade, full_eps, coeff)];
    for _ in 0..r {
        let mut next = Vec::new();
        for &(b, eps, cf) in &state {
            for j in 0..r {
                if eps & (1u32 << j) == 0 {
                    continue;
                }
                let below = (eps & ((1u32 << j) - 1)).count_ones();
                let eps_sign = if below % 2 == 0 { 1.0 } else { -1.0 };
                let mut bits = b.e;
                while bits != 0 {
                    let k = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let before = (b.e & ((1u32 << k) - 1)).count_ones();
                    let sign = if before % 2 == 0 { 1.0 } else { -1.0 };
                    let mut nb = b;
                    nb.e &= !(1u32 << k);
                    next.push((nb, eps & !(1u32 << j), cf * rows[j][k] * sign * eps_sign));
                }
            }
        }
        state = next;
    }
    let factorial: f64 = (1..=r).map(|x| x as f64).product();
    let rule_sign = {
        let fd = blade.form_degree();
        let deg = blade.odd_degree();
        let exp = match rule {
            DeltaFSignRule::FormDegree => (r as u32 + 1) * fd,
            DeltaFSignRule::TotalDegreePlusOne => (r as u32 + 1) * (deg + 1),
        };
        if exp % 2 == 0 { 1.0 } else { -1.0 }
    };
    let mut out = GradedElement::zero(dims);
    for (b, eps, cf) in state {
        if eps != 0 {
            continue;
        }
        let mut nb = b;
        nb.det_q = false;
        out.add_term(nb, cf * rule_sign / factorial);
    }
    out
}

fn check_delta_big_f_oracle(rule: DeltaFSignRule) -> IdentityResult {
    // Exhaustive over all det-flagged blades with at most 6 odd generators
    // in the (n, m, r) = (2, 3, 2) fibre, random matrix values.
    let d = Dims::new(2, 3, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(1007);
    let mut worst = 0.0f64;
    let mut cases = 0usize;
    for _ in 0..20 {
        let m = random_matrix_value(&mut rng, d);
        // minors in standard row order
        let mut minors = BTreeMap::new();
        for mask in division::increasing_subsets(d.m, d.r) {
            let cols: Vec<usize> = (0..d.m).filter(|k| mask & (1u32 << k) != 0).collect();
            minors.insert(mask, m[0][cols[0]] * m[1][cols[1]] - m[0][cols[1]] * m[1][cols[0]]);
        }
        for e in 0..(1u32 << d.m) {
            for dz in 0..(1u32 << d.n) {
                for dzbar in 0..(1u32 << d.n) {
                    let mut b = Blade::scalar();
                    b.e = e;
                    b.dz = dz;
                    b.dzbar = dzbar;
                    b.det_q = true;
                    if b.odd_degree() > 6 {
                        continue;
                    }
                    cases += 1;
                    let mut el = GradedElement::zero(d);
                    el.add_term(b, c(1.0, 0.0));
                    let got = el.delta_big_f_with_rule(&minors, rule).unwrap();
                    // The oracle always applies the honest iterated
                    // contraction followed by the FormDegree sign, which is
                    // the rule the library commits to.
                    let expect =
                        iterated_det_contraction(b, c(1.0, 0.0), &m, DeltaFSignRule::FormDegree);
                    worst = worst.max(got.max_diff(&expect));
                }
            }
        }
    }
    result(
        "delta-F-iterated-oracle",
        "determinant contraction equals the signed iterated row contraction / r!",
        cases,
        worst,
        1e-12,
    )
}

fn check_delta_big_f_eta_anticommute() -> IdentityResult {
    let d = Dims::new(2, 3, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(1008);
    let mut worst = 0.0f64;
    for _ in 0..ALGEBRA_CASES {
        let (zeta, z) = random_points(&mut rng, d.n);
        let m = random_matrix_value(&mut rng, d);
        let mut minors = BTreeMap::new();
        for mask in division::increasing_subsets(d.m, d.r) {
            let cols: Vec<usize> = (0..d.m).filter(|k| mask & (1u32 << k) != 0).collect();
            minors.insert(mask, m[0][cols[0]] * m[1][cols[1]] - m[0][cols[1]] * m[1][cols[0]]);
        }
        let parity = rng.gen_range(0..2);
        let a = random_homogeneous(&mut rng, d, parity)
            .wedge(&GradedElement::det_marker(d))
            .unwrap();
        let lhs = a.delta_eta(&zeta, &z).unwrap().delta_big_f(&minors).unwrap();
        let rhs = a.delta_big_f(&minors).unwrap().delta_eta(&zeta, &z).unwrap();
        worst = worst.max(lhs.add(&rhs).sup_norm() / (1.0 + a.sup_norm()));
    }
    result(
        "delta-F-eta-anticommute",
        "the extended determinant contraction anticommutes with the eta contraction",
        ALGEBRA_CASES,
        worst,
        1e-12,
    )
}

fn check_gamma_normalization(
    corpus: &[(PolyMatrix, Vec<ComplexPoint>)],
    rule: DeltaFSignRule,
) -> IdentityResult {
    let mut worst = 0.0f64;
    let mut cases = 0usize;
    for (pm, pts) in corpus {
        let minors_p = division::determinant_section(pm).unwrap();
        for zeta in pts {
            let fp = match frames::frame_at(pm, zeta) {
                Ok(fp) => fp,
                Err(_) => continue,
            };
            cases += 1;
            let u1 = frames::u_form(&fp, 1);
            let minors: BTreeMap<u32, C64> = minors_p
                .iter()
                .map(|(mask, p)| (*mask, p.eval(zeta).unwrap()))
                .collect();
            let out = u1.delta_big_f_with_rule(&minors, rule).unwrap();
            worst = worst.max(out.max_diff(&GradedElement::one(pm.dims())));
        }
    }
    result(
        "gamma-normalization",
        "the determinant contraction of u_1 is the constant 1",
        cases,
        worst,
        1e-10,
    )
}

fn check_gamma_chain(corpus: &[(PolyMatrix, Vec<ComplexPoint>)]) -> IdentityResult {
    let mut worst = 0.0f64;
    let mut cases = 0usize;
    for (pm, pts) in corpus {
        let k_top = (pm.m - pm.r + 1) as u32;
        for zeta in pts {
            let fp = match frames::frame_at(pm, zeta) {
                Ok(fp) => fp,
                Err(_) => continue,
            };
            for k in 1..=k_top.min(2) {
                cases += 1;
                let lhs = frames::u_form(&fp, k + 1).delta_f(&fp.fval).unwrap();
                let rhs = frames::dbar_u_form(&fp, k);
                let scale = 1.0 + lhs.sup_norm().max(rhs.sup_norm());
                worst = worst.max(lhs.max_diff(&rhs) / scale);
            }
        }
    }
    result(
        "gamma-chain",
        "delta_f u_{k+1} equals the closed-form dbar u_k",
        cases,
        worst,
        1e-9,
    )
}

fn check_sigma_duality(corpus: &[(PolyMatrix, Vec<ComplexPoint>)]) -> IdentityResult {
    let mut worst = 0.0f64;
    let mut cases = 0usize;
    for (pm, pts) in corpus {
        for zeta in pts {
            let fp = match frames::frame_at(pm, zeta) {
                Ok(fp) => fp,
                Err(_) => continue,
            };
            cases += 1;
            for a in 0..pm.r {
                for b in 0..pm.r {
                    let mut s = c(0.0, 0.0);
                    for k in 0..pm.m {
                        s += fp.fval[a][k] * fp.sigma[k][b];
                    }
                    let expect = if a == b { 1.0 } else { 0.0 };
                    worst = worst.max((s - c(expect, 0.0)).norm());
                }
            }
        }
    }
    result(
        "sigma-duality",
        "f(zeta) . sigma(zeta) is the r x r identity at admissible points",
        cases,
        worst,
        1e-10,
    )
}

fn check_dbar_sigma_fd(corpus: &[(PolyMatrix, Vec<ComplexPoint>)]) -> IdentityResult {
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut cases = 0usize;
    for (pm, pts) in corpus.iter() {
        for zeta in pts.iter().take(2) {
            let fp = match frames::frame_at(pm, zeta) {
                Ok(fp) => fp,
                Err(_) => continue,
            };
            // keep away from the admissibility edge so the FD stencil stays
            // admissible too
            if fp.sigma_min < 1e-4 {
                continue;
            }
            cases += 1;
            for l in 0..pm.n {
                let sample = |pt: &ComplexPoint| frames::frame_at(pm, pt).map(|f| f.sigma);
                let mut zx_p = zeta.clone();
                let mut zx_m = zeta.clone();
                zx_p.0[l] += c(h, 0.0);
                zx_m.0[l] -= c(h, 0.0);
                let mut zy_p = zeta.clone();
                let mut zy_m = zeta.clone();
                zy_p.0[l] += c(0.0, h);
                zy_m.0[l] -= c(0.0, h);
                let (sx_p, sx_m, sy_p, sy_m) = match (
                    sample(&zx_p),
                    sample(&zx_m),
                    sample(&zy_p),
                    sample(&zy_m),
                ) {
                    (Ok(a), Ok(b), Ok(cc), Ok(dd)) => (a, b, cc, dd),
                    _ => continue,
                };
                for i in 0..pm.m {
                    for j in 0..pm.r {
                        let ddx = (sx_p[i][j] - sx_m[i][j]) / c(2.0 * h, 0.0);
                        let ddy = (sy_p[i][j] - sy_m[i][j]) / c(2.0 * h, 0.0);
                        let fd = (ddx + c(0.0, 1.0) * ddy) * c(0.5, 0.0);
                        let cf = fp.dbar_sigma[l][i][j];
                        worst = worst.max((fd - cf).norm() / (1.0 + cf.norm()));
                    }
                }
            }
        }
    }
    result(
        "dbar-sigma-finite-differences",
        "the closed-form dbar(sigma) matches central finite differences",
        cases,
        worst,
        1e-6,
    )
}

fn check_snorre_symmetry(corpus: &[(PolyMatrix, Vec<ComplexPoint>)]) -> IdentityResult {
    let mut worst = 0.0f64;
    let mut cases = 0usize;
    for (pm, pts) in corpus {
        if pm.r < 2 {
            continue;
        }
        let dims = pm.dims();
        for zeta in pts.iter().take(2) {
            let fp = match frames::frame_at(pm, zeta) {
                Ok(fp) => fp,
                Err(_) => continue,
            };
            cases += 1;
            let k = 2u32;
            let standard = frames::u_form(&fp, k);
            // assemble the alpha-powers in reversed block order
            let mut prefix = GradedElement::one(dims);
            for j in 0..dims.r {
                prefix = prefix.wedge(&fp.sigma_element(j)).unwrap();
            }
            let mut reversed = GradedElement::zero(dims);
            for alpha in frames::compositions(k - 1, dims.r) {
                let mut term = prefix.clone();
                for j in (0..dims.r).rev() {
                    for _ in 0..alpha[j] {
                        term = term.wedge(&fp.dbar_sigma_element(j)).unwrap();
                    }
                }
                let marker = GradedElement::sym_marker(dims, &alpha)
                    .wedge(&GradedElement::det_marker(dims))
                    .unwrap();
                reversed.add_assign(&term.wedge(&marker).unwrap());
            }
            let scale = 1.0 + standard.sup_norm();
            worst = worst.max(standard.max_diff(&reversed) / scale);
        }
    }
    result(
        "snorre-symmetry",
        "the alpha-indexed power expansion is independent of the factor order",
        cases,
        worst,
        1e-12,
    )
}

fn check_snark_vanishing() -> IdentityResult {
    let n = 2;
    let mut worst = 0.0f64;
    // blocks of size (1,1): u_2 is structurally empty
    let pm = PolyMatrix::product(
        n,
        vec![vec![CPolynomial::var(n, 0)], vec![CPolynomial::var(n, 1)]],
    )
    .unwrap();
    let zeta = ComplexPoint(vec![c(0.5, 0.1), c(0.4, -0.2)]);
    let fp = frames::frame_at(&pm, &zeta).unwrap();
    if !frames::u_form(&fp, 2).is_zero() {
        worst = worst.max(1.0);
    }
    // duplicated blocks: u_k = 0 for k - 1 > m - 1 up to roundoff cancellation
    let tuple = vec![CPolynomial::var(n, 0), CPolynomial::var(n, 1)];
    let pm2 = PolyMatrix::power(n, tuple, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1009);
    let pts = admissible_points(&pm2, &mut rng, 10);
    for zeta in &pts {
        let fp = frames::frame_at(&pm2, zeta).unwrap();
        let u3 = frames::u_form(&fp, 3);
        worst = worst.max(u3.sup_norm() / (1.0 + fp.sigma_min.recip()));
    }
    result(
        "snark-structural-vanishing",
        "block degree bounds and duplicated-block linear dependence kill high u_k",
        1 + pts.len(),
        worst,
        1e-12,
    )
}

fn check_hefer_polynomial_identity() -> IdentityResult {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for _ in 0..20 {
        let n = rng.gen_range(1..=3usize);
        let r = rng.gen_range(1..=2usize);
        let m = rng.gen_range(r..=3usize);
        let rows: Vec<Vec<CPolynomial>> = (0..r).map(|_| (0..m).map(|_| random_poly(&mut rng, n)).collect()).collect();
        let pm = PolyMatrix::new_full(n, rows).unwrap();
        let hd = hefer::hefer_split(&pm);
        cases += 1;
        worst = worst.max(hd.identity_defect(&pm));
    }
    result(
        "hefer-polynomial-identity",
        "f(zeta) - f(z) = sum_l (zeta_l - z_l) b_l exactly on the term maps",
        cases,
        worst,
        1e-12,
    )
}

fn check_hefer_eta_recovery() -> IdentityResult {
    let pm = two_by_three();
    let hd = hefer::hefer_split(&pm);
    let mut rng = ChaCha8Rng::seed_from_u64(1011);
    let mut worst = 0.0f64;
    for _ in 0..ALGEBRA_CASES {
        let (zeta, z) = random_points(&mut rng, pm.n);
        let h = hefer::h_form(&hd, &zeta, &z);
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
                worst = worst.max((got - expect).norm() / (1.0 + expect.norm()));
            }
        }
    }
    result(
        "hefer-eta-recovery",
        "eta contraction of h reproduces the matrix difference f(zeta) - f(z)",
        ALGEBRA_CASES,
        worst,
        1e-10,
    )
}

fn check_hh_relation() -> IdentityResult {
    let pm = two_by_three();
    let hd = hefer::hefer_split(&pm);
    let dims = pm.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(1012);
    let mut worst = 0.0f64;
    for trial in 0..ALGEBRA_CASES {
        let (zeta, z) = random_points(&mut rng, pm.n);
        let hv = hd.eval_at(&zeta, &z);
        let fz = pm.eval(&zeta);
        let fw = pm.eval(&z);
        let mut a = GradedElement::zero(dims);
        for _ in 0..3 {
            let mut b = Blade::scalar();
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
        worst = worst.max(lhs.max_diff(&rhs) / scale);
    }
    result(
        "hh-relation",
        "eta of the k-th Hefer power telescopes through the row contraction",
        ALGEBRA_CASES,
        worst,
        1e-10,
    )
}

fn check_hefer_block_annihilation() -> IdentityResult {
    let n = 2;
    let pm = PolyMatrix::product(
        n,
        vec![
            vec![CPolynomial::var(n, 0), CPolynomial::var(n, 1)],
            vec![CPolynomial::monomial(n, vec![1, 1], c(1.0, 0.0))],
        ],
    )
    .unwrap();
    let hd = hefer::hefer_split(&pm);
    let mut worst = 0.0f64;
    for l in 0..n {
        if !hd.quotient(0, 2, l).is_zero() {
            worst = 1.0;
        }
        if !hd.quotient(1, 0, l).is_zero() || !hd.quotient(1, 1, l).is_zero() {
            worst = 1.0;
        }
    }
    let dims = pm.dims();
    let zeta = ComplexPoint(vec![c(0.3, 0.0), c(0.2, 0.1)]);
    let z = ComplexPoint(vec![c(0.0, 0.1), c(0.1, 0.0)]);
    let a = GradedElement::e_gen(dims, 3, c(1.0, 0.0))
        .wedge(&GradedElement::sym_marker(dims, &[1, 0]))
        .unwrap();
    worst = worst.max(hd.eval_at(&zeta, &z).delta_h(&a).sup_norm());
    result(
        "hefer-block-annihilation",
        "block-diagonal Hefer data vanishes identically across foreign blocks",
        1,
        worst,
        0.0,
    )
}

fn check_two_by_three_sigma() -> IdentityResult {
    let pm = two_by_three();
    let fp = frames::frame_at(&pm, &ComplexPoint(vec![c(1.0, 0.0), c(1.0, 0.0)])).unwrap();
    let u1 = frames::u_form(&fp, 1);
    let blade_coeff = |mask: u32| {
        u1.terms()
            .find(|(b, _)| b.e == mask && b.det_q)
            .map(|(_, v)| *v)
            .unwrap_or(c(0.0, 0.0))
    };
    // components conj(F_I)/|F|^2 with standard row-ordered minors (1, z2, -z1)
    let mut worst = (blade_coeff(0b011) - c(1.0 / 3.0, 0.0)).norm();
    worst = worst.max((blade_coeff(0b101) - c(1.0 / 3.0, 0.0)).norm());
    worst = worst.max((blade_coeff(0b110) - c(-1.0 / 3.0, 0.0)).norm());
    result(
        "two-by-three-sigma",
        "sigma-wedge components at (1,1) equal conj(F_I)/|F|^2 = (1/3, 1/3, -1/3)",
        3,
        worst,
        1e-10,
    )
}

fn check_koszul_remark() -> IdentityResult {
    let n = 2;
    let tuple = vec![
        CPolynomial::one(n),
        CPolynomial::var(n, 1),
        CPolynomial::var(n, 0),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1013);
    let mut worst = 0.0f64;
    let cases = 100;
    for _ in 0..cases {
        let zeta = ComplexPoint(vec![
            c(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)),
            c(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)),
        ]);
        let u3 = frames::koszul_on_tuple(&tuple, &zeta, 3).unwrap();
        let got = u3
            .terms()
            .find(|(b, _)| b.e == 0b111 && b.dzbar == 0b11 && b.dz == 0)
            .map(|(_, v)| *v)
            .unwrap_or(c(0.0, 0.0));
        let f2 = 1.0 + zeta.0[0].norm_sqr() + zeta.0[1].norm_sqr();
        let expect = 2.0 / f2.powi(3);
        worst = worst.max((got - c(expect, 0.0)).norm() / expect);
    }
    result(
        "koszul-remark-coefficient",
        "for the tuple (1, z2, z1): sigma ^ (dbar sigma)^2 = 2/|F|^6 dzbar1 ^ dzbar2 ^ e-wedge",
        cases,
        worst,
        1e-10,
    )
}

fn check_chi_derivative() -> IdentityResult {
    let cfg = KernelConfig::default();
    let a = cfg.r0 * cfg.r0;
    let b = cfg.r1 * cfg.r1;
    let h = 1e-7;
    let mut worst = 0.0f64;
    for i in 0..100 {
        let t = a + (b - a) * (i as f64 + 0.5) / 100.0;
        let (_, der) = kernel::chi(&cfg, t);
        let fd = (kernel::chi(&cfg, t + h).0 - kernel::chi(&cfg, t - h).0) / (2.0 * h);
        worst = worst.max((fd - der).abs() / (1.0 + der.abs()));
    }
    result(
        "chi-derivative",
        "the analytic cutoff derivative matches central finite differences",
        100,
        worst,
        1e-6,
    )
}

fn check_g_support() -> IdentityResult {
    let cfg = KernelConfig::default();
    let dims = Dims::new(2, 1, 1);
    let z = ComplexPoint(vec![c(0.2, 0.1), c(0.0, 0.0)]);
    let mut rng = ChaCha8Rng::seed_from_u64(1014);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let dir: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let radius = rng.gen_range(0.05..1.5);
        let zeta = ComplexPoint(vec![
            c(dir[0] / norm * radius, dir[1] / norm * radius),
            c(dir[2] / norm * radius, dir[3] / norm * radius),
        ]);
        let g = kernel::g_form(&cfg, dims, &zeta, &z).unwrap();
        let (chi_val, _) = kernel::chi(&cfg, zeta.norm_sqr());
        let diff = g.sub(&GradedElement::scalar(dims, c(chi_val, 0.0)));
        let in_shell = radius >= cfg.r0 && radius <= cfg.r1;
        if !in_shell && !diff.is_zero() {
            worst = worst.max(diff.sup_norm());
        }
    }
    result(
        "g-support",
        "g - chi is supported exactly in the cutoff shell",
        200,
        worst,
        0.0,
    )
}

fn check_g_nabla_pattern() -> IdentityResult {
    let cfg = KernelConfig::default();
    let dims = Dims::new(2, 1, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(1015);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let radius = rng.gen_range(cfg.r0 + 0.01..cfg.r1 - 0.01);
        let dir: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let zeta = ComplexPoint(vec![
            c(dir[0] / norm * radius, dir[1] / norm * radius),
            c(dir[2] / norm * radius, dir[3] / norm * radius),
        ]);
        let z = ComplexPoint(vec![c(0.25, -0.1), c(0.1, 0.2)]);
        for k in 1..=2u32 {
            let g = kernel::g_form(&cfg, dims, &zeta, &z).unwrap();
            let lhs = g.bidegree_component(k, k).delta_eta(&zeta, &z).unwrap();
            let comp_at = |pt: &ComplexPoint| {
                kernel::g_form(&cfg, dims, pt, &z)
                    .unwrap()
                    .bidegree_component(k - 1, k - 1)
            };
            let mut rhs = GradedElement::zero(dims);
            for l in 0..dims.n {
                let mut zx_p = zeta.clone();
                let mut zx_m = zeta.clone();
                zx_p.0[l] += c(h, 0.0);
                zx_m.0[l] -= c(h, 0.0);
                let mut zy_p = zeta.clone();
                let mut zy_m = zeta.clone();
                zy_p.0[l] += c(0.0, h);
                zy_m.0[l] -= c(0.0, h);
                let ddx = comp_at(&zx_p)
                    .sub(&comp_at(&zx_m))
                    .scale(c(1.0 / (2.0 * h), 0.0));
                let ddy = comp_at(&zy_p)
                    .sub(&comp_at(&zy_m))
                    .scale(c(1.0 / (2.0 * h), 0.0));
                let dbar_l = ddx.add(&ddy.scale(c(0.0, 1.0))).scale(c(0.5, 0.0));
                rhs.add_assign(
                    &GradedElement::dzbar_gen(dims, l + 1, c(1.0, 0.0))
                        .wedge(&dbar_l)
                        .unwrap(),
                );
            }
            let scale = 1.0 + lhs.sup_norm().max(rhs.sup_norm());
            worst = worst.max(lhs.max_diff(&rhs) / scale);
        }
    }
    result(
        "g-nabla-pattern",
        "delta_eta g_{k,k} = dbar g_{k-1,k-1} on the cutoff shell",
        100,
        worst,
        1e-5,
    )
}
