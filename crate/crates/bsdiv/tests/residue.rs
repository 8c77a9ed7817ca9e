//! Residue pairings in one variable against their classical oracles.

use bsdiv::frames::PolyMatrix;
use bsdiv::graded::GradedElement;
use bsdiv::poly::{C64, CPolynomial, ComplexPoint};
use bsdiv::quadrature::{self, QuadratureConfig, RegularizationSchedule, Scheme};
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn cfg() -> QuadratureConfig {
    QuadratureConfig {
        scheme: Scheme::GaussPolar,
        nodes: 128,
        seed: 1,
        near_z_refinement: true,
    }
}

fn bump_dz(f: &PolyMatrix, scale: f64) -> impl Fn(&ComplexPoint) -> GradedElement + Sync {
    let dims = f.dims();
    move |zeta: &ComplexPoint| {
        GradedElement::scalar(dims, c(quadrature::bump_test_factor(scale, zeta), 0.0))
            .wedge(&GradedElement::dz_gen(dims, 1, c(1.0, 0.0)))
            .unwrap()
    }
}

/// <dbar(1/zeta), bump dzeta> = 2 pi i bump(0).
#[test]
fn cauchy_pompeiu_value() {
    let n = 1;
    let f = PolyMatrix::koszul(n, vec![CPolynomial::var(n, 0)]).unwrap();
    let testform = bump_dz(&f, 0.9);
    let out = quadrature::residue_pair(
        &f,
        1,
        &CPolynomial::one(n),
        &testform,
        &RegularizationSchedule::default(),
        &cfg(),
    )
    .unwrap();
    let expect = c(0.0, 2.0 * PI);
    assert!(
        (out.value - expect).norm() <= 1e-2 * expect.norm(),
        "value {:?}",
        out.value
    );
    // the lambda table must be monotone toward the limit
    assert!(out.lambda_table.len() == 4);
}

/// phi = z^2 annihilates the residue of f = z^2 (size condition with mu = 1).
#[test]
fn annihilation_by_the_size_condition() {
    let n = 1;
    let z2 = CPolynomial::monomial(n, vec![2], c(1.0, 0.0));
    let f = PolyMatrix::koszul(n, vec![z2.clone()]).unwrap();
    let testform = bump_dz(&f, 0.9);
    let out = quadrature::residue_pair(
        &f,
        1,
        &z2,
        &testform,
        &RegularizationSchedule::default(),
        &cfg(),
    )
    .unwrap();
    assert!(
        out.value.norm() <= 1e-3 * 2.0 * PI,
        "value {:?}",
        out.value
    );
}

/// phi = z against f = z^2 leaves the simple-pole part: the pairing recovers
/// 2 pi i bump(0) again (z * dbar(1/z^2) acts like dbar(1/z)).
#[test]
fn partial_annihilation_leaves_simple_pole() {
    let n = 1;
    let z2 = CPolynomial::monomial(n, vec![2], c(1.0, 0.0));
    let f = PolyMatrix::koszul(n, vec![z2]).unwrap();
    let testform = bump_dz(&f, 0.9);
    let out = quadrature::residue_pair(
        &f,
        1,
        &CPolynomial::var(n, 0),
        &testform,
        &RegularizationSchedule::default(),
        &cfg(),
    )
    .unwrap();
    let expect = c(0.0, 2.0 * PI);
    assert!(
        (out.value - expect).norm() <= 1e-2 * expect.norm(),
        "value {:?}",
        out.value
    );
}

/// Without the adaptive radial map the plain polar rule cannot resolve the
/// mass concentrating at the origin for small lambda; the extrapolation must
/// refuse rather than return a silently biased value. At tame exponents the
/// same plain scheme converges fine.
#[test]
fn plain_scheme_divergence_guard() {
    let n = 1;
    let f = PolyMatrix::koszul(n, vec![CPolynomial::var(n, 0)]).unwrap();
    let testform = bump_dz(&f, 0.9);
    let mut plain = cfg();
    plain.nodes = 512;
    plain.near_z_refinement = false;

    let strict = quadrature::residue_pair(
        &f,
        1,
        &CPolynomial::one(n),
        &testform,
        &RegularizationSchedule::default(),
        &plain,
    );
    assert!(matches!(
        strict,
        Err(quadrature::QuadratureError::ExtrapolationDiverged { .. })
    ));

    // exponents large enough for the unmapped nodes to resolve
    let tame = RegularizationSchedule {
        lambdas: vec![0.8, 0.65, 0.5, 0.4],
        order: 2,
        target_tol: 0.15,
    };
    let out = quadrature::residue_pair(&f, 1, &CPolynomial::one(n), &testform, &tame, &plain)
        .unwrap();
    let expect = c(0.0, 2.0 * PI);
    assert!(
        (out.value - expect).norm() <= 2e-1 * expect.norm(),
        "value {:?}",
        out.value
    );
}
