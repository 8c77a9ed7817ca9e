//! End-to-end division runs at moderate node counts: the worked
//! one-variable cases with their exact oracles, membership failure, mode
//! consistency, convergence and holomorphy of the produced solution.

use bsdiv::division::{self, DivisionProblem, Verdict};
use bsdiv::poly::{C64, CPolynomial, ComplexPoint};
use bsdiv::quadrature::{QuadratureConfig, Scheme};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn gauss(nodes: usize) -> QuadratureConfig {
    QuadratureConfig {
        scheme: Scheme::GaussPolar,
        nodes,
        seed: 1,
        near_z_refinement: true,
    }
}

fn qmc(nodes: usize) -> QuadratureConfig {
    QuadratureConfig {
        scheme: Scheme::QmcHalton,
        nodes,
        seed: 7,
        near_z_refinement: true,
    }
}

/// f = z^2, phi = z^3: the exact solution of f psi = phi is psi = z.
#[test]
fn one_variable_power_division() {
    let n = 1;
    let f = CPolynomial::monomial(n, vec![2], c(1.0, 0.0));
    let phi = CPolynomial::monomial(n, vec![3], c(1.0, 0.0));
    let mut problem = DivisionProblem::koszul(n, vec![f], phi).unwrap();
    problem.quad = gauss(128);
    problem.residual_threshold = 1e-3;
    let report = division::solve_division(&problem).unwrap();
    assert_eq!(report.verdict, Verdict::Pass);
    assert!(report.max_absolute_residual <= 1e-3, "{}", report.max_absolute_residual);
    // psi matches the oracle z pointwise
    for sample in &report.psi {
        let z = c(sample.z[0][0], sample.z[0][1]);
        let psi = sample
            .components
            .iter()
            .find(|cp| cp.e == vec![1])
            .map(|cp| c(cp.value[0], cp.value[1]))
            .unwrap();
        assert!((psi - z).norm() <= 1e-3, "psi {:?} vs z {:?}", psi, z);
    }
}

/// Product mode f1 = f2 = (z), phi = z^2 = z * z.
#[test]
fn one_variable_product_division() {
    let n = 1;
    let z = CPolynomial::var(n, 0);
    let phi = z.mul(&z);
    let mut problem = DivisionProblem::product(n, vec![vec![z.clone()], vec![z]], phi).unwrap();
    problem.quad = gauss(128);
    problem.residual_threshold = 1e-3;
    let report = division::solve_division(&problem).unwrap();
    assert_eq!(report.verdict, Verdict::Pass);
    assert!(report.max_absolute_residual <= 1e-3);
}

/// Power mode with duplicated blocks gives the same answer as product mode
/// with identical blocks.
#[test]
fn power_and_product_modes_agree() {
    let n = 1;
    let z = CPolynomial::var(n, 0);
    let phi = z.mul(&z);
    let mut power = DivisionProblem::power(n, vec![z.clone()], 2, phi.clone()).unwrap();
    power.quad = gauss(96);
    let mut product = DivisionProblem::product(n, vec![vec![z.clone()], vec![z]], phi).unwrap();
    product.quad = gauss(96);
    let rp = division::solve_division(&power).unwrap();
    let rq = division::solve_division(&product).unwrap();
    for (a, b) in rp.psi.iter().zip(&rq.psi) {
        assert_eq!(a.components.len(), b.components.len());
        for (ca, cb) in a.components.iter().zip(&b.components) {
            let va = c(ca.value[0], ca.value[1]);
            let vb = c(cb.value[0], cb.value[1]);
            assert!((va - vb).norm() <= 1e-9 * (1.0 + vb.norm()));
        }
    }
}

/// 1 is not in (z1, z2): the residual stays order one and the size estimate
/// diverges, so the verdict is FAIL.
#[test]
fn non_member_fails() {
    let n = 2;
    let phi = CPolynomial::one(n);
    let mut problem = DivisionProblem::koszul(
        n,
        vec![CPolynomial::var(n, 0), CPolynomial::var(n, 1)],
        phi,
    )
    .unwrap();
    problem.quad = qmc(1 << 15);
    let report = division::solve_division(&problem).unwrap();
    assert_eq!(report.verdict, Verdict::Fail);
    assert!(report.max_relative_residual > 0.5);
    assert!(!report.size_condition.holds);
}

/// The trivial morphism degenerates the formula to the reproducing integral.
#[test]
fn reproduction_through_the_division_path() {
    let n = 1;
    let one = CPolynomial::one(n);
    for phi in [
        CPolynomial::one(n),
        CPolynomial::var(n, 0),
        CPolynomial::monomial(n, vec![2], c(0.5, -0.25)),
    ] {
        let mut problem = DivisionProblem::koszul(n, vec![one.clone()], phi).unwrap();
        problem.quad = gauss(96);
        let report = division::solve_division(&problem).unwrap();
        assert!(report.max_absolute_residual <= 1e-3, "{}", report.max_absolute_residual);
    }
}

/// Residuals decrease (within error bars) under node doubling.
#[test]
fn residual_convergence_curve() {
    let n = 1;
    let f = CPolynomial::monomial(n, vec![2], c(1.0, 0.0));
    let phi = CPolynomial::monomial(n, vec![3], c(1.0, 0.0));
    let mut problem = DivisionProblem::koszul(n, vec![f], phi).unwrap();
    problem.quad = gauss(128);
    problem.convergence_curve = true;
    let report = division::solve_division(&problem).unwrap();
    let curve = &report.diagnostics.convergence_curve;
    assert!(curve.len() >= 3);
    // final level at least as accurate as the coarsest, with slack
    let first = curve.first().unwrap().max_absolute_residual;
    let last = curve.last().unwrap().max_absolute_residual;
    assert!(last <= first * 1.5 + 1e-12, "first {} last {}", first, last);
}

/// Discrete dbar in z of the psi samples on a small circle: the solution is
/// holomorphic in z.
#[test]
fn psi_is_holomorphic_in_z() {
    let n = 1;
    let f = CPolynomial::monomial(n, vec![2], c(1.0, 0.0));
    let phi = CPolynomial::monomial(n, vec![3], c(1.0, 0.0));
    let center = c(0.2, 0.1);
    let radius = 0.05;
    let count = 8;
    let circle: Vec<ComplexPoint> = (0..count)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / count as f64;
            ComplexPoint(vec![center + C64::from_polar(radius, theta)])
        })
        .collect();
    let mut problem = DivisionProblem::koszul(n, vec![f], phi).unwrap();
    problem.quad = gauss(128);
    problem.test_points = circle.clone();
    let report = division::solve_division(&problem).unwrap();
    let values: Vec<C64> = report
        .psi
        .iter()
        .map(|s| {
            s.components
                .iter()
                .find(|cp| cp.e == vec![1])
                .map(|cp| c(cp.value[0], cp.value[1]))
                .unwrap()
        })
        .collect();
    // Fourier coefficient of e^{-i theta} over the circle estimates the
    // dbar_z derivative; it vanishes for holomorphic samples.
    let mut dbar = c(0.0, 0.0);
    let mut scale = 0.0f64;
    for (j, v) in values.iter().enumerate() {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / count as f64;
        dbar += v * C64::from_polar(1.0, theta);
        scale = scale.max(v.norm());
    }
    dbar /= c(count as f64, 0.0);
    assert!(dbar.norm() <= 1e-3 * scale.max(1e-12), "dbar {:?}", dbar);
}

/// Degree audit of the assembled integrand: in block mode every surviving
/// term obeys alpha_j <= m_j - 1, and the truncation beyond
/// min(n+1, m-r+1) contributes nothing.
#[test]
fn block_degree_audit() {
    let n = 2;
    let z1 = CPolynomial::var(n, 0);
    let z2 = CPolynomial::var(n, 1);
    let problem = DivisionProblem::product(
        n,
        vec![vec![z1.clone(), z2.clone()], vec![z1.add(&z2)]],
        z1.mul(&z2),
    )
    .unwrap();
    let assembler = division::Assembler::new(&problem).unwrap();
    let z = ComplexPoint(vec![c(0.2, 0.1), c(-0.1, 0.2)]);
    let integrand = division::assemble_integrand(&problem, &assembler, &z);
    let sizes = problem.matrix.block_sizes();
    let mut checked = 0;
    for &(re1, im1, re2, im2) in &[
        (0.4, 0.2, -0.3, 0.5),
        (0.7, -0.1, 0.2, 0.4),
        (-0.5, 0.3, 0.6, -0.2),
    ] {
        let zeta = ComplexPoint(vec![c(re1, im1), c(re2, im2)]);
        if let Ok(el) = integrand(&zeta) {
            checked += 1;
            for (blade, _) in el.terms() {
                let alpha = blade.alpha_vec(problem.matrix.r);
                for (j, &aj) in alpha.iter().enumerate() {
                    assert!(
                        (aj as usize) < sizes[j].max(1),
                        "alpha lane {} = {} exceeds block bound",
                        j,
                        aj
                    );
                }
                let total: u32 = alpha.iter().sum();
                assert!(total + 1 <= problem.k_max());
            }
        }
    }
    assert!(checked >= 2);
}

/// Determinant machinery control cases: the unscaled full-rank matrix (empty
/// degeneracy set) and the scaled matrix with phi = z1^4, whose size
/// hypothesis holds; both divide cleanly.
#[test]
fn determinant_mode_controls() {
    let n = 2;
    let one = CPolynomial::one(n);
    let zero = CPolynomial::zero(n);
    let z1 = CPolynomial::var(n, 0);
    let z2 = CPolynomial::var(n, 1);

    let rows = vec![
        vec![one.clone(), zero.clone(), z1.clone()],
        vec![zero.clone(), one.clone(), z2.clone()],
    ];
    let phi = CPolynomial::monomial(n, vec![2, 0], c(1.0, 0.0));
    let mut problem = DivisionProblem::determinant(n, rows, phi.clone()).unwrap();
    problem.quad = qmc(1 << 17);
    let report = division::solve_division(&problem).unwrap();
    assert!(
        report.max_relative_residual <= 5e-2,
        "nonsingular: {}",
        report.max_relative_residual
    );

    let rows_scaled = vec![
        vec![z1.clone(), zero.clone(), z1.mul(&z1)],
        vec![zero.clone(), z1.clone(), z1.mul(&z2)],
    ];
    let phi4 = CPolynomial::monomial(n, vec![4, 0], c(1.0, 0.0));
    let mut problem = DivisionProblem::determinant(n, rows_scaled, phi4).unwrap();
    problem.quad = qmc(1 << 17);
    let report = division::solve_division(&problem).unwrap();
    assert!(report.size_condition.holds);
    assert!(
        report.max_relative_residual <= 5e-2,
        "scaled phi4: {}",
        report.max_relative_residual
    );
}

/// Product mode in two variables with one-dimensional blocks: the blocks
/// form a complete intersection and phi = z1 z2 factors as z1 * z2, so the
/// witness is the constant section and the residual vanishes.
#[test]
fn two_variable_product_complete_intersection() {
    let n = 2;
    let z1 = CPolynomial::var(n, 0);
    let z2 = CPolynomial::var(n, 1);
    let phi = z1.mul(&z2);
    let mut problem = DivisionProblem::product(n, vec![vec![z1], vec![z2]], phi).unwrap();
    problem.quad = qmc(1 << 17);
    let report = division::solve_division(&problem).unwrap();
    assert_eq!(report.verdict, Verdict::Pass, "size holds and residual small");
    assert!(
        report.max_relative_residual <= 2e-2,
        "rel {}",
        report.max_relative_residual
    );
    // the witness is psi_{12} == 1
    for s in &report.psi {
        let psi12 = s
            .components
            .iter()
            .find(|cp| cp.e == vec![1, 2])
            .map(|cp| c(cp.value[0], cp.value[1]))
            .unwrap_or(c(0.0, 0.0));
        assert!((psi12 - c(1.0, 0.0)).norm() <= 3e-2, "psi12 {:?}", psi12);
    }
    // min-of-blocks quotient is among the reported estimates
    assert!(report
        .size_condition
        .estimates
        .iter()
        .any(|e| e.kind == "min-of-blocks"));
}

/// The readability fit recovers psi = z as a degree-one series.
#[test]
fn psi_series_fit() {
    let n = 1;
    let f = CPolynomial::monomial(n, vec![2], c(1.0, 0.0));
    let phi = CPolynomial::monomial(n, vec![3], c(1.0, 0.0));
    let mut problem = DivisionProblem::koszul(n, vec![f], phi).unwrap();
    problem.quad = gauss(128);
    problem.psi_fit_degree = Some(2);
    let report = division::solve_division(&problem).unwrap();
    let fit = report
        .psi_fit
        .iter()
        .find(|f| f.e == vec![1])
        .expect("fit for the e1 component");
    for (mono, coeff) in fit.monomials.iter().zip(&fit.coefficients) {
        let v = c(coeff[0], coeff[1]);
        if mono == &vec![1u32] {
            assert!((v - c(1.0, 0.0)).norm() <= 1e-3, "linear coeff {:?}", v);
        } else {
            assert!(v.norm() <= 1e-3, "{:?} coeff {:?}", mono, v);
        }
    }
}

/// The optional regularized cross-check agrees with the direct evaluation.
#[test]
fn lambda_crosscheck_agrees() {
    let n = 1;
    let f = CPolynomial::monomial(n, vec![2], c(1.0, 0.0));
    let phi = CPolynomial::monomial(n, vec![3], c(1.0, 0.0));
    let mut problem = DivisionProblem::koszul(n, vec![f], phi).unwrap();
    problem.quad = gauss(96);
    problem.lambda_crosscheck = true;
    let report = division::solve_division(&problem).unwrap();
    let dev = report
        .diagnostics
        .lambda_crosscheck_max_deviation
        .expect("cross-check ran");
    assert!(dev <= 1e-3, "deviation {}", dev);
}
