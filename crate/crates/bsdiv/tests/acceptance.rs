//! Acceptance suite: every criterion runs at its stated tolerance and prints
//! one pass/fail line; the test asserts the full tally at the end so all
//! lines are visible in one run (use --nocapture to watch them live).

use bsdiv::cli::{self, identities};
use bsdiv::division::{self, DivisionProblem};
use bsdiv::frames::PolyMatrix;
use bsdiv::graded::GradedElement;
use bsdiv::poly::{C64, CPolynomial, ComplexPoint};
use bsdiv::quadrature::{self, QuadratureConfig, RegularizationSchedule, Scheme};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(outcomes: &mut Vec<Outcome>, name: &'static str, pass: bool, detail: String) {
    println!(
        "criterion {:<38} {}  {}",
        name,
        if pass { "PASS" } else { "FAIL" },
        detail
    );
    outcomes.push(Outcome { name, pass, detail });
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

fn check_group(
    outcomes: &mut Vec<Outcome>,
    name: &'static str,
    results: &[identities::IdentityResult],
    bounds: &[(&str, f64)],
    elapsed: f64,
    budget: f64,
) {
    let mut pass = elapsed <= budget;
    let mut detail = String::new();
    let _ = write!(detail, "{:.1}s/{:.0}s budget;", elapsed, budget);
    for r in results {
        let required = bounds
            .iter()
            .find(|(id, _)| *id == r.id)
            .map(|(_, tol)| *tol)
            .unwrap_or(r.tolerance);
        let ok = r.pass && r.max_error <= required;
        if !ok {
            pass = false;
        }
        let _ = write!(detail, " {}={:.2e}", r.id, r.max_error);
    }
    report(outcomes, name, pass, detail);
}

fn main_suite() -> Vec<Outcome> {
    let mut outcomes = Vec::new();

    // 1. Algebra suite: contraction/wedge laws, 1000 random cases each,
    //    max error <= 1e-10, runtime <= 10 s.
    let t0 = Instant::now();
    let algebra = identities::algebra_checks(None);
    check_group(
        &mut outcomes,
        "1-algebra-suite",
        &algebra,
        &[
            ("wedge-antisymmetry", 1e-10),
            ("wedge-associativity", 1e-10),
            ("wedge-supercommutativity", 1e-10),
            ("delta-f-squared", 1e-10),
            ("delta-eta-antiderivation", 1e-10),
            ("delta-eta-squared", 1e-10),
            ("delta-F-iterated-oracle", 1e-10),
            ("delta-F-eta-anticommute", 1e-10),
        ],
        t0.elapsed().as_secs_f64(),
        10.0,
    );

    // 2. Frame suite on the 2 x 3 example plus 20 random matrices, <= 30 s.
    let t0 = Instant::now();
    let frames_checks = identities::frame_checks(None);
    check_group(
        &mut outcomes,
        "2-frame-suite",
        &frames_checks,
        &[
            ("sigma-duality", 1e-10),
            ("gamma-normalization", 1e-10),
            ("gamma-chain", 1e-9),
            ("dbar-sigma-finite-differences", 1e-6),
        ],
        t0.elapsed().as_secs_f64(),
        30.0,
    );

    // 3. Worked-example reproduction: the 2 x 3 minors and the Koszul-remark
    //    coefficient 2/|F|^6 at 100 random points, <= 1e-10. The F_23 minor
    //    carries the sign forced by the row-ordered determinant convention.
    {
        let t0 = Instant::now();
        let n = 2;
        let one = CPolynomial::one(n);
        let zero = CPolynomial::zero(n);
        let z1 = CPolynomial::var(n, 0);
        let z2 = CPolynomial::var(n, 1);
        let pm = PolyMatrix::new_full(
            n,
            vec![
                vec![one.clone(), zero.clone(), z1.clone()],
                vec![zero.clone(), one.clone(), z2.clone()],
            ],
        )
        .unwrap();
        let minors = division::determinant_section(&pm).unwrap();
        let minors_ok = minors[&0b011] == CPolynomial::one(n)
            && minors[&0b101] == z2
            && minors[&0b110] == z1.scale(c(-1.0, 0.0));
        let examples = identities::example_checks();
        let mut pass = minors_ok;
        let mut detail = format!("{:.1}s; minors(1,z2,-z1)={}", t0.elapsed().as_secs_f64(), minors_ok);
        for r in &examples {
            if !(r.pass && r.max_error <= 1e-10) {
                pass = false;
            }
            let _ = write!(detail, " {}={:.2e}", r.id, r.max_error);
        }
        report(&mut outcomes, "3-worked-example-reproduction", pass, detail);
    }

    // 4. Hefer suite: eta recovery and the telescoping relation at 1000
    //    random doubled points <= 1e-10; block cross-annihilation exact.
    let t0 = Instant::now();
    let hefer = identities::hefer_checks();
    check_group(
        &mut outcomes,
        "4-hefer-suite",
        &hefer,
        &[
            ("hefer-polynomial-identity", 1e-10),
            ("hefer-eta-recovery", 1e-10),
            ("hh-relation", 1e-10),
            ("hefer-block-annihilation", 0.0),
        ],
        t0.elapsed().as_secs_f64(),
        30.0,
    );

    // 5. Degree/vanishing laws: blade-structural zeros are exactly empty;
    //    the duplicated-block cancellation is bounded by roundoff.
    {
        let t0 = Instant::now();
        let n = 2;
        let z1 = CPolynomial::var(n, 0);
        let z2 = CPolynomial::var(n, 1);
        // alpha_j >= m_j forces a repeated e-generator: structurally empty
        let pm = PolyMatrix::product(n, vec![vec![z1.clone()], vec![z2.clone()]]).unwrap();
        let fp = bsdiv::frames::frame_at(&pm, &ComplexPoint(vec![c(0.5, 0.1), c(0.4, -0.2)]))
            .unwrap();
        let structural_empty = bsdiv::frames::u_form(&fp, 2).is_zero();
        // duplicated blocks: u_k = 0 for k > m
        let pm2 = PolyMatrix::power(n, vec![z1, z2], 2).unwrap();
        let mut worst = 0.0f64;
        for z in division::default_test_points(n, 10, 0.8, 23) {
            if let Ok(fp) = bsdiv::frames::frame_at(&pm2, &z) {
                worst = worst.max(bsdiv::frames::u_form(&fp, 3).sup_norm());
            }
        }
        let vanish = identities::vanishing_checks();
        let pass = structural_empty && worst <= 1e-12 && vanish.iter().all(|r| r.pass);
        report(
            &mut outcomes,
            "5-degree-vanishing-laws",
            pass,
            format!(
                "{:.1}s; structural-empty={} duplicated-block-sup={:.2e}",
                t0.elapsed().as_secs_f64(),
                structural_empty,
                worst
            ),
        );
    }

    // 6. Reproducing formula for the trivial morphism:
    //    n = 1 Gauss 128 x 256 <= 1e-3; n = 2 QMC 2^20 <= 1e-2;
    //    10 points with |z| <= 0.5; runtime <= 5 min.
    {
        let t0 = Instant::now();
        let mut worst1 = 0.0f64;
        {
            let n = 1;
            let one = CPolynomial::one(n);
            for phi in [
                CPolynomial::one(n),
                CPolynomial::var(n, 0),
                CPolynomial::monomial(n, vec![2], c(1.0, 0.0)),
            ] {
                let mut problem = DivisionProblem::koszul(n, vec![one.clone()], phi).unwrap();
                problem.quad = gauss(128);
                let report = division::solve_division(&problem).unwrap();
                worst1 = worst1.max(report.max_absolute_residual);
            }
        }
        let mut worst2 = 0.0f64;
        {
            let n = 2;
            let one = CPolynomial::one(n);
            for phi in [
                CPolynomial::one(n),
                CPolynomial::var(n, 0),
                CPolynomial::var(n, 0).mul(&CPolynomial::var(n, 1)),
                CPolynomial::monomial(n, vec![2, 0], c(1.0, 0.0)),
            ] {
                let mut problem = DivisionProblem::koszul(n, vec![one.clone()], phi).unwrap();
                problem.quad = qmc(1 << 20);
                let report = division::solve_division(&problem).unwrap();
                worst2 = worst2.max(report.max_absolute_residual);
            }
        }
        let elapsed = t0.elapsed().as_secs_f64();
        let pass = worst1 <= 1e-3 && worst2 <= 1e-2 && elapsed <= 300.0;
        report(
            &mut outcomes,
            "6-reproducing-formula",
            pass,
            format!(
                "{:.1}s/300s; n=1 sup {:.2e} (tol 1e-3), n=2 sup {:.2e} (tol 1e-2)",
                elapsed, worst1, worst2
            ),
        );
    }

    // 7. One-variable division: f = z^2, phi = z^3 -> psi ~ z, sup residual
    //    <= 1e-3; product mode f1 = f2 = (z), phi = z^2 -> residual <= 1e-3.
    {
        let t0 = Instant::now();
        let n = 1;
        let z = CPolynomial::var(n, 0);
        let z2 = CPolynomial::monomial(n, vec![2], c(1.0, 0.0));
        let z3 = CPolynomial::monomial(n, vec![3], c(1.0, 0.0));

        let mut problem = DivisionProblem::koszul(n, vec![z2], z3).unwrap();
        problem.quad = gauss(128);
        let rep = division::solve_division(&problem).unwrap();
        let mut psi_dev = 0.0f64;
        for s in &rep.psi {
            let zv = c(s.z[0][0], s.z[0][1]);
            let psi = s
                .components
                .iter()
                .find(|cp| cp.e == vec![1])
                .map(|cp| c(cp.value[0], cp.value[1]))
                .unwrap_or(c(0.0, 0.0));
            psi_dev = psi_dev.max((psi - zv).norm());
        }
        let koszul_res = rep.max_absolute_residual;

        let phi2 = z.mul(&z);
        let mut problem =
            DivisionProblem::product(n, vec![vec![z.clone()], vec![z]], phi2).unwrap();
        problem.quad = gauss(128);
        let product_res = division::solve_division(&problem)
            .unwrap()
            .max_absolute_residual;

        let pass = koszul_res <= 1e-3 && psi_dev <= 1e-3 && product_res <= 1e-3;
        report(
            &mut outcomes,
            "7-division-1d",
            pass,
            format!(
                "{:.1}s; f=z2 phi=z3 residual {:.2e}, |psi-z| {:.2e}; product residual {:.2e}",
                t0.elapsed().as_secs_f64(),
                koszul_res,
                psi_dev,
                product_res
            ),
        );
    }

    // 8. Two-variable division at QMC 2^20, <= 15 min. The determinant-mode
    //    sub-case runs exactly as stated; its hypothesis |phi| <= C|F|^2
    //    fails for phi = z1^2 (the size estimator reports the divergence and
    //    the residual converges to the nonzero interpolation term), so the
    //    stated bound is not attainable; the two control cases beside it
    //    show the machinery dividing cleanly whenever the hypothesis holds.
    let koszul_problem_2d = {
        let n = 2;
        let phi = CPolynomial::monomial(n, vec![2, 0], c(1.0, 0.0))
            .add(&CPolynomial::monomial(n, vec![1, 1], c(1.0, 0.0)));
        let mut problem = DivisionProblem::koszul(
            n,
            vec![CPolynomial::var(n, 0), CPolynomial::var(n, 1)],
            phi,
        )
        .unwrap();
        problem.quad = qmc(1 << 20);
        problem
    };
    {
        let t0 = Instant::now();
        let rep = division::solve_division(&koszul_problem_2d).unwrap();
        let koszul_rel = rep.max_relative_residual;

        let n = 2;
        let z1 = CPolynomial::var(n, 0);
        let z2 = CPolynomial::var(n, 1);
        let zero = CPolynomial::zero(n);
        let one = CPolynomial::one(n);
        let scaled_rows = vec![
            vec![z1.clone(), zero.clone(), z1.mul(&z1)],
            vec![zero.clone(), z1.clone(), z1.mul(&z2)],
        ];
        let mut det_problem = DivisionProblem::determinant(
            n,
            scaled_rows.clone(),
            CPolynomial::monomial(n, vec![2, 0], c(1.0, 0.0)),
        )
        .unwrap();
        det_problem.quad = qmc(1 << 20);
        let det_rep = division::solve_division(&det_problem).unwrap();
        let det_rel = det_rep.max_relative_residual;

        // control: same scaled matrix, phi = z1^4 satisfies the stated bound
        let mut control = DivisionProblem::determinant(
            n,
            scaled_rows,
            CPolynomial::monomial(n, vec![4, 0], c(1.0, 0.0)),
        )
        .unwrap();
        control.quad = qmc(1 << 18);
        let control_rel = division::solve_division(&control).unwrap().max_relative_residual;
        // control: unscaled rows (empty degeneracy set)
        let mut control2 = DivisionProblem::determinant(
            n,
            vec![
                vec![one.clone(), zero.clone(), z1.clone()],
                vec![zero, one, z2],
            ],
            CPolynomial::monomial(n, vec![2, 0], c(1.0, 0.0)),
        )
        .unwrap();
        control2.quad = qmc(1 << 18);
        let control2_rel = division::solve_division(&control2).unwrap().max_relative_residual;

        let elapsed = t0.elapsed().as_secs_f64();
        let pass = koszul_rel <= 5e-2 && det_rel <= 5e-2 && elapsed <= 900.0;
        report(
            &mut outcomes,
            "8-division-2d",
            pass,
            format!(
                "{:.1}s/900s; koszul rel {:.2e} (tol 5e-2); determinant phi=z1^2 rel {:.2e} \
                 (tol 5e-2; annihilation hypothesis fails, size estimate diverging={}); \
                 controls: phi=z1^4 rel {:.2e}, unscaled rel {:.2e}",
                elapsed,
                koszul_rel,
                det_rel,
                !det_rep.size_condition.holds,
                control_rel,
                control2_rel
            ),
        );
    }

    // 9. Residue pairings.
    {
        let t0 = Instant::now();
        let sched = RegularizationSchedule::default();
        let tpi = 2.0 * PI;

        let n = 1;
        let fz = PolyMatrix::koszul(n, vec![CPolynomial::var(n, 0)]).unwrap();
        let dims1 = fz.dims();
        let bump1 = move |zeta: &ComplexPoint| {
            GradedElement::scalar(dims1, c(quadrature::bump_test_factor(0.9, zeta), 0.0))
                .wedge(&GradedElement::dz_gen(dims1, 1, c(1.0, 0.0)))
                .unwrap()
        };
        let cp = quadrature::residue_pair(&fz, 1, &CPolynomial::one(n), &bump1, &sched, &gauss(128))
            .unwrap();
        let cp_rel = (cp.value - c(0.0, tpi)).norm() / tpi;

        let fz2 = PolyMatrix::koszul(
            n,
            vec![CPolynomial::monomial(n, vec![2], c(1.0, 0.0))],
        )
        .unwrap();
        let ann = quadrature::residue_pair(
            &fz2,
            1,
            &CPolynomial::monomial(n, vec![2], c(1.0, 0.0)),
            &bump1,
            &sched,
            &gauss(128),
        )
        .unwrap();
        let ann_rel = ann.value.norm() / tpi;

        let n = 2;
        let fcross = PolyMatrix::koszul(
            n,
            vec![CPolynomial::var(n, 0), CPolynomial::var(n, 1)],
        )
        .unwrap();
        let dims2 = fcross.dims();
        let bump2 = move |zeta: &ComplexPoint| {
            GradedElement::scalar(dims2, c(quadrature::bump_test_factor(0.9, zeta), 0.0))
                .wedge(&GradedElement::dz_gen(dims2, 1, c(1.0, 0.0)))
                .unwrap()
                .wedge(&GradedElement::dz_gen(dims2, 2, c(1.0, 0.0)))
                .unwrap()
        };
        let ch = quadrature::residue_pair(
            &fcross,
            2,
            &CPolynomial::one(n),
            &bump2,
            &sched,
            &qmc(1 << 19),
        )
        .unwrap();
        let ch_expect = c(-tpi * tpi, 0.0); // (2 pi i)^2
        let ch_rel = (ch.value - ch_expect).norm() / ch_expect.norm();

        let dual = quadrature::residue_pair(
            &fcross,
            2,
            &CPolynomial::var(n, 0),
            &bump2,
            &sched,
            &qmc(1 << 19),
        )
        .unwrap();
        let dual_rel = dual.value.norm() / ch_expect.norm();

        let pass = cp_rel <= 1e-2 && ann_rel <= 1e-3 && ch_rel <= 5e-2 && dual_rel <= 1e-2;
        report(
            &mut outcomes,
            "9-residue-pairings",
            pass,
            format!(
                "{:.1}s; cauchy {:.2e} (1e-2), annihilation {:.2e} (1e-3), \
                 coleff-herrera {:.2e} (5e-2), duality {:.2e} (1e-2)",
                t0.elapsed().as_secs_f64(),
                cp_rel,
                ann_rel,
                ch_rel,
                dual_rel
            ),
        );
    }

    // 10. Determinism: the 2-variable run of criterion 8 repeated with
    //     different worker counts produces byte-identical reports.
    {
        let t0 = Instant::now();
        let run_with = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                let rep = division::solve_division(&koszul_problem_2d).unwrap();
                serde_json::to_string_pretty(&cli::divide_report_value(&koszul_problem_2d, &rep))
                    .unwrap()
            })
        };
        let a = run_with(1);
        let b = run_with(3);
        let pass = a == b;
        report(
            &mut outcomes,
            "10-determinism",
            pass,
            format!(
                "{:.1}s; {} bytes, byte-identical across 1 and 3 workers: {}",
                t0.elapsed().as_secs_f64(),
                a.len(),
                pass
            ),
        );
    }

    outcomes
}

#[test]
fn acceptance_criteria() {
    let outcomes = main_suite();
    let failures: Vec<&Outcome> = outcomes.iter().filter(|o| !o.pass).collect();
    println!(
        "acceptance summary: {} of {} criteria passed",
        outcomes.len() - failures.len(),
        outcomes.len()
    );
    assert!(
        failures.is_empty(),
        "failed criteria: {}",
        failures
            .iter()
            .map(|o| format!("{} ({})", o.name, o.detail))
            .collect::<Vec<_>>()
            .join("; ")
    );
}
