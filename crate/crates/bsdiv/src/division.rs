//! Orchestrates the explicit division: determinant sections, size-condition
//! estimation, assembly of the division integrand, evaluation of psi at test
//! points and mechanical membership verdicts.
//!
//! For a problem with matrix f, weight g and datum phi, the solver evaluates
//!
//! `psi(z) = integral of sum_{k=1}^{N} (delta_h)_{k-1} u_k(zeta) phi(zeta) ^ g(zeta, z)`
//!
//! with N = min(n+1, m-r+1), then reports the residual
//! `phi(z) - delta_F(z) psi(z)` per test point. The interpolation part of the
//! underlying representation identity is never computed; when the residue
//! current annihilates phi the residual consists of quadrature error only.

use crate::frames::{self, BlockStructure, FrameError, PolyMatrix};
use crate::graded::{Blade, Dims, GradedElement};
use crate::hefer::{self, HeferData};
use crate::kernel::{self, KernelConfig};
use crate::poly::{C64, CPolynomial, ComplexPoint};
use crate::quadrature::{
    self, NodeSet, QuadratureConfig, QuadratureError, Region, RegularizationSchedule, SkipNode,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DivisionError {
    #[error("shape violation: {0}")]
    Shape(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("test point outside the open unit ball: |z| = {0:.3}")]
    TestPointOutsideDomain(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DivisionMode {
    Determinant,
    Product,
    Power,
    Koszul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct DivisionProblem {
    pub n: usize,
    pub mode: DivisionMode,
    /// The assembled morphism (power mode: duplicated blocks).
    pub matrix: PolyMatrix,
    /// Original per-block tuples (determinant mode: the rows).
    pub tuples: Vec<Vec<CPolynomial>>,
    pub power_exponent: Option<usize>,
    pub phi: CPolynomial,
    /// Optional explicit exponent pattern for the size check.
    pub pattern: Option<Vec<u32>>,
    pub test_points: Vec<ComplexPoint>,
    pub quad: QuadratureConfig,
    pub kernel: KernelConfig,
    pub schedule: RegularizationSchedule,
    pub residual_threshold: f64,
    pub convergence_curve: bool,
    pub lambda_crosscheck: bool,
    pub psi_fit_degree: Option<u32>,
}

impl DivisionProblem {
    pub fn koszul(n: usize, tuple: Vec<CPolynomial>, phi: CPolynomial) -> Result<Self, DivisionError> {
        let matrix = PolyMatrix::koszul(n, tuple.clone())?;
        Ok(Self::base(n, DivisionMode::Koszul, matrix, vec![tuple], None, phi))
    }

    pub fn determinant(
        n: usize,
        rows: Vec<Vec<CPolynomial>>,
        phi: CPolynomial,
    ) -> Result<Self, DivisionError> {
        let matrix = PolyMatrix::new_full(n, rows.clone())?;
        Ok(Self::base(n, DivisionMode::Determinant, matrix, rows, None, phi))
    }

    pub fn product(
        n: usize,
        tuples: Vec<Vec<CPolynomial>>,
        phi: CPolynomial,
    ) -> Result<Self, DivisionError> {
        let matrix = PolyMatrix::product(n, tuples.clone())?;
        Ok(Self::base(n, DivisionMode::Product, matrix, tuples, None, phi))
    }

    pub fn power(
        n: usize,
        tuple: Vec<CPolynomial>,
        exponent: usize,
        phi: CPolynomial,
    ) -> Result<Self, DivisionError> {
        let matrix = PolyMatrix::power(n, tuple.clone(), exponent)?;
        Ok(Self::base(
            n,
            DivisionMode::Power,
            matrix,
            vec![tuple],
            Some(exponent),
            phi,
        ))
    }

    fn base(
        n: usize,
        mode: DivisionMode,
        matrix: PolyMatrix,
        tuples: Vec<Vec<CPolynomial>>,
        power_exponent: Option<usize>,
        phi: CPolynomial,
    ) -> Self {
        DivisionProblem {
            n,
            mode,
            matrix,
            tuples,
            power_exponent,
            phi,
            pattern: None,
            test_points: default_test_points(n, 10, 0.5, 101),
            quad: QuadratureConfig::default(),
            kernel: KernelConfig::default(),
            schedule: RegularizationSchedule::default(),
            residual_threshold: 5e-2,
            convergence_curve: false,
            lambda_crosscheck: false,
            psi_fit_degree: None,
        }
    }

    pub fn dims(&self) -> Dims {
        self.matrix.dims()
    }

    /// Truncation bound of the division sum.
    pub fn k_max(&self) -> u32 {
        let d = self.dims();
        ((d.n + 1).min(d.m - d.r + 1)) as u32
    }

    pub fn validate(&self) -> Result<(), DivisionError> {
        if self.phi.n_vars() != self.n {
            return Err(DivisionError::Shape(format!(
                "phi has {} variables, expected {}",
                self.phi.n_vars(),
                self.n
            )));
        }
        if self.matrix.n != self.n {
            return Err(DivisionError::Shape("matrix variable count".into()));
        }
        match self.mode {
            DivisionMode::Koszul if self.matrix.r != 1 => {
                return Err(DivisionError::Shape("koszul mode needs r = 1".into()))
            }
            DivisionMode::Product | DivisionMode::Power
                if matches!(self.matrix.blocks, BlockStructure::Full) =>
            {
                return Err(DivisionError::Shape("block mode without blocks".into()))
            }
            _ => {}
        }
        for z in &self.test_points {
            if z.dim() != self.n {
                return Err(DivisionError::Shape("test point dimension".into()));
            }
            if z.norm() >= 1.0 {
                return Err(DivisionError::TestPointOutsideDomain(z.norm()));
            }
        }
        self.schedule
            .validate()
            .map_err(DivisionError::Shape)?;
        Ok(())
    }
}

/// Deterministic spread of test points in the ball of the given radius.
pub fn default_test_points(n: usize, count: usize, radius: f64, seed: u64) -> Vec<ComplexPoint> {
    let cfg = QuadratureConfig {
        scheme: quadrature::Scheme::QmcHalton,
        nodes: 8 * count.max(1),
        seed,
        near_z_refinement: false,
    };
    let provider = NodeSet::build(Region::Ball { radius }, &cfg, n).expect("qmc supports any n");
    let mut out = Vec::with_capacity(count);
    let mut idx = 0usize;
    while out.len() < count && idx < provider.total() * 64 {
        if let Some((p, _)) = provider.node(idx) {
            out.push(p);
        }
        idx += 1;
    }
    assert_eq!(out.len(), count, "ball sampling exhausted");
    out
}

/// All r x r signed minors of the matrix, keyed by the column bitmask, in
/// standard row order: F_I = det(f_j^{I_k}) with rows 1..r top to bottom.
pub fn determinant_section(f: &PolyMatrix) -> Result<BTreeMap<u32, CPolynomial>, FrameError> {
    let (r, m, n) = (f.r, f.m, f.n);
    if r > m {
        return Err(FrameError::Shape("r exceeds m".into()));
    }
    let mut out = BTreeMap::new();
    for mask in increasing_subsets(m, r) {
        let cols: Vec<usize> = (0..m).filter(|k| mask & (1u32 << k) != 0).collect();
        let entries: Vec<Vec<&CPolynomial>> = (0..r)
            .map(|j| cols.iter().map(|&k| f.entry(j, k)).collect())
            .collect();
        out.insert(mask, poly_det(&entries, n));
    }
    Ok(out)
}

pub(crate) fn increasing_subsets(m: usize, r: usize) -> Vec<u32> {
    let mut out = Vec::new();
    let mut stack = vec![(0u32, 0usize, 0usize)]; // (mask, next, chosen)
    while let Some((mask, next, chosen)) = stack.pop() {
        if chosen == r {
            out.push(mask);
            continue;
        }
        for k in next..m {
            if m - k >= r - chosen {
                stack.push((mask | (1u32 << k), k + 1, chosen + 1));
            }
        }
    }
    out.sort_unstable();
    out
}

fn poly_det(entries: &[Vec<&CPolynomial>], n: usize) -> CPolynomial {
    let size = entries.len();
    if size == 1 {
        return entries[0][0].clone();
    }
    // cofactor expansion along the first row
    let mut acc = CPolynomial::zero(n);
    for (j, top) in entries[0].iter().enumerate() {
        if top.is_zero() {
            continue;
        }
        let sub: Vec<Vec<&CPolynomial>> = (1..size)
            .map(|i| {
                (0..size)
                    .filter(|&k| k != j)
                    .map(|k| entries[i][k])
                    .collect()
            })
            .collect();
        let minor = poly_det(&sub, n);
        let signed = if j % 2 == 0 {
            minor.mul(top)
        } else {
            minor.mul(top).scale(C64::new(-1.0, 0.0))
        };
        acc = acc.add(&signed);
    }
    acc
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternEstimate {
    pub kind: String,
    pub pattern: Vec<u32>,
    pub sup_ratio: f64,
    /// Coordinates (re, im) of the sample attaining the sup.
    pub at: Vec<[f64; 2]>,
    pub diverging: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SizeConditionReport {
    pub estimates: Vec<PatternEstimate>,
    pub holds: bool,
}

/// Sampled estimate of the constants C in the size hypotheses: the sup over a
/// dense ball sample (with refinement near small denominators) of
/// |phi| / denominator. Evidence, not proof.
pub fn size_condition_estimate(problem: &DivisionProblem) -> SizeConditionReport {
    let n = problem.n;
    let d = problem.dims();
    let quotients: Vec<(String, Vec<u32>, Box<dyn Fn(&ComplexPoint) -> f64 + Sync>)> =
        match problem.mode {
            DivisionMode::Koszul | DivisionMode::Determinant => {
                let mu = d.n.min(d.m - d.r + 1) as u32;
                let minors = determinant_section(&problem.matrix).expect("valid shape");
                let kind = if problem.mode == DivisionMode::Koszul {
                    "tuple-power"
                } else {
                    "determinant-power"
                };
                vec![(
                    kind.to_string(),
                    vec![mu],
                    Box::new(move |zeta: &ComplexPoint| {
                        let f2: f64 = minors
                            .values()
                            .map(|p| p.eval(zeta).expect("dims").norm_sqr())
                            .sum();
                        f2.sqrt().powi(mu as i32)
                    }),
                )]
            }
            DivisionMode::Power => {
                let tuple = problem.tuples[0].clone();
                let small_m = tuple.len();
                let r = problem.power_exponent.unwrap_or(d.r);
                let exponent = (small_m.min(n) + r - 1) as u32;
                vec![(
                    "tuple-power".to_string(),
                    vec![exponent],
                    Box::new(move |zeta: &ComplexPoint| {
                        let f2: f64 = tuple
                            .iter()
                            .map(|p| p.eval(zeta).expect("dims").norm_sqr())
                            .sum();
                        f2.sqrt().powi(exponent as i32)
                    }),
                )]
            }
            DivisionMode::Product => {
                let sizes: Vec<u32> =
                    problem.tuples.iter().map(|t| t.len() as u32).collect();
                let r = problem.tuples.len();
                let budget = (n + r - 1) as u32;
                let patterns: Vec<Vec<u32>> = match &problem.pattern {
                    Some(p) => vec![p.clone()],
                    None => product_patterns(&sizes, budget),
                };
                let mut qs: Vec<(String, Vec<u32>, Box<dyn Fn(&ComplexPoint) -> f64 + Sync>)> =
                    Vec::new();
                for s in patterns {
                    let tuples = problem.tuples.clone();
                    let sv = s.clone();
                    qs.push((
                        "product-powers".to_string(),
                        s,
                        Box::new(move |zeta: &ComplexPoint| {
                            tuples
                                .iter()
                                .zip(&sv)
                                .map(|(t, &sj)| {
                                    let f2: f64 = t
                                        .iter()
                                        .map(|p| p.eval(zeta).expect("dims").norm_sqr())
                                        .sum();
                                    f2.sqrt().powi(sj as i32)
                                })
                                .product()
                        }),
                    ));
                }
                // complete-intersection style quotient: min_j |f_j|^{m_j}
                let tuples = problem.tuples.clone();
                let sizes2 = sizes.clone();
                qs.push((
                    "min-of-blocks".to_string(),
                    sizes,
                    Box::new(move |zeta: &ComplexPoint| {
                        tuples
                            .iter()
                            .zip(&sizes2)
                            .map(|(t, &mj)| {
                                let f2: f64 = t
                                    .iter()
                                    .map(|p| p.eval(zeta).expect("dims").norm_sqr())
                                    .sum();
                                f2.sqrt().powi(mj as i32)
                            })
                            .fold(f64::INFINITY, f64::min)
                    }),
                ));
                qs
            }
        };

    // Deterministic coarse sample plus two refinement levels shrinking
    // around the worst points.
    let coarse = default_test_points(n, 2048, 1.0, problem.quad.seed.wrapping_add(9));
    let mut estimates = Vec::new();
    let mut holds = true;
    for (kind, pattern, denom) in quotients {
        let ratio = |zeta: &ComplexPoint| -> f64 {
            let num = problem.phi.eval(zeta).expect("dims").norm();
            let den = denom(zeta);
            if den == 0.0 {
                if num == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                num / den
            }
        };
        let mut level_sups = Vec::new();
        let mut worst_pt = coarse[0].clone();
        let mut pool: Vec<ComplexPoint> = coarse.clone();
        for level in 0..3usize {
            let mut sup = 0.0f64;
            for p in &pool {
                let v = ratio(p);
                if v > sup {
                    sup = v;
                    worst_pt = p.clone();
                }
            }
            level_sups.push(sup);
            if level == 2 {
                break;
            }
            // refine around the worst point
            let shrink = 10f64.powi(-(level as i32 + 1));
            let offsets = default_test_points(
                n,
                256,
                shrink,
                problem.quad.seed.wrapping_add(17 + level as u64),
            );
            pool = offsets
                .into_iter()
                .map(|o| {
                    ComplexPoint(
                        o.0.iter()
                            .zip(&worst_pt.0)
                            .map(|(a, b)| a + b)
                            .collect(),
                    )
                })
                .filter(|p| p.norm() <= 1.0)
                .collect();
            if pool.is_empty() {
                break;
            }
        }
        let sup = level_sups.iter().cloned().fold(0.0, f64::max);
        // A bounded quotient moves little when resampled around its worst
        // point; a large jump under refinement marks an unbounded ratio.
        let refined = level_sups.iter().skip(1).cloned().fold(0.0, f64::max);
        let diverging =
            !sup.is_finite() || (level_sups.len() >= 2 && refined > 4.0 * level_sups[0].max(1e-300));
        if diverging {
            holds = false;
        }
        estimates.push(PatternEstimate {
            kind,
            pattern,
            sup_ratio: sup,
            at: worst_pt.0.iter().map(|c| [c.re, c.im]).collect(),
            diverging,
        });
    }
    SizeConditionReport { estimates, holds }
}

fn product_patterns(sizes: &[u32], budget: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![1u32; sizes.len()];
    fn rec(sizes: &[u32], budget: u32, idx: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if out.len() >= 200 {
            return;
        }
        if idx == sizes.len() {
            let total: u32 = current.iter().sum();
            if total <= budget {
                out.push(current.clone());
            }
            return;
        }
        for s in 1..=sizes[idx] {
            current[idx] = s;
            rec(sizes, budget, idx + 1, current, out);
        }
    }
    rec(sizes, budget, 0, &mut current, &mut out);
    out
}

/// Per-node cache of the z-independent frame data: u_k * phi for each k, plus
/// |F|^2 for the optional regularized cross-check.
struct NodeData {
    zeta: ComplexPoint,
    weight: f64,
    u_phi: Vec<GradedElement>,
    f2: f64,
}

/// Shared assembly machinery for one problem.
pub struct Assembler {
    dims: Dims,
    k_max: u32,
    hefer: HeferData,
    minors: BTreeMap<u32, CPolynomial>,
    phi: CPolynomial,
    kernel: KernelConfig,
}

impl Assembler {
    pub fn new(problem: &DivisionProblem) -> Result<Self, DivisionError> {
        Ok(Assembler {
            dims: problem.dims(),
            k_max: problem.k_max(),
            hefer: hefer::hefer_split(&problem.matrix),
            minors: determinant_section(&problem.matrix)?,
            phi: problem.phi.clone(),
            kernel: problem.kernel,
        })
    }

    fn node_data(
        &self,
        matrix: &PolyMatrix,
        zeta: &ComplexPoint,
        weight: f64,
    ) -> Result<NodeData, SkipNode> {
        let fp = frames::frame_at(matrix, zeta).map_err(|_| SkipNode)?;
        let phi_val = self.phi.eval(zeta).expect("dims");
        let u_phi: Vec<GradedElement> = (1..=self.k_max)
            .map(|k| frames::u_form(&fp, k).scale(phi_val))
            .collect();
        let f2: f64 = self
            .minors
            .values()
            .map(|p| p.eval(zeta).expect("dims").norm_sqr())
            .sum();
        Ok(NodeData {
            zeta: zeta.clone(),
            weight,
            u_phi,
            f2,
        })
    }

    /// The integrand value at one node for one evaluation point z; `lambda`
    /// weights the element by |F(zeta)|^{2 lambda} for the cross-check mode.
    fn at_z(&self, node: &NodeData, z: &ComplexPoint, lambda: Option<f64>) -> GradedElement {
        let hv = self.hefer.eval_at(&node.zeta, z);
        let mut h1u = GradedElement::zero(self.dims);
        for (i, u) in node.u_phi.iter().enumerate() {
            if u.is_zero() {
                continue;
            }
            h1u.add_assign(&hv.delta_h_power(i as u32, u));
        }
        if h1u.is_zero() {
            return h1u;
        }
        let g = kernel::g_form(&self.kernel, self.dims, &node.zeta, z)
            .expect("test points validated inside the ball");
        let mut el = h1u.wedge(&g).expect("same dims");
        if let Some(l) = lambda {
            el = el.scale(C64::new(node.f2.powf(l), 0.0));
        }
        el
    }
}

/// The full division integrand for a fixed z, suitable for
/// [`quadrature::integrate_top`].
pub fn assemble_integrand<'a>(
    problem: &'a DivisionProblem,
    assembler: &'a Assembler,
    z: &'a ComplexPoint,
) -> impl Fn(&ComplexPoint) -> Result<GradedElement, SkipNode> + Sync + 'a {
    move |zeta: &ComplexPoint| {
        let node = assembler.node_data(&problem.matrix, zeta, 1.0)?;
        Ok(assembler.at_z(&node, z, None))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsiSample {
    /// Evaluation point coordinates (re, im).
    pub z: Vec<[f64; 2]>,
    /// Components keyed by the e-index set (1-based indices).
    pub components: Vec<PsiComponent>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsiComponent {
    pub e: Vec<u32>,
    pub value: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualSample {
    pub z: Vec<[f64; 2]>,
    pub absolute: f64,
    pub relative: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    pub nodes: usize,
    pub max_absolute_residual: f64,
    pub max_relative_residual: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub nodes_total: usize,
    pub nodes_in_region: usize,
    pub nodes_skipped: usize,
    pub skipped_fraction: f64,
    pub error_estimate: Option<f64>,
    pub convergence_curve: Vec<CurvePoint>,
    pub lambda_crosscheck_max_deviation: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsiFit {
    pub e: Vec<u32>,
    pub monomials: Vec<Vec<u32>>,
    pub coefficients: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivisionReport {
    pub mode: DivisionMode,
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub size_condition: SizeConditionReport,
    pub psi: Vec<PsiSample>,
    pub residuals: Vec<ResidualSample>,
    pub max_absolute_residual: f64,
    pub max_relative_residual: f64,
    /// Scale used for relative residuals: the largest |phi(z)| over the test
    /// points.
    pub phi_scale: f64,
    pub psi_fit: Vec<PsiFit>,
    pub diagnostics: Diagnostics,
    pub verdict: Verdict,
}

/// psi values per test point keyed by payload blade.
type PsiMaps = Vec<BTreeMap<Blade, C64>>;

struct SolveOutput {
    psi: PsiMaps,
    in_region: usize,
    skipped: usize,
    total: usize,
    err_est: f64,
}

fn solve_core(
    problem: &DivisionProblem,
    assembler: &Assembler,
    nodes: usize,
    lambda: Option<f64>,
) -> Result<SolveOutput, QuadratureError> {
    let dims = problem.dims();
    let mut cfg = problem.quad.clone();
    cfg.nodes = nodes;
    let provider = NodeSet::build(
        Region::Ball {
            radius: problem.kernel.r1,
        },
        &cfg,
        dims.n,
    )?;
    let total = provider.total();
    let zs = &problem.test_points;
    const CHUNK: usize = 4096;
    let n_chunks = (total + CHUNK - 1) / CHUNK;

    struct ChunkOut {
        psi: PsiMaps,
        half: PsiMaps,
        in_region: usize,
        skipped: usize,
        weight_in_region: f64,
        weight_skipped: f64,
    }

    let half_cut = total / 2;
    let partials: Vec<ChunkOut> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * CHUNK;
            let hi = ((ci + 1) * CHUNK).min(total);
            let mut out = ChunkOut {
                psi: vec![BTreeMap::new(); zs.len()],
                half: vec![BTreeMap::new(); zs.len()],
                in_region: 0,
                skipped: 0,
                weight_in_region: 0.0,
                weight_skipped: 0.0,
            };
            for idx in lo..hi {
                let (zeta, weight) = match provider.node(idx) {
                    Some(v) => v,
                    None => continue,
                };
                out.in_region += 1;
                out.weight_in_region += weight.abs();
                let node = match assembler.node_data(&problem.matrix, &zeta, weight) {
                    Ok(nd) => nd,
                    Err(SkipNode) => {
                        out.skipped += 1;
                        out.weight_skipped += weight.abs();
                        continue;
                    }
                };
                for (zi, z) in zs.iter().enumerate() {
                    let el = assembler.at_z(&node, z, lambda);
                    for (blade, coeff) in el.top_form_payload() {
                        *out.psi[zi].entry(blade).or_insert(C64::new(0.0, 0.0)) +=
                            coeff * node.weight;
                        if idx < half_cut {
                            *out.half[zi].entry(blade).or_insert(C64::new(0.0, 0.0)) +=
                                coeff * node.weight;
                        }
                    }
                }
            }
            out
        })
        .collect();

    let cn = quadrature::orientation_constant(dims.n);
    let mut psi: PsiMaps = vec![BTreeMap::new(); zs.len()];
    let mut half: PsiMaps = vec![BTreeMap::new(); zs.len()];
    let mut in_region = 0;
    let mut skipped = 0;
    let mut weight_in = 0.0f64;
    let mut weight_skipped = 0.0f64;
    for part in partials {
        for (zi, map) in part.psi.into_iter().enumerate() {
            for (b, v) in map {
                *psi[zi].entry(b).or_insert(C64::new(0.0, 0.0)) += v;
            }
        }
        for (zi, map) in part.half.into_iter().enumerate() {
            for (b, v) in map {
                *half[zi].entry(b).or_insert(C64::new(0.0, 0.0)) += v;
            }
        }
        in_region += part.in_region;
        skipped += part.skipped;
        weight_in += part.weight_in_region;
        weight_skipped += part.weight_skipped;
    }
    if weight_in > 0.0 && weight_skipped > quadrature::MAX_SKIPPED_FRACTION * weight_in {
        return Err(QuadratureError::TooManySkippedNodes { skipped, in_region });
    }
    let mut err_est = 0.0f64;
    for zi in 0..zs.len() {
        for (b, v) in &psi[zi] {
            let h = half[zi].get(b).copied().unwrap_or(C64::new(0.0, 0.0));
            err_est = err_est.max((v - h * 2.0).norm() * cn.norm());
        }
        for (_, v) in psi[zi].iter_mut() {
            *v *= cn;
        }
    }
    Ok(SolveOutput {
        psi,
        in_region,
        skipped,
        total,
        err_est,
    })
}

fn residual_at(
    problem: &DivisionProblem,
    assembler: &Assembler,
    psi: &BTreeMap<Blade, C64>,
    z: &ComplexPoint,
) -> f64 {
    let dims = problem.dims();
    let minors_at_z: BTreeMap<u32, C64> = assembler
        .minors
        .iter()
        .map(|(mask, p)| (*mask, p.eval(z).expect("dims")))
        .collect();
    let mut el = GradedElement::zero(dims);
    for (b, v) in psi {
        el.add_term(*b, *v);
    }
    let contracted = el.delta_big_f(&minors_at_z).expect("det flag present");
    let value = contracted.coeff(&Blade::scalar());
    let phi_z = problem.phi.eval(z).expect("dims");
    (phi_z - value).norm()
}

pub fn solve_division(problem: &DivisionProblem) -> Result<DivisionReport, DivisionError> {
    problem.validate()?;
    let assembler = Assembler::new(problem)?;
    let dims = problem.dims();
    let phi_scale = problem
        .test_points
        .iter()
        .map(|z| problem.phi.eval(z).expect("dims").norm())
        .fold(0.0f64, f64::max)
        .max(1e-300);

    let size_condition = size_condition_estimate(problem);

    let mut diagnostics = Diagnostics::default();
    let mut curve = Vec::new();
    if problem.convergence_curve {
        for shift in [2u32, 1u32] {
            let nodes = (problem.quad.nodes >> shift).max(64);
            if let Ok(out) = solve_core(problem, &assembler, nodes, None) {
                let (max_abs, _max_rel) = residual_summary(problem, &assembler, &out.psi);
                curve.push(CurvePoint {
                    nodes,
                    max_absolute_residual: max_abs,
                    max_relative_residual: max_abs / phi_scale,
                });
            }
        }
    }

    let solve = match solve_core(problem, &assembler, problem.quad.nodes, None) {
        Ok(out) => out,
        Err(err) => {
            diagnostics.failure = Some(err.to_string());
            return Ok(DivisionReport {
                mode: problem.mode,
                n: dims.n,
                m: dims.m,
                r: dims.r,
                size_condition,
                psi: Vec::new(),
                residuals: Vec::new(),
                max_absolute_residual: f64::INFINITY,
                max_relative_residual: f64::INFINITY,
                phi_scale,
                psi_fit: Vec::new(),
                diagnostics,
                verdict: Verdict::Fail,
            });
        }
    };

    let (max_abs, max_rel) = residual_summary(problem, &assembler, &solve.psi);
    curve.push(CurvePoint {
        nodes: problem.quad.nodes,
        max_absolute_residual: max_abs,
        max_relative_residual: max_rel,
    });

    let mut lambda_dev = None;
    if problem.lambda_crosscheck {
        // regularized route: weight by |F|^{2 lambda}, extrapolate each
        // component to lambda = 0 and compare with the direct evaluation.
        let mut per_lambda = Vec::new();
        let mut ok = true;
        for &l in &problem.schedule.lambdas {
            match solve_core(problem, &assembler, problem.quad.nodes, Some(l)) {
                Ok(out) => per_lambda.push(out.psi),
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            let mut worst = 0.0f64;
            for zi in 0..problem.test_points.len() {
                let mut blades: Vec<Blade> = solve.psi[zi].keys().cloned().collect();
                for pl in &per_lambda {
                    blades.extend(pl[zi].keys().cloned());
                }
                blades.sort_unstable();
                blades.dedup();
                for b in blades {
                    let series: Vec<C64> = per_lambda
                        .iter()
                        .map(|pl| pl[zi].get(&b).copied().unwrap_or(C64::new(0.0, 0.0)))
                        .collect();
                    if let Ok((v, _)) = quadrature::richardson_extrapolate(
                        &problem.schedule.lambdas,
                        &series,
                        &problem.schedule,
                    ) {
                        let direct =
                            solve.psi[zi].get(&b).copied().unwrap_or(C64::new(0.0, 0.0));
                        worst = worst.max((v - direct).norm());
                    }
                }
            }
            lambda_dev = Some(worst);
        }
    }

    let psi_samples: Vec<PsiSample> = problem
        .test_points
        .iter()
        .zip(&solve.psi)
        .map(|(z, map)| PsiSample {
            z: z.0.iter().map(|c| [c.re, c.im]).collect(),
            components: map
                .iter()
                .map(|(b, v)| PsiComponent {
                    e: (0..dims.m as u32)
                        .filter(|i| b.e & (1 << i) != 0)
                        .map(|i| i + 1)
                        .collect(),
                    value: [v.re, v.im],
                })
                .collect(),
        })
        .collect();

    let residuals: Vec<ResidualSample> = problem
        .test_points
        .iter()
        .zip(&solve.psi)
        .map(|(z, map)| {
            let abs = residual_at(problem, &assembler, map, z);
            ResidualSample {
                z: z.0.iter().map(|c| [c.re, c.im]).collect(),
                absolute: abs,
                relative: abs / phi_scale,
            }
        })
        .collect();

    let psi_fit = match problem.psi_fit_degree {
        Some(d) => fit_psi(problem, &solve.psi, d),
        None => Vec::new(),
    };

    diagnostics.nodes_total = solve.total;
    diagnostics.nodes_in_region = solve.in_region;
    diagnostics.nodes_skipped = solve.skipped;
    diagnostics.skipped_fraction = if solve.in_region > 0 {
        solve.skipped as f64 / solve.in_region as f64
    } else {
        0.0
    };
    diagnostics.error_estimate = Some(solve.err_est);
    diagnostics.convergence_curve = curve;
    diagnostics.lambda_crosscheck_max_deviation = lambda_dev;

    let mut report = DivisionReport {
        mode: problem.mode,
        n: dims.n,
        m: dims.m,
        r: dims.r,
        size_condition,
        psi: psi_samples,
        residuals,
        max_absolute_residual: max_abs,
        max_relative_residual: max_rel,
        phi_scale,
        psi_fit,
        diagnostics,
        verdict: Verdict::Fail,
    };
    report.verdict = verify_membership(&report, problem);
    Ok(report)
}

fn residual_summary(
    problem: &DivisionProblem,
    assembler: &Assembler,
    psi: &PsiMaps,
) -> (f64, f64) {
    let phi_scale = problem
        .test_points
        .iter()
        .map(|z| problem.phi.eval(z).expect("dims").norm())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let max_abs = problem
        .test_points
        .iter()
        .zip(psi)
        .map(|(z, map)| residual_at(problem, assembler, map, z))
        .fold(0.0f64, f64::max);
    (max_abs, max_abs / phi_scale)
}

/// Mechanical verdict from the thresholds: PASS needs a small residual and a
/// non-diverging size estimate; a small residual with a diverging size
/// estimate is INCONCLUSIVE.
pub fn verify_membership(report: &DivisionReport, problem: &DivisionProblem) -> Verdict {
    if report.diagnostics.failure.is_some() {
        return Verdict::Fail;
    }
    let residual_ok = report.max_relative_residual <= problem.residual_threshold;
    match (residual_ok, report.size_condition.holds) {
        (true, true) => Verdict::Pass,
        (true, false) => Verdict::Inconclusive,
        (false, _) => Verdict::Fail,
    }
}

/// Least-squares truncated power-series fit of the psi components over the
/// test points; readability output only, never used in the verdict.
fn fit_psi(problem: &DivisionProblem, psi: &PsiMaps, degree: u32) -> Vec<PsiFit> {
    let dims = problem.dims();
    let monos = monomials_up_to(problem.n, degree);
    let pts = &problem.test_points;
    if pts.len() < monos.len() {
        return Vec::new();
    }
    // collect all blades present
    let mut blades: Vec<Blade> = psi
        .iter()
        .flat_map(|m| m.keys().cloned())
        .collect();
    blades.sort_unstable();
    blades.dedup();
    let mut out = Vec::new();
    for b in blades {
        // normal equations A^H A x = A^H y
        let k = monos.len();
        let mut ata = vec![vec![C64::new(0.0, 0.0); k]; k];
        let mut aty = vec![C64::new(0.0, 0.0); k];
        for (zi, z) in pts.iter().enumerate() {
            let row: Vec<C64> = monos
                .iter()
                .map(|e| {
                    let mut v = C64::new(1.0, 0.0);
                    for (x, &p) in z.0.iter().zip(e.iter()) {
                        v *= x.powu(p);
                    }
                    v
                })
                .collect();
            let y = psi[zi].get(&b).copied().unwrap_or(C64::new(0.0, 0.0));
            for i in 0..k {
                for j in 0..k {
                    ata[i][j] += row[i].conj() * row[j];
                }
                aty[i] += row[i].conj() * y;
            }
        }
        if let Some(inv) = frames::linalg::invert(&ata) {
            let coeffs: Vec<[f64; 2]> = (0..k)
                .map(|i| {
                    let mut s = C64::new(0.0, 0.0);
                    for j in 0..k {
                        s += inv[i][j] * aty[j];
                    }
                    [s.re, s.im]
                })
                .collect();
            out.push(PsiFit {
                e: (0..dims.m as u32)
                    .filter(|i| b.e & (1 << i) != 0)
                    .map(|i| i + 1)
                    .collect(),
                monomials: monos.clone(),
                coefficients: coeffs,
            });
        }
    }
    out
}

fn monomials_up_to(n: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0u32; n]];
    for _ in 0..degree {
        let mut next = Vec::new();
        for e in &out {
            for i in 0..n {
                let mut e2 = e.clone();
                e2[i] += 1;
                next.push(e2);
            }
        }
        out.extend(next);
    }
    out.sort_unstable();
    out.dedup();
    out.retain(|e| e.iter().sum::<u32>() <= degree);
    out
}
