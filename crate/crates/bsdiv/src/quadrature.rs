//! Deterministic numerical integration of top-degree (n,n) components over
//! balls and cutoff shells in C^n, plus lambda-regularized residue pairings
//! with extrapolation to lambda = 0.
//!
//! Node evaluation is embarrassingly parallel; accumulation is a fixed-order
//! fold over fixed-size chunks, so results are bit-stable for a given config
//! regardless of worker count.

use crate::division;
use crate::frames::PolyMatrix;
use crate::graded::{Blade, Dims, GradedElement};
use crate::poly::{C64, CPolynomial, ComplexPoint};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use thiserror::Error;

pub const MAX_SKIPPED_FRACTION: f64 = 1e-3;
const CHUNK: usize = 8192;
/// Exponent of the radial clustering map used for residue pairings; with the
/// default schedule bottoming out at lambda = 0.05 it keeps the mapped radial
/// integrand bounded.
const RADIAL_MAP_POWER: f64 = 10.0;
/// Admissibility gate for residue nodes. The clustering map intentionally
/// places nodes exponentially close to the degeneracy set, where the frame is
/// still computable in f64; only true zeros are skipped.
const RESIDUE_GRAM_THRESHOLD: f64 = 1e-280;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("too many nodes skipped as singular: {skipped} of {in_region}")]
    TooManySkippedNodes { skipped: usize, in_region: usize },
    #[error("extrapolation diverged: last gap {gap:.3e} exceeds 10 x target tolerance {tol:.3e}")]
    ExtrapolationDiverged { gap: f64, tol: f64 },
    #[error("scheme {0:?} does not support base dimension {1}")]
    UnsupportedScheme(Scheme, usize),
}

/// Marker returned by integrands at inadmissible nodes; the node is skipped
/// and counted in the diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct SkipNode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    GaussPolar,
    QmcHalton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Ball { radius: f64 },
    Shell { inner: f64, outer: f64 },
}

impl Region {
    fn outer(&self) -> f64 {
        match self {
            Region::Ball { radius } => *radius,
            Region::Shell { outer, .. } => *outer,
        }
    }

    fn contains_sq(&self, rho_sq: f64) -> bool {
        match self {
            Region::Ball { radius } => rho_sq <= radius * radius,
            Region::Shell { inner, outer } => {
                rho_sq >= inner * inner && rho_sq <= outer * outer
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub scheme: Scheme,
    /// Gauss-polar: the radial count (the angular count is twice that).
    /// QMC: the total node count.
    pub nodes: usize,
    pub seed: u64,
    /// Enables the singularity-adapted radial maps in residue pairings and
    /// the antithetic pairing of QMC nodes.
    pub near_z_refinement: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            scheme: Scheme::QmcHalton,
            nodes: 1 << 18,
            seed: 7,
            near_z_refinement: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularizationSchedule {
    /// Strictly decreasing positive regularization exponents.
    pub lambdas: Vec<f64>,
    pub order: usize,
    pub target_tol: f64,
}

impl Default for RegularizationSchedule {
    fn default() -> Self {
        RegularizationSchedule {
            lambdas: vec![0.4, 0.2, 0.1, 0.05],
            order: 2,
            target_tol: 1e-2,
        }
    }
}

impl RegularizationSchedule {
    pub fn validate(&self) -> Result<(), String> {
        if self.lambdas.is_empty() {
            return Err("empty lambda schedule".into());
        }
        for w in self.lambdas.windows(2) {
            if !(w[1] > 0.0 && w[1] < w[0]) {
                return Err("lambda schedule must be strictly decreasing and positive".into());
            }
        }
        if self.lambdas[0] <= 0.0 {
            return Err("lambda schedule must be positive".into());
        }
        Ok(())
    }
}

/// Orientation constant converting the coefficient of
/// dz_1^..^dz_n^dzbar_1^..^dzbar_n into Lebesgue measure:
/// (-1)^{n(n-1)/2} (-2i)^n.
pub fn orientation_constant(n: usize) -> C64 {
    let sign = if (n * (n - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let mut acc = Complex64::new(sign, 0.0);
    for _ in 0..n {
        acc *= Complex64::new(0.0, -2.0);
    }
    acc
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut t = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_eval(n, t);
            let dt = -p / dp;
            t += dt;
            if dt.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_eval(n, t);
        x[i] = -t;
        x[n - 1 - i] = t;
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0f64;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

const HALTON_PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Per-dimension random digit permutations for scrambled Halton points.
#[derive(Debug, Clone)]
pub(crate) struct HaltonScrambler {
    perms: Vec<Vec<u32>>,
}

impl HaltonScrambler {
    fn new(dims: usize, seed: u64) -> Self {
        assert!(dims <= HALTON_PRIMES.len(), "too many QMC dimensions");
        let perms = (0..dims)
            .map(|d| {
                let base = HALTON_PRIMES[d];
                let mut perm: Vec<u32> = (0..base).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(
                    seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(d as u64),
                );
                perm.shuffle(&mut rng);
                perm
            })
            .collect();
        HaltonScrambler { perms }
    }

    /// Scrambled radical inverse of `index` in the base of dimension `d`,
    /// with the infinite tail of scrambled zero digits summed analytically.
    fn coordinate(&self, d: usize, index: usize) -> f64 {
        let base = HALTON_PRIMES[d] as usize;
        let perm = &self.perms[d];
        let bf = base as f64;
        let mut x = 0.0f64;
        let mut scale = 1.0 / bf;
        let mut i = index;
        while i > 0 {
            let digit = i % base;
            x += perm[digit] as f64 * scale;
            scale /= bf;
            i /= base;
        }
        // remaining digits are all zero: sum perm[0] * b^{-k} for k > len
        x += perm[0] as f64 * scale * bf / (bf - 1.0);
        x
    }
}

/// A deterministic indexed node set; `node(i)` either yields a point with its
/// quadrature weight or reports that index as outside the region.
pub(crate) enum NodeSet {
    GaussPolar {
        radial: Vec<(f64, f64)>, // (rho, w including rho and the radial jacobian)
        n_theta: usize,
    },
    Qmc {
        scrambler: HaltonScrambler,
        n: usize,
        region: Region,
        half_width: f64,
        weight: f64,
        antithetic: bool,
        total: usize,
    },
    /// Radial Gauss-Legendre with a clustering power map times Halton points
    /// on the unit sphere S^3 (n = 2 only).
    PolarSphere {
        radial: Vec<(f64, f64)>, // (rho, radial weight including rho^3 jacobian)
        scrambler: HaltonScrambler,
        angular: usize,
    },
}

impl NodeSet {
    pub(crate) fn build(
        region: Region,
        cfg: &QuadratureConfig,
        n: usize,
    ) -> Result<NodeSet, QuadratureError> {
        match cfg.scheme {
            Scheme::GaussPolar => {
                if n != 1 {
                    return Err(QuadratureError::UnsupportedScheme(cfg.scheme, n));
                }
                let (lo, hi) = match region {
                    Region::Ball { radius } => (0.0, radius),
                    Region::Shell { inner, outer } => (inner, outer),
                };
                let nr = cfg.nodes.max(4);
                let (xs, ws) = gauss_legendre(nr);
                let radial = xs
                    .iter()
                    .zip(&ws)
                    .map(|(&x, &w)| {
                        let rho = lo + (hi - lo) * (x + 1.0) / 2.0;
                        (rho, w * (hi - lo) / 2.0 * rho)
                    })
                    .collect();
                Ok(NodeSet::GaussPolar {
                    radial,
                    n_theta: 2 * nr,
                })
            }
            Scheme::QmcHalton => {
                let half_width = region.outer();
                let total = cfg.nodes.max(16);
                let vol = (2.0 * half_width).powi(2 * n as i32);
                Ok(NodeSet::Qmc {
                    scrambler: HaltonScrambler::new(2 * n, cfg.seed),
                    n,
                    region,
                    half_width,
                    weight: vol / total as f64,
                    antithetic: cfg.near_z_refinement,
                    total,
                })
            }
        }
    }

    /// Radially clustered node set for integrands concentrating at the
    /// origin: rho = R t^gamma with Gauss-Legendre in t.
    pub(crate) fn build_radial_mapped(
        radius: f64,
        cfg: &QuadratureConfig,
        n: usize,
    ) -> Result<NodeSet, QuadratureError> {
        let gamma = RADIAL_MAP_POWER;
        match n {
            1 => {
                let nr = cfg.nodes.max(16);
                let (xs, ws) = gauss_legendre(nr);
                let radial = xs
                    .iter()
                    .zip(&ws)
                    .map(|(&x, &w)| {
                        let t = (x + 1.0) / 2.0;
                        let rho = radius * t.powf(gamma);
                        let drho = radius * gamma * t.powf(gamma - 1.0) * 0.5;
                        (rho, w * drho * rho)
                    })
                    .collect();
                Ok(NodeSet::GaussPolar {
                    radial,
                    n_theta: 2 * nr,
                })
            }
            2 => {
                let nr = 64usize;
                let angular = (cfg.nodes / nr).max(256);
                let (xs, ws) = gauss_legendre(nr);
                let radial = xs
                    .iter()
                    .zip(&ws)
                    .map(|(&x, &w)| {
                        let t = (x + 1.0) / 2.0;
                        let rho = radius * t.powf(gamma);
                        let drho = radius * gamma * t.powf(gamma - 1.0) * 0.5;
                        (rho, w * drho * rho.powi(3))
                    })
                    .collect();
                Ok(NodeSet::PolarSphere {
                    radial,
                    scrambler: HaltonScrambler::new(3, cfg.seed),
                    angular,
                })
            }
            _ => Err(QuadratureError::UnsupportedScheme(Scheme::QmcHalton, n)),
        }
    }

    pub(crate) fn total(&self) -> usize {
        match self {
            NodeSet::GaussPolar { radial, n_theta } => radial.len() * n_theta,
            NodeSet::Qmc { total, .. } => *total,
            NodeSet::PolarSphere {
                radial, angular, ..
            } => radial.len() * angular,
        }
    }

    /// Returns (point, weight) or None when the index falls outside the
    /// region (QMC box rejection).
    pub(crate) fn node(&self, idx: usize) -> Option<(ComplexPoint, f64)> {
        match self {
            NodeSet::GaussPolar { radial, n_theta } => {
                let ir = idx / n_theta;
                let it = idx % n_theta;
                let (rho, wr) = radial[ir];
                let theta = 2.0 * PI * (it as f64 + 0.5) / *n_theta as f64;
                let w = wr * 2.0 * PI / *n_theta as f64;
                Some((
                    ComplexPoint(vec![Complex64::from_polar(rho, theta)]),
                    w,
                ))
            }
            NodeSet::Qmc {
                scrambler,
                n,
                region,
                half_width,
                weight,
                antithetic,
                ..
            } => {
                let (base_idx, sign) = if *antithetic {
                    (idx / 2, if idx % 2 == 0 { 1.0 } else { -1.0 })
                } else {
                    (idx, 1.0)
                };
                let mut coords = Vec::with_capacity(*n);
                let mut rho_sq = 0.0;
                for j in 0..*n {
                    let re = (2.0 * scrambler.coordinate(2 * j, base_idx) - 1.0)
                        * half_width
                        * sign;
                    let im = (2.0 * scrambler.coordinate(2 * j + 1, base_idx) - 1.0)
                        * half_width
                        * sign;
                    rho_sq += re * re + im * im;
                    coords.push(Complex64::new(re, im));
                }
                if !region.contains_sq(rho_sq) {
                    return None;
                }
                Some((ComplexPoint(coords), *weight))
            }
            NodeSet::PolarSphere {
                radial,
                scrambler,
                angular,
            } => {
                let ir = idx / angular;
                let ia = idx % angular;
                let (rho, wr) = radial[ir];
                let v = scrambler.coordinate(0, ia);
                let a1 = 2.0 * PI * scrambler.coordinate(1, ia);
                let a2 = 2.0 * PI * scrambler.coordinate(2, ia);
                let c1 = Complex64::from_polar(rho * (1.0 - v).sqrt(), a1);
                let c2 = Complex64::from_polar(rho * v.sqrt(), a2);
                // S^3 measure in these coordinates: (1/2) dv da1 da2.
                let w = wr * (2.0 * PI) * (2.0 * PI) * 0.5 / *angular as f64;
                Some((ComplexPoint(vec![c1, c2]), w))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct IntegrationOutput {
    /// Map from the residual blade (e-part, alpha, det flag) to the integral
    /// of its (n,n) coefficient, orientation constant applied.
    pub components: BTreeMap<Blade, C64>,
    pub nodes_total: usize,
    pub nodes_in_region: usize,
    pub nodes_skipped: usize,
    /// First-half vs full-sum discrepancy for QMC node sets.
    pub error_estimate: Option<f64>,
}

impl IntegrationOutput {
    pub fn scalar(&self) -> C64 {
        self.components
            .values()
            .fold(C64::new(0.0, 0.0), |a, b| a + b)
    }
}

struct ChunkSum {
    full: BTreeMap<Blade, C64>,
    half: BTreeMap<Blade, C64>,
    in_region: usize,
    skipped: usize,
    weight_in_region: f64,
    weight_skipped: f64,
}

pub fn integrate_top<F>(
    integrand: &F,
    region: Region,
    cfg: &QuadratureConfig,
    dims: Dims,
) -> Result<IntegrationOutput, QuadratureError>
where
    F: Fn(&ComplexPoint) -> Result<GradedElement, SkipNode> + Sync,
{
    let provider = NodeSet::build(region, cfg, dims.n)?;
    integrate_with_provider(integrand, &provider, dims)
}

pub(crate) fn integrate_with_provider<F>(
    integrand: &F,
    provider: &NodeSet,
    dims: Dims,
) -> Result<IntegrationOutput, QuadratureError>
where
    F: Fn(&ComplexPoint) -> Result<GradedElement, SkipNode> + Sync,
{
    let total = provider.total();
    let half_cut = total / 2;
    let n_chunks = (total + CHUNK - 1) / CHUNK;
    let partials: Vec<ChunkSum> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * CHUNK;
            let hi = ((ci + 1) * CHUNK).min(total);
            let mut sum = ChunkSum {
                full: BTreeMap::new(),
                half: BTreeMap::new(),
                in_region: 0,
                skipped: 0,
                weight_in_region: 0.0,
                weight_skipped: 0.0,
            };
            for idx in lo..hi {
                let (point, weight) = match provider.node(idx) {
                    Some(p) => p,
                    None => continue,
                };
                sum.in_region += 1;
                sum.weight_in_region += weight.abs();
                match integrand(&point) {
                    Ok(el) => {
                        for (blade, coeff) in el.top_form_payload() {
                            let entry = sum
                                .full
                                .entry(blade)
                                .or_insert(C64::new(0.0, 0.0));
                            *entry += coeff * weight;
                            if idx < half_cut {
                                let e2 =
                                    sum.half.entry(blade).or_insert(C64::new(0.0, 0.0));
                                *e2 += coeff * weight;
                            }
                        }
                    }
                    Err(SkipNode) => {
                        sum.skipped += 1;
                        sum.weight_skipped += weight.abs();
                    }
                }
            }
            sum
        })
        .collect();

    let mut full: BTreeMap<Blade, C64> = BTreeMap::new();
    let mut half: BTreeMap<Blade, C64> = BTreeMap::new();
    let mut in_region = 0usize;
    let mut skipped = 0usize;
    let mut weight_in = 0.0f64;
    let mut weight_skipped = 0.0f64;
    for part in partials {
        for (b, v) in part.full {
            *full.entry(b).or_insert(C64::new(0.0, 0.0)) += v;
        }
        for (b, v) in part.half {
            *half.entry(b).or_insert(C64::new(0.0, 0.0)) += v;
        }
        in_region += part.in_region;
        skipped += part.skipped;
        weight_in += part.weight_in_region;
        weight_skipped += part.weight_skipped;
    }
    // The budget is on the discarded measure, not the node count: the
    // clustering rules put many low-weight nodes right next to the
    // degeneracy set on purpose.
    if weight_in > 0.0 && weight_skipped > MAX_SKIPPED_FRACTION * weight_in {
        return Err(QuadratureError::TooManySkippedNodes { skipped, in_region });
    }
    let cn = orientation_constant(dims.n);
    let err_est = match provider {
        NodeSet::Qmc { .. } => {
            let mut worst = 0.0f64;
            for (b, v) in &full {
                let h = half.get(b).copied().unwrap_or(C64::new(0.0, 0.0));
                worst = worst.max((v - h * 2.0).norm() * cn.norm());
            }
            Some(worst)
        }
        _ => None,
    };
    let components = full
        .into_iter()
        .map(|(b, v)| (b, v * cn))
        .filter(|(_, v)| *v != C64::new(0.0, 0.0))
        .collect();
    Ok(IntegrationOutput {
        components,
        nodes_total: total,
        nodes_in_region: in_region,
        nodes_skipped: skipped,
        error_estimate: err_est,
    })
}

/// Polynomial extrapolation of the sampled values to lambda = 0 (Neville),
/// depth capped at `sched.order`. Errors out when the two deepest estimates
/// are not Cauchy within 10 x the target tolerance.
pub fn richardson_extrapolate(
    lambdas: &[f64],
    values: &[C64],
    sched: &RegularizationSchedule,
) -> Result<(C64, f64), QuadratureError> {
    assert_eq!(lambdas.len(), values.len());
    assert!(!values.is_empty());
    let len = values.len();
    let depth = sched.order.min(len - 1);
    // table[i] holds P over the window starting at i with current width j.
    let mut table: Vec<C64> = values.to_vec();
    let mut prev_best = table[len - 1];
    let mut best = table[len - 1];
    for j in 1..=depth {
        for i in 0..(len - j) {
            let num = table[i] * lambdas[i + j] - table[i + 1] * lambdas[i];
            table[i] = num / (lambdas[i + j] - lambdas[i]);
        }
        prev_best = best;
        best = table[len - 1 - j];
    }
    let gap = (best - prev_best).norm();
    if depth >= 1 && gap > 10.0 * sched.target_tol {
        return Err(QuadratureError::ExtrapolationDiverged {
            gap,
            tol: sched.target_tol,
        });
    }
    Ok((best, gap))
}

#[derive(Debug, Clone)]
pub struct ResiduePairing {
    pub lambda_table: Vec<(f64, C64)>,
    pub value: C64,
    pub error_estimate: f64,
    pub nodes_in_region: usize,
    pub nodes_skipped: usize,
}

/// The pairing of the regularized residue of order k against
/// `phi * testform`: for each lambda in the schedule integrates
/// `dbar(|F|^{2 lambda}) ^ u_k * phi ^ testform` and extrapolates to 0.
pub fn residue_pair<Ft>(
    f: &PolyMatrix,
    k: u32,
    phi: &CPolynomial,
    testform: &Ft,
    sched: &RegularizationSchedule,
    cfg: &QuadratureConfig,
) -> Result<ResiduePairing, QuadratureError>
where
    Ft: Fn(&ComplexPoint) -> GradedElement + Sync,
{
    sched.validate().map_err(|_| QuadratureError::ExtrapolationDiverged {
        gap: f64::INFINITY,
        tol: sched.target_tol,
    })?;
    let dims = f.dims();
    let minors = division::determinant_section(f).expect("valid matrix shape");
    let minor_grads: BTreeMap<u32, Vec<CPolynomial>> = minors
        .iter()
        .map(|(mask, p)| (*mask, (0..dims.n).map(|l| p.derivative(l)).collect()))
        .collect();

    let provider = if cfg.near_z_refinement {
        NodeSet::build_radial_mapped(1.0, cfg, dims.n)?
    } else {
        NodeSet::build(Region::Ball { radius: 1.0 }, cfg, dims.n)?
    };

    let mut table = Vec::with_capacity(sched.lambdas.len());
    let mut in_region = 0;
    let mut skipped = 0;
    for &lambda in &sched.lambdas {
        let integrand = |zeta: &ComplexPoint| -> Result<GradedElement, SkipNode> {
            let fp = crate::frames::frame_at_with_threshold(f, zeta, RESIDUE_GRAM_THRESHOLD)
                .map_err(|_| SkipNode)?;
            let uk = crate::frames::u_form(&fp, k);
            if uk.is_zero() {
                return Ok(GradedElement::zero(dims));
            }
            // |F|^2 and sum_I F_I conj(d_l F_I)
            let mut f2 = 0.0f64;
            let mut grad_pair = vec![C64::new(0.0, 0.0); dims.n];
            for (mask, p) in &minors {
                let fi = p.eval(zeta).expect("dims");
                f2 += fi.norm_sqr();
                for l in 0..dims.n {
                    let d = minor_grads[mask][l].eval(zeta).expect("dims");
                    grad_pair[l] += fi * d.conj();
                }
            }
            if f2 <= 0.0 {
                return Err(SkipNode);
            }
            let w = lambda * f2.powf(lambda - 1.0);
            let mut dbar_weight = GradedElement::zero(dims);
            for l in 0..dims.n {
                dbar_weight.add_assign(&GradedElement::dzbar_gen(
                    dims,
                    l + 1,
                    grad_pair[l] * w,
                ));
            }
            let phi_val = phi.eval(zeta).expect("dims");
            let test = testform(zeta);
            let el = dbar_weight
                .wedge(&uk)
                .expect("same dims")
                .scale(phi_val)
                .wedge(&test)
                .expect("same dims");
            Ok(el)
        };
        let out = integrate_with_provider(&integrand, &provider, dims)?;
        in_region = out.nodes_in_region;
        skipped = out.nodes_skipped;
        // Component-wise pairing: the regularized current acts on the form
        // part only, with the E-part factored out on the left. Wedging the
        // dzbar-weight through the e-generators of u_k introduced a sign
        // (-1)^{#e} per blade relative to that reading; undo it here.
        let mut value = C64::new(0.0, 0.0);
        for (blade, coeff) in &out.components {
            let sign = if blade.e.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            value += coeff * sign;
        }
        table.push((lambda, value));
    }
    let values: Vec<C64> = table.iter().map(|(_, v)| *v).collect();
    let (value, error_estimate) = richardson_extrapolate(&sched.lambdas, &values, sched)?;
    Ok(ResiduePairing {
        lambda_table: table,
        value,
        error_estimate,
        nodes_in_region: in_region,
        nodes_skipped: skipped,
    })
}

/// A smooth compactly supported bump: 1 near the origin, identically 0 for
/// |zeta| >= scale; the ramp reuses the kernel cutoff profile.
pub fn bump_test_factor(scale: f64, zeta: &ComplexPoint) -> f64 {
    let t = zeta.norm_sqr() / (scale * scale);
    // plateau up to 0.4 scale^2, ramp to zero at scale^2
    if t <= 0.16 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let s = (t - 0.16) / (1.0 - 0.16);
    let ramp = |x: f64| if x <= 0.0 { 0.0 } else { (-1.0 / x).exp() };
    ramp(1.0 - s) / (ramp(s) + ramp(1.0 - s))
}
