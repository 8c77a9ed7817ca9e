//! The weighted Cauchy-Fantappie form g with an explicit smooth cutoff.
//!
//! `g(zeta, z) = chi(|zeta|^2) - dbar(chi) ^ sum_{k=1}^n (2 pi i)^{-k}
//!  d|zeta|^2 ^ (dbar d|zeta|^2)^{k-1} / (|zeta|^2 - <z, zeta>)^k`.
//!
//! The cutoff is identically 1 for |zeta| <= r0 and 0 for |zeta| >= r1, so
//! g - chi is supported on the shell r0 <= |zeta| <= r1, where the
//! denominator is bounded away from zero for |z| < 1.

use crate::graded::{Dims, GradedElement};
use crate::poly::{C64, ComplexPoint};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("z with |z| = {norm:.3} is outside the open unit ball")]
    PointOutsideDomain { norm: f64 },
}

/// Identifier of the scalar bump profile for the cutoff ramp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BumpProfile {
    /// Partition-of-unity ramp built from exp(-1/s); all derivatives vanish
    /// at both ends of the transition.
    SmoothExp,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KernelConfig {
    /// chi == 1 for |zeta| <= r0.
    pub r0: f64,
    /// chi == 0 for |zeta| >= r1.
    pub r1: f64,
    pub profile: BumpProfile,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            r0: 1.05,
            r1: 1.2,
            profile: BumpProfile::SmoothExp,
        }
    }
}

impl KernelConfig {
    pub fn new(r0: f64, r1: f64) -> Self {
        assert!(1.0 < r0 && r0 < r1, "need 1 < r0 < r1");
        KernelConfig {
            r0,
            r1,
            profile: BumpProfile::SmoothExp,
        }
    }
}

fn ramp(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

fn ramp_deriv(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp() / (s * s)
    }
}

/// The cutoff profile in the squared-radius variable t = |zeta|^2 and its
/// analytic derivative d(chi)/dt.
pub fn chi(cfg: &KernelConfig, t: f64) -> (f64, f64) {
    let a = cfg.r0 * cfg.r0;
    let b = cfg.r1 * cfg.r1;
    if t <= a {
        return (1.0, 0.0);
    }
    if t >= b {
        return (0.0, 0.0);
    }
    let s = (t - a) / (b - a);
    let u = ramp(s);
    let v = ramp(1.0 - s);
    let denom = u + v;
    let value = v / denom;
    // d/ds [v/(u+v)] = (v' u - v u') / (u+v)^2 with v' = -ramp'(1-s).
    let du = ramp_deriv(s);
    let dv = -ramp_deriv(1.0 - s);
    let dvalue_ds = (dv * u - v * du) / (denom * denom);
    (value, dvalue_ds / (b - a))
}

/// Pointwise value of g as a graded element (no e-generators; components of
/// bidegree (k, k) for k = 0..n).
pub fn g_form(
    cfg: &KernelConfig,
    dims: Dims,
    zeta: &ComplexPoint,
    z: &ComplexPoint,
) -> Result<GradedElement, KernelError> {
    let n = dims.n;
    assert_eq!(zeta.dim(), n);
    assert_eq!(z.dim(), n);
    let zn = z.norm();
    if zn >= 1.0 {
        return Err(KernelError::PointOutsideDomain { norm: zn });
    }
    let t = zeta.norm_sqr();
    let (chi_val, chi_der) = chi(cfg, t);
    let mut g = GradedElement::scalar(dims, C64::new(chi_val, 0.0));
    if chi_der == 0.0 {
        return Ok(g);
    }
    // dbar chi = chi'(t) sum_l zeta_l dzbar_l
    let mut dbar_chi = GradedElement::zero(dims);
    for l in 0..n {
        dbar_chi.add_assign(&GradedElement::dzbar_gen(
            dims,
            l + 1,
            zeta.0[l] * chi_der,
        ));
    }
    // d|zeta|^2 = sum_l conj(zeta_l) dz_l
    let mut d_norm = GradedElement::zero(dims);
    for l in 0..n {
        d_norm.add_assign(&GradedElement::dz_gen(dims, l + 1, zeta.0[l].conj()));
    }
    // beta = dbar d|zeta|^2 = sum_l dzbar_l ^ dz_l
    let mut beta = GradedElement::zero(dims);
    for l in 0..n {
        let term = GradedElement::dzbar_gen(dims, l + 1, C64::new(1.0, 0.0))
            .wedge(&GradedElement::dz_gen(dims, l + 1, C64::new(1.0, 0.0)))
            .expect("same dims");
        beta.add_assign(&term);
    }
    // denominator |zeta|^2 - <zbar, z>; on the support of dbar chi it is
    // bounded below by |zeta|^2 (1 - |z|).
    let mut denom = C64::new(t, 0.0);
    for l in 0..n {
        denom -= zeta.0[l].conj() * z.0[l];
    }
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let mut cf_sum = GradedElement::zero(dims);
    let mut beta_power = GradedElement::one(dims);
    let mut denom_power = C64::new(1.0, 0.0);
    let mut tpi_power = C64::new(1.0, 0.0);
    for k in 1..=n as u32 {
        denom_power *= denom;
        tpi_power *= two_pi_i;
        if k > 1 {
            beta_power = beta_power.wedge(&beta).expect("same dims");
        }
        let factor = C64::new(1.0, 0.0) / (tpi_power * denom_power);
        let term = d_norm.wedge(&beta_power).expect("same dims").scale(factor);
        cf_sum.add_assign(&term);
    }
    let correction = dbar_chi.wedge(&cf_sum).expect("same dims");
    g.add_assign(&correction.scale(C64::new(-1.0, 0.0)));
    Ok(g)
}
