//! Numerical division formulas for polynomial matrices on the unit ball in
//! C^n: given an r x m polynomial matrix f and a polynomial phi satisfying a
//! size condition, the library produces a holomorphic solution psi of the
//! contraction equation `delta_F psi = phi` (membership in the determinant,
//! product or power ideal), evaluates lambda-regularized residue pairings,
//! and machine-checks the algebraic identities everything rests on.
//!
//! The layers, bottom up:
//!
//! * [`poly`] - exact sparse polynomial arithmetic over complex coefficients
//!   with evaluation and holomorphic gradients;
//! * [`graded`] - the finite superalgebra of pointwise form values with the
//!   contraction operators `delta_f`, `delta_F`, `delta_eta` and the wedge;
//! * [`frames`] - minimal-inverse data `sigma = f*(ff*)^{-1}`, its
//!   antiholomorphic derivative in closed form, and the forms `u_k`;
//! * [`hefer`] - divided-difference quotients and the operators
//!   `(delta_h)_k` realizing `delta_eta h = f(zeta) - f(z)`;
//! * [`kernel`] - the compactly supported Cauchy-Fantappie weight `g`;
//! * [`quadrature`] - deterministic integration over balls and shells plus
//!   lambda-regularized residue pairings with extrapolation to lambda = 0;
//! * [`division`] - the end-to-end solver and membership verdicts;
//! * [`cli`] - JSON schemas and the `divide` / `identities` / `residue` /
//!   `size-check` command surface.
//!
//! A worked guide with runnable snippets lives in `book/`; the
//! `bsdiv-book` crate keeps those snippets compiling.

pub mod poly;
pub mod graded;
pub mod frames;
pub mod hefer;
pub mod kernel;
pub mod quadrature;
pub mod division;
pub mod cli;

pub use graded::{Blade, Dims, GradedElement};
pub use poly::{C64, CPolynomial, ComplexPoint};
