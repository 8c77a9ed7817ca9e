//! mdbook cannot run the guide's code blocks as tests by itself, so this
//! crate includes each chapter as a module doc and lets `cargo test --doc`
//! execute every snippet against the real `bsdiv`. A chapter edit that
//! breaks a snippet breaks the build.

#[doc = include_str!("../../../book/src/overview.md")]
pub mod overview {}

#[doc = include_str!("../../../book/src/polynomials.md")]
pub mod polynomials {}

#[doc = include_str!("../../../book/src/superalgebra.md")]
pub mod superalgebra {}

#[doc = include_str!("../../../book/src/frames.md")]
pub mod frames {}

#[doc = include_str!("../../../book/src/hefer.md")]
pub mod hefer {}

#[doc = include_str!("../../../book/src/kernel.md")]
pub mod kernel {}

#[doc = include_str!("../../../book/src/quadrature.md")]
pub mod quadrature {}

#[doc = include_str!("../../../book/src/division.md")]
pub mod division {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
