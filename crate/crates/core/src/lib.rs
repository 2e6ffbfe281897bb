//! Fixed-point machinery for suprametric spaces.
//!
//! A suprametric relaxes the triangle inequality to
//! `d(x, y) <= d(x, z) + d(z, y) + rho * d(x, z) * d(z, y)`. This crate provides:
//!
//! * [`space`]: finite and interval suprametric spaces, axiom checks and the
//!   metric-to-suprametric transforms.
//! * [`contraction`]: verifiers for Banach, convex order-m, Ciric, Sehgal,
//!   Ciric-variant and Fisher conditions plus continuity-type diagnostics.
//! * [`picard`]: Picard iteration with a-priori step bounds and Cauchy tail
//!   estimates.
//! * [`fredholm`]: a quadrature-discretised Fredholm solver on the sup-norm
//!   suprametric with certified contraction constants.
//! * [`kexpr`]: a small expression language for kernels and maps.
//! * [`corpus`]: executable fixtures for the worked examples.
//! * [`format`]: the JSON/CSV file formats consumed by the CLI.

pub mod contraction;
pub mod corpus;
pub mod format;
pub mod fredholm;
pub mod kexpr;
pub mod picard;
pub mod space;

pub use contraction::{ContractionSpec, NMap, SelfMap, Verdict, VerificationReport};
pub use picard::{OrbitTrace, StoppingCriteria};
pub use space::{FiniteSpace, IntervalForm, IntervalSpace, Suprametric};
