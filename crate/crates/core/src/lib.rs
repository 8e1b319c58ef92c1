//! Algebraic space-time lattice codes for the MIMO multiple access channel.
//!
//! The crate builds multi-user codes from cyclic division algebras over
//! towers of number fields, certifies their joint rank behaviour with exact
//! arithmetic, measures how minimum determinants decay as per-user code sizes
//! grow, computes exact rational diversity-multiplexing tradeoff curves, and
//! runs small Monte-Carlo channel simulations.
//!
//! Exact computations use arbitrary-precision rationals throughout; floating
//! point appears only at the numeric embedding boundary. The numeric kernels
//! are generic over the [`scalar::Real`] scalar (f32 or f64); the aliases
//! below fix the default precision used by the CLI and the test suites.
//!
//! Module map:
//! - [`cyclotomic`]: exact arithmetic in Q(zeta_n), the ambient field for
//!   every algebraic number here.
//! - [`tower`]: the field towers K < F < L, inert prime certificates,
//!   relative norms and p-adic valuations.
//! - [`code`]: left regular representations, per-user block rows, joint
//!   codeword matrices and exact rank certificates.
//! - [`decay`]: minimum-determinant search, decay bound exponents, the
//!   pigeonhole witness machinery and the determinant lemma helpers.
//! - [`dmt`]: exact rational piecewise-linear DMT curves and thresholds.
//! - [`sim`]: Rayleigh MAC Monte-Carlo with joint ML and bounded-distance
//!   decoding.

pub mod code;
pub mod cyclotomic;
pub mod decay;
pub mod dmt;
pub mod error;
pub mod numeric;
pub mod par;
pub mod rng;
pub mod scalar;
pub mod serde_util;
pub mod sim;
pub mod tower;

pub use code::MacCode;
pub use cyclotomic::{CyclotomicElement, Rational};
pub use error::{Error, Result};
pub use tower::TowerSpec;

/// Default floating-point scalar.
pub type Real = f64;
/// Default complex scalar.
pub type Cx = num_complex::Complex<Real>;
