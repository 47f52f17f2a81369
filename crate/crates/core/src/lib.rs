//! Numerical laboratory for the series `Σ (-1)^n t^n f^(n)(t) / n!`.
//!
//! Derivatives of every catalog function come from truncated Taylor jets
//! built at arbitrary precision; the hat-series terms, partial sums and
//! diagnostics are all read off one jet per point.

pub mod catalog;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod hatseries;
pub mod jet;
pub mod numerics;

pub use catalog::{Catalog, FunctionSpec, SeriesTruncation};
pub use error::{Error, Result};
pub use jet::Jet;
pub use numerics::{make_context, parse_scalar, BigComplex, BigReal, PrecisionContext, Scalar};
