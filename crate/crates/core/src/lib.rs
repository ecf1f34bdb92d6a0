//! Invariant measures of translation-invariant interacting particle systems.
//!
//! The crate evaluates finite algebraic balance criteria (the local balance
//! table `Z` and its cyclic, line, master and replace functionals), searches
//! for candidate Markov kernels and product measures, and checks every
//! verdict against explicit finite generators on cycles, segments and tori.
//!
//! All computations are generic over [`Scalar`]; [`Exact`] and [`Float`] are
//! the two instantiations used in practice.

pub mod criteria;
pub mod error;
pub mod jrm;
pub mod kernel;
pub mod lattice2d;
pub mod models;
pub mod numerics;
pub mod oracle;
pub mod scalar;
pub mod search;
pub mod segment;
pub mod word;

pub use criteria::{CriterionContext, CriterionReport, Verdict};
pub use error::{Error, Result};
pub use jrm::{induced_rate, induced_rate_cyclic, BoundaryRates, JumpRateMatrix};
pub use kernel::{MarkovKernel, StationaryLaw};
pub use scalar::{Scalar, Tolerance};
pub use word::{Alphabet, Word};

/// Exact rational scalar.
pub type Exact = num_rational::BigRational;
/// Double precision scalar.
pub type Float = f64;
