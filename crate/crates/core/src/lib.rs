//! Phase retrieval with multivariate Von Mises phase priors.
//!
//! Observations `y = Diag(e^{jθ})ᴴ A x + n` carry magnitudes and noisy phases.
//! A MAP estimate of the phases under a multivariate Von Mises prior reduces
//! to a unit-modulus QCQP `min uᴴQu`, which is relaxed to a semidefinite
//! program and solved by block-coordinate descent ("informed PhaseCut").
//! With an uninformative prior the same machinery is plain PhaseCut.
//!
//! Module map:
//! - [`numeric`]: shared matrix aliases and numeric helpers.
//! - [`priors`]: Von Mises densities and precision matrices.
//! - [`model`]: instance generation and signal recovery.
//! - [`problem`]: the lifted Q-matrix and its objectives.
//! - [`solvers`]: BCD lifting and phase extraction.
//! - [`harness`]: Monte-Carlo experiments and CSV output.

pub mod error;
pub mod harness;
pub mod model;
pub mod numeric;
pub mod priors;
pub mod problem;
pub mod solvers;

pub use error::{Error, Result};
