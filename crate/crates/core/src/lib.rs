//! Limited-detection locality toolkit.
//!
//! Builds the polytope of correlations that local models can produce when
//! every hidden state must detect with probability between `eta_min` and
//! `eta_max`, decides membership of postselected correlations by linear
//! programming, and evaluates the two-party Hardy-type inequality, quantum
//! Born-rule correlations, the partial outcome-assignment scheme and the
//! mapping to measurement-dependent locality parameters.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod inequality;
pub mod io;
pub mod lp;
pub mod model;
pub mod quantum;
pub mod scalar;
pub mod schemes;
pub mod vertices;

pub use error::{LdlError, Result};
pub use model::{DetectionBounds, FullCorrelation, ObservedEfficiencies, Outcome, PostselectedCorrelation, Scenario};
pub use scalar::{Rational, Scalar};
