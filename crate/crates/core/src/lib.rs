//! Bi-directional causal effect estimation between two traits with possibly
//! invalid instruments.
//!
//! One ordering `(D, D')` is handled by [`pch::pch`]: a plurality vote over
//! Wald ratios estimates `D → D'`, and covariance heterogeneity of the
//! residual estimates `D' → D`. [`inference::infer`] combines both orderings
//! into a direction call and confidence intervals.

pub mod baselines;
pub mod ch;
pub mod dgp;
pub mod error;
pub mod experiment;
pub mod inference;
pub mod io;
pub mod oracle;
pub mod pch;
pub mod quantile;
pub mod stats;
pub mod tsht;

pub use error::{PchError, Result};
pub use inference::{infer, InferenceResult, SignPrior};
pub use pch::{pch, pch_both, PchOptions, PchOutput};
pub use stats::{Dataset, Design};
