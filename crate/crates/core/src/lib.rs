//! Weak private information retrieval toolkit.
//!
//! The crate covers the Sun-Jafar family of weakly-private retrieval schemes,
//! in which the client picks a random number `m'` of undesired files to mix
//! into an ordinary capacity-achieving PIR run. It provides:
//!
//! * [`model`]: validated scheme parameters and mixing distributions,
//! * [`analytics`]: closed-form rate and leakage (mutual information and
//!   maximal leakage) for replicated, MDS-coded and `T`-colluding storage,
//! * [`optimizer`]: the exact rate-maximizing mixing distribution under a
//!   leakage budget, plus the sensitivity coefficients that decide when the
//!   classic two-point distribution is optimal,
//! * [`appendix`]: numeric checks of the monotonicity lemmas behind the
//!   storage-rate thresholds,
//! * [`protocol`]: an executable replicated-storage engine with a Monte-Carlo
//!   harness and an exact enumeration oracle for leakage.
//!
//! Logarithms are base 2 throughout unless a function says otherwise.

pub mod analytics;
pub mod appendix;
mod error;
pub mod exec;
pub mod model;
pub mod optimizer;
pub mod protocol;

pub use error::{Error, Result};
pub use exec::Execution;
pub use model::{LeakageBudget, Metric, MixingDistribution, SchemeParams, Setting};
