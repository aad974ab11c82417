//! Numerical laboratory for moderate deviations of partial sums of bounded
//! stationary sequences.
//!
//! The crate provides the example processes, exact kernel numerics for
//! conditional expectations, diagnostics for the projective and mixing
//! conditions, long-run variance estimators, the exponential inequalities,
//! rate functions with exact and importance-sampling tail oracles, and the
//! continued-fraction machinery for rotations of the circle.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod conditions;
pub mod diophantine;
pub mod error;
pub mod inequalities;
pub mod mdp;
pub mod numerics;
pub mod observable;
pub mod path;
pub mod processes;
pub mod rng;
pub mod speed;
pub mod transfer;
pub mod variance;

pub use error::{Error, Result};
pub use path::{max_abs_partial_sum, normalized_process, partial_sums, Path, Trajectory};
pub use processes::{ModelSpec, ProcessModel};
pub use rng::RngStream;
pub use speed::SpeedSequence;
