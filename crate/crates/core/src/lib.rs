//! Exact D- and I-optimal designs for the full second-order response-surface
//! model on `[-1, 1]^K`, found by particle swarm optimization.
//!
//! Modules:
//! - [`model`]: term layout, design and model matrices, information matrix
//! - [`criteria`]: D and I scores, moment matrix, relative efficiency
//! - [`pso`]: global and random-local topology swarms over vectorized designs
//! - [`bench`]: replicated experiments and their summaries
//! - [`io`]: design CSV, result JSON Lines, summary CSV, reference catalog

pub mod bench;
pub mod criteria;
pub mod error;
pub mod io;
pub mod model;
pub mod pso;

pub use criteria::{Criterion, CriterionKind, CriterionValue, MomentMatrix};
pub use error::{Error, Result};
pub use model::{DesignMatrix, ModelMatrix, SecondOrderModel};
pub use pso::{PsoConfig, RunResult, StopReason, Topology};
