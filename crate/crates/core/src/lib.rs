//! Discrete-time random walk (DTRW) scheme for one-dimensional nonlinear
//! advection-diffusion equations
//!
//! ```text
//! u_t = D u_xx - 2 beta D (F(x, t, u) u)_x
//! ```
//!
//! The scheme is the master equation of a nearest-neighbour walk whose jump
//! probabilities are Boltzmann weights of the local potential. Because the
//! walk stays well defined for any spacing, the numerical solution stays
//! non-negative and, under conservative boundaries, keeps its mass.

pub mod boundary;
pub mod diagnostics;
pub mod error;
pub mod force;
pub mod lattice;
pub mod montecarlo;
pub mod oracle;
pub mod stepper;
pub mod weights;

pub use boundary::{BoundaryCondition, BoundaryKind, GhostRule, Side};
pub use diagnostics::{CflMonitor, ErrorRecorder, MassObserver, Observer, RunReport};
pub use error::{Error, Result};
pub use force::{ForceKind, ForceSpec, Quadrature};
pub use lattice::{Field, GridOffset, Lattice, SignedField, TimeGrid};
pub use oracle::{ErrorRecord, Oracle, TanhSolution};
pub use stepper::{evolve, step, step_signed, step_split, Aborted, Evolution, SchemeConfig, State};
pub use weights::{JumpProbabilities, WeightRule};
