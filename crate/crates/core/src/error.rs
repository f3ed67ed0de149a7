use thiserror::Error;

/// Errors raised by the solver building blocks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid spacing {dx} does not evenly divide the domain [{x_min}, {x_max}]")]
    NonCommensurateDomain { x_min: f64, x_max: f64, dx: f64 },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("time {target} is not an integer multiple of dt = {dt}")]
    TimeNotReachable { target: f64, dt: f64 },

    #[error("field invalid: {0}")]
    InvalidField(String),

    #[error("force evaluated to a non-finite value at site {site}")]
    NonFiniteForce { site: usize },

    #[error("stencil at site {site} needs a neighbour outside the available range")]
    StencilOutOfRange { site: isize },

    #[error("jump probability {value} at site {site} lies outside [0, 1]")]
    ProbabilityOutOfRange { site: isize, value: f64 },

    #[error("negative Dirichlet value {value} on a run that is not split into signed parts")]
    NegativeDirichletOnUnsplitRun { value: f64 },

    #[error("boundary value {value} is too small for the exponential ghost point")]
    DegenerateGhost { value: f64 },

    #[error("ghost probability missing on the {0} side")]
    MissingGhostProbability(&'static str),

    #[error("non-finite field value at site {site} after step {step}")]
    NonFiniteField { site: usize, step: usize },

    #[error("Hopf-Cole transform requires positive samples; found {value} at index {index}")]
    NonPositivePhi { index: usize, value: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("distributions carry different total mass: {left} vs {right}")]
    MassMismatch { left: f64, right: f64 },

    #[error("need at least {needed} error records, got {got}")]
    InsufficientRecords { needed: usize, got: usize },

    #[error("invalid error record: {0}")]
    InvalidRecord(String),

    #[error("convergence fit is degenerate: grid spacings are not distinct")]
    DegenerateFit,

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
