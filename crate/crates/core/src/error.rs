use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error category, used by the command-line front end to pick an
/// exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Geometry,
    Solver,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 1,
            ErrorClass::Geometry => 2,
            ErrorClass::Solver => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("transversality failure: min k.n = {min_dot:.3e} on facet {facet}")]
    TransversalityFailure { facet: usize, min_dot: f64 },

    #[error("transversal field mode not applicable: {0}")]
    ModeInvalid(String),

    #[error("invalid insulation distribution: {0}")]
    InvalidDistribution(String),

    #[error("non-injective layer: {0}")]
    NonInjectiveLayer(String),

    #[error("degenerate fiber at node {node}: zero thickness on a partially insulated facet")]
    DegenerateFiber { node: usize },

    #[error("mesh generation failed: {0}")]
    MeshFailure(String),

    #[error("non-positive boundary weight {value:.3e} on facet {facet}")]
    NonpositiveWeight { facet: usize, value: f64 },

    #[error("facet {facet} does not carry label {expected}")]
    UnknownLabel { facet: usize, expected: &'static str },

    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("solver breakdown: {0}")]
    Breakdown(String),

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("boundary trace vanishes on the insulated boundary")]
    ZeroTrace,

    #[error("discrete minimality violated at eps = {epsilon}: E(u_eps) = {solution} > E(recovery) = {recovery}")]
    SandwichViolation {
        epsilon: f64,
        solution: f64,
        recovery: f64,
    },

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Schema { .. } | Io { .. } | UnknownLabel { .. } => ErrorClass::Config,
            InvalidDomain(_)
            | TransversalityFailure { .. }
            | ModeInvalid(_)
            | InvalidDistribution(_)
            | NonInjectiveLayer(_)
            | DegenerateFiber { .. }
            | MeshFailure(_) => ErrorClass::Geometry,
            NonpositiveWeight { .. }
            | NoConvergence { .. }
            | Breakdown(_)
            | MeshMismatch(_)
            | ZeroTrace
            | SandwichViolation { .. } => ErrorClass::Solver,
        }
    }
}
