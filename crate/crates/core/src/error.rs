use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {coords:?} lies outside the domain of chart {chart}")]
    Domain { chart: u8, coords: [f64; 2] },

    #[error("geodesic integration left the atlas at step {step}")]
    Integration { step: usize },

    #[error("shooting did not converge after {iterations} Newton iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("invalid cage: {0}")]
    InvalidCage(String),

    #[error("invalid flower: {0}")]
    InvalidFlower(String),

    #[error("edge {edge}, gap {gap}: {source}; increase the subdivision")]
    Subdivision {
        edge: usize,
        gap: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("flow failed at iteration {iteration}: {source}")]
    Flow {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("certificate is not stationary (defect {defect_norm:e}, edge residual {edge_residual:e})")]
    NotCertified {
        defect_norm: f64,
        edge_residual: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
