use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid direction of arrival: {0}")]
    InvalidDoa(String),

    #[error("invalid polynomial-phase coefficients: {0}")]
    InvalidCoeffs(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("insufficient samples: need more than {needed}, have {available}")]
    InsufficientSamples { needed: usize, available: usize },

    #[error("dephasing reference {reference} is numerically zero for this direction; use row 4 or sum mode")]
    NearZeroReferenceRow { reference: String },

    #[error("trajectory leaves (0, pi) in elevation at sample {sample} (alpha = {alpha} rad)")]
    TrajectoryOutOfRange { sample: usize, alpha: f64 },

    #[error("power iteration did not isolate a dominant eigenpair within {max_iter} iterations")]
    NoConvergence { max_iter: usize },

    #[error("reference steering vector has zero norm")]
    ZeroReference,

    #[error("invariant factor rho is zero")]
    ZeroRho,

    #[error("pressure channel of the manifold estimate is zero")]
    ZeroPressureChannel,

    #[error("pressure channel vanished; sample skipped")]
    SkipSample,

    #[error("azimuth is unidentifiable at the pole (|sin alpha| < 1e-9)")]
    PoleSingularity,

    #[error("moment sum overflowed double precision")]
    Overflow,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}
