use num_complex::Complex64 as C64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("bath has no nonzero hopping")]
    DegenerateBath,
    #[error("invalid bath: {0}")]
    InvalidBath(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("point {z} lies on the band curve")]
    OnBandCurve { z: C64 },
    #[error("energy {z} collides with the finite-size spectrum")]
    OnFiniteSpectrum { z: C64 },
    #[error("numerical overflow: {0}")]
    NumericalOverflow(String),
    #[error("a root of E = h(y) lies on the unit circle and no branch was chosen")]
    AmbiguousBranch,
    #[error("group velocity vanishes at k = {k}")]
    VanishingGroupVelocity { k: f64 },
    #[error("z = {z} is a pole of the emitter Green's function")]
    AtPole { z: C64 },
    #[error("Newton iteration did not converge after {steps} steps (last residuals {trace:?})")]
    NoConvergence { steps: usize, trace: Vec<f64> },
    #[error("solution k = {k_tilde} left the scattering regime")]
    ConvergedToBoundState { k_tilde: C64 },
    #[error("momentum {k} is within the exclusion radius of a fine-tuned point")]
    FineTunedInput { k: f64 },
    #[error("target is not degenerate: {0}")]
    NotDegenerate(String),
    #[error("closed forms are not defined in the Hermitian limit kappa = 0")]
    HermitianLimit,
    #[error("region {given} contradicts Re k = {re_k}")]
    RegionMismatch { given: String, re_k: f64 },
    #[error("state has zero weight")]
    ZeroState,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("QR iteration stalled at index {index}")]
    QrStall { index: usize, block: Vec<Vec<C64>> },
    #[error("matrix dimension {dim} exceeds the configured maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },
}

impl Error {
    /// True for errors caused by invalid input rather than numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DegenerateBath
                | Error::InvalidBath(_)
                | Error::InvalidParameter(_)
                | Error::Parse { .. }
                | Error::HermitianLimit
                | Error::RegionMismatch { .. }
                | Error::DimensionTooLarge { .. }
        )
    }
}
