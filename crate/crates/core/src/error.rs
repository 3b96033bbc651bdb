use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied value is outside its valid domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Spaces, dimensions or kets do not line up.
    #[error("structural mismatch: {0}")]
    Structural(String),

    #[error("pulse synthesis failed at t = {time}: {reason}")]
    PulseSynthesis { time: f64, reason: String },

    #[error("fit did not converge after {iterations} iterations (best rms residual {rms})")]
    Fit { iterations: usize, rms: f64 },

    #[error("integrator unstable at t = {time}: {reason}; try a smaller dt")]
    Instability { time: f64, reason: String },

    /// A requested workload exceeds a configured cap.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("eigenvector tracking lost continuity at t = {time} (overlap {overlap}); reduce the step")]
    StepSize { time: f64, overlap: f64 },
}
