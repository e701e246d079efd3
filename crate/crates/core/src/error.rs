use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter violates a hypothesis of the estimate being tested.
    #[error("{name} = {value} violates {hypothesis}")]
    Parameter {
        name: &'static str,
        value: f64,
        hypothesis: &'static str,
    },

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("eigensolver did not converge at index {index} after {iterations} iterations")]
    NonConvergence { index: usize, iterations: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("spectral parameter lies within {distance:e} of the spectrum")]
    Singular { distance: f64 },

    #[error("function is undefined at eigenvalue {0}")]
    Evaluation(f64),

    /// A computed result failed its a-posteriori accuracy check.
    #[error("{what} = {value:e} exceeds tolerance {tolerance:e}")]
    Accuracy {
        what: &'static str,
        value: f64,
        tolerance: f64,
    },

    #[error("operator is not self-adjoint in the weighted inner product (residual {0:e})")]
    NotSelfAdjoint(f64),

    #[error("reflected waves contaminate the sampling window: r_max = {r_max} < {required}")]
    Contamination { r_max: f64, required: f64 },

    #[error("fit needs at least {needed} usable points, found {found}")]
    InsufficientData { needed: usize, found: usize },
}

impl Error {
    /// True for failures of a numerical method as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::Singular { .. }
                | Error::Evaluation(_)
                | Error::Accuracy { .. }
        )
    }
}
