use thiserror::Error;

/// Errors raised by the trap analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("unknown species label `{0}`")]
    UnknownSpecies(String),

    #[error("point outside the domain: {0}")]
    Domain(String),

    #[error("search did not converge after {iterations} iterations (best residual {residual:.3e} at {best:?})")]
    Search {
        iterations: usize,
        residual: f64,
        best: [f64; 3],
    },

    #[error("unstable equilibrium: curvature {eigenvalue:.3e} along direction {direction:?}")]
    Unstable {
        eigenvalue: f64,
        direction: [f64; 3],
    },

    #[error("ion left the integration domain at t = {time:.6e} s")]
    Escape { time: f64 },

    #[error("spectral resolution insufficient: need a run of at least {required:.3e} s")]
    Resolution { required: f64 },

    #[error("unsupported regime: {0}")]
    Unsupported(String),

    #[error("infeasible under voltage rails: best residual {residual:.3e}{}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    Infeasible { residual: f64, step: Option<usize> },

    #[error("rank-deficient electrode basis; redundant electrodes: {0:?}")]
    DegenerateBasis(Vec<String>),

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("fit is degenerate: {0}")]
    DegenerateFit(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
