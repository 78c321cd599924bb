use thiserror::Error;

/// Errors surfaced by the numerical pipeline.
///
/// Variants carry enough context to report what was violated and by how
/// much, so callers can decide between aborting and downgrading to a warning.
#[derive(Debug, Error)]
pub enum Error {
    #[error("fields live on different grids: {0}")]
    GridMismatch(String),

    #[error(
        "kernel is not even within tolerance: max asymmetry {asymmetry:.3e} of peak {peak:.3e}"
    )]
    NotEven { asymmetry: f64, peak: f64 },

    #[error("kernel mass truncated by the domain: tail bound {tail:.3e} exceeds {limit:.3e}")]
    MassTruncated { tail: f64, limit: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("symbol not invertible: |{name}| dips to {min_abs:.3e} at frequency {at:.4}")]
    SymbolNotInvertible { name: String, min_abs: f64, at: f64 },

    #[error("convolution output has non-real residue {residue:.3e} (limit {limit:.3e})")]
    ImaginaryResidue { residue: f64, limit: f64 },

    #[error("solvability violated: pairings with the cokernel are ({defect1:.3e}, {defect2:.3e}), limit {limit:.3e}")]
    Solvability {
        defect1: f64,
        defect2: f64,
        limit: f64,
    },

    #[error("weight {gamma} is inside the guard band around the critical value {critical} where the range is not closed")]
    CriticalWeight { gamma: f64, critical: f64 },

    #[error("degenerate bordering: Gram matrix condition number {cond:.3e} exceeds {limit:.3e}")]
    DegenerateBordering { cond: f64, limit: f64 },

    #[error("sign condition violated: epsilon = {epsilon:.4e} and the mass of g = {g0:.4e} must have opposite signs")]
    SignCondition { epsilon: f64, g0: f64 },

    #[error("corrector diverged after {iterations} iterations; difference history {history:?}")]
    CorrectorDiverged {
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("simulation blew up at t = {t:.4}; last finite state was at t = {last_stable:.4}")]
    Blowup { t: f64, last_stable: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("oracle failure: {0}")]
    Oracle(String),
}

pub type Result<T> = std::result::Result<T, Error>;
