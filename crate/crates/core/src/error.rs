use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {defect:.3e}, allowed {allowed:.3e})")]
    NonHermitianInput { defect: f64, allowed: f64 },

    #[error("matrix is not unitary (defect {defect:.3e}, allowed {allowed:.3e})")]
    NonUnitaryInput { defect: f64, allowed: f64 },

    #[error("eigensolver failed to converge on a {dim}x{dim} matrix")]
    ConvergenceFailure { dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("local error estimate {estimate:.3e} exceeds tolerance {tol:.3e} at t = {t}")]
    ToleranceNotMet { t: f64, estimate: f64, tol: f64 },

    #[error("operator is not a symmetry of the invariant at t = {t} (relative commutator {defect:.3e})")]
    SymmetryViolation { t: f64, defect: f64 },

    #[error("time grid too coarse: {points} points, at least {required} required")]
    GridTooCoarse { points: usize, required: usize },

    #[error("degeneracy structure changed at t = {t}")]
    DegeneracyCrossing { t: f64 },

    #[error("eigenvalue {level} drifted by {drift:.3e} at t = {t}")]
    SpectrumNotConstant { level: usize, t: f64, drift: f64 },

    #[error("frame overlap {overlap:.3} between consecutive grid points fell below {min} at t = {t}")]
    OverlapTooSmall { t: f64, overlap: f64, min: f64 },

    #[error("invariant is not periodic on the grid (mismatch {mismatch:.3e})")]
    NotPeriodic { mismatch: f64 },

    #[error("eigenvalue block {level} is {degeneracy}-fold degenerate")]
    DegenerateEigenvalue { level: usize, degeneracy: usize },

    #[error("phase record incomplete: {what}")]
    IncompleteRecord { what: &'static str },

    #[error("state {level} does not return to its ray (overlap modulus {modulus:.9})")]
    NotCyclic { level: usize, modulus: f64 },

    #[error("finite-difference generator is not Hermitian (relative anti-Hermitian part {residual:.3e})")]
    NonHermitianGenerator { residual: f64 },

    #[error("parameter constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("outside domain of validity: {0}")]
    DomainError(String),

    #[error("truncation too small for level {level}: {detail}")]
    TruncationTooSmall { level: usize, detail: String },

    #[error("time {t} is not a grid point")]
    OffGrid { t: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
