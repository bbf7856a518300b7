use thiserror::Error;

/// Failure modes shared by every module of the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DmiError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("gamma out of range: gamma^2 must be < 1 (got {0})")]
    GammaOutOfRange(f64),
    #[error("vanishing vector at index {index} (|f| = {norm:e})")]
    VanishingVector { index: usize, norm: f64 },
    #[error("not tangent: |v.m| = {defect:e} at index {index}")]
    NotTangent { index: usize, defect: f64 },
    #[error("pole touched at index {index} (1 - |m1| = {gap:e})")]
    PoleTouched { index: usize, gap: f64 },
    #[error("grid mismatch between fields")]
    GridMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no descent: backtracking failed {0} consecutive times")]
    NoDescent(usize),
    #[error("blow-up at t = {t}: |m| deviates from 1 by {deviation:e}")]
    BlowUp { t: f64, deviation: f64 },
    #[error("midpoint no convergence at t = {t} (update {update:e})")]
    MidpointNoConvergence { t: f64, update: f64 },
    #[error("no transition: m1 has constant sign")]
    NoTransition,
    #[error("newton diverged after {iters} iterations (|F| = {residual:e})")]
    NewtonDiverged { iters: usize, residual: f64 },
    #[error("max iterations reached in newton (|F| = {residual:e})")]
    MaxIterations { residual: f64 },
    #[error("inverse iteration stagnated for eigenvalue {index}")]
    Stagnated { index: usize },
    #[error("decay fit degenerate: {0}")]
    DecayFitDegenerate(String),
    #[error("snapshot {index}: {source}")]
    Snapshot {
        index: usize,
        #[source]
        source: Box<DmiError>,
    },
    #[error("at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<DmiError>,
    },
}

impl DmiError {
    /// Whether the error stems from a violated precondition (bad input)
    /// rather than a numerical failure during a computation.
    pub fn is_precondition(&self) -> bool {
        match self {
            DmiError::InvalidGrid(_)
            | DmiError::GammaOutOfRange(_)
            | DmiError::VanishingVector { .. }
            | DmiError::NotTangent { .. }
            | DmiError::PoleTouched { .. }
            | DmiError::GridMismatch
            | DmiError::InvalidParameter(_)
            | DmiError::NoTransition => true,
            DmiError::Snapshot { source, .. } | DmiError::AtTime { source, .. } => {
                source.is_precondition()
            }
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, DmiError>;

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma * gamma < 1.0 {
        Ok(())
    } else {
        Err(DmiError::GammaOutOfRange(gamma))
    }
}
