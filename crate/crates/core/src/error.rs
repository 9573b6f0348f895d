use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric (defect {defect:e})")]
    NotSymmetric { defect: f64 },
    #[error("3-form is degenerate (det B = {det:e})")]
    DegenerateForm { det: f64 },
    #[error("invalid state: constraint defect {defect:e} exceeds {limit:e}")]
    InvalidState { defect: f64, limit: f64 },
    #[error("3-form does not induce the flat metric (defect {defect:e})")]
    NotIsometric { defect: f64 },
    #[error("frame is singular at grid point {point}")]
    FrameDegenerate { point: usize },
    #[error("frame orthogonality drifted (defect {defect:e})")]
    GaugeDrift { defect: f64 },
    #[error("need at least {needed} snapshots, got {got}")]
    InsufficientSnapshots { needed: usize, got: usize },
    #[error("time {t} is not before the kernel final time {t0}")]
    TimeNotBeforeFinal { t: f64, t0: f64 },
    #[error("grids do not match")]
    GridMismatch,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
