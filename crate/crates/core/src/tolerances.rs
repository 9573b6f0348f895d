//! Tolerances pinned for the library's checks and the acceptance suite.

/// Symmetry defect above which a matrix is rejected as non-symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Largest admissible `|f² + |X|² − 1|` for building a structure from a state.
pub const CONSTRAINT_TOL: f64 = 1e-8;

/// Largest per-step constraint drift before a run aborts.
pub const CONSTRAINT_ABORT: f64 = 1e-6;

/// Largest `|g(φ) − I|` accepted by the 3-form flow and the oracle torsion.
pub const METRIC_TOL: f64 = 1e-6;

/// Largest `|ιᵀι − I|` tolerated for a frame.
pub const FRAME_ORTHOGONALITY_TOL: f64 = 1e-6;

/// Isometry of Bryant structures, sup-norm of `g − I`.
pub const ISOMETRY_TOL: f64 = 1e-10;

/// Relative tolerance for floating-point identities on random inputs.
pub const POINTWISE_IDENTITY_TOL: f64 = 1e-12;

/// Heat-kernel mass tolerance.
pub const KERNEL_MASS_TOL: f64 = 1e-8;

/// Relative tolerance for rescaling invariance of Θ and λ.
pub const RESCALING_TOL: f64 = 1e-6;

/// Sup-norm discrepancy allowed between a rescaled run and the rescaled trajectory.
pub const RESCALE_TRAJECTORY_TOL: f64 = 1e-8;

/// Gradient-flow law: `|dE/dt + ∫|Div T|²| ≤ GRADIENT_LAW_TOL · ∫|Div T|²`.
pub const GRADIENT_LAW_TOL: f64 = 1e-3;

/// Energy may rise by at most this fraction of `E(0)` between samples.
pub const ENERGY_MONOTONE_TOL: f64 = 1e-10;

/// Fitted decay rate must reach `(1 − DECAY_RATE_SLACK) · Λ/2`.
pub const DECAY_RATE_SLACK: f64 = 0.10;

/// Measured convergence order must lie within this fraction of the stencil order.
pub const ORDER_SLACK: f64 = 0.20;

/// Minimum residual reduction when `(h, dt)` are halved.
pub const REFINEMENT_RATIO: f64 = 3.0;

/// Additive slack in `dΘ/dt ≤ Hessian correction + slack`.
pub const MONOTONICITY_SLACK: f64 = 1e-8;
