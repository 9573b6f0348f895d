//! Isometric flow of G2-structures on the flat periodic 7-torus.
//!
//! The crate is organised bottom-up:
//!
//! * [`g2algebra`]: structure constants, cross product, ⋄, Hodge stars.
//! * [`grid`]: periodic lattices with active directions, stencils, quadrature, checkpoints.
//! * [`bryant`]: the `(f, X)` parametrization, its torsion and divergence, and the oracles
//!   computed directly from a 3-form.
//! * [`flow`]: the `(f, X)` and 3-form integrators, runs, parabolic rescaling.
//! * [`connection`]: the modified connection, frame evolution and PDE residuals.
//! * [`diagnostics`]: energy, heat kernel, Θ, entropy and monitors.
//! * [`verify`]: refinement suites shared by the CLI and the tests.
//!
//! ```
//! use g2flow::g2algebra::{standard_tables, validate_tables};
//!
//! let report = validate_tables(standard_tables());
//! assert!(report.all_zero());
//! ```

pub mod bryant;
pub mod connection;
pub mod diagnostics;
mod error;
pub mod flow;
pub mod g2algebra;
pub mod grid;
pub mod tolerances;
pub mod verify;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/algebra.md")]
    mod algebra {}
    #[doc = include_str!("../../../book/src/grids.md")]
    mod grids {}
    #[doc = include_str!("../../../book/src/isometric.md")]
    mod isometric {}
    #[doc = include_str!("../../../book/src/flow.md")]
    mod flow {}
    #[doc = include_str!("../../../book/src/connection.md")]
    mod connection {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
