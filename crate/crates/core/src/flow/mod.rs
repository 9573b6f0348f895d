//! Time integration of the isometric flow `∂φ/∂t = Div T ⌟ ψ`.
//!
//! Two independent schemes are provided:
//!
//! * the `(f, X)` scheme, evolving `X` by the parabolic equation
//!
//!   ```text
//!   Ẋ_q = ΔX_q + (|∇f|² + |∇X|²) X_q + (base torsion terms)
//!   ```
//!
//!   and `f` by `ḟ = ½⟨X, Div T̃⟩`, followed by the constraint projection;
//! * the direct scheme, evolving the 3-form itself with `T` from
//!   [`torsion_from_phi`](crate::bryant::torsion_from_phi).
//!
//! Both use explicit Euler or classical RK4.

mod config;
mod run;

pub use config::{
    build_initial_state, EntropyMonitor, FlowConfig, FrameConfig, InitialCondition, MonitorConfig,
    ThetaMonitor,
};
pub use run::{rescale_check, run, NullSink, RescaleReport, RunOutcome, RunSink, RunStatus};

use serde::{Deserialize, Serialize};

use crate::bryant::{
    div_torsion_with, phi_of_state_unchecked, psi_of_state_unchecked, torsion_from_phi_unchecked, torsion_with,
    IsometricState, StateDerivatives,
};
use crate::connection::FrameField;
use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::g2algebra::{hodge_star_3, Vec7};
use crate::grid::{div2, laplacian, Field, Form3Field, Form4Field, Grid, MatrixField, ScalarField, VectorField};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Euler,
    #[default]
    Rk4,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Fx,
    Direct,
    Both,
}

/// Vectors an explicit integrator can combine.
pub(crate) trait OdeVector: Clone {
    fn axpy(&mut self, a: f64, other: &Self);
}

impl<T: crate::grid::Tensor> OdeVector for Field<T> {
    fn axpy(&mut self, a: f64, other: &Self) {
        Field::axpy(self, a, other);
    }
}

impl<A: OdeVector, B: OdeVector> OdeVector for (A, B) {
    fn axpy(&mut self, a: f64, other: &Self) {
        self.0.axpy(a, &other.0);
        self.1.axpy(a, &other.1);
    }
}

impl<A: OdeVector, B: OdeVector, C: OdeVector> OdeVector for (A, B, C) {
    fn axpy(&mut self, a: f64, other: &Self) {
        self.0.axpy(a, &other.0);
        self.1.axpy(a, &other.1);
        self.2.axpy(a, &other.2);
    }
}

/// One explicit step of `y' = rhs(y)`.
pub(crate) fn explicit_step<V, F>(y: &V, dt: f64, integrator: Integrator, rhs: F) -> Result<V>
where
    V: OdeVector,
    F: Fn(&V) -> Result<V>,
{
    match integrator {
        Integrator::Euler => {
            let k = rhs(y)?;
            let mut out = y.clone();
            out.axpy(dt, &k);
            Ok(out)
        }
        Integrator::Rk4 => {
            let k1 = rhs(y)?;
            let mut y2 = y.clone();
            y2.axpy(0.5 * dt, &k1);
            let k2 = rhs(&y2)?;
            let mut y3 = y.clone();
            y3.axpy(0.5 * dt, &k2);
            let k3 = rhs(&y3)?;
            let mut y4 = y.clone();
            y4.axpy(dt, &k3);
            let k4 = rhs(&y4)?;
            let mut out = y.clone();
            out.axpy(dt / 6.0, &k1);
            out.axpy(dt / 3.0, &k2);
            out.axpy(dt / 3.0, &k3);
            out.axpy(dt / 6.0, &k4);
            Ok(out)
        }
    }
}

/// Right-hand side of the `(f, X)` system.
pub fn rhs_fx(s: &IsometricState) -> (ScalarField, VectorField) {
    let (df, dx, _) = rhs_fx_parts(s);
    (df, dx)
}

/// `(ḟ, Ẋ, Div T̃)`.
pub(crate) fn rhs_fx_parts(s: &IsometricState) -> (ScalarField, VectorField, VectorField) {
    let d = StateDerivatives::of(s);
    let lap_f = laplacian(&s.f);
    let lap_x = laplacian(&s.x);
    let div_t = div_torsion_with(s, &d, &lap_f, &lap_x);
    let reference = s.background.is_reference();
    let active = s.grid().active_dims().to_vec();
    let df = Field::from_index_fn(s.grid(), |p| 0.5 * s.x.at(p).dot(&div_t.at(p)));
    let dx = Field::from_index_fn(s.grid(), |p| {
        let f = s.f.at(p);
        let x = s.x.at(p);
        let gf = d.grad_f.at(p);
        let g = d.grad_x.at(p);
        let mut out = lap_x.at(p) + x * (gf.norm2() + g.norm2());
        if !reference {
            let phi = s.background.phi_at(p);
            let t = s.background.torsion_at(p);
            let a = s.background.div_torsion_at(p);
            let tg = t.vec_mul(&gf);
            out += x * (-f * t.contract(&g) + gf.dot(&t.mul_vec(&x))) - tg * x.norm2();
            out += a * (-0.5 * f) + phi.cross(&x, &a) * 0.5;
            for &r in &active {
                let (tr, gr) = (t.row(r), g.row(r));
                let c = phi.cross(&tr, &gr);
                out += tr * (f * x.dot(&gr)) - c + x * c.dot(&x);
            }
        }
        out
    });
    (df, dx, div_t)
}

/// `ḟ, Ẋ` from the first-order form `Ẋ = −½ f Div T̃ + ½ Div T̃ × X`, used as an
/// oracle for [`rhs_fx`].
pub fn rhs_fx_first_order(s: &IsometricState) -> (ScalarField, VectorField) {
    let d = StateDerivatives::of(s);
    let div_t = div_torsion_with(s, &d, &laplacian(&s.f), &laplacian(&s.x));
    let df = Field::from_index_fn(s.grid(), |p| 0.5 * s.x.at(p).dot(&div_t.at(p)));
    let dx = Field::from_index_fn(s.grid(), |p| {
        let a = div_t.at(p);
        let x = s.x.at(p);
        a * (-0.5 * s.f.at(p)) + s.background.phi_at(p).cross(&a, &x) * 0.5
    });
    (df, dx)
}

/// `Div T ⌟ ψ` for a 3-form field; checks that `φ` induces the flat metric.
pub fn rhs_direct(phi: &Form3Field) -> Result<Form3Field> {
    let defect = crate::bryant::metric_defect(phi)?;
    if defect > crate::tolerances::METRIC_TOL {
        return Err(Error::NotIsometric { defect });
    }
    Ok(rhs_direct_unchecked(phi))
}

pub(crate) fn rhs_direct_unchecked(phi: &Form3Field) -> Form3Field {
    let psi: Form4Field = phi.map(|a| hodge_star_3(&a));
    let div_t = div2(&torsion_from_phi_unchecked(phi, &psi));
    Field::from_index_fn(phi.grid(), |p| psi.at(p).interior(&div_t.at(p)))
}

/// Removes the component of `(ḟ, Ẋ)` normal to the sphere through `(f, X)`.
/// The exact flow is tangent; the discrete one is only to stencil accuracy.
pub(crate) fn tangential(s: &IsometricState, df: &ScalarField, dx: &VectorField) -> (ScalarField, VectorField) {
    let c = Field::from_index_fn(s.grid(), |p| {
        let (f, x) = (s.f.at(p), s.x.at(p));
        let r2 = f * f + x.norm2();
        if r2 == 0.0 {
            0.0
        } else {
            (f * df.at(p) + x.dot(&dx.at(p))) / r2
        }
    });
    let df = Field::from_index_fn(s.grid(), |p| df.at(p) - c.at(p) * s.f.at(p));
    let dx = Field::from_index_fn(s.grid(), |p| dx.at(p) - s.x.at(p) * c.at(p));
    (df, dx)
}

/// One step of the `(f, X)` scheme. Returns the projected state and the
/// constraint drift of the unprojected step.
pub fn step_fx(s: &IsometricState, dt: f64, integrator: Integrator) -> Result<(IsometricState, f64)> {
    let y = (s.f.clone(), s.x.clone());
    let rhs = |y: &(ScalarField, VectorField)| {
        let trial = IsometricState {
            f: y.0.clone(),
            x: y.1.clone(),
            background: s.background.clone(),
            time: s.time,
        };
        let (df, dx) = rhs_fx(&trial);
        Ok(tangential(&trial, &df, &dx))
    };
    let (f, x) = explicit_step(&y, dt, integrator, rhs)?;
    let mut next = IsometricState {
        f,
        x,
        background: s.background.clone(),
        time: s.time + dt,
    };
    let drift = next.constraint_defect();
    next.project();
    Ok((next, drift))
}

/// One step of the direct scheme.
pub fn step_direct(phi: &Form3Field, dt: f64, integrator: Integrator) -> Form3Field {
    explicit_step(phi, dt, integrator, |y| Ok(rhs_direct_unchecked(y))).expect("infallible right-hand side")
}

/// The evolving structure at one instant.
#[derive(Clone, Debug)]
pub enum FlowState {
    Fx(IsometricState),
    Direct(Form3Field),
}

impl FlowState {
    pub fn grid(&self) -> &Grid {
        match self {
            FlowState::Fx(s) => s.grid(),
            FlowState::Direct(p) => p.grid(),
        }
    }

    pub fn phi(&self) -> Form3Field {
        match self {
            FlowState::Fx(s) => phi_of_state_unchecked(s),
            FlowState::Direct(p) => p.clone(),
        }
    }

    pub fn psi(&self) -> Form4Field {
        match self {
            FlowState::Fx(s) => psi_of_state_unchecked(s),
            FlowState::Direct(p) => p.map(|a| hodge_star_3(&a)),
        }
    }

    /// Torsion with the scheme's own formula.
    pub fn torsion(&self) -> MatrixField {
        match self {
            FlowState::Fx(s) => torsion_with(s, &StateDerivatives::of(s)),
            FlowState::Direct(p) => torsion_from_phi_unchecked(p, &self.psi()),
        }
    }

    pub fn as_fx(&self) -> Option<&IsometricState> {
        match self {
            FlowState::Fx(s) => Some(s),
            FlowState::Direct(_) => None,
        }
    }
}

/// A stored instant of a run.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub state: FlowState,
    pub frame: Option<FrameField>,
}

/// Stored snapshots and the diagnostics stream of a run.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub records: Vec<DiagnosticsRecord>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub(crate) fn push(&mut self, snap: Snapshot) {
        if let Some(last) = self.snapshots.last() {
            assert!(snap.t > last.t, "snapshot times must increase");
        }
        self.snapshots.push(snap);
    }
}

/// Runs the `(f, X)` scheme for `steps` steps, keeping every `every`-th state.
pub fn evolve_fx(
    initial: &IsometricState,
    dt: f64,
    steps: usize,
    integrator: Integrator,
    every: usize,
) -> Result<Trajectory> {
    let mut traj = Trajectory::default();
    let mut s = initial.clone();
    traj.push(Snapshot {
        t: s.time,
        state: FlowState::Fx(s.clone()),
        frame: None,
    });
    for k in 1..=steps {
        let (next, _) = step_fx(&s, dt, integrator)?;
        s = next;
        s.time = initial.time + k as f64 * dt;
        if k % every.max(1) == 0 {
            traj.push(Snapshot {
                t: s.time,
                state: FlowState::Fx(s.clone()),
                frame: None,
            });
        }
    }
    Ok(traj)
}

/// Runs the direct scheme, keeping every `every`-th form.
pub fn evolve_direct(
    initial: &Form3Field,
    t0: f64,
    dt: f64,
    steps: usize,
    integrator: Integrator,
    every: usize,
) -> Trajectory {
    let mut traj = Trajectory::default();
    let mut phi = initial.clone();
    traj.push(Snapshot {
        t: t0,
        state: FlowState::Direct(phi.clone()),
        frame: None,
    });
    for k in 1..=steps {
        phi = step_direct(&phi, dt, integrator);
        if k % every.max(1) == 0 {
            traj.push(Snapshot {
                t: t0 + k as f64 * dt,
                state: FlowState::Direct(phi.clone()),
                frame: None,
            });
        }
    }
    traj
}

/// Parabolic rescaling by `c`: period `cL`, times `c²t`.
///
/// In the rescaled coordinates `y = cx` the metric of `c³φ` is again Euclidean,
/// so the components of every form are unchanged; torsion components scale by
/// `1/c` and the scalar diagnostics by their weights.
pub fn parabolic_rescale(traj: &Trajectory, c: f64) -> Trajectory {
    let rescale_state = |st: &FlowState| -> FlowState {
        let grid = st.grid().with_period(st.grid().period() * c);
        match st {
            FlowState::Fx(s) => FlowState::Fx(IsometricState {
                f: s.f.with_grid(&grid),
                x: s.x.with_grid(&grid),
                background: s.background.rescaled(&grid, c),
                time: s.time * c * c,
            }),
            FlowState::Direct(p) => FlowState::Direct(p.with_grid(&grid)),
        }
    };
    Trajectory {
        snapshots: traj
            .snapshots
            .iter()
            .map(|s| Snapshot {
                t: s.t * c * c,
                state: rescale_state(&s.state),
                frame: s.frame.as_ref().map(|fr| fr.with_grid(&fr.iota.grid().with_period(fr.iota.grid().period() * c))),
            })
            .collect(),
        records: traj.records.iter().map(|r| r.rescaled(c)).collect(),
    }
}

/// Linearization of the Bryant map applied to a tangent vector `(ḟ, Ẋ)`.
pub fn push_forward(s: &IsometricState, df: &ScalarField, dx: &VectorField) -> Form3Field {
    Field::from_index_fn(s.grid(), |p| {
        let (f, x) = (s.f.at(p), s.x.at(p));
        let (fd, xd) = (df.at(p), dx.at(p));
        let phi = s.background.phi_at(p);
        let psi = s.background.psi_at(p);
        let wedge = |a: &Vec7, b: &Vec7| crate::g2algebra::Form3::wedge_vec_two_form(a, &phi.interior(b));
        phi * (-4.0 * x.dot(&xd)) - psi.interior(&(xd * f + x * fd)) * 2.0
            + (wedge(&xd, &x) + wedge(&x, &xd)) * 2.0
    })
}

