use super::config::{build_initial_state, FlowConfig};
use super::{parabolic_rescale, step_direct, step_fx, FlowState, Scheme, Snapshot, Trajectory};
use crate::bryant::{metric_defect, phi_of_state_unchecked, IsometricState};
use crate::connection::{step_framed, FrameField};
use crate::diagnostics::{
    entropy, record_for, sup_torsion, theta, DiagnosticsRecord, DoublingMonitor, EntropySampling, Event, EventKind,
    HeatKernelSpec,
};
use crate::error::{Error, Result};
use crate::g2algebra::Mat7;
use crate::grid::{Form3Field, Grid, MatrixField};
use crate::tolerances::{CONSTRAINT_ABORT, METRIC_TOL, RESCALE_TRAJECTORY_TOL, RESCALING_TOL};

/// Receives the diagnostics stream and checkpoints of a run.
pub trait RunSink {
    fn record(&mut self, _rec: &DiagnosticsRecord) -> Result<()> {
        Ok(())
    }

    fn checkpoint(&mut self, _step: usize, _state: &IsometricState) -> Result<()> {
        Ok(())
    }
}

/// Discards everything.
pub struct NullSink;

impl RunSink for NullSink {}

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Completed,
    /// A non-finite value or `sup |T|` above the ceiling ended the run.
    SingularitySuspected {
        last_valid_t: f64,
    },
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub steps: usize,
    pub t: f64,
    pub events: Vec<Event>,
    /// Every record; snapshots only when `keep_snapshots` is set.
    pub trajectory: Trajectory,
    pub final_state: FlowState,
    pub final_frame: Option<FrameField>,
    /// Empirical constant of the torsion-doubling monitor, once it fired.
    pub doubling_constant: Option<f64>,
}

/// Runs a configuration from its initial condition.
pub fn run(config: &FlowConfig, sink: &mut dyn RunSink) -> Result<RunOutcome> {
    let grid = config.validate()?;
    let initial = build_initial_state(&config.initial, &grid)?;
    run_from(config, initial, sink)
}

enum Current {
    Fx(IsometricState),
    Direct(Form3Field),
    Both(IsometricState, Form3Field),
}

impl Current {
    fn primary(&self) -> FlowState {
        match self {
            Current::Fx(s) | Current::Both(s, _) => FlowState::Fx(s.clone()),
            Current::Direct(p) => FlowState::Direct(p.clone()),
        }
    }

    fn fx(&self) -> Option<&IsometricState> {
        match self {
            Current::Fx(s) | Current::Both(s, _) => Some(s),
            Current::Direct(_) => None,
        }
    }

    fn finite(&self) -> bool {
        match self {
            Current::Fx(s) => s.f.is_finite() && s.x.is_finite(),
            Current::Direct(p) => p.is_finite(),
            Current::Both(s, p) => s.f.is_finite() && s.x.is_finite() && p.is_finite(),
        }
    }
}

/// Runs a configuration from a given initial state.
pub(crate) fn run_from(config: &FlowConfig, initial: IsometricState, sink: &mut dyn RunSink) -> Result<RunOutcome> {
    let grid = config.validate()?;
    if *initial.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let monitors = &config.monitor;
    let mut frame = config.frame.as_ref().map(|fc| {
        FrameField::new(MatrixField::constant(&grid, Mat7::identity()), fc.alpha, fc.beta)
    });
    let mut current = match config.scheme {
        Scheme::Fx => Current::Fx(initial.clone()),
        Scheme::Direct => Current::Direct(phi_of_state_unchecked(&initial)),
        Scheme::Both => Current::Both(initial.clone(), phi_of_state_unchecked(&initial)),
    };
    let sup_t0 = sup_torsion(&current.primary().torsion());
    let mut doubling = DoublingMonitor::new(0.0, sup_t0);
    let mut trajectory = Trajectory::default();
    let mut events: Vec<Event> = Vec::new();
    let mut pending: Vec<Event> = Vec::new();
    let mut chart_flagged = false;
    let mut status = RunStatus::Completed;
    let mut t = 0.0;
    let mut drift = initial.constraint_defect();
    let steps = config.steps();

    let emit = |current: &Current,
                    frame: &Option<FrameField>,
                    t: f64,
                    drift: f64,
                    pending: &mut Vec<Event>,
                    trajectory: &mut Trajectory,
                    sink: &mut dyn RunSink|
     -> Result<()> {
        let state = current.primary();
        let constraint = match current {
            Current::Direct(p) => {
                let d = metric_defect(p)?;
                if d > METRIC_TOL {
                    return Err(Error::NotIsometric { defect: d });
                }
                d
            }
            _ => drift,
        };
        let mut rec = record_for(&state, t, constraint, monitors, sup_t0)?;
        rec.events = std::mem::take(pending);
        if let Current::Both(s, p) = current {
            rec.phi_discrepancy = Some(phi_of_state_unchecked(s).sub(p).sup_norm());
        }
        rec.frame_defect = frame.as_ref().map(|f| f.orthogonality_defect());
        sink.record(&rec)?;
        trajectory.records.push(rec);
        if config.keep_snapshots {
            trajectory.push(Snapshot {
                t,
                state,
                frame: frame.clone(),
            });
        }
        Ok(())
    };

    emit(&current, &frame, t, drift, &mut pending, &mut trajectory, sink)?;
    let mut done = 0;
    for k in 1..=steps {
        let t_new = if k == steps { config.t_end } else { k as f64 * config.dt };
        let h = t_new - t;
        let (next, next_frame, step_drift) = match &current {
            Current::Fx(s) => {
                let (s2, f2, d) = advance_fx(s, &frame, h, config)?;
                (Current::Fx(s2), f2, d)
            }
            Current::Direct(p) => (Current::Direct(step_direct(p, h, config.integrator)), None, 0.0),
            Current::Both(s, p) => {
                let (s2, f2, d) = advance_fx(s, &frame, h, config)?;
                (Current::Both(s2, step_direct(p, h, config.integrator)), f2, d)
            }
        };
        if !next.finite() || !step_drift.is_finite() {
            let ev = Event {
                kind: EventKind::SingularitySuspected,
                t,
                detail: format!("non-finite values in the step to t = {t_new}"),
            };
            events.push(ev.clone());
            pending.push(ev);
            status = RunStatus::SingularitySuspected { last_valid_t: t };
            break;
        }
        if step_drift > CONSTRAINT_ABORT {
            return Err(Error::InvalidState {
                defect: step_drift,
                limit: CONSTRAINT_ABORT,
            });
        }
        current = next;
        if next_frame.is_some() {
            frame = next_frame;
        }
        t = t_new;
        drift = step_drift;
        done = k;

        let sup = sup_torsion(&current.primary().torsion());
        if let Some(ev) = doubling.observe(t, sup) {
            events.push(ev.clone());
            pending.push(ev);
        }
        if monitors.chart_positive && !chart_flagged {
            if let Some(s) = current.fx() {
                let min_f = s.min_f();
                if min_f < 0.0 {
                    chart_flagged = true;
                    let ev = Event {
                        kind: EventKind::ChartExit,
                        t,
                        detail: format!("min f = {min_f:e}"),
                    };
                    events.push(ev.clone());
                    pending.push(ev);
                }
            }
        }
        if !(sup <= monitors.sup_t_ceiling) {
            let ev = Event {
                kind: EventKind::SingularitySuspected,
                t,
                detail: format!("sup|T| = {sup:e} exceeds the ceiling {:e}", monitors.sup_t_ceiling),
            };
            events.push(ev.clone());
            pending.push(ev);
            status = RunStatus::SingularitySuspected { last_valid_t: t };
            break;
        }
        if k % config.diagnostics_every == 0 || k == steps {
            emit(&current, &frame, t, drift, &mut pending, &mut trajectory, sink)?;
        }
        if let (Some(every), Some(s)) = (config.checkpoint_every, current.fx()) {
            if k % every == 0 && k != steps {
                sink.checkpoint(k, s)?;
            }
        }
    }
    if !pending.is_empty() || trajectory.records.last().map_or(true, |r| r.t != t) {
        emit(&current, &frame, t, drift, &mut pending, &mut trajectory, sink)?;
    }
    if let Some(s) = current.fx() {
        sink.checkpoint(done, s)?;
    }
    Ok(RunOutcome {
        status,
        steps: done,
        t,
        events,
        trajectory,
        final_state: current.primary(),
        final_frame: frame,
        doubling_constant: doubling.empirical_constant(),
    })
}

fn advance_fx(
    s: &IsometricState,
    frame: &Option<FrameField>,
    h: f64,
    config: &FlowConfig,
) -> Result<(IsometricState, Option<FrameField>, f64)> {
    match frame {
        Some(fr) => {
            let (s2, f2, d) = step_framed(s, fr, h, config.integrator)?;
            Ok((s2, Some(f2), d))
        }
        None => {
            let (s2, d) = step_fx(s, h, config.integrator)?;
            Ok((s2, None, d))
        }
    }
}

/// Outcome of comparing a run at scale `c` with the rescaled base run.
#[derive(Clone, Debug, PartialEq)]
pub struct RescaleReport {
    pub c: f64,
    /// `max_t sup |φ_c(c²t) − φ(t)|` over paired snapshots.
    pub trajectory_discrepancy: f64,
    /// Largest relative defect of `E_c = c⁵ E` over the records.
    pub energy_defect: f64,
    /// Relative defect of Θ at a mid-run snapshot.
    pub theta_defect: f64,
    /// Relative defect of the sampled entropy at the final snapshot.
    pub entropy_defect: f64,
    pub passed: bool,
}

fn relative(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Runs `config` at scale 1 and at scale `c` (period `cL`, steps `c²dt`) and
/// compares the second run with the parabolic rescaling of the first.
pub fn rescale_check(config: &FlowConfig, c: f64) -> Result<RescaleReport> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Config(format!("scale factor must be positive, got {c}")));
    }
    let grid = config.validate()?;
    let mut base = config.clone();
    base.keep_snapshots = true;
    base.checkpoint_every = None;
    let initial = build_initial_state(&config.initial, &grid)?;
    let a = run_from(&base, initial.clone(), &mut NullSink)?;

    let scaled_grid: Grid = grid.with_period(grid.period() * c);
    let mut scaled = base.clone();
    scaled.grid = scaled_grid.spec();
    scaled.dt = config.dt * c * c;
    scaled.t_end = config.t_end * c * c;
    scaled.initial = config.initial.rescaled(c);
    for th in &mut scaled.monitor.theta {
        th.x0 = th.x0.map(|x| x * c);
        th.t0 *= c * c;
    }
    if let Some(e) = &mut scaled.monitor.entropy {
        e.sigma *= c * c;
    }
    let scaled_initial = IsometricState::new(initial.f.with_grid(&scaled_grid), initial.x.with_grid(&scaled_grid));
    let b = run_from(&scaled, scaled_initial, &mut NullSink)?;
    let expected = parabolic_rescale(&a.trajectory, c);

    if expected.snapshots.len() != b.trajectory.snapshots.len() {
        return Err(Error::Config("rescaled run produced a different number of snapshots".into()));
    }
    let mut discrepancy: f64 = 0.0;
    for (x, y) in expected.snapshots.iter().zip(&b.trajectory.snapshots) {
        discrepancy = discrepancy.max(x.state.phi().sub(&y.state.phi()).sup_norm());
        discrepancy = discrepancy.max(relative(x.t, y.t));
    }
    let energy_defect = expected
        .records
        .iter()
        .zip(&b.trajectory.records)
        .map(|(x, y)| relative(x.energy, y.energy))
        .fold(0.0, f64::max);

    let l = grid.period();
    let n = grid.points_per_dim();
    let mid = a.trajectory.snapshots.len() / 2;
    let (sa, sb) = (&a.trajectory.snapshots[mid], &b.trajectory.snapshots[mid]);
    let mut idx = [0usize; 7];
    for &d in grid.active_dims() {
        idx[d] = n / 4;
    }
    let x0 = grid.coords(grid.point_index(&idx));
    let spec_a = HeatKernelSpec::new(x0, sa.t + (l / 8.0).powi(2));
    let spec_b = HeatKernelSpec::new(x0.map(|x| x * c), spec_a.t0 * c * c);
    let theta_a = theta(&sa.state.torsion(), &spec_a, sa.t)?;
    let theta_b = theta(&sb.state.torsion(), &spec_b, sb.t)?;

    let sampling = EntropySampling {
        scales: 6,
        stride: (n / 8).max(1),
    };
    let sigma = (l / 4.0).powi(2);
    let last_a = a.trajectory.snapshots.last().expect("snapshots");
    let last_b = b.trajectory.snapshots.last().expect("snapshots");
    let ent_a = entropy(&last_a.state.torsion(), sigma, &sampling).value;
    let ent_b = entropy(&last_b.state.torsion(), sigma * c * c, &sampling).value;

    let theta_defect = relative(theta_a, theta_b);
    let entropy_defect = relative(ent_a, ent_b);
    let passed = discrepancy <= RESCALE_TRAJECTORY_TOL
        && energy_defect <= RESCALING_TOL
        && theta_defect <= RESCALING_TOL
        && entropy_defect <= RESCALING_TOL;
    Ok(RescaleReport {
        c,
        trajectory_discrepancy: discrepancy,
        energy_defect,
        theta_defect,
        entropy_defect,
        passed,
    })
}
