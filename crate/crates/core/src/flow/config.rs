use std::f64::consts::PI;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Integrator, Scheme};
use crate::bryant::IsometricState;
use crate::error::{Error, Result};
use crate::g2algebra::Vec7;
use crate::grid::{read_checkpoint, Grid, GridSpec, VectorField};

/// Largest admissible initial amplitude `sup |X|`.
pub const MAX_AMPLITUDE: f64 = 0.9;

/// Run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_cfl_safety")]
    pub cfl_safety: f64,
    #[serde(default = "default_every")]
    pub diagnostics_every: usize,
    /// Steps between checkpoints; the final state is always checkpointed.
    #[serde(default)]
    pub checkpoint_every: Option<usize>,
    /// Keep a snapshot at every diagnostics step in the returned trajectory.
    #[serde(default)]
    pub keep_snapshots: bool,
    pub grid: GridSpec,
    pub initial: InitialCondition,
    #[serde(default)]
    pub monitor: MonitorConfig,
    #[serde(default)]
    pub frame: Option<FrameConfig>,
}

fn default_cfl_safety() -> f64 {
    0.25
}

fn default_every() -> usize {
    1
}

impl FlowConfig {
    /// A configuration with default integrator, scheme and monitors.
    pub fn new(grid: GridSpec, initial: InitialCondition, dt: f64, t_end: f64) -> Self {
        FlowConfig {
            dt,
            t_end,
            integrator: Integrator::default(),
            scheme: Scheme::default(),
            cfl_safety: default_cfl_safety(),
            diagnostics_every: 1,
            checkpoint_every: None,
            keep_snapshots: false,
            grid,
            initial,
            monitor: MonitorConfig::default(),
            frame: None,
        }
    }

    /// Checks every field and the explicit stability bound; returns the grid.
    pub fn validate(&self) -> Result<Grid> {
        let grid = Grid::from_spec(&self.grid)?;
        let bad = |m: String| Err(Error::Config(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!("cfl_safety must lie in (0, 1], got {}", self.cfl_safety));
        }
        if self.diagnostics_every == 0 {
            return bad("diagnostics_every must be positive".into());
        }
        if self.checkpoint_every == Some(0) {
            return bad("checkpoint_every must be positive".into());
        }
        let limit = grid.cfl_limit(self.cfl_safety);
        if self.dt > limit {
            return bad(format!("dt = {} exceeds the stability limit {limit:e}", self.dt));
        }
        if self.frame.is_some() && self.scheme == Scheme::Direct {
            return bad("frame evolution needs the fx scheme".into());
        }
        if !(self.monitor.sup_t_ceiling > 0.0) {
            return bad("sup_t_ceiling must be positive".into());
        }
        for th in &self.monitor.theta {
            if !(th.t0 > 0.0) {
                return bad(format!("theta t0 must be positive, got {}", th.t0));
            }
        }
        if let Some(e) = &self.monitor.entropy {
            if !(e.sigma > 0.0) || e.scales == 0 || e.stride == 0 {
                return bad("entropy monitor needs sigma > 0, scales > 0, stride > 0".into());
            }
        }
        self.initial.validate(&grid)?;
        Ok(grid)
    }

    /// Number of steps to reach `t_end`.
    pub fn steps(&self) -> usize {
        let n = self.t_end / self.dt;
        let r = n.round();
        if (n - r).abs() < 1e-9 * n.max(1.0) {
            r as usize
        } else {
            n.ceil() as usize
        }
    }
}

/// Initial-condition families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// `X = a sin(2π x_d / L) e_c`.
    SingleMode {
        amplitude: f64,
        #[serde(default)]
        direction: usize,
        #[serde(default = "default_component")]
        component: usize,
    },
    /// Random trigonometric polynomial with wavenumbers up to `max_wavenumber`
    /// in each active direction, scaled to `sup |X| = a`.
    MultiMode {
        amplitude: f64,
        #[serde(default = "default_wavenumber")]
        max_wavenumber: usize,
        seed: u64,
        #[serde(default)]
        components: Option<Vec<usize>>,
    },
    /// `X = a Π_d exp(κ(cos(2π(x_d − c_d)/L) − 1)) e_c`, a periodic bump.
    Localized {
        amplitude: f64,
        center: [f64; 7],
        concentration: f64,
        #[serde(default = "default_component")]
        component: usize,
    },
    Checkpoint {
        path: PathBuf,
    },
}

fn default_component() -> usize {
    1
}

fn default_wavenumber() -> usize {
    2
}

impl InitialCondition {
    pub fn amplitude(&self) -> Option<f64> {
        match self {
            InitialCondition::SingleMode { amplitude, .. }
            | InitialCondition::MultiMode { amplitude, .. }
            | InitialCondition::Localized { amplitude, .. } => Some(*amplitude),
            InitialCondition::Checkpoint { .. } => None,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            InitialCondition::MultiMode { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    fn validate(&self, grid: &Grid) -> Result<()> {
        if let Some(a) = self.amplitude() {
            if !(0.0..=MAX_AMPLITUDE).contains(&a) {
                return Err(Error::Config(format!("amplitude must lie in [0, {MAX_AMPLITUDE}], got {a}")));
            }
        }
        let component_ok = |c: usize| {
            if c < 7 {
                Ok(())
            } else {
                Err(Error::Config(format!("component {c} out of range")))
            }
        };
        match self {
            InitialCondition::SingleMode { direction, component, .. } => {
                component_ok(*component)?;
                if !grid.is_active(*direction) {
                    return Err(Error::Config(format!("direction {direction} is not active")));
                }
            }
            InitialCondition::MultiMode {
                max_wavenumber,
                components,
                ..
            } => {
                if *max_wavenumber == 0 || 2 * max_wavenumber >= grid.points_per_dim() {
                    return Err(Error::Config(format!(
                        "max_wavenumber must lie in 1..{}",
                        grid.points_per_dim() / 2
                    )));
                }
                if let Some(cs) = components {
                    if cs.is_empty() {
                        return Err(Error::Config("components must be nonempty".into()));
                    }
                    cs.iter().try_for_each(|&c| component_ok(c))?;
                }
            }
            InitialCondition::Localized {
                concentration,
                component,
                ..
            } => {
                component_ok(*component)?;
                if !(*concentration >= 0.0) {
                    return Err(Error::Config("concentration must be nonnegative".into()));
                }
            }
            InitialCondition::Checkpoint { .. } => {}
        }
        Ok(())
    }

    /// The same family on a grid whose period is scaled by `c`.
    pub fn rescaled(&self, c: f64) -> Self {
        match self {
            InitialCondition::Localized {
                amplitude,
                center,
                concentration,
                component,
            } => InitialCondition::Localized {
                amplitude: *amplitude,
                center: center.map(|x| x * c),
                concentration: *concentration,
                component: *component,
            },
            other => other.clone(),
        }
    }
}

/// Builds the initial state of a family on `grid`.
pub fn build_initial_state(ic: &InitialCondition, grid: &Grid) -> Result<IsometricState> {
    ic.validate(grid)?;
    let l = grid.period();
    let x = match ic {
        InitialCondition::SingleMode {
            amplitude,
            direction,
            component,
        } => VectorField::from_fn(grid, |c| {
            let mut v = Vec7::ZERO;
            v[*component] = amplitude * (2.0 * PI * c[*direction] / l).sin();
            v
        }),
        InitialCondition::MultiMode {
            amplitude,
            max_wavenumber,
            seed,
            components,
        } => multi_mode(grid, *amplitude, *max_wavenumber, *seed, components.as_deref()),
        InitialCondition::Localized {
            amplitude,
            center,
            concentration,
            component,
        } => VectorField::from_fn(grid, |c| {
            let mut e = 0.0;
            for &d in grid.active_dims() {
                e += concentration * ((2.0 * PI * (c[d] - center[d]) / l).cos() - 1.0);
            }
            let mut v = Vec7::ZERO;
            v[*component] = amplitude * e.exp();
            v
        }),
        InitialCondition::Checkpoint { path } => {
            let file = std::fs::File::open(path)
                .map_err(|e| Error::Checkpoint(format!("cannot open {}: {e}", path.display())))?;
            let cp = read_checkpoint(std::io::BufReader::new(file))?;
            if cp.grid.spec() != grid.spec() {
                return Err(Error::GridMismatch);
            }
            let mut s = IsometricState::new(cp.f, cp.x);
            s.project();
            return Ok(s);
        }
    };
    IsometricState::from_x(x)
}

fn multi_mode(grid: &Grid, amplitude: f64, kmax: usize, seed: u64, components: Option<&[usize]>) -> VectorField {
    let active = grid.active_dims().to_vec();
    let k = kmax as i64;
    // Wavevectors in [-k, k]^d modulo sign, first nonzero entry positive.
    let mut modes: Vec<Vec<i64>> = Vec::new();
    let mut m = vec![-k; active.len()];
    loop {
        if let Some(first) = m.iter().find(|&&v| v != 0) {
            if *first > 0 {
                modes.push(m.clone());
            }
        }
        let mut i = 0;
        while i < m.len() {
            m[i] += 1;
            if m[i] <= k {
                break;
            }
            m[i] = -k;
            i += 1;
        }
        if i == m.len() {
            break;
        }
    }
    let all: Vec<usize> = (0..7).collect();
    let comps = components.unwrap_or(&all);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = Vec::with_capacity(comps.len() * modes.len());
    for _ in comps {
        for _ in &modes {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            coeffs.push((a, b));
        }
    }
    let l = grid.period();
    let raw = VectorField::from_fn(grid, |c| {
        let mut v = Vec7::ZERO;
        for (ci, &comp) in comps.iter().enumerate() {
            let mut s = 0.0;
            for (mi, mode) in modes.iter().enumerate() {
                let phase: f64 = mode.iter().zip(&active).map(|(&w, &d)| w as f64 * c[d]).sum::<f64>() * 2.0 * PI / l;
                let (a, b) = coeffs[ci * modes.len() + mi];
                s += a * phase.cos() + b * phase.sin();
            }
            v[comp] = s;
        }
        v
    });
    let sup = raw.max_of(|v| v.norm());
    if sup == 0.0 {
        raw
    } else {
        raw.scaled(amplitude / sup)
    }
}

/// Runtime monitors evaluated at diagnostics steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorConfig {
    /// `sup |T|` above this ends the run with a singularity event.
    #[serde(default = "default_ceiling")]
    pub sup_t_ceiling: f64,
    /// Flag a chart-exit event when `min f < 0`.
    #[serde(default)]
    pub chart_positive: bool,
    #[serde(default)]
    pub theta: Vec<ThetaMonitor>,
    #[serde(default)]
    pub entropy: Option<EntropyMonitor>,
    #[serde(default = "default_true")]
    pub shi: bool,
}

fn default_ceiling() -> f64 {
    1e6
}

fn default_true() -> bool {
    true
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            sup_t_ceiling: default_ceiling(),
            chart_positive: false,
            theta: Vec::new(),
            entropy: None,
            shi: true,
        }
    }
}

/// Θ centred at `(x0, t0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaMonitor {
    pub x0: [f64; 7],
    pub t0: f64,
    #[serde(default = "default_images")]
    pub image_radius: usize,
}

fn default_images() -> usize {
    3
}

/// Sampled entropy over centres on a strided sub-lattice and `scales`
/// log-spaced times in `(0, σ]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyMonitor {
    pub sigma: f64,
    #[serde(default = "default_scales")]
    pub scales: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_scales() -> usize {
    8
}

fn default_stride() -> usize {
    4
}

/// Frame evolved in lockstep with the flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_alpha() -> f64 {
    -0.5
}

fn default_beta() -> f64 {
    0.5
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            alpha: default_alpha(),
            beta: default_beta(),
        }
    }
}
