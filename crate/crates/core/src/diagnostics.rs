//! Scalar functionals of the torsion and the monitors recorded along a run.
//!
//! On the flat torus the backwards heat kernel `u_(x0,t0)` is a product of
//! wrapped Gaussians, one per active direction; an inactive direction
//! contributes the constant `1/L`. Writing `u = e^{−f} / (4π(t0 − t))^{7/2}`,
//! [`HeatKernelSpec::grad_f`] returns `∇f = −∇u/u`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{FlowState, MonitorConfig, ThetaMonitor, Trajectory};
use crate::g2algebra::{Mat7, Vec7};
use crate::grid::{div2, integrate, partial, Field, Grid, MatrixField, Partials, ScalarField, VectorField};

/// `|T|² = T_pq T_pq` pointwise.
pub fn torsion_norm2(t: &MatrixField) -> ScalarField {
    t.map(|m| m.norm2())
}

/// `E = ½ ∫ |T|²`.
pub fn energy(t: &MatrixField) -> f64 {
    0.5 * integrate(&torsion_norm2(t))
}

/// `sup |T|`.
pub fn sup_torsion(t: &MatrixField) -> f64 {
    t.max_of(|m| m.norm2()).sqrt()
}

/// `∫ |Div T|²` with `Div T = div2(T)`.
pub fn div_torsion_l2(t: &MatrixField) -> f64 {
    integrate(&div2(t).map(|v| v.norm2()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SingularitySuspected,
    ChartExit,
    TorsionDoubled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub t: f64,
    pub detail: String,
}

/// One Θ value of a record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaValue {
    pub x0: [f64; 7],
    pub t0: f64,
    /// `None` once `t ≥ t0`.
    pub value: Option<f64>,
}

/// Telemetry at one diagnostics step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    #[serde(rename = "sup_T")]
    pub sup_t: f64,
    #[serde(rename = "div_T_l2")]
    pub div_t_l2: f64,
    pub constraint_defect: f64,
    pub events: Vec<Event>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theta: Vec<ThetaValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_estimate: Option<f64>,
    /// `sup|∇^m T| t^{m/2} / sup|T(0)|` for `m = 1, 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shi_quantities: Option<[f64; 2]>,
    /// `sup |φ_fx − φ_direct|` when both schemes run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_discrepancy: Option<f64>,
    /// `sup |ιᵀι − I|` when a frame is evolved.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_defect: Option<f64>,
}

impl DiagnosticsRecord {
    /// The record of the parabolically rescaled run.
    pub fn rescaled(&self, c: f64) -> Self {
        let c2 = c * c;
        DiagnosticsRecord {
            t: self.t * c2,
            energy: self.energy * c.powi(5),
            sup_t: self.sup_t / c,
            div_t_l2: self.div_t_l2 * c.powi(3),
            constraint_defect: self.constraint_defect,
            events: self
                .events
                .iter()
                .map(|e| Event {
                    t: e.t * c2,
                    ..e.clone()
                })
                .collect(),
            theta: self
                .theta
                .iter()
                .map(|th| ThetaValue {
                    x0: th.x0.map(|x| x * c),
                    t0: th.t0 * c2,
                    value: th.value,
                })
                .collect(),
            ..self.clone()
        }
    }
}

/// Computes a record for `state` at time `t`.
pub fn record_for(
    state: &FlowState,
    t: f64,
    constraint_defect: f64,
    monitors: &MonitorConfig,
    sup_t0: f64,
) -> Result<DiagnosticsRecord> {
    let torsion = state.torsion();
    let mut rec = DiagnosticsRecord {
        t,
        energy: energy(&torsion),
        sup_t: sup_torsion(&torsion),
        div_t_l2: div_torsion_l2(&torsion),
        constraint_defect,
        events: Vec::new(),
        theta: Vec::new(),
        entropy_estimate: None,
        shi_quantities: None,
        phi_discrepancy: None,
        frame_defect: None,
    };
    for ThetaMonitor { x0, t0, image_radius } in &monitors.theta {
        let spec = HeatKernelSpec {
            center: *x0,
            t0: *t0,
            image_radius: *image_radius,
        };
        let value = if t < *t0 { Some(theta(&torsion, &spec, t)?) } else { None };
        rec.theta.push(ThetaValue { x0: *x0, t0: *t0, value });
    }
    if let Some(e) = &monitors.entropy {
        let sampling = EntropySampling {
            scales: e.scales,
            stride: e.stride,
        };
        rec.entropy_estimate = Some(entropy(&torsion, e.sigma, &sampling).value);
    }
    if monitors.shi {
        rec.shi_quantities = Some(shi_quantities(&torsion, t, sup_t0));
    }
    Ok(rec)
}

/// Centre and final time of a backwards heat kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatKernelSpec {
    pub center: [f64; 7],
    pub t0: f64,
    /// Images summed per active direction on each side.
    pub image_radius: usize,
}

/// Per-direction wrapped Gaussian and its first two derivatives on the grid
/// abscissae, normalized to unit discrete mass.
struct KernelFactors {
    grid: Grid,
    w: [Vec<f64>; 7],
    dw: [Vec<f64>; 7],
    ddw: [Vec<f64>; 7],
    inactive: f64,
    raw_mass: f64,
}

impl KernelFactors {
    fn value(&self, point: usize) -> f64 {
        let idx = self.grid.multi_index(point);
        let mut u = 1.0;
        for d in 0..7 {
            u *= if self.grid.is_active(d) { self.w[d][idx[d]] } else { self.inactive };
        }
        u
    }

    /// `(∂_d log u, ∂_d² log u)` per direction.
    fn log_derivatives(&self, point: usize) -> ([f64; 7], [f64; 7]) {
        let idx = self.grid.multi_index(point);
        let mut g = [0.0; 7];
        let mut h = [0.0; 7];
        for &d in self.grid.active_dims() {
            let (w, dw, ddw) = (self.w[d][idx[d]], self.dw[d][idx[d]], self.ddw[d][idx[d]]);
            g[d] = dw / w;
            h[d] = ddw / w - g[d] * g[d];
        }
        (g, h)
    }
}

impl HeatKernelSpec {
    pub fn new(center: [f64; 7], t0: f64) -> Self {
        HeatKernelSpec {
            center,
            t0,
            image_radius: 3,
        }
    }

    /// `t0 − t`, rejecting `t ≥ t0`.
    pub fn tau(&self, t: f64) -> Result<f64> {
        if t < self.t0 {
            Ok(self.t0 - t)
        } else {
            Err(Error::TimeNotBeforeFinal { t, t0: self.t0 })
        }
    }

    fn factors(&self, grid: &Grid, t: f64) -> Result<KernelFactors> {
        let tau = self.tau(t)?;
        let l = grid.period();
        let n = grid.points_per_dim();
        let h = grid.spacing();
        let norm = 1.0 / (4.0 * PI * tau).sqrt();
        let r = self.image_radius as i64;
        let mut w: [Vec<f64>; 7] = Default::default();
        let mut dw: [Vec<f64>; 7] = Default::default();
        let mut ddw: [Vec<f64>; 7] = Default::default();
        let mut raw_mass = 1.0;
        for &d in grid.active_dims() {
            let (mut a, mut b, mut c) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
            for i in 0..n {
                let mut s0 = (i as f64 * h - self.center[d]).rem_euclid(l);
                if s0 > 0.5 * l {
                    s0 -= l;
                }
                for m in -r..=r {
                    let s = s0 + m as f64 * l;
                    let g = norm * (-s * s / (4.0 * tau)).exp();
                    a[i] += g;
                    b[i] += -s / (2.0 * tau) * g;
                    c[i] += (s * s / (4.0 * tau * tau) - 1.0 / (2.0 * tau)) * g;
                }
            }
            let mass = h * crate::grid::pairwise_sum(&a);
            raw_mass *= mass;
            for v in a.iter_mut().chain(b.iter_mut()).chain(c.iter_mut()) {
                *v /= mass;
            }
            w[d] = a;
            dw[d] = b;
            ddw[d] = c;
        }
        Ok(KernelFactors {
            grid: *grid,
            w,
            dw,
            ddw,
            inactive: 1.0 / l,
            raw_mass,
        })
    }

    /// `u(·, t)` on the grid.
    pub fn value(&self, grid: &Grid, t: f64) -> Result<ScalarField> {
        let k = self.factors(grid, t)?;
        Ok(Field::from_index_fn(grid, |p| k.value(p)))
    }

    /// `∇f = −∇u / u`.
    pub fn grad_f(&self, grid: &Grid, t: f64) -> Result<VectorField> {
        let k = self.factors(grid, t)?;
        Ok(Field::from_index_fn(grid, |p| Vec7(k.log_derivatives(p).0) * -1.0))
    }

    /// Diagonal of `H = ∇∇u − ∇u ∇u / u + u g / (2(t0 − t))`; off-diagonal
    /// entries vanish for a product kernel.
    pub fn hessian_diagonal(&self, grid: &Grid, t: f64) -> Result<VectorField> {
        let tau = self.tau(t)?;
        let k = self.factors(grid, t)?;
        Ok(Field::from_index_fn(grid, |p| {
            let u = k.value(p);
            let (_, h) = k.log_derivatives(p);
            Vec7(h.map(|x| u * (x + 0.5 / tau)))
        }))
    }

    /// `|m − 1|` for the discrete mass `m` of the truncated image sum.
    pub fn mass_defect(&self, grid: &Grid, t: f64) -> Result<f64> {
        Ok((self.factors(grid, t)?.raw_mass - 1.0).abs())
    }
}

/// `Θ = (t0 − t) ∫ |T|² u`.
pub fn theta(t_field: &MatrixField, spec: &HeatKernelSpec, t: f64) -> Result<f64> {
    let tau = spec.tau(t)?;
    let u = spec.value(t_field.grid(), t)?;
    Ok(tau * integrate(&torsion_norm2(t_field).mul(&u)))
}

/// The two flat-space terms of `dΘ/dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonotonicityTerms {
    /// `−2(t0 − t) ∫ |Div T − ∇f⌟T|² u`.
    pub dissipation: f64,
    /// `−2(t0 − t) ∫ T_lq T_pq H_pl`.
    pub hessian: f64,
}

pub fn monotonicity_terms(t_field: &MatrixField, spec: &HeatKernelSpec, t: f64) -> Result<MonotonicityTerms> {
    let grid = t_field.grid();
    let tau = spec.tau(t)?;
    let u = spec.value(grid, t)?;
    let gf = spec.grad_f(grid, t)?;
    let hd = spec.hessian_diagonal(grid, t)?;
    let div_t = div2(t_field);
    let diss = Field::from_index_fn(grid, |p| {
        let m = t_field.at(p);
        (div_t.at(p) - m.vec_mul(&gf.at(p))).norm2() * u.at(p)
    });
    let hess = Field::from_index_fn(grid, |p| {
        let m = t_field.at(p);
        let h = hd.at(p);
        (0..7).map(|l| m.row(l).norm2() * h[l]).sum::<f64>()
    });
    Ok(MonotonicityTerms {
        dissipation: -2.0 * tau * integrate(&diss),
        hessian: -2.0 * tau * integrate(&hess),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonotonicitySample {
    pub t: f64,
    pub theta: f64,
    /// Centered difference of Θ over the neighbouring snapshots.
    pub dtheta_dt: f64,
    pub terms: MonotonicityTerms,
    /// `dΘ/dt − dissipation − hessian`.
    pub residual: f64,
}

/// Compares the centered `dΘ/dt` with the monotonicity formula at every
/// interior snapshot.
pub fn monotonicity_residual(traj: &Trajectory, spec: &HeatKernelSpec) -> Result<Vec<MonotonicitySample>> {
    let n = traj.snapshots.len();
    if n < 3 {
        return Err(Error::InsufficientSnapshots { needed: 3, got: n });
    }
    let torsions: Vec<MatrixField> = traj.snapshots.iter().map(|s| s.state.torsion()).collect();
    let thetas: Vec<f64> = torsions
        .iter()
        .zip(&traj.snapshots)
        .map(|(tor, s)| theta(tor, spec, s.t))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(n - 2);
    for i in 1..n - 1 {
        let (ta, tb) = (traj.snapshots[i - 1].t, traj.snapshots[i + 1].t);
        let d = (thetas[i + 1] - thetas[i - 1]) / (tb - ta);
        let t = traj.snapshots[i].t;
        let terms = monotonicity_terms(&torsions[i], spec, t)?;
        out.push(MonotonicitySample {
            t,
            theta: thetas[i],
            dtheta_dt: d,
            terms,
            residual: d - terms.dissipation - terms.hessian,
        });
    }
    Ok(out)
}

/// Centres on every `stride`-th grid line of each active direction and
/// `scales` times `σ, σ/2, σ/4, …`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntropySampling {
    pub scales: usize,
    pub stride: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropySample {
    pub value: f64,
    pub point: usize,
    pub center: [f64; 7],
    pub scale: f64,
}

/// Sampled `λ(φ, σ) = max s ∫ |T|² u_(x,s)(·, 0)`; a lower bound for the
/// maximum over all centres and scales in `(0, σ]`.
pub fn entropy(t_field: &MatrixField, sigma: f64, sampling: &EntropySampling) -> EntropySample {
    let grid = *t_field.grid();
    let t2 = torsion_norm2(t_field);
    let stride = sampling.stride.max(1);
    let centers: Vec<usize> = (0..grid.npoints())
        .filter(|&p| {
            let idx = grid.multi_index(p);
            grid.active_dims().iter().all(|&d| idx[d] % stride == 0)
        })
        .collect();
    let scales: Vec<f64> = (0..sampling.scales.max(1)).map(|j| sigma * 0.5f64.powi(j as i32)).collect();
    let candidates: Vec<EntropySample> = centers
        .par_iter()
        .flat_map_iter(|&p| {
            let t2 = &t2;
            scales.iter().map(move |&s| {
                let spec = HeatKernelSpec::new(grid.coords(p), s);
                let u = spec.value(&grid, 0.0).expect("positive scale");
                EntropySample {
                    value: s * integrate(&t2.mul(&u)),
                    point: p,
                    center: grid.coords(p),
                    scale: s,
                }
            })
        })
        .collect();
    candidates
        .into_iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("at least one sample")
}

/// Outcome of the exponential fit of `∫ |Div T|²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecayFit {
    /// Fitted rate and the bound `Λ/2`.
    Rate { rate: f64, bound: f64 },
    /// `sup |T|² ≤ Λ/14` failed somewhere in the window.
    HypothesisNotMet { max_sup_t2: f64, limit: f64 },
    /// `∫ |Div T|²` vanishes identically.
    Undefined,
}

impl DecayFit {
    /// Whether the rate reaches `(1 − slack) Λ/2`; `None` unless a rate was fitted.
    pub fn meets_bound(&self, slack: f64) -> Option<bool> {
        match self {
            DecayFit::Rate { rate, bound } => Some(*rate >= (1.0 - slack) * bound),
            _ => None,
        }
    }
}

/// Least-squares rate of `log ∫|Div T|²` over the records, with
/// `Λ = (2π/L)²`.
pub fn decay_rate(records: &[DiagnosticsRecord], period: f64) -> DecayFit {
    let lambda = (2.0 * PI / period).powi(2);
    let limit = lambda / 14.0;
    let max_sup_t2 = records.iter().map(|r| r.sup_t * r.sup_t).fold(0.0, f64::max);
    if max_sup_t2 > limit {
        return DecayFit::HypothesisNotMet { max_sup_t2, limit };
    }
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.div_t_l2 > 0.0)
        .map(|r| (r.t, r.div_t_l2.ln()))
        .collect();
    if pts.len() < 2 || pts.len() < records.len() {
        return DecayFit::Undefined;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    DecayFit::Rate {
        rate: -sxy / sxx,
        bound: lambda / 2.0,
    }
}

/// Largest increase of `∫ |Div T|²` between consecutive records, relative
/// to its first value; nonpositive when the sequence is nonincreasing.
pub fn convexity_defect(records: &[DiagnosticsRecord]) -> f64 {
    let first = records.first().map_or(0.0, |r| r.div_t_l2);
    if first == 0.0 {
        return 0.0;
    }
    records
        .windows(2)
        .map(|w| (w[1].div_t_l2 - w[0].div_t_l2) / first)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterpolationReport {
    pub energy: f64,
    pub sup_t: f64,
    pub sup_grad_t: f64,
    /// False when `E < δ` and yet `sup |T| ≥ ε`.
    pub consistent: bool,
}

/// The data behind "small energy and bounded `∇T` force small torsion".
pub fn interpolation_monitor(t_field: &MatrixField, delta: f64, eps: f64) -> InterpolationReport {
    let e = energy(t_field);
    let sup_t = sup_torsion(t_field);
    let sup_grad_t = sup_gradient(t_field);
    InterpolationReport {
        energy: e,
        sup_t,
        sup_grad_t,
        consistent: !(e < delta && sup_t >= eps),
    }
}

/// `sup |∇T|`.
pub fn sup_gradient(t_field: &MatrixField) -> f64 {
    let d = Partials::of(t_field);
    Field::<f64>::from_index_fn(t_field.grid(), |p| {
        (0..7).map(|i| d.at(i, p).norm2()).sum::<f64>()
    })
    .max_of(|x| x)
    .sqrt()
}

/// `sup |∇²T|`.
pub fn sup_second_gradient(t_field: &MatrixField) -> f64 {
    let grid = *t_field.grid();
    let active = grid.active_dims().to_vec();
    let first: Vec<MatrixField> = active.iter().map(|&d| partial(t_field, d)).collect();
    let mut acc = ScalarField::zeros(&grid);
    for fi in &first {
        for &d in &active {
            let dd = partial(fi, d);
            acc = acc.add(&dd.map(|m: Mat7| m.norm2()));
        }
    }
    acc.max_of(|x| x).sqrt()
}

/// `[sup|∇T| t^{1/2}, sup|∇²T| t] / sup|T(0)|`; zeros when `sup|T(0)| = 0`.
pub fn shi_quantities(t_field: &MatrixField, t: f64, sup_t0: f64) -> [f64; 2] {
    if sup_t0 == 0.0 {
        return [0.0, 0.0];
    }
    [
        sup_gradient(t_field) * t.max(0.0).sqrt() / sup_t0,
        sup_second_gradient(t_field) * t.max(0.0) / sup_t0,
    ]
}

/// Shi quantities at every snapshot.
pub fn shi_monitor(traj: &Trajectory) -> Vec<(f64, [f64; 2])> {
    let Some(first) = traj.snapshots.first() else {
        return Vec::new();
    };
    let t0 = first.t;
    let sup0 = sup_torsion(&first.state.torsion());
    traj.snapshots
        .iter()
        .map(|s| (s.t, shi_quantities(&s.state.torsion(), s.t - t0, sup0)))
        .collect()
}

/// Watches for the first time `sup |T|` exceeds twice its initial value.
#[derive(Clone, Debug)]
pub struct DoublingMonitor {
    initial: f64,
    t_start: f64,
    fired: Option<f64>,
}

impl DoublingMonitor {
    pub fn new(t_start: f64, sup_t0: f64) -> Self {
        DoublingMonitor {
            initial: sup_t0,
            t_start,
            fired: None,
        }
    }

    /// Returns an event the first time the threshold is crossed.
    pub fn observe(&mut self, t: f64, sup_t: f64) -> Option<Event> {
        if self.fired.is_some() || self.initial == 0.0 || sup_t <= 2.0 * self.initial {
            return None;
        }
        self.fired = Some(t);
        let c = self.empirical_constant().unwrap_or(f64::NAN);
        Some(Event {
            kind: EventKind::TorsionDoubled,
            t,
            detail: format!("sup|T| = {sup_t:e} > 2 sup|T(0)| = {:e}; empirical C = {c:e}", 2.0 * self.initial),
        })
    }

    /// The smallest `C` with `t_double ≥ 1/(C sup|T(0)|²)`.
    pub fn empirical_constant(&self) -> Option<f64> {
        self.fired
            .map(|t| 1.0 / ((t - self.t_start) * self.initial * self.initial))
    }

    pub fn doubling_time(&self) -> Option<f64> {
        self.fired.map(|t| t - self.t_start)
    }
}

/// `∫ u(·, t)`.
pub fn kernel_mass(spec: &HeatKernelSpec, grid: &Grid, t: f64) -> Result<f64> {
    Ok(integrate(&spec.value(grid, t)?))
}
