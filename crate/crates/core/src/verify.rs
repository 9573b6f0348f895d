//! Machine-checkable verification suites behind `g2flow verify`.
//!
//! Each suite returns rows of `(name, measured, threshold, order, pass)`.
//! Refinement rows report the reduction ratio of a residual when `h` is
//! halved (with `dt ∝ h²`) and the implied order `log2(ratio)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bryant::{metric_from_phi, phi_of_state, psi_of_state, torsion_from_phi, torsion_of_state, IsometricState};
use crate::connection::{
    bianchi_residual, evolve_framed, laplacian_d, laplacian_d_composite, lie_decomposition_residual, max_residual,
    reaction_diffusion_residual, reaction_diffusion_residual_with, second_variation_identity_defect,
    first_variation_residual, torsion_evolution_residual, FrameField,
};
use crate::diagnostics::{monotonicity_residual, HeatKernelSpec};
use crate::error::{Error, Result};
use crate::flow::{build_initial_state, evolve_fx, InitialCondition, Integrator, Trajectory};
use crate::g2algebra::{hodge_star_3, standard_tables, validate_tables, Form3, Mat7, Vec7, NCOMP};
use crate::grid::{Field, Grid, MatrixField};
use crate::tolerances::{ISOMETRY_TOL, ORDER_SLACK, POINTWISE_IDENTITY_TOL, REFINEMENT_RATIO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identities,
    Evolution,
    Connection,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identities" => Ok(Suite::Identities),
            "evolution" => Ok(Suite::Evolution),
            "connection" => Ok(Suite::Connection),
            other => Err(Error::Config(format!("unknown suite {other:?}"))),
        }
    }
}

/// How `measured` is compared with `threshold`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationRow {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub order: Option<f64>,
    pub pass: bool,
}

impl VerificationRow {
    fn at_most(name: &str, measured: f64, threshold: f64) -> Self {
        VerificationRow {
            name: name.into(),
            measured,
            threshold,
            comparison: Comparison::AtMost,
            order: None,
            pass: measured <= threshold,
        }
    }

    fn at_least(name: &str, measured: f64, threshold: f64) -> Self {
        VerificationRow {
            name: name.into(),
            measured,
            threshold,
            comparison: Comparison::AtLeast,
            order: None,
            pass: measured >= threshold,
        }
    }

    fn refinement(name: &str, coarse: f64, fine: f64) -> Self {
        let ratio = coarse / fine;
        VerificationRow {
            order: Some(ratio.log2()),
            ..Self::at_least(name, ratio, REFINEMENT_RATIO)
        }
    }

    /// A negative control passes when refinement does not reduce the residual.
    fn control(name: &str, coarse: f64, fine: f64) -> Self {
        let ratio = coarse / fine;
        VerificationRow {
            order: Some(ratio.log2()),
            ..Self::at_most(name, ratio, REFINEMENT_RATIO)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub rows: Vec<VerificationRow>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// `name,measured,threshold,comparison,order,pass` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,measured,threshold,comparison,order,pass\n");
        for r in &self.rows {
            let cmp = match r.comparison {
                Comparison::AtMost => "<=",
                Comparison::AtLeast => ">=",
            };
            let order = r.order.map(|o| format!("{o:.3}")).unwrap_or_default();
            let _ = writeln!(out, "{},{:e},{:e},{cmp},{order},{}", r.name, r.measured, r.threshold, r.pass);
        }
        out
    }
}

pub fn run_suite(suite: Suite) -> Result<SuiteReport> {
    let rows = match suite {
        Suite::Identities => identities()?,
        Suite::Evolution => evolution()?,
        Suite::Connection => connection()?,
    };
    Ok(SuiteReport { suite, rows })
}

fn grid(n: usize) -> Result<Grid> {
    Grid::new(1.0, n, &[0, 1], 2)
}

/// Smooth multi-mode state used by the refinement studies.
pub fn smooth_state(n: usize, amplitude: f64, seed: u64) -> Result<IsometricState> {
    let ic = InitialCondition::MultiMode {
        amplitude,
        max_wavenumber: 1,
        seed,
        components: None,
    };
    build_initial_state(&ic, &grid(n)?)
}

fn random_vec(rng: &mut ChaCha8Rng) -> Vec7 {
    Vec7(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
}

fn random_mat(rng: &mut ChaCha8Rng) -> Mat7 {
    let mut m = Mat7::ZERO;
    for i in 0..7 {
        m.0[i] = random_vec(rng).0;
    }
    m
}

fn identities() -> Result<Vec<VerificationRow>> {
    let t = standard_tables();
    let mut rows: Vec<VerificationRow> = validate_tables(t)
        .checks
        .iter()
        .map(|c| VerificationRow::at_most(c.name, c.defect.unsigned_abs() as f64, 0.0))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6732);
    let phi = t.phi_form();
    let (mut anti, mut orth, mut hodge, mut second) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let (x, y) = (random_vec(&mut rng), random_vec(&mut rng));
        let c = phi.cross(&x, &y);
        anti = anti.max((c + phi.cross(&y, &x)).max_abs());
        orth = orth.max(c.dot(&x).abs() / x.norm2().max(1e-300) / y.norm());
        let mut a = Form3::ZERO;
        for k in 0..NCOMP {
            a.0[k] = rng.gen_range(-1.0..1.0);
        }
        hodge = hodge.max((crate::g2algebra::hodge_star_4(&hodge_star_3(&a)) - a).max_abs());
        let d = second_variation_identity_defect(&x, &random_mat(&mut rng), &random_mat(&mut rng), phi);
        second = second.max(d.relative());
    }
    rows.push(VerificationRow::at_most("cross_antisymmetry", anti, POINTWISE_IDENTITY_TOL));
    rows.push(VerificationRow::at_most("cross_orthogonality", orth, POINTWISE_IDENTITY_TOL));
    rows.push(VerificationRow::at_most("hodge_involution", hodge, 1e-14));
    rows.push(VerificationRow::at_most("second_variation_identity", second, POINTWISE_IDENTITY_TOL));

    let mut iso = 0.0f64;
    let mut star = 0.0f64;
    for seed in 0..4 {
        let s = smooth_state(16, 0.9, seed)?;
        let phi = phi_of_state(&s)?;
        let g = metric_from_phi(&phi)?;
        iso = iso.max(g.max_of(|m| (m + Mat7::diagonal(-1.0)).max_abs()));
        let psi = psi_of_state(&s)?;
        star = star.max(phi.map(|a| hodge_star_3(&a)).sub(&psi).sup_norm());
    }
    rows.push(VerificationRow::at_most("bryant_isometry", iso, ISOMETRY_TOL));
    rows.push(VerificationRow::at_most("bryant_psi_is_star_phi", star, ISOMETRY_TOL));
    Ok(rows)
}

fn torsion_oracle_error(n: usize) -> Result<f64> {
    let s = smooth_state(n, 0.3, 7)?;
    let direct = torsion_from_phi(&phi_of_state(&s)?)?;
    Ok(torsion_of_state(&s).sub(&direct).sup_norm())
}

/// Snapshots every step for `steps` steps with `dt = 0.1 h²`.
fn short_run(n: usize, framed: bool) -> Result<Trajectory> {
    let s = smooth_state(n, 0.1, 11)?;
    let h = 1.0 / n as f64;
    let dt = 0.1 * h * h;
    if framed {
        evolve_framed(&s, &FrameField::identity(s.grid()), dt, 4, Integrator::Rk4, 1)
    } else {
        evolve_fx(&s, dt, 4, Integrator::Rk4, 1)
    }
}

fn localized_run(n: usize) -> Result<(Trajectory, HeatKernelSpec)> {
    let mut c = [0.0; 7];
    c[0] = 0.5;
    c[1] = 0.5;
    let ic = InitialCondition::Localized {
        amplitude: 0.1,
        center: c,
        concentration: 1.0,
        component: 1,
    };
    let s = build_initial_state(&ic, &grid(n)?)?;
    let h = 1.0 / n as f64;
    let traj = evolve_fx(&s, 0.1 * h * h, 4, Integrator::Rk4, 1)?;
    let spec = HeatKernelSpec::new(c, traj.snapshots[1].t + 1.0 / 64.0);
    Ok((traj, spec))
}

fn evolution() -> Result<Vec<VerificationRow>> {
    let mut rows = Vec::new();
    let errs: Vec<f64> = [16, 32, 64].iter().map(|&n| torsion_oracle_error(n)).collect::<Result<_>>()?;
    let order = (errs[0] / errs[2]).log2() / 2.0;
    rows.push(VerificationRow {
        order: Some(order),
        ..VerificationRow::at_least("torsion_oracle_order", order, 2.0 * (1.0 - ORDER_SLACK))
    });

    let (coarse, fine) = (short_run(16, false)?, short_run(32, false)?);
    let te = |t: &Trajectory, q| torsion_evolution_residual(t, q).map(|r| max_residual(&r));
    rows.push(VerificationRow::refinement("torsion_evolution", te(&coarse, true)?, te(&fine, true)?));
    rows.push(VerificationRow::control(
        "torsion_evolution_without_quadratic_term",
        te(&coarse, false)?,
        te(&fine, false)?,
    ));
    let bianchi = |t: &Trajectory| {
        let st = &t.snapshots[2].state;
        bianchi_residual(&st.torsion(), &st.phi()).sup_norm()
    };
    rows.push(VerificationRow::refinement("bianchi", bianchi(&coarse), bianchi(&fine)));
    let random_torsion = |n: usize| -> Result<f64> {
        let g = grid(n)?;
        let t = MatrixField::from_fn(&g, |c| {
            let mut m = Mat7::ZERO;
            for i in 0..7 {
                for j in 0..7 {
                    m.0[i][j] = 0.2 * (2.0 * PI * (c[0] + 2.0 * c[1]) + (7 * i + j) as f64).sin();
                }
            }
            m
        });
        Ok(bianchi_residual(&t, &phi_of_state(&IsometricState::identity(&g))?).sup_norm())
    };
    rows.push(VerificationRow::control("bianchi_random_tensor", random_torsion(16)?, random_torsion(32)?));

    let (lc, sc) = localized_run(16)?;
    let (lf, sf) = localized_run(32)?;
    let mres = |t: &Trajectory, s: &HeatKernelSpec| -> Result<f64> {
        Ok(monotonicity_residual(t, s)?
            .iter()
            .map(|m| m.residual.abs())
            .fold(0.0, f64::max))
    };
    rows.push(VerificationRow::refinement("monotonicity_formula", mres(&lc, &sc)?, mres(&lf, &sf)?));
    let worst = monotonicity_residual(&lf, &sf)?
        .iter()
        .map(|m| m.dtheta_dt - m.terms.hessian.max(0.0))
        .fold(f64::NEG_INFINITY, f64::max);
    rows.push(VerificationRow::at_most(
        "theta_monotone_localized",
        worst,
        crate::tolerances::MONOTONICITY_SLACK,
    ));
    Ok(rows)
}

fn connection() -> Result<Vec<VerificationRow>> {
    let mut rows = Vec::new();
    let (coarse, fine) = (short_run(16, true)?, short_run(32, true)?);
    let rd = |t: &Trajectory, a| reaction_diffusion_residual_with(t, a).map(|r| max_residual(&r));
    rows.push(VerificationRow::refinement(
        "reaction_diffusion",
        max_residual(&reaction_diffusion_residual(&coarse)?),
        max_residual(&reaction_diffusion_residual(&fine)?),
    ));
    rows.push(VerificationRow::control("reaction_diffusion_alpha_zero", rd(&coarse, Some(0.0))?, rd(&fine, Some(0.0))?));

    let lap_defect = |t: &Trajectory| -> Result<f64> {
        let snap = &t.snapshots[2];
        let frame = snap.frame.as_ref().expect("framed run");
        let torsion = snap.state.torsion();
        let phi = snap.state.phi();
        let formula = laplacian_d(frame, &torsion, &phi, &torsion);
        let composite = laplacian_d_composite(frame, &torsion, &phi, &torsion)?;
        Ok(formula.sub(&composite).sup_norm())
    };
    rows.push(VerificationRow::refinement(
        "laplacian_d_formula_vs_composite",
        lap_defect(&coarse)?,
        lap_defect(&fine)?,
    ));
    let frame = fine.snapshots[2].frame.as_ref().expect("framed run");
    rows.push(VerificationRow::at_most("frame_orthogonality", frame.orthogonality_defect(), 1e-8));

    let probe = |g: &Grid, phase: f64| {
        Field::from_fn(g, |c| {
            Vec7(std::array::from_fn(|k| 0.3 * (2.0 * PI * (c[0] + c[1]) + k as f64 + phase).sin()))
        })
    };
    let flat = IsometricState::identity(&grid(16)?);
    let lie = |s: &IsometricState| -> Result<f64> { Ok(lie_decomposition_residual(&probe(s.grid(), 0.0), s)?.sup_norm()) };
    rows.push(VerificationRow::at_most("lie_decomposition_reference", lie(&flat)?, POINTWISE_IDENTITY_TOL));
    rows.push(VerificationRow::refinement("lie_decomposition", lie(&smooth_state(16, 0.3, 5)?)?, lie(&smooth_state(32, 0.3, 5)?)?));

    let fv = |s: &IsometricState| -> Result<f64> {
        Ok(first_variation_residual(s, &probe(s.grid(), 1.0), 1e-4)?.sup_norm())
    };
    rows.push(VerificationRow::at_most("first_variation_reference", fv(&flat)?, 1e-6));
    rows.push(VerificationRow::refinement("first_variation", fv(&smooth_state(16, 0.3, 9)?)?, fv(&smooth_state(32, 0.3, 9)?)?));
    Ok(rows)
}
