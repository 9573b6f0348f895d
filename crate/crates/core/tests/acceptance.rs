//! Acceptance criteria 1 to 11. Each prints one `PASS`/`FAIL` line; the
//! process exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use g2flow::bryant::{metric_from_phi, phi_of_state, torsion_from_phi, torsion_of_state, IsometricState};
use g2flow::connection::{
    bianchi_residual, evolve_framed, max_residual, reaction_diffusion_residual, reaction_diffusion_residual_with,
    second_variation_identity_defect, torsion_evolution_residual, FrameField,
};
use g2flow::diagnostics::{decay_rate, entropy, monotonicity_residual, theta, EntropySampling, HeatKernelSpec};
use g2flow::flow::{
    build_initial_state, evolve_fx, run, rescale_check, FlowConfig, InitialCondition, Integrator, NullSink, Scheme,
    Trajectory,
};
use g2flow::g2algebra::{standard_tables, validate_tables, Mat7, Vec7};
use g2flow::grid::{Grid, GridSpec, MatrixField};
use g2flow::tolerances::{
    DECAY_RATE_SLACK, ENERGY_MONOTONE_TOL, GRADIENT_LAW_TOL, ISOMETRY_TOL, MONOTONICITY_SLACK, ORDER_SLACK,
    POINTWISE_IDENTITY_TOL, REFINEMENT_RATIO, RESCALE_TRAJECTORY_TOL, RESCALING_TOL,
};
use g2flow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn grid(n: usize, order: u8) -> Grid {
    Grid::new(1.0, n, &[0, 1], order).unwrap()
}

fn spec(n: usize) -> GridSpec {
    grid(n, 2).spec()
}

fn multi_mode(amplitude: f64, max_wavenumber: usize, seed: u64) -> InitialCondition {
    InitialCondition::MultiMode {
        amplitude,
        max_wavenumber,
        seed,
        components: None,
    }
}

fn single_mode(amplitude: f64) -> InitialCondition {
    InitialCondition::SingleMode {
        amplitude,
        direction: 0,
        component: 1,
    }
}

fn center() -> [f64; 7] {
    [0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0]
}

fn dt_for(n: usize, factor: f64) -> f64 {
    let h = 1.0 / n as f64;
    factor * h * h
}

fn identity_tables() -> Result<Outcome> {
    let start = Instant::now();
    let report = validate_tables(standard_tables());
    let worst = report.checks.iter().map(|c| c.defect.unsigned_abs()).max().unwrap_or(0);
    let elapsed = start.elapsed();
    outcome(
        report.all_zero() && elapsed < Duration::from_secs(10),
        format!("{} identities, max integer defect {worst}, {elapsed:.2?}", report.checks.len()),
    )
}

fn isometry() -> Result<Outcome> {
    let g = grid(32, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let ic = multi_mode(rng.gen_range(0.0..0.9), rng.gen_range(1..4), rng.gen());
        let s = build_initial_state(&ic, &g)?;
        let metric = metric_from_phi(&phi_of_state(&s)?)?;
        worst = worst.max(metric.max_of(|m| (m + Mat7::diagonal(-1.0)).max_abs()));
    }
    outcome(worst <= ISOMETRY_TOL, format!("max sup |g − I| = {worst:.2e} over 100 states"))
}

fn oracle_equivalence() -> Result<Outcome> {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    for order in [2u8, 4] {
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| -> Result<f64> {
                let s = build_initial_state(&multi_mode(0.3, 2, 7), &grid(n, order))?;
                Ok(torsion_of_state(&s).sub(&torsion_from_phi(&phi_of_state(&s)?)?).sup_norm())
            })
            .collect::<Result<_>>()?;
        let measured = (errs[0] / errs[2]).log2() / 2.0;
        let target = order as f64;
        pass &= (measured - target).abs() <= ORDER_SLACK * target;
        detail.push(format!("order {order}: measured {measured:.2} (errors {:.2e} {:.2e} {:.2e})", errs[0], errs[1], errs[2]));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    outcome(pass, format!("{}, {elapsed:.2?}", detail.join("; ")))
}

fn gradient_flow_law() -> Result<Outcome> {
    let n = 32;
    let dt = dt_for(n, 0.05);
    let mut cfg = FlowConfig::new(spec(n), single_mode(0.1), dt, 200.0 * dt);
    cfg.integrator = Integrator::Rk4;
    let out = run(&cfg, &mut NullSink)?;
    let recs = &out.trajectory.records;
    let mut worst = 0.0f64;
    for w in recs.windows(3) {
        let de = (w[2].energy - w[0].energy) / (w[2].t - w[0].t);
        worst = worst.max((de + w[1].div_t_l2).abs() / w[1].div_t_l2);
    }
    let rise = recs
        .windows(2)
        .map(|w| (w[1].energy - w[0].energy) / w[0].energy)
        .fold(f64::NEG_INFINITY, f64::max);
    outcome(
        worst <= GRADIENT_LAW_TOL && rise <= ENERGY_MONOTONE_TOL,
        format!("max |dE/dt + ∫|Div T|²| / ∫|Div T|² = {worst:.2e}, max relative rise of E = {rise:.2e}"),
    )
}

fn scheme_discrepancy(n: usize) -> Result<f64> {
    let t_end = 0.05;
    let steps = (t_end / dt_for(n, 0.05)).ceil();
    let mut cfg = FlowConfig::new(spec(n), multi_mode(0.1, 1, 3), t_end / steps, t_end);
    cfg.scheme = Scheme::Both;
    cfg.integrator = Integrator::Rk4;
    cfg.diagnostics_every = usize::MAX;
    let out = run(&cfg, &mut NullSink)?;
    Ok(out.trajectory.records.iter().filter_map(|r| r.phi_discrepancy).fold(0.0, f64::max))
}

fn scheme_cross_check() -> Result<Outcome> {
    let (coarse, fine) = (scheme_discrepancy(16)?, scheme_discrepancy(32)?);
    let ratio = coarse / fine;
    outcome(ratio >= 2.0, format!("sup |φ_fx − φ_direct|: {coarse:.2e} → {fine:.2e}, ratio {ratio:.2}"))
}

fn decay() -> Result<Outcome> {
    let start = Instant::now();
    let n = 32;
    let dt = dt_for(n, 0.05);
    let mut cfg = FlowConfig::new(spec(n), single_mode(0.05), dt, 0.02);
    cfg.diagnostics_every = 20;
    let out = run(&cfg, &mut NullSink)?;
    let fit = decay_rate(&out.trajectory.records, 1.0);
    let elapsed = start.elapsed();
    let pass = fit.meets_bound(DECAY_RATE_SLACK) == Some(true) && elapsed < Duration::from_secs(300);
    outcome(pass, format!("{fit:?}, {elapsed:.2?}"))
}

fn short_run(n: usize, framed: bool) -> Result<Trajectory> {
    let s = build_initial_state(&multi_mode(0.1, 1, 11), &grid(n, 2))?;
    let dt = dt_for(n, 0.1);
    if framed {
        evolve_framed(&s, &FrameField::identity(s.grid()), dt, 4, Integrator::Rk4, 1)
    } else {
        evolve_fx(&s, dt, 4, Integrator::Rk4, 1)
    }
}

fn refines(coarse: f64, fine: f64) -> bool {
    coarse / fine >= REFINEMENT_RATIO
}

fn reaction_diffusion() -> Result<Outcome> {
    let (coarse, fine) = (short_run(16, true)?, short_run(32, true)?);
    let (a, b) = (
        max_residual(&reaction_diffusion_residual(&coarse)?),
        max_residual(&reaction_diffusion_residual(&fine)?),
    );
    let (c, d) = (
        max_residual(&reaction_diffusion_residual_with(&coarse, Some(0.0))?),
        max_residual(&reaction_diffusion_residual_with(&fine, Some(0.0))?),
    );
    outcome(
        refines(a, b) && !refines(c, d),
        format!("residual ratio {:.2}; α = 0 control ratio {:.2}", a / b, c / d),
    )
}

fn evolution_and_bianchi() -> Result<Outcome> {
    let (coarse, fine) = (short_run(16, false)?, short_run(32, false)?);
    let te = |t: &Trajectory, q| torsion_evolution_residual(t, q).map(|r| max_residual(&r));
    let (a, b) = (te(&coarse, true)?, te(&fine, true)?);
    let (c, d) = (te(&coarse, false)?, te(&fine, false)?);
    let bianchi = |t: &Trajectory| {
        let st = &t.snapshots[2].state;
        bianchi_residual(&st.torsion(), &st.phi()).sup_norm()
    };
    let (e, f) = (bianchi(&coarse), bianchi(&fine));
    let random = |n: usize| -> Result<f64> {
        let g = grid(n, 2);
        let t = MatrixField::from_fn(&g, |x| {
            Mat7(std::array::from_fn(|i| {
                std::array::from_fn(|j| 0.2 * (2.0 * PI * (x[0] + 2.0 * x[1]) + (7 * i + j) as f64).sin())
            }))
        });
        Ok(bianchi_residual(&t, &phi_of_state(&IsometricState::identity(&g))?).sup_norm())
    };
    let (r16, r32) = (random(16)?, random(32)?);
    outcome(
        refines(a, b) && !refines(c, d) && refines(e, f) && !refines(r16, r32),
        format!(
            "evolution ratio {:.2}, control {:.2}; Bianchi ratio {:.2}, random-tensor control {:.2}",
            a / b,
            c / d,
            e / f,
            r16 / r32
        ),
    )
}

fn second_variation() -> Result<Outcome> {
    let phi = standard_tables().phi_form();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let vec = |rng: &mut ChaCha8Rng| Vec7(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let x = vec(&mut rng);
        let gx = Mat7(std::array::from_fn(|_| vec(&mut rng).0));
        let t = Mat7(std::array::from_fn(|_| vec(&mut rng).0));
        worst = worst.max(second_variation_identity_defect(&x, &gx, &t, phi).relative());
    }
    outcome(worst <= POINTWISE_IDENTITY_TOL, format!("max relative defect {worst:.2e} over 1e5 samples"))
}

fn rescaling() -> Result<Outcome> {
    let n = 16;
    let dt = dt_for(n, 0.05);
    let cfg = FlowConfig::new(spec(n), multi_mode(0.1, 1, 1), dt, 40.0 * dt);
    let report = rescale_check(&cfg, 2.0)?;

    let g = grid(n, 2);
    let s = build_initial_state(&multi_mode(0.3, 2, 4), &g)?;
    let t = torsion_of_state(&s);
    let c = 3.0;
    let gc = g.with_period(c);
    let tc = t.with_grid(&gc).scaled(1.0 / c);
    let k = HeatKernelSpec::new(center(), 0.2);
    let kc = HeatKernelSpec::new(center().map(|x| x * c), 0.2 * c * c);
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
    let th = rel(theta(&t, &k, 0.05)?, theta(&tc, &kc, 0.05 * c * c)?);
    let sampling = EntropySampling { scales: 4, stride: 2 };
    let la = rel(entropy(&t, 0.05, &sampling).value, entropy(&tc, 0.05 * c * c, &sampling).value);

    let pass = report.trajectory_discrepancy <= RESCALE_TRAJECTORY_TOL
        && [report.energy_defect, report.theta_defect, report.entropy_defect, th, la]
            .iter()
            .all(|&d| d <= RESCALING_TOL);
    outcome(
        pass,
        format!(
            "c = 2 trajectory {:.2e}, energy {:.2e}, Θ {:.2e}, λ {:.2e}; c = 3 Θ {th:.2e}, λ {la:.2e}",
            report.trajectory_discrepancy, report.energy_defect, report.theta_defect, report.entropy_defect
        ),
    )
}

fn localized_run(n: usize) -> Result<(Trajectory, HeatKernelSpec)> {
    let ic = InitialCondition::Localized {
        amplitude: 0.1,
        center: center(),
        concentration: 1.0,
        component: 1,
    };
    let s = build_initial_state(&ic, &grid(n, 2))?;
    let traj = evolve_fx(&s, dt_for(n, 0.1), 4, Integrator::Rk4, 1)?;
    let spec = HeatKernelSpec::new(center(), traj.snapshots[1].t + 1.0 / 64.0);
    Ok((traj, spec))
}

fn monotonicity() -> Result<Outcome> {
    let (lc, sc) = localized_run(16)?;
    let (lf, sf) = localized_run(32)?;
    let worst_residual = |t: &Trajectory, s: &HeatKernelSpec| -> Result<f64> {
        Ok(monotonicity_residual(t, s)?.iter().map(|m| m.residual.abs()).fold(0.0, f64::max))
    };
    let (a, b) = (worst_residual(&lc, &sc)?, worst_residual(&lf, &sf)?);
    let samples = monotonicity_residual(&lf, &sf)?;
    let excess = samples
        .iter()
        .map(|m| m.dtheta_dt - m.terms.hessian.max(0.0))
        .fold(f64::NEG_INFINITY, f64::max);
    let window = samples.iter().all(|m| sf.t0 - m.t <= 1.0 / 64.0);
    outcome(
        refines(a, b) && excess <= MONOTONICITY_SLACK && window,
        format!("residual {a:.2e} → {b:.2e} (ratio {:.2}); max dΘ/dt − max(0, Hessian term) = {excess:.2e}", a / b),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 11] = [
        ("identity tables", identity_tables),
        ("isometry", isometry),
        ("oracle equivalence", oracle_equivalence),
        ("gradient-flow law", gradient_flow_law),
        ("scheme cross-check", scheme_cross_check),
        ("decay rate", decay),
        ("reaction-diffusion", reaction_diffusion),
        ("torsion evolution and Bianchi", evolution_and_bianchi),
        ("second variation", second_variation),
        ("rescaling", rescaling),
        ("monotonicity", monotonicity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!("criterion {:>2} {name}: {} ({detail})", i + 1, if pass { "PASS" } else { "FAIL" });
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
