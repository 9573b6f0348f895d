//! The modified connection on an auxiliary bundle and the evolution
//! identities of the torsion.
//!
//! `E` is a second copy of the tangent bundle, trivialized by the grid
//! coordinates, and `ι: E → TM` is stored pointwise as a matrix whose column
//! `a` is `ι(v_a)`. With `φ` the evolving structure and `T` its torsion,
//!
//! ```text
//! ι(D_k σ) = ∂_k(ισ) + α (e_k ⌟ T) × (ισ)
//! ∂ι/∂t    = β Div T × ι
//! ```
//!
//! For `α = −½`, `β = ½` the pulled-back torsion `T̃ = T ∘ ι` obeys
//! `∂T̃/∂t = Δ_D T̃ + ¼(|T|² T̃ − T Tᵀ T̃)` on the flat torus.
//!
//! Every residual uses the evolving `φ` for cross products, so they vanish
//! only up to stencil and time-difference errors.

use crate::bryant::{
    div_torsion_of_state, phi_of_state, psi_of_state, torsion_of_state, Background, IsometricState,
};
use crate::error::{Error, Result};
use crate::flow::{explicit_step, rhs_fx_parts, tangential, FlowState, Integrator, Snapshot, Trajectory};
use crate::g2algebra::{matrix_action, Cube7, Form3, Mat7, Vec7};
use crate::grid::{
    div2, grad_vector, laplacian, partial, Field, Form3Field, Grid, MatrixField, Partials, ScalarField,
    VectorField,
};
use crate::tolerances::FRAME_ORTHOGONALITY_TOL;

/// A bundle isomorphism `ι: E → TM` with the connection and gauge parameters.
#[derive(Clone, Debug)]
pub struct FrameField {
    pub iota: MatrixField,
    pub alpha: f64,
    pub beta: f64,
}

impl FrameField {
    /// `ι = I`, `α = −½`, `β = ½`.
    pub fn identity(grid: &Grid) -> Self {
        FrameField::new(MatrixField::constant(grid, Mat7::identity()), -0.5, 0.5)
    }

    pub fn new(iota: MatrixField, alpha: f64, beta: f64) -> Self {
        FrameField { iota, alpha, beta }
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        FrameField { alpha, ..self.clone() }
    }

    pub fn with_grid(&self, grid: &Grid) -> Self {
        FrameField {
            iota: self.iota.with_grid(grid),
            ..self.clone()
        }
    }

    pub fn grid(&self) -> &Grid {
        self.iota.grid()
    }

    /// `sup |ιᵀι − I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        self.iota
            .max_of(|m| (m.transpose().matmul(&m) + Mat7::diagonal(-1.0)).max_abs())
    }

    /// Fails with a gauge-drift error above the orthogonality tolerance.
    pub fn check(&self) -> Result<f64> {
        let defect = self.orthogonality_defect();
        if !(defect <= FRAME_ORTHOGONALITY_TOL) {
            return Err(Error::GaugeDrift { defect });
        }
        Ok(defect)
    }

    /// Pointwise `ι⁻¹`.
    pub fn inverse(&self) -> Result<MatrixField> {
        let values: Vec<Mat7> = self
            .iota
            .values()
            .iter()
            .enumerate()
            .map(|(p, m)| m.inverse().ok_or(Error::FrameDegenerate { point: p }))
            .collect::<Result<_>>()?;
        Ok(Field::from_values(self.grid(), &values))
    }

    /// `ι*φ` as a 3-form on `E`.
    pub fn pullback(&self, phi: &Form3Field) -> Form3Field {
        self.iota.zip_map(phi, |m, a| pull_back_form(&m, &a))
    }
}

/// `(ι*α)_abc = α_ijk ι_ia ι_jb ι_kc`.
pub fn pull_back_form(iota: &Mat7, alpha: &Form3) -> Form3 {
    let d = alpha.to_dense();
    let mut out = [[[0.0; 7]; 7]; 7];
    let mut tmp1 = [[[0.0; 7]; 7]; 7];
    for a in 0..7 {
        for j in 0..7 {
            for k in 0..7 {
                tmp1[a][j][k] = (0..7).map(|i| d[i][j][k] * iota.0[i][a]).sum();
            }
        }
    }
    let mut tmp2 = [[[0.0; 7]; 7]; 7];
    for a in 0..7 {
        for b in 0..7 {
            for k in 0..7 {
                tmp2[a][b][k] = (0..7).map(|j| tmp1[a][j][k] * iota.0[j][b]).sum();
            }
        }
    }
    for a in 0..7 {
        for b in 0..7 {
            for c in 0..7 {
                out[a][b][c] = (0..7).map(|k| tmp2[a][b][k] * iota.0[k][c]).sum();
            }
        }
    }
    Form3::from_dense(&out)
}

/// `(X ⌟ φ)ᵀ`, the matrix of `v ↦ X × v`.
fn cross_matrix(phi: &Form3, x: &Vec7) -> Mat7 {
    phi.interior(x).transpose()
}

/// Connection coefficients `C_k` with `D_k v_a = (C_k)_ba v_b`, one matrix
/// field per direction.
pub fn connection_coefficients(
    frame: &FrameField,
    torsion: &MatrixField,
    phi: &Form3Field,
) -> Result<Vec<MatrixField>> {
    let inv = frame.inverse()?;
    let grid = *frame.grid();
    Ok((0..7)
        .map(|k| {
            let d = partial(&frame.iota, k);
            Field::from_index_fn(&grid, |p| {
                let iota = frame.iota.at(p);
                let w = d.at(p) + cross_matrix(&phi.at(p), &torsion.at(p).row(k)).matmul(&iota) * frame.alpha;
                inv.at(p).matmul(&w)
            })
        })
        .collect())
}

/// `D_dir σ` for a section `σ` of `E`.
pub fn d_derivative(
    frame: &FrameField,
    torsion: &MatrixField,
    phi: &Form3Field,
    dir: usize,
    sigma: &VectorField,
) -> Result<VectorField> {
    let inv = frame.inverse()?;
    let image = frame.iota.zip_map(sigma, |m, s| m.mul_vec(&s));
    let d = partial(&image, dir);
    Ok(Field::from_index_fn(frame.grid(), |p| {
        let v = d.at(p) + phi.at(p).cross(&torsion.at(p).row(dir), &image.at(p)) * frame.alpha;
        inv.at(p).mul_vec(&v)
    }))
}

/// `Δ_D Ã` for `Ã = A ∘ ι`, in the mixed frame `(e_i, v_a)`, from the
/// expanded formula
///
/// ```text
/// ΔA ι − α²(|T|² A − A TᵀT) ι − 2α ∂_k A_ip (T_k × ι_a)_p − α A_ip (Div T × ι_a)_p
/// ```
///
/// valid for orthogonal `ι`.
pub fn laplacian_d(frame: &FrameField, torsion: &MatrixField, phi: &Form3Field, a: &MatrixField) -> MatrixField {
    let alpha = frame.alpha;
    let lap = laplacian(a);
    let da = Partials::of(a);
    let div_t = div2(torsion);
    let active = frame.grid().active_dims().to_vec();
    Field::from_index_fn(frame.grid(), |p| {
        let (am, t, iota, ph) = (a.at(p), torsion.at(p), frame.iota.at(p), phi.at(p));
        let quad = am * t.norm2() - am.matmul(&t.transpose().matmul(&t));
        let inner = lap.at(p) - quad * (alpha * alpha);
        let mut out = Mat7::ZERO;
        for &k in &active {
            let ck = cross_matrix(&ph, &t.row(k));
            out += da.at(k, p).matmul(&ck.matmul(&iota)) * (-2.0 * alpha);
        }
        out += am.matmul(&cross_matrix(&ph, &div_t.at(p)).matmul(&iota)) * (-alpha);
        out + inner.matmul(&iota)
    })
}

/// `Δ_D Ã` by applying `D` twice through the connection coefficients; an
/// independent oracle for [`laplacian_d`].
pub fn laplacian_d_composite(
    frame: &FrameField,
    torsion: &MatrixField,
    phi: &Form3Field,
    a: &MatrixField,
) -> Result<MatrixField> {
    let coeff = connection_coefficients(frame, torsion, phi)?;
    let at = a.zip_map(&frame.iota, |m, i| m.matmul(&i));
    let grid = *frame.grid();
    let mut out = MatrixField::zeros(&grid);
    for &k in grid.active_dims() {
        let dk = partial(&at, k);
        let da = Field::from_index_fn(&grid, |p| dk.at(p) - at.at(p).matmul(&coeff[k].at(p)));
        let dda = partial(&da, k);
        let term = Field::from_index_fn(&grid, |p| dda.at(p) - da.at(p).matmul(&coeff[k].at(p)));
        out = out.add(&term);
    }
    Ok(out)
}

/// `∂ι/∂t = β Div T × ι`.
pub fn frame_rhs(iota: &MatrixField, div_t: &VectorField, phi: &Form3Field, beta: f64) -> MatrixField {
    Field::from_index_fn(iota.grid(), |p| {
        cross_matrix(&phi.at(p), &div_t.at(p)).matmul(&iota.at(p)) * beta
    })
}

/// One step of the frame ODE with `Div T` and `φ` frozen.
pub fn evolve_frame(
    frame: &FrameField,
    div_t: &VectorField,
    phi: &Form3Field,
    dt: f64,
    integrator: Integrator,
) -> Result<FrameField> {
    let iota = explicit_step(&frame.iota, dt, integrator, |y| Ok(frame_rhs(y, div_t, phi, frame.beta)))?;
    let next = FrameField { iota, ..frame.clone() };
    next.check()?;
    Ok(next)
}

/// One coupled step of `(f, X, ι)`; returns the projected state, the frame
/// and the constraint drift.
pub fn step_framed(
    s: &IsometricState,
    frame: &FrameField,
    dt: f64,
    integrator: Integrator,
) -> Result<(IsometricState, FrameField, f64)> {
    let y = (s.f.clone(), s.x.clone(), frame.iota.clone());
    let rhs = |y: &(ScalarField, VectorField, MatrixField)| {
        let trial = IsometricState {
            f: y.0.clone(),
            x: y.1.clone(),
            background: s.background.clone(),
            time: s.time,
        };
        let (df, dx, div_t) = rhs_fx_parts(&trial);
        let (df, dx) = tangential(&trial, &df, &dx);
        let phi = crate::bryant::phi_of_state_unchecked(&trial);
        Ok((df, dx, frame_rhs(&y.2, &div_t, &phi, frame.beta)))
    };
    let (f, x, iota) = explicit_step(&y, dt, integrator, rhs)?;
    let mut next = IsometricState {
        f,
        x,
        background: s.background.clone(),
        time: s.time + dt,
    };
    let drift = next.constraint_defect();
    next.project();
    let frame = FrameField { iota, ..frame.clone() };
    frame.check()?;
    Ok((next, frame, drift))
}

/// Runs the coupled system, keeping every `every`-th snapshot with its frame.
pub fn evolve_framed(
    initial: &IsometricState,
    frame: &FrameField,
    dt: f64,
    steps: usize,
    integrator: Integrator,
    every: usize,
) -> Result<Trajectory> {
    let mut traj = Trajectory::default();
    let (mut s, mut fr) = (initial.clone(), frame.clone());
    traj.push(Snapshot {
        t: s.time,
        state: FlowState::Fx(s.clone()),
        frame: Some(fr.clone()),
    });
    for k in 1..=steps {
        let (ns, nf, _) = step_framed(&s, &fr, dt, integrator)?;
        s = ns;
        fr = nf;
        s.time = initial.time + k as f64 * dt;
        if k % every.max(1) == 0 {
            traj.push(Snapshot {
                t: s.time,
                state: FlowState::Fx(s.clone()),
                frame: Some(fr.clone()),
            });
        }
    }
    Ok(traj)
}

/// A residual field at one interior snapshot.
#[derive(Clone, Debug)]
pub struct ResidualSample<T: crate::grid::Tensor> {
    pub t: f64,
    pub residual: Field<T>,
}

impl<T: crate::grid::Tensor> ResidualSample<T> {
    pub fn sup_norm(&self) -> f64 {
        self.residual.sup_norm()
    }
}

/// Largest sup-norm over a set of samples.
pub fn max_residual<T: crate::grid::Tensor>(samples: &[ResidualSample<T>]) -> f64 {
    samples.iter().map(|s| s.sup_norm()).fold(0.0, f64::max)
}

fn need_three(traj: &Trajectory) -> Result<()> {
    let got = traj.snapshots.len();
    if got < 3 {
        return Err(Error::InsufficientSnapshots { needed: 3, got });
    }
    Ok(())
}

fn centered<T: crate::grid::Tensor>(prev: &Field<T>, next: &Field<T>, dt: f64) -> Field<T> {
    next.sub(prev).scaled(1.0 / dt)
}

/// `∂_t T̃ − Δ_D T̃ − ¼(|T|² T − T Tᵀ T) ι` at every interior snapshot, with
/// `α` taken from the stored frames.
pub fn reaction_diffusion_residual(traj: &Trajectory) -> Result<Vec<ResidualSample<Mat7>>> {
    reaction_diffusion_residual_with(traj, None)
}

/// As [`reaction_diffusion_residual`] with `α` overridden.
pub fn reaction_diffusion_residual_with(traj: &Trajectory, alpha: Option<f64>) -> Result<Vec<ResidualSample<Mat7>>> {
    need_three(traj)?;
    let frames: Vec<&FrameField> = traj
        .snapshots
        .iter()
        .map(|s| s.frame.as_ref().ok_or_else(|| Error::Config("trajectory carries no frame".into())))
        .collect::<Result<_>>()?;
    let torsions: Vec<MatrixField> = traj.snapshots.iter().map(|s| s.state.torsion()).collect();
    let pulled: Vec<MatrixField> = torsions
        .iter()
        .zip(&frames)
        .map(|(t, f)| t.zip_map(&f.iota, |a, b| a.matmul(&b)))
        .collect();
    let mut out = Vec::new();
    for i in 1..traj.snapshots.len() - 1 {
        let snap = &traj.snapshots[i];
        let frame = match alpha {
            Some(a) => frames[i].with_alpha(a),
            None => frames[i].clone(),
        };
        let t = &torsions[i];
        let phi = snap.state.phi();
        let dt = traj.snapshots[i + 1].t - traj.snapshots[i - 1].t;
        let time_der = centered(&pulled[i - 1], &pulled[i + 1], dt);
        let lap = laplacian_d(&frame, t, &phi, t);
        let residual = Field::from_index_fn(t.grid(), |p| {
            let m = t.at(p);
            let react = (m * m.norm2() - m.matmul(&m.transpose()).matmul(&m)).matmul(&frame.iota.at(p)) * 0.25;
            time_der.at(p) - lap.at(p) - react
        });
        out.push(ResidualSample { t: snap.t, residual });
    }
    Ok(out)
}

/// `∂_t T − ΔT + ∇_i T_pb T_ia φ_abq`; with `quadratic = false` the last term
/// is dropped.
pub fn torsion_evolution_residual(traj: &Trajectory, quadratic: bool) -> Result<Vec<ResidualSample<Mat7>>> {
    need_three(traj)?;
    let torsions: Vec<MatrixField> = traj.snapshots.iter().map(|s| s.state.torsion()).collect();
    let mut out = Vec::new();
    for i in 1..traj.snapshots.len() - 1 {
        let t = &torsions[i];
        let phi = traj.snapshots[i].state.phi();
        let dt = traj.snapshots[i + 1].t - traj.snapshots[i - 1].t;
        let time_der = centered(&torsions[i - 1], &torsions[i + 1], dt);
        let lap = laplacian(t);
        let dt_part = Partials::of(t);
        let active = t.grid().active_dims().to_vec();
        let residual = Field::from_index_fn(t.grid(), |p| {
            let mut r = time_der.at(p) - lap.at(p);
            if quadratic {
                let (m, ph) = (t.at(p), phi.at(p));
                for &k in &active {
                    let dk = dt_part.at(k, p);
                    let tk = m.row(k);
                    for row in 0..7 {
                        let c = ph.cross(&tk, &dk.row(row));
                        for q in 0..7 {
                            r.0[row][q] += c[q];
                        }
                    }
                }
            }
            r
        });
        out.push(ResidualSample {
            t: traj.snapshots[i].t,
            residual,
        });
    }
    Ok(out)
}

/// `∇_i T_jk − ∇_j T_ik − T_ia T_jb φ_abk`.
pub fn bianchi_residual(torsion: &MatrixField, phi: &Form3Field) -> Field<Cube7> {
    let d = Partials::of(torsion);
    Field::from_index_fn(torsion.grid(), |p| {
        let (m, ph) = (torsion.at(p), phi.at(p));
        let g: Vec<Mat7> = (0..7).map(|i| d.at(i, p)).collect();
        let mut r = Cube7::default();
        for i in 0..7 {
            for j in 0..7 {
                let c = ph.cross(&m.row(i), &m.row(j));
                for k in 0..7 {
                    r.0[i][j][k] = g[i].0[j][k] - g[j].0[i][k] - c[k];
                }
            }
        }
        r
    })
}

/// `(curl Y)_m = ∂_i Y_j φ_ijm`.
pub fn curl(y: &VectorField, phi: &Form3Field) -> VectorField {
    let g = grad_vector(y);
    Field::from_index_fn(y.grid(), |p| {
        let (gm, ph) = (g.at(p), phi.at(p));
        let mut out = Vec7::ZERO;
        for i in 0..7 {
            out += ph.cross(&Vec7::basis(i), &gm.row(i));
        }
        out
    })
}

/// `L_Y φ − [(Y⌟T)⌟ψ − ½ curl Y ⌟ ψ + ½ (L_Y g) ⋄ φ]` for the structure of `s`.
pub fn lie_decomposition_residual(y: &VectorField, s: &IsometricState) -> Result<Form3Field> {
    let phi = phi_of_state(s)?;
    let psi = psi_of_state(s)?;
    let torsion = crate::bryant::torsion_from_phi_unchecked(&phi, &psi);
    let g = grad_vector(y);
    let dphi = Partials::of(&phi);
    let c = curl(y, &phi);
    let active = s.grid().active_dims().to_vec();
    Ok(Field::from_index_fn(s.grid(), |p| {
        let (yv, gm, ph, ps) = (y.at(p), g.at(p), phi.at(p), psi.at(p));
        let mut lie = matrix_action(&gm, &ph);
        for &m in &active {
            lie += dphi.at(m, p) * yv[m];
        }
        let sym = gm + gm.transpose();
        let rhs = ps.interior(&torsion.at(p).vec_mul(&yv)) - ps.interior(&c.at(p)) * 0.5 + matrix_action(&sym, &ph) * 0.5;
        lie - rhs
    }))
}

/// Central difference in `ε` of the oracle torsion along the isometric
/// perturbation `φ + ε Z⌟ψ + O(ε²)`, minus `∇_i Z_j + Z_l T_im φ_lmj`.
///
/// The perturbed forms are built with the Bryant map over the structure of
/// `s` with `(f, X) = (√(1 − ε²|Z|²/4), −εZ/2)`, so they induce the flat
/// metric exactly.
pub fn first_variation_residual(s: &IsometricState, z: &VectorField, eps: f64) -> Result<MatrixField> {
    let base = Background::from_state(s)?;
    let phi = phi_of_state(s)?;
    let torsion = crate::bryant::torsion_from_phi(&phi)?;
    let perturbed = |e: f64| -> Result<MatrixField> {
        let x = z.scaled(-0.5 * e);
        let st = IsometricState::from_x(x)?.with_background(base.clone());
        crate::bryant::torsion_from_phi(&phi_of_state(&st)?)
    };
    let tp = perturbed(eps)?;
    let tm = perturbed(-eps)?;
    let gz = grad_vector(z);
    Ok(Field::from_index_fn(s.grid(), |p| {
        let d = (tp.at(p) - tm.at(p)) * (0.5 / eps);
        let (zv, m, ph) = (z.at(p), torsion.at(p), phi.at(p));
        let mut expect = gz.at(p);
        for i in 0..7 {
            let c = ph.cross(&zv, &m.row(i));
            for j in 0..7 {
                expect.0[i][j] += c[j];
            }
        }
        d - expect
    }))
}

/// Both sides of the second-variation identity at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondVariationDefect {
    pub defect: f64,
    /// `|∇X|² + |T|²|X|² + |T| |∇X| |X|`, the natural size of the terms.
    pub scale: f64,
}

impl SecondVariationDefect {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.defect.abs()
        } else {
            self.defect.abs() / self.scale
        }
    }
}

/// `|DX|² − |∇X|² + T_km ∇_k X_p φ_mlp X_l − ¼(|T|²|X|² − |TX|²)` with
/// `D_k X_p = ∇_k X_p − ½ T_km X_l φ_mlp`.
pub fn second_variation_identity_defect(x: &Vec7, grad_x: &Mat7, t: &Mat7, phi: &Form3) -> SecondVariationDefect {
    let mut dx2 = 0.0;
    let mut mixed = 0.0;
    for k in 0..7 {
        let c = phi.cross(&t.row(k), x);
        let gk = grad_x.row(k);
        dx2 += (gk - c * 0.5).norm2();
        mixed += gk.dot(&c);
    }
    let (g2, t2, x2) = (grad_x.norm2(), t.norm2(), x.norm2());
    let defect = dx2 - g2 + mixed - 0.25 * (t2 * x2 - t.mul_vec(x).norm2());
    SecondVariationDefect {
        defect,
        scale: g2 + t2 * x2 + (t2 * g2 * x2).sqrt(),
    }
}

/// Relative defect of the second-variation identity at every grid point.
pub fn second_variation_defect_field(x: &VectorField, t: &MatrixField, phi: &Form3Field) -> ScalarField {
    let g = grad_vector(x);
    Field::from_index_fn(x.grid(), |p| {
        second_variation_identity_defect(&x.at(p), &g.at(p), &t.at(p), &phi.at(p)).relative()
    })
}

/// Displacement `x − x0` lifted to `(−L/2, L/2]` in active directions and
/// zero in inactive ones.
pub fn lifted_displacement(grid: &Grid, x0: &[f64; 7]) -> VectorField {
    let l = grid.period();
    Field::from_fn(grid, |c| {
        let mut v = Vec7::ZERO;
        for &d in grid.active_dims() {
            let mut s = (c[d] - x0[d]).rem_euclid(l);
            if s > 0.5 * l {
                s -= l;
            }
            v[d] = s;
        }
        v
    })
}

/// `Div T − ((x − x0)/(2(t0 − t))) ⌟ T` for the shrinking-soliton ansatz.
pub fn soliton_residual(s: &IsometricState, x0: &[f64; 7], t0: f64, t: f64) -> Result<VectorField> {
    if t >= t0 {
        return Err(Error::TimeNotBeforeFinal { t, t0 });
    }
    let torsion = torsion_of_state(s);
    let div_t = div_torsion_of_state(s);
    let disp = lifted_displacement(s.grid(), x0);
    let w = 0.5 / (t0 - t);
    Ok(Field::from_index_fn(s.grid(), |p| {
        div_t.at(p) - torsion.at(p).vec_mul(&(disp.at(p) * w))
    }))
}

/// `Div T − (−½ curl X0 + X0 ⌟ T)` for a candidate soliton field `X0`.
pub fn general_soliton_residual(s: &IsometricState, x0: &VectorField) -> Result<VectorField> {
    let phi = phi_of_state(s)?;
    let torsion = torsion_of_state(s);
    let div_t = div_torsion_of_state(s);
    let c = curl(x0, &phi);
    Ok(Field::from_index_fn(s.grid(), |p| {
        div_t.at(p) - (c.at(p) * -0.5 + torsion.at(p).vec_mul(&x0.at(p)))
    }))
}
