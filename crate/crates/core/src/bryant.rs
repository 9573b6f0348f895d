//! Bryant's parametrization of G2-structures isometric to a base structure.
//!
//! A pair `(f, X)` with `f² + |X|² = 1` determines
//!
//! ```text
//! φ̃ = (1 − 2|X|²) φ − 2f X⌟ψ + 2 X ∧ (X⌟φ)
//! ψ̃ = ψ + 2f X ∧ φ − 2 X ∧ (X⌟ψ)
//! ```
//!
//! relative to a base `(φ, ψ)`. The base is either the constant reference
//! structure or an arbitrary field-valued G2-structure inducing the flat metric,
//! carried together with its torsion `T` and `Div T` so that the torsion and
//! divergence formulas are evaluated with every term.
//!
//! [`torsion_from_phi`] and [`metric_from_phi`] work directly from a 3-form
//! field and serve as independent oracles for the `(f, X)` formulas.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::g2algebra::{hodge_star_3, metric_from_form, standard_tables, Form3, Form4, Mat7, Vec7};
use crate::grid::{
    grad_scalar, grad_vector, laplacian, partial, Field, Form3Field, Form4Field, Grid, MatrixField,
    ScalarField, VectorField,
};
use crate::tolerances::{CONSTRAINT_TOL, METRIC_TOL};

/// Field-valued base structure with its torsion data.
#[derive(Clone, Debug)]
pub struct VaryingBackground {
    pub phi: Form3Field,
    pub psi: Form4Field,
    pub torsion: MatrixField,
    pub div_torsion: VectorField,
}

/// The structure `(f, X)` is measured against.
#[derive(Clone, Debug, Default)]
pub enum Background {
    /// The constant reference structure, torsion-free.
    #[default]
    Reference,
    Varying(Arc<VaryingBackground>),
}

impl Background {
    /// Uses the structure of `s` as the base, with `T = torsion_of_state(s)` and
    /// `Div T = div2(T)`.
    pub fn from_state(s: &IsometricState) -> Result<Self> {
        let phi = phi_of_state(s)?;
        let psi = psi_of_state(s)?;
        let torsion = torsion_of_state(s);
        let div_torsion = crate::grid::div2(&torsion);
        Ok(Background::Varying(Arc::new(VaryingBackground {
            phi,
            psi,
            torsion,
            div_torsion,
        })))
    }

    pub fn is_reference(&self) -> bool {
        matches!(self, Background::Reference)
    }

    #[inline]
    pub fn phi_at(&self, p: usize) -> Form3 {
        match self {
            Background::Reference => *standard_tables().phi_form(),
            Background::Varying(b) => b.phi.at(p),
        }
    }

    #[inline]
    pub fn psi_at(&self, p: usize) -> Form4 {
        match self {
            Background::Reference => *standard_tables().psi_form(),
            Background::Varying(b) => b.psi.at(p),
        }
    }

    #[inline]
    pub fn torsion_at(&self, p: usize) -> Mat7 {
        match self {
            Background::Reference => Mat7::ZERO,
            Background::Varying(b) => b.torsion.at(p),
        }
    }

    #[inline]
    pub fn div_torsion_at(&self, p: usize) -> Vec7 {
        match self {
            Background::Reference => Vec7::ZERO,
            Background::Varying(b) => b.div_torsion.at(p),
        }
    }

    /// Same data on a rescaled grid: forms keep their components, torsion
    /// scales by `1/c` and its divergence by `1/c²`.
    pub fn rescaled(&self, grid: &Grid, c: f64) -> Self {
        match self {
            Background::Reference => Background::Reference,
            Background::Varying(b) => Background::Varying(Arc::new(VaryingBackground {
                phi: b.phi.with_grid(grid),
                psi: b.psi.with_grid(grid),
                torsion: b.torsion.with_grid(grid).scaled(1.0 / c),
                div_torsion: b.div_torsion.with_grid(grid).scaled(1.0 / (c * c)),
            })),
        }
    }
}

/// A pair `(f, X)` on a grid together with its base structure.
#[derive(Clone, Debug)]
pub struct IsometricState {
    pub f: ScalarField,
    pub x: VectorField,
    pub background: Background,
    pub time: f64,
}

impl IsometricState {
    pub fn new(f: ScalarField, x: VectorField) -> Self {
        assert_eq!(f.grid(), x.grid());
        IsometricState {
            f,
            x,
            background: Background::Reference,
            time: 0.0,
        }
    }

    /// The state with `f = +√(1 − |X|²)`.
    pub fn from_x(x: VectorField) -> Result<Self> {
        let worst = x.max_of(|v| v.norm2());
        if worst > 1.0 {
            return Err(Error::InvalidState {
                defect: worst - 1.0,
                limit: 0.0,
            });
        }
        let f = x.map(|v| (1.0 - v.norm2()).max(0.0).sqrt());
        Ok(Self::new(f, x))
    }

    /// The reference structure `(1, 0)`.
    pub fn identity(grid: &Grid) -> Self {
        Self::new(ScalarField::constant(grid, 1.0), VectorField::zeros(grid))
    }

    pub fn with_background(mut self, background: Background) -> Self {
        self.background = background;
        self
    }

    pub fn grid(&self) -> &Grid {
        self.f.grid()
    }

    /// `max |f² + |X|² − 1|`.
    pub fn constraint_defect(&self) -> f64 {
        self.f
            .zip_map(&self.x, |f, x| (f * f + x.norm2() - 1.0).abs())
            .max_of(|d| d)
    }

    pub fn min_f(&self) -> f64 {
        self.f.max_of(|f| -f) * -1.0
    }

    /// Pointwise normalization `(f, X) ← (f, X)/√(f² + |X|²)`.
    pub fn project(&mut self) {
        let norm = self.f.zip_map(&self.x, |f, x| (f * f + x.norm2()).sqrt());
        self.f = self.f.zip_map(&norm, |f, n| f / n);
        self.x = self.x.zip_map(&norm, |x, n| x * (1.0 / n));
    }

    /// The antipodal representative `(−f, −X)` of the same structure.
    pub fn antipodal(&self) -> Self {
        IsometricState {
            f: self.f.scaled(-1.0),
            x: self.x.scaled(-1.0),
            background: self.background.clone(),
            time: self.time,
        }
    }

    fn check(&self) -> Result<()> {
        let defect = self.constraint_defect();
        if defect > CONSTRAINT_TOL || !defect.is_finite() {
            return Err(Error::InvalidState {
                defect,
                limit: CONSTRAINT_TOL,
            });
        }
        Ok(())
    }
}

/// `φ̃` at a point from `(f, X)` and the base forms.
pub fn bryant_phi(f: f64, x: &Vec7, phi: &Form3, psi: &Form4) -> Form3 {
    let beta = phi.interior(x);
    *phi * (1.0 - 2.0 * x.norm2()) - psi.interior(x) * (2.0 * f)
        + Form3::wedge_vec_two_form(x, &beta) * 2.0
}

/// `ψ̃` at a point from `(f, X)` and the base forms.
pub fn bryant_psi(f: f64, x: &Vec7, phi: &Form3, psi: &Form4) -> Form4 {
    let gamma = psi.interior(x);
    *psi + phi.wedge_vec(x) * (2.0 * f) - gamma.wedge_vec(x) * 2.0
}

/// The 3-form of the state.
pub fn phi_of_state(s: &IsometricState) -> Result<Form3Field> {
    s.check()?;
    Ok(phi_of_state_unchecked(s))
}

pub(crate) fn phi_of_state_unchecked(s: &IsometricState) -> Form3Field {
    Field::from_index_fn(s.grid(), |p| {
        bryant_phi(s.f.at(p), &s.x.at(p), &s.background.phi_at(p), &s.background.psi_at(p))
    })
}

/// The 4-form of the state.
pub fn psi_of_state(s: &IsometricState) -> Result<Form4Field> {
    s.check()?;
    Ok(psi_of_state_unchecked(s))
}

pub(crate) fn psi_of_state_unchecked(s: &IsometricState) -> Form4Field {
    Field::from_index_fn(s.grid(), |p| {
        bryant_psi(s.f.at(p), &s.x.at(p), &s.background.phi_at(p), &s.background.psi_at(p))
    })
}

/// Derivatives of a state used by the torsion and flow formulas.
pub(crate) struct StateDerivatives {
    pub grad_f: VectorField,
    pub grad_x: MatrixField,
}

impl StateDerivatives {
    pub fn of(s: &IsometricState) -> Self {
        StateDerivatives {
            grad_f: grad_scalar(&s.f),
            grad_x: grad_vector(&s.x),
        }
    }
}

/// The torsion of `(f, X)`:
///
/// ```text
/// T̃_pq = (1 − 2|X|²) T_pq + 2 T_pm X_m X_q + 2f T_pm X_l φ_mlq
///        − 2 ∇_pX_m X_l φ_mlq + 2 ∇_pf X_q − 2f ∇_pX_q
/// ```
pub fn torsion_of_state(s: &IsometricState) -> MatrixField {
    let d = StateDerivatives::of(s);
    torsion_with(s, &d)
}

pub(crate) fn torsion_with(s: &IsometricState, d: &StateDerivatives) -> MatrixField {
    let reference = s.background.is_reference();
    Field::from_index_fn(s.grid(), |p| {
        let f = s.f.at(p);
        let x = s.x.at(p);
        let gf = d.grad_f.at(p);
        let g = d.grad_x.at(p);
        let phi = s.background.phi_at(p);
        let base_t = s.background.torsion_at(p);
        let x2 = x.norm2();
        let mut out = Mat7::ZERO;
        for r in 0..7 {
            let gr = g.row(r);
            let mut row = x * (2.0 * gf.0[r]) - gr * (2.0 * f) - phi.cross(&gr, &x) * 2.0;
            if !reference {
                let tr = base_t.row(r);
                row += tr * (1.0 - 2.0 * x2) + x * (2.0 * tr.dot(&x)) + phi.cross(&tr, &x) * (2.0 * f);
            }
            out.0[r] = row.0;
        }
        out
    })
}

/// `Div T̃` of `(f, X)` by the closed formula in terms of `f`, `X`, their first
/// and second derivatives, and the base `T`, `Div T`.
pub fn div_torsion_of_state(s: &IsometricState) -> VectorField {
    let d = StateDerivatives::of(s);
    div_torsion_with(s, &d, &laplacian(&s.f), &laplacian(&s.x))
}

pub(crate) fn div_torsion_with(
    s: &IsometricState,
    d: &StateDerivatives,
    lap_f: &ScalarField,
    lap_x: &VectorField,
) -> VectorField {
    let reference = s.background.is_reference();
    let active = s.grid().active_dims().to_vec();
    Field::from_index_fn(s.grid(), |p| {
        let f = s.f.at(p);
        let x = s.x.at(p);
        let gf = d.grad_f.at(p);
        let g = d.grad_x.at(p);
        let lf = lap_f.at(p);
        let lx = lap_x.at(p);
        let phi = s.background.phi_at(p);
        let mut out = x * (2.0 * lf) - lx * (2.0 * f) - phi.cross(&lx, &x) * 2.0;
        if !reference {
            let t = s.background.torsion_at(p);
            let a = s.background.div_torsion_at(p);
            let psi = s.background.psi_at(p);
            let x2 = x.norm2();
            out += a * (1.0 - 2.0 * x2) + x * (2.0 * (a.dot(&x) + t.contract(&g)));
            out += phi.cross(&t.vec_mul(&gf), &x) * 2.0 + phi.cross(&a, &x) * (2.0 * f);
            for &r in &active {
                let tr = t.row(r);
                let gr = g.row(r);
                out += tr * (-4.0 * x.dot(&gr)) + gr * (2.0 * tr.dot(&x));
                out += phi.cross(&tr, &gr) * (2.0 * f);
                out -= psi.interior(&tr).interior(&gr).vec_mul(&x) * 2.0;
            }
        }
        out
    })
}

fn check_metric(phi: &Form3Field) -> Result<()> {
    let defect = metric_defect(phi)?;
    if defect > METRIC_TOL {
        return Err(Error::NotIsometric { defect });
    }
    Ok(())
}

/// The torsion of a 3-form field, `T_pq = (1/24) ∂_p φ_ijk ψ_qijk` with `ψ = ⋆φ`.
pub fn torsion_from_phi(phi: &Form3Field) -> Result<MatrixField> {
    check_metric(phi)?;
    Ok(torsion_from_phi_unchecked(phi, &phi.map(|a| hodge_star_3(&a))))
}

/// Torsion from a 3-form and a precomputed dual 4-form, skipping the metric check.
pub fn torsion_from_phi_unchecked(phi: &Form3Field, psi: &Form4Field) -> MatrixField {
    let grid = *phi.grid();
    let dphi: Vec<Option<Form3Field>> = (0..7)
        .map(|d| grid.is_active(d).then(|| partial(phi, d)))
        .collect();
    Field::from_index_fn(&grid, |pt| {
        let psi_here = psi.at(pt);
        let duals: [Form3; 7] = std::array::from_fn(|q| psi_here.interior_basis(q));
        let mut out = Mat7::ZERO;
        for (r, dp) in dphi.iter().enumerate() {
            if let Some(dp) = dp {
                let v = dp.at(pt);
                for q in 0..7 {
                    // Sum over sorted triples carries 3! = 6, and 6/24 = 1/4.
                    out.0[r][q] = 0.25 * v.inner(&duals[q]);
                }
            }
        }
        out
    })
}

/// The metric induced by a 3-form field.
pub fn metric_from_phi(phi: &Form3Field) -> Result<MatrixField> {
    let out: Vec<Mat7> = phi.values().par_iter().map(metric_from_form).collect::<Result<_>>()?;
    Ok(Field::from_values(phi.grid(), &out))
}

/// `sup |g(φ) − I|` over the grid.
pub fn metric_defect(phi: &Form3Field) -> Result<f64> {
    let g = metric_from_phi(phi)?;
    Ok(g.max_of(|m| (m - Mat7::identity()).max_abs()))
}
