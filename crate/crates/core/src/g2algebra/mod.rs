//! Pointwise multilinear algebra of the reference G2-structure on R^7.
//!
//! The reference 3-form is
//!
//! ```text
//! φ = e123 + e145 + e167 + e246 − e257 − e347 − e356
//! ```
//!
//! (indices 1-based in the formula, 0-based in code). The 4-form ψ is its Hodge
//! dual. For `ψ = ⋆φ` to satisfy the contraction identities the volume form must
//! be `vol = −e1234567`; [`ORIENTATION`] records that sign and every Hodge star
//! and volume coefficient in the crate uses it.

mod forms;
mod linalg;

use std::fmt;
use std::sync::OnceLock;

pub use forms::{levi_civita, permutation_sign, Form3, Form4, NCOMP};
pub(crate) use forms::form_index;
pub use linalg::{Cube7, Mat7, Vec7};

use crate::error::{Error, Result};
use crate::tolerances::SYMMETRY_TOL;

/// Sign `s` of the volume form `vol = s · e^{1..7}`.
pub const ORIENTATION: i32 = -1;

/// The seven positive-signed index triples (0-based) of the reference 3-form with their signs.
pub const PHI_TERMS: [([usize; 3], i8); 7] = [
    ([0, 1, 2], 1),
    ([0, 3, 4], 1),
    ([0, 5, 6], 1),
    ([1, 3, 5], 1),
    ([1, 4, 6], -1),
    ([2, 3, 6], -1),
    ([2, 4, 5], -1),
];

/// Exact integer structure constants of the reference G2-structure.
#[derive(Clone, Debug)]
pub struct StructureTables {
    pub phi: [[[i8; 7]; 7]; 7],
    pub psi: Box<[[[[i8; 7]; 7]; 7]; 7]>,
    pub orientation: i32,
    phi_form: Form3,
    psi_form: Form4,
}

/// Builds the tables for the standard convention, with ψ computed as `⋆φ`.
pub fn build_standard_tables() -> StructureTables {
    let mut phi = [[[0i8; 7]; 7]; 7];
    for ([a, b, c], s) in PHI_TERMS {
        for (p, q, r) in [(a, b, c), (b, c, a), (c, a, b)] {
            phi[p][q][r] = s;
            phi[q][p][r] = -s;
        }
    }
    // ψ_jklm = (s/6) φ_abc ε_abcjklm, accumulated as integers.
    let mut acc = vec![0i32; 2401];
    for a in 0..7 {
        for b in 0..7 {
            for c in 0..7 {
                let v = phi[a][b][c] as i32;
                if v == 0 {
                    continue;
                }
                let rest: Vec<usize> = (0..7).filter(|x| ![a, b, c].contains(x)).collect();
                for &j in &rest {
                    for &k in &rest {
                        for &l in &rest {
                            for &m in &rest {
                                let e = levi_civita(&[a, b, c, j, k, l, m]);
                                if e != 0 {
                                    acc[((j * 7 + k) * 7 + l) * 7 + m] += ORIENTATION * v * e;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let mut psi = Box::new([[[[0i8; 7]; 7]; 7]; 7]);
    for j in 0..7 {
        for k in 0..7 {
            for l in 0..7 {
                for m in 0..7 {
                    let v = acc[((j * 7 + k) * 7 + l) * 7 + m];
                    debug_assert_eq!(v % 6, 0);
                    psi[j][k][l][m] = (v / 6) as i8;
                }
            }
        }
    }
    let ix = form_index();
    let mut phi_form = Form3::ZERO;
    for (c, &[i, j, k]) in ix.comb3.iter().enumerate() {
        phi_form.0[c] = phi[i][j][k] as f64;
    }
    let mut psi_form = Form4::ZERO;
    for (c, &[i, j, k, l]) in ix.comb4.iter().enumerate() {
        psi_form.0[c] = psi[i][j][k][l] as f64;
    }
    StructureTables {
        phi,
        psi,
        orientation: ORIENTATION,
        phi_form,
        psi_form,
    }
}

/// Shared instance of the standard tables.
pub fn standard_tables() -> &'static StructureTables {
    static TABLES: OnceLock<StructureTables> = OnceLock::new();
    TABLES.get_or_init(build_standard_tables)
}

impl StructureTables {
    /// The reference 3-form as a [`Form3`].
    pub fn phi_form(&self) -> &Form3 {
        &self.phi_form
    }

    /// The reference 4-form as a [`Form4`].
    pub fn psi_form(&self) -> &Form4 {
        &self.psi_form
    }

    /// Nonzero entries `((i, j, k), φ_ijk)` over all index orderings.
    pub fn phi_nonzero(&self) -> impl Iterator<Item = ([usize; 3], i8)> + '_ {
        (0..343).filter_map(move |n| {
            let (i, j, k) = (n / 49, (n / 7) % 7, n % 7);
            let v = self.phi[i][j][k];
            (v != 0).then_some(([i, j, k], v))
        })
    }

    /// Nonzero entries `((i, j, k, l), ψ_ijkl)` over all index orderings.
    pub fn psi_nonzero(&self) -> impl Iterator<Item = ([usize; 4], i8)> + '_ {
        (0..2401).filter_map(move |n| {
            let (i, j, k, l) = (n / 343, (n / 49) % 7, (n / 7) % 7, n % 7);
            let v = self.psi[i][j][k][l];
            (v != 0).then_some(([i, j, k, l], v))
        })
    }

    /// Hodge star of a 3-form for the flat metric and the fixed orientation.
    pub fn hodge_star_3(&self, alpha: &Form3) -> Form4 {
        hodge_star_3(alpha)
    }

    /// Hodge star of a 4-form; inverse of [`StructureTables::hodge_star_3`].
    pub fn hodge_star_4(&self, beta: &Form4) -> Form3 {
        hodge_star_4(beta)
    }
}

/// `(⋆α)_J = s · ε(I, J) · α_I` with `I` the complement of `J`.
pub fn hodge_star_3(alpha: &Form3) -> Form4 {
    let ix = form_index();
    let mut out = Form4::ZERO;
    for (c, &(c4, sign)) in ix.complement3.iter().enumerate() {
        out.0[c4] = ORIENTATION as f64 * sign * alpha.0[c];
    }
    out
}

/// `(⋆β)_I = s · ε(J, I) · β_J` with `J` the complement of `I`.
pub fn hodge_star_4(beta: &Form4) -> Form3 {
    let ix = form_index();
    let mut out = Form3::ZERO;
    for (c4, &(c, sign)) in ix.complement4.iter().enumerate() {
        out.0[c] = ORIENTATION as f64 * sign * beta.0[c4];
    }
    out
}

/// `(x × y)_k = x_a y_b φ_abk`.
pub fn cross(t: &StructureTables, x: &Vec7, y: &Vec7) -> Vec7 {
    let mut out = Vec7::ZERO;
    for ([a, b, c], s) in PHI_TERMS {
        let s = s as f64;
        out.0[c] += s * (x.0[a] * y.0[b] - x.0[b] * y.0[a]);
        out.0[a] += s * (x.0[b] * y.0[c] - x.0[c] * y.0[b]);
        out.0[b] += s * (x.0[c] * y.0[a] - x.0[a] * y.0[c]);
    }
    debug_assert_eq!(t.orientation, ORIENTATION);
    out
}

/// `(h ⋄ φ)_ijk = h_ip φ_pjk + h_jp φ_ipk + h_kp φ_ijp` for symmetric `h`.
pub fn diamond(_t: &StructureTables, h: &Mat7, phi3: &Form3) -> Result<Form3> {
    let defect = h.symmetry_defect();
    if defect > SYMMETRY_TOL * h.max_abs().max(1.0) {
        return Err(Error::NotSymmetric { defect });
    }
    Ok(diamond_unchecked(h, phi3))
}

/// `h_ip α_pjk + h_jp α_ipk + h_kp α_ijp` for an arbitrary matrix `h`.
pub fn matrix_action(h: &Mat7, phi3: &Form3) -> Form3 {
    diamond_unchecked(h, phi3)
}

pub(crate) fn diamond_unchecked(h: &Mat7, phi3: &Form3) -> Form3 {
    let ix = form_index();
    let mut out = Form3::ZERO;
    for (c, &[i, j, k]) in ix.comb3.iter().enumerate() {
        let mut s = 0.0;
        for p in 0..7 {
            s += h.0[i][p] * phi3.get(p, j, k)
                + h.0[j][p] * phi3.get(i, p, k)
                + h.0[k][p] * phi3.get(i, j, p);
        }
        out.0[c] = s;
    }
    out
}

/// `(x ⌟ ψ)_ijk = x_p ψ_pijk` for the reference ψ.
pub fn interior_psi(t: &StructureTables, x: &Vec7) -> Form3 {
    t.psi_form().interior(x)
}

fn wedge_terms() -> &'static [([usize; 2], [usize; 2], [usize; 3], f64)] {
    static TERMS: OnceLock<Vec<([usize; 2], [usize; 2], [usize; 3], f64)>> = OnceLock::new();
    TERMS.get_or_init(|| {
        let mut terms = Vec::with_capacity(210);
        for i in 0..7 {
            for j in i + 1..7 {
                for k in 0..7 {
                    for l in k + 1..7 {
                        if [i, j].contains(&k) || [i, j].contains(&l) {
                            continue;
                        }
                        let rest: Vec<usize> =
                            (0..7).filter(|x| ![i, j, k, l].contains(x)).collect();
                        let e = levi_civita(&[i, j, k, l, rest[0], rest[1], rest[2]]);
                        terms.push(([i, j], [k, l], [rest[0], rest[1], rest[2]], e as f64));
                    }
                }
            }
        }
        terms
    })
}

/// The bilinear form `B_uv` with `(u⌟φ)∧(v⌟φ)∧φ = −6 B_uv vol`.
pub fn metric_bilinear(phi3: &Form3) -> Mat7 {
    let contractions: Vec<Mat7> = (0..7).map(|u| phi3.interior(&Vec7::basis(u))).collect();
    let terms = wedge_terms();
    let mut b = Mat7::ZERO;
    for u in 0..7 {
        for v in u..7 {
            let (au, av) = (&contractions[u], &contractions[v]);
            let mut s = 0.0;
            for &([i, j], [k, l], [m, n, p], e) in terms {
                s += e * au.0[i][j] * av.0[k][l] * phi3.get(m, n, p);
            }
            let val = -s * ORIENTATION as f64 / 6.0;
            b.0[u][v] = val;
            b.0[v][u] = val;
        }
    }
    b
}

/// The metric induced by a 3-form: `g = B / det(B)^{1/9}`.
pub fn metric_from_form(phi3: &Form3) -> Result<Mat7> {
    let b = metric_bilinear(phi3);
    let det = b.determinant();
    if !(det > 0.0) || !b.is_positive_definite() {
        return Err(Error::DegenerateForm { det });
    }
    Ok(b * det.powf(-1.0 / 9.0))
}

/// One line of the identity report.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub defect: i64,
}

/// Result of [`validate_tables`].
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct ValidationReport {
    pub checks: Vec<IdentityCheck>,
}

impl ValidationReport {
    pub fn all_zero(&self) -> bool {
        self.checks.iter().all(|c| c.defect == 0)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(8);
        writeln!(f, "{:<width$}  defect", "identity")?;
        for c in &self.checks {
            writeln!(f, "{:<width$}  {}", c.name, c.defect)?;
        }
        Ok(())
    }
}

fn delta(i: usize, j: usize) -> i64 {
    (i == j) as i64
}

/// Evaluates every identity by exhaustive integer summation.
pub fn validate_tables(t: &StructureTables) -> ValidationReport {
    let phi = |i: usize, j: usize, k: usize| t.phi[i][j][k] as i64;
    let psi = |i: usize, j: usize, k: usize, l: usize| t.psi[i][j][k][l] as i64;
    let r = 0..7usize;
    let mut checks = Vec::new();
    let mut push = |name, defect: i64| checks.push(IdentityCheck { name, defect });

    let mut d = 0;
    for i in r.clone() {
        for j in r.clone() {
            for k in r.clone() {
                d = d
                    .max((phi(i, j, k) + phi(j, i, k)).abs())
                    .max((phi(i, j, k) + phi(i, k, j)).abs());
            }
        }
    }
    push("phi totally antisymmetric", d);

    let mut d = 0;
    for i in r.clone() {
        for j in r.clone() {
            for k in r.clone() {
                for l in r.clone() {
                    let v = psi(i, j, k, l);
                    d = d
                        .max((v + psi(j, i, k, l)).abs())
                        .max((v + psi(i, k, j, l)).abs())
                        .max((v + psi(i, j, l, k)).abs());
                }
            }
        }
    }
    push("psi totally antisymmetric", d);

    let (mut d1, mut d2, mut s3) = (0, 0, 0);
    for i in r.clone() {
        for j in r.clone() {
            for a in r.clone() {
                for b in r.clone() {
                    let lhs: i64 = r.clone().map(|k| phi(i, j, k) * phi(a, b, k)).sum();
                    let rhs = delta(i, a) * delta(j, b) - delta(i, b) * delta(j, a) - psi(i, j, a, b);
                    d1 = d1.max((lhs - rhs).abs());
                }
            }
        }
        for a in r.clone() {
            let mut lhs = 0;
            for j in r.clone() {
                for k in r.clone() {
                    lhs += phi(i, j, k) * phi(a, j, k);
                }
            }
            d2 = d2.max((lhs - 6 * delta(i, a)).abs());
        }
        for j in r.clone() {
            for k in r.clone() {
                s3 += phi(i, j, k) * phi(i, j, k);
            }
        }
    }
    push("phi_ijk phi_abk = g_ia g_jb - g_ib g_ja - psi_ijab", d1);
    push("phi_ijk phi_ajk = 6 g_ia", d2);
    push("phi_ijk phi_ijk = 42", (s3 - 42).abs());

    let (mut d1, mut d2, mut d3) = (0, 0, 0);
    for i in r.clone() {
        for j in r.clone() {
            for a in r.clone() {
                for b in r.clone() {
                    for c in r.clone() {
                        let lhs: i64 = r.clone().map(|k| phi(i, j, k) * psi(a, b, c, k)).sum();
                        let rhs = delta(i, a) * phi(j, b, c)
                            + delta(i, b) * phi(a, j, c)
                            + delta(i, c) * phi(a, b, j)
                            - delta(j, a) * phi(i, b, c)
                            - delta(j, b) * phi(a, i, c)
                            - delta(j, c) * phi(a, b, i);
                        d1 = d1.max((lhs - rhs).abs());
                    }
                }
            }
        }
        for a in r.clone() {
            for b in r.clone() {
                let mut lhs = 0;
                for j in r.clone() {
                    for k in r.clone() {
                        lhs += phi(i, j, k) * psi(a, b, j, k);
                    }
                }
                d2 = d2.max((lhs + 4 * phi(i, a, b)).abs());
            }
        }
    }
    for a in r.clone() {
        let mut lhs = 0;
        for i in r.clone() {
            for j in r.clone() {
                for k in r.clone() {
                    lhs += phi(i, j, k) * psi(a, i, j, k);
                }
            }
        }
        d3 = d3.max(lhs.abs());
    }
    push("phi_ijk psi_abck = six-term g.phi expansion", d1);
    push("phi_ijk psi_abjk = -4 phi_iab", d2);
    push("phi_ijk psi_aijk = 0", d3);

    let (mut d1, mut d2, mut s3) = (0, 0, 0);
    for i in r.clone() {
        for j in r.clone() {
            for a in r.clone() {
                for b in r.clone() {
                    let mut lhs = 0;
                    for k in r.clone() {
                        for l in r.clone() {
                            lhs += psi(i, j, k, l) * psi(a, b, k, l);
                        }
                    }
                    let rhs = 4 * delta(i, a) * delta(j, b)
                        - 4 * delta(i, b) * delta(j, a)
                        - 2 * psi(i, j, a, b);
                    d1 = d1.max((lhs - rhs).abs());
                }
            }
        }
        for a in r.clone() {
            let mut lhs = 0;
            for j in r.clone() {
                for k in r.clone() {
                    for l in r.clone() {
                        lhs += psi(i, j, k, l) * psi(a, j, k, l);
                    }
                }
            }
            d2 = d2.max((lhs - 24 * delta(i, a)).abs());
        }
        for j in r.clone() {
            for k in r.clone() {
                for l in r.clone() {
                    s3 += psi(i, j, k, l) * psi(i, j, k, l);
                }
            }
        }
    }
    push("psi_ijkl psi_abkl = 4 g_ia g_jb - 4 g_ib g_ja - 2 psi_ijab", d1);
    push("psi_ijkl psi_ajkl = 24 g_ia", d2);
    push("psi_ijkl psi_ijkl = 168", (s3 - 168).abs());

    // 6 ψ_jklm = s φ_abc ε_abcjklm and 24 φ_ijk = s ψ_abcd ε_abcdijk.
    let s = t.orientation as i64;
    let mut d1 = 0;
    let mut d2 = 0;
    for j in r.clone() {
        for k in r.clone() {
            for l in r.clone() {
                let mut acc3 = 0;
                for a in r.clone() {
                    for b in r.clone() {
                        for c in r.clone() {
                            for m in r.clone() {
                                acc3 += psi(a, b, c, m)
                                    * levi_civita(&[a, b, c, m, j, k, l]) as i64;
                            }
                        }
                    }
                }
                d2 = d2.max((24 * phi(j, k, l) - s * acc3).abs());
                for m in r.clone() {
                    let mut acc = 0;
                    for a in r.clone() {
                        for b in r.clone() {
                            for c in r.clone() {
                                acc += phi(a, b, c) * levi_civita(&[a, b, c, j, k, l, m]) as i64;
                            }
                        }
                    }
                    d1 = d1.max((6 * psi(j, k, l, m) - s * acc).abs());
                }
            }
        }
    }
    push("psi = *phi", d1);
    push("phi = *psi", d2);

    // ⋄ of the identity: g_ip φ_pjk + g_jp φ_ipk + g_kp φ_ijp = 3 φ_ijk.
    let mut d = 0;
    for i in r.clone() {
        for j in r.clone() {
            for k in r.clone() {
                let lhs: i64 = r
                    .clone()
                    .map(|p| delta(i, p) * phi(p, j, k) + delta(j, p) * phi(i, p, k) + delta(k, p) * phi(i, j, p))
                    .sum();
                d = d.max((lhs - 3 * phi(i, j, k)).abs());
            }
        }
    }
    push("g diamond phi = 3 phi", d);

    // B_uv from (u⌟φ)∧(v⌟φ)∧φ, times 6 · 2! 2! 3!: -s φ_uij φ_vkl φ_mnp ε = 144 δ_uv.
    let mut d = 0;
    for u in r.clone() {
        for v in r.clone() {
            let mut acc = 0;
            for ([i, j, k], a) in t.phi_nonzero().map(|(ix, v)| (ix, v as i64)) {
                if i != u {
                    continue;
                }
                for ([i2, k2, l2], b) in t.phi_nonzero().map(|(ix, v)| (ix, v as i64)) {
                    if i2 != v {
                        continue;
                    }
                    for ([m, n, p], c) in t.phi_nonzero().map(|(ix, v)| (ix, v as i64)) {
                        acc += a * b * c * levi_civita(&[j, k, k2, l2, m, n, p]) as i64;
                    }
                }
            }
            d = d.max((-s * acc - 144 * delta(u, v)).abs());
        }
    }
    push("metric of phi = g", d);

    // φ ∧ ψ = 7 vol: Σ_{I,J} φ_I ψ_J ε_IJ over sorted index sets, times s.
    let ix = form_index();
    let mut acc = 0;
    for &[i, j, k] in ix.comb3.iter() {
        for &[a, b, c, dd] in ix.comb4.iter() {
            acc += phi(i, j, k) * psi(a, b, c, dd) * levi_civita(&[i, j, k, a, b, c, dd]) as i64;
        }
    }
    push("phi wedge psi = 7 vol", (s * acc - 7).abs());

    let n_phi = t.phi_nonzero().count() as i64;
    let n_psi = t.psi_nonzero().count() as i64;
    push("nonzero entries of phi = 42", (n_phi - 42).abs());
    push("nonzero entries of psi = 168", (n_psi - 168).abs());

    ValidationReport { checks }
}
