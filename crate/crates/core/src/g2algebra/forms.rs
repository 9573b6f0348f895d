//! Totally antisymmetric 3- and 4-tensors on R^7.
//!
//! A form is stored by its 35 independent components `α_I` with `I` a strictly
//! increasing index triple (or quadruple), in lexicographic order. Dense access
//! `get(i, j, k)` returns the signed component for any index tuple, so the
//! tensor is totally antisymmetric by construction.
//!
//! With this storage the form inner product `(1/k!) α_I β_I` (full index sum)
//! is the plain dot product of the compact arrays.

use std::ops::{Add, AddAssign, Mul, Sub};
use std::sync::OnceLock;

use super::linalg::{Mat7, Vec7};

/// Number of independent components of a 3-form (and of a 4-form) in 7 dimensions.
pub const NCOMP: usize = 35;

pub(crate) struct FormIndex {
    pub comb3: [[usize; 3]; NCOMP],
    pub comb4: [[usize; 4]; NCOMP],
    /// `(slot + 1) * sign` for the sorted triple, 0 when indices repeat.
    idx3: [[[i8; 7]; 7]; 7],
    idx4: Box<[[[[i8; 7]; 7]; 7]; 7]>,
    /// For each 3-subset, the complementary 4-subset and the sign of the
    /// permutation `(I, J)` of `0..7`.
    pub complement3: [(usize, f64); NCOMP],
    /// For each 4-subset, the complementary 3-subset and the sign of `(J, I)`.
    pub complement4: [(usize, f64); NCOMP],
    /// `x ⌟ β` for 4-forms: for 3-slot `c` and vector index `p`, the 4-slot of
    /// `(p, I_c)` and its sign.
    pub interior4: [[Option<(usize, f64)>; 7]; NCOMP],
}

/// Sign of the permutation that sorts `idx`, or 0 when an index repeats.
pub fn permutation_sign(idx: &[usize]) -> i32 {
    let mut sign = 1;
    for a in 0..idx.len() {
        for b in a + 1..idx.len() {
            if idx[a] == idx[b] {
                return 0;
            }
            if idx[a] > idx[b] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Levi-Civita symbol on seven indices (coordinate orientation `e^{1..7}`).
pub fn levi_civita(idx: &[usize; 7]) -> i32 {
    permutation_sign(idx)
}

fn sorted_with_sign<const K: usize>(idx: [usize; K]) -> Option<([usize; K], i32)> {
    let s = permutation_sign(&idx);
    if s == 0 {
        return None;
    }
    let mut sorted = idx;
    sorted.sort_unstable();
    Some((sorted, s))
}

pub(crate) fn form_index() -> &'static FormIndex {
    static INDEX: OnceLock<FormIndex> = OnceLock::new();
    INDEX.get_or_init(|| {
        let mut comb3 = [[0; 3]; NCOMP];
        let mut comb4 = [[0; 4]; NCOMP];
        let mut n = 0;
        for i in 0..7 {
            for j in i + 1..7 {
                for k in j + 1..7 {
                    comb3[n] = [i, j, k];
                    n += 1;
                }
            }
        }
        n = 0;
        for i in 0..7 {
            for j in i + 1..7 {
                for k in j + 1..7 {
                    for l in k + 1..7 {
                        comb4[n] = [i, j, k, l];
                        n += 1;
                    }
                }
            }
        }
        let slot3 = |c: [usize; 3]| comb3.iter().position(|x| *x == c).unwrap();
        let slot4 = |c: [usize; 4]| comb4.iter().position(|x| *x == c).unwrap();

        let mut idx3 = [[[0i8; 7]; 7]; 7];
        for i in 0..7 {
            for j in 0..7 {
                for k in 0..7 {
                    if let Some((s, sign)) = sorted_with_sign([i, j, k]) {
                        idx3[i][j][k] = (slot3(s) as i8 + 1) * sign as i8;
                    }
                }
            }
        }
        let mut idx4 = Box::new([[[[0i8; 7]; 7]; 7]; 7]);
        for i in 0..7 {
            for j in 0..7 {
                for k in 0..7 {
                    for l in 0..7 {
                        if let Some((s, sign)) = sorted_with_sign([i, j, k, l]) {
                            idx4[i][j][k][l] = (slot4(s) as i8 + 1) * sign as i8;
                        }
                    }
                }
            }
        }
        let mut complement3 = [(0, 0.0); NCOMP];
        let mut complement4 = [(0, 0.0); NCOMP];
        for (c, i3) in comb3.iter().enumerate() {
            let j4: Vec<usize> = (0..7).filter(|x| !i3.contains(x)).collect();
            let mut perm = [0; 7];
            perm[..3].copy_from_slice(i3);
            perm[3..].copy_from_slice(&j4);
            let s4 = slot4([j4[0], j4[1], j4[2], j4[3]]);
            complement3[c] = (s4, levi_civita(&perm) as f64);
            let mut perm2 = [0; 7];
            perm2[..4].copy_from_slice(&j4);
            perm2[4..].copy_from_slice(i3);
            complement4[s4] = (c, levi_civita(&perm2) as f64);
        }
        let mut interior4 = [[None; 7]; NCOMP];
        for (c, i3) in comb3.iter().enumerate() {
            for (p, slot) in interior4[c].iter_mut().enumerate() {
                if let Some((s, sign)) = sorted_with_sign([p, i3[0], i3[1], i3[2]]) {
                    *slot = Some((slot4(s), sign as f64));
                }
            }
        }
        FormIndex {
            comb3,
            comb4,
            idx3,
            idx4,
            complement3,
            complement4,
            interior4,
        }
    })
}

/// A 3-form at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Form3(pub [f64; NCOMP]);

/// A 4-form at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Form4(pub [f64; NCOMP]);

impl Default for Form3 {
    fn default() -> Self {
        Form3([0.0; NCOMP])
    }
}

impl Default for Form4 {
    fn default() -> Self {
        Form4([0.0; NCOMP])
    }
}

macro_rules! form_common {
    ($ty:ident) => {
        impl $ty {
            pub const ZERO: $ty = $ty([0.0; NCOMP]);

            /// Compact dot product; equals `(1/k!)` times the full index sum.
            pub fn inner(&self, other: &$ty) -> f64 {
                let mut s = 0.0;
                for c in 0..NCOMP {
                    s += self.0[c] * other.0[c];
                }
                s
            }

            pub fn norm2(&self) -> f64 {
                self.inner(self)
            }

            pub fn max_abs(&self) -> f64 {
                self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|x| x.is_finite())
            }
        }

        impl Add for $ty {
            type Output = $ty;
            fn add(mut self, rhs: $ty) -> $ty {
                self += rhs;
                self
            }
        }

        impl AddAssign for $ty {
            fn add_assign(&mut self, rhs: $ty) {
                for c in 0..NCOMP {
                    self.0[c] += rhs.0[c];
                }
            }
        }

        impl Sub for $ty {
            type Output = $ty;
            fn sub(mut self, rhs: $ty) -> $ty {
                for c in 0..NCOMP {
                    self.0[c] -= rhs.0[c];
                }
                self
            }
        }

        impl Mul<f64> for $ty {
            type Output = $ty;
            fn mul(mut self, s: f64) -> $ty {
                for x in &mut self.0 {
                    *x *= s;
                }
                self
            }
        }
    };
}

form_common!(Form3);
form_common!(Form4);

impl Form3 {
    /// Signed component `α_ijk` for arbitrary indices.
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let code = form_index().idx3[i][j][k];
        match code {
            0 => 0.0,
            c if c > 0 => self.0[(c - 1) as usize],
            c => -self.0[(-c - 1) as usize],
        }
    }

    /// The basis form `e^i ∧ e^j ∧ e^k`.
    pub fn basis(i: usize, j: usize, k: usize) -> Self {
        let mut f = Form3::ZERO;
        let code = form_index().idx3[i][j][k];
        if code != 0 {
            f.0[(code.unsigned_abs() - 1) as usize] = code.signum() as f64;
        }
        f
    }

    /// Build from a dense array, antisymmetrizing. For an already
    /// antisymmetric input this reads off the sorted components.
    pub fn from_dense(d: &[[[f64; 7]; 7]; 7]) -> Self {
        let ix = form_index();
        let mut f = Form3::ZERO;
        for (c, &[i, j, k]) in ix.comb3.iter().enumerate() {
            f.0[c] = (d[i][j][k] - d[i][k][j] + d[j][k][i] - d[j][i][k] + d[k][i][j]
                - d[k][j][i])
                / 6.0;
        }
        f
    }

    pub fn to_dense(&self) -> [[[f64; 7]; 7]; 7] {
        let mut d = [[[0.0; 7]; 7]; 7];
        for (i, plane) in d.iter_mut().enumerate() {
            for (j, row) in plane.iter_mut().enumerate() {
                for (k, x) in row.iter_mut().enumerate() {
                    *x = self.get(i, j, k);
                }
            }
        }
        d
    }

    /// `(x ⌟ α)_jk = x_i α_ijk`, returned as an antisymmetric matrix.
    pub fn interior(&self, x: &Vec7) -> Mat7 {
        let ix = form_index();
        let mut m = Mat7::ZERO;
        for (c, &[i, j, k]) in ix.comb3.iter().enumerate() {
            let a = self.0[c];
            if a == 0.0 {
                continue;
            }
            m.0[j][k] += x.0[i] * a;
            m.0[k][j] -= x.0[i] * a;
            m.0[k][i] += x.0[j] * a;
            m.0[i][k] -= x.0[j] * a;
            m.0[i][j] += x.0[k] * a;
            m.0[j][i] -= x.0[k] * a;
        }
        m
    }

    /// `(a × b)_k = a_i b_j α_ijk`.
    pub fn cross(&self, a: &Vec7, b: &Vec7) -> Vec7 {
        let ix = form_index();
        let mut out = Vec7::ZERO;
        for (c, &[i, j, k]) in ix.comb3.iter().enumerate() {
            let v = self.0[c];
            if v == 0.0 {
                continue;
            }
            out.0[k] += v * (a.0[i] * b.0[j] - a.0[j] * b.0[i]);
            out.0[i] += v * (a.0[j] * b.0[k] - a.0[k] * b.0[j]);
            out.0[j] += v * (a.0[k] * b.0[i] - a.0[i] * b.0[k]);
        }
        out
    }

    /// `x ∧ α` as a 4-form.
    pub fn wedge_vec(&self, x: &Vec7) -> Form4 {
        let ix = form_index();
        let mut out = Form4::ZERO;
        for (c, &[q, j, k, l]) in ix.comb4.iter().enumerate() {
            out.0[c] = x.0[q] * self.get(j, k, l) - x.0[j] * self.get(q, k, l)
                + x.0[k] * self.get(q, j, l)
                - x.0[l] * self.get(q, j, k);
        }
        out
    }

    /// `x ∧ β` for an antisymmetric matrix `β`, as a 3-form.
    pub fn wedge_vec_two_form(x: &Vec7, beta: &Mat7) -> Form3 {
        let ix = form_index();
        let mut out = Form3::ZERO;
        for (c, &[i, j, k]) in ix.comb3.iter().enumerate() {
            out.0[c] = x.0[i] * beta.0[j][k] - x.0[j] * beta.0[i][k] + x.0[k] * beta.0[i][j];
        }
        out
    }
}

impl Form4 {
    /// Signed component `β_ijkl` for arbitrary indices.
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let code = form_index().idx4[i][j][k][l];
        match code {
            0 => 0.0,
            c if c > 0 => self.0[(c - 1) as usize],
            c => -self.0[(-c - 1) as usize],
        }
    }

    pub fn basis(i: usize, j: usize, k: usize, l: usize) -> Self {
        let mut f = Form4::ZERO;
        let code = form_index().idx4[i][j][k][l];
        if code != 0 {
            f.0[(code.unsigned_abs() - 1) as usize] = code.signum() as f64;
        }
        f
    }

    /// `(x ⌟ β)_ijk = x_p β_pijk`.
    pub fn interior(&self, x: &Vec7) -> Form3 {
        let ix = form_index();
        let mut out = Form3::ZERO;
        for c in 0..NCOMP {
            let mut s = 0.0;
            for p in 0..7 {
                if let Some((c4, sign)) = ix.interior4[c][p] {
                    s += sign * x.0[p] * self.0[c4];
                }
            }
            out.0[c] = s;
        }
        out
    }

    /// `e_q ⌟ β` for a basis vector, without multiplications.
    pub fn interior_basis(&self, q: usize) -> Form3 {
        let ix = form_index();
        let mut out = Form3::ZERO;
        for c in 0..NCOMP {
            if let Some((c4, sign)) = ix.interior4[c][q] {
                out.0[c] = sign * self.0[c4];
            }
        }
        out
    }

    /// The 3-tensor `(a, b) ↦ β_ab··`, contracted: `(a ⌟ b ⌟ β)` with
    /// components `a_p b_q β_pqkl` as an antisymmetric matrix.
    pub fn double_interior(&self, a: &Vec7, b: &Vec7) -> Mat7 {
        self.interior(a).interior(b)
    }
}
