//! Fixed-size vectors and matrices in seven dimensions.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// A vector in R^7.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec7(pub [f64; 7]);

impl Vec7 {
    pub const ZERO: Vec7 = Vec7([0.0; 7]);

    /// The standard basis vector `e_i`.
    pub fn basis(i: usize) -> Self {
        let mut v = [0.0; 7];
        v[i] = 1.0;
        Vec7(v)
    }

    pub fn dot(&self, other: &Vec7) -> f64 {
        let mut s = 0.0;
        for i in 0..7 {
            s += self.0[i] * other.0[i];
        }
        s
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Index<usize> for Vec7 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vec7 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for Vec7 {
    type Output = Vec7;
    fn add(mut self, rhs: Vec7) -> Vec7 {
        self += rhs;
        self
    }
}

impl AddAssign for Vec7 {
    fn add_assign(&mut self, rhs: Vec7) {
        for i in 0..7 {
            self.0[i] += rhs.0[i];
        }
    }
}

impl Sub for Vec7 {
    type Output = Vec7;
    fn sub(mut self, rhs: Vec7) -> Vec7 {
        self -= rhs;
        self
    }
}

impl SubAssign for Vec7 {
    fn sub_assign(&mut self, rhs: Vec7) {
        for i in 0..7 {
            self.0[i] -= rhs.0[i];
        }
    }
}

impl Mul<f64> for Vec7 {
    type Output = Vec7;
    fn mul(mut self, s: f64) -> Vec7 {
        for x in &mut self.0 {
            *x *= s;
        }
        self
    }
}

impl Neg for Vec7 {
    type Output = Vec7;
    fn neg(self) -> Vec7 {
        self * -1.0
    }
}

/// A 7x7 real matrix, stored row-major: `m[(i, j)]` is row `i`, column `j`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Mat7(pub [[f64; 7]; 7]);

impl Mat7 {
    pub const ZERO: Mat7 = Mat7([[0.0; 7]; 7]);

    pub fn identity() -> Self {
        Self::diagonal(1.0)
    }

    pub fn diagonal(d: f64) -> Self {
        let mut m = Self::ZERO;
        for i in 0..7 {
            m.0[i][i] = d;
        }
        m
    }

    /// The outer product `a b^T`.
    pub fn outer(a: &Vec7, b: &Vec7) -> Self {
        let mut m = Self::ZERO;
        for i in 0..7 {
            for j in 0..7 {
                m.0[i][j] = a.0[i] * b.0[j];
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::ZERO;
        for i in 0..7 {
            for j in 0..7 {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn matmul(&self, other: &Mat7) -> Self {
        let mut m = Self::ZERO;
        for i in 0..7 {
            for k in 0..7 {
                let a = self.0[i][k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..7 {
                    m.0[i][j] += a * other.0[k][j];
                }
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &Vec7) -> Vec7 {
        let mut out = Vec7::ZERO;
        for i in 0..7 {
            let mut s = 0.0;
            for j in 0..7 {
                s += self.0[i][j] * v.0[j];
            }
            out.0[i] = s;
        }
        out
    }

    /// `v^T M`, i.e. contraction on the first slot.
    pub fn vec_mul(&self, v: &Vec7) -> Vec7 {
        self.transpose().mul_vec(v)
    }

    pub fn row(&self, i: usize) -> Vec7 {
        Vec7(self.0[i])
    }

    pub fn col(&self, j: usize) -> Vec7 {
        let mut v = Vec7::ZERO;
        for i in 0..7 {
            v.0[i] = self.0[i][j];
        }
        v
    }

    pub fn trace(&self) -> f64 {
        (0..7).map(|i| self.0[i][i]).sum()
    }

    /// Full contraction `A_pq B_pq`.
    pub fn contract(&self, other: &Mat7) -> f64 {
        let mut s = 0.0;
        for i in 0..7 {
            for j in 0..7 {
                s += self.0[i][j] * other.0[i][j];
            }
        }
        s
    }

    /// Squared Frobenius norm `A_pq A_pq`.
    pub fn norm2(&self) -> f64 {
        self.contract(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn symmetry_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..7 {
            for j in 0..i {
                d = d.max((self.0[i][j] - self.0[j][i]).abs());
            }
        }
        d
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    /// LU factorization with partial pivoting. Returns `None` for an exactly
    /// singular pivot.
    fn lu(&self) -> Option<([[f64; 7]; 7], [usize; 7], f64)> {
        let mut a = self.0;
        let mut perm = [0, 1, 2, 3, 4, 5, 6];
        let mut sign = 1.0;
        for k in 0..7 {
            let mut p = k;
            for i in k + 1..7 {
                if a[i][k].abs() > a[p][k].abs() {
                    p = i;
                }
            }
            if a[p][k] == 0.0 {
                return None;
            }
            if p != k {
                a.swap(p, k);
                perm.swap(p, k);
                sign = -sign;
            }
            for i in k + 1..7 {
                let l = a[i][k] / a[k][k];
                a[i][k] = l;
                for j in k + 1..7 {
                    a[i][j] -= l * a[k][j];
                }
            }
        }
        Some((a, perm, sign))
    }

    pub fn determinant(&self) -> f64 {
        match self.lu() {
            None => 0.0,
            Some((a, _, sign)) => (0..7).fold(sign, |d, i| d * a[i][i]),
        }
    }

    /// Inverse via LU; `None` when singular.
    pub fn inverse(&self) -> Option<Mat7> {
        let (a, perm, _) = self.lu()?;
        let mut inv = Mat7::ZERO;
        for col in 0..7 {
            let mut y = [0.0; 7];
            for i in 0..7 {
                let mut s = if perm[i] == col { 1.0 } else { 0.0 };
                for j in 0..i {
                    s -= a[i][j] * y[j];
                }
                y[i] = s;
            }
            for i in (0..7).rev() {
                let mut s = y[i];
                for j in i + 1..7 {
                    s -= a[i][j] * y[j];
                }
                y[i] = s / a[i][i];
            }
            for i in 0..7 {
                inv.0[i][col] = y[i];
            }
        }
        Some(inv)
    }

    /// True when the symmetric part admits a Cholesky factorization.
    pub fn is_positive_definite(&self) -> bool {
        let mut l = [[0.0f64; 7]; 7];
        for i in 0..7 {
            for j in 0..=i {
                let mut s = 0.5 * (self.0[i][j] + self.0[j][i]);
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return false;
                    }
                    l[i][i] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        true
    }
}

impl Index<(usize, usize)> for Mat7 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat7 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl Add for Mat7 {
    type Output = Mat7;
    fn add(mut self, rhs: Mat7) -> Mat7 {
        self += rhs;
        self
    }
}

impl AddAssign for Mat7 {
    fn add_assign(&mut self, rhs: Mat7) {
        for i in 0..7 {
            for j in 0..7 {
                self.0[i][j] += rhs.0[i][j];
            }
        }
    }
}

impl Sub for Mat7 {
    type Output = Mat7;
    fn sub(mut self, rhs: Mat7) -> Mat7 {
        for i in 0..7 {
            for j in 0..7 {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
        self
    }
}

impl Mul<f64> for Mat7 {
    type Output = Mat7;
    fn mul(mut self, s: f64) -> Mat7 {
        for row in &mut self.0 {
            for x in row {
                *x *= s;
            }
        }
        self
    }
}

/// A general (not necessarily antisymmetric) 3-tensor in R^7, indexed `[i][j][k]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cube7(pub [[[f64; 7]; 7]; 7]);

impl Default for Cube7 {
    fn default() -> Self {
        Cube7([[[0.0; 7]; 7]; 7])
    }
}

impl Cube7 {
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }
}
