//! Per-point tensor values: 3-vectors, symmetric 3x3 tensors and connection
//! coefficients. Everything is stored with lower indices.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

pub type Mat3 = [[f64; 3]; 3];

/// Packed storage order of the six independent components of a symmetric tensor.
pub const SYM_PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

#[inline]
pub const fn sym_index(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (0, 1) | (1, 0) => 1,
        (0, 2) | (2, 0) => 2,
        (1, 1) => 3,
        (1, 2) | (2, 1) => 4,
        _ => 5,
    }
}

/// Values that can live on a grid point and be combined linearly.
pub trait FieldValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    const COMPONENTS: usize;
    fn component(&self, c: usize) -> f64;
    fn set_component(&mut self, c: usize, v: f64);
    fn is_finite(&self) -> bool {
        (0..Self::COMPONENTS).all(|c| self.component(c).is_finite())
    }
}

impl FieldValue for f64 {
    const COMPONENTS: usize = 1;
    fn component(&self, _c: usize) -> f64 {
        *self
    }
    fn set_component(&mut self, _c: usize, v: f64) {
        *self = v;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub fn from_fn(f: impl FnMut(usize) -> f64) -> Self {
        Vec3(std::array::from_fn(f))
    }

    #[inline]
    pub fn dot(&self, o: &Vec3) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }
}

impl std::ops::Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for Vec3 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Symmetric 3x3 tensor, six packed lower-index components.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sym3(pub [f64; 6]);

impl Sym3 {
    pub const ZERO: Sym3 = Sym3([0.0; 6]);
    pub const IDENTITY: Sym3 = Sym3([1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        Sym3([a, 0.0, 0.0, b, 0.0, c])
    }

    /// Builds from a function of the index pair; only the upper triangle is sampled.
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Sym3(std::array::from_fn(|c| {
            let (i, j) = SYM_PAIRS[c];
            f(i, j)
        }))
    }

    /// Symmetric part of a full matrix.
    pub fn symmetrize(m: &Mat3) -> Self {
        Self::from_fn(|i, j| 0.5 * (m[i][j] + m[j][i]))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[sym_index(i, j)]
    }

    pub fn to_mat(&self) -> Mat3 {
        std::array::from_fn(|i| std::array::from_fn(|j| self.get(i, j)))
    }

    pub fn det(&self) -> f64 {
        let [xx, xy, xz, yy, yz, zz] = self.0;
        xx * (yy * zz - yz * yz) - xy * (xy * zz - yz * xz) + xz * (xy * yz - yy * xz)
    }

    /// Closed-form inverse. The caller is responsible for checking the determinant.
    pub fn inverse_with_det(&self, det: f64) -> Sym3 {
        let [xx, xy, xz, yy, yz, zz] = self.0;
        let inv = 1.0 / det;
        Sym3([
            (yy * zz - yz * yz) * inv,
            (xz * yz - xy * zz) * inv,
            (xy * yz - xz * yy) * inv,
            (xx * zz - xz * xz) * inv,
            (xy * xz - xx * yz) * inv,
            (xx * yy - xy * xy) * inv,
        ])
    }

    /// Positive definiteness by leading principal minors.
    pub fn is_positive_definite(&self) -> bool {
        let [xx, xy, _, yy, _, _] = self.0;
        xx > 0.0 && xx * yy - xy * xy > 0.0 && self.det() > 0.0
    }

    #[inline]
    pub fn trace_with(&self, ginv: &Sym3) -> f64 {
        let a = &self.0;
        let h = &ginv.0;
        a[0] * h[0] + a[3] * h[3] + a[5] * h[5] + 2.0 * (a[1] * h[1] + a[2] * h[2] + a[4] * h[4])
    }

    /// Plain componentwise contraction `A_ab B_ab` (no metric).
    #[inline]
    pub fn contract_flat(&self, o: &Sym3) -> f64 {
        let a = &self.0;
        let b = &o.0;
        a[0] * b[0] + a[3] * b[3] + a[5] * b[5] + 2.0 * (a[1] * b[1] + a[2] * b[2] + a[4] * b[4])
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<usize> for Sym3 {
    type Output = f64;
    fn index(&self, c: usize) -> &f64 {
        &self.0[c]
    }
}

/// Christoffel symbols at one point: `gamma[a]` holds `Γ^a_{bc}` as a symmetric tensor in `b, c`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Christoffel(pub [Sym3; 3]);

impl Christoffel {
    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.0[a].get(b, c)
    }
}

macro_rules! impl_linear {
    ($t:ident, $n:expr) => {
        impl Add for $t {
            type Output = $t;
            #[inline]
            fn add(self, o: $t) -> $t {
                $t(std::array::from_fn(|i| self.0[i] + o.0[i]))
            }
        }
        impl Sub for $t {
            type Output = $t;
            #[inline]
            fn sub(self, o: $t) -> $t {
                $t(std::array::from_fn(|i| self.0[i] - o.0[i]))
            }
        }
        impl Mul<f64> for $t {
            type Output = $t;
            #[inline]
            fn mul(self, s: f64) -> $t {
                $t(std::array::from_fn(|i| self.0[i] * s))
            }
        }
        impl Neg for $t {
            type Output = $t;
            #[inline]
            fn neg(self) -> $t {
                self * -1.0
            }
        }
        impl AddAssign for $t {
            #[inline]
            fn add_assign(&mut self, o: $t) {
                for i in 0..$n {
                    self.0[i] += o.0[i];
                }
            }
        }
        impl FieldValue for $t {
            const COMPONENTS: usize = $n;
            fn component(&self, c: usize) -> f64 {
                self.0[c]
            }
            fn set_component(&mut self, c: usize, v: f64) {
                self.0[c] = v;
            }
        }
    };
}

impl_linear!(Vec3, 3);
impl_linear!(Sym3, 6);

impl Add for Christoffel {
    type Output = Christoffel;
    fn add(self, o: Christoffel) -> Christoffel {
        Christoffel(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for Christoffel {
    type Output = Christoffel;
    fn sub(self, o: Christoffel) -> Christoffel {
        Christoffel(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Mul<f64> for Christoffel {
    type Output = Christoffel;
    fn mul(self, s: f64) -> Christoffel {
        Christoffel(std::array::from_fn(|i| self.0[i] * s))
    }
}

impl FieldValue for Christoffel {
    const COMPONENTS: usize = 18;
    fn component(&self, c: usize) -> f64 {
        self.0[c / 6].0[c % 6]
    }
    fn set_component(&mut self, c: usize, v: f64) {
        self.0[c / 6].0[c % 6] = v;
    }
}

#[inline]
pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j]))
}

/// Sign of the permutation `(a, b, c)` of `(0, 1, 2)`, zero on repeated indices.
#[inline]
pub const fn levi_civita_symbol(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// The two cyclic partners of `a` with positive orientation: `[a, b, c] = +1`.
#[inline]
pub const fn cyclic(a: usize) -> (usize, usize) {
    ((a + 1) % 3, (a + 2) % 3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = Sym3([2.0, 0.3, -0.1, 1.5, 0.2, 3.0]);
        let inv = a.inverse_with_det(a.det());
        let p = mat_mul(&a.to_mat(), &inv.to_mat());
        for (i, row) in p.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        assert!(!Sym3::diag(1.0, -1.0, 1.0).is_positive_definite());
        assert!(Sym3::IDENTITY.is_positive_definite());
    }

    #[test]
    fn symbol_is_antisymmetric() {
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    assert_eq!(levi_civita_symbol(a, b, c), -levi_civita_symbol(b, a, c));
                }
            }
        }
        for a in 0..3 {
            let (b, c) = cyclic(a);
            assert_eq!(levi_civita_symbol(a, b, c), 1.0);
        }
    }
}
