//! Complex 3×3 dyadics.
//!
//! A [`Dyadic`] stores one value of a tensor field of two spatial arguments,
//! e.g. `G(r, r', ω)` at a fixed frequency and point pair. Index convention is
//! `d[(row, col)]` with rows tied to the first spatial argument.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

pub type Vec3 = Vector3<f64>;
pub type CVec3 = Vector3<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dyadic(pub Matrix3<Complex64>);

impl Default for Dyadic {
    fn default() -> Self {
        Self::zero()
    }
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic(Matrix3::zeros())
    }

    pub fn identity() -> Self {
        Dyadic(Matrix3::identity())
    }

    pub fn from_real(m: Matrix3<f64>) -> Self {
        Dyadic(m.map(Complex64::from))
    }

    pub fn from_fn(f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Dyadic(Matrix3::from_fn(f))
    }

    /// Real outer product `a ⊗ b`.
    pub fn outer_real(a: &Vec3, b: &Vec3) -> Self {
        Self::from_real(a * b.transpose())
    }

    /// `a ⊗ b` with no conjugation; use `b.conjugate()` for `a ⊗ b*`.
    pub fn outer(a: &CVec3, b: &CVec3) -> Self {
        Dyadic(a * b.transpose())
    }

    /// Antisymmetric dyadic `[g]_× ` with entries `ε_{αβγ} g_γ`.
    pub fn cross_matrix(g: &Vec3) -> Self {
        Self::from_fn(|a, b| {
            let mut s = 0.0;
            for c in 0..3 {
                s += levi_civita(a, b, c) * g[c];
            }
            Complex64::from(s)
        })
    }

    pub fn transpose(&self) -> Self {
        Dyadic(self.0.transpose())
    }

    pub fn adjoint(&self) -> Self {
        Dyadic(self.0.adjoint())
    }

    pub fn conj(&self) -> Self {
        Dyadic(self.0.map(|z| z.conj()))
    }

    /// Entry-wise real part, as a dyadic with zero imaginary parts.
    pub fn re(&self) -> Self {
        Dyadic(self.0.map(|z| Complex64::from(z.re)))
    }

    /// Entry-wise imaginary part, as a dyadic with zero imaginary parts.
    pub fn im(&self) -> Self {
        Dyadic(self.0.map(|z| Complex64::from(z.im)))
    }

    pub fn real_matrix(&self) -> Matrix3<f64> {
        self.0.map(|z| z.re)
    }

    pub fn imag_matrix(&self) -> Matrix3<f64> {
        self.0.map(|z| z.im)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn map(&self, f: impl FnMut(Complex64) -> Complex64) -> Self {
        Dyadic(self.0.map(f))
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> [Complex64; 9] {
        let mut out = [Complex64::default(); 9];
        for i in 0..3 {
            for j in 0..3 {
                out[3 * i + j] = self.0[(i, j)];
            }
        }
        out
    }

    pub fn from_entries(e: &[Complex64; 9]) -> Self {
        Self::from_fn(|i, j| e[3 * i + j])
    }

    /// Largest entry-wise difference relative to the larger of the two norms.
    pub fn rel_diff(&self, other: &Dyadic) -> f64 {
        let scale = self.max_abs().max(other.max_abs());
        if scale == 0.0 {
            0.0
        } else {
            (*self - *other).max_abs() / scale
        }
    }

    /// `a · D · b` for real vectors.
    pub fn contract(&self, a: &Vec3, b: &Vec3) -> Complex64 {
        let mut s = Complex64::default();
        for i in 0..3 {
            for j in 0..3 {
                s += self.0[(i, j)] * a[i] * b[j];
            }
        }
        s
    }

    pub fn apply(&self, v: &CVec3) -> CVec3 {
        self.0 * v
    }
}

impl Index<(usize, usize)> for Dyadic {
    type Output = Complex64;
    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for Dyadic {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut Complex64 {
        &mut self.0[idx]
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        Dyadic(self.0 + rhs.0)
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        Dyadic(self.0 - rhs.0)
    }
}

impl AddAssign for Dyadic {
    fn add_assign(&mut self, rhs: Dyadic) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Dyadic {
    fn sub_assign(&mut self, rhs: Dyadic) {
        self.0 -= rhs.0;
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic(-self.0)
    }
}

impl Mul<f64> for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: f64) -> Dyadic {
        Dyadic(self.0 * Complex64::from(rhs))
    }
}

impl Mul<Complex64> for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Complex64) -> Dyadic {
        Dyadic(self.0 * rhs)
    }
}

impl Mul<Dyadic> for f64 {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        rhs * self
    }
}

impl Mul<Dyadic> for Complex64 {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        rhs * self
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        Dyadic(self.0 * rhs.0)
    }
}

impl std::iter::Sum for Dyadic {
    fn sum<It: Iterator<Item = Dyadic>>(iter: It) -> Dyadic {
        iter.fold(Dyadic::zero(), |a, b| a + b)
    }
}

/// Levi-Civita symbol with `ε_{xyz} = +1`.
#[inline]
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Hermitian part of the pair `(A, B) = (T(r,r'), T(r',r))`: `(A + B†)/2`.
pub fn hermitian_part(a: &Dyadic, b: &Dyadic) -> Dyadic {
    (*a + b.adjoint()) * 0.5
}

/// Anti-Hermitian part `(A − B†)/(2i)` with `A = G(r,r')`, `B = G(r',r)`.
pub fn anti_hermitian_part(a: &Dyadic, b: &Dyadic) -> Dyadic {
    (*a - b.adjoint()) * (1.0 / (2.0 * I))
}

/// Real and imaginary parts of the anti-Hermitian part, computed from the
/// transposed-pair identities
/// `Re G_AH = ½ Im[G(r,r') + Gᵀ(r',r)]` and `Im G_AH = −½ Re[G(r,r') − Gᵀ(r',r)]`.
///
/// Both returned dyadics are real.
pub fn re_im_split_ah(g_rrp: &Dyadic, g_rpr: &Dyadic) -> (Dyadic, Dyadic) {
    let gt = g_rpr.transpose();
    let re = (*g_rrp + gt).im() * 0.5;
    let im = (*g_rrp - gt).re() * -0.5;
    (re, im)
}

/// Unit vector and length of `r - r'`.
pub fn separation(r: &Vec3, rp: &Vec3) -> (Vec3, f64) {
    let d = r - rp;
    let len = d.norm();
    if len == 0.0 {
        (Vec3::zeros(), 0.0)
    } else {
        (d / len, len)
    }
}
