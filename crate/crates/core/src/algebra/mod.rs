//! Dense complex matrix kernels for the Lie algebras u(N)/su(N) and the
//! Dirac gamma algebra.
//!
//! Matrices are small (N ≤ 4 in practice) and stored inline, row-major, so
//! the hot loops of the transport integrator never touch the heap.

pub(crate) mod gamma;
pub(crate) mod lie;

pub use gamma::{dirac_bilinear, GammaSet, Spinor};
pub use lie::{commutator, project_su, su_basis, GroupTag, LieMatrix, DEFAULT_TAG_TOLERANCE};

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

type Storage = SmallVec<[C64; 16]>;

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMat {
    n: usize,
    data: Storage,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: SmallVec::from_elem(ZERO, n * n),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn scalar(n: usize, z: C64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = z;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Storage::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds a matrix from row slices. Panics if the rows are ragged.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let n = rows.len();
        Self::from_fn(n, |i, j| {
            assert_eq!(rows[i].len(), n, "ragged matrix rows");
            rows[i][j]
        })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        Self::from_fn(n, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, |i, j| if i == j { entries[i] } else { ZERO })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.data[i * self.n + j] = z;
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn matmul(&self, rhs: &CMat) -> CMat {
        debug_assert_eq!(self.n, rhs.n);
        let n = self.n;
        let (a, b) = (&self.data[..n * n], &rhs.data[..n * n]);
        let mut out = CMat::zeros(n);
        for (arow, orow) in a.chunks_exact(n).zip(out.data.chunks_exact_mut(n)) {
            for (aik, brow) in arow.iter().zip(b.chunks_exact(n)) {
                for (o, bkj) in orow.iter_mut().zip(brow) {
                    *o += aik * bkj;
                }
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> CMat {
        CMat {
            n: self.n,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_c(&self, s: C64) -> CMat {
        CMat {
            n: self.n,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `self += s * other`
    #[inline]
    pub fn axpy(&mut self, s: f64, other: &CMat) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b * s;
        }
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.n, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn commutator(&self, rhs: &CMat) -> CMat {
        &self.matmul(rhs) - &rhs.matmul(self)
    }

    /// `U X U⁻¹` given the inverse explicitly.
    pub fn conjugate_by(&self, u: &CMat, u_inv: &CMat) -> CMat {
        u.matmul(self).matmul(u_inv)
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Real Frobenius inner product `Re tr(X* Y)`.
    pub fn frobenius_inner(&self, rhs: &CMat) -> f64 {
        self.data
            .iter()
            .zip(rhs.data.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Max-norm of `X* + X`.
    pub fn anti_hermitian_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.get(i, j) + self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Max-norm of `X* X − I`.
    pub fn unitarity_defect(&self) -> f64 {
        (&self.adjoint().matmul(self) - &CMat::identity(self.n)).max_norm()
    }

    /// Inverse by Gauss–Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Option<CMat> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = CMat::identity(n);
        for col in 0..n {
            let pivot = (col..n).max_by(|&r, &s| {
                a.get(r, col)
                    .norm()
                    .partial_cmp(&a.get(s, col).norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })?;
            let p = a.get(pivot, col);
            if p.norm() < 1e-300 {
                return None;
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            let p_inv = ONE / p;
            for j in 0..n {
                a.data[col * n + j] *= p_inv;
                inv.data[col * n + j] *= p_inv;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col);
                if f == ZERO {
                    continue;
                }
                for j in 0..n {
                    let (av, iv) = (a.data[col * n + j], inv.data[col * n + j]);
                    a.data[r * n + j] -= f * av;
                    inv.data[r * n + j] -= f * iv;
                }
            }
        }
        Some(inv)
    }

    /// Matrix exponential by scaling and squaring with a Taylor core.
    pub fn expm(&self) -> CMat {
        let norm = self.data.iter().map(|z| z.norm()).sum::<f64>();
        let mut squarings = 0u32;
        let mut scale = 1.0;
        while norm * scale > 0.25 {
            scale *= 0.5;
            squarings += 1;
        }
        let x = self.scale(scale);
        let mut term = CMat::identity(self.n);
        let mut sum = CMat::identity(self.n);
        for k in 1..=18 {
            term = term.matmul(&x).scale(1.0 / k as f64);
            sum += &term;
            if term.max_norm() < 1e-18 {
                break;
            }
        }
        for _ in 0..squarings {
            sum = sum.matmul(&sum);
        }
        sum
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat({}x{}) [", self.n, self.n)?;
        for i in 0..self.n {
            write!(f, "  ")?;
            for j in 0..self.n {
                let z = self.get(i, j);
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<'a> Add<&'a CMat> for &'a CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        debug_assert_eq!(self.n, rhs.n);
        CMat {
            n: self.n,
            data: self.data.iter().zip(rhs.data.iter()).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a CMat> for &'a CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        debug_assert_eq!(self.n, rhs.n);
        CMat {
            n: self.n,
            data: self.data.iter().zip(rhs.data.iter()).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Add for CMat {
    type Output = CMat;
    fn add(mut self, rhs: CMat) -> CMat {
        self += &rhs;
        self
    }
}

impl Sub for CMat {
    type Output = CMat;
    fn sub(mut self, rhs: CMat) -> CMat {
        self -= &rhs;
        self
    }
}

impl<'a> Mul<&'a CMat> for &'a CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        self.matmul(rhs)
    }
}

impl Mul for CMat {
    type Output = CMat;
    fn mul(self, rhs: CMat) -> CMat {
        self.matmul(&rhs)
    }
}

impl Neg for CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        CMat {
            n: self.n,
            data: self.data.iter().map(|z| -z).collect(),
        }
    }
}

impl Neg for &CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        self.clone().neg()
    }
}

impl AddAssign<&CMat> for CMat {
    fn add_assign(&mut self, rhs: &CMat) {
        debug_assert_eq!(self.n, rhs.n);
        for (a, b) in self.data.iter_mut().zip(rhs.data.iter()) {
            *a += b;
        }
    }
}

impl SubAssign<&CMat> for CMat {
    fn sub_assign(&mut self, rhs: &CMat) {
        debug_assert_eq!(self.n, rhs.n);
        for (a, b) in self.data.iter_mut().zip(rhs.data.iter()) {
            *a -= b;
        }
    }
}

/// JSON shape: `{"n": 2, "re": [...], "im": [...]}` with row-major entries.
#[derive(Serialize, Deserialize)]
struct CMatRepr {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for CMat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        CMatRepr {
            n: self.n,
            re: self.data.iter().map(|z| z.re).collect(),
            im: self.data.iter().map(|z| z.im).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = CMatRepr::deserialize(d)?;
        if r.re.len() != r.n * r.n || r.im.len() != r.n * r.n {
            return Err(serde::de::Error::custom("matrix entry count does not match n*n"));
        }
        Ok(CMat {
            n: r.n,
            data: r.re.iter().zip(r.im.iter()).map(|(&a, &b)| C64::new(a, b)).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli() -> [CMat; 3] {
        [
            CMat::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]]),
            CMat::from_rows(&[&[ZERO, -I], &[I, ZERO]]),
            CMat::from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]]),
        ]
    }

    #[test]
    fn inverse_of_random_matrix() {
        let m = CMat::from_fn(3, |i, j| C64::new((i * 3 + j) as f64 * 0.3 - 1.0, (i + 2 * j) as f64 * 0.1));
        let m = &m + &CMat::identity(3).scale(2.0);
        let inv = m.inverse().unwrap();
        assert!((m.matmul(&inv) - CMat::identity(3)).max_norm() < 1e-13);
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let m = CMat::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(m.inverse().is_none());
    }

    #[test]
    fn expm_of_rotation_generator() {
        // exp(-i θ σ_y / 2) is a real rotation by θ/2
        let theta = 0.7_f64;
        let g = pauli()[1].scale_c(C64::new(0.0, -theta / 2.0));
        let e = g.expm();
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let expected = CMat::from_real_rows(&[&[c, -s], &[s, c]]);
        assert!((e - expected).max_norm() < 1e-14);
    }

    #[test]
    fn expm_of_large_diagonal() {
        let d = CMat::diag(&[C64::new(3.0, 0.0), C64::new(0.0, 5.0)]);
        let e = d.expm();
        assert!((e.get(0, 0) - C64::new(3.0f64.exp(), 0.0)).norm() < 1e-12 * 20.0);
        assert!((e.get(1, 1) - C64::new(5.0f64.cos(), 5.0f64.sin())).norm() < 1e-13);
    }

    #[test]
    fn serde_roundtrip() {
        let m = pauli()[1].clone();
        let s = serde_json::to_string(&m).unwrap();
        let back: CMat = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
        assert!(serde_json::from_str::<CMat>(r#"{"n":2,"re":[1],"im":[0]}"#).is_err());
    }
}
