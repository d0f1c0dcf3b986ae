use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::{CMat, C64, I, ONE, ZERO};
use crate::error::{Error, Result};

/// Minkowski signature used by the gamma algebra.
pub const ETA4: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

/// The four Dirac matrices γ^0..γ^3 (upper index) with
/// `γ^μγ^ν + γ^νγ^μ = 2η^{μν} I₄`.
#[derive(Clone, Debug)]
pub struct GammaSet {
    upper: [CMat; 4],
}

impl GammaSet {
    /// Dirac (standard) representation: `γ^0 = diag(1, 1, −1, −1)`,
    /// `γ^k = [[0, σ_k], [−σ_k, 0]]`. All entries are in {0, ±1, ±i}.
    pub fn dirac() -> Self {
        let sigma = [
            [[ZERO, ONE], [ONE, ZERO]],
            [[ZERO, -I], [I, ZERO]],
            [[ONE, ZERO], [ZERO, -ONE]],
        ];
        let g0 = CMat::diag(&[ONE, ONE, -ONE, -ONE]);
        let spatial = |k: usize| {
            CMat::from_fn(4, |r, c| match (r < 2, c < 2) {
                (true, false) => sigma[k][r][c - 2],
                (false, true) => -sigma[k][r - 2][c],
                _ => ZERO,
            })
        };
        let set = Self {
            upper: [g0, spatial(0), spatial(1), spatial(2)],
        };
        assert!(
            set.anticommutator_defect() == 0.0,
            "Dirac representation violates the Clifford relations"
        );
        set
    }

    /// Wraps a user-supplied set after checking the Clifford relations and
    /// the hermiticity conditions.
    pub fn new(upper: [CMat; 4]) -> Result<Self> {
        for g in &upper {
            if g.dim() != 4 {
                return Err(Error::DimensionMismatch {
                    expected: 4,
                    got: g.dim(),
                });
            }
        }
        let set = Self { upper };
        let defect = set.anticommutator_defect();
        if defect > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "gamma matrices violate the Clifford relations (defect {defect:.3e})"
            )));
        }
        let h0 = (&set.upper[0] - &set.upper[0].adjoint()).max_norm();
        let ah = (1..4).map(|k| set.upper[k].anti_hermitian_defect()).fold(0.0, f64::max);
        if h0 > 1e-12 || ah > 1e-12 {
            return Err(Error::InvalidParameter(
                "γ^0 must be Hermitian and γ^1..γ^3 anti-Hermitian".into(),
            ));
        }
        Ok(set)
    }

    /// Max-norm of `γ^μγ^ν + γ^νγ^μ − 2η^{μν}I` over all 16 ordered pairs.
    pub fn anticommutator_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for mu in 0..4 {
            for nu in 0..4 {
                let ac = &self.upper[mu].matmul(&self.upper[nu]) + &self.upper[nu].matmul(&self.upper[mu]);
                let expected = if mu == nu {
                    CMat::identity(4).scale(2.0 * ETA4[mu])
                } else {
                    CMat::zeros(4)
                };
                worst = worst.max((&ac - &expected).max_norm());
            }
        }
        worst
    }

    pub fn upper(&self, mu: usize) -> &CMat {
        &self.upper[mu]
    }

    /// `γ_μ = η_{μν} γ^ν`.
    pub fn lower(&self, mu: usize) -> CMat {
        self.upper[mu].scale(ETA4[mu])
    }

    /// `γ^μ k_μ` for covariant components `k`.
    pub fn slash(&self, k: &[f64; 4]) -> CMat {
        let mut out = CMat::zeros(4);
        for (mu, &km) in k.iter().enumerate() {
            out.axpy(km, &self.upper[mu]);
        }
        out
    }
}

/// Element of C^N ⊗ C^4 stored as an N×4 block: row `a` is the colour index,
/// column `α` the spin index, so `φ = Σ_α φ_α ⊗ g_α` with `φ_α` the α-th column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spinor {
    n: usize,
    data: SmallVec<[C64; 16]>,
}

impl Spinor {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: SmallVec::from_elem(ZERO, 4 * n),
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = SmallVec::with_capacity(4 * n);
        for a in 0..n {
            for alpha in 0..4 {
                data.push(f(a, alpha));
            }
        }
        Self { n, data }
    }

    /// `w ⊗ χ`: spin vector `w` tensored with colour vector `chi`.
    pub fn product(chi: &[C64], w: &[C64; 4]) -> Self {
        Self::from_fn(chi.len(), |a, alpha| chi[a] * w[alpha])
    }

    pub fn colour_dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, a: usize, alpha: usize) -> C64 {
        self.data[a * 4 + alpha]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `(U ⊗ I₄) ψ`.
    pub fn colour_mul(&self, u: &CMat) -> Spinor {
        debug_assert_eq!(u.dim(), self.n);
        Spinor::from_fn(self.n, |a, alpha| (0..self.n).map(|b| u.get(a, b) * self.get(b, alpha)).sum())
    }

    /// `(I_N ⊗ G) ψ` for a 4×4 spin matrix `G`.
    pub fn spin_mul(&self, g: &CMat) -> Spinor {
        debug_assert_eq!(g.dim(), 4);
        Spinor::from_fn(self.n, |a, alpha| (0..4).map(|beta| g.get(alpha, beta) * self.get(a, beta)).sum())
    }

    pub fn scale(&self, s: f64) -> Spinor {
        Spinor {
            n: self.n,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_c(&self, s: C64) -> Spinor {
        Spinor {
            n: self.n,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn axpy(&mut self, s: f64, other: &Spinor) {
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b * s;
        }
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl<'a> Add<&'a Spinor> for &'a Spinor {
    type Output = Spinor;
    fn add(self, rhs: &Spinor) -> Spinor {
        Spinor {
            n: self.n,
            data: self.data.iter().zip(rhs.data.iter()).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a Spinor> for &'a Spinor {
    type Output = Spinor;
    fn sub(self, rhs: &Spinor) -> Spinor {
        Spinor {
            n: self.n,
            data: self.data.iter().zip(rhs.data.iter()).map(|(a, b)| a - b).collect(),
        }
    }
}

/// The colour operator `φ̄γ_μφ = Σ_α ((I_N ⊗ γ_0γ_μ)φ)_α ⊗ φ_α^*`, i.e.
/// `ξ ↦ Σ_α (ξ, φ_α) ((I_N ⊗ γ_0γ_μ)φ)_α`. It is Hermitian, so `i·φ̄γ_μφ ∈ u(N)`.
pub fn dirac_bilinear(phi: &Spinor, mu: usize, gammas: &GammaSet) -> Result<CMat> {
    if mu > 3 {
        return Err(Error::IndexOutOfRange { index: mu, dim: 4 });
    }
    let g = gammas.upper(0).matmul(&gammas.lower(mu));
    let chi = phi.spin_mul(&g);
    let n = phi.colour_dim();
    Ok(CMat::from_fn(n, |a, b| (0..4).map(|alpha| chi.get(a, alpha) * phi.get(b, alpha).conj()).sum()))
}

/// `i·φ̄γ_μφ` as an element of u(N).
pub(crate) fn dirac_current(phi: &Spinor, mu: usize, gammas: &GammaSet) -> CMat {
    dirac_bilinear(phi, mu, gammas)
        .expect("index checked by caller")
        .scale_c(I)
}
