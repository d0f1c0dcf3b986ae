use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::catalog::normal;
use super::{Connection, Metric, FD_STEP, NESTED_FD_STEP};
use crate::algebra::{su_basis, CMat, GammaSet, Spinor, C64};
use crate::error::{Error, Result};
use crate::numerics::fd_gradient;

/// su(N)-valued scalar field with optional analytic partials
/// (`gradient[μ]`, `hessian[μ·d + ν]`).
pub trait HiggsProfile: Send + Sync {
    fn dim(&self) -> usize;
    fn fiber(&self) -> usize;
    fn value(&self, x: &[f64]) -> CMat;
    fn gradient(&self, _x: &[f64]) -> Option<Vec<CMat>> {
        None
    }
    fn hessian(&self, _x: &[f64]) -> Option<Vec<CMat>> {
        None
    }
}

/// C^N ⊗ C^4-valued field with optional analytic partials.
pub trait DiracProfile: Send + Sync {
    fn dim(&self) -> usize;
    fn fiber(&self) -> usize;
    fn value(&self, x: &[f64]) -> Spinor;
    fn gradient(&self, _x: &[f64]) -> Option<Vec<Spinor>> {
        None
    }
}

#[derive(Clone)]
pub struct HiggsField {
    profile: Arc<dyn HiggsProfile>,
    name: String,
}

impl fmt::Debug for HiggsField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HiggsField({})", self.name)
    }
}

impl HiggsField {
    pub fn new(profile: impl HiggsProfile + 'static) -> Self {
        Self {
            profile: Arc::new(profile),
            name: "custom".into(),
        }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.into();
        self
    }

    /// The same field displaced by `eps·δφ` (no analytic partials are kept
    /// for the displaced part).
    pub fn perturbed(&self, delta: HiggsField, eps: f64) -> HiggsField {
        struct Sum(HiggsField, HiggsField, f64);
        impl HiggsProfile for Sum {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn fiber(&self) -> usize {
                self.0.fiber()
            }
            fn value(&self, x: &[f64]) -> CMat {
                let mut v = self.0.value(x);
                v.axpy(self.2, &self.1.value(x));
                v
            }
            fn gradient(&self, x: &[f64]) -> Option<Vec<CMat>> {
                let mut g = self.0.partials(x);
                for (a, b) in g.iter_mut().zip(self.1.partials(x)) {
                    a.axpy(self.2, &b);
                }
                Some(g)
            }
            fn hessian(&self, x: &[f64]) -> Option<Vec<CMat>> {
                let mut g = self.0.second_partials(x);
                for (a, b) in g.iter_mut().zip(self.1.second_partials(x)) {
                    a.axpy(self.2, &b);
                }
                Some(g)
            }
        }
        let name = format!("{}+{eps:e}·{}", self.name, delta.name);
        HiggsField::new(Sum(self.clone(), delta, eps)).named(&name)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.profile.dim()
    }

    pub fn fiber(&self) -> usize {
        self.profile.fiber()
    }

    pub fn value(&self, x: &[f64]) -> CMat {
        self.profile.value(x)
    }

    pub fn partials(&self, x: &[f64]) -> Vec<CMat> {
        self.profile
            .gradient(x)
            .unwrap_or_else(|| fd_gradient(|y| self.profile.value(y), x, FD_STEP))
    }

    /// `∂_μ∂_νφ` at `[μ·d + ν]`.
    pub fn second_partials(&self, x: &[f64]) -> Vec<CMat> {
        if let Some(h) = self.profile.hessian(x) {
            return h;
        }
        let step = if self.profile.gradient(x).is_some() {
            FD_STEP
        } else {
            NESTED_FD_STEP
        };
        fd_gradient(|y| self.partials(y), x, step).into_iter().flatten().collect()
    }
}

#[derive(Clone)]
pub struct DiracField {
    profile: Arc<dyn DiracProfile>,
    name: String,
}

impl fmt::Debug for DiracField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiracField({})", self.name)
    }
}

impl DiracField {
    pub fn new(profile: impl DiracProfile + 'static) -> Self {
        Self {
            profile: Arc::new(profile),
            name: "custom".into(),
        }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.profile.dim()
    }

    pub fn fiber(&self) -> usize {
        self.profile.fiber()
    }

    pub fn value(&self, x: &[f64]) -> Spinor {
        self.profile.value(x)
    }

    pub fn partials(&self, x: &[f64]) -> Vec<Spinor> {
        self.profile
            .gradient(x)
            .unwrap_or_else(|| fd_gradient(|y| self.profile.value(y), x, FD_STEP))
    }
}

/// `∇_μ∇_νφ` at `[μ·d + ν]`:
/// `∂_μ∂_νφ + [∂_μA_ν, φ] + [A_ν, ∂_μφ] + [A_μ, ∇_νφ]`.
pub fn covariant_hessian(conn: &Connection, phi: &HiggsField, x: &[f64]) -> Vec<CMat> {
    let d = conn.dim();
    let a = conn.potential(x);
    let da = conn.partials(x);
    let p = phi.value(x);
    let dp = phi.partials(x);
    let ddp = phi.second_partials(x);
    let nabla: Vec<CMat> = (0..d).map(|nu| &dp[nu] + &a[nu].commutator(&p)).collect();
    let mut out = Vec::with_capacity(d * d);
    for mu in 0..d {
        for nu in 0..d {
            let mut v = ddp[mu * d + nu].clone();
            v += &da[mu * d + nu].commutator(&p);
            v += &a[nu].commutator(&dp[mu]);
            v += &a[mu].commutator(&nabla[nu]);
            out.push(v);
        }
    }
    out
}

fn default_dim() -> usize {
    4
}
fn default_fiber() -> usize {
    2
}
fn default_null_k() -> Vec<f64> {
    vec![1.0, 1.0, 0.0, 0.0]
}
fn default_generator() -> usize {
    2
}
fn half() -> f64 {
    0.5
}

/// Catalog of Higgs fields for the sector checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum HiggsSpec {
    Zero {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "default_fiber")]
        fiber: usize,
    },
    /// `φ(x) = (k·x) T_g` with `k·x = Σ_μ k_μx^μ` and `T_g` the `generator`-th
    /// basis element of su(N).
    Linear {
        #[serde(default = "default_null_k")]
        k: Vec<f64>,
        #[serde(default = "default_generator")]
        generator: usize,
        #[serde(default = "default_fiber")]
        fiber: usize,
    },
    /// Constant `φ = Σ_a c_a T_a`.
    Constant {
        coefficients: Vec<f64>,
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "default_fiber")]
        fiber: usize,
    },
    /// Seeded quadratic polynomial in x with su(N) coefficients.
    RandomPolynomial {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "default_fiber")]
        fiber: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default = "half")]
        scale: f64,
    },
}

pub fn higgs_catalog(spec: &HiggsSpec) -> Result<HiggsField> {
    match spec {
        HiggsSpec::Zero { dim, fiber } => Ok(HiggsField::new(HiggsPolynomial::zero(*dim, *fiber)).named("zero")),
        HiggsSpec::Linear { k, generator, fiber } => {
            let basis = su_basis(*fiber);
            let t = basis
                .get(*generator)
                .ok_or(Error::IndexOutOfRange {
                    index: *generator,
                    dim: basis.len(),
                })?
                .clone();
            let d = k.len();
            let mut p = HiggsPolynomial::zero(d, *fiber);
            p.linear = k.iter().map(|kk| t.scale(*kk)).collect();
            Ok(HiggsField::new(p).named("linear"))
        }
        HiggsSpec::Constant {
            coefficients,
            dim,
            fiber,
        } => {
            let basis = su_basis(*fiber);
            if coefficients.len() > basis.len() {
                return Err(Error::DimensionMismatch {
                    expected: basis.len(),
                    got: coefficients.len(),
                });
            }
            let mut p = HiggsPolynomial::zero(*dim, *fiber);
            for (c, t) in coefficients.iter().zip(&basis) {
                p.constant.axpy(*c, t);
            }
            Ok(HiggsField::new(p).named("constant"))
        }
        HiggsSpec::RandomPolynomial { dim, fiber, seed, scale } => {
            let basis = su_basis(*fiber);
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let draw = |rng: &mut ChaCha8Rng| {
                let mut m = CMat::zeros(*fiber);
                for t in &basis {
                    m.axpy(scale * normal(rng), t);
                }
                m
            };
            let d = *dim;
            let mut p = HiggsPolynomial::zero(d, *fiber);
            p.constant = draw(&mut rng);
            p.linear = (0..d).map(|_| draw(&mut rng)).collect();
            for mu in 0..d {
                for nu in mu..d {
                    let m = draw(&mut rng).scale(0.5);
                    p.quadratic[mu * d + nu] = m.clone();
                    p.quadratic[nu * d + mu] = m;
                }
            }
            Ok(HiggsField::new(p).named("random_polynomial"))
        }
    }
}

/// `φ(x) = c + Σ_μ l_μ x^μ + ½ Σ_{μν} q_{μν} x^μ x^ν` with `q` symmetric.
struct HiggsPolynomial {
    constant: CMat,
    linear: Vec<CMat>,
    quadratic: Vec<CMat>,
}

impl HiggsPolynomial {
    fn zero(d: usize, n: usize) -> Self {
        Self {
            constant: CMat::zeros(n),
            linear: vec![CMat::zeros(n); d],
            quadratic: vec![CMat::zeros(n); d * d],
        }
    }
}

impl HiggsProfile for HiggsPolynomial {
    fn dim(&self) -> usize {
        self.linear.len()
    }
    fn fiber(&self) -> usize {
        self.constant.dim()
    }
    fn value(&self, x: &[f64]) -> CMat {
        let d = self.dim();
        let mut v = self.constant.clone();
        for mu in 0..d {
            v.axpy(x[mu], &self.linear[mu]);
            for nu in 0..d {
                v.axpy(0.5 * x[mu] * x[nu], &self.quadratic[mu * d + nu]);
            }
        }
        v
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<CMat>> {
        let d = self.dim();
        Some(
            (0..d)
                .map(|mu| {
                    let mut v = self.linear[mu].clone();
                    for nu in 0..d {
                        v.axpy(x[nu], &self.quadratic[mu * d + nu]);
                    }
                    v
                })
                .collect(),
        )
    }
    fn hessian(&self, _x: &[f64]) -> Option<Vec<CMat>> {
        Some(self.quadratic.clone())
    }
}

fn zero_mass() -> f64 {
    0.0
}
fn default_colour() -> Vec<f64> {
    vec![1.0, 0.0]
}
fn default_spin() -> Vec<f64> {
    vec![1.0, 0.0, 0.0, 0.0]
}

/// Catalog of Dirac fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiracSpec {
    Zero {
        #[serde(default = "default_fiber")]
        fiber: usize,
    },
    /// `ψ(x) = χ ⊗ (k̸ − m)v · exp(i k·x)`, a free solution when `k·k = m²`.
    PlaneWave {
        #[serde(default = "default_null_k")]
        k: Vec<f64>,
        #[serde(default = "zero_mass")]
        mass: f64,
        #[serde(default = "default_colour")]
        colour: Vec<f64>,
        #[serde(default = "default_spin")]
        spin: Vec<f64>,
    },
    /// Seeded complex quadratic polynomial components.
    RandomPolynomial {
        #[serde(default = "default_fiber")]
        fiber: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default = "half")]
        scale: f64,
    },
}

pub fn dirac_catalog(spec: &DiracSpec) -> Result<DiracField> {
    match spec {
        DiracSpec::Zero { fiber } => Ok(DiracField::new(DiracPolynomial {
            coeffs: vec![Spinor::zeros(*fiber); 1 + 4 + 16],
        })
        .named("zero")),
        DiracSpec::PlaneWave { k, mass, colour, spin } => {
            if k.len() != 4 || spin.len() != 4 {
                return Err(Error::InvalidParameter("plane wave needs k and spin of length 4".into()));
            }
            let eta = Metric::minkowski(4);
            if *mass < 0.0 || (eta.square(k) - mass * mass).abs() > 1e-12 * (1.0 + eta.square(k).abs()) {
                return Err(Error::InvalidParameter("plane wave needs k·k = m² with m ≥ 0".into()));
            }
            let gammas = GammaSet::dirac();
            let kk = [k[0], k[1], k[2], k[3]];
            let mut op = gammas.slash(&kk);
            op.axpy(-mass, &CMat::identity(4));
            let w: Vec<C64> = (0..4)
                .map(|a| (0..4).map(|b| op.get(a, b) * spin[b]).sum())
                .collect();
            let chi: Vec<C64> = colour.iter().map(|c| C64::new(*c, 0.0)).collect();
            Ok(DiracField::new(PlaneWaveSpinor {
                k: kk,
                amplitude: Spinor::product(&chi, &[w[0], w[1], w[2], w[3]]),
            })
            .named("plane_wave"))
        }
        DiracSpec::RandomPolynomial { fiber, seed, scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut coeffs = Vec::with_capacity(21);
            for slot in 0..21 {
                let damp = if slot >= 5 { 0.5 } else { 1.0 };
                coeffs.push(Spinor::from_fn(*fiber, |_, _| {
                    C64::new(scale * damp * normal(&mut rng), scale * damp * normal(&mut rng))
                }));
            }
            // symmetrise the quadratic block
            for mu in 0..4 {
                for nu in 0..mu {
                    coeffs[5 + mu * 4 + nu] = coeffs[5 + nu * 4 + mu].clone();
                }
            }
            Ok(DiracField::new(DiracPolynomial { coeffs }).named("random_polynomial"))
        }
    }
}

/// Spinor polynomial on R⁴: slot 0 constant, 1..5 linear, 5..21 quadratic
/// `½ q_{μν} x^μ x^ν`.
struct DiracPolynomial {
    coeffs: Vec<Spinor>,
}

impl DiracProfile for DiracPolynomial {
    fn dim(&self) -> usize {
        4
    }
    fn fiber(&self) -> usize {
        self.coeffs[0].colour_dim()
    }
    fn value(&self, x: &[f64]) -> Spinor {
        let mut v = self.coeffs[0].clone();
        for mu in 0..4 {
            v.axpy(x[mu], &self.coeffs[1 + mu]);
            for nu in 0..4 {
                v.axpy(0.5 * x[mu] * x[nu], &self.coeffs[5 + mu * 4 + nu]);
            }
        }
        v
    }
}

struct PlaneWaveSpinor {
    k: [f64; 4],
    amplitude: Spinor,
}

impl PlaneWaveSpinor {
    fn phase(&self, x: &[f64]) -> C64 {
        let th: f64 = self.k.iter().zip(x).map(|(k, x)| k * x).sum();
        C64::from_polar(1.0, th)
    }
}

impl DiracProfile for PlaneWaveSpinor {
    fn dim(&self) -> usize {
        4
    }
    fn fiber(&self) -> usize {
        self.amplitude.colour_dim()
    }
    fn value(&self, x: &[f64]) -> Spinor {
        self.amplitude.scale_c(self.phase(x))
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<Spinor>> {
        let v = self.value(x);
        Some(self.k.iter().map(|k| v.scale_c(C64::new(0.0, *k))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{catalog, covariant_derivative};
    use super::*;

    fn random_higgs(seed: u64) -> HiggsField {
        higgs_catalog(&HiggsSpec::RandomPolynomial {
            dim: 4,
            fiber: 2,
            seed,
            scale: 0.5,
        })
        .unwrap()
    }

    #[test]
    fn covariant_derivative_trivial_cases() {
        let zero = catalog("zero", &serde_json::Value::Null).unwrap();
        let constant = higgs_catalog(&HiggsSpec::Constant {
            coefficients: vec![0.3, -1.0, 0.2],
            dim: 4,
            fiber: 2,
        })
        .unwrap();
        let x = [0.1, 0.5, -0.3, 0.2];
        for mu in 0..4 {
            assert_eq!(covariant_derivative(&zero, &constant, &x, mu).unwrap().max_norm(), 0.0);
        }
        let t = su_basis(2);
        for mu in 0..4 {
            let mut k = vec![0.0; 4];
            k[mu] = 1.0;
            let phi = higgs_catalog(&HiggsSpec::Linear {
                k,
                generator: 1,
                fiber: 2,
            })
            .unwrap();
            let d = covariant_derivative(&zero, &phi, &x, mu).unwrap();
            assert!((&d - &t[1]).max_norm() < 1e-15);
        }
        assert!(covariant_derivative(&zero, &constant, &x, 4).is_err());
    }

    #[test]
    fn covariant_derivative_matches_finite_difference_oracle() {
        let conn = catalog("random_polynomial", &serde_json::json!({"seed": 4})).unwrap();
        let phi = random_higgs(8);
        let x = [0.3, -0.4, 0.6, 0.1];
        let a = conn.potential(&x);
        let p = phi.value(&x);
        let mut errs = Vec::new();
        for h in [1e-2, 5e-3] {
            let mut worst: f64 = 0.0;
            for mu in 0..4 {
                let mut xp = x;
                let mut xm = x;
                xp[mu] += h;
                xm[mu] -= h;
                let oracle = &(&phi.value(&xp) - &phi.value(&xm)).scale(0.5 / h) + &a[mu].commutator(&p);
                let d = covariant_derivative(&conn, &phi, &x, mu).unwrap();
                worst = worst.max((&d - &oracle).max_norm());
            }
            errs.push(worst);
        }
        // quadratic φ: central differences exact up to rounding
        assert!(errs.iter().all(|e| *e < 1e-10), "{errs:?}");
    }

    #[test]
    fn covariant_hessian_matches_nested_differences() {
        let conn = catalog("bpst_instanton", &serde_json::json!({"rho": 1.2})).unwrap();
        let phi = random_higgs(3);
        let x = [0.2, 0.3, -0.1, 0.4];
        let hess = covariant_hessian(&conn, &phi, &x);
        let nabla = |y: &[f64], nu: usize| covariant_derivative(&conn, &phi, y, nu).unwrap();
        let a = conn.potential(&x);
        let h = 1e-4;
        for mu in 0..4 {
            for nu in 0..4 {
                let mut xp = x;
                let mut xm = x;
                xp[mu] += h;
                xm[mu] -= h;
                let oracle =
                    &(&nabla(&xp, nu) - &nabla(&xm, nu)).scale(0.5 / h) + &a[mu].commutator(&nabla(&x, nu));
                assert!((&hess[mu * 4 + nu] - &oracle).max_norm() < 1e-7);
            }
        }
    }

    #[test]
    fn plane_wave_spinor_is_annihilated_by_slash() {
        let field = dirac_catalog(&DiracSpec::PlaneWave {
            k: vec![1.0, 1.0, 0.0, 0.0],
            mass: 0.0,
            colour: vec![0.6, 0.8],
            spin: vec![0.3, -1.0, 0.5, 0.2],
        })
        .unwrap();
        let g = GammaSet::dirac();
        let s = g.slash(&[1.0, 1.0, 0.0, 0.0]);
        let psi = field.value(&[0.1, 0.2, 0.3, 0.4]);
        assert!(psi.norm() > 0.1);
        assert!(psi.spin_mul(&s).max_norm() < 1e-15);
        assert!(dirac_catalog(&DiracSpec::PlaneWave {
            k: vec![1.0, 0.5, 0.0, 0.0],
            mass: 0.0,
            colour: vec![1.0, 0.0],
            spin: vec![1.0, 0.0, 0.0, 0.0],
        })
        .is_err());
    }

    #[test]
    fn higgs_values_are_traceless_anti_hermitian() {
        let phi = random_higgs(12);
        let v = phi.value(&[0.4, -0.2, 0.9, 1.3]);
        crate::algebra::lie::check_tag(&v, crate::algebra::GroupTag::Su, 1e-13).unwrap();
    }
}
