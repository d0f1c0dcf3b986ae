use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Connection, ConnectionInfo, GaugePotential, KnownCurrent, Metric, MetricKind};
use crate::algebra::{su_basis, CMat, I};
use crate::error::{Error, Result};

fn default_dim() -> usize {
    4
}
fn default_fiber() -> usize {
    2
}
fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn default_center() -> Vec<f64> {
    vec![0.0; 4]
}
fn default_wave_k() -> Vec<f64> {
    vec![1.0, 1.0, 0.0, 0.0]
}
fn default_wave_a() -> Vec<f64> {
    vec![0.0, 0.0, 1.0, 0.5]
}
fn default_pure_gauge_q() -> usize {
    1
}
fn euclidean() -> MetricKind {
    MetricKind::Euclidean
}

/// Name and parameters of a catalog connection, as written in campaign files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum CatalogSpec {
    /// `A ≡ 0`.
    Zero {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "default_fiber")]
        fiber: usize,
    },
    /// `A = b⁻¹db` with `b(x) = exp(α x^p T₁) exp(β x^q T₂)` in SU(2).
    PureGauge {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "one")]
        alpha: f64,
        #[serde(default = "one")]
        beta: f64,
        #[serde(default)]
        p: usize,
        #[serde(default = "default_pure_gauge_q")]
        q: usize,
    },
    /// `A_ν(x) = c_{μν} x^μ T` with one fixed generator; `u1` switches to
    /// `T = i·I_N` (the u(1) ⊂ u(N) embedding).
    AbelianLinear {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "default_fiber")]
        fiber: usize,
        #[serde(default)]
        c: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        u1: bool,
    },
    /// Abelian `A_ν = a_ν(x) T` with quadratic `a_ν`; carries the constant
    /// current `j_ν = g^{λμ}∂_λ(∂_μa_ν − ∂_νa_μ) T` for `metric`.
    AbelianPlantedCurrent {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "default_fiber")]
        fiber: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default = "euclidean")]
        metric: MetricKind,
        #[serde(default = "half")]
        scale: f64,
    },
    /// SU(2) instanton in regular gauge on Euclidean R⁴.
    BpstInstanton {
        #[serde(default = "one")]
        rho: f64,
        #[serde(default = "default_center")]
        center: Vec<f64>,
    },
    /// `A_μ = a_μ sin(k·x) T` with `k` null and `k·a = 0` under η.
    NullPlaneWave {
        #[serde(default = "default_wave_k")]
        k: Vec<f64>,
        #[serde(default = "default_wave_a")]
        a: Vec<f64>,
        #[serde(default = "default_fiber")]
        fiber: usize,
    },
    /// Non-abelian quadratic polynomial potential with seeded coefficients;
    /// generically not a Yang–Mills solution.
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

impl CatalogSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CatalogSpec::Zero { .. } => "zero",
            CatalogSpec::PureGauge { .. } => "pure_gauge",
            CatalogSpec::AbelianLinear { .. } => "abelian_linear",
            CatalogSpec::AbelianPlantedCurrent { .. } => "abelian_planted_current",
            CatalogSpec::BpstInstanton { .. } => "bpst_instanton",
            CatalogSpec::NullPlaneWave { .. } => "null_plane_wave",
            CatalogSpec::RandomPolynomial { .. } => "random_polynomial",
        }
    }

    /// Parses `{"name": ..., params...}` style parameters for a named entry.
    pub fn from_name(name: &str, params: &serde_json::Value) -> Result<Self> {
        let mut obj = match params {
            serde_json::Value::Null => serde_json::Map::new(),
            serde_json::Value::Object(m) => m.clone(),
            _ => return Err(Error::Config("catalog parameters must be a table".into())),
        };
        obj.insert("name".into(), serde_json::Value::String(name.into()));
        serde_json::from_value(serde_json::Value::Object(obj)).map_err(|e| {
            if e.to_string().contains("unknown variant") {
                Error::UnknownCatalog(name.into())
            } else {
                Error::Config(e.to_string())
            }
        })
    }

    pub fn build(&self) -> Result<Connection> {
        match self {
            CatalogSpec::Zero { dim, fiber } => {
                check_dims(*dim, *fiber)?;
                Ok(Connection::new(ZeroPotential { dim: *dim, fiber: *fiber })
                    .with_info(info("zero", &[MetricKind::Euclidean, MetricKind::Minkowski], true)))
            }
            CatalogSpec::PureGauge { dim, alpha, beta, p, q } => {
                check_dims(*dim, 2)?;
                if p == q || *p >= *dim || *q >= *dim {
                    return Err(Error::InvalidParameter(
                        "pure_gauge needs two distinct coordinate indices below dim".into(),
                    ));
                }
                Ok(Connection::new(PureGauge {
                    dim: *dim,
                    alpha: *alpha,
                    beta: *beta,
                    p: *p,
                    q: *q,
                    t: su_basis(2),
                })
                .with_info(info("pure_gauge", &[MetricKind::Euclidean, MetricKind::Minkowski], true)))
            }
            CatalogSpec::AbelianLinear { dim, fiber, c, seed, u1 } => {
                check_dims(*dim, *fiber)?;
                let c = match c {
                    Some(c) => {
                        if c.len() != *dim || c.iter().any(|r| r.len() != *dim) {
                            return Err(Error::InvalidParameter(format!("c must be {dim}×{dim}")));
                        }
                        c.clone()
                    }
                    None => {
                        let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                        (0..*dim)
                            .map(|_| (0..*dim).map(|_| 0.5 * normal(&mut rng)).collect())
                            .collect()
                    }
                };
                let t = if *u1 {
                    CMat::scalar(*fiber, I)
                } else {
                    su_basis(*fiber).swap_remove(0)
                };
                Ok(Connection::new(AbelianPolynomial {
                    dim: *dim,
                    t,
                    linear: c,
                    quadratic: vec![vec![vec![0.0; *dim]; *dim]; *dim],
                })
                .with_info(info("abelian_linear", &[MetricKind::Euclidean, MetricKind::Minkowski], !*u1)))
            }
            CatalogSpec::AbelianPlantedCurrent {
                dim,
                fiber,
                seed,
                metric,
                scale,
            } => {
                check_dims(*dim, *fiber)?;
                let d = *dim;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let linear: Vec<Vec<f64>> =
                    (0..d).map(|_| (0..d).map(|_| scale * normal(&mut rng)).collect()).collect();
                // s[ν][μ][κ] symmetric in (μ, κ)
                let mut s = vec![vec![vec![0.0; d]; d]; d];
                for plane in s.iter_mut() {
                    for mu in 0..d {
                        for ka in mu..d {
                            let v = scale * normal(&mut rng);
                            plane[mu][ka] = v;
                            plane[ka][mu] = v;
                        }
                    }
                }
                let g = Metric::new(*metric, d);
                let coeffs: Vec<f64> = (0..d)
                    .map(|nu| (0..d).map(|l| g.diag(l) * (s[nu][l][l] - s[l][l][nu])).sum())
                    .collect();
                let t = su_basis(*fiber).swap_remove(0);
                let currents: Vec<CMat> = coeffs.iter().map(|c| t.scale(*c)).collect();
                let mut inf = info("abelian_planted_current", &[], true);
                inf.current = Some(KnownCurrent {
                    metric: *metric,
                    eval: Arc::new(move |_x: &[f64]| currents.clone()),
                });
                Ok(Connection::new(AbelianPolynomial {
                    dim: d,
                    t,
                    linear,
                    quadratic: s,
                })
                .with_info(inf))
            }
            CatalogSpec::BpstInstanton { rho, center } => {
                if center.len() != 4 {
                    return Err(Error::DimensionMismatch {
                        expected: 4,
                        got: center.len(),
                    });
                }
                if *rho <= 0.0 {
                    return Err(Error::InvalidParameter("rho must be positive".into()));
                }
                Ok(Connection::new(Instanton {
                    rho2: rho * rho,
                    center: [center[0], center[1], center[2], center[3]],
                    t: su_basis(2),
                    eta: Instanton::eta_table(),
                })
                .with_info(info("bpst_instanton", &[MetricKind::Euclidean], true)))
            }
            CatalogSpec::NullPlaneWave { k, a, fiber } => {
                check_dims(k.len(), *fiber)?;
                if a.len() != k.len() {
                    return Err(Error::DimensionMismatch {
                        expected: k.len(),
                        got: a.len(),
                    });
                }
                let eta = Metric::minkowski(k.len());
                let scale = 1.0 + eta.dot(k, k).abs().max(k.iter().map(|v| v.abs()).fold(0.0, f64::max));
                if eta.square(k).abs() > 1e-12 * scale || eta.dot(k, a).abs() > 1e-12 * scale {
                    return Err(Error::InvalidParameter(
                        "null_plane_wave needs k·k = 0 and k·a = 0 under η".into(),
                    ));
                }
                Ok(Connection::new(PlaneWave {
                    k: k.clone(),
                    a: a.clone(),
                    t: su_basis(*fiber).swap_remove(0),
                })
                .with_info(info("null_plane_wave", &[MetricKind::Minkowski], true)))
            }
            CatalogSpec::RandomPolynomial { dim, fiber, seed, scale } => {
                check_dims(*dim, *fiber)?;
                Ok(Connection::new(RandomPolynomial::new(*dim, *fiber, *seed, *scale))
                    .with_info(info("random_polynomial", &[], true)))
            }
        }
    }
}

/// Builds the catalog connection `name` from a parameter table.
pub fn catalog(name: &str, params: &serde_json::Value) -> Result<Connection> {
    CatalogSpec::from_name(name, params)?.build()
}

fn info(name: &str, vacuum: &[MetricKind], traceless: bool) -> ConnectionInfo {
    ConnectionInfo {
        name: name.into(),
        vacuum_metrics: vacuum.to_vec(),
        current: None,
        traceless,
    }
}

fn check_dims(dim: usize, fiber: usize) -> Result<()> {
    if dim == 0 || fiber < 2 {
        return Err(Error::InvalidParameter(format!(
            "need dim ≥ 1 and fiber ≥ 2 (got dim = {dim}, fiber = {fiber})"
        )));
    }
    Ok(())
}

pub(crate) fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

struct ZeroPotential {
    dim: usize,
    fiber: usize,
}

impl GaugePotential for ZeroPotential {
    fn dim(&self) -> usize {
        self.dim
    }
    fn fiber(&self) -> usize {
        self.fiber
    }
    fn potential(&self, _x: &[f64]) -> Vec<CMat> {
        vec![CMat::zeros(self.fiber); self.dim]
    }
    fn partials(&self, _x: &[f64]) -> Option<Vec<CMat>> {
        Some(vec![CMat::zeros(self.fiber); self.dim * self.dim])
    }
    fn second_partials(&self, _x: &[f64]) -> Option<Vec<CMat>> {
        Some(vec![CMat::zeros(self.fiber); self.dim * self.dim * self.dim])
    }
}

/// `A_p = α(cos(βx^q) T₁ + sin(βx^q) T₃)`, `A_q = β T₂`, others zero.
struct PureGauge {
    dim: usize,
    alpha: f64,
    beta: f64,
    p: usize,
    q: usize,
    t: Vec<CMat>,
}

impl PureGauge {
    fn rotated(&self, c: f64, s: f64) -> CMat {
        let mut m = self.t[0].scale(c);
        m.axpy(s, &self.t[2]);
        m
    }
}

impl GaugePotential for PureGauge {
    fn dim(&self) -> usize {
        self.dim
    }
    fn fiber(&self) -> usize {
        2
    }
    fn potential(&self, x: &[f64]) -> Vec<CMat> {
        let th = self.beta * x[self.q];
        let mut out = vec![CMat::zeros(2); self.dim];
        out[self.p] = self.rotated(th.cos(), th.sin()).scale(self.alpha);
        out[self.q] = self.t[1].scale(self.beta);
        out
    }
    fn partials(&self, x: &[f64]) -> Option<Vec<CMat>> {
        let d = self.dim;
        let th = self.beta * x[self.q];
        let mut out = vec![CMat::zeros(2); d * d];
        out[self.q * d + self.p] = self.rotated(-th.sin(), th.cos()).scale(self.alpha * self.beta);
        Some(out)
    }
    fn second_partials(&self, x: &[f64]) -> Option<Vec<CMat>> {
        let d = self.dim;
        let th = self.beta * x[self.q];
        let mut out = vec![CMat::zeros(2); d * d * d];
        out[(self.q * d + self.q) * d + self.p] =
            self.rotated(-th.cos(), -th.sin()).scale(self.alpha * self.beta * self.beta);
        Some(out)
    }
}

/// `A_ν(x) = (Σ_μ b_{μν}x^μ + ½Σ_{μκ} s_{ν,μκ}x^μx^κ) T`.
struct AbelianPolynomial {
    dim: usize,
    t: CMat,
    /// `linear[μ][ν] = b_{μν}`
    linear: Vec<Vec<f64>>,
    /// `quadratic[ν][μ][κ] = s_{ν,μκ}`, symmetric in μ, κ
    quadratic: Vec<Vec<Vec<f64>>>,
}

impl GaugePotential for AbelianPolynomial {
    fn dim(&self) -> usize {
        self.dim
    }
    fn fiber(&self) -> usize {
        self.t.dim()
    }
    fn potential(&self, x: &[f64]) -> Vec<CMat> {
        let d = self.dim;
        (0..d)
            .map(|nu| {
                let mut a = 0.0;
                for mu in 0..d {
                    a += self.linear[mu][nu] * x[mu];
                    for ka in 0..d {
                        a += 0.5 * self.quadratic[nu][mu][ka] * x[mu] * x[ka];
                    }
                }
                self.t.scale(a)
            })
            .collect()
    }
    fn partials(&self, x: &[f64]) -> Option<Vec<CMat>> {
        let d = self.dim;
        let mut out = Vec::with_capacity(d * d);
        for l in 0..d {
            for nu in 0..d {
                let mut v = self.linear[l][nu];
                for ka in 0..d {
                    v += self.quadratic[nu][l][ka] * x[ka];
                }
                out.push(self.t.scale(v));
            }
        }
        Some(out)
    }
    fn second_partials(&self, _x: &[f64]) -> Option<Vec<CMat>> {
        let d = self.dim;
        let mut out = Vec::with_capacity(d * d * d);
        for l in 0..d {
            for ka in 0..d {
                for nu in 0..d {
                    out.push(self.t.scale(self.quadratic[nu][l][ka]));
                }
            }
        }
        Some(out)
    }
}

/// 't Hooft symbol η_{aμν} with μ, ν ∈ 0..4 where index 3 plays the role of
/// the fourth (Euclidean time) axis.
fn thooft_eta(a: usize, mu: usize, nu: usize) -> f64 {
    match (mu, nu) {
        (3, 3) => 0.0,
        (m, 3) => (m == a) as i32 as f64,
        (3, n) => -((n == a) as i32 as f64),
        (m, n) => levi_civita(a, m, n),
    }
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    if i == j || j == k || i == k {
        return 0.0;
    }
    // parity of the permutation (i, j, k) of (0, 1, 2)
    if (i + 1) % 3 == j {
        1.0
    } else {
        -1.0
    }
}

/// `A_μ = Σ_a 2η_{aμν}y^ν/(y² + ρ²) T_a` with `y = x − c`.
struct Instanton {
    rho2: f64,
    center: [f64; 4],
    t: Vec<CMat>,
    eta: [[[f64; 4]; 4]; 3],
}

impl Instanton {
    fn eta_table() -> [[[f64; 4]; 4]; 3] {
        let mut e = [[[0.0; 4]; 4]; 3];
        for (a, plane) in e.iter_mut().enumerate() {
            for (mu, row) in plane.iter_mut().enumerate() {
                for (nu, v) in row.iter_mut().enumerate() {
                    *v = thooft_eta(a, mu, nu);
                }
            }
        }
        e
    }

    fn shifted(&self, x: &[f64]) -> ([f64; 4], f64) {
        let y = [
            x[0] - self.center[0],
            x[1] - self.center[1],
            x[2] - self.center[2],
            x[3] - self.center[3],
        ];
        let q = 1.0 / (y.iter().map(|v| v * v).sum::<f64>() + self.rho2);
        (y, q)
    }

    fn assemble(&self, coeff: impl Fn(usize) -> f64) -> CMat {
        let mut m = CMat::zeros(2);
        for a in 0..3 {
            let c = coeff(a);
            if c != 0.0 {
                m.axpy(c, &self.t[a]);
            }
        }
        m
    }
}

impl GaugePotential for Instanton {
    fn dim(&self) -> usize {
        4
    }
    fn fiber(&self) -> usize {
        2
    }
    fn potential(&self, x: &[f64]) -> Vec<CMat> {
        let e = &self.eta;
        let (y, q) = self.shifted(x);
        (0..4)
            .map(|mu| self.assemble(|a| 2.0 * q * (0..4).map(|nu| e[a][mu][nu] * y[nu]).sum::<f64>()))
            .collect()
    }
    fn partials(&self, x: &[f64]) -> Option<Vec<CMat>> {
        let e = &self.eta;
        let (y, q) = self.shifted(x);
        let mut out = Vec::with_capacity(16);
        for l in 0..4 {
            for mu in 0..4 {
                out.push(self.assemble(|a| {
                    let ey: f64 = (0..4).map(|nu| e[a][mu][nu] * y[nu]).sum();
                    2.0 * e[a][mu][l] * q - 4.0 * ey * y[l] * q * q
                }));
            }
        }
        Some(out)
    }
    fn second_partials(&self, x: &[f64]) -> Option<Vec<CMat>> {
        let e = &self.eta;
        let (y, q) = self.shifted(x);
        let mut out = Vec::with_capacity(64);
        for l in 0..4 {
            for k in 0..4 {
                for mu in 0..4 {
                    out.push(self.assemble(|a| {
                        let ey: f64 = (0..4).map(|nu| e[a][mu][nu] * y[nu]).sum();
                        let q2 = q * q;
                        let delta = if l == k { 1.0 } else { 0.0 };
                        -4.0 * q2 * (e[a][mu][l] * y[k] + e[a][mu][k] * y[l] + ey * delta)
                            + 16.0 * ey * y[l] * y[k] * q2 * q
                    }));
                }
            }
        }
        Some(out)
    }
}

/// `A_μ = a_μ sin(k·x) T` with `k·x = Σ_μ k_μ x^μ`.
struct PlaneWave {
    k: Vec<f64>,
    a: Vec<f64>,
    t: CMat,
}

impl PlaneWave {
    fn phase(&self, x: &[f64]) -> f64 {
        self.k.iter().zip(x).map(|(k, x)| k * x).sum()
    }
}

impl GaugePotential for PlaneWave {
    fn dim(&self) -> usize {
        self.k.len()
    }
    fn fiber(&self) -> usize {
        self.t.dim()
    }
    fn potential(&self, x: &[f64]) -> Vec<CMat> {
        let s = self.phase(x).sin();
        self.a.iter().map(|a| self.t.scale(a * s)).collect()
    }
    fn partials(&self, x: &[f64]) -> Option<Vec<CMat>> {
        let c = self.phase(x).cos();
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d);
        for l in 0..d {
            for mu in 0..d {
                out.push(self.t.scale(self.a[mu] * self.k[l] * c));
            }
        }
        Some(out)
    }
    fn second_partials(&self, x: &[f64]) -> Option<Vec<CMat>> {
        let s = self.phase(x).sin();
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d * d);
        for l in 0..d {
            for k in 0..d {
                for mu in 0..d {
                    out.push(self.t.scale(-self.a[mu] * self.k[l] * self.k[k] * s));
                }
            }
        }
        Some(out)
    }
}

/// `A_μ(x) = Σ_a (c_{μa} + Σ_λ c_{μaλ}x^λ + ½Σ_{λκ} c_{μaλκ}x^λx^κ) T_a`.
struct RandomPolynomial {
    dim: usize,
    basis: Vec<CMat>,
    c0: Vec<Vec<f64>>,
    c1: Vec<Vec<Vec<f64>>>,
    c2: Vec<Vec<Vec<Vec<f64>>>>,
}

impl RandomPolynomial {
    fn new(dim: usize, fiber: usize, seed: u64, scale: f64) -> Self {
        let basis = su_basis(fiber);
        let nb = basis.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || scale * normal(&mut rng);
        let c0 = (0..dim).map(|_| (0..nb).map(|_| draw()).collect()).collect();
        let c1 = (0..dim)
            .map(|_| (0..nb).map(|_| (0..dim).map(|_| draw()).collect()).collect())
            .collect();
        let mut c2 = vec![vec![vec![vec![0.0; dim]; dim]; nb]; dim];
        for per_mu in c2.iter_mut() {
            for per_a in per_mu.iter_mut() {
                for l in 0..dim {
                    for k in l..dim {
                        let v = 0.5 * draw();
                        per_a[l][k] = v;
                        per_a[k][l] = v;
                    }
                }
            }
        }
        Self {
            dim,
            basis,
            c0,
            c1,
            c2,
        }
    }

    fn combine(&self, coeff: impl Fn(usize) -> f64) -> CMat {
        let mut m = CMat::zeros(self.basis[0].dim());
        for (a, t) in self.basis.iter().enumerate() {
            m.axpy(coeff(a), t);
        }
        m
    }
}

impl GaugePotential for RandomPolynomial {
    fn dim(&self) -> usize {
        self.dim
    }
    fn fiber(&self) -> usize {
        self.basis[0].dim()
    }
    fn potential(&self, x: &[f64]) -> Vec<CMat> {
        let d = self.dim;
        (0..d)
            .map(|mu| {
                self.combine(|a| {
                    let (c1, c2) = (&self.c1[mu][a], &self.c2[mu][a]);
                    let mut v = self.c0[mu][a];
                    for (l, (xl, row)) in x.iter().zip(c2).enumerate() {
                        let quad: f64 = row.iter().zip(x).map(|(c, xk)| c * xk).sum();
                        v += xl * (c1[l] + 0.5 * quad);
                    }
                    v
                })
            })
            .collect()
    }
    fn partials(&self, x: &[f64]) -> Option<Vec<CMat>> {
        let d = self.dim;
        let mut out = Vec::with_capacity(d * d);
        for l in 0..d {
            for mu in 0..d {
                out.push(self.combine(|a| {
                    self.c1[mu][a][l] + (0..d).map(|k| self.c2[mu][a][l][k] * x[k]).sum::<f64>()
                }));
            }
        }
        Some(out)
    }
    fn second_partials(&self, _x: &[f64]) -> Option<Vec<CMat>> {
        let d = self.dim;
        let mut out = Vec::with_capacity(d * d * d);
        for l in 0..d {
            for k in 0..d {
                for mu in 0..d {
                    out.push(self.combine(|a| self.c2[mu][a][l][k]));
                }
            }
        }
        Some(out)
    }
}
