//! Connections on the trivial bundle over R^d, their curvature and covariant
//! derivatives, matter fields and a catalog of analytic test connections.

mod catalog;
mod matter;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::lie::{check_tag, GroupTag};
use crate::algebra::CMat;
use crate::error::{Error, Result};
use crate::numerics::fd_gradient;

pub use catalog::{catalog, CatalogSpec};
pub use matter::{
    covariant_hessian, dirac_catalog, higgs_catalog, DiracField, DiracProfile, DiracSpec, HiggsField,
    HiggsProfile, HiggsSpec,
};

/// Base step of the centered finite-difference policy, `h = 1e−4·(1 + |x|)`.
pub const FD_STEP: f64 = 1e-4;
/// Step used when differentiating a quantity that is itself a finite difference.
pub const NESTED_FD_STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Euclidean,
    Minkowski,
}

/// Diagonal metric δ or η = diag(1, −1, …, −1) on R^d.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metric {
    pub kind: MetricKind,
    pub dim: usize,
}

impl Metric {
    pub fn new(kind: MetricKind, dim: usize) -> Self {
        Self { kind, dim }
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::new(MetricKind::Euclidean, dim)
    }

    pub fn minkowski(dim: usize) -> Self {
        Self::new(MetricKind::Minkowski, dim)
    }

    /// `g_{μμ}`; equal to `g^{μμ}` and to σ_g² for μ ≥ 1.
    #[inline]
    pub fn diag(&self, mu: usize) -> f64 {
        match self.kind {
            MetricKind::Euclidean => 1.0,
            MetricKind::Minkowski if mu == 0 => 1.0,
            MetricKind::Minkowski => -1.0,
        }
    }

    /// `g^{μν}k_μk_ν` for a covector `k`.
    pub fn square(&self, k: &[f64]) -> f64 {
        k.iter().enumerate().map(|(mu, v)| self.diag(mu) * v * v).sum()
    }

    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).enumerate().map(|(mu, (x, y))| self.diag(mu) * x * y).sum()
    }
}

/// Source of the components `A_μ(x)` of a gauge potential, with optional
/// analytic first and second partials.
///
/// Index layout: `partials[λ·d + μ] = ∂_λA_μ`,
/// `second_partials[(λ·d + κ)·d + μ] = ∂_λ∂_κA_μ`.
pub trait GaugePotential: Send + Sync {
    fn dim(&self) -> usize;
    fn fiber(&self) -> usize;
    fn potential(&self, x: &[f64]) -> Vec<CMat>;
    fn partials(&self, _x: &[f64]) -> Option<Vec<CMat>> {
        None
    }
    fn second_partials(&self, _x: &[f64]) -> Option<Vec<CMat>> {
        None
    }
}

pub type CurrentFn = Arc<dyn Fn(&[f64]) -> Vec<CMat> + Send + Sync>;

/// A current `j_ν(x)` for which the connection solves the Yang–Mills
/// equations under `metric`.
#[derive(Clone)]
pub struct KnownCurrent {
    pub metric: MetricKind,
    pub eval: CurrentFn,
}

#[derive(Clone, Default)]
pub struct ConnectionInfo {
    pub name: String,
    /// Metrics under which `g^{λμ}∇_λF_{μν} = 0` holds analytically.
    pub vacuum_metrics: Vec<MetricKind>,
    pub current: Option<KnownCurrent>,
    /// Whether the values lie in su(N) (false for u(1) embeddings).
    pub traceless: bool,
}

/// Immutable connection: a shared potential evaluator plus the
/// finite-difference policy used when analytic partials are missing.
#[derive(Clone)]
pub struct Connection {
    field: Arc<dyn GaugePotential>,
    info: ConnectionInfo,
    fd_step: f64,
}

impl fmt::Debug for Connection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Connection")
            .field("name", &self.info.name)
            .field("dim", &self.dim())
            .field("fiber", &self.fiber())
            .finish()
    }
}

impl Connection {
    pub fn new(field: impl GaugePotential + 'static) -> Self {
        Self::from_arc(Arc::new(field))
    }

    pub fn from_arc(field: Arc<dyn GaugePotential>) -> Self {
        Self {
            field,
            info: ConnectionInfo {
                name: "custom".into(),
                traceless: true,
                ..Default::default()
            },
            fd_step: FD_STEP,
        }
    }

    pub fn with_info(mut self, info: ConnectionInfo) -> Self {
        self.info = info;
        self
    }

    pub fn with_fd_step(mut self, step: f64) -> Self {
        self.fd_step = step;
        self
    }

    /// Same potential, but partials always come from finite differences.
    pub fn finite_difference_only(&self) -> Connection {
        struct Bare(Arc<dyn GaugePotential>);
        impl GaugePotential for Bare {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn fiber(&self) -> usize {
                self.0.fiber()
            }
            fn potential(&self, x: &[f64]) -> Vec<CMat> {
                self.0.potential(x)
            }
        }
        Connection {
            field: Arc::new(Bare(self.field.clone())),
            info: self.info.clone(),
            fd_step: self.fd_step,
        }
    }

    pub fn info(&self) -> &ConnectionInfo {
        &self.info
    }

    pub fn name(&self) -> &str {
        &self.info.name
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn fiber(&self) -> usize {
        self.field.fiber()
    }

    pub fn is_vacuum(&self, metric: MetricKind) -> bool {
        self.info.vacuum_metrics.contains(&metric)
    }

    pub fn has_analytic_partials(&self, x: &[f64]) -> bool {
        self.field.partials(x).is_some()
    }

    pub fn potential(&self, x: &[f64]) -> Vec<CMat> {
        self.field.potential(x)
    }

    /// Checks that every `A_μ(x)` carries the declared algebra tag.
    pub fn check_at(&self, x: &[f64], tolerance: f64) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let tag = if self.info.traceless { GroupTag::Su } else { GroupTag::U };
        for a in self.potential(x) {
            if !a.is_finite() {
                return Err(Error::InvalidParameter("non-finite potential value".into()));
            }
            check_tag(&a, tag, tolerance * (1.0 + a.max_norm()))?;
        }
        Ok(())
    }

    /// `∂_λA_μ` at `[λ·d + μ]`, analytic when available.
    pub fn partials(&self, x: &[f64]) -> Vec<CMat> {
        self.field.partials(x).unwrap_or_else(|| self.fd_partials(x, self.fd_step))
    }

    /// Finite-difference partials regardless of analytic availability.
    pub fn fd_partials(&self, x: &[f64], step: f64) -> Vec<CMat> {
        let g = fd_gradient(|y| self.field.potential(y), x, step);
        g.into_iter().flatten().collect()
    }

    /// `∂_λ∂_κA_μ` at `[(λ·d + κ)·d + μ]`.
    pub fn second_partials(&self, x: &[f64]) -> Vec<CMat> {
        if let Some(h) = self.field.second_partials(x) {
            return h;
        }
        let step = if self.field.partials(x).is_some() {
            self.fd_step
        } else {
            NESTED_FD_STEP
        };
        let g = fd_gradient(|y| self.partials(y), x, step);
        g.into_iter().flatten().collect()
    }

    /// Potential, curvature and covariant derivative of the curvature at `x`.
    pub fn jet(&self, x: &[f64]) -> CurvatureJet {
        let d = self.dim();
        let a = self.potential(x);
        let da = self.partials(x);
        let dda = self.second_partials(x);
        let f = field_strength(d, &a, &da);
        let mut nabla_f = vec![CMat::zeros(self.fiber()); d * d * d];
        for l in 0..d {
            for mu in 0..d {
                for nu in (mu + 1)..d {
                    let mut v = &dda[(l * d + mu) * d + nu] - &dda[(l * d + nu) * d + mu];
                    v += &da[l * d + mu].commutator(&a[nu]);
                    v += &a[mu].commutator(&da[l * d + nu]);
                    v += &a[l].commutator(&f[mu * d + nu]);
                    nabla_f[(l * d + nu) * d + mu] = -&v;
                    nabla_f[(l * d + mu) * d + nu] = v;
                }
            }
        }
        CurvatureJet {
            dim: d,
            a,
            f,
            nabla_f,
        }
    }
}

fn field_strength(d: usize, a: &[CMat], da: &[CMat]) -> Vec<CMat> {
    let n = a[0].dim();
    let mut f = vec![CMat::zeros(n); d * d];
    for mu in 0..d {
        for nu in (mu + 1)..d {
            let mut v = &da[mu * d + nu] - &da[nu * d + mu];
            v += &a[mu].commutator(&a[nu]);
            f[nu * d + mu] = -&v;
            f[mu * d + nu] = v;
        }
    }
    f
}

/// Curvature data at one point: `A_μ`, `F_{μν}` at `[μ·d + ν]` and
/// `∇_λF_{μν}` at `[(λ·d + μ)·d + ν]`.
#[derive(Clone, Debug)]
pub struct CurvatureJet {
    pub dim: usize,
    pub a: Vec<CMat>,
    pub f: Vec<CMat>,
    pub nabla_f: Vec<CMat>,
}

impl CurvatureJet {
    #[inline]
    pub fn f(&self, mu: usize, nu: usize) -> &CMat {
        &self.f[mu * self.dim + nu]
    }

    #[inline]
    pub fn nabla_f(&self, l: usize, mu: usize, nu: usize) -> &CMat {
        &self.nabla_f[(l * self.dim + mu) * self.dim + nu]
    }

    /// `g^{λμ}∇_λF_{μν}`.
    pub fn divergence(&self, metric: &Metric, nu: usize) -> CMat {
        let mut out = CMat::zeros(self.a[0].dim());
        for l in 0..self.dim {
            out.axpy(metric.diag(l), self.nabla_f(l, l, nu));
        }
        out
    }
}

/// `F_{μν}(x)` at `[μ·d + ν]`; antisymmetric by construction.
pub fn curvature(conn: &Connection, x: &[f64]) -> Vec<CMat> {
    field_strength(conn.dim(), &conn.potential(x), &conn.partials(x))
}

/// `∇_μφ = ∂_μφ + [A_μ, φ]` for a Higgs-type field.
pub fn covariant_derivative(conn: &Connection, phi: &HiggsField, x: &[f64], mu: usize) -> Result<CMat> {
    let d = conn.dim();
    if mu >= d {
        return Err(Error::IndexOutOfRange { index: mu, dim: d });
    }
    let a = conn.potential(x);
    let dphi = phi.partials(x);
    Ok(&dphi[mu] + &a[mu].commutator(&phi.value(x)))
}

/// `g^{λμ}∇_λF_{μν}(x) − j_ν(x)`.
pub fn ym_residual(conn: &Connection, metric: &Metric, x: &[f64], nu: usize, j: Option<&CMat>) -> Result<CMat> {
    let d = conn.dim();
    if metric.dim != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: metric.dim,
        });
    }
    if nu >= d {
        return Err(Error::IndexOutOfRange { index: nu, dim: d });
    }
    let mut r = conn.jet(x).divergence(metric, nu);
    if let Some(j) = j {
        r -= j;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Poly {
        seed: f64,
    }

    impl GaugePotential for Poly {
        fn dim(&self) -> usize {
            3
        }
        fn fiber(&self) -> usize {
            2
        }
        fn potential(&self, x: &[f64]) -> Vec<CMat> {
            let t = crate::algebra::su_basis(2);
            (0..3)
                .map(|mu| {
                    let mut m = CMat::zeros(2);
                    for (a, ta) in t.iter().enumerate() {
                        let c = (self.seed + (mu * 3 + a) as f64).sin();
                        m.axpy(c * x[mu] * x[(mu + a) % 3] + 0.3 * c * x[a], ta);
                    }
                    m
                })
                .collect()
        }
    }

    #[test]
    fn metric_signs() {
        let eta = Metric::minkowski(4);
        assert_eq!(eta.diag(0), 1.0);
        assert_eq!(eta.diag(3), -1.0);
        assert_eq!(eta.square(&[1.0, 1.0, 0.0, 0.0]), 0.0);
        // g^{μν} g_{νλ} = δ
        for mu in 0..4 {
            assert_eq!(eta.diag(mu) * eta.diag(mu), 1.0);
        }
    }

    #[test]
    fn finite_difference_curvature_matches_direct_formula() {
        let conn = Connection::new(Poly { seed: 0.4 });
        let x = [0.3, -0.7, 0.5];
        let f = curvature(&conn, &x);
        // independent oracle: plain central differences with a fixed step
        let h = 1e-5;
        let a = conn.potential(&x);
        for mu in 0..3 {
            for nu in 0..3 {
                let d = |lam: usize, comp: usize| {
                    let mut xp = x;
                    let mut xm = x;
                    xp[lam] += h;
                    xm[lam] -= h;
                    (&conn.potential(&xp)[comp] - &conn.potential(&xm)[comp]).scale(0.5 / h)
                };
                let oracle = &(&d(mu, nu) - &d(nu, mu)) + &a[mu].commutator(&a[nu]);
                assert!((&f[mu * 3 + nu] - &oracle).max_norm() < 1e-8);
                assert!((&f[mu * 3 + nu] + &f[nu * 3 + mu]).max_norm() == 0.0);
            }
        }
    }

    #[test]
    fn ym_residual_rejects_bad_index() {
        let conn = Connection::new(Poly { seed: 0.0 });
        assert!(ym_residual(&conn, &Metric::euclidean(3), &[0.0; 3], 3, None).is_err());
        assert!(ym_residual(&conn, &Metric::euclidean(4), &[0.0; 3], 0, None).is_err());
    }
}
