//! Lévy traces of bilinear forms on variations and the Lévy Laplacian,
//! d'Alembertian and divergence of transport functionals.
//!
//! Two definitions of the trace are implemented: the Cesàro mean of the
//! diagonal entries `Q(p_μe_k, p_μe_k)` over an orthonormal basis, and the
//! integral of the Lévy kernel `∫g^{μν}K^L_{μν}(t)dt`. For transport
//! functionals the Cesàro mean is built from second functional differences
//! and never touches the kernels, so the two routes are independent.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::CMat;
use crate::error::{Error, Result};
use crate::geometry::{Connection, Metric, MetricKind};
use crate::numerics::{fit_power_tail, loglog_slope, simpson_weights, try_central_derivative, LinearValue};
use crate::paths::{f_basis, needle, sin_basis, Curve, Variation};
use crate::transport::{functional_step, holonomy, KernelTriple, PathData, SECOND_FD_STEP};

/// Orthonormal basis generating the Cesàro trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// `e_n = √2 sin(nπt)`, orthonormal in L².
    Sin,
    /// `f_1 = t`, `f_n = √2 sin(π(n−1)t)/(π(n−1))`, orthonormal in W^{1,2}_0.
    F,
}

impl Basis {
    pub fn element(self, n: usize, mu: usize, d: usize, m: usize) -> Result<Variation> {
        match self {
            Basis::Sin => sin_basis(n, mu, d, m),
            Basis::F => f_basis(n, mu, d, m),
        }
    }

    /// Node values and velocities of the scalar profile of element `n`.
    fn profile(self, n: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
        let ts = (0..=m).map(|i| i as f64 / m as f64);
        match (self, n) {
            (Basis::Sin, _) => {
                let w = n as f64 * PI;
                let mut f: Vec<f64> = ts.clone().map(|t| SQRT_2 * (w * t).sin()).collect();
                f[0] = 0.0;
                f[m] = 0.0;
                (f, ts.map(|t| SQRT_2 * w * (w * t).cos()).collect())
            }
            (Basis::F, 1) => (ts.collect(), vec![1.0; m + 1]),
            (Basis::F, _) => {
                let w = (n - 1) as f64 * PI;
                let mut f: Vec<f64> = ts.clone().map(|t| SQRT_2 * (w * t).sin() / w).collect();
                f[0] = 0.0;
                f[m] = 0.0;
                (f, ts.map(|t| SQRT_2 * (w * t).cos()).collect())
            }
        }
    }
}

/// Weight operator `R` applied to basis elements before the diagonal is
/// formed. Only index bookkeeping: `N f_n = (n−1) f_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightOperator {
    Identity,
    /// `N f_n = (n−1) f_n`.
    Number,
    /// `c·N`.
    ScaledNumber(f64),
}

impl WeightOperator {
    /// Coefficient `c_n` with `R b_n = c_n b_n`.
    pub fn coefficient(self, basis: Basis, n: usize) -> Result<f64> {
        match (self, basis) {
            (WeightOperator::Identity, _) => Ok(1.0),
            (WeightOperator::Number, Basis::F) => Ok((n - 1) as f64),
            (WeightOperator::ScaledNumber(c), Basis::F) => Ok(c * (n - 1) as f64),
            (_, Basis::Sin) => Err(Error::Config(
                "the number operator is defined on the f basis only".into(),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    /// Report the last partial mean.
    None,
    /// Fit `m_n = L + a·n^{−p}` on the tail half of the series.
    CesaroTailFit,
}

fn default_fit_residual() -> f64 {
    1e-3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    pub basis: Basis,
    pub metric: MetricKind,
    pub n_max: usize,
    #[serde(default = "default_weight")]
    pub weight: WeightOperator,
    #[serde(default = "default_extrapolation")]
    pub extrapolation: Extrapolation,
    /// Largest acceptable relative RMS residual of the tail fit.
    #[serde(default = "default_fit_residual")]
    pub max_fit_residual: f64,
    /// Minimum grid nodes per period of the highest basis element when the
    /// series is built from functional differences of transport.
    #[serde(default = "default_nodes_per_mode")]
    pub nodes_per_mode: usize,
}

fn default_nodes_per_mode() -> usize {
    16
}

fn default_weight() -> WeightOperator {
    WeightOperator::Identity
}

fn default_extrapolation() -> Extrapolation {
    Extrapolation::CesaroTailFit
}

impl TraceConfig {
    pub fn new(basis: Basis, metric: MetricKind, n_max: usize) -> Self {
        Self {
            basis,
            metric,
            n_max,
            weight: WeightOperator::Identity,
            extrapolation: Extrapolation::CesaroTailFit,
            max_fit_residual: default_fit_residual(),
            nodes_per_mode: default_nodes_per_mode(),
        }
    }

    /// Grid used for difference-based series on a curve with `m` cells:
    /// at least `nodes_per_mode` nodes per period of `b_{n_max}`.
    pub fn resolved_cells(&self, m: usize) -> usize {
        let wanted = (self.n_max * self.nodes_per_mode / 2).next_power_of_two();
        m.max(wanted)
    }

    pub fn with_weight(mut self, weight: WeightOperator) -> Self {
        self.weight = weight;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 8 {
            return Err(Error::Config(format!("n_max must be at least 8, got {}", self.n_max)));
        }
        if !(self.max_fit_residual > 0.0) {
            return Err(Error::Config("max_fit_residual must be positive".into()));
        }
        self.weight.coefficient(self.basis, 1)?;
        Ok(())
    }
}

/// Partial Cesàro means `m_1..m_{n_max}` with the extrapolated limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CesaroSeries {
    pub means: Vec<CMat>,
    pub limit: CMat,
    pub exponent: Option<f64>,
    pub fit_residual: f64,
    pub converged: bool,
}

impl CesaroSeries {
    /// `m_n`, `n ≥ 1`.
    pub fn mean(&self, n: usize) -> &CMat {
        &self.means[n - 1]
    }

    pub fn n_max(&self) -> usize {
        self.means.len()
    }

    /// `‖m_n − reference‖_F` for every n.
    pub fn errors(&self, reference: &CMat) -> Vec<f64> {
        self.means.iter().map(|m| (m - reference).frobenius()).collect()
    }

    /// Observed decay exponent of `‖m_n − reference‖` over `[lo, hi]`.
    pub fn decay_exponent(&self, reference: &CMat, lo: usize, hi: usize) -> f64 {
        let errors = self.errors(reference);
        let ns: Vec<f64> = (lo..=hi).map(|n| n as f64).collect();
        -loglog_slope(&ns, &errors[lo - 1..hi])
    }

    /// CSV with columns `n, mean_norm, limit_norm` and, when a reference is
    /// given, `error`.
    pub fn write_csv<W: Write>(&self, w: W, reference: Option<&CMat>) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["n", "mean_norm", "limit_norm"];
        if reference.is_some() {
            header.push("error");
        }
        wr.write_record(&header)?;
        let ln = self.limit.frobenius();
        for (i, m) in self.means.iter().enumerate() {
            let mut row = vec![(i + 1).to_string(), format!("{:.12e}", m.frobenius()), format!("{ln:.12e}")];
            if let Some(r) = reference {
                row.push(format!("{:.12e}", (m - r).frobenius()));
            }
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `Q(p_μ b_n, p_μ b_n)` for unweighted basis elements.
pub type DiagonalFn<'a> = dyn Fn(usize, usize) -> Result<CMat> + Sync + 'a;

/// Cesàro trace `m_n = (1/n)Σ_{k≤n}Σ_μ g^{μμ}Q(p_μRb_k, p_μRb_k)`.
///
/// Terms are evaluated in parallel and accumulated in index order.
pub fn levy_trace_cesaro(diagonal: &DiagonalFn<'_>, dim: usize, fiber: usize, cfg: &TraceConfig) -> Result<CesaroSeries> {
    cfg.validate()?;
    let metric = Metric::new(cfg.metric, dim);
    let terms: Vec<Result<CMat>> = (1..=cfg.n_max)
        .into_par_iter()
        .map(|k| {
            let c = cfg.weight.coefficient(cfg.basis, k)?;
            let mut acc = CMat::zeros(fiber);
            if c == 0.0 {
                return Ok(acc);
            }
            for mu in 0..dim {
                acc.axpy(c * c * metric.diag(mu), &diagonal(mu, k)?);
            }
            Ok(acc)
        })
        .collect();
    let mut means = Vec::with_capacity(cfg.n_max);
    let mut sum = CMat::zeros(fiber);
    for (i, t) in terms.into_iter().enumerate() {
        sum += &t?;
        means.push(sum.scale(1.0 / (i + 1) as f64));
    }
    if means.iter().any(|m| !m.is_finite()) {
        return Err(Error::NonConvergence("non-finite Cesàro mean".into()));
    }
    Ok(extrapolate(means, cfg))
}

fn extrapolate(means: Vec<CMat>, cfg: &TraceConfig) -> CesaroSeries {
    let last = means.last().unwrap().clone();
    match cfg.extrapolation {
        Extrapolation::None => CesaroSeries {
            limit: last,
            means,
            exponent: None,
            fit_residual: 0.0,
            converged: true,
        },
        Extrapolation::CesaroTailFit => {
            let n = means.len();
            let lo = n / 2;
            let ns: Vec<f64> = (lo..=n).map(|k| k as f64).collect();
            let fiber = last.dim();
            let mut channels = Vec::with_capacity(2 * fiber * fiber);
            for e in 0..fiber * fiber {
                channels.push(means[lo - 1..].iter().map(|m| m.as_slice()[e].re).collect::<Vec<_>>());
                channels.push(means[lo - 1..].iter().map(|m| m.as_slice()[e].im).collect::<Vec<_>>());
            }
            let fit = fit_power_tail(&ns, &channels);
            let limit = CMat::from_fn(fiber, |r, c| {
                let e = r * fiber + c;
                crate::algebra::C64::new(fit.limit[2 * e], fit.limit[2 * e + 1])
            });
            if fit.residual <= cfg.max_fit_residual && !fit.pinned && limit.is_finite() {
                return CesaroSeries {
                    means,
                    limit,
                    exponent: fit.exponent,
                    fit_residual: fit.residual,
                    converged: true,
                };
            }
            // no power law, but a tail that has stalled within the fit
            // tolerance still has a limit: the last mean
            let tail = &means[lo - 1..];
            let scale = 1.0 + tail.iter().map(CMat::max_norm).fold(0.0, f64::max);
            let spread = tail.iter().map(|m| (m - &last).max_norm()).fold(0.0, f64::max);
            let stalled = spread <= cfg.max_fit_residual * scale;
            CesaroSeries {
                means,
                limit: if stalled { last } else { limit },
                exponent: if stalled { None } else { fit.exponent },
                fit_residual: if stalled { spread / scale } else { fit.residual },
                converged: stalled,
            }
        }
    }
}

/// Diagonal evaluator for a sampled kernel triple. The kernel formula is
/// applied to every basis element, including `f_1`.
pub fn kernel_diagonal(kernels: &KernelTriple, basis: Basis) -> impl Fn(usize, usize) -> Result<CMat> + Sync + '_ {
    move |mu, k| {
        let m = kernels.cells();
        let (f, fdot) = basis.profile(k, m);
        Ok(kernels.diagonal_profile(mu, &f, &fdot))
    }
}

/// `tr^g_L Q = ∫₀¹g^{μν}K^L_{μν}(t)dt` by composite Simpson.
pub fn levy_trace_integral(kernels: &KernelTriple, metric: &Metric) -> Result<CMat> {
    if metric.dim != kernels.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernels.dim(),
            got: metric.dim,
        });
    }
    let w = simpson_weights(kernels.cells())?;
    let mut acc = CMat::zeros(kernels.fiber());
    for (i, wi) in w.iter().enumerate() {
        for mu in 0..kernels.dim() {
            acc.axpy(wi * metric.diag(mu), &kernels.levy(i, mu, mu));
        }
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq)]
pub enum TraceMode {
    Integral,
    Cesaro(TraceConfig),
}

/// Second functional difference `∂²_uU_{1,0}(σ)` with one Richardson pass.
pub fn transport_second_difference(conn: &Connection, curve: &Curve, u: &Variation, step: f64) -> Result<CMat> {
    let u0 = holonomy(conn, curve)?;
    let a = central_second_difference(conn, curve, &u0, u, step)?;
    let b = central_second_difference(conn, curve, &u0, u, 0.5 * step)?;
    Ok(crate::numerics::richardson(&a, &b, 2))
}

/// `(U(σ + su) + U(σ − su) − 2U(σ))/s²` given `base = U(σ)`.
pub fn central_second_difference(conn: &Connection, curve: &Curve, base: &CMat, u: &Variation, s: f64) -> Result<CMat> {
    let p = holonomy(conn, &curve.displaced(&[(s, u)])?)?;
    let q = holonomy(conn, &curve.displaced(&[(-s, u)])?)?;
    let mut x = p + q;
    x.axpy(-2.0, base);
    Ok(x.scale(1.0 / (s * s)))
}

/// Cesàro series of the second derivative of transport, from functional
/// differences only. The curve is resampled onto [`TraceConfig::resolved_cells`]
/// so that the transport resolves every basis element.
pub fn levy_operator_cesaro_series(conn: &Connection, curve: &Curve, cfg: &TraceConfig) -> Result<CesaroSeries> {
    cfg.validate()?;
    let curve = &curve.resampled(cfg.resolved_cells(curve.cells()))?;
    let step = functional_step(SECOND_FD_STEP, curve);
    let (d, m) = (curve.dim(), curve.cells());
    let base = holonomy(conn, curve)?;
    let eval = |mu: usize, k: usize| -> Result<CMat> {
        let u = cfg.basis.element(k, mu, d, m)?;
        central_second_difference(conn, curve, &base, &u, step)
    };
    levy_trace_cesaro(&eval, d, conn.fiber(), cfg)
}

/// `D²_{tr^g_L}U_{1,0}(σ)`: the Lévy Laplacian for `g = δ`, the Lévy
/// d'Alembertian for `g = η`.
pub fn levy_operator_on_transport(data: &PathData, metric: &Metric, mode: &TraceMode) -> Result<CMat> {
    match mode {
        TraceMode::Integral => levy_trace_integral(&data.kernels(), metric),
        TraceMode::Cesaro(cfg) => {
            let s = levy_operator_cesaro_series(data.connection(), data.curve(), cfg)?;
            if !s.converged {
                return Err(Error::NonConvergence(format!(
                    "Cesàro tail fit residual {:.3e} exceeds {:.3e}",
                    s.fit_residual, cfg.max_fit_residual
                )));
            }
            Ok(s.limit)
        }
    }
}

/// Cesàro series of `∂_u(B^A(σ)u)` by central differences of the 1-form.
pub fn levy_divergence_cesaro_series(conn: &Connection, curve: &Curve, cfg: &TraceConfig) -> Result<CesaroSeries> {
    cfg.validate()?;
    let curve = &curve.resampled(cfg.resolved_cells(curve.cells()))?;
    let step = functional_step(SECOND_FD_STEP, curve);
    let (d, m) = (curve.dim(), curve.cells());
    let eval = |mu: usize, k: usize| -> Result<CMat> {
        let u = cfg.basis.element(k, mu, d, m)?;
        u.require_endpoint_free()?;
        try_central_derivative(
            |s| Ok(PathData::new(conn, &curve.displaced(&[(s, &u)])?)?.one_form_b(&u)?.into_entries()),
            step,
        )
    };
    levy_trace_cesaro(&eval, d, conn.fiber(), cfg)
}

/// `div^g_L B^A(σ) = −∫₀¹U_{0,t}g^{μν}∇_μF_{νλ}σ̇^λU_{t,0}dt`.
pub fn levy_divergence_b(data: &PathData, metric: &Metric, mode: &TraceMode) -> Result<CMat> {
    match mode {
        TraceMode::Integral => levy_trace_integral(&data.kernels().b_frame()?, metric),
        TraceMode::Cesaro(cfg) => {
            let s = levy_divergence_cesaro_series(data.connection(), data.curve(), cfg)?;
            if !s.converged {
                return Err(Error::NonConvergence(format!(
                    "Cesàro tail fit residual {:.3e} exceeds {:.3e}",
                    s.fit_residual, cfg.max_fit_residual
                )));
            }
            Ok(s.limit)
        }
    }
}

/// Needle widths `1/k` used by the endpoint derivation; widths that do not
/// divide the grid are dropped.
pub const NEEDLE_WIDTHS: [usize; 8] = [8, 16, 32, 64, 128, 256, 512, 1024];

/// Grid the endpoint derivation works on at least; curves are resampled.
pub const ENDPOINT_CELLS: usize = 4096;

/// Endpoint derivation with its extrapolation diagnostics.
#[derive(Clone, Debug)]
pub struct EndpointEstimate<T> {
    pub value: T,
    /// Directional derivatives along the needles, one per width.
    pub raw: Vec<T>,
    /// Difference between the last two Richardson levels.
    pub correction: f64,
}

/// Curve functional `σ ↦ Φ(σ)`.
pub type CurveFunctional<'a, T> = dyn Fn(&Curve) -> Result<T> + Sync + 'a;

/// `D_hΦ(σ)`: derivatives along needle ramps concentrating at `t = 1`,
/// extrapolated in `1/k` by a Richardson table. `step` is the base
/// functional-difference step, scaled by `1 + ‖σ‖_∞`. The curve is refined
/// to at least [`ENDPOINT_CELLS`] cells first.
pub fn endpoint_derivation<T: LinearValue + Send>(
    phi: &CurveFunctional<'_, T>,
    curve: &Curve,
    h: &[f64],
    step: f64,
) -> Result<EndpointEstimate<T>> {
    let fine = curve.resampled(curve.cells().max(ENDPOINT_CELLS))?;
    let widths: Vec<usize> = NEEDLE_WIDTHS.iter().copied().filter(|k| fine.cells() % k == 0).collect();
    if widths.len() < 3 {
        return Err(Error::InvalidGrid(format!(
            "endpoint derivation needs a grid divisible by 32, got {} cells",
            fine.cells()
        )));
    }
    needle_extrapolation(phi, &fine, h, step, &widths)
}

/// Needle derivatives at the given widths (doubling, ascending) extrapolated
/// to zero width.
pub fn needle_extrapolation<T: LinearValue + Send>(
    phi: &CurveFunctional<'_, T>,
    curve: &Curve,
    h: &[f64],
    step: f64,
    widths: &[usize],
) -> Result<EndpointEstimate<T>> {
    if h.len() != curve.dim() {
        return Err(Error::DimensionMismatch {
            expected: curve.dim(),
            got: h.len(),
        });
    }
    if widths.len() < 2 || widths.windows(2).any(|w| w[1] != 2 * w[0]) || widths.iter().any(|k| curve.cells() % k != 0) {
        return Err(Error::InvalidGrid(format!(
            "needle widths {widths:?} must double and divide {} cells",
            curve.cells()
        )));
    }
    let eps = functional_step(step, curve);
    let raw: Vec<T> = widths
        .par_iter()
        .map(|&k| {
            let u = needle(h, k, curve.cells())?;
            try_central_derivative(|s| phi(&curve.displaced(&[(s, &u)])?), eps)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = vec![raw.clone()];
    for level in 1..raw.len() {
        let f = 2f64.powi(level as i32);
        let prev = &table[level - 1];
        let next: Vec<T> = (1..prev.len())
            .map(|j| T::lin2(f / (f - 1.0), &prev[j], -1.0 / (f - 1.0), &prev[j - 1]))
            .collect();
        table.push(next);
    }
    let value = table.last().unwrap()[0].clone();
    let before = table[table.len() - 2].last().unwrap();
    let correction = T::lin2(1.0, &value, -1.0, before).norm();
    let scale = 1.0 + value.norm();
    if !(correction.is_finite()) || correction > 1e-2 * scale {
        return Err(Error::NonConvergence(format!(
            "endpoint extrapolation unstable: last correction {correction:.3e}"
        )));
    }
    Ok(EndpointEstimate { value, raw, correction })
}

/// Outer needle widths of the nested derivation.
pub const OUTER_NEEDLE_WIDTHS: [usize; 6] = [8, 16, 32, 64, 128, 256];
/// Inner needles must be much narrower than every outer one: the inner
/// limit is taken first, and an outer kink inside the inner support adds
/// O(1) curvature terms.
pub const INNER_NEEDLE_WIDTHS: [usize; 3] = [1024, 2048, 4096];

/// `D_{h₁}D_{h₂}Φ(σ)`: the endpoint derivation along `h₁` of the functional
/// `σ ↦ D_{h₂}Φ(σ)`, on a copy of the curve refined to at least
/// 4096 cells. The outer differences use `outer_step`, larger than the
/// inner one so that the inner extrapolation error is not amplified.
pub fn endpoint_second_derivation<T: LinearValue + Send>(
    phi: &CurveFunctional<'_, T>,
    curve: &Curve,
    h1: &[f64],
    h2: &[f64],
    step: f64,
    outer_step: f64,
) -> Result<EndpointEstimate<T>> {
    let fine = curve.resampled(curve.cells().max(INNER_NEEDLE_WIDTHS[2]))?;
    let inner = |s: &Curve| needle_extrapolation(phi, s, h2, step, &INNER_NEEDLE_WIDTHS).map(|e| e.value);
    needle_extrapolation(&inner, &fine, h1, outer_step, &OUTER_NEEDLE_WIDTHS)
}

/// `S_h = T(h f_0) + Σ_{n=1}^{N} √2(−1)^n T(h g_n)` with `f_0(t) = t`,
/// `g_n(t) = √2 sin(πnt)/(πn)` and `T(u) = ∂_uΦ(σ)`. Independent of the
/// needle construction; converges like `1/N`, so the partial sums at `N`
/// and `2N` are combined by one Richardson step.
pub fn endpoint_series_oracle<T: LinearValue + Send>(
    phi: &CurveFunctional<'_, T>,
    curve: &Curve,
    h: &[f64],
    terms: usize,
    step: f64,
) -> Result<T> {
    let (d, m) = (curve.dim(), curve.cells());
    let eps = functional_step(step, curve);
    let hv = h.to_vec();
    let derivative = |u: &Variation| try_central_derivative(|s| phi(&curve.displaced(&[(s, u)])?), eps);
    let linear = Variation::from_fns(
        d,
        m,
        |t| hv.iter().map(|x| x * t).collect(),
        |_, _| hv.clone(),
        false,
    )?;
    let head = derivative(&linear)?;
    let tail: Vec<T> = (1..=2 * terms)
        .into_par_iter()
        .map(|n| {
            let w = n as f64 * PI;
            let hv = h.to_vec();
            let hv2 = h.to_vec();
            let g = Variation::from_fns(
                d,
                m,
                move |t| hv.iter().map(|x| x * SQRT_2 * (w * t).sin() / w).collect(),
                move |t, _| hv2.iter().map(|x| x * SQRT_2 * (w * t).cos()).collect(),
                true,
            )?;
            let sign = if n % 2 == 0 { SQRT_2 } else { -SQRT_2 };
            Ok(derivative(&g)?.scaled(sign))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut partial = head.clone();
    let mut at_n = None;
    for (i, t) in tail.iter().enumerate() {
        partial.add_scaled(1.0, t);
        if i + 1 == terms {
            at_n = Some(partial.clone());
        }
    }
    Ok(T::lin2(2.0, &partial, -1.0, &at_n.unwrap()))
}

/// Difference between the two definitions of the trace for a kernel triple,
/// evaluated termwise; used by tests and the trace-convergence command.
pub fn trace_gap(kernels: &KernelTriple, cfg: &TraceConfig) -> Result<(CesaroSeries, CMat)> {
    let diag = kernel_diagonal(kernels, cfg.basis);
    let series = levy_trace_cesaro(&diag, kernels.dim(), kernels.fiber(), cfg)?;
    let integral = levy_trace_integral(kernels, &Metric::new(cfg.metric, kernels.dim()))?;
    Ok((series, integral))
}
