//! Discretized curves starting at the origin, the reparametrization
//! `σ^r(t) = σ(rt)`, and the variation bases `{e_n}`, `{f_n}`.
//!
//! A curve on `M` cells stores positions on the half grid `t = j/(2M)` and,
//! per cell, the velocity at its start, midpoint and end. Keeping the three
//! velocities per cell lets piecewise-linear data (needles, polygonal curves)
//! carry exact one-sided velocities at their kinks.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible number of grid cells.
pub const MIN_CELLS: usize = 16;

/// Analytic curve `t ↦ σ(t)` with its velocity; used to rebuild restricted
/// curves without interpolation error.
pub trait PathShape: Send + Sync {
    fn dim(&self) -> usize;
    fn position(&self, t: f64) -> Vec<f64>;
    fn velocity(&self, t: f64) -> Vec<f64>;
    /// One-sided velocity (`from_right = true` means the limit from `t⁺`).
    fn velocity_one_sided(&self, t: f64, _from_right: bool) -> Vec<f64> {
        self.velocity(t)
    }
}

fn check_cells(m: usize) -> Result<()> {
    if m < MIN_CELLS || !m.is_power_of_two() {
        return Err(Error::InvalidGrid(format!(
            "the number of cells must be a power of two ≥ {MIN_CELLS}, got {m}"
        )));
    }
    Ok(())
}

/// Half-grid samples shared by [`Curve`] and [`Variation`].
#[derive(Clone, PartialEq)]
struct Samples {
    m: usize,
    d: usize,
    /// `(2M + 1)·d` positions at `t = j/(2M)`.
    pos: Vec<f64>,
    /// `3M·d` velocities: cell `i` start, midpoint, end.
    vel: Vec<f64>,
}

impl Samples {
    fn from_fns(d: usize, m: usize, pos: impl Fn(f64) -> Vec<f64>, vel: impl Fn(f64, bool) -> Vec<f64>) -> Self {
        let mut p = Vec::with_capacity((2 * m + 1) * d);
        for j in 0..=2 * m {
            p.extend(pos(j as f64 / (2 * m) as f64));
        }
        let mut v = Vec::with_capacity(3 * m * d);
        for i in 0..m {
            let t0 = i as f64 / m as f64;
            let t1 = (i + 1) as f64 / m as f64;
            v.extend(vel(t0, true));
            v.extend(vel(0.5 * (t0 + t1), true));
            v.extend(vel(t1, false));
        }
        Self { m, d, pos: p, vel: v }
    }

    #[inline]
    fn half(&self, j: usize) -> &[f64] {
        &self.pos[j * self.d..(j + 1) * self.d]
    }

    #[inline]
    fn cell_velocity(&self, i: usize, slot: usize) -> &[f64] {
        let o = (3 * i + slot) * self.d;
        &self.vel[o..o + self.d]
    }

    fn node_velocity(&self, i: usize) -> Vec<f64> {
        if i == 0 {
            self.cell_velocity(0, 0).to_vec()
        } else if i == self.m {
            self.cell_velocity(self.m - 1, 2).to_vec()
        } else {
            let a = self.cell_velocity(i - 1, 2);
            let b = self.cell_velocity(i, 0);
            a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
        }
    }

    fn axpy(&mut self, s: f64, other: &Samples) {
        for (a, b) in self.pos.iter_mut().zip(&other.pos) {
            *a += s * b;
        }
        for (a, b) in self.vel.iter_mut().zip(&other.vel) {
            *a += s * b;
        }
    }

    /// Piecewise cubic Hermite evaluation on the half grid using the stored
    /// slopes. Returns position and velocity at `t`.
    fn hermite(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let m = self.m;
        let t = t.clamp(0.0, 1.0);
        let s = t * (2 * m) as f64;
        let mut j = s.floor() as usize;
        if j >= 2 * m {
            j = 2 * m - 1;
        }
        let cell = j / 2;
        let (slot0, slot1) = if j % 2 == 0 { (0, 1) } else { (1, 2) };
        let hh = 0.5 / m as f64;
        let u = s - j as f64;
        let p0 = self.half(j);
        let p1 = self.half(j + 1);
        let v0 = self.cell_velocity(cell, slot0);
        let v1 = self.cell_velocity(cell, slot1);
        let (h00, h10, h01, h11) = (
            2.0 * u * u * u - 3.0 * u * u + 1.0,
            u * u * u - 2.0 * u * u + u,
            -2.0 * u * u * u + 3.0 * u * u,
            u * u * u - u * u,
        );
        let (d00, d10, d01, d11) = (
            6.0 * u * u - 6.0 * u,
            3.0 * u * u - 4.0 * u + 1.0,
            -6.0 * u * u + 6.0 * u,
            3.0 * u * u - 2.0 * u,
        );
        let mut pos = Vec::with_capacity(self.d);
        let mut vel = Vec::with_capacity(self.d);
        for k in 0..self.d {
            pos.push(h00 * p0[k] + h10 * hh * v0[k] + h01 * p1[k] + h11 * hh * v1[k]);
            vel.push((d00 * p0[k] + d01 * p1[k]) / hh + d10 * v0[k] + d11 * v1[k]);
        }
        (pos, vel)
    }
}

/// Discretized curve σ: [0, 1] → R^d with σ(0) = 0 on a uniform grid of
/// `M` cells.
#[derive(Clone)]
pub struct Curve {
    s: Samples,
    shape: Option<Arc<dyn PathShape>>,
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Curve")
            .field("cells", &self.s.m)
            .field("dim", &self.s.d)
            .field("analytic", &self.shape.is_some())
            .field("endpoint", &self.endpoint())
            .finish()
    }
}

impl PartialEq for Curve {
    fn eq(&self, other: &Self) -> bool {
        self.s == other.s
    }
}

impl Curve {
    /// Samples an analytic shape on `m` cells.
    pub fn from_shape(shape: Arc<dyn PathShape>, m: usize) -> Result<Self> {
        check_cells(m)?;
        let d = shape.dim();
        let origin = shape.position(0.0);
        if origin.iter().any(|v| v.abs() > 1e-14) {
            return Err(Error::InvalidParameter("curves must start at the origin".into()));
        }
        let mut s = Samples::from_fns(d, m, |t| shape.position(t), |t, right| shape.velocity_one_sided(t, right));
        s.pos[..d].iter_mut().for_each(|v| *v = 0.0);
        let c = Self { s, shape: Some(shape) };
        c.check_finite()?;
        Ok(c)
    }

    /// Curve through nodal positions `nodes[i] = σ(i/M)`. Slopes come from
    /// the monotone (Fritsch–Carlson) cubic through the nodes; midpoints and
    /// velocities are evaluated on that interpolant.
    pub fn from_nodes(nodes: &[Vec<f64>]) -> Result<Self> {
        let m = nodes.len().saturating_sub(1);
        check_cells(m)?;
        let d = nodes[0].len();
        if nodes.iter().any(|n| n.len() != d) {
            return Err(Error::InvalidGrid("ragged node rows".into()));
        }
        if nodes[0].iter().any(|v| *v != 0.0) {
            return Err(Error::InvalidParameter("curves must start at the origin".into()));
        }
        let h = 1.0 / m as f64;
        let mut slopes = vec![vec![0.0; d]; m + 1];
        for k in 0..d {
            let ys: Vec<f64> = nodes.iter().map(|n| n[k]).collect();
            let sl = pchip_slopes(&ys, h);
            for (i, v) in sl.into_iter().enumerate() {
                slopes[i][k] = v;
            }
        }
        let mut pos = Vec::with_capacity((2 * m + 1) * d);
        let mut vel = Vec::with_capacity(3 * m * d);
        for i in 0..m {
            pos.extend(&nodes[i]);
            let mut mid_p = vec![0.0; d];
            let mut mid_v = vec![0.0; d];
            for k in 0..d {
                let (p0, p1, m0, m1) = (nodes[i][k], nodes[i + 1][k], slopes[i][k], slopes[i + 1][k]);
                mid_p[k] = 0.5 * (p0 + p1) + 0.125 * h * (m0 - m1);
                mid_v[k] = 1.5 * (p1 - p0) / h - 0.25 * (m0 + m1);
            }
            pos.extend(mid_p);
            vel.extend(&slopes[i]);
            vel.extend(mid_v);
            vel.extend(&slopes[i + 1]);
        }
        pos.extend(&nodes[m]);
        let c = Self {
            s: Samples { m, d, pos, vel },
            shape: None,
        };
        c.check_finite()?;
        Ok(c)
    }

    pub fn linear(direction: &[f64], m: usize) -> Result<Self> {
        Self::from_shape(
            Arc::new(FourierShape {
                coeffs: vec![],
                drift: direction.to_vec(),
            }),
            m,
        )
    }

    pub fn zero(d: usize, m: usize) -> Result<Self> {
        Self::linear(&vec![0.0; d], m)
    }

    fn check_finite(&self) -> Result<()> {
        if self.s.pos.iter().chain(&self.s.vel).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter("non-finite curve samples".into()))
        }
    }

    pub fn cells(&self) -> usize {
        self.s.m
    }

    pub fn dim(&self) -> usize {
        self.s.d
    }

    pub fn is_analytic(&self) -> bool {
        self.shape.is_some()
    }

    pub fn node_time(&self, i: usize) -> f64 {
        i as f64 / self.s.m as f64
    }

    /// σ(t_i) at grid node `i ∈ 0..=M`.
    pub fn node(&self, i: usize) -> &[f64] {
        self.s.half(2 * i)
    }

    /// σ at half-grid index `j ∈ 0..=2M` (`t = j/2M`).
    pub fn half_point(&self, j: usize) -> &[f64] {
        self.s.half(j)
    }

    /// Velocity in cell `i` at its start (`slot = 0`), midpoint (1) or end (2).
    pub fn cell_velocity(&self, i: usize, slot: usize) -> &[f64] {
        self.s.cell_velocity(i, slot)
    }

    /// Two-sided average velocity at node `i`.
    pub fn node_velocity(&self, i: usize) -> Vec<f64> {
        self.s.node_velocity(i)
    }

    pub fn endpoint(&self) -> &[f64] {
        self.node(self.s.m)
    }

    /// Position and velocity at an arbitrary `t`, exact for analytic curves and
    /// piecewise cubic Hermite otherwise.
    pub fn evaluate(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        match &self.shape {
            Some(shape) => (shape.position(t), shape.velocity(t)),
            None => self.s.hermite(t),
        }
    }

    /// `σ + Σ_k c_k u_k`, sample by sample on the same grid.
    pub fn displaced(&self, terms: &[(f64, &Variation)]) -> Result<Curve> {
        let mut s = self.s.clone();
        for (c, u) in terms {
            if u.s.m != s.m || u.s.d != s.d {
                return Err(Error::InvalidGrid("variation grid does not match the curve".into()));
            }
            s.axpy(*c, &u.s);
        }
        Ok(Curve { s, shape: None })
    }

    /// `σ^r(t) = σ(rt)` on the same grid; velocities scale as `r·σ̇(rt)`.
    pub fn restrict(&self, r: f64) -> Result<Curve> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidParameter(format!("restriction parameter {r} outside [0, 1]")));
        }
        if r == 1.0 {
            return Ok(self.clone());
        }
        let (m, d) = (self.s.m, self.s.d);
        let s = match &self.shape {
            Some(shape) => {
                let shape = shape.clone();
                Samples::from_fns(
                    d,
                    m,
                    |t| shape.position(r * t),
                    |t, right| shape.velocity_one_sided(r * t, right).into_iter().map(|v| r * v).collect(),
                )
            }
            None => Samples::from_fns(
                d,
                m,
                |t| self.s.hermite(r * t).0,
                |t, _| self.s.hermite(r * t).1.into_iter().map(|v| r * v).collect(),
            ),
        };
        let mut c = Curve {
            s,
            shape: self.shape.as_ref().map(|sh| Arc::new(Restricted { inner: sh.clone(), r }) as Arc<dyn PathShape>),
        };
        c.s.pos[..d].iter_mut().for_each(|v| *v = 0.0);
        Ok(c)
    }

    /// The same curve on `m` cells: exact for analytic curves, through the
    /// piecewise cubic Hermite interpolant otherwise.
    pub fn resampled(&self, m: usize) -> Result<Curve> {
        check_cells(m)?;
        if m == self.s.m {
            return Ok(self.clone());
        }
        match &self.shape {
            Some(shape) => Curve::from_shape(shape.clone(), m),
            None => {
                let mut s = Samples::from_fns(self.s.d, m, |t| self.s.hermite(t).0, |t, _| self.s.hermite(t).1);
                s.pos[..self.s.d].iter_mut().for_each(|v| *v = 0.0);
                Ok(Curve { s, shape: None })
            }
        }
    }

    /// Writes the nodes as CSV with columns `t, x0, …, x{d−1}`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.dim()).map(|k| format!("x{k}")));
        wr.write_record(&header)?;
        for i in 0..=self.s.m {
            let mut row = vec![format!("{:.17e}", self.node_time(i))];
            row.extend(self.node(i).iter().map(|v| format!("{v:.17e}")));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads a curve written by [`Curve::write_csv`]; the `t` column must be
    /// the uniform grid `i/M`.
    pub fn read_csv<R: Read>(r: R) -> Result<Curve> {
        let mut rd = csv::Reader::from_reader(r);
        let d = rd.headers()?.len().saturating_sub(1);
        if d == 0 {
            return Err(Error::InvalidGrid("curve CSV needs a t column and at least one coordinate".into()));
        }
        let mut ts = Vec::new();
        let mut nodes = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidGrid(format!("bad number in curve CSV: {e}")))?;
            ts.push(vals[0]);
            nodes.push(vals[1..].to_vec());
        }
        let m = ts.len().saturating_sub(1);
        for (i, t) in ts.iter().enumerate() {
            if (t - i as f64 / m.max(1) as f64).abs() > 1e-12 {
                return Err(Error::InvalidGrid(format!("non-uniform t column at row {i}")));
            }
        }
        Curve::from_nodes(&nodes)
    }
}

struct Restricted {
    inner: Arc<dyn PathShape>,
    r: f64,
}

impl PathShape for Restricted {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn position(&self, t: f64) -> Vec<f64> {
        self.inner.position(self.r * t)
    }
    fn velocity(&self, t: f64) -> Vec<f64> {
        self.inner.velocity(self.r * t).into_iter().map(|v| self.r * v).collect()
    }
    fn velocity_one_sided(&self, t: f64, from_right: bool) -> Vec<f64> {
        self.inner
            .velocity_one_sided(self.r * t, from_right)
            .into_iter()
            .map(|v| self.r * v)
            .collect()
    }
}

fn pchip_slopes(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h).collect();
    let mut m = vec![0.0; n];
    for i in 1..n - 1 {
        let (a, b) = (delta[i - 1], delta[i]);
        m[i] = if a * b <= 0.0 { 0.0 } else { 2.0 / (1.0 / a + 1.0 / b) };
    }
    let end = |d0: f64, d1: f64| {
        let s = 0.5 * (3.0 * d0 - d1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    m[0] = if n > 2 { end(delta[0], delta[1]) } else { delta[0] };
    m[n - 1] = if n > 2 { end(delta[n - 2], delta[n - 3]) } else { delta[n - 2] };
    m
}

/// `σ(t) = Σ_k c_k sin(kπt) + b·t` with vector coefficients.
#[derive(Clone, Debug)]
pub struct FourierShape {
    /// `coeffs[k − 1] = c_k ∈ R^d`.
    pub coeffs: Vec<Vec<f64>>,
    pub drift: Vec<f64>,
}

impl FourierShape {
    /// `‖σ̇‖²_{L²} = |b|² + Σ_k (kπ)²|c_k|²/2`.
    pub fn velocity_norm_squared(&self) -> f64 {
        let b: f64 = self.drift.iter().map(|v| v * v).sum();
        b + self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = (i + 1) as f64 * PI;
                0.5 * k * k * c.iter().map(|v| v * v).sum::<f64>()
            })
            .sum::<f64>()
    }
}

impl PathShape for FourierShape {
    fn dim(&self) -> usize {
        self.drift.len()
    }
    fn position(&self, t: f64) -> Vec<f64> {
        let mut p: Vec<f64> = self.drift.iter().map(|b| b * t).collect();
        for (i, c) in self.coeffs.iter().enumerate() {
            let s = ((i + 1) as f64 * PI * t).sin();
            for (pk, ck) in p.iter_mut().zip(c) {
                *pk += ck * s;
            }
        }
        p
    }
    fn velocity(&self, t: f64) -> Vec<f64> {
        let mut v = self.drift.clone();
        for (i, c) in self.coeffs.iter().enumerate() {
            let w = (i + 1) as f64 * PI;
            let s = w * (w * t).cos();
            for (vk, ck) in v.iter_mut().zip(c) {
                *vk += ck * s;
            }
        }
        v
    }
}

/// Polygon through `knots[j]` at `t = j/K` (`knots[0] = 0`).
#[derive(Clone, Debug)]
pub struct PolygonShape {
    pub knots: Vec<Vec<f64>>,
}

impl PolygonShape {
    fn segment(&self, t: f64, from_right: bool) -> usize {
        let k = self.knots.len() - 1;
        let s = t.clamp(0.0, 1.0) * k as f64;
        let mut j = s.floor() as usize;
        if !from_right && (s - j as f64) == 0.0 && j > 0 {
            j -= 1;
        }
        j.min(k - 1)
    }
}

impl PathShape for PolygonShape {
    fn dim(&self) -> usize {
        self.knots[0].len()
    }
    fn position(&self, t: f64) -> Vec<f64> {
        let k = (self.knots.len() - 1) as f64;
        let j = self.segment(t, true);
        let u = t.clamp(0.0, 1.0) * k - j as f64;
        self.knots[j]
            .iter()
            .zip(&self.knots[j + 1])
            .map(|(a, b)| a + u * (b - a))
            .collect()
    }
    fn velocity(&self, t: f64) -> Vec<f64> {
        self.velocity_one_sided(t, true)
    }
    fn velocity_one_sided(&self, t: f64, from_right: bool) -> Vec<f64> {
        let k = (self.knots.len() - 1) as f64;
        let j = self.segment(t, from_right);
        self.knots[j].iter().zip(&self.knots[j + 1]).map(|(a, b)| k * (b - a)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    /// `K` sine modes plus a linear drift.
    Fourier(usize),
    /// Polygon with `K` segments, knots at `j/K`.
    PiecewiseLinear(usize),
}

/// Seeded random curve in R^d. Fourier curves use coefficients
/// `c_k ~ amplitude·N(0, 1)/k` and `b ~ amplitude·N(0, 1)`; `Fourier(0)`
/// with `zero_drift` is the zero curve.
pub fn random_curve(seed: u64, smoothness: Smoothness, m: usize, d: usize, amplitude: f64) -> Result<Curve> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    match smoothness {
        Smoothness::Fourier(k) => {
            let coeffs = (1..=k)
                .map(|j| (0..d).map(|_| amplitude * normal() / j as f64).collect())
                .collect();
            let drift = (0..d).map(|_| amplitude * normal()).collect();
            Curve::from_shape(Arc::new(FourierShape { coeffs, drift }), m)
        }
        Smoothness::PiecewiseLinear(k) => {
            if k == 0 || m % k != 0 {
                return Err(Error::InvalidParameter(format!(
                    "piecewise-linear curves need K dividing M (K = {k}, M = {m})"
                )));
            }
            let mut knots = vec![vec![0.0; d]];
            for _ in 0..k {
                let prev = knots.last().unwrap().clone();
                knots.push(prev.iter().map(|p| p + amplitude * normal()).collect());
            }
            Curve::from_shape(Arc::new(PolygonShape { knots }), m)
        }
    }
}

/// Seeded Fourier shape, exposed so tests can compare against its
/// coefficient formulas.
pub fn random_fourier_shape(seed: u64, k: usize, d: usize, amplitude: f64) -> FourierShape {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let coeffs = (1..=k)
        .map(|j| (0..d).map(|_| amplitude * normal() / j as f64).collect())
        .collect();
    let drift = (0..d).map(|_| amplitude * normal()).collect();
    FourierShape { coeffs, drift }
}

/// Direction field `u` on the curve grid with `u(0) = 0`. Variations tagged
/// endpoint-free (members of E_0) have `u(1) = 0` exactly.
#[derive(Clone, PartialEq)]
pub struct Variation {
    s: Samples,
    endpoint_free: bool,
}

impl fmt::Debug for Variation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Variation")
            .field("cells", &self.s.m)
            .field("dim", &self.s.d)
            .field("endpoint_free", &self.endpoint_free)
            .finish()
    }
}

impl Variation {
    /// `u(t) = f(t)·p_μ` from a scalar profile and its derivative. When
    /// `endpoint_free` is set the sample at `t = 1` is forced to zero.
    pub fn scalar(
        d: usize,
        mu: usize,
        m: usize,
        f: impl Fn(f64) -> f64,
        fdot: impl Fn(f64) -> f64,
        endpoint_free: bool,
    ) -> Result<Self> {
        if mu >= d {
            return Err(Error::IndexOutOfRange { index: mu, dim: d });
        }
        let unit = |v: f64| {
            let mut out = vec![0.0; d];
            out[mu] = v;
            out
        };
        Self::from_fns(d, m, |t| unit(f(t)), |t, _| unit(fdot(t)), endpoint_free)
    }

    /// General variation from position and (one-sided) velocity functions.
    pub fn from_fns(
        d: usize,
        m: usize,
        pos: impl Fn(f64) -> Vec<f64>,
        vel: impl Fn(f64, bool) -> Vec<f64>,
        endpoint_free: bool,
    ) -> Result<Self> {
        check_cells(m)?;
        let mut s = Samples::from_fns(d, m, pos, vel);
        s.pos[..d].iter_mut().for_each(|v| *v = 0.0);
        if endpoint_free {
            let o = 2 * m * d;
            s.pos[o..o + d].iter_mut().for_each(|v| *v = 0.0);
        }
        Ok(Self { s, endpoint_free })
    }

    pub fn zero(d: usize, m: usize) -> Result<Self> {
        Self::from_fns(d, m, |_| vec![0.0; d], |_, _| vec![0.0; d], true)
    }

    pub fn cells(&self) -> usize {
        self.s.m
    }

    pub fn dim(&self) -> usize {
        self.s.d
    }

    pub fn is_endpoint_free(&self) -> bool {
        self.endpoint_free
    }

    pub fn node(&self, i: usize) -> &[f64] {
        self.s.half(2 * i)
    }

    pub fn half_point(&self, j: usize) -> &[f64] {
        self.s.half(j)
    }

    pub fn cell_velocity(&self, i: usize, slot: usize) -> &[f64] {
        self.s.cell_velocity(i, slot)
    }

    pub fn node_velocity(&self, i: usize) -> Vec<f64> {
        self.s.node_velocity(i)
    }

    pub fn endpoint(&self) -> &[f64] {
        self.node(self.s.m)
    }

    /// `Σ c_k u_k`; endpoint-free iff every term is.
    pub fn combine(terms: &[(f64, &Variation)]) -> Result<Variation> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty combination".into()))?
            .1;
        let mut s = first.s.clone();
        s.pos.iter_mut().for_each(|v| *v = 0.0);
        s.vel.iter_mut().for_each(|v| *v = 0.0);
        let mut free = true;
        for (c, u) in terms {
            if u.s.m != s.m || u.s.d != s.d {
                return Err(Error::InvalidGrid("variation grids differ".into()));
            }
            s.axpy(*c, &u.s);
            free &= u.endpoint_free;
        }
        Ok(Variation { s, endpoint_free: free })
    }

    pub fn scaled(&self, c: f64) -> Variation {
        Variation::combine(&[(c, self)]).expect("single term")
    }

    /// Fails unless the variation is tagged endpoint-free.
    pub fn require_endpoint_free(&self) -> Result<()> {
        if self.endpoint_free {
            Ok(())
        } else {
            let n = self.endpoint().iter().map(|v| v * v).sum::<f64>().sqrt();
            Err(Error::NotEndpointFree(n))
        }
    }
}

/// `e_n(t)·p_μ = √2 sin(nπt)·p_μ`, n ≥ 1.
pub fn sin_basis(n: usize, mu: usize, d: usize, m: usize) -> Result<Variation> {
    if n == 0 {
        return Err(Error::InvalidParameter("sine basis starts at n = 1".into()));
    }
    let w = n as f64 * PI;
    Variation::scalar(d, mu, m, |t| SQRT_2 * (w * t).sin(), |t| SQRT_2 * w * (w * t).cos(), true)
}

/// `f_1 = t`, `f_n = √2 sin(π(n−1)t)/(π(n−1))` for n ≥ 2, times `p_μ`;
/// orthonormal in W^{1,2}_0.
pub fn f_basis(n: usize, mu: usize, d: usize, m: usize) -> Result<Variation> {
    match n {
        0 => Err(Error::InvalidParameter("f basis starts at n = 1".into())),
        1 => Variation::scalar(d, mu, m, |t| t, |_| 1.0, false),
        _ => {
            let w = (n - 1) as f64 * PI;
            Variation::scalar(d, mu, m, |t| SQRT_2 * (w * t).sin() / w, |t| SQRT_2 * (w * t).cos(), true)
        }
    }
}

/// Needle ramp `u_k(t) = h·max(0, k(t − 1 + 1/k))`, concentrated on the last
/// `1/k` of the interval. The kink must sit on a grid node.
pub fn needle(h: &[f64], k: usize, m: usize) -> Result<Variation> {
    if k == 0 || m % k != 0 {
        return Err(Error::InvalidGrid(format!("needle width 1/{k} is not aligned with M = {m}")));
    }
    let kf = k as f64;
    let start = 1.0 - 1.0 / kf;
    let h = h.to_vec();
    Variation::from_fns(
        h.len(),
        m,
        |t| {
            let a = (kf * (t - start)).max(0.0);
            h.iter().map(|v| v * a).collect()
        },
        |t, right| {
            let on = if right { t >= start - 1e-15 } else { t > start + 1e-15 };
            h.iter().map(|v| if on { v * kf } else { 0.0 }).collect()
        },
        false,
    )
}
