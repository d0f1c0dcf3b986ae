//! Quadrature, finite-difference and extrapolation helpers shared by the
//! transport, trace and sector code.

use crate::algebra::{CMat, Spinor};
use crate::error::{Error, Result};

/// Values that can be combined linearly (matrices, spinors, scalars).
pub trait LinearValue: Clone {
    fn zero_like(&self) -> Self;
    fn add_scaled(&mut self, s: f64, other: &Self);
    fn norm(&self) -> f64;

    fn scaled(&self, s: f64) -> Self {
        let mut out = self.zero_like();
        out.add_scaled(s, self);
        out
    }

    fn lin2(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        let mut out = x.zero_like();
        out.add_scaled(a, x);
        out.add_scaled(b, y);
        out
    }
}

impl LinearValue for CMat {
    fn zero_like(&self) -> Self {
        CMat::zeros(self.dim())
    }
    fn add_scaled(&mut self, s: f64, other: &Self) {
        self.axpy(s, other);
    }
    fn norm(&self) -> f64 {
        self.frobenius()
    }
}

impl LinearValue for Spinor {
    fn zero_like(&self) -> Self {
        Spinor::zeros(self.colour_dim())
    }
    fn add_scaled(&mut self, s: f64, other: &Self) {
        self.axpy(s, other);
    }
    fn norm(&self) -> f64 {
        Spinor::norm(self)
    }
}

impl LinearValue for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, s: f64, other: &Self) {
        *self += s * other;
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl<T: LinearValue> LinearValue for Vec<T> {
    fn zero_like(&self) -> Self {
        self.iter().map(|v| v.zero_like()).collect()
    }
    fn add_scaled(&mut self, s: f64, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            a.add_scaled(s, b);
        }
    }
    fn norm(&self) -> f64 {
        self.iter().map(|v| v.norm().powi(2)).sum::<f64>().sqrt()
    }
}

/// Composite Simpson weights on `m + 1` uniform nodes of `[0, 1]`; `m` even.
pub fn simpson_weights(m: usize) -> Result<Vec<f64>> {
    if m == 0 || m % 2 != 0 {
        return Err(Error::InvalidGrid(format!(
            "Simpson's rule needs an even number of cells, got {m}"
        )));
    }
    let h = 1.0 / m as f64;
    Ok((0..=m)
        .map(|i| {
            let w = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect())
}

/// Trapezoid weights on `m + 1` uniform nodes of `[0, 1]`.
pub fn trapezoid_weights(m: usize) -> Vec<f64> {
    let h = 1.0 / m as f64;
    (0..=m)
        .map(|i| if i == 0 || i == m { 0.5 * h } else { h })
        .collect()
}

/// `Σ w_i v_i`, accumulated in index order.
pub fn weighted_sum<T: LinearValue>(weights: &[f64], values: &[T]) -> T {
    assert_eq!(weights.len(), values.len());
    let mut acc = values[0].zero_like();
    for (w, v) in weights.iter().zip(values) {
        acc.add_scaled(*w, v);
    }
    acc
}

/// Composite Simpson integral over `[0, 1]` of nodal samples.
pub fn simpson<T: LinearValue>(values: &[T]) -> Result<T> {
    let w = simpson_weights(values.len() - 1)?;
    Ok(weighted_sum(&w, values))
}

/// One Richardson step combining an estimate at step `h` and at `h/2`
/// whose leading error is `O(h^order)`.
pub fn richardson<T: LinearValue>(coarse: &T, fine: &T, order: i32) -> T {
    let f = 2f64.powi(order);
    T::lin2(f / (f - 1.0), fine, -1.0 / (f - 1.0), coarse)
}

/// Central difference `(f(+h) − f(−h)) / 2h` refined once by Richardson.
pub fn central_derivative<T: LinearValue>(f: impl Fn(f64) -> T, h: f64) -> T {
    let d = |s: f64| T::lin2(0.5 / s, &f(s), -0.5 / s, &f(-s));
    richardson(&d(h), &d(0.5 * h), 2)
}

/// Fallible [`central_derivative`].
pub fn try_central_derivative<T: LinearValue>(f: impl Fn(f64) -> Result<T>, h: f64) -> Result<T> {
    let d = |s: f64| -> Result<T> { Ok(T::lin2(0.5 / s, &f(s)?, -0.5 / s, &f(-s)?)) };
    Ok(richardson(&d(h)?, &d(0.5 * h)?, 2))
}

/// Gradient of `f: R^d → T` with the centered policy `h = base·(1 + |x|)`,
/// one Richardson pass.
pub fn fd_gradient<T: LinearValue>(f: impl Fn(&[f64]) -> T, x: &[f64], base: f64) -> Vec<T> {
    let scale = 1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let h = base * scale;
    (0..x.len())
        .map(|k| {
            central_derivative(
                |s| {
                    let mut y = x.to_vec();
                    y[k] += s;
                    f(&y)
                },
                h,
            )
        })
        .collect()
}

/// Result of fitting `m_n = L + a·n^{−p}` to the tail of a sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct TailFit {
    /// Fitted limits, one per channel.
    pub limit: Vec<f64>,
    /// Shared decay exponent; `None` when the tail is constant.
    pub exponent: Option<f64>,
    /// Root-mean-square fit residual relative to `1 + max|m|`.
    pub residual: f64,
    /// The exponent sits on the edge of the search interval, so the tail is
    /// not of the fitted form.
    pub pinned: bool,
}

/// Least-squares fit of `m_n = L_c + a_c n^{−p}` over several channels
/// sharing one exponent `p ∈ [0.05, 6]`.
pub fn fit_power_tail(ns: &[f64], channels: &[Vec<f64>]) -> TailFit {
    let scale = 1.0
        + channels
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
    let spread = channels
        .iter()
        .map(|c| {
            let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        })
        .fold(0.0, f64::max);
    if spread <= 1e-14 * scale {
        return TailFit {
            limit: channels.iter().map(|c| *c.last().unwrap_or(&0.0)).collect(),
            exponent: None,
            residual: 0.0,
            pinned: false,
        };
    }
    let sse = |p: f64| -> (f64, Vec<f64>) {
        let xs: Vec<f64> = ns.iter().map(|n| n.powf(-p)).collect();
        let k = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let det = k * sxx - sx * sx;
        let mut total = 0.0;
        let mut limits = Vec::with_capacity(channels.len());
        for c in channels {
            let sy: f64 = c.iter().sum();
            let sxy: f64 = xs.iter().zip(c).map(|(x, y)| x * y).sum();
            let (l, a) = if det.abs() > 0.0 {
                ((sxx * sy - sx * sxy) / det, (k * sxy - sx * sy) / det)
            } else {
                (sy / k, 0.0)
            };
            total += xs.iter().zip(c).map(|(x, y)| (l + a * x - y).powi(2)).sum::<f64>();
            limits.push(l);
        }
        (total, limits)
    };
    // coarse grid, then golden-section refinement around the best node
    let grid: Vec<f64> = (0..=240).map(|i| 0.05 + i as f64 * (6.0 - 0.05) / 240.0).collect();
    let best = grid
        .iter()
        .enumerate()
        .map(|(i, p)| (i, sse(*p).0))
        .fold((0, f64::INFINITY), |acc, (i, s)| if s < acc.1 { (i, s) } else { acc })
        .0;
    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(grid.len() - 1)];
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if sse(a).0 <= sse(b).0 {
            hi = b;
        } else {
            lo = a;
        }
    }
    let p = 0.5 * (lo + hi);
    let (total, limit) = sse(p);
    let count = (ns.len() * channels.len()).max(1) as f64;
    let step = grid[1] - grid[0];
    TailFit {
        limit,
        exponent: Some(p),
        residual: (total / count).sqrt() / scale,
        pinned: p < grid[0] + 0.5 * step || p > grid[grid.len() - 1] - 0.5 * step,
    }
}

/// Slope of `log e` against `log n` by least squares (observed convergence order
/// is the negative of this for decreasing errors).
pub fn loglog_slope(ns: &[f64], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > 0.0)
        .map(|(n, e)| (n.ln(), e.ln()))
        .collect();
    let k = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (k * sxy - sx * sy) / (k * sxx - sx * sx)
}
