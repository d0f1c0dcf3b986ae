//! Parallel transport along discretized curves, its first and second
//! functional derivatives and the path-space 1-form `B^A(σ)u = U_{0,1}∂_uU_{1,0}`.
//!
//! Transport solves `dU/dt = −A_μ(σ(t))σ̇^μ(t)U` with one classical RK4 step per
//! grid cell, using the connection at the cell start, midpoint and end. No
//! unitary reprojection is applied; the drift `max_i ‖U_i*U_i − I‖` is
//! recorded and bounded.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::algebra::{CMat, GroupTag, LieMatrix};
use crate::error::{Error, Result};
use crate::geometry::{curvature, Connection, CurvatureJet};
use crate::numerics::{simpson_weights, trapezoid_weights, try_central_derivative};
use crate::paths::{Curve, Variation};

/// Default bound on the unitarity drift before transport is rejected.
pub const DEFAULT_DRIFT_BOUND: f64 = 1e-6;
/// Drift below which `U⁻¹` is taken as `U*`.
pub const ADJOINT_INVERSE_DRIFT: f64 = 1e-8;
/// Base step for first functional derivatives, scaled by `1 + ‖σ‖_∞`.
pub const FUNCTIONAL_FD_STEP: f64 = 1e-4;
/// Base step for second functional differences.
pub const SECOND_FD_STEP: f64 = 1e-3;

fn generator(a: &[CMat], v: &[f64]) -> CMat {
    let mut g = CMat::zeros(a[0].dim());
    for (am, vm) in a.iter().zip(v) {
        if *vm != 0.0 {
            g.axpy(-vm, am);
        }
    }
    g
}

/// RK4 propagator over one cell for the linear ODE `U' = G(t)U`.
fn cell_propagator(gs: &CMat, gm: &CMat, ge: &CMat, h: f64) -> CMat {
    let n = gs.dim();
    let id = CMat::identity(n);
    let mut x1 = id.clone();
    x1.axpy(0.5 * h, gs);
    let k2 = gm.matmul(&x1);
    let mut x2 = id.clone();
    x2.axpy(0.5 * h, &k2);
    let k3 = gm.matmul(&x2);
    let mut x3 = id.clone();
    x3.axpy(h, &k3);
    let k4 = ge.matmul(&x3);
    let mut p = id;
    p.axpy(h / 6.0, gs);
    p.axpy(h / 3.0, &k2);
    p.axpy(h / 3.0, &k3);
    p.axpy(h / 6.0, &k4);
    p
}

fn check_curve(conn: &Connection, curve: &Curve) -> Result<()> {
    if curve.dim() != conn.dim() {
        return Err(Error::DimensionMismatch {
            expected: conn.dim(),
            got: curve.dim(),
        });
    }
    Ok(())
}

/// Calls `sink` with the RK4 propagator of every cell in order. The
/// potential at each cell end is reused as the next cell start.
fn for_each_cell_propagator(conn: &Connection, curve: &Curve, mut sink: impl FnMut(CMat)) {
    let m = curve.cells();
    let h = 1.0 / m as f64;
    let mut start = conn.potential(curve.half_point(0));
    for i in 0..m {
        let mid = conn.potential(curve.half_point(2 * i + 1));
        let end = conn.potential(curve.half_point(2 * i + 2));
        let gs = generator(&start, curve.cell_velocity(i, 0));
        let gm = generator(&mid, curve.cell_velocity(i, 1));
        let ge = generator(&end, curve.cell_velocity(i, 2));
        sink(cell_propagator(&gs, &gm, &ge, h));
        start = end;
    }
}

/// `U^A_{1,0}(σ)` without storing the intermediate table.
pub fn holonomy(conn: &Connection, curve: &Curve) -> Result<CMat> {
    check_curve(conn, curve)?;
    let mut u = CMat::identity(conn.fiber());
    for_each_cell_propagator(conn, curve, |p| u = p.matmul(&u));
    if !u.is_finite() {
        return Err(Error::InvalidParameter("transport produced non-finite values".into()));
    }
    Ok(u)
}

/// `(U_{1,0}, U_{0,1}, drift)` without storing the table; the inverse and
/// the drift bound follow the rules of [`TransportTable`].
pub fn holonomy_with_inverse(conn: &Connection, curve: &Curve) -> Result<(CMat, CMat, f64)> {
    let u = holonomy(conn, curve)?;
    let drift = u.unitarity_defect();
    if drift > DEFAULT_DRIFT_BOUND {
        return Err(Error::Drift {
            drift,
            bound: DEFAULT_DRIFT_BOUND,
            cells: curve.cells(),
        });
    }
    let inv = if drift <= ADJOINT_INVERSE_DRIFT {
        u.adjoint()
    } else {
        u.inverse().ok_or_else(|| Error::InvalidParameter("singular transport".into()))?
    };
    Ok((u, inv, drift))
}

/// Grid-aligned transports `U_i = U^A_{t_i,0}(σ)` and their inverses.
#[derive(Clone, Debug)]
pub struct TransportTable {
    u: Vec<CMat>,
    inv: Vec<CMat>,
    drift: f64,
}

/// `parallel_transport(A, σ)` with the default drift bound.
pub fn parallel_transport(conn: &Connection, curve: &Curve) -> Result<TransportTable> {
    TransportTable::new(conn, curve)
}

impl TransportTable {
    pub fn new(conn: &Connection, curve: &Curve) -> Result<Self> {
        Self::with_drift_bound(conn, curve, DEFAULT_DRIFT_BOUND)
    }

    pub fn with_drift_bound(conn: &Connection, curve: &Curve, bound: f64) -> Result<Self> {
        check_curve(conn, curve)?;
        let mut u = Vec::with_capacity(curve.cells() + 1);
        u.push(CMat::identity(conn.fiber()));
        for_each_cell_propagator(conn, curve, |p| {
            let next = p.matmul(u.last().unwrap());
            u.push(next);
        });
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("transport produced non-finite values".into()));
        }
        let drift = u.iter().map(CMat::unitarity_defect).fold(0.0, f64::max);
        if drift > bound {
            return Err(Error::Drift {
                drift,
                bound,
                cells: curve.cells(),
            });
        }
        let inv = if drift <= ADJOINT_INVERSE_DRIFT {
            u.iter().map(CMat::adjoint).collect()
        } else {
            u.iter()
                .map(|x| x.inverse().ok_or_else(|| Error::InvalidParameter("singular transport".into())))
                .collect::<Result<Vec<_>>>()?
        };
        Ok(Self { u, inv, drift })
    }

    pub fn cells(&self) -> usize {
        self.u.len() - 1
    }

    /// `U_{t_i,0}`.
    pub fn at(&self, i: usize) -> &CMat {
        &self.u[i]
    }

    /// `U_{0,t_i} = U_{t_i,0}⁻¹`.
    pub fn inverse_at(&self, i: usize) -> &CMat {
        &self.inv[i]
    }

    /// `U_{t_i,t_j} = U_i·U_j⁻¹`.
    pub fn between(&self, i: usize, j: usize) -> CMat {
        self.u[i].matmul(&self.inv[j])
    }

    /// `U_{1,0}`.
    pub fn holonomy(&self) -> &CMat {
        self.u.last().unwrap()
    }

    /// `U_{0,1}`.
    pub fn inverse_holonomy(&self) -> &CMat {
        self.inv.last().unwrap()
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }
}

/// Transport table together with the curve data and curvature sampled at the
/// grid nodes. Covariant derivatives of the curvature are computed on first
/// use.
pub struct PathData {
    conn: Connection,
    curve: Curve,
    table: TransportTable,
    velocity: Vec<Vec<f64>>,
    f: Vec<Vec<CMat>>,
    a_end: Vec<CMat>,
    jets: OnceLock<Vec<CurvatureJet>>,
}

impl PathData {
    pub fn new(conn: &Connection, curve: &Curve) -> Result<Self> {
        let table = TransportTable::new(conn, curve)?;
        Ok(Self::from_table(conn, curve, table))
    }

    pub fn from_table(conn: &Connection, curve: &Curve, table: TransportTable) -> Self {
        let m = curve.cells();
        let velocity = (0..=m).map(|i| curve.node_velocity(i)).collect();
        let f = (0..=m).map(|i| curvature(conn, curve.node(i))).collect();
        Self {
            conn: conn.clone(),
            curve: curve.clone(),
            a_end: conn.potential(curve.endpoint()),
            table,
            velocity,
            f,
            jets: OnceLock::new(),
        }
    }

    pub fn connection(&self) -> &Connection {
        &self.conn
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn table(&self) -> &TransportTable {
        &self.table
    }

    pub fn cells(&self) -> usize {
        self.curve.cells()
    }

    pub fn dim(&self) -> usize {
        self.curve.dim()
    }

    pub fn fiber(&self) -> usize {
        self.conn.fiber()
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.velocity[i]
    }

    /// `F_{μν}(σ(t_i))` at `[μ·d + ν]`.
    pub fn curvature_at(&self, i: usize) -> &[CMat] {
        &self.f[i]
    }

    /// `A_μ(σ(1))`.
    pub fn endpoint_potential(&self) -> &[CMat] {
        &self.a_end
    }

    pub fn jets(&self) -> &[CurvatureJet] {
        self.jets.get_or_init(|| {
            (0..=self.cells())
                .into_par_iter()
                .map(|i| self.conn.jet(self.curve.node(i)))
                .collect()
        })
    }

    fn check_variation(&self, u: &Variation) -> Result<()> {
        if u.dim() != self.dim() || u.cells() != self.cells() {
            return Err(Error::InvalidGrid("variation grid does not match the curve".into()));
        }
        Ok(())
    }

    /// `W_μ(t_i) = U_{0,t}F_{μλ}σ̇^λU_{t,0}` for every direction μ.
    fn w_at(&self, i: usize) -> Vec<CMat> {
        let d = self.dim();
        let v = &self.velocity[i];
        let (u, ui) = (self.table.at(i), self.table.inverse_at(i));
        (0..d)
            .map(|mu| {
                let mut x = CMat::zeros(self.fiber());
                for (l, vl) in v.iter().enumerate() {
                    x.axpy(*vl, &self.f[i][mu * d + l]);
                }
                x.conjugate_by(ui, u)
            })
            .collect()
    }

    /// `Σ_i w_i u^μ(t_i) W_μ(t_i)` with Simpson weights.
    fn integrated_w(&self, u: &Variation) -> Result<CMat> {
        let w = simpson_weights(self.cells())?;
        let mut acc = CMat::zeros(self.fiber());
        for (i, wi) in w.iter().enumerate() {
            let ws = self.w_at(i);
            for (mu, um) in u.node(i).iter().enumerate() {
                if *um != 0.0 {
                    acc.axpy(wi * um, &ws[mu]);
                }
            }
        }
        Ok(acc)
    }

    /// `A_μ(σ(1))u^μ(1)`.
    fn endpoint_term(&self, u: &Variation) -> CMat {
        let mut x = CMat::zeros(self.fiber());
        for (a, um) in self.a_end.iter().zip(u.endpoint()) {
            x.axpy(*um, a);
        }
        x
    }

    /// `(U^A_{1,0})'(σ)(u) = −∫U_{1,t}F_{μν}u^μσ̇^νU_{t,0}dt − A_μ(σ(1))u^μ(1)U_{1,0}`.
    pub fn first_derivative(&self, u: &Variation) -> Result<CMat> {
        self.check_variation(u)?;
        let u1 = self.table.holonomy();
        let mut out = -&u1.matmul(&self.integrated_w(u)?);
        out -= &self.endpoint_term(u).matmul(u1);
        Ok(out)
    }

    /// `B^A(σ)u = U_{0,1}·(U^A_{1,0})'(σ)(u)`.
    pub fn one_form_b(&self, u: &Variation) -> Result<LieMatrix> {
        let b = self.table.inverse_holonomy().matmul(&self.first_derivative(u)?);
        Ok(LieMatrix::general(b))
    }

    /// `−∫U_{0,t}F_{μν}u^μσ̇^νU_{t,0}dt`, equal to `B^A(σ)u` for `u ∈ E_0`.
    pub fn one_form_b_endpoint_free(&self, u: &Variation) -> Result<LieMatrix> {
        self.check_variation(u)?;
        u.require_endpoint_free()?;
        Ok(LieMatrix::general(-&self.integrated_w(u)?))
    }

    /// `R^S_{μν}(t_i) = U_{0,t}F_{μν}U_{t,0}`.
    pub fn conjugated_curvature(&self, i: usize, mu: usize, nu: usize) -> CMat {
        self.f[i][mu * self.dim() + nu].conjugate_by(self.table.inverse_at(i), self.table.at(i))
    }

    /// Second-derivative kernels of `U_{1,0}` sampled on the grid.
    pub fn kernels(&self) -> KernelTriple {
        let d = self.dim();
        let jets = self.jets();
        let m = self.cells();
        let per_node: Vec<(Vec<CMat>, Vec<CMat>, Vec<CMat>)> = (0..=m)
            .into_par_iter()
            .map(|i| {
                let (u, ui) = (self.table.at(i), self.table.inverse_at(i));
                let v = &self.velocity[i];
                let zero = CMat::zeros(self.fiber());
                let mut levy = vec![zero.clone(); d * d];
                let mut sing = vec![zero; d * d];
                for mu in 0..d {
                    for nu in mu..d {
                        let mut x = CMat::zeros(self.fiber());
                        for (l, vl) in v.iter().enumerate() {
                            x.axpy(-0.5 * vl, jets[i].nabla_f(mu, nu, l));
                            x.axpy(-0.5 * vl, jets[i].nabla_f(nu, mu, l));
                        }
                        let x = x.conjugate_by(ui, u);
                        let s = jets[i].f(mu, nu).conjugate_by(ui, u);
                        levy[nu * d + mu] = x.clone();
                        levy[mu * d + nu] = x;
                        sing[nu * d + mu] = -&s;
                        sing[mu * d + nu] = s;
                    }
                }
                (self.w_at(i), levy, sing)
            })
            .collect();
        let mut w = Vec::with_capacity(m + 1);
        let mut levy = Vec::with_capacity(m + 1);
        let mut singular = Vec::with_capacity(m + 1);
        for (a, b, c) in per_node {
            w.push(a);
            levy.push(b);
            singular.push(c);
        }
        KernelTriple {
            dim: d,
            fiber: self.fiber(),
            prefactor: self.table.holonomy().clone(),
            form: VolterraForm::Ordered,
            w,
            levy,
            singular,
        }
    }
}

/// Shape of the Volterra part of a [`KernelTriple`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VolterraForm {
    /// `K^V_{μν}(t, s) = L·W_μ(t)W_ν(s)` for `t ≥ s`, `L·W_ν(s)W_μ(t)` for `t < s`.
    Ordered,
    /// `R^V_{μν}(t, s) = L·[W_ν(s), W_μ(t)]` for `t ≤ s`, zero otherwise.
    Commutator,
}

/// Volterra, Lévy and singular kernels of a bilinear form on variations,
/// sampled on the curve grid.
///
/// Every kernel carries the common left factor `L` (`U_{1,0}` for the
/// second derivative of transport, `I` for the derivative of `B^A`). The
/// Volterra kernel is stored through its factors `W_μ(t_i)` so that memory
/// and evaluation cost stay linear in `M`.
#[derive(Clone, Debug)]
pub struct KernelTriple {
    dim: usize,
    fiber: usize,
    prefactor: CMat,
    form: VolterraForm,
    w: Vec<Vec<CMat>>,
    levy: Vec<Vec<CMat>>,
    singular: Vec<Vec<CMat>>,
}

impl KernelTriple {
    /// Builds a triple from sampled factors. `w(t)` returns `W_μ(t)` for all μ,
    /// `levy(t)` and `singular(t)` return `d²` matrices at `[μ·d + ν]`;
    /// `levy` is symmetrized and `singular` antisymmetrized.
    pub fn synthetic(
        dim: usize,
        fiber: usize,
        cells: usize,
        form: VolterraForm,
        w: impl Fn(f64) -> Vec<CMat>,
        levy: impl Fn(f64) -> Vec<CMat>,
        singular: impl Fn(f64) -> Vec<CMat>,
    ) -> Result<Self> {
        simpson_weights(cells)?;
        let mut ws = Vec::with_capacity(cells + 1);
        let mut ls = Vec::with_capacity(cells + 1);
        let mut ss = Vec::with_capacity(cells + 1);
        for i in 0..=cells {
            let t = i as f64 / cells as f64;
            let wi = w(t);
            let li = levy(t);
            let si = singular(t);
            if wi.len() != dim || li.len() != dim * dim || si.len() != dim * dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: wi.len(),
                });
            }
            let sym = |k: &[CMat], sign: f64| -> Vec<CMat> {
                let mut out = Vec::with_capacity(dim * dim);
                for mu in 0..dim {
                    for nu in 0..dim {
                        let mut x = k[mu * dim + nu].scale(0.5);
                        x.axpy(0.5 * sign, &k[nu * dim + mu]);
                        out.push(x);
                    }
                }
                out
            };
            ws.push(wi);
            ls.push(sym(&li, 1.0));
            ss.push(sym(&si, -1.0));
        }
        Ok(Self {
            dim,
            fiber,
            prefactor: CMat::identity(fiber),
            form,
            w: ws,
            levy: ls,
            singular: ss,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fiber(&self) -> usize {
        self.fiber
    }

    pub fn cells(&self) -> usize {
        self.w.len() - 1
    }

    pub fn form(&self) -> VolterraForm {
        self.form
    }

    pub fn prefactor(&self) -> &CMat {
        &self.prefactor
    }

    /// Same kernels with the Volterra part dropped.
    pub fn without_volterra(&self) -> KernelTriple {
        let mut k = self.clone();
        for w in &mut k.w {
            w.iter_mut().for_each(|x| *x = CMat::zeros(self.fiber));
        }
        k
    }

    /// Kernels of `∂_u(B^A(σ)v)` from those of `∂²U_{1,0}`:
    /// `R = U_{0,1}·K` on the Lévy and singular parts and the commutator
    /// Volterra form.
    pub fn b_frame(&self) -> Result<KernelTriple> {
        if self.form != VolterraForm::Ordered {
            return Err(Error::InvalidParameter("kernel triple is already in commutator form".into()));
        }
        let mut k = self.clone();
        k.prefactor = CMat::identity(self.fiber);
        k.form = VolterraForm::Commutator;
        Ok(k)
    }

    /// `K^V_{μν}(t_i, t_j)`.
    pub fn volterra(&self, mu: usize, nu: usize, i: usize, j: usize) -> CMat {
        let core = match self.form {
            VolterraForm::Ordered => {
                if i >= j {
                    self.w[i][mu].matmul(&self.w[j][nu])
                } else {
                    self.w[j][nu].matmul(&self.w[i][mu])
                }
            }
            VolterraForm::Commutator => {
                if i <= j {
                    self.w[j][nu].commutator(&self.w[i][mu])
                } else {
                    CMat::zeros(self.fiber)
                }
            }
        };
        self.prefactor.matmul(&core)
    }

    /// `K^L_{μν}(t_i)`.
    pub fn levy(&self, i: usize, mu: usize, nu: usize) -> CMat {
        self.prefactor.matmul(&self.levy[i][mu * self.dim + nu])
    }

    /// `K^S_{μν}(t_i)`.
    pub fn singular(&self, i: usize, mu: usize, nu: usize) -> CMat {
        self.prefactor.matmul(&self.singular[i][mu * self.dim + nu])
    }

    fn check_variation(&self, u: &Variation) -> Result<()> {
        if u.dim() != self.dim || u.cells() != self.cells() {
            return Err(Error::InvalidGrid("variation grid does not match the kernels".into()));
        }
        Ok(())
    }

    /// Volterra, Lévy and singular contributions to `Q(u, v)`; both
    /// variations must lie in E_0.
    pub fn bilinear_parts(&self, u: &Variation, v: &Variation) -> Result<[CMat; 3]> {
        self.check_variation(u)?;
        self.check_variation(v)?;
        u.require_endpoint_free()?;
        v.require_endpoint_free()?;
        Ok(self.bilinear_parts_unchecked(u, v))
    }

    /// `bilinear_parts` without the E_0 requirement, for synthetic kernels
    /// where the formula is used as a definition.
    pub fn bilinear_parts_unchecked(&self, u: &Variation, v: &Variation) -> [CMat; 3] {
        let m = self.cells();
        let n = self.fiber;
        let d = self.dim;
        let contract = |i: usize, x: &Variation| -> CMat {
            let mut acc = CMat::zeros(n);
            for (mu, xm) in x.node(i).iter().enumerate() {
                if *xm != 0.0 {
                    acc.axpy(*xm, &self.w[i][mu]);
                }
            }
            acc
        };
        let a: Vec<CMat> = (0..=m).map(|i| contract(i, u)).collect();
        let b: Vec<CMat> = (0..=m).map(|i| contract(i, v)).collect();
        let tw = trapezoid_weights(m);
        let h = 1.0 / m as f64;
        let cumulative = |f: &[CMat]| -> Vec<CMat> {
            let mut out = Vec::with_capacity(m + 1);
            let mut acc = CMat::zeros(n);
            out.push(acc.clone());
            for i in 1..=m {
                acc.axpy(0.5 * h, &f[i - 1]);
                acc.axpy(0.5 * h, &f[i]);
                out.push(acc.clone());
            }
            out
        };
        let mut volterra = CMat::zeros(n);
        match self.form {
            VolterraForm::Ordered => {
                let bc = cumulative(&b);
                let ac = cumulative(&a);
                for i in 0..=m {
                    volterra.axpy(tw[i], &a[i].matmul(&bc[i]));
                    volterra.axpy(tw[i], &b[i].matmul(&ac[i]));
                }
            }
            VolterraForm::Commutator => {
                let ac = cumulative(&a);
                for i in 0..=m {
                    volterra.axpy(tw[i], &b[i].commutator(&ac[i]));
                }
            }
        }
        let sw = simpson_weights(m).expect("validated grid");
        let mut levy = CMat::zeros(n);
        let mut singular = CMat::zeros(n);
        for i in 0..=m {
            let (ui, vi) = (u.node(i), v.node(i));
            let (du, dv) = (u.node_velocity(i), v.node_velocity(i));
            for mu in 0..d {
                for nu in 0..d {
                    let c = ui[mu] * vi[nu];
                    if c != 0.0 {
                        levy.axpy(sw[i] * c, &self.levy[i][mu * d + nu]);
                    }
                    let s = 0.5 * (du[mu] * vi[nu] + dv[mu] * ui[nu]);
                    if s != 0.0 {
                        singular.axpy(sw[i] * s, &self.singular[i][mu * d + nu]);
                    }
                }
            }
        }
        [
            self.prefactor.matmul(&volterra),
            self.prefactor.matmul(&levy),
            self.prefactor.matmul(&singular),
        ]
    }

    /// `Q(p_μf, p_μf)` for a scalar profile given by node values `f` and
    /// velocities `fdot`, without building variations.
    pub fn diagonal_profile(&self, mu: usize, f: &[f64], fdot: &[f64]) -> CMat {
        let m = self.cells();
        let n = self.fiber;
        let d = self.dim;
        let h = 1.0 / m as f64;
        let tw = trapezoid_weights(m);
        let sw = simpson_weights(m).expect("validated grid");
        let mut cum = CMat::zeros(n);
        let mut prev = CMat::zeros(n);
        let mut volterra = CMat::zeros(n);
        let mut rest = CMat::zeros(n);
        for i in 0..=m {
            let a = self.w[i][mu].scale(f[i]);
            if i > 0 {
                cum.axpy(0.5 * h, &prev);
                cum.axpy(0.5 * h, &a);
            }
            match self.form {
                VolterraForm::Ordered => volterra.axpy(2.0 * tw[i], &a.matmul(&cum)),
                VolterraForm::Commutator => volterra.axpy(tw[i], &a.commutator(&cum)),
            }
            rest.axpy(sw[i] * f[i] * f[i], &self.levy[i][mu * d + mu]);
            rest.axpy(sw[i] * f[i] * fdot[i], &self.singular[i][mu * d + mu]);
            prev = a;
        }
        volterra += &rest;
        self.prefactor.matmul(&volterra)
    }

    /// `Q(u, v) = Q^V + Q^L + Q^S` for `u, v ∈ E_0`.
    pub fn bilinear(&self, u: &Variation, v: &Variation) -> Result<CMat> {
        let [a, b, c] = self.bilinear_parts(u, v)?;
        Ok(a + b + c)
    }
}

/// A path-space 1-form `σ ↦ (u ↦ B(σ)u)`.
pub trait OneForm: Sync {
    fn apply(&self, curve: &Curve, u: &Variation) -> Result<CMat>;
}

/// `B^A` for a connection, recomputing transport on every call.
pub struct TransportOneForm<'a>(pub &'a Connection);

impl OneForm for TransportOneForm<'_> {
    fn apply(&self, curve: &Curve, u: &Variation) -> Result<CMat> {
        Ok(PathData::new(self.0, curve)?.one_form_b(u)?.into_entries())
    }
}

/// Non-closed 1-form `B(σ)u = (∫⟨Pσ(t), u(t)⟩dt)·X`. Its closedness
/// residual on `(u, v)` is `∫⟨(P − Pᵀ)u, v⟩dt·X`.
pub struct PlantedOneForm {
    /// Row-major `d × d` matrix P.
    pub p: Vec<f64>,
    pub x: CMat,
}

impl PlantedOneForm {
    fn pairing(&self, d: usize, a: impl Fn(usize) -> Vec<f64>, b: impl Fn(usize) -> Vec<f64>, m: usize) -> Result<f64> {
        let w = simpson_weights(m)?;
        let mut acc = 0.0;
        for (i, wi) in w.iter().enumerate() {
            let (ai, bi) = (a(i), b(i));
            let mut s = 0.0;
            for r in 0..d {
                for c in 0..d {
                    s += bi[r] * self.p[r * d + c] * ai[c];
                }
            }
            acc += wi * s;
        }
        Ok(acc)
    }

    /// `∫⟨(P − Pᵀ)u, v⟩dt·X`.
    pub fn planted_residual(&self, u: &Variation, v: &Variation) -> Result<CMat> {
        let d = u.dim();
        let m = u.cells();
        let a = self.pairing(d, |i| u.node(i).to_vec(), |i| v.node(i).to_vec(), m)?;
        let b = self.pairing(d, |i| v.node(i).to_vec(), |i| u.node(i).to_vec(), m)?;
        Ok(self.x.scale(a - b))
    }
}

impl OneForm for PlantedOneForm {
    fn apply(&self, curve: &Curve, u: &Variation) -> Result<CMat> {
        let d = curve.dim();
        if self.p.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: self.p.len(),
            });
        }
        let s = self.pairing(d, |i| curve.node(i).to_vec(), |i| u.node(i).to_vec(), curve.cells())?;
        Ok(self.x.scale(s))
    }
}

/// Step `base·(1 + ‖σ‖_∞)` used for functional finite differences.
pub fn functional_step(base: f64, curve: &Curve) -> f64 {
    let scale = (0..=curve.cells())
        .flat_map(|i| curve.node(i).iter().map(|v| v.abs()))
        .fold(0.0, f64::max);
    base * (1.0 + scale)
}

/// `∂_u(B(σ)v)` by central differences with one Richardson pass.
pub fn directional_derivative_of_form(form: &dyn OneForm, curve: &Curve, u: &Variation, v: &Variation, step: f64) -> Result<CMat> {
    try_central_derivative(|s| form.apply(&curve.displaced(&[(s, u)])?, v), step)
}

/// `∂_uB(σ)v − ∂_vB(σ)u + [B(σ)u, B(σ)v]` for `u, v ∈ E_0`.
pub fn closedness_residual(form: &dyn OneForm, curve: &Curve, u: &Variation, v: &Variation, step: f64) -> Result<CMat> {
    u.require_endpoint_free()?;
    v.require_endpoint_free()?;
    let duv = directional_derivative_of_form(form, curve, u, v, step)?;
    let dvu = directional_derivative_of_form(form, curve, v, u, step)?;
    let bu = form.apply(curve, u)?;
    let bv = form.apply(curve, v)?;
    Ok(duv - dvu + bu.commutator(&bv))
}

/// `B^A(σ)u = ∫₀¹h(σ^r)_{μν}u^μ(r)σ̇^ν(r)dr` with the path 2-form
/// `h(σ) = −U_{0,1}(σ)F(σ(1))U_{1,0}(σ)`, each `h(σ^r)` computed from a fresh
/// transport along the restricted curve.
pub fn one_form_b_from_two_form(conn: &Connection, curve: &Curve, u: &Variation) -> Result<LieMatrix> {
    u.require_endpoint_free()?;
    let m = curve.cells();
    let d = curve.dim();
    let w = simpson_weights(m)?;
    let terms: Vec<Result<CMat>> = (0..=m)
        .into_par_iter()
        .map(|i| {
            let r = i as f64 / m as f64;
            let ui = u.node(i);
            if ui.iter().all(|x| *x == 0.0) {
                return Ok(CMat::zeros(conn.fiber()));
            }
            let restricted = curve.restrict(r)?;
            let table = TransportTable::new(conn, &restricted)?;
            let f = curvature(conn, curve.node(i));
            let v = curve.node_velocity(i);
            let mut x = CMat::zeros(conn.fiber());
            for mu in 0..d {
                for nu in 0..d {
                    let c = ui[mu] * v[nu];
                    if c != 0.0 {
                        x.axpy(-c, &f[mu * d + nu]);
                    }
                }
            }
            Ok(x.conjugate_by(table.inverse_holonomy(), table.holonomy()))
        })
        .collect();
    let mut acc = CMat::zeros(conn.fiber());
    for (wi, t) in w.iter().zip(terms) {
        acc.axpy(*wi, &t?);
    }
    Ok(LieMatrix::general(acc))
}

/// Tags a computed `B^A(σ)u` as u(N)- or su(N)-valued.
pub fn tag_one_form(b: LieMatrix, traceless: bool, tolerance: f64) -> Result<LieMatrix> {
    let tag = if traceless { GroupTag::Su } else { GroupTag::U };
    LieMatrix::with_tolerance(b.into_entries(), tag, tolerance)
}
