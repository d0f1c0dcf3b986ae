//! Higgs and Dirac fields lifted to path space,
//! `Φ^{A,φ}(σ) = U_{0,1}φ(σ(1))U_{1,0}` and `Ψ^{A,ψ}(σ) = (U_{0,1} ⊗ I₄)ψ(σ(1))`,
//! and residuals of the Yang–Mills–Higgs and Yang–Mills–Dirac systems, both
//! pointwise and in their path-space forms.
//!
//! Path-space residuals use the Minkowski metric. Integrals over the
//! reparametrized curves `σ^r` are taken at grid-aligned `r` and read every
//! transport from the single table of `σ`, since `U_{t,s}(σ^r) = U_{rt,rs}(σ)`.

use serde::{Deserialize, Serialize};

use crate::algebra::gamma::dirac_current;
use crate::algebra::lie::project_su_raw;
use crate::algebra::{CMat, GammaSet, GroupTag, LieMatrix, Spinor, I};
use crate::error::{Error, Result};
use crate::geometry::{covariant_derivative, covariant_hessian, ym_residual, Connection, DiracField, HiggsField, Metric, NESTED_FD_STEP};
use crate::levy::{endpoint_derivation, endpoint_second_derivation, levy_divergence_b, levy_operator_on_transport, TraceMode};
use crate::numerics::{simpson_weights, try_central_derivative};
use crate::paths::{Curve, Variation};
use crate::transport::{closedness_residual, functional_step, holonomy_with_inverse, PathData, TransportOneForm, FUNCTIONAL_FD_STEP};

/// Mass and quartic coupling of the Higgs potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HiggsParams {
    pub m: f64,
    pub l: f64,
}

impl HiggsParams {
    pub fn new(m: f64, l: f64) -> Result<Self> {
        let p = Self { m, l };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m >= 0.0 && self.l >= 0.0 && self.m.is_finite() && self.l.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Higgs mass and coupling must be finite and ≥ 0, got m = {}, l = {}",
                self.m, self.l
            )));
        }
        Ok(())
    }

    /// `(m² − l·tr(φ*φ))φ`.
    fn potential_term(&self, phi: &CMat) -> CMat {
        let norm2 = phi.adjoint().matmul(phi).trace().re;
        phi.scale(self.m * self.m - self.l * norm2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResidualValue {
    Matrix { value: CMat },
    Spinor { value: Spinor },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualComponent {
    pub name: String,
    /// Frobenius norm of the matrix, Euclidean norm of the spinor.
    pub norm: f64,
    pub value: ResidualValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "at", rename_all = "snake_case")]
pub enum Location {
    Point { x: Vec<f64> },
    Curve { label: String, cells: usize, endpoint: Vec<f64> },
}

/// Named residual components evaluated at a point or along a curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorResidual {
    pub location: Location,
    pub components: Vec<ResidualComponent>,
}

impl SectorResidual {
    fn at_point(x: &[f64]) -> Self {
        Self {
            location: Location::Point { x: x.to_vec() },
            components: Vec::new(),
        }
    }

    fn along(curve: &Curve) -> Self {
        Self {
            location: Location::Curve {
                label: String::new(),
                cells: curve.cells(),
                endpoint: curve.endpoint().to_vec(),
            },
            components: Vec::new(),
        }
    }

    /// Sets the label of a curve location; no effect on point locations.
    pub fn labelled(mut self, name: &str) -> Self {
        if let Location::Curve { label, .. } = &mut self.location {
            *label = name.to_string();
        }
        self
    }

    fn push_matrix(&mut self, name: impl Into<String>, value: CMat) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::InvalidParameter("residual has non-finite entries".into()));
        }
        self.components.push(ResidualComponent {
            name: name.into(),
            norm: value.frobenius(),
            value: ResidualValue::Matrix { value },
        });
        Ok(())
    }

    fn push_spinor(&mut self, name: impl Into<String>, value: Spinor) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::InvalidParameter("residual has non-finite entries".into()));
        }
        self.components.push(ResidualComponent {
            name: name.into(),
            norm: value.norm(),
            value: ResidualValue::Spinor { value },
        });
        Ok(())
    }

    pub fn component(&self, name: &str) -> Option<&ResidualComponent> {
        self.components.iter().find(|c| c.name == name)
    }

    pub fn norm(&self, name: &str) -> Result<f64> {
        self.component(name)
            .map(|c| c.norm)
            .ok_or_else(|| Error::InvalidParameter(format!("no residual component named {name}")))
    }

    pub fn matrix(&self, name: &str) -> Option<&CMat> {
        match &self.component(name)?.value {
            ResidualValue::Matrix { value } => Some(value),
            ResidualValue::Spinor { .. } => None,
        }
    }

    pub fn spinor(&self, name: &str) -> Option<&Spinor> {
        match &self.component(name)?.value {
            ResidualValue::Spinor { value } => Some(value),
            ResidualValue::Matrix { .. } => None,
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.components.iter().map(|c| c.norm).fold(0.0, f64::max)
    }
}

fn check_dims(conn: &Connection, field_dim: usize, field_fiber: usize) -> Result<()> {
    if field_dim != conn.dim() {
        return Err(Error::DimensionMismatch {
            expected: conn.dim(),
            got: field_dim,
        });
    }
    if field_fiber != conn.fiber() {
        return Err(Error::DimensionMismatch {
            expected: conn.fiber(),
            got: field_fiber,
        });
    }
    Ok(())
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

fn unit(d: usize, mu: usize) -> Vec<f64> {
    let mut h = vec![0.0; d];
    h[mu] = 1.0;
    h
}

fn higgs_on_table(data: &PathData, phi: &HiggsField, i: usize) -> CMat {
    let x = data.curve().node(i);
    phi.value(x).conjugate_by(data.table().inverse_at(i), data.table().at(i))
}

/// `Φ^{A,φ}(σ)`, tagged su(N) when `φ(σ(1))` is.
pub fn higgs_functional(conn: &Connection, phi: &HiggsField, curve: &Curve) -> Result<LieMatrix> {
    check_dims(conn, phi.dim(), phi.fiber())?;
    check_curve(conn, curve)?;
    let (u, inv, drift) = holonomy_with_inverse(conn, curve)?;
    Ok(tag_higgs(phi.value(curve.endpoint()).conjugate_by(&inv, &u), drift))
}

fn tag_higgs(value: CMat, drift: f64) -> LieMatrix {
    let tolerance = (1e-12f64).max(10.0 * drift) * (1.0 + value.max_norm());
    LieMatrix::with_tolerance(value.clone(), GroupTag::Su, tolerance).unwrap_or_else(|_| LieMatrix::general(value))
}

/// `Ψ^{A,ψ}(σ)`.
pub fn dirac_functional(conn: &Connection, psi: &DiracField, curve: &Curve) -> Result<Spinor> {
    check_dims(conn, psi.dim(), psi.fiber())?;
    check_curve(conn, curve)?;
    let (_, inv, _) = holonomy_with_inverse(conn, curve)?;
    Ok(psi.value(curve.endpoint()).colour_mul(&inv))
}

fn dirac_on_table(data: &PathData, psi: &DiracField, i: usize) -> Spinor {
    psi.value(data.curve().node(i)).colour_mul(data.table().inverse_at(i))
}

/// The Yang–Mills source `−pr_{su(N)}(i·ψ̄γ_νψ)`.
pub fn dirac_source(psi: &Spinor, nu: usize) -> Result<LieMatrix> {
    if nu > 3 {
        return Err(Error::IndexOutOfRange { index: nu, dim: 4 });
    }
    let j = project_su_raw(&dirac_current(psi, nu, &GammaSet::dirac())).scale(-1.0);
    let tolerance = 1e-13 * (1.0 + psi.norm() * psi.norm());
    LieMatrix::with_tolerance(j, GroupTag::Su, tolerance)
}

/// Pointwise Yang–Mills–Higgs residuals at `x`:
/// `higgs_eq1 = g^{μν}∇_μ∇_νφ − (m² − l·tr(φ*φ))φ` and, per `ν`,
/// `higgs_eq2[ν] = g^{λμ}∇_λF_{μν} − [φ, ∇_νφ]`.
pub fn ymh_residual_pointwise(conn: &Connection, phi: &HiggsField, p: &HiggsParams, x: &[f64], metric: &Metric) -> Result<SectorResidual> {
    p.validate()?;
    check_dims(conn, phi.dim(), phi.fiber())?;
    let d = conn.dim();
    let value = phi.value(x);
    let hess = covariant_hessian(conn, phi, x);
    let mut box_phi = CMat::zeros(conn.fiber());
    for mu in 0..d {
        box_phi.axpy(metric.diag(mu), &hess[mu * d + mu]);
    }
    let mut out = SectorResidual::at_point(x);
    out.push_matrix("higgs_eq1", &box_phi - &p.potential_term(&value))?;
    for nu in 0..d {
        let current = value.commutator(&covariant_derivative(conn, phi, x, nu)?);
        out.push_matrix(format!("higgs_eq2[{nu}]"), ym_residual(conn, metric, x, nu, Some(&current))?)?;
    }
    Ok(out)
}

/// `η^{μν}D_μD_νΦ(σ)` by nested endpoint derivations of the Higgs functional.
fn higgs_endpoint_laplacian(conn: &Connection, phi: &HiggsField, curve: &Curve, metric: &Metric) -> Result<CMat> {
    let functional = |s: &Curve| higgs_functional(conn, phi, s).map(LieMatrix::into_entries);
    let d = conn.dim();
    let mut out = CMat::zeros(conn.fiber());
    for mu in 0..d {
        let h = unit(d, mu);
        let dd = endpoint_second_derivation(&functional, curve, &h, &h, FUNCTIONAL_FD_STEP, NESTED_FD_STEP)?;
        out.axpy(metric.diag(mu), &dd.value);
    }
    Ok(out)
}

/// `∫₀¹[Φ(σ^r), D_νΦ(σ^r)]σ̇^ν(r)dr`, with `D_νΦ(σ^r) = U_{0,r}∇_νφ(σ(r))U_{r,0}`.
fn higgs_current_integral(data: &PathData, phi: &HiggsField) -> Result<CMat> {
    let m = data.cells();
    let w = simpson_weights(m)?;
    let conn = data.connection();
    let mut out = CMat::zeros(data.fiber());
    for (i, wi) in w.iter().enumerate() {
        let x = data.curve().node(i);
        let v = data.velocity(i);
        let value = phi.value(x);
        let mut j = CMat::zeros(data.fiber());
        for (nu, vn) in v.iter().enumerate() {
            if *vn != 0.0 {
                j.axpy(*vn, &value.commutator(&covariant_derivative(conn, phi, x, nu)?));
            }
        }
        out.axpy(*wi, &j.conjugate_by(data.table().inverse_at(i), data.table().at(i)));
    }
    Ok(out)
}

/// Path-space Yang–Mills–Higgs residuals along `σ`:
/// `higgs_eq1 = η^{μν}D_μD_νΦ − (m² − l·tr(Φ*Φ))Φ` and
/// `higgs_eq2 = □_LU_{1,0} + U_{1,0}∫₀¹[Φ(σ^r), D_νΦ(σ^r)]σ̇^ν(r)dr`.
pub fn ymh_residual_pathspace(conn: &Connection, phi: &HiggsField, p: &HiggsParams, curve: &Curve) -> Result<SectorResidual> {
    p.validate()?;
    check_dims(conn, phi.dim(), phi.fiber())?;
    check_curve(conn, curve)?;
    let eta = Metric::minkowski(conn.dim());
    let data = PathData::new(conn, curve)?;
    let big_phi = higgs_on_table(&data, phi, curve.cells());
    let mut out = SectorResidual::along(curve);
    let lap = higgs_endpoint_laplacian(conn, phi, curve, &eta)?;
    out.push_matrix("higgs_eq1", &lap - &p.potential_term(&big_phi))?;
    let box_u = levy_operator_on_transport(&data, &eta, &TraceMode::Integral)?;
    let source = data.table().holonomy().matmul(&higgs_current_integral(&data, phi)?);
    out.push_matrix("higgs_eq2", &box_u + &source)?;
    Ok(out)
}

/// The four equations of the Higgs system for `B = B^A`, `Φ = Φ^{A,φ}`:
/// `closedness` (`∂_uBv − ∂_vBu + [Bu, Bv]`), `divergence`
/// (`div^η_LB + ∫₀¹[Φ(σ^r), D_νΦ(σ^r)]σ̇^ν dr`), `higgs_eq1` and
/// `compatibility` (`∂_uΦ + [Bu, Φ]`). Requires `u, v ∈ E_0`.
pub fn ymh_system_b(
    conn: &Connection,
    phi: &HiggsField,
    p: &HiggsParams,
    curve: &Curve,
    u: &Variation,
    v: &Variation,
) -> Result<SectorResidual> {
    p.validate()?;
    check_dims(conn, phi.dim(), phi.fiber())?;
    check_curve(conn, curve)?;
    u.require_endpoint_free()?;
    v.require_endpoint_free()?;
    let eta = Metric::minkowski(conn.dim());
    let data = PathData::new(conn, curve)?;
    let step = functional_step(FUNCTIONAL_FD_STEP, curve);
    let mut out = SectorResidual::along(curve);
    out.push_matrix("closedness", closedness_residual(&TransportOneForm(conn), curve, u, v, step)?)?;
    let div = levy_divergence_b(&data, &eta, &TraceMode::Integral)?;
    out.push_matrix("divergence", &div + &higgs_current_integral(&data, phi)?)?;
    let big_phi = higgs_on_table(&data, phi, curve.cells());
    let lap = higgs_endpoint_laplacian(conn, phi, curve, &eta)?;
    out.push_matrix("higgs_eq1", &lap - &p.potential_term(&big_phi))?;
    out.push_matrix("compatibility", higgs_compatibility(conn, phi, &data, u, step)?)?;
    Ok(out)
}

/// `∂_uΦ^{A,φ}(σ) + [B^A(σ)u, Φ^{A,φ}(σ)]` for `u ∈ E_0`; vanishes for every
/// pair `(A, φ)`.
pub fn higgs_compatibility_residual(conn: &Connection, phi: &HiggsField, curve: &Curve, u: &Variation) -> Result<CMat> {
    check_dims(conn, phi.dim(), phi.fiber())?;
    check_curve(conn, curve)?;
    u.require_endpoint_free()?;
    let data = PathData::new(conn, curve)?;
    higgs_compatibility(conn, phi, &data, u, functional_step(FUNCTIONAL_FD_STEP, curve))
}

fn higgs_compatibility(conn: &Connection, phi: &HiggsField, data: &PathData, u: &Variation, step: f64) -> Result<CMat> {
    let curve = data.curve();
    let du = try_central_derivative(
        |s| higgs_functional(conn, phi, &curve.displaced(&[(s, u)])?).map(LieMatrix::into_entries),
        step,
    )?;
    let bu = data.one_form_b(u)?.into_entries();
    Ok(&du + &bu.commutator(&higgs_on_table(data, phi, curve.cells())))
}

/// `∂_uΨ^{A,ψ}(σ) + (B^A(σ)u)Ψ^{A,ψ}(σ)` for `u ∈ E_0`; vanishes for every
/// pair `(A, ψ)`.
pub fn dirac_compatibility_residual(conn: &Connection, psi: &DiracField, curve: &Curve, u: &Variation) -> Result<Spinor> {
    check_dims(conn, psi.dim(), psi.fiber())?;
    check_curve(conn, curve)?;
    u.require_endpoint_free()?;
    let data = PathData::new(conn, curve)?;
    dirac_compatibility(conn, psi, &data, u, functional_step(FUNCTIONAL_FD_STEP, curve))
}

fn dirac_compatibility(conn: &Connection, psi: &DiracField, data: &PathData, u: &Variation, step: f64) -> Result<Spinor> {
    let curve = data.curve();
    let du = try_central_derivative(|s| dirac_functional(conn, psi, &curve.displaced(&[(s, u)])?), step)?;
    let bu = data.one_form_b(u)?.into_entries();
    Ok(&du + &dirac_on_table(data, psi, curve.cells()).colour_mul(&bu))
}

fn require_spacetime(conn: &Connection) -> Result<()> {
    if conn.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: conn.dim(),
        });
    }
    Ok(())
}

/// `(I_N ⊗ γ^μ)X_μ + i·m·ψ` for the four spinors `X_μ`.
fn dirac_operator(gammas: &GammaSet, derivs: &[Spinor], psi: &Spinor, mass: f64) -> Spinor {
    let mut out = psi.scale_c(I * mass);
    for (mu, x) in derivs.iter().enumerate() {
        out = &out + &x.spin_mul(gammas.upper(mu));
    }
    out
}

/// Pointwise Yang–Mills–Dirac residuals at `x`: the Dirac spinor
/// `(I_N ⊗ γ^μ)(∂_μ + A_μ ⊗ I₄)ψ + i·m·ψ` and, per `ν`,
/// `source[ν] = η^{λμ}∇_λF_{μν} + pr_{su(N)}(i·ψ̄γ_νψ)`.
pub fn qcd_residual_pointwise(conn: &Connection, psi: &DiracField, mass: f64, x: &[f64]) -> Result<SectorResidual> {
    require_spacetime(conn)?;
    check_dims(conn, psi.dim(), psi.fiber())?;
    let gammas = GammaSet::dirac();
    let eta = Metric::minkowski(4);
    let value = psi.value(x);
    let a = conn.potential(x);
    let derivs: Vec<Spinor> = psi
        .partials(x)
        .iter()
        .zip(&a)
        .map(|(dp, am)| dp + &value.colour_mul(am))
        .collect();
    let mut out = SectorResidual::at_point(x);
    out.push_spinor("dirac", dirac_operator(&gammas, &derivs, &value, mass))?;
    for nu in 0..4 {
        let j = dirac_source(&value, nu)?.into_entries();
        out.push_matrix(format!("source[{nu}]"), ym_residual(conn, &eta, x, nu, Some(&j))?)?;
    }
    Ok(out)
}

/// `pr_{su(N)}(i∫₀¹Ψ̄(σ^r)γ_νΨ(σ^r)σ̇^ν(r)dr)`.
fn dirac_current_integral(data: &PathData, psi: &DiracField) -> Result<CMat> {
    let gammas = GammaSet::dirac();
    let w = simpson_weights(data.cells())?;
    let mut out = CMat::zeros(data.fiber());
    for (i, wi) in w.iter().enumerate() {
        let big_psi = dirac_on_table(data, psi, i);
        for (nu, vn) in data.velocity(i).iter().enumerate() {
            if *vn != 0.0 {
                out.axpy(wi * vn, &dirac_current(&big_psi, nu, &gammas));
            }
        }
    }
    Ok(project_su_raw(&out))
}

/// Path-space Yang–Mills–Dirac residuals along `σ`: `dirac`
/// (`(I_N ⊗ γ^μ)D_μΨ + i·m·Ψ`), `transport`
/// (`□_LU_{1,0} − U_{1,0}·pr_{su(N)}(i∫Ψ̄γ_νΨσ̇^ν dr)`), `divergence`
/// (`div^η_LB − pr_{su(N)}(i∫Ψ̄γ_νΨσ̇^ν dr)`) and `compatibility`
/// (`∂_uΨ + (Bu)Ψ`, requires `u ∈ E_0`).
pub fn qcd_residual_pathspace(conn: &Connection, psi: &DiracField, mass: f64, curve: &Curve, u: &Variation) -> Result<SectorResidual> {
    require_spacetime(conn)?;
    check_dims(conn, psi.dim(), psi.fiber())?;
    check_curve(conn, curve)?;
    u.require_endpoint_free()?;
    let gammas = GammaSet::dirac();
    let eta = Metric::minkowski(4);
    let data = PathData::new(conn, curve)?;
    let big_psi = dirac_on_table(&data, psi, curve.cells());
    let functional = |s: &Curve| dirac_functional(conn, psi, s);
    let derivs = (0..4)
        .map(|mu| endpoint_derivation(&functional, curve, &unit(4, mu), FUNCTIONAL_FD_STEP).map(|e| e.value))
        .collect::<Result<Vec<_>>>()?;
    let mut out = SectorResidual::along(curve);
    out.push_spinor("dirac", dirac_operator(&gammas, &derivs, &big_psi, mass))?;
    let current = dirac_current_integral(&data, psi)?;
    let box_u = levy_operator_on_transport(&data, &eta, &TraceMode::Integral)?;
    out.push_matrix("transport", &box_u - &data.table().holonomy().matmul(&current))?;
    let div = levy_divergence_b(&data, &eta, &TraceMode::Integral)?;
    out.push_matrix("divergence", &div - &current)?;
    let step = functional_step(FUNCTIONAL_FD_STEP, curve);
    out.push_spinor("compatibility", dirac_compatibility(conn, psi, &data, u, step)?)?;
    Ok(out)
}
