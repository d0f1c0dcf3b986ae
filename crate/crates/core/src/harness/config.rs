use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::checks::CheckId;
use crate::algebra::{su_basis, CMat};
use crate::error::{Error, Result};
use crate::geometry::{CatalogSpec, Connection, DiracSpec, HiggsSpec, MetricKind};
use crate::levy::{Basis, TraceConfig};
use crate::paths::{random_curve, Curve, Smoothness};
use crate::sectors::HiggsParams;
use crate::transport::{KernelTriple, VolterraForm};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveEnsemble {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_smoothness")]
    pub smoothness: Smoothness,
    /// Grid cells M.
    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_count() -> usize {
    4
}
fn default_smoothness() -> Smoothness {
    Smoothness::Fourier(3)
}
fn default_cells() -> usize {
    1024
}
fn default_amplitude() -> f64 {
    0.5
}

impl Default for CurveEnsemble {
    fn default() -> Self {
        Self {
            count: default_count(),
            seed: 0,
            smoothness: default_smoothness(),
            cells: default_cells(),
            amplitude: default_amplitude(),
        }
    }
}

impl CurveEnsemble {
    /// Curve `i` uses seed `seed + i`.
    pub fn build(&self, dim: usize) -> Result<Vec<Curve>> {
        (0..self.count)
            .map(|i| random_curve(self.seed.wrapping_add(i as u64), self.smoothness, self.cells, dim, self.amplitude))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HiggsSection {
    pub field: Option<HiggsSpec>,
    #[serde(default = "default_higgs_m")]
    pub m: f64,
    #[serde(default = "default_higgs_l")]
    pub l: f64,
}

fn default_higgs_m() -> f64 {
    0.5
}
fn default_higgs_l() -> f64 {
    0.25
}

impl Default for HiggsSection {
    fn default() -> Self {
        Self {
            field: None,
            m: default_higgs_m(),
            l: default_higgs_l(),
        }
    }
}

impl HiggsSection {
    pub fn params(&self) -> Result<HiggsParams> {
        HiggsParams::new(self.m, self.l)
    }

    /// The configured field, or a seeded random polynomial matching the
    /// connection.
    pub fn spec(&self, conn: &Connection) -> HiggsSpec {
        self.field.clone().unwrap_or(HiggsSpec::RandomPolynomial {
            dim: conn.dim(),
            fiber: conn.fiber(),
            seed: 1,
            scale: 0.5,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiracSection {
    pub field: Option<DiracSpec>,
    #[serde(default = "default_mass")]
    pub mass: f64,
}

fn default_mass() -> f64 {
    0.5
}

impl Default for DiracSection {
    fn default() -> Self {
        Self {
            field: None,
            mass: default_mass(),
        }
    }
}

impl DiracSection {
    pub fn spec(&self, conn: &Connection) -> DiracSpec {
        self.field.clone().unwrap_or(DiracSpec::RandomPolynomial {
            fiber: conn.fiber(),
            seed: 1,
            scale: 0.5,
        })
    }
}

/// Synthetic kernel triple for trace-convergence runs, with factors
/// `W_μ(t) = (1 + μt)T_{μ mod 3}`, `K^L_{μν} = δ_{μν}(1 + t² + μ/4)T_1` and
/// `K^S_{01} = cos(t)T_2` in su(2); each part can be switched off.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    #[serde(default = "default_kernel_dim")]
    pub dim: usize,
    #[serde(default = "default_kernel_cells")]
    pub cells: usize,
    #[serde(default = "yes")]
    pub volterra: bool,
    #[serde(default = "yes")]
    pub levy: bool,
    #[serde(default = "yes")]
    pub singular: bool,
}

fn default_kernel_dim() -> usize {
    2
}
fn default_kernel_cells() -> usize {
    16384
}
fn yes() -> bool {
    true
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            dim: default_kernel_dim(),
            cells: default_kernel_cells(),
            volterra: true,
            levy: true,
            singular: true,
        }
    }
}

impl KernelSpec {
    pub fn build(&self) -> Result<KernelTriple> {
        let t = su_basis(2);
        let d = self.dim;
        let zeros = || vec![CMat::zeros(2); d * d];
        KernelTriple::synthetic(
            d,
            2,
            self.cells,
            VolterraForm::Ordered,
            |s| {
                (0..d)
                    .map(|mu| if self.volterra { t[mu % 3].scale(1.0 + mu as f64 * s) } else { CMat::zeros(2) })
                    .collect()
            },
            |s| {
                let mut k = zeros();
                if self.levy {
                    for mu in 0..d {
                        k[mu * d + mu] = t[0].scale(1.0 + s * s + mu as f64 / 4.0);
                    }
                }
                k
            },
            |s| {
                let mut k = zeros();
                if self.singular && d > 1 {
                    k[1] = t[1].scale(s.cos());
                }
                k
            },
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonConvergencePolicy {
    /// Stop the campaign (exit status 3).
    #[default]
    Abort,
    /// Record the check as failed and continue.
    Fail,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub svg: bool,
}

/// A verification campaign as read from a TOML (or JSON) file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub connection: Option<CatalogSpec>,
    #[serde(default = "default_metric")]
    pub metric: MetricKind,
    #[serde(default)]
    pub curves: CurveEnsemble,
    pub trace: Option<TraceConfig>,
    /// Check ids, or `["all"]`.
    #[serde(default = "default_checks")]
    pub checks: Vec<String>,
    /// Overrides of the default tolerance per check id.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub higgs: HiggsSection,
    #[serde(default)]
    pub dirac: DiracSection,
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub nonconvergence: NonConvergencePolicy,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_name() -> String {
    "campaign".into()
}
fn default_metric() -> MetricKind {
    MetricKind::Euclidean
}
fn default_checks() -> Vec<String> {
    vec!["all".into()]
}

impl CampaignConfig {
    /// Reads `.json` files as JSON and everything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let cfg = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
        .map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.curves.count == 0 {
            return Err(Error::Config("curves.count must be positive".into()));
        }
        if !(self.curves.amplitude >= 0.0 && self.curves.amplitude.is_finite()) {
            return Err(Error::Config("curves.amplitude must be finite and non-negative".into()));
        }
        for (id, tol) in &self.tolerances {
            id.parse::<CheckId>()?;
            if !(*tol > 0.0 && tol.is_finite()) {
                return Err(Error::Config(format!("tolerance for {id} must be positive, got {tol}")));
            }
        }
        for id in &self.checks {
            if id != "all" {
                id.parse::<CheckId>()?;
            }
        }
        if let Some(t) = &self.trace {
            t.validate()?;
        }
        self.higgs.params()?;
        if !(self.dirac.mass >= 0.0 && self.dirac.mass.is_finite()) {
            return Err(Error::Config("dirac.mass must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn connection(&self) -> Result<Connection> {
        self.connection
            .as_ref()
            .ok_or_else(|| Error::Config("missing [connection] section".into()))?
            .build()
    }

    pub fn trace_config(&self) -> TraceConfig {
        self.trace.clone().unwrap_or(TraceConfig::new(Basis::Sin, self.metric, 256))
    }

    pub fn tolerance(&self, id: CheckId) -> f64 {
        self.tolerances.get(id.as_str()).copied().unwrap_or(id.default_tolerance())
    }
}
