use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::checks::CheckId;
use super::config::{CampaignConfig, SCHEMA_VERSION};
use super::plot::svg_loglog;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveResidual {
    pub curve: usize,
    pub residual: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub diagnostics: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub curve: usize,
    pub n: usize,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: CheckId,
    pub tag: String,
    pub tolerance: f64,
    pub max_residual: f64,
    pub status: Status,
    pub residuals: Vec<CurveResidual>,
    /// Conditions besides `max_residual ≤ tolerance` that failed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<SeriesPoint>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub schema_version: u32,
    pub command: String,
    pub config: CampaignConfig,
    pub status: Status,
    pub checks: Vec<CheckReport>,
    pub wall_time_s: f64,
}

impl CampaignReport {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn check(&self, id: CheckId) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.check == id)
    }

    /// The JSON text with every `wall_time_s` zeroed, for comparisons.
    pub fn canonical_json(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.wall_time_s = 0.0;
        for c in &mut copy.checks {
            c.wall_time_s = 0.0;
        }
        Ok(serde_json::to_string_pretty(&copy)?)
    }

    /// Writes `report.json`, `residuals.csv`, one `series_<ID>.csv` per
    /// check with a series and, with `svg`, a plot next to each series.
    pub fn write(&self, dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let json = dir.join("report.json");
        fs::write(&json, serde_json::to_string_pretty(self)? + "\n")?;
        written.push(json);

        let path = dir.join("residuals.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["check", "curve", "residual", "tolerance", "status"])?;
        for c in &self.checks {
            for r in &c.residuals {
                let status = if r.residual <= c.tolerance { "PASS" } else { "FAIL" };
                w.write_record([
                    c.check.as_str().to_string(),
                    r.curve.to_string(),
                    format!("{:.6e}", r.residual),
                    format!("{:.1e}", c.tolerance),
                    status.to_string(),
                ])?;
            }
        }
        w.flush()?;
        written.push(path);

        for c in self.checks.iter().filter(|c| !c.series.is_empty()) {
            let path = dir.join(format!("series_{}.csv", c.check));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["curve", "n", "error"])?;
            for p in &c.series {
                w.write_record([p.curve.to_string(), p.n.to_string(), format!("{:.6e}", p.error)])?;
            }
            w.flush()?;
            written.push(path);
            if svg {
                let mut lines: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
                for p in &c.series {
                    lines.entry(p.curve).or_default().push((p.n as f64, p.error));
                }
                let lines: Vec<(String, Vec<(f64, f64)>)> = lines.into_iter().map(|(k, v)| (format!("curve {k}"), v)).collect();
                let path = dir.join(format!("series_{}.svg", c.check));
                fs::write(&path, svg_loglog(&format!("{}: {}", c.check, c.tag), "n", "error", &lines))?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

/// One row of the aggregated summary.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub source: String,
    pub check: CheckId,
    pub tag: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub status: Status,
}

fn collect_json(path: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
        entries.sort();
        for e in entries {
            if e.is_dir() {
                collect_json(&e, out)?;
            } else if e.extension().is_some_and(|x| x == "json") {
                out.push(e);
            }
        }
        Ok(())
    } else if path.is_file() {
        out.push(path.to_path_buf());
        Ok(())
    } else {
        Err(Error::Report(format!("{}: no such file or directory", path.display())))
    }
}

/// Reads every JSON report under `paths` (files or directories, searched
/// recursively) into summary rows with failures first.
pub fn aggregate(paths: &[PathBuf]) -> Result<Vec<SummaryRow>> {
    let mut files = Vec::new();
    for p in paths {
        collect_json(p, &mut files)?;
    }
    if files.is_empty() {
        return Err(Error::Report("no reports found".into()));
    }
    let mut rows = Vec::new();
    for f in files {
        let text = fs::read_to_string(&f)?;
        let report: CampaignReport =
            serde_json::from_str(&text).map_err(|e| Error::Report(format!("{}: not a campaign report ({e})", f.display())))?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::Report(format!(
                "{}: schema version {} (expected {SCHEMA_VERSION})",
                f.display(),
                report.schema_version
            )));
        }
        for c in report.checks {
            rows.push(SummaryRow {
                source: format!("{}", f.display()),
                check: c.check,
                tag: c.tag,
                max_residual: c.max_residual,
                tolerance: c.tolerance,
                status: c.status,
            });
        }
    }
    rows.sort_by_key(|r| r.status != Status::Fail);
    Ok(rows)
}

pub fn format_summary(rows: &[SummaryRow]) -> String {
    let tag_width = rows.iter().map(|r| r.tag.chars().count()).max().unwrap_or(0).max(3);
    let mut out = format!(
        "{:<6} {:<13} {:<tag_width$} {:>12} {:>10}  {}\n",
        "status", "check", "statement", "max residual", "tolerance", "report"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<6} {:<13} {:<tag_width$} {:>12.3e} {:>10.1e}  {}\n",
            r.status.as_str(),
            r.check.as_str(),
            r.tag,
            r.max_residual,
            r.tolerance,
            r.source
        ));
    }
    out
}
