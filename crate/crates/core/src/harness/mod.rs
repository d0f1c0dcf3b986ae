//! Verification campaigns: configuration, the check catalogue, JSON/CSV
//! reports and the summary table behind the `levygauge` command.

pub mod checks;
pub mod config;
pub mod plot;
pub mod report;

use std::time::Instant;

use rayon::prelude::*;

pub use checks::{check_table, Campaign, CheckId, CurveOutcome};
pub use config::{CampaignConfig, KernelSpec, NonConvergencePolicy, SCHEMA_VERSION};
pub use report::{aggregate, format_summary, CampaignReport, CheckReport, CurveResidual, SeriesPoint, Status, SummaryRow};

use crate::error::{Error, Result};
use crate::levy::{trace_gap, Basis, TraceConfig};

/// Exit status for a finished run or an error.
pub fn exit_code(outcome: &Result<bool>) -> u8 {
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Error::NonConvergence(_) | Error::Drift { .. }) => 3,
        Err(_) => 2,
    }
}

/// Thread count from the flag, then `LEVYGAUGE_THREADS`, else `None`
/// (rayon's default).
pub fn resolve_threads(flag: Option<usize>, env: Option<&str>) -> Result<Option<usize>> {
    if let Some(k) = flag {
        return if k == 0 { Err(Error::Config("--threads must be positive".into())) } else { Ok(Some(k)) };
    }
    match env.map(str::trim).filter(|s| !s.is_empty()) {
        None => Ok(None),
        Some(s) => match s.parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(Error::Config(format!("LEVYGAUGE_THREADS must be a positive integer, got `{s}`"))),
        },
    }
}

/// Checks selected by the config; `all` expands to those applicable to
/// the connection, explicit ids must apply.
pub fn selected_checks(cfg: &CampaignConfig, campaign: &Campaign) -> Result<Vec<CheckId>> {
    let mut ids = Vec::new();
    for name in &cfg.checks {
        if name == "all" {
            ids.extend(CheckId::ALL.iter().copied().filter(|c| c.applies_to(&campaign.conn)));
        } else {
            let id: CheckId = name.parse()?;
            if !id.applies_to(&campaign.conn) {
                return Err(Error::Config(format!("check {id} does not apply to connection `{}`", campaign.conn.name())));
            }
            ids.push(id);
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    ids.retain(|c| seen.insert(*c));
    Ok(ids)
}

fn run_check(campaign: &Campaign, id: CheckId, policy: NonConvergencePolicy) -> Result<CheckReport> {
    let start = Instant::now();
    let outcomes: Vec<Result<CurveOutcome>> = (0..campaign.curves.len()).into_par_iter().map(|i| campaign.evaluate(id, i)).collect();
    let tolerance = campaign.tolerance(id);
    let mut residuals = Vec::new();
    let mut failures = Vec::new();
    let mut series = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(o) => {
                failures.extend(o.failures.into_iter().map(|f| format!("curve {i}: {f}")));
                series.extend(o.series.into_iter().map(|(n, error)| SeriesPoint { curve: i, n, error }));
                residuals.push(CurveResidual {
                    curve: i,
                    residual: o.residual,
                    diagnostics: o.diagnostics,
                });
            }
            Err(Error::NonConvergence(msg)) if policy == NonConvergencePolicy::Fail => {
                failures.push(format!("curve {i}: {msg}"));
            }
            Err(e) => return Err(e),
        }
    }
    let max_residual = residuals.iter().map(|r| r.residual).fold(0.0, f64::max);
    let pass = failures.is_empty() && residuals.iter().all(|r| r.residual <= tolerance);
    Ok(CheckReport {
        check: id,
        tag: id.tag().into(),
        tolerance,
        max_residual,
        status: if pass { Status::Pass } else { Status::Fail },
        residuals,
        failures,
        series,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Runs the selected checks over the curve ensemble.
pub fn cmd_verify(cfg: &CampaignConfig) -> Result<CampaignReport> {
    let start = Instant::now();
    let campaign = Campaign::new(cfg)?;
    let ids = selected_checks(cfg, &campaign)?;
    let checks = ids
        .into_iter()
        .map(|id| run_check(&campaign, id, cfg.nonconvergence))
        .collect::<Result<Vec<_>>>()?;
    Ok(finish("verify", cfg, checks, start))
}

/// Cesàro series of a synthetic kernel triple against its integral trace.
/// Uses `[kernel]` (default: all three parts) and `[trace]` (default:
/// sin basis, `n_max = 512`).
pub fn cmd_trace_convergence(cfg: &CampaignConfig) -> Result<CampaignReport> {
    let start = Instant::now();
    let spec = cfg.kernel.clone().unwrap_or_default();
    let kernels = spec.build()?;
    let trace = cfg.trace.clone().unwrap_or(TraceConfig::new(Basis::Sin, cfg.metric, 512));
    trace.validate()?;
    let (series, integral) = trace_gap(&kernels, &trace)?;
    if !series.converged && cfg.nonconvergence == NonConvergencePolicy::Abort {
        return Err(Error::NonConvergence(format!(
            "Cesàro tail fit did not converge (residual {:.3e})",
            series.fit_residual
        )));
    }
    let errors = series.errors(&integral);
    let tolerance = cfg.tolerance(CheckId::Thm1);
    let gap = (&series.limit - &integral).frobenius();
    let mut failures = Vec::new();
    let mut diagnostics = std::collections::BTreeMap::new();
    diagnostics.insert("integral_norm".to_string(), integral.frobenius());
    if !series.converged {
        failures.push("Cesàro tail fit did not converge".to_string());
    }
    if errors.iter().any(|e| *e > 1e-12) {
        let n = trace.n_max;
        let p = series.decay_exponent(&integral, (n / 8).max(1), n);
        diagnostics.insert("decay_exponent".to_string(), p);
        if !(0.8..=1.2).contains(&p) {
            failures.push(format!("decay exponent {p:.3} outside [0.8, 1.2]"));
        }
    }
    let pass = failures.is_empty() && gap <= tolerance;
    let report = CheckReport {
        check: CheckId::Thm1,
        tag: CheckId::Thm1.tag().into(),
        tolerance,
        max_residual: gap,
        status: if pass { Status::Pass } else { Status::Fail },
        residuals: vec![CurveResidual {
            curve: 0,
            residual: gap,
            diagnostics,
        }],
        failures,
        series: errors
            .iter()
            .enumerate()
            .map(|(k, e)| SeriesPoint {
                curve: 0,
                n: k + 1,
                error: *e,
            })
            .collect(),
        wall_time_s: 0.0,
    };
    let mut out = finish("trace-convergence", cfg, vec![report], start);
    out.checks[0].wall_time_s = out.wall_time_s;
    Ok(out)
}

fn finish(command: &str, cfg: &CampaignConfig, checks: Vec<CheckReport>, start: Instant) -> CampaignReport {
    let pass = checks.iter().all(|c| c.status == Status::Pass);
    CampaignReport {
        schema_version: SCHEMA_VERSION,
        command: command.into(),
        config: cfg.clone(),
        status: if pass { Status::Pass } else { Status::Fail },
        checks,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}
