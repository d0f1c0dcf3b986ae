use std::path::PathBuf;

use levygauge::harness::plot::svg_loglog;
use levygauge::harness::*;
use levygauge::Error;

fn zero_campaign() -> CampaignConfig {
    CampaignConfig::from_toml(
        r#"
name = "zero"
checks = ["TRANSPORT", "PROP3", "GROSS", "LLYM"]

[connection]
name = "zero"

[curves]
count = 2
cells = 128
"#,
    )
    .unwrap()
}

#[test]
fn config_defaults_and_overrides() {
    let cfg = CampaignConfig::from_toml("[connection]\nname = \"zero\"\n").unwrap();
    assert_eq!(cfg.checks, vec!["all".to_string()]);
    assert_eq!(cfg.curves.count, 4);
    assert_eq!(cfg.curves.cells, 1024);
    assert_eq!(cfg.nonconvergence, NonConvergencePolicy::Abort);
    assert_eq!(cfg.tolerance(CheckId::Agv1), 5e-2);
    assert_eq!(cfg.trace_config().n_max, 256);

    let cfg = CampaignConfig::from_toml("[connection]\nname = \"zero\"\n[tolerances]\nAGV1 = 0.1\n").unwrap();
    assert_eq!(cfg.tolerance(CheckId::Agv1), 0.1);
    assert_eq!(cfg.tolerance(CheckId::Prop3), 1e-9);
}

#[test]
fn config_rejects_bad_input() {
    let bad = [
        "bogus = 1\n[connection]\nname = \"zero\"\n",
        "checks = [\"XYZ\"]\n[connection]\nname = \"zero\"\n",
        "[connection]\nname = \"nowhere\"\n",
        "[connection]\nname = \"zero\"\n[curves]\ncount = 0\n",
        "[connection]\nname = \"zero\"\n[tolerances]\nPROP1 = -1.0\n",
        "[connection]\nname = \"zero\"\n[tolerances]\nNOPE = 1.0\n",
        "[connection]\nname = \"zero\"\n[higgs]\nm = -1.0\n",
    ];
    for text in bad {
        assert!(matches!(CampaignConfig::from_toml(text), Err(Error::Config(_) | Error::InvalidParameter(_))), "{text}");
    }
}

#[test]
fn config_round_trips_through_json() {
    let cfg = zero_campaign();
    let json = serde_json::to_string(&cfg).unwrap();
    assert_eq!(CampaignConfig::from_json(&json).unwrap(), cfg);
}

#[test]
fn load_dispatches_on_extension() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = zero_campaign();
    let json = dir.path().join("c.json");
    std::fs::write(&json, serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(CampaignConfig::load(&json).unwrap(), cfg);
    let toml = dir.path().join("c.toml");
    std::fs::write(&toml, "[connection]\nname = \"zero\"\nextra = 1\n").unwrap();
    match CampaignConfig::load(&toml) {
        Err(Error::Config(msg)) => assert!(msg.starts_with(&toml.display().to_string()), "{msg}"),
        other => panic!("expected a config error, got {other:?}"),
    }
    assert!(matches!(CampaignConfig::load(&dir.path().join("missing.toml")), Err(Error::Config(_))));
}

#[test]
fn check_ids_round_trip() {
    for id in CheckId::ALL {
        assert_eq!(id.as_str().parse::<CheckId>().unwrap(), id);
        assert_eq!(serde_json::to_string(&id).unwrap(), format!("\"{}\"", id.as_str()));
        assert!(check_table().contains(id.as_str()));
        assert!(id.default_tolerance() > 0.0);
    }
    assert!("prop1".parse::<CheckId>().is_err());
}

#[test]
fn selection_expands_all_and_rejects_inapplicable_checks() {
    let cfg = CampaignConfig::from_toml("[connection]\nname = \"zero\"\ndim = 2\n[curves]\ncount = 1\ncells = 64\n").unwrap();
    let campaign = Campaign::new(&cfg).unwrap();
    let ids = selected_checks(&cfg, &campaign).unwrap();
    assert!(ids.contains(&CheckId::Agv1));
    assert!(!ids.contains(&CheckId::Endpoint));
    assert!(!ids.contains(&CheckId::LlymCurrent));

    let cfg = CampaignConfig::from_toml("checks = [\"GROSS\", \"all\", \"GROSS\"]\n[connection]\nname = \"zero\"\n").unwrap();
    let campaign = Campaign::new(&cfg).unwrap();
    let ids = selected_checks(&cfg, &campaign).unwrap();
    assert_eq!(ids[0], CheckId::Gross);
    assert_eq!(ids.iter().filter(|c| **c == CheckId::Gross).count(), 1);

    let cfg = CampaignConfig::from_toml("checks = [\"LLYM_current\"]\n[connection]\nname = \"zero\"\n").unwrap();
    let campaign = Campaign::new(&cfg).unwrap();
    assert!(matches!(selected_checks(&cfg, &campaign), Err(Error::Config(_))));
}

#[test]
fn zero_connection_campaign_passes_with_vanishing_residuals() {
    let report = cmd_verify(&zero_campaign()).unwrap();
    assert!(report.passed());
    assert_eq!(report.schema_version, SCHEMA_VERSION);
    assert_eq!(report.checks.len(), 4);
    for c in &report.checks {
        assert_eq!(c.residuals.len(), 2);
        assert!(c.max_residual <= 1e-14, "{} {}", c.check, c.max_residual);
    }
}

#[test]
fn tightened_tolerance_fails_the_check() {
    let mut cfg = CampaignConfig::from_toml(
        "checks = [\"PROP1\"]\n[connection]\nname = \"random_polynomial\"\n[curves]\ncount = 1\ncells = 256\n",
    )
    .unwrap();
    cfg.tolerances.insert("PROP1".into(), 1e-30);
    let report = cmd_verify(&cfg).unwrap();
    assert!(!report.passed());
    assert_eq!(report.checks[0].status, Status::Fail);
}

#[test]
fn reports_are_deterministic_modulo_timing() {
    let cfg = zero_campaign();
    let a = cmd_verify(&cfg).unwrap();
    let b = cmd_verify(&cfg).unwrap();
    assert_eq!(a.canonical_json().unwrap(), b.canonical_json().unwrap());
    assert!(a.canonical_json().unwrap().contains("\"wall_time_s\": 0.0"));
}

#[test]
fn report_files_and_aggregation() {
    let dir = tempfile::tempdir().unwrap();
    let pass = cmd_verify(&zero_campaign()).unwrap();
    let mut fail = pass.clone();
    fail.checks[1].status = Status::Fail;
    fail.status = Status::Fail;

    let written = pass.write(&dir.path().join("a"), true).unwrap();
    assert!(written.iter().any(|p| p.ends_with("report.json")));
    let csv = std::fs::read_to_string(dir.path().join("a/residuals.csv")).unwrap();
    assert!(csv.starts_with("check,curve,residual,tolerance,status\n"));
    assert_eq!(csv.lines().count(), 1 + 4 * 2);
    fail.write(&dir.path().join("nested/b"), false).unwrap();

    let rows = aggregate(&[dir.path().to_path_buf()]).unwrap();
    assert_eq!(rows.len(), 8);
    assert_eq!(rows[0].status, Status::Fail);
    assert!(rows[1..].iter().all(|r| r.status == Status::Pass));
    let table = format_summary(&rows);
    assert_eq!(table.lines().count(), 9);
    assert!(table.lines().nth(1).unwrap().starts_with("FAIL"));

    let read_back: CampaignReport = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/report.json")).unwrap()).unwrap();
    assert_eq!(read_back.checks.len(), pass.checks.len());
    assert_eq!(read_back.config, pass.config);
    assert!(read_back.passed());
}

#[test]
fn aggregation_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(aggregate(&[dir.path().to_path_buf()]), Err(Error::Report(_))));
    assert!(matches!(aggregate(&[PathBuf::from("/nonexistent/levygauge")]), Err(Error::Report(_))));

    std::fs::write(dir.path().join("junk.json"), "{\"not\": 1}").unwrap();
    assert!(matches!(aggregate(&[dir.path().to_path_buf()]), Err(Error::Report(_))));

    let mut old = cmd_verify(&zero_campaign()).unwrap();
    old.schema_version = SCHEMA_VERSION + 1;
    let other = tempfile::tempdir().unwrap();
    old.write(other.path(), false).unwrap();
    match aggregate(&[other.path().to_path_buf()]) {
        Err(Error::Report(msg)) => assert!(msg.contains("schema version"), "{msg}"),
        r => panic!("expected a schema error, got {r:?}"),
    }
}

#[test]
fn series_files_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CampaignConfig::from_toml(
        "[kernel]\ncells = 2048\n[trace]\nbasis = \"sin\"\nmetric = \"euclidean\"\nn_max = 32\n[tolerances]\nTHM1 = 1.0\n",
    )
    .unwrap();
    let report = cmd_trace_convergence(&cfg).unwrap();
    assert_eq!(report.checks[0].series.len(), 32);
    report.write(dir.path(), true).unwrap();
    let series = std::fs::read_to_string(dir.path().join("series_THM1.csv")).unwrap();
    assert!(series.starts_with("curve,n,error\n"));
    assert_eq!(series.lines().count(), 33);
    let svg = std::fs::read_to_string(dir.path().join("series_THM1.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
}

#[test]
fn svg_without_positive_data() {
    let svg = svg_loglog("t", "x", "y", &[("a".into(), vec![(0.0, 1.0), (1.0, 0.0)])]);
    assert!(svg.contains("no positive data"));
}

#[test]
fn thread_resolution_precedence() {
    assert_eq!(resolve_threads(Some(3), Some("5")).unwrap(), Some(3));
    assert_eq!(resolve_threads(None, Some(" 5 ")).unwrap(), Some(5));
    assert_eq!(resolve_threads(None, Some("")).unwrap(), None);
    assert_eq!(resolve_threads(None, None).unwrap(), None);
    assert!(resolve_threads(Some(0), None).is_err());
    assert!(resolve_threads(None, Some("0")).is_err());
    assert!(resolve_threads(None, Some("four")).is_err());
}

#[test]
fn exit_codes() {
    assert_eq!(exit_code(&Ok(true)), 0);
    assert_eq!(exit_code(&Ok(false)), 1);
    assert_eq!(exit_code(&Err(Error::Config("x".into()))), 2);
    assert_eq!(exit_code(&Err(Error::Report("x".into()))), 2);
    assert_eq!(exit_code(&Err(Error::NonConvergence("x".into()))), 3);
}
