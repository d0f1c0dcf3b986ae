use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use levygauge::harness::{
    aggregate, check_table, cmd_trace_convergence, cmd_verify, exit_code, format_summary, resolve_threads, CampaignConfig, CampaignReport,
    Status,
};
use levygauge::{Error, Result};

#[derive(Parser)]
#[command(name = "levygauge", version, about = "Verify Lévy-operator identities for parallel transport along curves")]
struct Cli {
    /// Worker threads (overrides LEVYGAUGE_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of a campaign file over its curve ensemble.
    Verify(RunArgs),
    /// Cesàro series of a synthetic kernel triple against the integral trace.
    TraceConvergence(RunArgs),
    /// Summarize JSON reports (files or directories), failures first.
    Report {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Campaign file (TOML, or JSON with a .json extension).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir; default `levygauge-out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of the curve ensemble (overrides curves.seed).
    #[arg(long)]
    seed: Option<u64>,
}

fn load(args: &RunArgs) -> Result<(CampaignConfig, PathBuf)> {
    let mut cfg = CampaignConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.curves.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("levygauge-out"));
    Ok((cfg, out))
}

fn print_run(report: &CampaignReport) {
    for c in &report.checks {
        println!(
            "{} {:<13} max residual {:.3e} (tolerance {:.1e})  {}",
            c.status.as_str(),
            c.check.as_str(),
            c.max_residual,
            c.tolerance,
            c.tag
        );
        for f in &c.failures {
            println!("    {f}");
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let env = std::env::var("LEVYGAUGE_THREADS").ok();
    if let Some(k) = resolve_threads(cli.threads, env.as_deref())? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Verify(args) => {
            let (cfg, out) = load(&args)?;
            let report = cmd_verify(&cfg)?;
            print_run(&report);
            for p in report.write(&out, cfg.output.svg)? {
                eprintln!("wrote {}", p.display());
            }
            Ok(report.passed())
        }
        Command::TraceConvergence(args) => {
            let (cfg, out) = load(&args)?;
            let report = cmd_trace_convergence(&cfg)?;
            print_run(&report);
            if let Some(p) = report.checks[0].residuals[0].diagnostics.get("decay_exponent") {
                println!("fitted decay exponent {p:.3}");
            }
            for p in report.write(&out, cfg.output.svg)? {
                eprintln!("wrote {}", p.display());
            }
            Ok(report.passed())
        }
        Command::Report { paths } => {
            let rows = aggregate(&paths)?;
            print!("{}", format_summary(&rows));
            Ok(rows.iter().all(|r| r.status == Status::Pass))
        }
    }
}

fn main() -> ExitCode {
    let help = format!(
        "Check ids:\n{}\n\nExit status: 0 all checks pass, 1 a check failed, 2 configuration or input error, 3 numerical non-convergence.",
        check_table()
    );
    let matches = Cli::command().after_help(help).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let outcome = run(cli);
    if let Err(e) = &outcome {
        eprintln!("error: {e}");
    }
    ExitCode::from(exit_code(&outcome))
}
