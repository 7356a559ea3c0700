mod config;
mod pipeline;

use clap::{Parser, Subcommand};
use config::ConfigError;
use pipeline::{Header, ALGEBRA_FILE};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Verification runner for homogeneous structures of linear type.
#[derive(Parser)]
#[command(name = "linhom", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Scenario {
    /// Scenario JSON document.
    config: PathBuf,
    /// Replace a config entry, e.g. `--override n=3` or `--override zeta1=e5`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario and write report.json and algebra.json.
    Verify(Scenario),
    /// Write the structure constants of the Nomizu algebra.
    ExportAlgebra(Scenario),
    /// Write one trajectory file per reference geodesic family of K.
    ExportTrajectories(Scenario),
    /// Run the scenario and every case at its smallest dimension; write suite.json.
    FullSuite(Scenario),
}

const PASS: u8 = 0;
const CHECK_FAILURE: u8 = 1;
const USAGE: u8 = 2;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Kernel(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Write { .. } => USAGE,
            Self::Kernel(_) => CHECK_FAILURE,
        }
    }
}

fn header() -> Header {
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Header { tool: format!("linhom {}", env!("CARGO_PKG_VERSION")), timestamp }
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let werr = |source| CliError::Write { path: path.clone(), source };
    std::fs::create_dir_all(dir).map_err(werr)?;
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    std::fs::write(&path, text).map_err(werr)?;
    Ok(path)
}

fn report_failures<'a>(checks: impl Iterator<Item = &'a linhom::checks::Check>, notes: &[String]) {
    for c in checks {
        eprintln!("FAILED {} [{}]: residual {:e} vs tol {:e}", c.name, c.anchor, c.residual, c.tol);
    }
    for n in notes {
        eprintln!("note: {n}");
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Verify(sc) => {
            let cfg = config::load(&sc.config, &sc.overrides)?;
            let (mut report, algebra) = pipeline::run_scenario(&cfg)?;
            if let Some(l) = &algebra {
                write_json(&cfg.output_path, ALGEBRA_FILE, &pipeline::algebra_export(&cfg, l))?;
            }
            report.header = Some(header());
            let path = write_json(&cfg.output_path, "report.json", &report)?;
            println!("{} {} n={} s={}: {} ({})", report.verdict.to_uppercase(), cfg.case.as_str(), cfg.n, cfg.s, path.display(), report.checks.len());
            if report.pass() {
                Ok(PASS)
            } else {
                report_failures(report.failing(), &report.notes);
                Ok(CHECK_FAILURE)
            }
        }
        Command::ExportAlgebra(sc) => {
            let cfg = config::load(&sc.config, &sc.overrides)?;
            let (report, algebra) = pipeline::run_scenario(&cfg)?;
            let l = algebra.ok_or_else(|| CliError::Kernel(format!("Nomizu algebra not built: {}", report.notes.join("; "))))?;
            let path = write_json(&cfg.output_path, ALGEBRA_FILE, &pipeline::algebra_export(&cfg, &l))?;
            println!("{} basis elements -> {}", l.dim(), path.display());
            Ok(PASS)
        }
        Command::ExportTrajectories(sc) => {
            let cfg = config::load(&sc.config, &sc.overrides)?;
            for f in pipeline::families() {
                let doc = pipeline::trajectory_export(&f).map_err(|e| CliError::Kernel(e.to_string()))?;
                let path = write_json(&cfg.output_path, &format!("trajectory-{}.json", f.name), &doc)?;
                println!("{} points -> {}", doc.points.len(), path.display());
            }
            Ok(PASS)
        }
        Command::FullSuite(sc) => {
            let cfg = config::load(&sc.config, &sc.overrides)?;
            let mut suite = pipeline::run_suite(&cfg)?;
            suite.header = Some(header());
            let path = write_json(&cfg.output_path, "suite.json", &suite)?;
            for r in &suite.reports {
                println!("{} {} n={} s={}", r.verdict.to_uppercase(), r.scenario.case.as_str(), r.scenario.n, r.scenario.s);
            }
            println!("suite {} -> {}", suite.verdict, path.display());
            if suite.verdict == "pass" {
                Ok(PASS)
            } else {
                for r in &suite.reports {
                    report_failures(r.failing(), &r.notes);
                }
                Ok(CHECK_FAILURE)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { USAGE } else { PASS };
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
