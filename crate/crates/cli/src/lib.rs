//! Command-line front-end. Every invocation is first turned into a
//! [`RunManifest`], so a run described on the command line and the same run
//! described in a manifest file produce identical output.
//!
//! Exit codes: 0 pass, 1 verified negative, 2 usage or specification error.

pub mod commands;
pub mod json;
pub mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::Value;

use crate::commands::{execute, Table, Verdict};
use crate::manifest::parse_param;
pub use crate::manifest::RunManifest;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Library(#[from] lempert::Error),
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Parser)]
#[command(name = "lempert", version, about = "Membership, retraction and metric checks for Lempert domains")]
struct Cli {
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Manifest supplying defaults; command-line values win.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Also write per-case rows as CSV.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Strict membership of a point, e.g. `membership tetrablock "0,0,0"`.
    Membership {
        domain: Option<String>,
        point: Option<String>,
        /// Extra `key=value` parameters (values are parsed as JSON when possible).
        #[arg(short = 'p', long = "param")]
        params: Vec<String>,
    },
    /// Sampled image, idempotence and fixing checks for a retraction.
    VerifyRetraction {
        /// Family name (`tetra_royal`) or a JSON object with a `family` tag.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        domain: Option<String>,
        #[arg(short = 'p', long = "param")]
        params: Vec<String>,
    },
    /// One of: lemma41, l3-obstruction, linret-classify, remfzero.
    LemmaSuite {
        suite: Option<String>,
        #[arg(short = 'p', long = "param")]
        params: Vec<String>,
    },
    /// Carathéodory lower and Lempert upper bound between two points.
    Metric {
        domain: Option<String>,
        z: Option<String>,
        w: Option<String>,
        #[arg(short = 'p', long = "param")]
        params: Vec<String>,
    },
    /// Execute a manifest file.
    Run { manifest: PathBuf },
}

fn positional(m: &mut RunManifest, key: &str, v: Option<String>) {
    if let Some(v) = v {
        m.parameters.insert(key.to_string(), Value::String(v));
    }
}

fn from_command(cmd: Command) -> Result<RunManifest, CliError> {
    let mut m = RunManifest::default();
    let params = match cmd {
        Command::Membership { domain, point, params } => {
            m.subcommand = "membership".into();
            positional(&mut m, "domain", domain);
            positional(&mut m, "point", point);
            params
        }
        Command::VerifyRetraction { family, domain, params } => {
            m.subcommand = "verify-retraction".into();
            if let Some(f) = family {
                let v = serde_json::from_str(&f).unwrap_or(Value::String(f));
                m.parameters.insert("retraction".into(), v);
            }
            positional(&mut m, "domain", domain);
            params
        }
        Command::LemmaSuite { suite, params } => {
            m.subcommand = "lemma-suite".into();
            positional(&mut m, "suite", suite);
            params
        }
        Command::Metric { domain, z, w, params } => {
            m.subcommand = "metric".into();
            positional(&mut m, "domain", domain);
            positional(&mut m, "z", z);
            positional(&mut m, "w", w);
            params
        }
        Command::Run { manifest } => return RunManifest::load(&manifest),
    };
    for p in params {
        let (k, v) = parse_param(&p)?;
        m.parameters.insert(k, v);
    }
    Ok(m)
}

fn resolve(cli: Cli) -> Result<(RunManifest, Option<PathBuf>), CliError> {
    let mut from_cli = from_command(cli.command)?;
    from_cli.seed = cli.seed.or(from_cli.seed);
    from_cli.samples = cli.samples.or(from_cli.samples);
    from_cli.tolerance = cli.tol.or(from_cli.tolerance);
    from_cli.output = cli.out.or(from_cli.output);
    let m = match cli.manifest {
        Some(path) => RunManifest::load(&path)?.merged(from_cli),
        None => from_cli,
    };
    Ok((m, cli.csv))
}

fn write_csv(path: &Path, table: &Table) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn run(m: &RunManifest, csv_path: Option<&Path>) -> Result<Verdict, CliError> {
    let outcome = execute(m)?;
    let text = json::to_string(&outcome.json).map_err(|e| CliError::Io(e.to_string()))?;
    match &m.output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    if let Some(path) = csv_path {
        write_csv(path, &outcome.table)?;
    }
    Ok(outcome.verdict)
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = resolve(cli).and_then(|(m, csv)| run(&m, csv.as_deref()));
    match result {
        Ok(Verdict::Pass) => 0,
        Ok(Verdict::Negative) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
