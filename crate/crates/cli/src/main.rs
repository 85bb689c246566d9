mod qexp_cmd;
mod report;
mod weights_cmd;

use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use report::ReportBuilder;

/// Weight combinatorics and q-expansion operators for mod p Hilbert modular forms.
#[derive(Debug, Parser)]
#[command(name = "hmf-theta", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Computations in the weight lattice
    Weights(weights_cmd::WeightsArgs),
    /// Operators on q-expansion files and identity suites
    Qexp(qexp_cmd::QexpArgs),
}

pub(crate) fn read_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Reads `[1, -2, "3"]`.
pub(crate) fn parse_vec(s: &str) -> Result<Vec<i64>> {
    let v: serde_json::Value =
        serde_json::from_str(s).with_context(|| format!("`{s}` is not a JSON array"))?;
    let Some(items) = v.as_array() else {
        bail!("`{s}` is not a JSON array");
    };
    items
        .iter()
        .map(|x| match x {
            serde_json::Value::Number(n) => n.as_i64().context("entries must be integers"),
            serde_json::Value::String(t) => t.trim().parse().context("entries must be integers"),
            _ => bail!("entries must be integers"),
        })
        .collect()
}

pub(crate) fn strs<T: ToString>(v: &[T]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn init_threads() -> Result<()> {
    if let Ok(n) = std::env::var("HMF_THETA_THREADS") {
        let n: usize = n.parse().context("HMF_THETA_THREADS must be a positive integer")?;
        if n == 0 {
            bail!("HMF_THETA_THREADS must be a positive integer");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command: Vec<String> = std::env::args().skip(1).collect();
    let mut rep = ReportBuilder::new(command);
    let run = init_threads().and_then(|_| match cli.cmd {
        Cmd::Weights(a) => weights_cmd::run(a, &mut rep),
        Cmd::Qexp(a) => qexp_cmd::run(a, &mut rep),
    });
    if let Err(e) = run {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let report = rep.finish();
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    if report.failed() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
