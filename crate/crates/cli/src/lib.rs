//! Batch front end: reads a JSON document, runs one analysis and writes a report.

pub mod corpus;
pub mod error;
pub mod report;
pub mod run;
pub mod schema;

use std::path::PathBuf;

use clap::Parser;

pub use error::CliError;
pub use report::{emit, parse_report, Command, Format, Report, Status};
pub use run::{replay_report, run, AnalysisRequest};
pub use schema::{parse_document, Coefficients, Document, Q};

#[derive(Clone, Debug, Parser)]
#[command(name = "sft-torsion", version, about = "Algebraic torsion and ECH survival certificates")]
pub struct Args {
    /// Model document, or a JSON report to replay with `validate`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub command: Command,
    /// Overrides `truncation.action_bound`, e.g. `5` or `11/2`.
    #[arg(long)]
    pub action_bound: Option<Q>,
    #[arg(long)]
    pub hbar_bound: Option<u32>,
    #[arg(long)]
    pub cover_max: Option<u32>,
    /// Comma-separated functional; switches to twisted coefficients.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub omega: Option<Vec<i64>>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Enables seeded property sampling.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// What the input file turned out to be.
#[derive(Clone, Debug)]
pub enum Input {
    Document(Box<AnalysisRequest>),
    Report(Box<Report>),
}

fn looks_like_report(text: &str) -> bool {
    serde_json::from_str::<serde_json::Value>(text)
        .ok()
        .and_then(|v| v.get("tool").and_then(|t| t.as_str()).map(|t| t == report::TOOL))
        .unwrap_or(false)
}

/// Reads the input and applies the flag overrides.
pub fn load(args: &Args) -> Result<Input, CliError> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|source| CliError::Io { path: args.input.display().to_string(), source })?;
    if looks_like_report(&text) {
        if args.command != Command::Validate {
            return Err(CliError::Usage("reports can only be replayed with `--command validate`".into()));
        }
        return Ok(Input::Report(Box::new(parse_report(&text)?)));
    }
    let mut document = parse_document(&text)?;
    if let Some(a) = &args.action_bound {
        document.truncation.action_bound = a.clone();
    }
    if let Some(h) = args.hbar_bound {
        document.truncation.hbar_bound = h;
    }
    if let Some(c) = args.cover_max {
        document.truncation.cover_max = c;
    }
    if let Some(o) = &args.omega {
        document.coefficients = Coefficients::Twisted { omega: o.clone() };
    }
    document.truncation.check()?;
    Ok(Input::Document(Box::new(AnalysisRequest { command: args.command, document, seed: args.seed })))
}

/// Full pipeline behind the binary: the report and its exit code.
pub fn execute(args: &Args) -> Report {
    match load(args) {
        Ok(Input::Document(req)) => run(&req),
        Ok(Input::Report(r)) => replay_report(&r),
        Err(e) => Report::failure(args.command, &e),
    }
}
