use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use sft_torsion::{emit, error::EXIT_USAGE, execute, Args, Format};

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let report = execute(&args);
    let out = emit(&report, args.format);
    if report.exit_code != 0 && args.format == Format::Text {
        let _ = std::io::stderr().write_all(out.as_bytes());
    } else {
        let _ = std::io::stdout().write_all(out.as_bytes());
    }
    ExitCode::from(report.exit_code as u8)
}
