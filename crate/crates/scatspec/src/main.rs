use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use scatspec::report::OutDir;
use scatspec::suites::run;
use scatspec::{load_config, CliError};

/// Numerical verification suites for low-energy estimates on conic manifolds.
#[derive(Debug, Parser)]
#[command(name = "scatspec", version)]
struct Args {
    /// hardy, poincare, weight, mourre, sqrt-mourre, resolvent,
    /// adjoint-bounds, wave, or all
    suite: String,

    #[arg(long)]
    config: PathBuf,

    /// Output directory; defaults to `out` in the config, then ./scatspec-out.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Dotted configuration key set to a TOML value, e.g. mourre.h_list=[4,8].
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<i32, CliError> {
    let loaded = load_config(&args.config, &args.overrides)?;
    let dir = args
        .out
        .clone()
        .or_else(|| loaded.config.out.clone())
        .unwrap_or_else(|| PathBuf::from("scatspec-out"));
    let out = OutDir::create(&dir)?;
    let result = run(&args.suite, &loaded, &out)?;
    print!("{}", result.report.summary());
    for e in &result.errors {
        eprintln!("error: {e}");
    }
    Ok(result.exit_code())
}
