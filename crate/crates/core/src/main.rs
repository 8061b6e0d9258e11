use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use brlab::config::{parse_config, Command};
use brlab::runner::run;
use brlab::BrError;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Verify,
    Evolve,
    Oracle,
    RescaleTest,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Verify => Command::Verify,
            Cmd::Evolve => Command::Evolve,
            Cmd::Oracle => Command::Oracle,
            Cmd::RescaleTest => Command::RescaleTest,
        }
    }
}

/// Bel-Robinson energy laboratory for CMC vacuum slices on the 3-torus.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    command: Cmd,
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured diagnostics path.
    #[arg(long)]
    output: Option<String>,
    /// Overrides the configured points per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(cli: &Cli) -> Result<bool, BrError> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| BrError::Validation(format!("cannot read {}: {e}", cli.config.display())))?;
    let mut cfg = parse_config(&text)?;
    cfg.command = cli.command.into();
    if let Some(o) = &cli.output {
        cfg.output_path = o.clone();
    }
    if let Some(n) = cli.grid {
        cfg.grid_n = n;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let stdout = std::io::stdout();
    let report = run(&cfg, &mut stdout.lock())?;
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error: kind={} message={message:?}", e.kind());
            ExitCode::from(2)
        }
    }
}
