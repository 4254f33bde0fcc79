use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use steady_vortex_cli::commands::{cmd_export, cmd_solve, cmd_sweep, cmd_verify, ExportFormat, EXIT_ERROR};
use steady_vortex_cli::config::{parse_config, RunConfig};

#[derive(Parser)]
#[command(name = "steady-vortex", version, about = "Steady vortex flows by the vorticity method")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the problem described by a configuration file.
    Solve { config: PathBuf },
    /// Run the circulation sweep described by a configuration file.
    Sweep { config: PathBuf },
    /// Check hypotheses, elliptic self-tests and (on small grids) the oracle.
    Verify { config: PathBuf },
    /// Convert a field file to text or CSV on standard output.
    Export {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

fn with_config(path: &Path, run: fn(&RunConfig) -> anyhow::Result<u8>) -> anyhow::Result<u8> {
    let cfg = parse_config(path)?;
    run(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve { config } => with_config(config, cmd_solve),
        Command::Sweep { config } => with_config(config, cmd_sweep),
        Command::Verify { config } => with_config(config, cmd_verify),
        Command::Export { field, format } => {
            let format = match format {
                Format::Text => ExportFormat::Text,
                Format::Csv => ExportFormat::Csv,
            };
            cmd_export(field, format, &mut std::io::stdout().lock())
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
