use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blockade_cli::config::Resolved;
use blockade_cli::{init_threads, parse_scenarios, presets, run_all, CliError, CliResult};
use clap::{Parser, Subcommand};

/// Multiphonon blockade in two coupled Kerr resonators.
#[derive(Parser)]
#[command(name = "blockade", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario (or a list of named scenarios) from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a built-in preset.
    Reproduce {
        /// Preset name; omit with --list to print them.
        #[arg(required_unless_present = "list")]
        preset: Option<String>,
        #[arg(long, required_unless_present = "list")]
        out: Option<PathBuf>,
        #[arg(long)]
        list: bool,
    },
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &Path) -> CliResult<Vec<Resolved>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_scenarios(&text)
}

fn report(scenarios: &[Resolved], out: &Path) -> CliResult<()> {
    for m in run_all(scenarios, out)? {
        for w in &m.diagnostics.warnings {
            eprintln!("warning: {w}");
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    init_threads()?;
    match cli.command {
        Command::Run { config, out } => report(&load(&config)?, &out),
        Command::Reproduce { list: true, .. } => {
            presets::preset_names().for_each(|n| println!("{n}"));
            Ok(())
        }
        Command::Reproduce { preset, out, .. } => {
            let (preset, out) = (preset.expect("clap enforces"), out.expect("clap enforces"));
            report(&presets::preset(&preset)?, &out)
        }
        Command::Validate { config } => {
            for r in load(&config)? {
                let name = r.config.name.as_deref().unwrap_or("scenario");
                let outputs = serde_json::to_string(&r.config.outputs).unwrap_or_default();
                println!("{name}: ok (cutoffs {}, outputs {outputs})", r.dims);
                for w in &r.warnings {
                    eprintln!("warning: {w}");
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    // clap would exit with 2, which is reserved for numerical failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
