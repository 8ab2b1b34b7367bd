use clap::Parser;
use pointhartree_cli::output::diagnostic;
use pointhartree_cli::{run, Command, RawConfig, EXIT_USAGE};
use std::path::PathBuf;
use std::process::ExitCode;

/// Radial Hartree dynamics with a point interaction at the origin.
#[derive(Parser)]
#[command(name = "pointhartree", version)]
struct Cli {
    /// evolve, picard, dispersive, norms, stability, globalize, check-hypotheses or selftest
    command: String,
    /// Configuration file of `key = value` lines
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Overrides such as `--physics.alpha 0.5`
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

fn usage(message: &str) -> ExitCode {
    diagnostic("usage", EXIT_USAGE, message, None);
    ExitCode::from(EXIT_USAGE as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return usage(&e.to_string()),
    };
    if let Ok(v) = std::env::var("SH_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => return usage(&format!("SH_THREADS must be a positive integer, got `{v}`")),
        }
    }
    let command: Command = match cli.command.parse() {
        Ok(c) => c,
        Err(e) => return usage(&e.to_string()),
    };
    let text = match &cli.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => return usage(&format!("{}: {e}", p.display())),
        },
        None => String::new(),
    };
    let cfg = RawConfig::parse(&text)
        .and_then(|mut raw| raw.apply_flags(&cli.overrides).map(|_| raw))
        .and_then(|raw| raw.build(Some(command)));
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => return usage(&e.to_string()),
    };
    match run(&cfg) {
        Ok(out) => {
            for line in &out.lines {
                println!("{line}");
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            let detail = match &e {
                pointhartree_cli::RunError::Physics { detail, .. } => Some(detail.clone()),
                _ => None,
            };
            diagnostic(e.kind(), e.exit_code(), &e.to_string(), detail.as_ref());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
