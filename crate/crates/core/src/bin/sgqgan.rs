use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use sgqgan::config::{parse_value, Command};
use sgqgan::runner::{execute, thread_pool_from_env};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    LearnState,
    Characterize,
    Multiphase,
    Sweep,
}

impl Cmd {
    fn command(self) -> Command {
        match self {
            Cmd::LearnState => Command::LearnState,
            Cmd::Characterize => Command::Characterize,
            Cmd::Multiphase => Command::Multiphase,
            Cmd::Sweep => Command::Sweep,
        }
    }
}

/// Self-guided SPSA learning against a simulated HOM interferometer.
///
/// Exit codes: 0 success, 2 configuration error, 3 runtime error.
/// SGQGAN_THREADS caps the worker threads (0 or unset: all cores).
#[derive(Debug, Parser)]
#[command(name = "sgqgan", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output prefix.
    #[arg(long)]
    out: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let mut value: serde_json::Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: schema error at $: invalid JSON: {e}");
            return ExitCode::from(2);
        }
    };
    let wanted = cli.command.command();
    if let Some(obj) = value.as_object_mut() {
        obj.entry("command").or_insert_with(|| wanted.name().into());
    }
    let mut cfg = match parse_value(&value) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    if cfg.command() != wanted {
        eprintln!(
            "config error: schema error at $.command: config is for {:?} but {:?} was requested",
            cfg.command().name(),
            wanted.name()
        );
        return ExitCode::from(2);
    }
    if let Some(seed) = cli.seed {
        cfg.set_master_seed(seed);
    }
    if let Some(out) = cli.out {
        cfg.output = out;
    }
    match thread_pool_from_env().install(|| execute(&cfg)) {
        Ok(s) => {
            println!("final mean {} std {}", s.final_mean, s.final_std);
            for f in &s.files {
                if !f.to_string_lossy().contains("_trials/") {
                    println!("wrote {}", f.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            for line in e.diagnostics() {
                eprintln!("error: {line}");
            }
            ExitCode::from(3)
        }
    }
}
