use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use amplify_cli::{exit, run, RunOptions};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    VerifyKnu,
    StationaryPhase,
    Orbital,
    Counts,
    Stabilizers,
    GeometricSides,
    Resonate,
    Budget,
    All,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::VerifyKnu => "verify-knu",
            Command::StationaryPhase => "stationary-phase",
            Command::Orbital => "orbital",
            Command::Counts => "counts",
            Command::Stabilizers => "stabilizers",
            Command::GeometricSides => "geometric-sides",
            Command::Resonate => "resonate",
            Command::Budget => "budget",
            Command::All => "all",
        }
    }
}

/// Verification suites for amplified geodesic periods.
#[derive(Debug, Parser)]
#[command(name = "amplify", version)]
struct Args {
    command: Command,
    /// TOML configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("AMPLIFY_LOG", "warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::CONFIG as u8 } else { 0 });
        }
    };
    let outcome = run(&RunOptions {
        command: args.command.name().to_string(),
        config: args.config,
        out: args.out,
        threads: args.threads,
        seed: args.seed,
    });
    for m in &outcome.messages {
        eprintln!("{m}");
    }
    for f in &outcome.files {
        println!("{}", f.display());
    }
    ExitCode::from(outcome.status as u8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_kebab_commands() {
        let a = Args::try_parse_from(["amplify", "verify-knu", "--threads", "2", "--seed", "5"]).unwrap();
        assert_eq!(a.command.name(), "verify-knu");
        assert_eq!((a.threads, a.seed), (Some(2), Some(5)));
        for c in amplify_cli::suites::COMMANDS {
            assert_eq!(Args::try_parse_from(["amplify", c]).unwrap().command.name(), c);
        }
    }

    #[test]
    fn bad_arguments_are_usage_errors() {
        for argv in [vec!["amplify", "bogus"], vec!["amplify"], vec!["amplify", "counts", "--threads", "x"]] {
            let e = Args::try_parse_from(argv).unwrap_err();
            assert!(e.use_stderr());
        }
    }
}
