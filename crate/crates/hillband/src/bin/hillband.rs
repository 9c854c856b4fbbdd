//! `hillband <subcommand> --config <file.json> [--out <dir>]`
//!
//! Exit codes: 0 all checks pass, 1 assertion failure (see
//! failure_manifest.json in the output directory), 2 config parse error,
//! 3 computation failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hillband::cli::{run, Command, RunConfig};
use hillband::Error;

#[derive(Parser)]
#[command(
    name = "hillband",
    about = "Band structure, quasimomentum, and Bloch-function toolkit for 1-D periodic Schrodinger operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Clone, Parser)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Sub {
    /// Band edges, gap geometry, and the comb figure.
    Bands(CommonArgs),
    /// The discriminant Delta on the real momentum axis.
    Discriminant(CommonArgs),
    /// The conformal map k(z) by both routes on a strip sample.
    Quasimomentum(CommonArgs),
    /// Titchmarsh-Weyl functions and Bloch waves at band midpoints.
    Bloch(CommonArgs),
    /// Full asymptotics suite (Theorems 1.1 and 1.2 plus identities).
    Verify(CommonArgs),
    /// Riccati reduction and singular-potential bounds (Theorem 4.1).
    DistribVerify(CommonArgs),
    /// The symbolic kappa recursion, printed.
    DumpKappa(CommonArgs),
}

fn dispatch(sub: &Sub) -> (Command, &CommonArgs) {
    match sub {
        Sub::Bands(a) => (Command::Bands, a),
        Sub::Discriminant(a) => (Command::Discriminant, a),
        Sub::Quasimomentum(a) => (Command::Quasimomentum, a),
        Sub::Bloch(a) => (Command::Bloch, a),
        Sub::Verify(a) => (Command::Verify, a),
        Sub::DistribVerify(a) => (Command::DistribVerify, a),
        Sub::DumpKappa(a) => (Command::DumpKappa, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = dispatch(&cli.command);

    let bytes = match std::fs::read(&args.config) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("cannot read config {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let text = match std::str::from_utf8(&bytes) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config is not UTF-8: {e}");
            return ExitCode::from(2);
        }
    };
    let config = match RunConfig::from_json(text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };

    match run(cmd, &config, &bytes, args.out.as_deref()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => {
            eprintln!("verification failed; see failure_manifest.json");
            ExitCode::from(code as u8)
        }
        Err(Error::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("computation failed: {e}");
            ExitCode::from(3)
        }
    }
}
