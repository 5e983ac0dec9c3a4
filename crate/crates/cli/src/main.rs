//! `lipcert` — certified Lipschitz bounds and diagnostics for feed-forward
//! convolution graphs.
//!
//! Every subcommand reads a network specification (JSON with optional
//! binary signal sidecars), runs one library pipeline, and writes a JSON
//! report whose `config` block records the fully resolved invocation.
//! Fixed seeds make reports byte-reproducible apart from the `timestamp`
//! field. Exit codes: 0 success, 1 computational error (structured JSON
//! on standard error), 2 usage error.

mod commands;
mod report;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "lipcert",
    version,
    about = "Certified Lipschitz bounds and diagnostics for feed-forward convolution graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify a global bound: per-layer gains plus the chain program
    Bound(commands::BoundArgs),
    /// Per-layer spectral gain triples only
    Bessel(commands::BesselArgs),
    /// Evaluate the network on a signal; write features and their norm
    Forward(commands::ForwardArgs),
    /// Jacobian norms at sampled base points
    Local(commands::LocalArgs),
    /// Decision-flip search along principal vs random directions
    Adversarial(commands::AdversarialArgs),
    /// Monte-Carlo checks with stationary Gaussian inputs
    Stationary(commands::StationaryArgs),
    /// Two-class separation scores in feature space
    Discriminant(commands::DiscriminantArgs),
    /// Built-in reference network with closed-form layer gains
    ToyExample,
}

/// Applies the `LIPCERT_THREADS` worker cap before any parallel work.
fn init_threads() -> Result<(), String> {
    let value = match std::env::var("LIPCERT_THREADS") {
        Ok(v) => v,
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(format!("LIPCERT_THREADS: {e}")),
    };
    let workers: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("LIPCERT_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() {
    let cli = Cli::parse();
    if let Err(message) = init_threads() {
        eprintln!("error: {message}");
        std::process::exit(2);
    }
    let result = match &cli.command {
        Command::Bound(args) => commands::bound(args),
        Command::Bessel(args) => commands::bessel(args),
        Command::Forward(args) => commands::forward_cmd(args),
        Command::Local(args) => commands::local(args),
        Command::Adversarial(args) => commands::adversarial(args),
        Command::Stationary(args) => commands::stationary(args),
        Command::Discriminant(args) => commands::discriminant_cmd(args),
        Command::ToyExample => commands::toy_example(),
    };
    if let Err(error) = result {
        let payload = serde_json::json!({
            "error": { "kind": error.kind(), "message": error.to_string() }
        });
        eprintln!("{payload}");
        std::process::exit(1);
    }
}
