use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;

/// Verification runs for D-type positive maps and their entanglement witnesses.
///
/// Every command writes one JSON report. Exit status is 0 when nothing was
/// found, 1 when a violation or detection was found, 2 on usage errors.
#[derive(Debug, Parser)]
#[command(name = "witness", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Map parameter t.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub t: Option<f64>,
    /// Permutation as 1-based images, e.g. 2,3,1 (default: the cyclic shift of size n).
    #[arg(long, global = true)]
    pub pi: Option<String>,
    /// Subtraction scale c (default: sqrt(1 - t)).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Sample count (command-specific default).
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Matrix size, 2 to 4.
    #[arg(long, global = true, default_value_t = 3)]
    pub n: usize,
    /// Restarts for the product-vector search.
    #[arg(long, global = true, default_value_t = 100)]
    pub restarts: usize,
    /// Trial directions for the subtraction probe.
    #[arg(long, global = true, default_value_t = 200)]
    pub trials: usize,
    /// Half-width of the log-uniform scan box.
    #[arg(long = "L", global = true, default_value_t = 3.0)]
    pub l: f64,
    /// Density matrix in the JSON matrix format, or - for stdin.
    #[arg(long, global = true)]
    pub rho: Option<PathBuf>,
    /// Report destination; - for stdout.
    #[arg(long, global = true, default_value = "-")]
    pub output: String,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Build the Choi matrix of the map.
    BuildWitness,
    /// Search product vectors for a negative value of the witness.
    CheckPositivity,
    /// Test complete positivity through the Choi spectrum.
    CheckCp,
    /// Classify optimality of the qutrit witness.
    CheckOptimality,
    /// Split a transposition witness into positive and PPT parts.
    Decompose,
    /// Check the diag(c, -c, 0) subtraction certificate on random vectors.
    CertificateSweep,
    /// Scan the three-variable inequality and its stationarity conditions.
    #[command(name = "verify-lemma24")]
    VerifyInequality,
    /// Check coefficients and bounds in every zero pattern.
    VerifySubcases,
    /// Estimate the span of the witness zero locus.
    ZeroLocus,
    /// Evaluate Tr(W rho).
    Detect,
    /// Look for a positive subtraction X -> Phi(X) - C X C^dagger.
    ProbeSubtraction,
    /// Run the numeric suite on all n = 4 permutations.
    ConjectureProbe,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(&cli) {
        Ok(report) => {
            let mut text = serde_json::to_string_pretty(&report.json).expect("report serializes");
            text.push('\n');
            if let Err(e) = write_output(&cli.output, &text) {
                eprintln!("error: cannot write {}: {e}", cli.output);
                return ExitCode::from(2);
            }
            ExitCode::from(if report.finding { 1 } else { 0 })
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn write_output(dest: &str, text: &str) -> std::io::Result<()> {
    if dest == "-" {
        std::io::stdout().lock().write_all(text.as_bytes())
    } else {
        std::fs::write(dest, text)
    }
}
