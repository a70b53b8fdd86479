use std::process::ExitCode;

use cascade_core::check::render_table;
use cascade_core::specfun;
use clap::{Parser, Subcommand};

/// Kummer function evaluation and the self-similar profile identity suite.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the identity and sign-property suite; exits 0 iff every check passes.
    Check,
    /// Print M(b, c; s) and e^{-s} M(b, c; s) to 15 significant digits.
    Eval {
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
        #[arg(long)]
        s: f64,
    },
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Check => match specfun::invariant_suite() {
            Ok(checks) => {
                print!("{}", render_table(&checks));
                if checks.iter().all(|c| c.pass) {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                }
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(3)
            }
        },
        Cmd::Eval { b, c, s } => {
            let scaled = match specfun::kummer_m_scaled(b, c, s) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            match specfun::kummer_m(b, c, s) {
                Ok(m) => println!("M = {m:.14e}"),
                Err(e) => println!("M: {e}"),
            }
            println!("exp(-s) M = {scaled:.14e}");
            ExitCode::SUCCESS
        }
    }
}
