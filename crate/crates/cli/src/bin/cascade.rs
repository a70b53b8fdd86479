use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cascade_core::diagnostics::{fit_decay_rate, fit_power_law, DEFAULT_TOLERANCE};
use cascade_core::harness::{self, Axis, ExperimentConfig};
use clap::{Parser, Subcommand};

/// Runs damped-wave profile-expansion experiments.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate and run one experiment; exits 0 iff every verdict passes.
    Run {
        config: PathBuf,
        /// Directory for traces and the summary (overrides `out_dir` in the config).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run the cartesian product of parameter axes concurrently.
    Sweep {
        config: PathBuf,
        /// `key=v1,v2,...`; repeatable.
        #[arg(long = "axis")]
        axes: Vec<Axis>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Fit a log-log decay slope to a CSV trace with a `t` column.
    Fit {
        trace: PathBuf,
        /// Fit window `t_a,t_b`.
        #[arg(long, value_parser = parse_window)]
        window: (f64, f64),
        /// Value column (defaults to the first non-`t` column).
        #[arg(long)]
        column: Option<String>,
        /// Upper-bound exponent to compare against.
        #[arg(long, allow_hyphen_values = true)]
        theoretical: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
    },
    /// Validate a configuration without running it.
    Check { config: PathBuf },
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("window must be a,b")?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|e| e.to_string());
    Ok((p(a)?, p(b)?))
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::load(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Run { config, out_dir } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let valid = match harness::validate(&cfg) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            match harness::run_and_write(&valid, out_dir.as_deref()) {
                Ok(out) => {
                    print!("{}", out.summary.render());
                    if out.summary.all_pass {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("run failed: {e}");
                    ExitCode::from(3)
                }
            }
        }
        Cmd::Sweep { config, axes, out_dir } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let rows = harness::sweep(&cfg, &axes);
            for r in &rows {
                let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let slopes: Vec<String> = r.slopes.iter().map(|(k, s)| format!("{k}:{s:.4}")).collect();
                match &r.error {
                    Some(e) => println!("[{}] error: {e}", params.join(" ")),
                    None => println!(
                        "[{}] {} {}",
                        params.join(" "),
                        slopes.join(" "),
                        if r.all_pass == Some(true) { "PASS" } else { "FAIL" }
                    ),
                }
            }
            if let Some(dir) = out_dir.or(cfg.out_dir) {
                if let Err(e) = harness::write_sweep(&dir, &axes, &rows) {
                    eprintln!("writing sweep output failed: {e}");
                    return ExitCode::from(3);
                }
            }
            if rows.iter().all(|r| r.all_pass == Some(true)) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Cmd::Fit {
            trace,
            window,
            column,
            theoretical,
            tolerance,
        } => {
            let (t, y, name) = match harness::read_trace(&trace, column.as_deref()) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            let result = match theoretical {
                Some(th) => fit_decay_rate(&t, &y, window, th, tolerance).map(|r| {
                    println!(
                        "{name}: slope {:.6} stderr {:.6} points {} bound {th} + {tolerance} -> {:?}",
                        r.slope, r.stderr, r.points, r.verdict
                    );
                    r.verdict.passes()
                }),
                None => fit_power_law(&t, &y, window).map(|(s, se, n)| {
                    println!("{name}: slope {s:.6} stderr {se:.6} points {n}");
                    n >= 2
                }),
            };
            match result {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => ExitCode::FAILURE,
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(3)
                }
            }
        }
        Cmd::Check { config } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match harness::validate(&cfg) {
                Ok(_) => {
                    println!("{}: valid", config.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
