use std::path::PathBuf;
use std::process::ExitCode;

use cascade_core::check::{render_table, Check};
use cascade_core::harness::{self, write_table, ExperimentConfig};
use cascade_core::weights::{
    build_a, damping_eval, psi_comparison, supersolution_margin, verify_a_properties, weight_suite, DampingProfile,
    OffsetChoice, Shape, WeightFamily,
};
use clap::{Parser, Subcommand, ValueEnum};

/// Builds and verifies the weight potential `A_ε` and the supersolution weights.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Constant,
    SmoothPower,
    PurePower,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build `A_ε` for a profile and tabulate it.
    Build {
        #[arg(long, value_enum)]
        shape: ShapeArg,
        #[arg(long, default_value_t = 1.0)]
        a0: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0.0)]
        r_min: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        r_max: f64,
        /// Fixed offset `A₀` (chosen automatically when absent).
        #[arg(long)]
        offset: Option<f64>,
        /// Number of sample radii in the table.
        #[arg(long, default_value_t = 201)]
        samples: usize,
        /// CSV output (columns r, a, A, dA, Psi at t = 0).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the shipped weight suite, or verify the family of one experiment config.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64).collect()
}

fn config_checks(cfg: &ExperimentConfig, w: &WeightFamily) -> cascade_core::Result<Vec<Check>> {
    let lo = if cfg.shape == Shape::PurePower { cfg.r_min.max(cfg.r_lo) } else { 0.0 };
    let rs = linspace(lo, cfg.r_max(), 121);
    let ts = linspace(0.0, cfg.t_end, 41);
    let rep = verify_a_properties(w, &rs)?;
    let beta = cfg.lambda / (1.0 - 2.0 * cfg.delta);
    let margin = supersolution_margin(w, beta, &rs, &ts)?;
    let (pmin, pmax) = psi_comparison(w, beta, &rs, &ts)?;
    Ok(vec![
        Check::below("A1 |Delta A - a| / a", rep.a1_margin, 1e-8),
        Check::above("A2 min A'/r", rep.a2_min, 0.0),
        Check::at_most("A3 gradient ratio", rep.a3_worst_ratio, rep.a3_bound),
        Check::above(format!("supersolution margin beta={beta:.4}"), margin.min_normalized_margin, 0.0),
        Check::above("Phi Psi^beta lower", pmin, 0.0),
        Check::below("Phi Psi^beta spread", pmax / pmin, 1e6),
    ])
}

fn main() -> ExitCode {
    let result = match Cli::parse().cmd {
        Cmd::Build {
            shape,
            a0,
            alpha,
            dim,
            r_min,
            eps,
            t0,
            r_max,
            offset,
            samples,
            out,
        } => (|| {
            let shape = match shape {
                ShapeArg::Constant => Shape::Constant,
                ShapeArg::SmoothPower => Shape::SmoothPower,
                ShapeArg::PurePower => Shape::PurePower,
            };
            let profile = DampingProfile::new(shape, a0, alpha, dim, r_min)?;
            let choice = offset.map_or(OffsetChoice::Auto, OffsetChoice::Fixed);
            let w = build_a(profile, eps, t0, r_max, choice)?;
            println!(
                "A0 = {:.15e}\ngamma_tilde = {:.15e}\ngamma = {:.15e}\nmax similarity = {:.6}",
                w.a_offset,
                w.gammas.gamma_tilde,
                w.gammas.gamma,
                w.max_similarity(r_max)
            );
            if let Some(path) = out {
                let lo = if shape == Shape::PurePower { r_min } else { 0.0 };
                let rs = linspace(lo, r_max, samples.max(2));
                let mut a = Vec::new();
                let (mut big, mut dbig, mut psi) = (Vec::new(), Vec::new(), Vec::new());
                for &r in &rs {
                    a.push(damping_eval(&profile, r)?.0);
                    big.push(w.a_eps(r));
                    dbig.push(w.a_eps_prime(r));
                    psi.push(w.psi(r, 0.0));
                }
                write_table(&path, &[("r", &rs), ("a", &a), ("A", &big), ("dA", &dbig), ("Psi", &psi)])?;
            }
            Ok(true)
        })(),
        Cmd::Verify { config } => (|| {
            let checks = match config {
                None => weight_suite()?,
                Some(path) => {
                    let cfg = ExperimentConfig::load(&path)?;
                    let valid = harness::validate(&cfg)?;
                    let w = match valid.family {
                        Some(w) => w,
                        None => build_a(cfg.profile()?, cfg.eps, cfg.t0, cfg.r_max(), OffsetChoice::Auto)?,
                    };
                    config_checks(&cfg, &w)?
                }
            };
            print!("{}", render_table(&checks));
            Ok(checks.iter().all(|c| c.pass))
        })(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            let e: cascade_core::Error = e;
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
