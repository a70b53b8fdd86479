use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cascade::{lambda_schedule, DataSpec};
use crate::discretization::{Geometry, Grid};
use crate::error::{Error, Result};
use crate::specfun;
use crate::wave::CFL;
use crate::weights::{build_a, DampingProfile, OffsetChoice, Shape, WeightFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Cascade,
    HeatOracle,
    WaveOracle,
}

fn default_experiment() -> Experiment {
    Experiment::Cascade
}
fn default_nu() -> f64 {
    0.1
}
fn default_tolerance() -> f64 {
    crate::diagnostics::DEFAULT_TOLERANCE
}
fn default_oracle_tolerance() -> f64 {
    1e-3
}
fn yes() -> bool {
    true
}
fn default_stride() -> usize {
    1
}

/// One experiment, read from a flat TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_experiment")]
    pub experiment: Experiment,

    pub shape: Shape,
    pub a0: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub r_min: f64,

    pub geometry: Geometry,
    #[serde(rename = "N")]
    pub dim: usize,
    pub r_lo: f64,
    pub r_hi: f64,
    pub h: f64,

    pub eps: f64,
    pub delta: f64,
    pub t0: f64,
    pub lambda: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default)]
    pub n: usize,

    pub u0: DataSpec,
    pub u1: DataSpec,

    #[serde(rename = "T")]
    pub t_end: f64,
    pub dt: f64,

    #[serde(default)]
    pub fit_window: Option<[f64; 2]>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_oracle_tolerance")]
    pub oracle_tolerance: f64,
    /// Whether to include the boundedness and final-decade verdicts (meaningful only for long runs).
    #[serde(default = "yes")]
    pub energy_checks: bool,
    /// Evaluate energy functionals every this many steps.
    #[serde(default = "default_stride")]
    pub diag_stride: usize,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn profile(&self) -> Result<DampingProfile> {
        DampingProfile::new(self.shape, self.a0, self.alpha, self.dim, self.r_min)
    }

    pub fn grid(&self) -> Result<Grid> {
        match self.geometry {
            Geometry::Line => Grid::line(self.r_lo, self.r_hi, self.h),
            Geometry::Radial => Grid::radial(self.dim, self.r_lo, self.r_hi, self.h),
        }
    }

    /// Largest `|x|` on the grid.
    pub fn r_max(&self) -> f64 {
        self.r_lo.abs().max(self.r_hi.abs())
    }

    /// Power-tail exponent used when none is given: just above the weighted-`L²` threshold
    /// `p > (λ(2−α) + N − α)/2`.
    pub fn auto_tail_exponent(&self) -> f64 {
        0.5 * (self.lambda * (2.0 - self.alpha) + self.dim as f64 - self.alpha) + 0.25
    }

    /// The weighted-`L²` threshold on the tail exponent.
    pub fn tail_threshold(&self) -> f64 {
        0.5 * (self.lambda * (2.0 - self.alpha) + self.dim as f64 - self.alpha)
    }
}

/// A configuration that passed validation, with unresolved defaults filled in and, for
/// cascade runs, the weight family already built.
#[derive(Debug, Clone)]
pub struct ValidConfig {
    pub cfg: ExperimentConfig,
    pub family: Option<WeightFamily>,
}

fn resolve(d: DataSpec, p_auto: f64) -> DataSpec {
    match d {
        DataSpec::PowerTail { amp, p: None } => DataSpec::PowerTail { amp, p: Some(p_auto) },
        other => other,
    }
}

/// Checks every parameter constraint; all violations are reported together.
pub fn validate(cfg: &ExperimentConfig) -> Result<ValidConfig> {
    let mut errs: Vec<String> = Vec::new();
    let mut push = |cond: bool, msg: String| {
        if !cond {
            errs.push(msg);
        }
    };
    push(cfg.eps > 0.0 && cfg.eps < 0.5, format!("eps must satisfy 0 < eps < 1/2, got {}", cfg.eps));
    push(cfg.delta > 0.0 && cfg.delta < 0.5, format!("delta must satisfy 0 < delta < 1/2, got {}", cfg.delta));
    push(cfg.t0 >= 1.0, format!("t0 must be >= 1, got {}", cfg.t0));
    push(cfg.h > 0.0, format!("h must be positive, got {}", cfg.h));
    push(cfg.dt > 0.0, format!("dt must be positive, got {}", cfg.dt));
    push(cfg.t_end > 0.0, format!("T must be positive, got {}", cfg.t_end));
    push(cfg.diag_stride >= 1, "diag_stride must be >= 1".into());
    push(cfg.tolerance >= 0.0, format!("tolerance must be nonnegative, got {}", cfg.tolerance));
    if cfg.experiment != Experiment::HeatOracle {
        push(
            cfg.dt <= CFL * cfg.h * (1.0 + 1e-12),
            format!("CFL: dt = {} must not exceed {CFL}·h = {}", cfg.dt, CFL * cfg.h),
        );
    }
    if cfg.geometry == Geometry::Line {
        push(cfg.dim == 1, format!("line geometry needs N = 1, got {}", cfg.dim));
    }
    if let Some([ta, tb]) = cfg.fit_window {
        push(
            ta > 0.0 && tb >= 4.0 * ta && tb <= cfg.t_end * (1.0 + 1e-12),
            format!("fit window [{ta}, {tb}] needs 0 < t_a, t_b >= 4 t_a and t_b <= T"),
        );
    }
    if let Err(e) = cfg.profile() {
        errs.push(e.to_string());
    }
    if let Err(e) = cfg.grid() {
        errs.push(e.to_string());
    }
    if cfg.shape == Shape::PurePower && cfg.r_lo < cfg.r_min {
        errs.push(format!("pure_power needs r_lo >= r_min = {}, got {}", cfg.r_min, cfg.r_lo));
    }

    if cfg.experiment == Experiment::Cascade && cfg.eps > 0.0 && cfg.eps < 0.5 && cfg.dim >= 1 {
        let a = cfg.alpha;
        let lo = 2.0 * a * (cfg.n as f64 + 1.0) / (2.0 - a);
        if let Ok(gp) = specfun::gamma_pair(cfg.dim, a, cfg.eps) {
            let hi = (1.0 - 2.0 * cfg.delta) * gp.gamma;
            if !(cfg.lambda >= lo - 1e-12 && cfg.lambda < hi) {
                errs.push(format!(
                    "lambda = {} must lie in [2 alpha (n+1)/(2-alpha), (1-2 delta) gamma_eps) = [{lo}, {hi})",
                    cfg.lambda
                ));
            }
        }
        if a > 0.0 {
            let bound = (cfg.dim as f64 - a) / (2.0 * a);
            if !((cfg.n as f64 + 1.0) < bound) {
                errs.push(format!(
                    "order n = {} needs n+1 < (N-alpha)/(2 alpha) = {bound}",
                    cfg.n
                ));
            }
        }
        let last = *lambda_schedule(cfg.lambda, a, cfg.n).last().expect("nonempty");
        if last < -1e-12 {
            errs.push(format!("lambda_(n+1) = {last} must be >= 0"));
        }
        if !(cfg.nu > 0.0) {
            errs.push(format!("nu must be positive, got {}", cfg.nu));
        }
    }
    match cfg.experiment {
        Experiment::HeatOracle => {
            if cfg.shape != Shape::Constant || cfg.geometry != Geometry::Line {
                errs.push("heat_oracle needs a constant profile on a line".into());
            }
            if !matches!(cfg.u0, DataSpec::Gaussian { .. }) {
                errs.push("heat_oracle needs gaussian u0".into());
            }
        }
        Experiment::WaveOracle => {
            if cfg.shape != Shape::Constant || cfg.geometry != Geometry::Line {
                errs.push("wave_oracle needs a constant profile on a line".into());
            }
            let index = |d: &DataSpec| match d {
                DataSpec::Mode { index, .. } => Some(Some(*index)),
                DataSpec::Zero => Some(None),
                _ => None,
            };
            match (index(&cfg.u0), index(&cfg.u1)) {
                (Some(a), Some(b)) if a.is_none() || b.is_none() || a == b => {}
                _ => errs.push("wave_oracle needs mode (or zero) data with a common index".into()),
            }
        }
        Experiment::Cascade => {}
    }
    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    let family = if cfg.experiment == Experiment::Cascade {
        let profile = cfg.profile()?;
        let fam = build_a(profile, cfg.eps, cfg.t0, cfg.r_max(), OffsetChoice::Auto)?;
        let z = fam.max_similarity(cfg.r_max());
        if z > specfun::SERIES_RANGE {
            return Err(Error::Config(vec![format!(
                "similarity variable reaches {z:.3} > {} at r = {} and t = 0; raise t0 or shrink the domain",
                specfun::SERIES_RANGE,
                cfg.r_max()
            )]));
        }
        Some(fam)
    } else {
        None
    };
    let p_auto = cfg.auto_tail_exponent();
    let mut out = cfg.clone();
    out.u0 = resolve(cfg.u0, p_auto);
    out.u1 = resolve(cfg.u1, p_auto);
    Ok(ValidConfig { cfg: out, family })
}
