//! Weighted energy functionals, cumulative time integrals and decay-rate fits.

use serde::{Deserialize, Serialize};

use crate::check::Check;
use crate::discretization::{self, FieldTrajectory, Grid};
use crate::error::{Error, Result};
use crate::weights::{damping_eval, WeightFamily};

/// Which functional to evaluate. Powers of `Ψ` in the `j`-variants are shifted by `2j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyKind {
    /// `∫ (2w∂ₜw + a w²) Φ_β^{-1+2δ}`, `β = λ/(1−2δ)`.
    E0,
    /// `∫ (|∇w|² + |∂ₜw|²) Ψ^{λ+1}`.
    E1,
    /// `ν E1 + E0`.
    E,
    /// `∫ (2w∂ₜw + a w²) Ψ^{λ+2j}`.
    E0j,
    /// `∫ (|∇w|² + |∂ₜw|²) Ψ^{λ+1+2j}`.
    E1j,
    Ej,
    /// `∫ [a] w² Ψ^power`.
    WeightedL2 { with_a: bool, power: f64 },
    /// `∫ |∇w|² Ψ^power`.
    GradL2 { power: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub lambda: f64,
    pub delta: f64,
    pub nu: f64,
    pub j: usize,
}

impl EnergyParams {
    pub fn beta(&self) -> f64 {
        self.lambda / (1.0 - 2.0 * self.delta)
    }
}

impl EnergyKind {
    pub fn label(&self, p: &EnergyParams) -> String {
        match self {
            EnergyKind::E0 => "E0".into(),
            EnergyKind::E1 => "E1".into(),
            EnergyKind::E => "E".into(),
            EnergyKind::E0j => format!("E0^({})", p.j),
            EnergyKind::E1j => format!("E1^({})", p.j),
            EnergyKind::Ej => format!("E^({})", p.j),
            EnergyKind::WeightedL2 { with_a: true, power } => format!("int a w^2 Psi^{power}"),
            EnergyKind::WeightedL2 { with_a: false, power } => format!("int w^2 Psi^{power}"),
            EnergyKind::GradL2 { power } => format!("int |grad w|^2 Psi^{power}"),
        }
    }

    fn needs_phi(&self) -> bool {
        matches!(self, EnergyKind::E0 | EnergyKind::E)
    }

    fn needs_velocity(&self) -> bool {
        !matches!(self, EnergyKind::WeightedL2 { .. } | EnergyKind::GradL2 { .. })
    }
}

/// Checks the standing constraints for a functional.
pub fn check_energy_params(kind: EnergyKind, p: &EnergyParams, w: &WeightFamily) -> Result<()> {
    let mut problems = Vec::new();
    if kind.needs_phi() {
        if !(p.delta > 0.0 && p.delta < 0.5) {
            problems.push(format!("delta must lie in (0, 1/2), got {}", p.delta));
        } else if !(p.lambda >= 0.0 && p.beta() < w.gammas.gamma) {
            problems.push(format!(
                "need 0 <= lambda < (1-2 delta) gamma_eps = {}, got lambda = {}",
                (1.0 - 2.0 * p.delta) * w.gammas.gamma,
                p.lambda
            ));
        }
    }
    if matches!(kind, EnergyKind::E | EnergyKind::Ej) && !(p.nu > 0.0) {
        problems.push(format!("nu must be positive, got {}", p.nu));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(problems))
    }
}

/// `a`, `A_ε` and quadrature weights at the grid nodes.
#[derive(Debug, Clone)]
pub struct WeightNodes<'a> {
    pub family: &'a WeightFamily,
    pub a: Vec<f64>,
    pub big_a: Vec<f64>,
    ones: Vec<f64>,
}

impl<'a> WeightNodes<'a> {
    pub fn new(g: &Grid, family: &'a WeightFamily) -> Result<Self> {
        let mut a = Vec::with_capacity(g.len());
        let mut big_a = Vec::with_capacity(g.len());
        for i in 0..g.len() {
            let r = g.radius(i);
            a.push(damping_eval(&family.profile, r)?.0);
            big_a.push(family.a_eps(r));
        }
        Ok(Self {
            family,
            a,
            big_a,
            ones: vec![1.0; g.len()],
        })
    }

    pub fn psi(&self, i: usize, t: f64) -> f64 {
        self.family.t0 + t + self.big_a[i]
    }
}

/// Value of one functional for a single snapshot.
pub fn energy_value(
    g: &Grid,
    wn: &WeightNodes,
    kind: EnergyKind,
    p: &EnergyParams,
    t: f64,
    w: &[f64],
    dw: Option<&[f64]>,
) -> Result<f64> {
    g.check(w)?;
    let m = g.len();
    let zeros;
    let dw = match dw {
        Some(d) => d,
        None if kind.needs_velocity() => {
            return Err(Error::Config(vec![format!("{} needs the time derivative", kind.label(p))]));
        }
        None => {
            zeros = vec![0.0; m];
            &zeros
        }
    };
    let jj = 2.0 * p.j as f64;
    let e1 = |power: f64| -> f64 {
        let grad = discretization::gradient(g, w);
        let f: Vec<f64> = (0..m)
            .map(|i| (grad[i] * grad[i] + dw[i] * dw[i]) * wn.psi(i, t).powf(power))
            .collect();
        discretization::weighted_sum(g, &f, &wn.ones)
    };
    let e0_psi = |power: f64| -> f64 {
        let f: Vec<f64> = (0..m)
            .map(|i| (2.0 * w[i] * dw[i] + wn.a[i] * w[i] * w[i]) * wn.psi(i, t).powf(power))
            .collect();
        discretization::weighted_sum(g, &f, &wn.ones)
    };
    let e0_phi = || -> Result<f64> {
        let beta = p.beta();
        let expo = -1.0 + 2.0 * p.delta;
        let mut f = Vec::with_capacity(m);
        for i in 0..m {
            let phi = wn.family.phi_value(beta, wn.big_a[i], t)?;
            f.push((2.0 * w[i] * dw[i] + wn.a[i] * w[i] * w[i]) * phi.powf(expo));
        }
        Ok(discretization::weighted_sum(g, &f, &wn.ones))
    };
    Ok(match kind {
        EnergyKind::E0 => e0_phi()?,
        EnergyKind::E1 => e1(p.lambda + 1.0),
        EnergyKind::E => p.nu * e1(p.lambda + 1.0) + e0_phi()?,
        EnergyKind::E0j => e0_psi(p.lambda + jj),
        EnergyKind::E1j => e1(p.lambda + 1.0 + jj),
        EnergyKind::Ej => p.nu * e1(p.lambda + 1.0 + jj) + e0_psi(p.lambda + jj),
        EnergyKind::WeightedL2 { with_a, power } => {
            let f: Vec<f64> = (0..m)
                .map(|i| {
                    let c = if with_a { wn.a[i] } else { 1.0 };
                    c * w[i] * w[i] * wn.psi(i, t).powf(power)
                })
                .collect();
            discretization::weighted_sum(g, &f, &wn.ones)
        }
        EnergyKind::GradL2 { power } => {
            let grad = discretization::gradient(g, w);
            let f: Vec<f64> = (0..m).map(|i| grad[i] * grad[i] * wn.psi(i, t).powf(power)).collect();
            discretization::weighted_sum(g, &f, &wn.ones)
        }
    })
}

/// A functional along a trajectory together with its running time integral.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyTrace {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl EnergyTrace {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            times: Vec::new(),
            values: Vec::new(),
            cumulative: Vec::new(),
        }
    }

    /// Appends a sample and extends the trapezoid integral.
    pub fn push(&mut self, t: f64, v: f64) {
        let c = match (self.times.last(), self.values.last(), self.cumulative.last()) {
            (Some(&t0), Some(&v0), Some(&c0)) => c0 + 0.5 * (t - t0) * (v + v0),
            _ => 0.0,
        };
        self.times.push(t);
        self.values.push(v);
        self.cumulative.push(c);
    }
}

pub fn energy_trace(
    g: &Grid,
    traj: &FieldTrajectory,
    wn: &WeightNodes,
    kind: EnergyKind,
    p: &EnergyParams,
) -> Result<EnergyTrace> {
    check_energy_params(kind, p, wn.family)?;
    let mut out = EnergyTrace::new(kind.label(p));
    for (k, (&t, w)) in traj.times.iter().zip(&traj.values).enumerate() {
        let dw = traj.derivs.as_ref().map(|d| d[k].as_slice());
        out.push(t, energy_value(g, wn, kind, p, t, w, dw)?);
    }
    Ok(out)
}

/// Running trapezoid integral of a sampled series.
pub fn cumulative_integral(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut tr = EnergyTrace::new("");
    for (&t, &v) in times.iter().zip(values) {
        tr.push(t, v);
    }
    tr.cumulative
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn passes(self) -> bool {
        self == Verdict::Satisfied
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateReport {
    pub slope: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub points: usize,
    pub theoretical: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

pub const DEFAULT_TOLERANCE: f64 = 0.15;

/// Least-squares slope of `(log t, log y)` on `[t_a, t_b]`: `(slope, stderr, points)`.
pub fn fit_power_law(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<(f64, f64, usize)> {
    let (ta, tb) = window;
    if !(ta > 0.0 && tb >= 4.0 * ta) {
        return Err(Error::Config(vec![format!(
            "fit window [{ta}, {tb}] must satisfy 0 < t_a and t_b >= 4 t_a"
        )]));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &y) in times.iter().zip(values) {
        if t < ta || t > tb {
            continue;
        }
        if !(y > 0.0) {
            return Err(Error::Fit(format!(
                "nonpositive value {y} at t = {t}; the series has reached the scheme noise floor, shorten T or refine"
            )));
        }
        xs.push(t.ln());
        ys.push(y.ln());
    }
    let n = xs.len();
    if n < 2 {
        return Ok((f64::NAN, f64::NAN, n));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let stderr = if n > 2 {
        let sse: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
            .sum();
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok((slope, stderr, n))
}

/// Fits the decay slope and compares it one-sidedly with an upper-bound exponent.
pub fn fit_decay_rate(
    times: &[f64],
    values: &[f64],
    window: (f64, f64),
    theoretical: f64,
    tolerance: f64,
) -> Result<RateReport> {
    let (slope, stderr, points) = fit_power_law(times, values, window)?;
    let verdict = if points < 3 {
        Verdict::Inconclusive
    } else if slope <= theoretical + tolerance {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    };
    Ok(RateReport {
        slope,
        stderr,
        window,
        points,
        theoretical,
        tolerance,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoreticalRates {
    /// Decay exponent of `‖∂ₜʲV_j‖`, `j = 0..=n`.
    pub profiles: Vec<f64>,
    /// Decay exponent of the remainder `‖u − Σ ∂ₜʲV_j‖`.
    pub residual: f64,
}

pub fn theoretical_rates(lambda: f64, alpha: f64, n: usize) -> Result<TheoreticalRates> {
    let lo = 2.0 * alpha * (n as f64 + 1.0) / (2.0 - alpha);
    if lambda < lo - 1e-12 {
        return Err(Error::Config(vec![format!(
            "lambda = {lambda} is below 2 alpha (n+1)/(2-alpha) = {lo}; the admissible interval is [{lo}, (1-2 delta) gamma_eps)"
        )]));
    }
    let shift = alpha / (2.0 * (2.0 - alpha));
    let step = (1.0 - alpha) / (2.0 - alpha);
    Ok(TheoreticalRates {
        profiles: (0..=n).map(|j| -0.5 * lambda - 2.0 * j as f64 * step + shift).collect(),
        residual: -0.5 * lambda - (2 * n + 1) as f64 * step + shift,
    })
}

/// Late-half maximum against early-half maximum (`late ≤ 1.1 · early`).
pub fn boundedness_check(name: impl Into<String>, times: &[f64], values: &[f64]) -> Check {
    let t_mid = 0.5 * (times.first().copied().unwrap_or(0.0) + times.last().copied().unwrap_or(0.0));
    let mut early = 0.0_f64;
    let mut late = 0.0_f64;
    for (&t, &v) in times.iter().zip(values) {
        if t <= t_mid {
            early = early.max(v);
        } else {
            late = late.max(v);
        }
    }
    if early == 0.0 && late == 0.0 {
        return Check::at_most(name, 0.0, 1.1);
    }
    Check::at_most(name, late / early, 1.1)
}

/// Fraction of the running integral gained over the final decade `[T/10, T]` (passes below 5%).
pub fn final_decade_gain(name: impl Into<String>, times: &[f64], cumulative: &[f64]) -> Check {
    let t_end = times.last().copied().unwrap_or(0.0);
    let total = cumulative.last().copied().unwrap_or(0.0);
    let idx = times.partition_point(|&t| t < 0.1 * t_end);
    let before = if idx < cumulative.len() { cumulative[idx] } else { total };
    let gain = if total > 0.0 { (total - before) / total } else { 0.0 };
    Check::below(name, gain, 0.05)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{build_a, DampingProfile, OffsetChoice};

    fn family() -> WeightFamily {
        build_a(DampingProfile::constant(1.0, 1).unwrap(), 0.1, 10.0, 20.0, OffsetChoice::Fixed(0.5)).unwrap()
    }

    fn params() -> EnergyParams {
        EnergyParams {
            lambda: 0.3,
            delta: 0.05,
            nu: 0.5,
            j: 1,
        }
    }

    #[test]
    fn exact_power_law() {
        let ts: Vec<f64> = (0..=90).map(|i| 10.0 + i as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 7.0 * t.powf(-0.25)).collect();
        let r = fit_decay_rate(&ts, &ys, (10.0, 100.0), -0.2, DEFAULT_TOLERANCE).unwrap();
        assert!((r.slope + 0.25).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Satisfied);
        let flat = vec![3.0; ts.len()];
        let r = fit_decay_rate(&ts, &flat, (10.0, 100.0), -0.5, 0.15).unwrap();
        assert!(r.slope.abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Violated);
    }

    #[test]
    fn fit_errors_and_inconclusive() {
        let ts = [10.0, 20.0, 40.0];
        assert!(matches!(fit_power_law(&ts, &[1.0, 0.0, 1.0], (10.0, 40.0)), Err(Error::Fit(_))));
        assert!(matches!(fit_power_law(&ts, &[1.0; 3], (10.0, 30.0)), Err(Error::Config(_))));
        let r = fit_decay_rate(&ts, &[1.0, 0.5, 0.25], (10.0, 40.0), -1.0, 0.15).unwrap();
        assert_eq!(r.verdict, Verdict::Satisfied);
        let r = fit_decay_rate(&[10.0, 40.0], &[1.0, 0.5], (10.0, 40.0), -1.0, 0.15).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn rate_examples() {
        let r = theoretical_rates(0.4, 0.0, 0).unwrap();
        assert!((r.profiles[0] + 0.2).abs() < 1e-15 && (r.residual + 0.7).abs() < 1e-15);
        let r = theoretical_rates(0.4, 0.0, 1).unwrap();
        assert!((r.profiles[1] + 1.2).abs() < 1e-15 && (r.residual + 1.7).abs() < 1e-15);
        let r = theoretical_rates(1.0, 0.5, 0).unwrap();
        assert!((r.profiles[0] + 1.0 / 3.0).abs() < 1e-15);
        assert!((r.residual + 2.0 / 3.0).abs() < 1e-15);
        assert!(theoretical_rates(0.5, 0.5, 0).is_err());
    }

    #[test]
    fn zero_trajectory_has_zero_traces() {
        let g = Grid::line(-10.0, 10.0, 0.1).unwrap();
        let w = family();
        let wn = WeightNodes::new(&g, &w).unwrap();
        let mut tr = FieldTrajectory::new("zero");
        for k in 0..5 {
            tr.push(k as f64, g.zeros(), Some(g.zeros()));
        }
        for kind in [EnergyKind::E0, EnergyKind::E1, EnergyKind::E, EnergyKind::E0j, EnergyKind::Ej] {
            let e = energy_trace(&g, &tr, &wn, kind, &params()).unwrap();
            assert!(e.values.iter().chain(&e.cumulative).all(|&v| v == 0.0));
        }
    }

    #[test]
    fn static_snapshot_grows_linearly() {
        let g = Grid::line(-10.0, 10.0, 0.1).unwrap();
        let w = family();
        let wn = WeightNodes::new(&g, &w).unwrap();
        let u = g.sample(|x| (-x * x).exp());
        let mut tr = FieldTrajectory::new("static");
        for k in 0..6 {
            tr.push(k as f64, u.clone(), Some(g.zeros()));
        }
        let p = EnergyParams { lambda: 0.0, ..params() };
        let e = energy_trace(&g, &tr, &wn, EnergyKind::E1, &p).unwrap();
        let d: Vec<f64> = e.values.windows(2).map(|w| w[1] - w[0]).collect();
        for x in &d {
            assert!((x - d[0]).abs() < 1e-12 * d[0].abs());
        }
        assert!(d[0] > 0.0);
    }

    #[test]
    fn phi_functional_needs_beta_below_gamma() {
        let g = Grid::line(-10.0, 10.0, 0.1).unwrap();
        let w = family();
        let wn = WeightNodes::new(&g, &w).unwrap();
        let tr = FieldTrajectory::new("empty");
        let p = EnergyParams { lambda: 0.35, ..params() };
        assert!(matches!(energy_trace(&g, &tr, &wn, EnergyKind::E0, &p), Err(Error::Config(_))));
        assert!(energy_trace(&g, &tr, &wn, EnergyKind::E1, &p).is_ok());
    }

    #[test]
    fn e0_with_beta_zero_is_plain_integral() {
        let g = Grid::line(-10.0, 10.0, 0.1).unwrap();
        let w = family();
        let wn = WeightNodes::new(&g, &w).unwrap();
        let u = g.sample(|x| (-x * x).exp());
        let du = g.sample(|x| x * (-x * x).exp());
        let p = EnergyParams { lambda: 0.0, ..params() };
        let v = energy_value(&g, &wn, EnergyKind::E0, &p, 1.0, &u, Some(&du)).unwrap();
        let f: Vec<f64> = u.iter().zip(&du).map(|(a, b)| 2.0 * a * b + a * a).collect();
        let want = discretization::weighted_integral(&g, &f, |_| 1.0).unwrap();
        assert!((v - want).abs() < 1e-14);
    }

    #[test]
    fn boundedness_and_gain() {
        let ts: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.2).collect();
        let decaying: Vec<f64> = ts.iter().map(|t| (1.0 + t).powi(-2)).collect();
        assert!(boundedness_check("d", &ts, &decaying).pass);
        let growing: Vec<f64> = ts.iter().map(|t| 1.0 + t).collect();
        assert!(!boundedness_check("g", &ts, &growing).pass);
        let c = cumulative_integral(&ts, &decaying);
        assert!((c.last().unwrap() - (1.0 - 1.0 / 201.0)).abs() < 1e-2);
        assert!(final_decade_gain("d", &ts, &c).pass);
        let slow: Vec<f64> = ts.iter().map(|t| (1.0 + t).powf(-0.5)).collect();
        assert!(!final_decade_gain("s", &ts, &cumulative_integral(&ts, &slow)).pass);
    }

    #[test]
    fn heat_l2_slope() {
        let g = Grid::line(-60.0, 60.0, 0.1).unwrap();
        let p = DampingProfile::constant(1.0, 1).unwrap();
        let tr = crate::parabolic::solve_parabolic(&g, &p, &g.sample(|x| (-x * x).exp()), None, 100.0, 0.1).unwrap();
        let r = fit_decay_rate(&tr.times, &tr.l2_trace(&g), (10.0, 100.0), -0.25, 0.15).unwrap();
        assert!((r.slope + 0.25).abs() < 0.02, "{r:?}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rate_identities(lambda in 0.0f64..3.0, alpha in 0.0f64..0.9, n in 0usize..4) {
                let lo = 2.0 * alpha * (n as f64 + 1.0) / (2.0 - alpha);
                let r = theoretical_rates(lambda + lo, alpha, n).unwrap();
                for j in 0..n {
                    let gap = r.profiles[j] - r.profiles[j + 1];
                    prop_assert!((gap - 2.0 * (1.0 - alpha) / (2.0 - alpha)).abs() < 1e-12);
                }
                prop_assert!((r.profiles[n] - r.residual - (1.0 - alpha) / (2.0 - alpha)).abs() < 1e-12);
            }

            #[test]
            fn slope_is_scale_invariant(c in 1e-6f64..1e6, s in -3.0f64..1.0) {
                let ts: Vec<f64> = (0..50).map(|i| 5.0 + 2.0 * i as f64).collect();
                let ys: Vec<f64> = ts.iter().map(|t| (1.0 + t).powf(s) * (1.0 + 0.1 * (t / 7.0).sin())).collect();
                let scaled: Vec<f64> = ys.iter().map(|y| c * y).collect();
                let a = fit_power_law(&ts, &ys, (5.0, 103.0)).unwrap().0;
                let b = fit_power_law(&ts, &scaled, (5.0, 103.0)).unwrap().0;
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
