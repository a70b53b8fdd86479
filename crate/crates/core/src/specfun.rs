//! Kummer's confluent hypergeometric function and the self-similar profile family built on it.
//!
//! `M(b, c; s) = Σ (b)_n / (c)_n · s^n / n!` is summed directly from its term recurrence with
//! compensated (Neumaier) accumulation. The profile
//!
//! ```text
//! φ_β(s) = e^{-s} M(γ - β, γ; s)
//! ```
//!
//! is evaluated through the exponentially scaled series, so the product never overflows even
//! where `M` itself would; the weight layer still keeps its similarity variable below
//! [`SERIES_RANGE`].

use crate::check::Check;
use crate::error::{Error, Result};

/// Largest similarity variable the weight evaluators feed into the series.
pub const SERIES_RANGE: f64 = 50.0;

const TERM_CUTOFF: f64 = 1e-17;
const SMALL_TERMS_TO_STOP: usize = 3;
const MAX_TERMS: usize = 200_000;
// Exact power of two used to renormalise the running sum.
const RESCALE_EXP: i32 = 600;

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn new(x: f64) -> Self {
        Self { sum: x, comp: 0.0 }
    }

    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn scale(&mut self, f: f64) {
        self.sum *= f;
        self.comp *= f;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums the series, returning `(mantissa, log_scale)` with `M = mantissa · e^{log_scale}`.
fn series(b: f64, c: f64, s: f64) -> Result<(f64, f64)> {
    if !(b.is_finite() && c.is_finite() && s.is_finite()) {
        return Err(Error::Domain(format!(
            "kummer_m needs finite arguments, got b={b}, c={c}, s={s}"
        )));
    }
    if s < 0.0 {
        return Err(Error::Domain(format!("kummer_m needs s >= 0, got s={s}")));
    }
    if c <= 0.0 {
        return Err(Error::Domain(format!("kummer_m needs c > 0, got c={c}")));
    }
    if s == 0.0 {
        return Ok((1.0, 0.0));
    }

    let rescale = 2f64.powi(-RESCALE_EXP);
    let mut log_scale = 0.0;
    let mut term = 1.0_f64;
    let mut acc = CompensatedSum::new(1.0);
    let mut small_run = 0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        let ratio = (b + nf) * s / ((c + nf) * (nf + 1.0));
        if ratio == 0.0 {
            // b is a non-positive integer: the polynomial is complete.
            return Ok((acc.value(), log_scale));
        }
        term *= ratio;
        acc.add(term);
        if term.abs() > 1.0 / rescale {
            term *= rescale;
            acc.scale(rescale);
            log_scale += f64::from(RESCALE_EXP) * std::f64::consts::LN_2;
        }
        if term.abs() < TERM_CUTOFF * acc.value().abs() && ratio.abs() < 1.0 {
            small_run += 1;
            if small_run >= SMALL_TERMS_TO_STOP {
                return Ok((acc.value(), log_scale));
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::Domain(format!(
        "kummer_m series did not converge in {MAX_TERMS} terms (b={b}, c={c}, s={s})"
    )))
}

/// Kummer's function `M(b, c; s)` for `c > 0`, `s >= 0`.
pub fn kummer_m(b: f64, c: f64, s: f64) -> Result<f64> {
    let (m, log_scale) = series(b, c, s)?;
    let v = m * log_scale.exp();
    if !v.is_finite() {
        return Err(Error::Domain(format!(
            "kummer_m overflows at s={s}; use kummer_m_scaled"
        )));
    }
    Ok(v)
}

/// `e^{-s} M(b, c; s)`, finite for every `s >= 0`.
pub fn kummer_m_scaled(b: f64, c: f64, s: f64) -> Result<f64> {
    let (m, log_scale) = series(b, c, s)?;
    Ok(m * (log_scale - s).exp())
}

/// The constants `γ̃_ε` and `γ_ε` for a dimension, decay exponent and slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPair {
    pub gamma_tilde: f64,
    pub gamma: f64,
    pub n: usize,
    pub alpha: f64,
    pub eps: f64,
}

pub fn gamma_pair(n: usize, alpha: f64, eps: f64) -> Result<GammaPair> {
    if n == 0 {
        return Err(Error::Domain("dimension must be >= 1".into()));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Domain(format!("eps must lie in (0, 1/2), got {eps}")));
    }
    let nf = n as f64;
    if !(alpha.is_finite() && alpha < nf.min(2.0)) {
        return Err(Error::Domain(format!(
            "alpha must be below min(2, N) = {}, got {alpha}",
            nf.min(2.0)
        )));
    }
    let gamma_tilde = 1.0 / ((2.0 - alpha) / (nf - alpha) + 2.0 * eps);
    Ok(GammaPair {
        gamma_tilde,
        gamma: (1.0 - 2.0 * eps) * gamma_tilde,
        n,
        alpha,
        eps,
    })
}

/// Index `β` and second Kummer parameter `γ` of a profile `φ_β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiParams {
    pub beta: f64,
    pub gamma: f64,
}

impl PhiParams {
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::Domain(format!("beta must be >= 0, got {beta}")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Domain(format!("gamma must be > 0, got {gamma}")));
        }
        Ok(Self { beta, gamma })
    }

    pub fn shifted(self, by: f64) -> Self {
        Self {
            beta: self.beta + by,
            gamma: self.gamma,
        }
    }
}

/// `φ_β(s)` with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiValue {
    pub phi: f64,
    pub dphi: f64,
    pub d2phi: f64,
}

pub fn phi_eval(p: PhiParams, s: f64) -> Result<PhiValue> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::Domain(format!("phi needs s >= 0, got {s}")));
    }
    let PhiParams { beta, gamma } = p;
    if beta == 0.0 {
        return Ok(PhiValue {
            phi: 1.0,
            dphi: 0.0,
            d2phi: 0.0,
        });
    }
    if beta == gamma {
        let e = (-s).exp();
        return Ok(PhiValue {
            phi: e,
            dphi: -e,
            d2phi: e,
        });
    }
    let b = gamma - beta;
    Ok(PhiValue {
        phi: kummer_m_scaled(b, gamma, s)?,
        dphi: -(beta / gamma) * kummer_m_scaled(b, gamma + 1.0, s)?,
        d2phi: beta * (beta + 1.0) / (gamma * (gamma + 1.0)) * kummer_m_scaled(b, gamma + 2.0, s)?,
    })
}

/// Sample points on `[0, s_max]`: a uniform part near the origin and a logarithmic tail.
pub fn sample_points(s_max: f64, count: usize) -> Vec<f64> {
    let half = count / 2;
    let knee = s_max.min(5.0);
    let mut pts: Vec<f64> = (0..=half).map(|i| knee * i as f64 / half as f64).collect();
    if s_max > knee {
        let ratio = (s_max / knee).ln();
        pts.extend((1..=count - half).map(|i| knee * (ratio * i as f64 / (count - half) as f64).exp()));
    }
    pts
}

/// Observed convergence order of `est(h)` towards `exact` under halving of `h`.
fn fd_order(h0: f64, exact: f64, est: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let e1 = (est(h0)? - exact).abs();
    let e2 = (est(h0 / 2.0)? - exact).abs();
    Ok((e1 / e2).log2())
}

/// Gamma values the identity suite runs over: `(N, α, ε)` pairs from the shipped experiments.
pub fn suite_gammas() -> Vec<GammaPair> {
    [(1, 0.0, 0.1), (3, 0.5, 0.05), (1, 0.5, 0.1)]
        .into_iter()
        .map(|(n, a, e)| gamma_pair(n, a, e).expect("suite parameters are valid"))
        .collect()
}

/// The scalar identity suite: exponential reduction, recurrence, ODE residual, two-sided
/// bounds, derivative lower bound and finite-difference consistency.
pub fn invariant_suite() -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    let mut worst_exp = 0.0_f64;
    for &b in &[0.36, 1.0, 2.0] {
        for &s in &[0.1, 1.0, 5.0, 10.0, 30.0] {
            let m = kummer_m(b, b, s)?;
            worst_exp = worst_exp.max((m - s.exp()).abs() / s.exp());
        }
    }
    checks.push(Check::below("M(b,b;s) = e^s (relative)", worst_exp, 1e-12));

    let s_small = sample_points(SERIES_RANGE, 200);
    let s_wide = sample_points(1e4, 400);
    for g in suite_gammas() {
        let gamma = g.gamma;
        let tag = format!("gamma={gamma:.6}");
        let betas = [0.1, 0.2, 0.3 * gamma, 0.9 * gamma];

        let mut rec = 0.0_f64;
        let mut ode = 0.0_f64;
        for &beta in &betas {
            let p = PhiParams::new(beta, gamma)?;
            for &s in &s_small {
                let v = phi_eval(p, s)?;
                let up = phi_eval(p.shifted(1.0), s)?;
                let r = (beta * v.phi + s * v.dphi - beta * up.phi).abs() / (1.0 + v.phi.abs());
                rec = rec.max(r);
                let o = (s * v.d2phi + (gamma + s) * v.dphi + beta * v.phi).abs() / (1.0 + s);
                ode = ode.max(o);
            }
        }
        checks.push(Check::below(format!("recurrence residual [{tag}]"), rec, 1e-10));
        checks.push(Check::below(format!("ODE residual [{tag}]"), ode, 1e-9));

        // Two-sided bound, derivative lower bound and sign pattern for β < γ.
        let mut k_min = f64::INFINITY;
        let mut k_max = 0.0_f64;
        let mut dk_min = f64::INFINITY;
        let mut sign_viol = 0.0_f64;
        for &beta in betas.iter().filter(|&&b| b < gamma) {
            let p = PhiParams::new(beta, gamma)?;
            for &s in &s_wide {
                let v = phi_eval(p, s)?;
                let ratio = v.phi * (1.0 + s).powf(beta);
                k_min = k_min.min(ratio);
                k_max = k_max.max(ratio);
                dk_min = dk_min.min(-v.dphi * (1.0 + s).powf(beta + 1.0));
                sign_viol = sign_viol.max(v.dphi.max(0.0)).max((-v.d2phi).max(0.0));
            }
        }
        checks.push(Check::above(format!("min phi(1+s)^beta on [0,1e4] [{tag}]"), k_min, 0.0));
        checks.push(Check::below(
            format!("max phi(1+s)^beta on [0,1e4] [{tag}]"),
            k_max,
            f64::INFINITY,
        ));
        checks.push(Check::above(
            format!("min -phi'(1+s)^(beta+1) on [0,1e4] [{tag}]"),
            dk_min,
            0.0,
        ));
        checks.push(Check::at_most(format!("sign violations phi'<=0, phi''>=0 [{tag}]"), sign_viol, 0.0));

        // Finite-difference order of the closed-form derivatives.
        let p = PhiParams::new(0.2_f64.min(0.5 * gamma), gamma)?;
        let mut worst_order = f64::INFINITY;
        for &s in &[0.5, 3.0, 10.0] {
            let v = phi_eval(p, s)?;
            let f = |x: f64| phi_eval(p, x).map(|v| v.phi);
            let o1 = fd_order(0.1, v.dphi, |h| Ok((f(s + h)? - f(s - h)?) / (2.0 * h)))?;
            let o2 = fd_order(0.1, v.d2phi, |h| {
                Ok((f(s + h)? - 2.0 * f(s)? + f(s - h)?) / (h * h))
            })?;
            worst_order = worst_order.min(o1).min(o2);
        }
        checks.push(Check::at_least(format!("finite-difference order of phi', phi'' [{tag}]"), worst_order, 1.9));
    }
    Ok(checks)
}
