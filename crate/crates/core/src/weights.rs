//! Damping profiles, the potential `A_ε` with `ΔA_ε = a`, the parabolic weight
//! `Ψ = t₀ + t + A_ε` and the supersolution family `Φ_β = (t₀+t)^{-β} φ_β(γ̃ A_ε / (t₀+t))`.

use serde::{Deserialize, Serialize};

use crate::check::Check;
use crate::discretization::{self, Grid};
use crate::error::{Error, Result};
use crate::quad;
use crate::specfun::{self, GammaPair, PhiParams, SERIES_RANGE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// `a(x) = a₀`.
    Constant,
    /// `a(x) = a₀ (1 + |x|²)^{-α/2}`.
    SmoothPower,
    /// `a(r) = a₀ r^{-α}` on `r ≥ r_min > 0`.
    PurePower,
}

/// The damping coefficient `a(x)`, radially symmetric with `|x|^α a(x) → a₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingProfile {
    pub shape: Shape,
    pub a0: f64,
    pub alpha: f64,
    pub dim: usize,
    /// Inner radius; only meaningful for [`Shape::PurePower`].
    pub r_min: f64,
}

impl DampingProfile {
    pub fn new(shape: Shape, a0: f64, alpha: f64, dim: usize, r_min: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if !(a0 > 0.0 && a0.is_finite()) {
            problems.push(format!("a0 must be positive, got {a0}"));
        }
        if !(0.0..1.0).contains(&alpha) {
            problems.push(format!("alpha must lie in [0, 1), got {alpha}"));
        }
        if dim == 0 {
            problems.push("dimension must be >= 1".into());
        }
        match shape {
            Shape::Constant if alpha != 0.0 => problems.push("the constant profile has alpha = 0".into()),
            Shape::PurePower if !(r_min > 0.0) => {
                problems.push(format!("pure_power needs r_min > 0, got {r_min}"))
            }
            _ => {}
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        let r_min = if shape == Shape::PurePower { r_min } else { 0.0 };
        Ok(Self {
            shape,
            a0,
            alpha,
            dim,
            r_min,
        })
    }

    pub fn constant(a0: f64, dim: usize) -> Result<Self> {
        Self::new(Shape::Constant, a0, 0.0, dim, 0.0)
    }

    pub fn smooth_power(a0: f64, alpha: f64, dim: usize) -> Result<Self> {
        Self::new(Shape::SmoothPower, a0, alpha, dim, 0.0)
    }

    pub fn pure_power(a0: f64, alpha: f64, dim: usize, r_min: f64) -> Result<Self> {
        Self::new(Shape::PurePower, a0, alpha, dim, r_min)
    }

    /// `a(r)` without domain checks; callers stay inside the profile's domain.
    pub fn value(&self, r: f64) -> f64 {
        match self.shape {
            Shape::Constant => self.a0,
            Shape::SmoothPower => self.a0 * (1.0 + r * r).powf(-0.5 * self.alpha),
            Shape::PurePower => self.a0 * r.powf(-self.alpha),
        }
    }
}

/// `a(r)` and `a'(r)`.
pub fn damping_eval(p: &DampingProfile, r: f64) -> Result<(f64, f64)> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::Domain(format!("damping needs r >= 0, got {r}")));
    }
    match p.shape {
        Shape::Constant => Ok((p.a0, 0.0)),
        Shape::SmoothPower => {
            let base = 1.0 + r * r;
            let a = p.a0 * base.powf(-0.5 * p.alpha);
            Ok((a, -p.alpha * r * a / base))
        }
        Shape::PurePower => {
            if r < p.r_min * (1.0 - 1e-12) {
                return Err(Error::Domain(format!(
                    "pure_power profile is defined for r >= {}, got {r}",
                    p.r_min
                )));
            }
            let a = p.a0 * r.powf(-p.alpha);
            Ok((a, -p.alpha * a / r))
        }
    }
}

const QUAD_TOL: f64 = 1e-13;
// Eighth-order central first-derivative weights for offsets 1..4.
const FD8: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
const MAX_CELL: f64 = 0.25;
const A0_RANGE: (f64, f64) = (1e-3, 1e9);

/// Tabulated radial double integral `∫_{r_b}^r s^{1-N} ∫_{r_b}^s τ^{N-1} a(τ) dτ ds`.
///
/// Values between nodes come from the same quadrature started at the nearest node below, so
/// `ΔA = a` holds at quadrature accuracy everywhere, not only at the nodes.
#[derive(Debug, Clone)]
pub struct PotentialTable {
    profile: DampingProfile,
    r_base: f64,
    nodes: Vec<f64>,
    /// `F(r_i) = ∫_{r_b}^{r_i} τ^{N-1} a(τ) dτ`.
    flux: Vec<f64>,
    /// `A(r_i) - A₀`.
    rel: Vec<f64>,
}

impl PotentialTable {
    pub fn build(profile: DampingProfile, r_max: f64) -> Result<Self> {
        let r_base = profile.r_min;
        if !(r_max > r_base) {
            return Err(Error::Construction(format!(
                "potential table needs r_max > {r_base}, got {r_max}"
            )));
        }
        let cells = (((r_max - r_base) / MAX_CELL).ceil() as usize).max(64);
        let dr = (r_max - r_base) / cells as f64;
        let nodes: Vec<f64> = (0..=cells).map(|i| r_base + i as f64 * dr).collect();
        let mut table = Self {
            profile,
            r_base,
            nodes: vec![r_base],
            flux: vec![0.0],
            rel: vec![0.0],
        };
        for w in nodes.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let f = table.flux_from(table.flux.len() - 1, hi);
            let a = table.rel_from(table.rel.len() - 1, hi);
            table.nodes.push(hi);
            table.flux.push(f);
            table.rel.push(a);
            debug_assert!(hi > lo);
        }
        Ok(table)
    }

    fn cell(&self, r: f64) -> usize {
        let dr = self.nodes[1] - self.nodes[0];
        (((r - self.r_base) / dr).floor().max(0.0) as usize).min(self.nodes.len() - 1)
    }

    fn density(&self, tau: f64) -> f64 {
        tau.powi(self.profile.dim as i32 - 1) * self.profile.value(tau)
    }

    fn flux_from(&self, i: usize, r: f64) -> f64 {
        self.flux[i] + quad::integrate(|tau| self.density(tau), self.nodes[i], r, QUAD_TOL)
    }

    fn rel_from(&self, i: usize, r: f64) -> f64 {
        let n = self.profile.dim as i32;
        let r0 = self.nodes[i];
        self.rel[i]
            + quad::integrate(
                |s| {
                    if s == 0.0 {
                        0.0
                    } else {
                        s.powi(1 - n) * self.flux_from(i, s)
                    }
                },
                r0,
                r,
                QUAD_TOL * 10.0,
            )
    }

    /// Radial flux `r^{N-1} A'(r)`.
    pub fn flux(&self, r: f64) -> f64 {
        self.flux_from(self.cell(r), r)
    }

    /// `A(r) - A₀`.
    pub fn rel(&self, r: f64) -> f64 {
        self.rel_from(self.cell(r), r)
    }

    /// `A'(r)`.
    pub fn deriv(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        r.powi(1 - self.profile.dim as i32) * self.flux(r)
    }

    pub fn r_base(&self) -> f64 {
        self.r_base
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().expect("table has nodes")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

/// How the additive constant `A₀` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffsetChoice {
    /// Smallest offset (by bisection) with the sampled gradient ratio inside the window.
    Auto,
    Fixed(f64),
}

/// `A_ε`, `Ψ` and `Φ_β` evaluators for fixed `(ε, t₀)`.
#[derive(Debug, Clone)]
pub struct WeightFamily {
    pub profile: DampingProfile,
    pub eps: f64,
    pub t0: f64,
    pub a_offset: f64,
    pub gammas: GammaPair,
    table: PotentialTable,
}

/// `(2-α)/(N-α)`, the limit of the gradient ratio of the exact potential.
pub fn ratio_bound(profile: &DampingProfile) -> f64 {
    (2.0 - profile.alpha) / (profile.dim as f64 - profile.alpha)
}

fn ratio_samples(table: &PotentialTable) -> Vec<f64> {
    let mut rs = Vec::with_capacity(2 * table.nodes.len());
    for w in table.nodes.windows(2) {
        rs.push(w[0]);
        rs.push(0.5 * (w[0] + w[1]));
    }
    rs.push(table.r_max());
    rs
}

/// Builds `A_ε` on `[r_b, r_max]` and chooses the offset.
pub fn build_a(profile: DampingProfile, eps: f64, t0: f64, r_max: f64, offset: OffsetChoice) -> Result<WeightFamily> {
    let gammas = specfun::gamma_pair(profile.dim, profile.alpha, eps)?;
    if !(t0 >= 1.0) {
        return Err(Error::Domain(format!("t0 must be >= 1, got {t0}")));
    }
    let table = PotentialTable::build(profile, r_max)?;
    let samples = ratio_samples(&table);
    let data: Vec<(f64, f64, f64)> = samples
        .iter()
        .map(|&r| (profile.value(r), table.rel(r), table.deriv(r)))
        .collect();
    let worst = |a0: f64| {
        data.iter()
            .map(|&(a, rel, d)| d * d / (a * (a0 + rel)))
            .fold(0.0, f64::max)
    };
    let target = ratio_bound(&profile) + 0.5 * eps;
    let a_offset = match offset {
        OffsetChoice::Fixed(a0) => {
            if !(a0 > 0.0) {
                return Err(Error::Construction(format!("A0 must be positive, got {a0}")));
            }
            a0
        }
        OffsetChoice::Auto => {
            let (mut lo, mut hi) = (A0_RANGE.0.ln(), A0_RANGE.1.ln());
            if worst(A0_RANGE.0) <= target {
                A0_RANGE.0
            } else if worst(A0_RANGE.1) > target {
                return Err(Error::Construction(format!(
                    "gradient ratio {} exceeds {target} even with A0 = {}",
                    worst(A0_RANGE.1),
                    A0_RANGE.1
                )));
            } else {
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if worst(mid.exp()) <= target {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi.exp()
            }
        }
    };
    Ok(WeightFamily {
        profile,
        eps,
        t0,
        a_offset,
        gammas,
        table,
    })
}

/// `Φ_β` with its time derivative, radial gradient and Laplacian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiWeight {
    pub phi: f64,
    pub dphi_dt: f64,
    pub grad_r: f64,
    pub lap: f64,
}

impl WeightFamily {
    pub fn table(&self) -> &PotentialTable {
        &self.table
    }

    /// `A_ε(r)`, with `r = |x|`.
    pub fn a_eps(&self, r: f64) -> f64 {
        self.a_offset + self.table.rel(r)
    }

    /// `A_ε'(r)`.
    pub fn a_eps_prime(&self, r: f64) -> f64 {
        self.table.deriv(r)
    }

    pub fn psi(&self, r: f64, t: f64) -> f64 {
        self.t0 + t + self.a_eps(r)
    }

    /// `z = γ̃ A_ε / (t₀ + t)`.
    pub fn similarity(&self, a_eps: f64, t: f64) -> f64 {
        self.gammas.gamma_tilde * a_eps / (self.t0 + t)
    }

    fn params(&self, beta: f64) -> Result<PhiParams> {
        PhiParams::new(beta, self.gammas.gamma)
    }

    fn guard(z: f64) -> Result<()> {
        if z > SERIES_RANGE {
            return Err(Error::Range(format!(
                "similarity variable z = {z:.3} exceeds {SERIES_RANGE}; raise t0 or shrink the domain"
            )));
        }
        Ok(())
    }

    /// `Φ_β` from precomputed `A_ε`, `A_ε'` and `a` at a point.
    pub fn phi_weight_at(&self, beta: f64, a_eps: f64, a_prime: f64, a: f64, t: f64) -> Result<PhiWeight> {
        let p = self.params(beta)?;
        let tt = self.t0 + t;
        let z = self.similarity(a_eps, t);
        Self::guard(z)?;
        let v = specfun::phi_eval(p, z)?;
        let up = specfun::phi_eval(p.shifted(1.0), z)?;
        let scale = tt.powf(-beta);
        let gt = self.gammas.gamma_tilde;
        Ok(PhiWeight {
            phi: scale * v.phi,
            dphi_dt: -beta * tt.powf(-beta - 1.0) * up.phi,
            grad_r: scale * v.dphi * gt * a_prime / tt,
            lap: scale * (v.d2phi * (gt * a_prime / tt).powi(2) + v.dphi * gt * a / tt),
        })
    }

    /// `Φ_β` alone, without derivatives.
    pub fn phi_value(&self, beta: f64, a_eps: f64, t: f64) -> Result<f64> {
        if beta == 0.0 {
            return Ok(1.0);
        }
        let z = self.similarity(a_eps, t);
        Self::guard(z)?;
        let g = self.gammas.gamma;
        Ok((self.t0 + t).powf(-beta) * specfun::kummer_m_scaled(g - beta, g, z)?)
    }

    pub fn phi_weight_eval(&self, beta: f64, r: f64, t: f64) -> Result<PhiWeight> {
        let (a, _) = damping_eval(&self.profile, r)?;
        self.phi_weight_at(beta, self.a_eps(r), self.a_eps_prime(r), a, t)
    }

    /// `∂ₜΦ_β` by the chain rule, `-(t₀+t)^{-β-1} (β φ_β(z) + z φ_β'(z))`.
    pub fn dphi_dt_chain(&self, beta: f64, r: f64, t: f64) -> Result<f64> {
        let p = self.params(beta)?;
        let tt = self.t0 + t;
        let z = self.similarity(self.a_eps(r), t);
        Self::guard(z)?;
        let v = specfun::phi_eval(p, z)?;
        Ok(-tt.powf(-beta - 1.0) * (beta * v.phi + z * v.dphi))
    }

    /// Largest similarity variable reached on `[0, r_max] × [0, ∞)`.
    pub fn max_similarity(&self, r_max: f64) -> f64 {
        self.similarity(self.a_eps(r_max), 0.0)
    }
}

pub fn psi_eval(w: &WeightFamily, r: f64, t: f64) -> f64 {
    w.psi(r, t)
}

pub fn phi_weight_eval(w: &WeightFamily, beta: f64, r: f64, t: f64) -> Result<PhiWeight> {
    w.phi_weight_eval(beta, r, t)
}

/// Verification of the three potential properties on a set of radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialReport {
    /// `max |ΔA_ε / a - 1|` with `ΔA_ε` from finite differences of the quadrature gradient.
    pub a1_margin: f64,
    /// `min A_ε / ⟨x⟩^{2-α}`.
    pub a2_min: f64,
    /// `max A_ε / ⟨x⟩^{2-α}`.
    pub a2_max: f64,
    /// `max |A_ε'|² / (a A_ε)`.
    pub a3_worst_ratio: f64,
    /// `(2-α)/(N-α) + ε`.
    pub a3_bound: f64,
}

pub fn verify_a_properties(w: &WeightFamily, samples: &[f64]) -> Result<PotentialReport> {
    let p = &w.profile;
    let n = p.dim as f64;
    let rb = w.table.r_base();
    // On the line A' is odd, so differences may straddle the origin.
    let odd_ok = p.dim == 1 && rb == 0.0;
    let signed_deriv = |x: f64| x.signum() * w.a_eps_prime(x.abs());

    let mut a1 = 0.0_f64;
    let mut a2_min = f64::INFINITY;
    let mut a2_max = 0.0_f64;
    let mut a3 = 0.0_f64;
    for &r in samples {
        let (a, _) = damping_eval(p, r)?;
        let big_a = w.a_eps(r);
        let d = w.a_eps_prime(r);
        a3 = a3.max(d * d / (a * big_a));
        let bracket = (1.0 + r * r).powf(0.5 * (2.0 - p.alpha));
        a2_min = a2_min.min(big_a / bracket);
        a2_max = a2_max.max(big_a / bracket);

        let eta = if odd_ok { 2e-2 } else { 2e-2_f64.min((r - rb) / 4.5) };
        if eta <= 1e-6 || (!odd_ok && r == 0.0) {
            continue;
        }
        let second = FD8
            .iter()
            .enumerate()
            .map(|(k, c)| c * (signed_deriv(r + (k as f64 + 1.0) * eta) - signed_deriv(r - (k as f64 + 1.0) * eta)))
            .sum::<f64>()
            / eta;
        let lap = if r == 0.0 {
            n * second
        } else {
            second + (n - 1.0) / r * d
        };
        a1 = a1.max((lap / a - 1.0).abs());
    }
    Ok(PotentialReport {
        a1_margin: a1,
        a2_min,
        a2_max,
        a3_worst_ratio: a3,
        a3_bound: ratio_bound(p) + w.eps,
    })
}

/// Minimum of the normalized supersolution margin `(a ∂ₜΦ - ΔΦ) Ψ^{β+1} / a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginReport {
    pub beta: f64,
    pub min_normalized_margin: f64,
    pub at_r: f64,
    pub at_t: f64,
    /// `β = 0`: both terms vanish identically.
    pub degenerate: bool,
}

pub fn supersolution_margin(w: &WeightFamily, beta: f64, rs: &[f64], ts: &[f64]) -> Result<MarginReport> {
    let mut best = MarginReport {
        beta,
        min_normalized_margin: f64::INFINITY,
        at_r: f64::NAN,
        at_t: f64::NAN,
        degenerate: beta == 0.0,
    };
    for &r in rs {
        let (a, _) = damping_eval(&w.profile, r)?;
        let big_a = w.a_eps(r);
        let d = w.a_eps_prime(r);
        for &t in ts {
            let phi = w.phi_weight_at(beta, big_a, d, a, t)?;
            let psi = w.t0 + t + big_a;
            let m = (a * phi.dphi_dt - phi.lap) * psi.powf(beta + 1.0) / a;
            if m < best.min_normalized_margin {
                best.min_normalized_margin = m;
                best.at_r = r;
                best.at_t = t;
            }
        }
    }
    Ok(best)
}

/// `(min, max)` of `Φ_β Ψ^β` over a sample grid.
pub fn psi_comparison(w: &WeightFamily, beta: f64, rs: &[f64], ts: &[f64]) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &r in rs {
        let (a, _) = damping_eval(&w.profile, r)?;
        let big_a = w.a_eps(r);
        let d = w.a_eps_prime(r);
        for &t in ts {
            let phi = w.phi_weight_at(beta, big_a, d, a, t)?;
            let v = phi.phi * (w.t0 + t + big_a).powf(beta);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    Ok((lo, hi))
}

/// Worst relative gap between the chain-rule `∂ₜΦ_β` and `-β Φ_{β+1}`.
pub fn dphi_dt_crosscheck(w: &WeightFamily, beta: f64, rs: &[f64], ts: &[f64]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for &r in rs {
        for &t in ts {
            let rec = w.phi_weight_eval(beta, r, t)?.dphi_dt;
            let chain = w.dphi_dt_chain(beta, r, t)?;
            let scale = rec.abs().max(chain.abs());
            if scale > 0.0 {
                worst = worst.max((rec - chain).abs() / scale);
            }
        }
    }
    Ok(worst)
}

/// Both sides of the weighted inequality for `∫ u Δu Φ^{-1+2δ}` evaluated by grid quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaPhiReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

pub fn delta_phi_inequality_check(
    g: &Grid,
    u: &[f64],
    w: &WeightFamily,
    beta: f64,
    delta: f64,
    t: f64,
) -> Result<DeltaPhiReport> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Domain(format!("delta must lie in (0, 1/2), got {delta}")));
    }
    g.check(u)?;
    let lap_u = discretization::laplacian_apply(g, u)?;
    let grad_u = discretization::gradient(g, u);
    let mut lhs_w = Vec::with_capacity(g.len());
    let mut grad_w = Vec::with_capacity(g.len());
    let mut pot_w = Vec::with_capacity(g.len());
    for i in 0..g.len() {
        let r = g.radius(i);
        let phi = w.phi_weight_eval(beta, r, t)?;
        let p1 = phi.phi.powf(-1.0 + 2.0 * delta);
        lhs_w.push(u[i] * lap_u[i] * p1);
        grad_w.push(grad_u[i] * grad_u[i] * p1);
        pot_w.push(u[i] * u[i] * phi.lap * phi.phi.powf(-2.0 + 2.0 * delta));
    }
    let ones = vec![1.0; g.len()];
    let lhs = discretization::weighted_sum(g, &lhs_w, &ones);
    let rhs = -delta / (1.0 - delta) * discretization::weighted_sum(g, &grad_w, &ones)
        + 0.5 * (1.0 - 2.0 * delta) * discretization::weighted_sum(g, &pot_w, &ones);
    Ok(DeltaPhiReport {
        lhs,
        rhs,
        slack: rhs - lhs,
    })
}

/// A weight family together with the sample grid its checks run on.
#[derive(Debug, Clone)]
pub struct WeightCase {
    pub name: &'static str,
    pub family: WeightFamily,
    pub rs: Vec<f64>,
    pub ts: Vec<f64>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// The three shipped profile/geometry combinations.
pub fn shipped_cases() -> Result<Vec<WeightCase>> {
    let constant = build_a(DampingProfile::constant(1.0, 1)?, 0.1, 10.0, 30.0, OffsetChoice::Auto)?;
    let smooth = build_a(DampingProfile::smooth_power(1.0, 0.5, 3)?, 0.05, 10.0, 40.0, OffsetChoice::Auto)?;
    let pure = build_a(DampingProfile::pure_power(1.0, 0.5, 3, 1.0)?, 0.05, 50.0, 200.0, OffsetChoice::Auto)?;
    Ok(vec![
        WeightCase {
            name: "constant a=1, N=1",
            family: constant,
            rs: linspace(0.0, 30.0, 121),
            ts: linspace(0.0, 100.0, 51),
        },
        WeightCase {
            name: "smooth_power a0=1 alpha=0.5, N=3, r in [1,40]",
            family: smooth,
            rs: linspace(1.0, 40.0, 157),
            ts: linspace(0.0, 100.0, 51),
        },
        WeightCase {
            name: "pure_power a0=1 alpha=0.5, N=3 exterior r>=1",
            family: pure,
            rs: linspace(1.0, 200.0, 200),
            ts: linspace(0.0, 200.0, 51),
        },
    ])
}

/// The potential and supersolution suite over the shipped cases.
pub fn weight_suite() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for case in shipped_cases()? {
        let w = &case.family;
        let gamma = w.gammas.gamma;
        let rep = verify_a_properties(w, &case.rs)?;
        checks.push(Check::below(format!("A1 margin [{}]", case.name), rep.a1_margin, 1e-8));
        checks.push(Check::above(format!("A2 lower constant [{}]", case.name), rep.a2_min, 0.0));
        checks.push(Check::at_most(format!("A3 worst ratio [{}]", case.name), rep.a3_worst_ratio, rep.a3_bound));
        for factor in [0.1, 0.5, 0.9, 1.0, 1.5] {
            let beta = factor * gamma;
            let tag = format!("beta={factor}gamma, {}", case.name);
            let gap = dphi_dt_crosscheck(w, beta, &case.rs, &case.ts)?;
            checks.push(Check::below(format!("dPhi/dt = -beta Phi_(beta+1) [{tag}]"), gap, 1e-10));
            let m = supersolution_margin(w, beta, &case.rs, &case.ts)?;
            checks.push(Check::above(format!("supersolution margin [{tag}]"), m.min_normalized_margin, 0.0));
            let (lo, hi) = psi_comparison(w, beta, &case.rs, &case.ts)?;
            if beta < gamma {
                checks.push(Check::above(format!("Phi Psi^beta lower [{tag}]"), lo, 0.0));
            }
            checks.push(Check::below(format!("Phi Psi^beta upper [{tag}]"), hi, f64::INFINITY));
        }
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn damping_examples() {
        let c = DampingProfile::constant(1.0, 1).unwrap();
        assert_eq!(damping_eval(&c, 3.7).unwrap(), (1.0, 0.0));
        let s = DampingProfile::smooth_power(2.0, 0.5, 1).unwrap();
        assert_eq!(damping_eval(&s, 0.0).unwrap(), (2.0, 0.0));
        let s = DampingProfile::smooth_power(1.0, 0.5, 1).unwrap();
        let (a, da) = damping_eval(&s, 1.0).unwrap();
        assert!((a - 2f64.powf(-0.25)).abs() < 1e-15);
        assert!((da + 0.25 * 2f64.powf(-1.25) * 2.0).abs() < 1e-15);
    }

    #[test]
    fn damping_domain_errors() {
        let p = DampingProfile::pure_power(1.0, 0.5, 3, 1.0).unwrap();
        assert!(matches!(damping_eval(&p, 0.5), Err(Error::Domain(_))));
        assert!(DampingProfile::pure_power(1.0, 0.5, 3, 0.0).is_err());
        assert!(DampingProfile::new(Shape::Constant, 1.0, 0.3, 1, 0.0).is_err());
        assert!(DampingProfile::smooth_power(1.0, 1.0, 1).is_err());
        assert!(DampingProfile::smooth_power(-1.0, 0.5, 1).is_err());
    }

    #[test]
    fn damping_tends_to_power_law() {
        for p in [
            DampingProfile::smooth_power(1.3, 0.5, 3).unwrap(),
            DampingProfile::pure_power(1.3, 0.5, 3, 1.0).unwrap(),
        ] {
            let r: f64 = 1e6;
            assert!((r.powf(p.alpha) * p.value(r) - 1.3).abs() < 1e-6);
        }
    }

    #[test]
    fn potential_closed_forms() {
        let w = build_a(DampingProfile::constant(1.0, 1).unwrap(), 0.1, 1.0, 50.0, OffsetChoice::Fixed(0.5)).unwrap();
        for x in [0.0, 0.3, 2.0, 17.1, 49.0] {
            assert!((w.a_eps(x) - (0.5 + 0.5 * x * x)).abs() < 1e-11 * (1.0 + x * x));
            assert!((w.a_eps_prime(x) - x).abs() < 1e-12 * (1.0 + x));
        }
        let w = build_a(DampingProfile::constant(1.0, 3).unwrap(), 0.1, 1.0, 50.0, OffsetChoice::Fixed(2.0)).unwrap();
        for r in [0.0, 0.7, 10.0, 45.5] {
            assert!((w.a_eps(r) - (2.0 + r * r / 6.0)).abs() < 1e-11 * (1.0 + r * r));
        }
    }

    #[test]
    fn potential_growth_exponent() {
        let w = build_a(DampingProfile::smooth_power(1.0, 0.5, 1).unwrap(), 0.1, 1.0, 1e4, OffsetChoice::Auto).unwrap();
        let ratio = w.a_eps(10.0) / 10f64.powf(1.5);
        assert!((0.5..=1.5).contains(&ratio), "{ratio}");
        let rs: Vec<f64> = (0..=20).map(|i| 100.0 * 100f64.powf(i as f64 / 20.0)).collect();
        let xs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
        let ys: Vec<f64> = rs.iter().map(|&r| w.a_eps(r).ln()).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!((slope - 1.5).abs() < 0.05, "{slope}");
    }

    #[test]
    fn potential_report_examples() {
        let w = build_a(DampingProfile::constant(1.0, 1).unwrap(), 0.1, 1.0, 100.0, OffsetChoice::Fixed(0.5)).unwrap();
        let rs: Vec<f64> = (0..=1000).map(|i| 0.1 * i as f64).collect();
        let rep = verify_a_properties(&w, &rs).unwrap();
        assert!(rep.a3_worst_ratio < 2.0 && rep.a3_worst_ratio > 1.99, "{rep:?}");

        let w = build_a(DampingProfile::constant(1.0, 3).unwrap(), 0.1, 1.0, 100.0, OffsetChoice::Fixed(1e3)).unwrap();
        let rep = verify_a_properties(&w, &rs).unwrap();
        assert!(rep.a1_margin < 1e-12, "{rep:?}");

        let w = build_a(DampingProfile::smooth_power(1.0, 0.5, 1).unwrap(), 0.1, 1.0, 100.0, OffsetChoice::Auto).unwrap();
        let rep = verify_a_properties(&w, &rs).unwrap();
        assert!(rep.a3_worst_ratio <= 3.0 + 0.1, "{rep:?}");
        assert!(rep.a1_margin < 1e-8, "{rep:?}");
    }

    #[test]
    fn psi_examples() {
        let w = build_a(DampingProfile::constant(1.0, 1).unwrap(), 0.1, 1.0, 10.0, OffsetChoice::Fixed(0.5)).unwrap();
        assert!((psi_eval(&w, 0.0, 0.0) - 1.5).abs() < 1e-14);
        assert!((psi_eval(&w, 2.0, 3.0) - 6.5).abs() < 1e-12);
        let d = psi_eval(&w, 1.3, 2.25) - psi_eval(&w, 1.3, 2.0);
        assert!((d - 0.25).abs() < 1e-13);
    }

    #[test]
    fn phi_weight_special_cases() {
        let w = build_a(DampingProfile::constant(1.0, 1).unwrap(), 0.1, 1.0, 10.0, OffsetChoice::Fixed(0.5)).unwrap();
        let v = phi_weight_eval(&w, 0.0, 1.0, 2.0).unwrap();
        assert_eq!((v.phi, v.dphi_dt, v.grad_r, v.lap), (1.0, 0.0, 0.0, 0.0));

        let g = w.gammas.gamma;
        let (r, t) = (1.5, 2.0);
        let v = phi_weight_eval(&w, g, r, t).unwrap();
        let z = w.similarity(w.a_eps(r), t);
        assert!((v.phi - (w.t0 + t).powf(-g) * (-z).exp()).abs() < 1e-15);

        let chain = w.dphi_dt_chain(0.2, 1.0, 2.0).unwrap();
        let rec = phi_weight_eval(&w, 0.2, 1.0, 2.0).unwrap().dphi_dt;
        assert!((chain - rec).abs() < 1e-10 * rec.abs());
    }

    #[test]
    fn phi_weight_range_guard() {
        let w = build_a(DampingProfile::constant(1.0, 1).unwrap(), 0.1, 1.0, 100.0, OffsetChoice::Fixed(0.5)).unwrap();
        assert!(matches!(phi_weight_eval(&w, 0.2, 90.0, 0.0), Err(Error::Range(_))));
    }

    #[test]
    fn phi_weight_laplacian_matches_finite_differences() {
        let w = build_a(DampingProfile::smooth_power(1.0, 0.5, 3).unwrap(), 0.05, 10.0, 20.0, OffsetChoice::Auto).unwrap();
        let beta = 0.5;
        let (r, t, eta) = (3.0, 1.0, 1e-3);
        let f = |r: f64| phi_weight_eval(&w, beta, r, t).unwrap().phi;
        let d1 = (f(r + eta) - f(r - eta)) / (2.0 * eta);
        let d2 = (f(r + eta) - 2.0 * f(r) + f(r - eta)) / (eta * eta);
        let v = phi_weight_eval(&w, beta, r, t).unwrap();
        assert!((v.grad_r - d1).abs() < 1e-6 * v.grad_r.abs());
        assert!((v.lap - (d2 + 2.0 / r * d1)).abs() < 1e-5 * v.lap.abs());
        let ft = |t: f64| phi_weight_eval(&w, beta, r, t).unwrap().phi;
        let dt = (ft(t + eta) - ft(t - eta)) / (2.0 * eta);
        assert!((v.dphi_dt - dt).abs() < 1e-6 * dt.abs());
    }

    #[test]
    fn supersolution_margin_cases() {
        let w = build_a(DampingProfile::constant(1.0, 1).unwrap(), 0.1, 10.0, 30.0, OffsetChoice::Auto).unwrap();
        let rs = linspace(0.0, 30.0, 61);
        let ts = linspace(0.0, 100.0, 21);
        let m = supersolution_margin(&w, 0.0, &rs, &ts).unwrap();
        assert!(m.degenerate && m.min_normalized_margin == 0.0);
        let m = supersolution_margin(&w, 0.2, &rs, &ts).unwrap();
        assert!(m.min_normalized_margin > 0.0, "{m:?}");

        let p = DampingProfile::smooth_power(1.0, 0.5, 3).unwrap();
        let w = build_a(p, 0.05, 10.0, 40.0, OffsetChoice::Auto).unwrap();
        let m = supersolution_margin(&w, 0.5, &linspace(1.0, 40.0, 40), &ts).unwrap();
        assert!(m.min_normalized_margin > 0.0, "{m:?}");
    }

    #[test]
    fn delta_phi_inequality() {
        let w = build_a(DampingProfile::constant(1.0, 1).unwrap(), 0.1, 1.0, 10.0, OffsetChoice::Fixed(0.5)).unwrap();
        let g = Grid::line(-5.0, 5.0, 0.01).unwrap();
        let zero = g.zeros();
        let rep = delta_phi_inequality_check(&g, &zero, &w, 0.2, 0.1, 1.0).unwrap();
        assert_eq!((rep.lhs, rep.rhs, rep.slack), (0.0, 0.0, 0.0));

        let ramp = discretization::boundary_ramp(&g, 10);
        let bump: Vec<f64> = g.nodes().iter().zip(&ramp).map(|(x, c)| (-x * x).exp() * c).collect();
        let rep = delta_phi_inequality_check(&g, &bump, &w, 0.2, 0.1, 1.0).unwrap();
        assert!(rep.slack >= -1e-6, "{rep:?}");

        let l = 5.0;
        let sine = g.sample(|x| (std::f64::consts::PI * x / l).sin());
        let rep = delta_phi_inequality_check(&g, &sine, &w, 0.2, 0.1, 1.0).unwrap();
        assert!(rep.slack >= -1e-6, "{rep:?}");
    }

    #[test]
    fn weight_suite_passes_below_gamma() {
        for c in weight_suite().unwrap() {
            if c.name.starts_with("supersolution margin [beta=1.5gamma") {
                continue;
            }
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn margin_turns_negative_above_gamma() {
        // φ_β for γ < β < γ+1 tends to a negative multiple of s^{-β}, so the margin changes sign at large z.
        let w = build_a(DampingProfile::constant(1.0, 1).unwrap(), 0.1, 10.0, 30.0, OffsetChoice::Auto).unwrap();
        let beta = 1.5 * w.gammas.gamma;
        let near = supersolution_margin(&w, beta, &linspace(0.0, 2.0, 21), &[0.0]).unwrap();
        assert!(near.min_normalized_margin > 0.0, "{near:?}");
        let far = supersolution_margin(&w, beta, &linspace(0.0, 30.0, 121), &[0.0]).unwrap();
        assert!(far.min_normalized_margin < 0.0, "{far:?}");
    }
}
