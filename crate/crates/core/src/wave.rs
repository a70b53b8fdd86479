//! Leapfrog solver for `∂ₜ²u − Δu + a(x) ∂ₜu = F` with the damping taken implicitly.

use crate::discretization::{self, FieldTrajectory, Grid, Tridiagonal};
use crate::error::{Error, Result};
use crate::parabolic::{damping_nodes, ensure_finite, step_count, SourceFn};
use crate::weights::DampingProfile;

/// Largest admissible `dt / h`.
pub const CFL: f64 = 0.9;

pub fn check_cfl(g: &Grid, dt: f64) -> Result<()> {
    if dt > CFL * g.h() * (1.0 + 1e-12) {
        return Err(Error::Config(vec![format!(
            "CFL violated: dt = {dt} exceeds {CFL}·h = {}",
            CFL * g.h()
        )]));
    }
    Ok(())
}

/// Explicit three-level stepper.
#[derive(Debug, Clone)]
pub struct WaveStepper {
    lap: Tridiagonal,
    a: Vec<f64>,
    dt: f64,
    // 1 / (1 + a dt / 2) and 1 − a dt / 2.
    inv_plus: Vec<f64>,
    minus: Vec<f64>,
    pinned: Vec<bool>,
    work: Vec<f64>,
}

impl WaveStepper {
    pub fn new(g: &Grid, a: &[f64], dt: f64) -> Result<Self> {
        g.check(a)?;
        if let Some(i) = a.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!("damping must be positive, a = {} at node {i}", a[i])));
        }
        if !(dt > 0.0) {
            return Err(Error::Config(vec![format!("dt must be positive, got {dt}")]));
        }
        check_cfl(g, dt)?;
        Ok(Self {
            lap: g.laplacian_matrix().clone(),
            a: a.to_vec(),
            dt,
            inv_plus: a.iter().map(|&a| 1.0 / (1.0 + 0.5 * a * dt)).collect(),
            minus: a.iter().map(|&a| 1.0 - 0.5 * a * dt).collect(),
            pinned: (0..g.len()).map(|i| g.is_dirichlet(i)).collect(),
            work: vec![0.0; g.len()],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Taylor start `u¹ = u⁰ + dt u₁ + dt²/2 (Δu⁰ − a u₁ + F⁰)`.
    pub fn start(&mut self, u0: &[f64], u1: &[f64], f0: Option<&[f64]>, out: &mut [f64]) {
        self.lap.apply_into(u0, &mut self.work);
        let dt = self.dt;
        for i in 0..u0.len() {
            out[i] = if self.pinned[i] {
                0.0
            } else {
                let acc = self.work[i] - self.a[i] * u1[i] + f0.map_or(0.0, |f| f[i]);
                u0[i] + dt * u1[i] + 0.5 * dt * dt * acc
            };
        }
    }

    /// Writes `u^{k+1}` from `u^{k-1}`, `u^k` and `F^k`.
    pub fn step(&mut self, prev: &[f64], cur: &[f64], f: Option<&[f64]>, out: &mut [f64]) {
        self.lap.apply_into(cur, &mut self.work);
        let dt2 = self.dt * self.dt;
        for i in 0..cur.len() {
            out[i] = if self.pinned[i] {
                0.0
            } else {
                let rhs = 2.0 * cur[i] - self.minus[i] * prev[i] + dt2 * (self.work[i] + f.map_or(0.0, |f| f[i]));
                rhs * self.inv_plus[i]
            };
        }
    }
}

/// Solves the damped wave equation on `[0, T]`; `∂ₜu` by central differences
/// (exact `u₁` at `t = 0`, one-sided second order at `t = T`).
pub fn solve_damped_wave(
    g: &Grid,
    profile: &DampingProfile,
    u0: &[f64],
    u1: &[f64],
    source: Option<&SourceFn>,
    t_end: f64,
    dt: f64,
) -> Result<FieldTrajectory> {
    let a = damping_nodes(g, profile)?;
    solve_damped_wave_nodes(g, &a, u0, u1, source, t_end, dt)
}

pub fn solve_damped_wave_nodes(
    g: &Grid,
    a: &[f64],
    u0: &[f64],
    u1: &[f64],
    source: Option<&SourceFn>,
    t_end: f64,
    dt: f64,
) -> Result<FieldTrajectory> {
    g.check(u0)?;
    g.check(u1)?;
    let (steps, dt) = step_count(t_end, dt)?;
    let mut stepper = WaveStepper::new(g, a, dt)?;
    let m = g.len();
    let mut f = vec![0.0; m];
    let fsrc = |k: usize, f: &mut Vec<f64>| -> Option<Vec<f64>> {
        source.map(|s| {
            s(k, k as f64 * dt, f);
            f.clone()
        })
    };

    let mut states: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    let mut first = u0.to_vec();
    for i in (0..m).filter(|&i| g.is_dirichlet(i)) {
        first[i] = 0.0;
    }
    states.push(first);
    if steps >= 1 {
        let f0 = fsrc(0, &mut f);
        let mut next = vec![0.0; m];
        stepper.start(&states[0], u1, f0.as_deref(), &mut next);
        ensure_finite(&next, 1, "wave state")?;
        states.push(next);
    }
    for k in 1..steps {
        let fk = fsrc(k, &mut f);
        let mut next = vec![0.0; m];
        stepper.step(&states[k - 1], &states[k], fk.as_deref(), &mut next);
        ensure_finite(&next, k + 1, "wave state")?;
        states.push(next);
    }

    let mut traj = FieldTrajectory::new("wave");
    for k in 0..states.len() {
        let du: Vec<f64> = if k == 0 {
            (0..m).map(|i| if g.is_dirichlet(i) { 0.0 } else { u1[i] }).collect()
        } else if k + 1 < states.len() {
            (0..m).map(|i| (states[k + 1][i] - states[k - 1][i]) / (2.0 * dt)).collect()
        } else if k >= 2 {
            (0..m)
                .map(|i| (3.0 * states[k][i] - 4.0 * states[k - 1][i] + states[k - 2][i]) / (2.0 * dt))
                .collect()
        } else {
            (0..m).map(|i| (states[1][i] - states[0][i]) / dt).collect()
        };
        traj.push(k as f64 * dt, states[k].clone(), Some(du));
    }
    Ok(traj)
}

/// Staggered discrete energy `½‖(u^{k+1}−u^k)/dt‖² + ½⟨−Δ_h u^{k+1}, u^k⟩`, one value per step,
/// exactly non-increasing for the unforced scheme.
pub fn discrete_energy(g: &Grid, traj: &FieldTrajectory) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(traj.len().saturating_sub(1));
    for k in 0..traj.len().saturating_sub(1) {
        let dt = traj.times[k + 1] - traj.times[k];
        let (u, v) = (&traj.values[k], &traj.values[k + 1]);
        let vel: Vec<f64> = v.iter().zip(u).map(|(b, a)| (b - a) / dt).collect();
        let lap = discretization::laplacian_apply(g, v)?;
        out.push(0.5 * discretization::inner(g, &vel, &vel) - 0.5 * discretization::inner(g, &lap, u));
    }
    Ok(out)
}

/// `½‖∂ₜu‖² + ½‖∇u‖²` at the recorded times, from the co-trajectory and central gradients.
pub fn natural_energy(g: &Grid, traj: &FieldTrajectory) -> Vec<f64> {
    let ones = vec![1.0; g.len()];
    let derivs = traj.derivs.as_ref();
    traj.values
        .iter()
        .enumerate()
        .map(|(k, u)| {
            let grad = discretization::gradient(g, u);
            let g2: Vec<f64> = grad.iter().map(|v| v * v).collect();
            let kin = derivs.map_or(0.0, |d| discretization::inner(g, &d[k], &d[k]));
            0.5 * kin + 0.5 * discretization::weighted_sum(g, &g2, &ones)
        })
        .collect()
}
