//! Crank–Nicolson solver for `a(x) ∂ₜv − Δv = G`.

use crate::discretization::{self, FieldTrajectory, Grid, Tridiagonal, TridiagonalLu};
use crate::error::{Error, Result};
use crate::weights::{damping_eval, DampingProfile};

/// A source sampled at integer time levels: `fill(k, t_k, out)` writes `G(·, t_k)` into `out`.
pub type SourceFn<'a> = dyn Fn(usize, f64, &mut [f64]) + 'a;

/// `a` at the grid nodes.
pub fn damping_nodes(g: &Grid, profile: &DampingProfile) -> Result<Vec<f64>> {
    (0..g.len()).map(|i| damping_eval(profile, g.radius(i)).map(|(a, _)| a)).collect()
}

/// Number of steps and the step actually used so that `K · dt = T`.
pub fn step_count(t_end: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(vec![format!("dt must be positive, got {dt}")]));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Config(vec![format!("T must be nonnegative, got {t_end}")]));
    }
    let k = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    Ok((k, if k == 0 { dt } else { t_end / k as f64 }))
}

/// One pre-factored Crank–Nicolson step operator.
#[derive(Debug, Clone)]
pub struct ParabolicStepper {
    lap: Tridiagonal,
    a: Vec<f64>,
    dt: f64,
    lu: TridiagonalLu,
    pinned: Vec<bool>,
    work: Vec<f64>,
}

impl ParabolicStepper {
    pub fn new(g: &Grid, a: &[f64], dt: f64) -> Result<Self> {
        g.check(a)?;
        if let Some(i) = a.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!("damping must be positive, a = {} at node {i}", a[i])));
        }
        if !(dt > 0.0) {
            return Err(Error::Config(vec![format!("dt must be positive, got {dt}")]));
        }
        let lap = g.laplacian_matrix().clone();
        let m = g.len();
        let pinned: Vec<bool> = (0..m).map(|i| g.is_dirichlet(i)).collect();
        let mut sys = Tridiagonal {
            lower: vec![0.0; m],
            diag: vec![1.0; m],
            upper: vec![0.0; m],
        };
        for i in (0..m).filter(|&i| !pinned[i]) {
            sys.lower[i] = -0.5 * lap.lower[i];
            sys.diag[i] = a[i] / dt - 0.5 * lap.diag[i];
            sys.upper[i] = -0.5 * lap.upper[i];
        }
        Ok(Self {
            lu: TridiagonalLu::factor(&sys)?,
            lap,
            a: a.to_vec(),
            dt,
            pinned,
            work: vec![0.0; m],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `v` by one step. The half-step source is the mean of the two endpoint samples.
    pub fn step(&mut self, v: &mut [f64], src_now: Option<&[f64]>, src_next: Option<&[f64]>) {
        self.lap.apply_into(v, &mut self.work);
        for i in 0..v.len() {
            if self.pinned[i] {
                self.work[i] = 0.0;
                continue;
            }
            let mut g = 0.0;
            if let Some(s) = src_now {
                g += 0.5 * s[i];
            }
            if let Some(s) = src_next {
                g += 0.5 * s[i];
            }
            self.work[i] = self.a[i] / self.dt * v[i] + 0.5 * self.work[i] + g;
        }
        self.lu.solve_in_place(&mut self.work);
        v.copy_from_slice(&self.work);
    }

    /// `∂ₜv = a^{-1}(Δ_h v + G)` from the equation itself.
    pub fn derivative(&self, v: &[f64], src: Option<&[f64]>, out: &mut [f64]) {
        self.lap.apply_into(v, out);
        for i in 0..v.len() {
            out[i] = if self.pinned[i] {
                0.0
            } else {
                (out[i] + src.map_or(0.0, |s| s[i])) / self.a[i]
            };
        }
    }
}

pub(crate) fn ensure_finite(u: &[f64], step: usize, what: &str) -> Result<()> {
    if u.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence {
            step,
            what: what.to_string(),
        })
    }
}

/// Solves `a ∂ₜv − Δv = G` on `[0, T]`, recording `v` and `∂ₜv` at every step.
pub fn solve_parabolic(
    g: &Grid,
    profile: &DampingProfile,
    v0: &[f64],
    source: Option<&SourceFn>,
    t_end: f64,
    dt: f64,
) -> Result<FieldTrajectory> {
    let a = damping_nodes(g, profile)?;
    solve_parabolic_nodes(g, &a, v0, source, t_end, dt)
}

/// As [`solve_parabolic`] with the damping given at the nodes.
pub fn solve_parabolic_nodes(
    g: &Grid,
    a: &[f64],
    v0: &[f64],
    source: Option<&SourceFn>,
    t_end: f64,
    dt: f64,
) -> Result<FieldTrajectory> {
    g.check(v0)?;
    let (steps, dt) = step_count(t_end, dt)?;
    let mut stepper = ParabolicStepper::new(g, a, dt)?;
    let m = g.len();
    let mut v = v0.to_vec();
    for i in (0..m).filter(|&i| g.is_dirichlet(i)) {
        v[i] = 0.0;
    }
    let mut src_now = vec![0.0; m];
    let mut src_next = vec![0.0; m];
    if let Some(f) = source {
        f(0, 0.0, &mut src_now);
    }
    let mut traj = FieldTrajectory::new("parabolic");
    let mut dv = vec![0.0; m];
    stepper.derivative(&v, source.map(|_| src_now.as_slice()), &mut dv);
    traj.push(0.0, v.clone(), Some(dv.clone()));
    for k in 0..steps {
        let t_next = (k + 1) as f64 * dt;
        if let Some(f) = source {
            f(k + 1, t_next, &mut src_next);
        }
        let srcs = source.map(|_| (src_now.as_slice(), src_next.as_slice()));
        stepper.step(&mut v, srcs.map(|s| s.0), srcs.map(|s| s.1));
        ensure_finite(&v, k + 1, "parabolic state")?;
        stepper.derivative(&v, source.map(|_| src_next.as_slice()), &mut dv);
        traj.push(t_next, v.clone(), Some(dv.clone()));
        std::mem::swap(&mut src_now, &mut src_next);
    }
    Ok(traj)
}

/// `max_k ‖v^k − exact(·, t_k)‖` over a trajectory.
pub fn max_l2_error(g: &Grid, traj: &FieldTrajectory, exact: impl Fn(f64, f64) -> f64) -> f64 {
    traj.times
        .iter()
        .zip(&traj.values)
        .map(|(&t, v)| {
            let diff: Vec<f64> = g.nodes().iter().zip(v).map(|(&x, &u)| u - exact(x, t)).collect();
            discretization::l2_norm(g, &diff)
        })
        .fold(0.0, f64::max)
}
