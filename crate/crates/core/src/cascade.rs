//! The expansion tower `∂ₜᵏV_j`, the remainder traces, the first-order decomposition
//! `u = V₀ + ∂ₜU₁`, and the compatibility data of the remainder problem.

use serde::{Deserialize, Serialize};

use crate::discretization::{self, FieldTrajectory, Grid};
use crate::error::{Error, Result};
use crate::parabolic::{damping_nodes, step_count, ParabolicStepper};
use crate::wave::WaveStepper;
use crate::weights::DampingProfile;

/// Initial data shapes. Gaussian and power-tail data are multiplied by a `C²` boundary ramp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Zero,
    Gaussian {
        amp: f64,
        #[serde(default)]
        center: f64,
        width: f64,
    },
    /// `amp (1 + |x|²)^{-p/2}`; `p = None` lets the harness pick it from `λ`.
    PowerTail {
        amp: f64,
        #[serde(default)]
        p: Option<f64>,
    },
    /// `amp sin(index π (x − r_lo)/(r_hi − r_lo))`.
    Mode {
        index: u32,
        #[serde(default = "one")]
        amp: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// Nodes over which data is ramped down to the Dirichlet walls.
pub const RAMP_NODES: usize = 10;

impl DataSpec {
    pub fn generate(&self, g: &Grid) -> Result<Vec<f64>> {
        let ramp = discretization::boundary_ramp(g, RAMP_NODES);
        let ramped = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
            g.sample(f).iter().zip(&ramp).map(|(v, c)| v * c).collect()
        };
        match *self {
            DataSpec::Zero => Ok(g.zeros()),
            DataSpec::Gaussian { amp, center, width } => {
                if !(width > 0.0) {
                    return Err(Error::Config(vec![format!("gaussian width must be positive, got {width}")]));
                }
                Ok(ramped(&|x| amp * (-((x - center) / width).powi(2)).exp()))
            }
            DataSpec::PowerTail { amp, p } => {
                let p = p.ok_or_else(|| Error::Config(vec!["power_tail exponent p is unresolved".into()]))?;
                if !(p > 0.0) {
                    return Err(Error::Config(vec![format!("power_tail exponent must be positive, got {p}")]));
                }
                Ok(ramped(&|x| amp * (1.0 + x * x).powf(-0.5 * p)))
            }
            DataSpec::Mode { index, amp } => {
                if index == 0 {
                    return Err(Error::Config(vec!["mode index must be >= 1".into()]));
                }
                let (lo, hi) = (g.r_lo(), g.r_hi());
                let k = index as f64 * std::f64::consts::PI / (hi - lo);
                Ok(g.sample(|x| amp * (k * (x - lo)).sin()))
            }
        }
    }
}

/// `λ_j = λ − 2αj/(2−α)` for `j = 0..=n+1`.
pub fn lambda_schedule(lambda: f64, alpha: f64, n: usize) -> Vec<f64> {
    (0..=n + 1)
        .map(|j| lambda - 2.0 * alpha / (2.0 - alpha) * j as f64)
        .collect()
}

/// Depth of the derivative tower kept for `V_j`.
pub fn tower_depth(n: usize, j: usize) -> usize {
    2 * n - j
}

fn zero_pinned(g: &Grid, u: &mut [f64]) {
    for i in (0..g.len()).filter(|&i| g.is_dirichlet(i)) {
        u[i] = 0.0;
    }
}

/// `∂ₜᵏV_j(·,0)` for `0 ≤ j ≤ n`, `0 ≤ k ≤ 2n − j`, indexed `[j][k]`.
pub fn initial_data_tower(g: &Grid, a: &[f64], u0: &[f64], u1: &[f64], n: usize) -> Result<Vec<Vec<Vec<f64>>>> {
    g.check(a)?;
    g.check(u0)?;
    g.check(u1)?;
    let m = g.len();
    let mut tower: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let mut col = Vec::with_capacity(tower_depth(n, j) + 1);
        let mut base: Vec<f64> = if j == 0 {
            (0..m).map(|i| u0[i] + u1[i] / a[i]).collect()
        } else {
            (0..m).map(|i| -(-a[i]).powi(-(j as i32) - 1) * u1[i]).collect()
        };
        zero_pinned(g, &mut base);
        col.push(base);
        for k in 1..=tower_depth(n, j) {
            let lap = discretization::laplacian_apply(g, &col[k - 1])?;
            let mut next: Vec<f64> = (0..m)
                .map(|i| {
                    let prev = if j == 0 { 0.0 } else { tower[j - 1][k][i] };
                    (lap[i] - prev) / a[i]
                })
                .collect();
            zero_pinned(g, &mut next);
            col.push(next);
        }
        tower.push(col);
    }
    Ok(tower)
}

pub fn initial_data_tower_for(
    g: &Grid,
    profile: &DampingProfile,
    u0: &[f64],
    u1: &[f64],
    n: usize,
) -> Result<Vec<Vec<Vec<f64>>>> {
    initial_data_tower(g, &damping_nodes(g, profile)?, u0, u1, n)
}

/// Everything needed to run one cascade.
#[derive(Debug, Clone)]
pub struct CascadeSetup {
    pub grid: Grid,
    pub profile: DampingProfile,
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
    pub n: usize,
    pub lambda: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Keep every snapshot of every member (memory grows with the run).
    pub keep_fields: bool,
}

/// State of all members at one time level, handed to observers.
pub struct Snapshot<'a> {
    pub step: usize,
    pub t: f64,
    pub a: &'a [f64],
    pub u: &'a [f64],
    pub du: &'a [f64],
    /// `W[j][k] ≈ ∂ₜᵏV_j`.
    pub w: &'a [Vec<Vec<f64>>],
    /// `∂ₜW[j][k]` from the equation.
    pub dw: &'a [Vec<Vec<f64>>],
    pub u1: &'a [f64],
    pub du1: &'a [f64],
}

pub type Observer<'a> = dyn FnMut(&Snapshot) -> Result<()> + 'a;

/// Largest defect of `W[j][k+1] ≈ a^{-1}(Δ_h W[j][k] − W[j−1][k+1])` over the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsistencyEntry {
    pub j: usize,
    pub k: usize,
    pub max_defect: f64,
    pub max_norm: f64,
}

impl ConsistencyEntry {
    pub fn relative(&self) -> f64 {
        if self.max_norm > 0.0 {
            self.max_defect / self.max_norm
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct CascadeFields {
    pub u: FieldTrajectory,
    pub w: Vec<Vec<FieldTrajectory>>,
    pub u1: FieldTrajectory,
}

#[derive(Debug, Clone)]
pub struct CascadeBundle {
    pub n: usize,
    pub lambda: f64,
    pub lambda_schedule: Vec<f64>,
    pub dt: f64,
    pub times: Vec<f64>,
    pub l2_u: Vec<f64>,
    /// `‖W[j][k](t)‖`, indexed `[j][k][step]`.
    pub l2_w: Vec<Vec<Vec<f64>>>,
    /// `res_k = ‖u − Σ_{j≤k} W[j][j]‖`, indexed `[k][step]`.
    pub residuals: Vec<Vec<f64>>,
    pub l2_u1: Vec<f64>,
    pub l2_du1: Vec<f64>,
    /// `‖u − V₀ − ∂ₜU₁‖`.
    pub decomposition_defect: Vec<f64>,
    pub consistency: Vec<ConsistencyEntry>,
    pub fields: Option<CascadeFields>,
}

impl CascadeBundle {
    /// `‖∂ₜʲV_j‖`.
    pub fn profile_trace(&self, j: usize) -> &[f64] {
        &self.l2_w[j][j]
    }
}

fn validate_setup(s: &CascadeSetup) -> Result<()> {
    let mut problems = Vec::new();
    s.grid.check(&s.u0)?;
    s.grid.check(&s.u1)?;
    if s.profile.dim != s.grid.dim() {
        problems.push(format!(
            "profile dimension {} differs from grid dimension {}",
            s.profile.dim,
            s.grid.dim()
        ));
    }
    let last = *lambda_schedule(s.lambda, s.profile.alpha, s.n).last().expect("nonempty schedule");
    if last < 0.0 {
        problems.push(format!(
            "lambda_(n+1) = {last} is negative; need lambda >= 2*alpha*(n+1)/(2-alpha)"
        ));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(problems))
    }
}

fn cascade_err(j: usize, k: usize, e: Error) -> Error {
    Error::Cascade {
        j,
        k,
        source: Box::new(e),
    }
}

fn all_finite(u: &[f64]) -> bool {
    u.iter().all(|v| v.is_finite())
}

/// Steps `u`, the tower `W[j][k]` and `U₁` in lock-step, calling `observer` at every time level.
pub fn build_cascade(setup: &CascadeSetup, mut observer: Option<&mut Observer>) -> Result<CascadeBundle> {
    validate_setup(setup)?;
    let g = &setup.grid;
    let n = setup.n;
    let m = g.len();
    let (steps, dt) = step_count(setup.t_end, setup.dt)?;
    let a = damping_nodes(g, &setup.profile)?;
    let mut wave = WaveStepper::new(g, &a, dt)?;
    let mut heat = ParabolicStepper::new(g, &a, dt)?;
    let lap = g.laplacian_matrix();

    let tower0 = initial_data_tower(g, &a, &setup.u0, &setup.u1, n)?;
    let mut w = tower0;
    let co_traj = |w: &[Vec<Vec<f64>>], j: usize, k: usize, out: &mut Vec<f64>| {
        lap.apply_into(&w[j][k], out);
        for i in 0..m {
            let src = if j == 0 { 0.0 } else { w[j - 1][k + 1][i] };
            out[i] = if g.is_dirichlet(i) { 0.0 } else { (out[i] - src) / a[i] };
        }
    };
    let mut dw: Vec<Vec<Vec<f64>>> = (0..=n).map(|j| vec![vec![0.0; m]; tower_depth(n, j) + 1]).collect();
    let refresh = |w: &[Vec<Vec<f64>>], dw: &mut Vec<Vec<Vec<f64>>>| {
        for j in 0..=n {
            for k in 0..=tower_depth(n, j) {
                let mut out = std::mem::take(&mut dw[j][k]);
                co_traj(w, j, k, &mut out);
                dw[j][k] = out;
            }
        }
    };
    refresh(&w, &mut dw);

    // Wave members: u with (u₀, u₁); U₁ with (0, −u₁/a) forced by −∂ₜV₀.
    // Slots hold time levels step−2, step−1, step, step+1.
    let mut u_hist: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; m]);
    let mut r_hist: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; m]);
    u_hist[2].copy_from_slice(&setup.u0);
    zero_pinned(g, &mut u_hist[2]);
    let v1: Vec<f64> = (0..m).map(|i| if g.is_dirichlet(i) { 0.0 } else { -setup.u1[i] / a[i] }).collect();
    let mut force: Vec<f64> = dw[0][0].iter().map(|v| -v).collect();
    if steps >= 1 {
        let (lo, hi) = u_hist.split_at_mut(3);
        wave.start(&lo[2], &setup.u1, None, &mut hi[0]);
        let (lo, hi) = r_hist.split_at_mut(3);
        wave.start(&lo[2], &v1, Some(&force), &mut hi[0]);
    }

    let mut bundle = CascadeBundle {
        n,
        lambda: setup.lambda,
        lambda_schedule: lambda_schedule(setup.lambda, setup.profile.alpha, n),
        dt,
        times: Vec::with_capacity(steps + 1),
        l2_u: Vec::with_capacity(steps + 1),
        l2_w: (0..=n).map(|j| vec![Vec::with_capacity(steps + 1); tower_depth(n, j) + 1]).collect(),
        residuals: vec![Vec::with_capacity(steps + 1); n + 1],
        l2_u1: Vec::with_capacity(steps + 1),
        l2_du1: Vec::with_capacity(steps + 1),
        decomposition_defect: Vec::with_capacity(steps + 1),
        consistency: (0..=n)
            .flat_map(|j| {
                (0..tower_depth(n, j)).map(move |k| ConsistencyEntry {
                    j,
                    k,
                    max_defect: 0.0,
                    max_norm: 0.0,
                })
            })
            .collect(),
        fields: setup.keep_fields.then(|| CascadeFields {
            u: FieldTrajectory::new("u"),
            w: (0..=n)
                .map(|j| (0..=tower_depth(n, j)).map(|k| FieldTrajectory::new(format!("W[{j}][{k}]"))).collect())
                .collect(),
            u1: FieldTrajectory::new("U1"),
        }),
    };

    let mut du = vec![0.0; m];
    let mut du1 = vec![0.0; m];
    let mut scratch = vec![0.0; m];
    let mut new_w = w.clone();
    for step in 0..=steps {
        let t = step as f64 * dt;
        let velocity = |hist: &[Vec<f64>; 4], init: &[f64], out: &mut [f64]| {
            for i in 0..m {
                out[i] = if g.is_dirichlet(i) {
                    0.0
                } else if step == 0 {
                    init[i]
                } else if step < steps {
                    (hist[3][i] - hist[1][i]) / (2.0 * dt)
                } else if step >= 2 {
                    (3.0 * hist[2][i] - 4.0 * hist[1][i] + hist[0][i]) / (2.0 * dt)
                } else {
                    (hist[2][i] - hist[1][i]) / dt
                };
            }
        };
        velocity(&u_hist, &setup.u1, &mut du);
        velocity(&r_hist, &v1, &mut du1);

        bundle.times.push(t);
        bundle.l2_u.push(discretization::l2_norm(g, &u_hist[2]));
        for j in 0..=n {
            for k in 0..=tower_depth(n, j) {
                bundle.l2_w[j][k].push(discretization::l2_norm(g, &w[j][k]));
            }
        }
        let mut partial = u_hist[2].clone();
        for k in 0..=n {
            for i in 0..m {
                partial[i] -= w[k][k][i];
            }
            bundle.residuals[k].push(discretization::l2_norm(g, &partial));
        }
        bundle.l2_u1.push(discretization::l2_norm(g, &r_hist[2]));
        bundle.l2_du1.push(discretization::l2_norm(g, &du1));
        for i in 0..m {
            scratch[i] = u_hist[2][i] - w[0][0][i] - du1[i];
        }
        bundle.decomposition_defect.push(discretization::l2_norm(g, &scratch));
        for e in bundle.consistency.iter_mut() {
            for i in 0..m {
                scratch[i] = w[e.j][e.k + 1][i] - dw[e.j][e.k][i];
            }
            e.max_defect = e.max_defect.max(discretization::l2_norm(g, &scratch));
            e.max_norm = e.max_norm.max(discretization::l2_norm(g, &w[e.j][e.k + 1]));
        }
        if let Some(f) = bundle.fields.as_mut() {
            f.u.push(t, u_hist[2].clone(), Some(du.clone()));
            f.u1.push(t, r_hist[2].clone(), Some(du1.clone()));
            for j in 0..=n {
                for k in 0..=tower_depth(n, j) {
                    f.w[j][k].push(t, w[j][k].clone(), Some(dw[j][k].clone()));
                }
            }
        }
        if let Some(obs) = observer.as_deref_mut() {
            obs(&Snapshot {
                step,
                t,
                a: &a,
                u: &u_hist[2],
                du: &du,
                w: &w,
                dw: &dw,
                u1: &r_hist[2],
                du1: &du1,
            })?;
        }
        if step == steps {
            break;
        }

        // Parabolic members: j in increasing order so sources at the new level are ready.
        for j in 0..=n {
            for k in 0..=tower_depth(n, j) {
                let mut v = std::mem::take(&mut new_w[j][k]);
                v.copy_from_slice(&w[j][k]);
                if j == 0 {
                    heat.step(&mut v, None, None);
                } else {
                    let now: Vec<f64> = w[j - 1][k + 1].iter().map(|x| -x).collect();
                    let next: Vec<f64> = new_w[j - 1][k + 1].iter().map(|x| -x).collect();
                    heat.step(&mut v, Some(&now), Some(&next));
                }
                if !all_finite(&v) {
                    return Err(cascade_err(
                        j,
                        k,
                        Error::Divergence {
                            step: step + 1,
                            what: format!("W[{j}][{k}]"),
                        },
                    ));
                }
                new_w[j][k] = v;
            }
        }
        std::mem::swap(&mut w, &mut new_w);
        refresh(&w, &mut dw);

        u_hist.rotate_left(1);
        r_hist.rotate_left(1);
        if step + 1 < steps {
            let (lo, hi) = u_hist.split_at_mut(3);
            wave.step(&lo[1], &lo[2], None, &mut hi[0]);
            if !all_finite(&hi[0]) {
                return Err(Error::Divergence {
                    step: step + 2,
                    what: "u".into(),
                });
            }
            for i in 0..m {
                force[i] = -dw[0][0][i];
            }
            let (lo, hi) = r_hist.split_at_mut(3);
            wave.step(&lo[1], &lo[2], Some(&force), &mut hi[0]);
            if !all_finite(&hi[0]) {
                return Err(Error::Divergence {
                    step: step + 2,
                    what: "U1".into(),
                });
            }
        }
    }
    Ok(bundle)
}

/// Initial data `U_{n+1}^{(p)} = ∂ₜᵖU_{n+1}(·,0)` computed two ways.
#[derive(Debug, Clone, Serialize)]
pub struct CompatibilityReport {
    pub n: usize,
    /// By the recursion, `p = 0..=n+1`.
    pub recursion: Vec<Vec<f64>>,
    /// By the closed form for `p ≥ 2` (entries 0 and 1 copy the definition).
    pub closed_form: Vec<Vec<f64>>,
    /// `max_p max_x |recursion − closed| / max|closed|`.
    pub max_discrepancy: f64,
    /// The same discrepancy when `U^{(1)}` carries the opposite sign `−(−a)^{−n−1}u₁`.
    pub flipped_sign_discrepancy: f64,
    pub sign_note: String,
}

fn compat_recursion(g: &Grid, a: &[f64], tower: &[Vec<Vec<f64>>], n: usize, first: Vec<f64>) -> Result<Vec<Vec<f64>>> {
    let m = g.len();
    let mut out = vec![vec![0.0; m], first];
    for p in 2..=n + 1 {
        let lap = discretization::laplacian_apply(g, &out[p - 2])?;
        let next: Vec<f64> = (0..m)
            .map(|i| lap[i] - a[i] * out[p - 1][i] - tower[n][p - 1][i])
            .collect();
        out.push(next);
    }
    Ok(out)
}

fn rel_gap(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> f64 {
    let scale = ys.iter().flatten().fold(0.0_f64, |s, v| s.max(v.abs()));
    let gap = xs
        .iter()
        .flatten()
        .zip(ys.iter().flatten())
        .fold(0.0_f64, |s, (x, y)| s.max((x - y).abs()));
    if scale > 0.0 {
        gap / scale
    } else {
        gap
    }
}

/// Compares the recursion `U^{(p)} = Δ_h U^{(p−2)} − a U^{(p−1)} − ∂ₜ^{p−1}V_n(·,0)` with the closed form
/// `(−a)^{−(n−p+2)}u₁ − Σ_{q=1}^{p−1} ∂ₜ^q V_{n−p+1+q}(·,0)`, starting from `U^{(1)} = (−a)^{−n−1}u₁`.
pub fn compatibility_data(g: &Grid, a: &[f64], u1: &[f64], n: usize, tower: &[Vec<Vec<f64>>]) -> Result<CompatibilityReport> {
    g.check(a)?;
    g.check(u1)?;
    if tower.len() < n + 1 || tower[n].len() < n + 1 {
        return Err(Error::Config(vec![format!("tower too shallow for order {n}")]));
    }
    let m = g.len();
    let power = |e: i32| -> Vec<f64> { (0..m).map(|i| (-a[i]).powi(-e) * u1[i]).collect() };
    let first = power(n as i32 + 1);
    let recursion = compat_recursion(g, a, tower, n, first.clone())?;
    let flipped = compat_recursion(g, a, tower, n, first.iter().map(|v| -v).collect())?;

    let mut closed_form = vec![vec![0.0; m], first];
    for p in 2..=n + 1 {
        let mut v = power((n + 2 - p) as i32);
        for q in 1..p {
            let j = n + 1 + q - p;
            for i in 0..m {
                v[i] -= tower[j][q][i];
            }
        }
        closed_form.push(v);
    }
    let max_discrepancy = rel_gap(&recursion, &closed_form);
    let flipped_sign_discrepancy = rel_gap(&flipped, &closed_form);
    Ok(CompatibilityReport {
        n,
        recursion,
        closed_form,
        max_discrepancy,
        flipped_sign_discrepancy,
        sign_note: "U^(1) = (-a)^(-n-1) u1 as in the remainder equation; the opposite sign \
                    -(-a)^(-n-1) u1 does not reproduce the closed form"
            .into(),
    })
}

/// Defect of `u = V₀ + ∂ₜU₁` over a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub max_defect: f64,
    /// `max_t ‖u‖`, for scale.
    pub max_norm: f64,
    /// `max_defect / (h² + dt²)`.
    pub scaled: f64,
}

pub fn verify_first_order_decomposition(setup: &CascadeSetup) -> Result<DecompositionReport> {
    let mut s = setup.clone();
    s.n = 0;
    s.keep_fields = false;
    let b = build_cascade(&s, None)?;
    let max_defect = b.decomposition_defect.iter().fold(0.0_f64, |x, &y| x.max(y));
    let h = s.grid.h();
    Ok(DecompositionReport {
        max_defect,
        max_norm: b.l2_u.iter().fold(0.0_f64, |x, &y| x.max(y)),
        scaled: max_defect / (h * h + b.dt * b.dt),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn interval_setup(h: f64, n: usize, t_end: f64) -> CascadeSetup {
        let grid = Grid::line(0.0, PI, h).unwrap();
        let mode = DataSpec::Mode { index: 1, amp: 1.0 };
        let u0 = mode.generate(&grid).unwrap();
        let u1 = DataSpec::Mode { index: 1, amp: 0.5 }.generate(&grid).unwrap();
        CascadeSetup {
            profile: DampingProfile::constant(1.0, 1).unwrap(),
            u0,
            u1,
            grid,
            n,
            lambda: 0.3,
            t_end,
            dt: 0.5 * h,
            keep_fields: false,
        }
    }

    #[test]
    fn tower_base_matches_data() {
        let g = Grid::line(0.0, PI, PI / 50.0).unwrap();
        let a: Vec<f64> = g.nodes().iter().map(|x| 1.0 + 0.1 * x).collect();
        let u0 = g.sample(f64::sin);
        let u1 = g.sample(|x| x.sin().powi(2));
        let t = initial_data_tower(&g, &a, &u0, &u1, 2).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t[0].len(), 5);
        assert_eq!(t[2].len(), 3);
        for i in 1..g.len() - 1 {
            assert!((t[0][0][i] - (u0[i] + u1[i] / a[i])).abs() < 1e-15);
            assert!((t[1][0][i] + u1[i] / (a[i] * a[i])).abs() < 1e-15);
            assert!((t[2][0][i] - u1[i] / a[i].powi(3)).abs() < 1e-15);
        }
    }

    #[test]
    fn tower_of_zero_data_is_zero() {
        let g = Grid::line(-1.0, 1.0, 0.1).unwrap();
        let a = vec![1.0; g.len()];
        let t = initial_data_tower(&g, &a, &g.zeros(), &g.zeros(), 2).unwrap();
        assert!(t.iter().flatten().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn tower_first_derivative_of_sine() {
        let g = Grid::line(0.0, PI, PI / 200.0).unwrap();
        let a = vec![1.0; g.len()];
        let t = initial_data_tower(&g, &a, &g.sample(f64::sin), &g.zeros(), 0).unwrap();
        assert_eq!(t[0].len(), 1);
        let t = initial_data_tower(&g, &a, &g.sample(f64::sin), &g.zeros(), 1).unwrap();
        for (x, v) in g.nodes().iter().zip(&t[0][1]) {
            assert!((v + x.sin()).abs() < 1e-4);
        }
    }

    #[test]
    fn zero_data_cascade_is_zero() {
        let mut s = interval_setup(PI / 40.0, 0, 2.0);
        s.u0 = s.grid.zeros();
        s.u1 = s.grid.zeros();
        let b = build_cascade(&s, None).unwrap();
        assert!(b.l2_u.iter().all(|&v| v == 0.0));
        assert!(b.residuals[0].iter().all(|&v| v == 0.0));
        assert!(b.decomposition_defect.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fields_match_standalone_solvers() {
        let mut s = interval_setup(PI / 50.0, 1, 2.0);
        s.keep_fields = true;
        let b = build_cascade(&s, None).unwrap();
        let f = b.fields.as_ref().unwrap();
        let u = crate::wave::solve_damped_wave(&s.grid, &s.profile, &s.u0, &s.u1, None, s.t_end, s.dt).unwrap();
        for (x, y) in f.u.values.iter().flatten().zip(u.values.iter().flatten()) {
            assert!((x - y).abs() < 1e-13);
        }
        for (x, y) in f.u.derivs.as_ref().unwrap().iter().flatten().zip(u.derivs.as_ref().unwrap().iter().flatten()) {
            assert!((x - y).abs() < 1e-12);
        }
        let v0: Vec<f64> = s.u0.iter().zip(&s.u1).map(|(a, b)| a + b).collect();
        let v = crate::parabolic::solve_parabolic(&s.grid, &s.profile, &v0, None, s.t_end, s.dt).unwrap();
        for (x, y) in f.w[0][0].values.iter().flatten().zip(v.values.iter().flatten()) {
            assert!((x - y).abs() < 1e-13);
        }
        assert_eq!(b.times.len(), f.u.len());
    }

    #[test]
    fn homogeneous_column_is_consistent_to_roundoff() {
        let s = interval_setup(PI / 50.0, 1, 2.0);
        let b = build_cascade(&s, None).unwrap();
        for e in b.consistency.iter().filter(|e| e.j == 0) {
            assert!(e.relative() < 1e-11, "{e:?}");
        }
        for e in b.consistency.iter().filter(|e| e.j > 0) {
            assert!(e.relative() < 1e-2, "{e:?}");
        }
    }

    #[test]
    fn decomposition_defect_vanishes_at_second_order() {
        let coarse = verify_first_order_decomposition(&interval_setup(PI / 50.0, 0, 5.0)).unwrap();
        let fine = verify_first_order_decomposition(&interval_setup(PI / 100.0, 0, 5.0)).unwrap();
        let ratio = coarse.max_defect / fine.max_defect;
        assert!((3.4..=4.6).contains(&ratio), "{coarse:?} {fine:?} {ratio}");
    }

    #[test]
    fn residual_is_smaller_than_the_solution_late() {
        let s = interval_setup(PI / 50.0, 1, 10.0);
        let b = build_cascade(&s, None).unwrap();
        let last = b.times.len() - 1;
        assert!(b.residuals[0][last] < b.l2_u[last]);
    }

    #[test]
    fn compatibility_closed_form_matches() {
        let g = Grid::line(0.0, PI, PI / 60.0).unwrap();
        let a: Vec<f64> = g.nodes().iter().map(|x| 1.0 + 0.3 * x.cos()).collect();
        let u0 = g.sample(|x| x.sin().powi(3));
        let u1 = g.sample(|x| x.sin().powi(4));
        for n in [0, 1, 2] {
            let tower = initial_data_tower(&g, &a, &u0, &u1, n).unwrap();
            let rep = compatibility_data(&g, &a, &u1, n, &tower).unwrap();
            assert_eq!(rep.recursion.len(), n + 2);
            assert!(rep.max_discrepancy < 1e-12, "n={n} {}", rep.max_discrepancy);
            if n >= 1 {
                assert!(rep.flipped_sign_discrepancy > 1e-3, "n={n} {}", rep.flipped_sign_discrepancy);
            }
        }
    }

    #[test]
    fn compatibility_n1_by_hand() {
        let g = Grid::line(0.0, PI, PI / 40.0).unwrap();
        let a = vec![1.0; g.len()];
        let u0 = g.sample(f64::sin);
        let u1 = g.sample(|x| (2.0 * x).sin());
        let tower = initial_data_tower(&g, &a, &u0, &u1, 1).unwrap();
        let rep = compatibility_data(&g, &a, &u1, 1, &tower).unwrap();
        for i in 0..g.len() {
            assert_eq!(rep.recursion[1][i], u1[i]);
            let want = -u1[i] - tower[1][1][i];
            assert!((rep.recursion[2][i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn compatibility_zero_u1() {
        let g = Grid::line(0.0, PI, PI / 40.0).unwrap();
        let a = vec![1.0; g.len()];
        let tower = initial_data_tower(&g, &a, &g.zeros(), &g.zeros(), 2).unwrap();
        let rep = compatibility_data(&g, &a, &g.zeros(), 2, &tower).unwrap();
        assert!(rep.recursion.iter().flatten().all(|&v| v == 0.0));
        assert_eq!(rep.max_discrepancy, 0.0);
    }

    #[test]
    fn n0_first_datum_is_minus_u1_over_a() {
        let g = Grid::line(0.0, PI, PI / 40.0).unwrap();
        let a: Vec<f64> = g.nodes().iter().map(|x| 2.0 + x).collect();
        let u1 = g.sample(f64::sin);
        let tower = initial_data_tower(&g, &a, &g.zeros(), &u1, 0).unwrap();
        let rep = compatibility_data(&g, &a, &u1, 0, &tower).unwrap();
        for i in 0..g.len() {
            assert!((rep.recursion[1][i] + u1[i] / a[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_negative_last_lambda() {
        let g = Grid::radial(3, 1.0, 10.0, 0.1).unwrap();
        let s = CascadeSetup {
            profile: DampingProfile::pure_power(1.0, 0.5, 3, 1.0).unwrap(),
            u0: g.zeros(),
            u1: g.zeros(),
            grid: g,
            n: 0,
            lambda: 0.5,
            t_end: 1.0,
            dt: 0.05,
            keep_fields: false,
        };
        assert!(matches!(build_cascade(&s, None), Err(Error::Config(_))));
    }

    #[test]
    fn schedule_and_depth() {
        let s = lambda_schedule(1.0, 0.5, 1);
        assert_eq!(s.len(), 3);
        assert!((s[1] - (1.0 - 2.0 / 3.0)).abs() < 1e-15);
        assert_eq!(tower_depth(2, 0), 4);
        assert_eq!(tower_depth(2, 2), 2);
    }

    #[test]
    fn data_generators() {
        let g = Grid::line(-10.0, 10.0, 0.1).unwrap();
        let u = DataSpec::PowerTail { amp: 1.0, p: Some(1.0) }.generate(&g).unwrap();
        assert_eq!(u[0], 0.0);
        assert_eq!(*u.last().unwrap(), 0.0);
        assert!((u[100] - 1.0).abs() < 1e-15);
        assert!(DataSpec::PowerTail { amp: 1.0, p: None }.generate(&g).is_err());
        assert!(DataSpec::Mode { index: 0, amp: 1.0 }.generate(&g).is_err());
        let gauss = DataSpec::Gaussian { amp: 2.0, center: 1.0, width: 0.5 }.generate(&g).unwrap();
        assert!((gauss[110] - 2.0).abs() < 1e-12);
    }
}
