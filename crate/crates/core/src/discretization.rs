//! Uniform line and radial grids, the second-order Laplacian, quadrature of grid functions
//! and stored field trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// The real line (or an interval of it), `N = 1`.
    Line,
    /// Radially symmetric functions on a ball or the exterior of a ball in `R^N`.
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Homogeneous Dirichlet: the end node carries 0 at all times.
    Dirichlet,
    /// Regularity at the radial origin, `u'(0) = 0`.
    NeumannRegular,
}

/// Surface area of the unit sphere `S^{N-1}`.
pub fn sphere_area(dim: usize) -> f64 {
    let half = dim as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(half) / gamma_half_integer(dim)
}

// Γ(N/2) for integer N ≥ 1.
fn gamma_half_integer(dim: usize) -> f64 {
    let mut g = if dim.is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if dim.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x < dim as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Three-band matrix stored row-wise; row `i` couples nodes `i-1`, `i`, `i+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                v += self.upper[i] * x[i + 1];
            }
            out[i] = v;
        }
    }
}

/// LU factors of a tridiagonal matrix for repeated Thomas solves.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    // Modified super-diagonal and reciprocal pivots.
    upper: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl TridiagonalLu {
    pub fn factor(m: &Tridiagonal) -> Result<Self> {
        let n = m.len();
        let mut upper = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        for i in 0..n {
            let pivot = if i == 0 {
                m.diag[0]
            } else {
                m.diag[i] - m.lower[i] * upper[i - 1]
            };
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Domain(format!("singular tridiagonal system at row {i}")));
            }
            inv_pivot[i] = 1.0 / pivot;
            upper[i] = m.upper[i] * inv_pivot[i];
        }
        Ok(Self {
            lower: m.lower.clone(),
            upper,
            inv_pivot,
        })
    }

    /// Solves in place: `rhs` becomes the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            rhs[i] -= self.upper[i] * rhs[i + 1];
        }
    }
}

/// A uniform grid on `[r_lo, r_hi]` with its quadrature measure and Laplacian stencil.
#[derive(Debug, Clone)]
pub struct Grid {
    geometry: Geometry,
    dim: usize,
    r_lo: f64,
    r_hi: f64,
    h: f64,
    bc_lo: Boundary,
    bc_hi: Boundary,
    nodes: Vec<f64>,
    mu: Vec<f64>,
    laplacian: Tridiagonal,
}

impl Grid {
    /// Builds a grid; the spacing is adjusted so that `r_hi - r_lo = (M-1)h` holds exactly.
    pub fn new(
        geometry: Geometry,
        dim: usize,
        r_lo: f64,
        r_hi: f64,
        h: f64,
        bc_lo: Boundary,
        bc_hi: Boundary,
    ) -> Result<Self> {
        let mut problems = Vec::new();
        if !(h > 0.0 && h.is_finite()) {
            problems.push(format!("grid spacing h must be positive, got {h}"));
        }
        if !(r_hi > r_lo) {
            problems.push(format!("need r_hi > r_lo, got [{r_lo}, {r_hi}]"));
        }
        match geometry {
            Geometry::Line => {
                if dim != 1 {
                    problems.push(format!("line geometry is one-dimensional, got N={dim}"));
                }
                if bc_lo != Boundary::Dirichlet || bc_hi != Boundary::Dirichlet {
                    problems.push("line geometry supports Dirichlet ends only".into());
                }
            }
            Geometry::Radial => {
                if dim < 2 {
                    problems.push(format!("radial geometry needs N >= 2, got N={dim}"));
                }
                if r_lo < 0.0 {
                    problems.push(format!("radial grid needs r_lo >= 0, got {r_lo}"));
                }
                if r_lo == 0.0 && bc_lo != Boundary::NeumannRegular {
                    problems.push("a radial grid starting at the origin needs the neumann_regular condition".into());
                }
                if r_lo > 0.0 && bc_lo == Boundary::NeumannRegular {
                    problems.push("neumann_regular applies only at r_lo = 0".into());
                }
                if bc_hi != Boundary::Dirichlet {
                    problems.push("the outer radial boundary must be Dirichlet".into());
                }
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        let cells = ((r_hi - r_lo) / h).round().max(2.0) as usize;
        let h = (r_hi - r_lo) / cells as f64;
        let m = cells + 1;
        let nodes: Vec<f64> = (0..m)
            .map(|i| if i + 1 == m { r_hi } else { r_lo + i as f64 * h })
            .collect();

        let mu = match geometry {
            Geometry::Line => (0..m)
                .map(|i| if i == 0 || i + 1 == m { 0.5 * h } else { h })
                .collect(),
            Geometry::Radial => {
                let area = sphere_area(dim);
                (0..m)
                    .map(|i| {
                        if i == 0 && bc_lo == Boundary::NeumannRegular {
                            // Volume of the ball of radius h/2 around the origin.
                            area * (0.5 * h).powi(dim as i32) / dim as f64
                        } else {
                            let w = if i == 0 || i + 1 == m { 0.5 * h } else { h };
                            area * nodes[i].powi(dim as i32 - 1) * w
                        }
                    })
                    .collect()
            }
        };

        let mut lap = Tridiagonal {
            lower: vec![0.0; m],
            diag: vec![0.0; m],
            upper: vec![0.0; m],
        };
        let ih2 = 1.0 / (h * h);
        for i in 0..m {
            let at_lo = i == 0;
            let at_hi = i + 1 == m;
            if (at_lo && bc_lo == Boundary::Dirichlet) || (at_hi && bc_hi == Boundary::Dirichlet) {
                continue;
            }
            if at_lo {
                // Regularity limit Δu(0) = 2N (u_1 - u_0) / h².
                let c = 2.0 * dim as f64 * ih2;
                lap.diag[i] = -c;
                lap.upper[i] = c;
                continue;
            }
            let drift = match geometry {
                Geometry::Line => 0.0,
                Geometry::Radial => (dim as f64 - 1.0) / nodes[i] / (2.0 * h),
            };
            lap.lower[i] = ih2 - drift;
            lap.diag[i] = -2.0 * ih2;
            lap.upper[i] = ih2 + drift;
        }

        Ok(Self {
            geometry,
            dim,
            r_lo,
            r_hi,
            h,
            bc_lo,
            bc_hi,
            nodes,
            mu,
            laplacian: lap,
        })
    }

    /// Dirichlet interval `[lo, hi]` on the line.
    pub fn line(lo: f64, hi: f64, h: f64) -> Result<Self> {
        Self::new(Geometry::Line, 1, lo, hi, h, Boundary::Dirichlet, Boundary::Dirichlet)
    }

    /// Radial grid on `[r_lo, r_hi]`; origin-regular when `r_lo = 0`, Dirichlet otherwise.
    pub fn radial(dim: usize, r_lo: f64, r_hi: f64, h: f64) -> Result<Self> {
        let lo = if r_lo == 0.0 {
            Boundary::NeumannRegular
        } else {
            Boundary::Dirichlet
        };
        Self::new(Geometry::Radial, dim, r_lo, r_hi, h, lo, Boundary::Dirichlet)
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn r_lo(&self) -> f64 {
        self.r_lo
    }
    pub fn r_hi(&self) -> f64 {
        self.r_hi
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn measure(&self) -> &[f64] {
        &self.mu
    }
    pub fn bc(&self) -> (Boundary, Boundary) {
        (self.bc_lo, self.bc_hi)
    }
    pub fn laplacian_matrix(&self) -> &Tridiagonal {
        &self.laplacian
    }

    /// Distance from the symmetry centre: `|x|` on the line, `r` otherwise.
    pub fn radius(&self, i: usize) -> f64 {
        self.nodes[i].abs()
    }

    /// Whether node `i` is pinned to zero by a Dirichlet condition.
    pub fn is_dirichlet(&self, i: usize) -> bool {
        (i == 0 && self.bc_lo == Boundary::Dirichlet) || (i + 1 == self.len() && self.bc_hi == Boundary::Dirichlet)
    }

    pub fn check(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Samples `f` at the nodes and zeroes Dirichlet nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|i| if self.is_dirichlet(i) { 0.0 } else { f(self.nodes[i]) })
            .collect()
    }

    pub fn zeros(&self) -> Vec<f64> {
        vec![0.0; self.len()]
    }
}

/// Second-order discrete Laplacian; Dirichlet nodes map to 0.
pub fn laplacian_apply(g: &Grid, u: &[f64]) -> Result<Vec<f64>> {
    g.check(u)?;
    let mut out = vec![0.0; u.len()];
    g.laplacian.apply_into(u, &mut out);
    Ok(out)
}

/// `Σ μ_i f_i w(r_i)`, where `r_i` is the node coordinate.
pub fn weighted_integral(g: &Grid, f: &[f64], weight: impl Fn(f64) -> f64) -> Result<f64> {
    g.check(f)?;
    Ok(g.nodes.iter().zip(&g.mu).zip(f).map(|((&r, &m), &v)| m * v * weight(r)).sum())
}

/// `Σ μ_i f_i w_i` with the weight given at the nodes.
pub fn weighted_sum(g: &Grid, f: &[f64], w: &[f64]) -> f64 {
    g.mu.iter().zip(f).zip(w).map(|((m, v), w)| m * v * w).sum()
}

/// `μ`-weighted inner product.
pub fn inner(g: &Grid, u: &[f64], v: &[f64]) -> f64 {
    weighted_sum(g, u, v)
}

pub fn l2_norm(g: &Grid, u: &[f64]) -> f64 {
    g.mu.iter().zip(u).map(|(m, v)| m * v * v).sum::<f64>().sqrt()
}

/// Radial (or line) derivative: central in the interior, one-sided second order at the ends,
/// zero at a regular origin.
pub fn gradient(g: &Grid, u: &[f64]) -> Vec<f64> {
    let m = u.len();
    let h = g.h;
    let mut d = vec![0.0; m];
    for i in 1..m - 1 {
        d[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
    }
    d[0] = if g.bc_lo == Boundary::NeumannRegular {
        0.0
    } else {
        (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
    };
    d[m - 1] = (3.0 * u[m - 1] - 4.0 * u[m - 2] + u[m - 3]) / (2.0 * h);
    d
}

/// Largest `|u|` over the outermost `margin` nodes (both ends on the line, the outer end for
/// radial grids).
pub fn boundary_zone_amplitude(g: &Grid, u: &[f64], margin: usize) -> f64 {
    let m = u.len();
    let k = margin.min(m);
    let hi = u[m - k..].iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    match g.geometry {
        Geometry::Line => u[..k].iter().fold(hi, |a, v| a.max(v.abs())),
        Geometry::Radial => hi,
    }
}

/// Time-indexed grid functions with an optional companion time derivative.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FieldTrajectory {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// `∂ₜu` at the same time stamps, when the producer provides it.
    pub derivs: Option<Vec<Vec<f64>>>,
}

impl FieldTrajectory {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, u: Vec<f64>, du: Option<Vec<f64>>) {
        self.times.push(t);
        self.values.push(u);
        if let Some(du) = du {
            self.derivs.get_or_insert_with(Vec::new).push(du);
        }
    }

    pub fn l2_trace(&self, g: &Grid) -> Vec<f64> {
        self.values.iter().map(|u| l2_norm(g, u)).collect()
    }
}

/// Max over time of the boundary-zone amplitude.
pub fn truncation_monitor(g: &Grid, traj: &FieldTrajectory, margin_nodes: usize) -> f64 {
    traj.values
        .iter()
        .map(|u| boundary_zone_amplitude(g, u, margin_nodes))
        .fold(0.0, f64::max)
}

/// A `C²` ramp that rises from 0 at the Dirichlet ends to 1 over `width_nodes` nodes.
pub fn boundary_ramp(g: &Grid, width_nodes: usize) -> Vec<f64> {
    let w = width_nodes as f64 * g.h;
    let smooth = |d: f64| {
        if d >= w {
            1.0
        } else {
            let x = (d / w).max(0.0);
            // Quintic smoothstep: value, slope and curvature match at both ends.
            x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
        }
    };
    g.nodes
        .iter()
        .map(|&r| {
            let mut v = smooth(g.r_hi - r);
            if g.bc_lo == Boundary::Dirichlet {
                v *= smooth(r - g.r_lo);
            }
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_spacing_is_exact() {
        let g = Grid::line(-1.0, 1.0, 0.3).unwrap();
        assert!((g.nodes()[g.len() - 1] - g.nodes()[0] - (g.len() - 1) as f64 * g.h()).abs() < 1e-15);
        assert_eq!(g.nodes()[g.len() - 1], 1.0);
    }

    #[test]
    fn grid_rejects_bad_configurations() {
        assert!(Grid::line(1.0, -1.0, 0.1).is_err());
        assert!(Grid::radial(1, 0.0, 1.0, 0.1).is_err());
        assert!(Grid::new(Geometry::Radial, 3, 0.0, 1.0, 0.1, Boundary::Dirichlet, Boundary::Dirichlet).is_err());
        assert!(Grid::new(Geometry::Line, 1, 0.0, 1.0, 0.1, Boundary::NeumannRegular, Boundary::Dirichlet).is_err());
    }

    #[test]
    fn laplacian_of_constants_and_quadratics() {
        let g = Grid::line(-2.0, 2.0, 0.1).unwrap();
        let ones = vec![1.0; g.len()];
        let lap = laplacian_apply(&g, &ones).unwrap();
        assert!(lap[1..g.len() - 1].iter().all(|v| v.abs() < 1e-10));

        let sq: Vec<f64> = g.nodes().iter().map(|x| x * x).collect();
        let lap = laplacian_apply(&g, &sq).unwrap();
        assert!(lap[1..g.len() - 1].iter().all(|v| (v - 2.0).abs() < 1e-9));

        let g = Grid::radial(3, 0.0, 2.0, 0.05).unwrap();
        let sq: Vec<f64> = g.nodes().iter().map(|r| r * r).collect();
        let lap = laplacian_apply(&g, &sq).unwrap();
        assert!(lap[..g.len() - 1].iter().all(|v| (v - 6.0).abs() < 1e-9));
    }

    #[test]
    fn laplacian_dimension_mismatch() {
        let g = Grid::line(0.0, 1.0, 0.1).unwrap();
        assert!(matches!(laplacian_apply(&g, &[0.0; 3]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn integrals() {
        let g = Grid::line(-1.0, 1.0, 0.01).unwrap();
        let ones = vec![1.0; g.len()];
        assert!((weighted_integral(&g, &ones, |_| 1.0).unwrap() - 2.0).abs() < 1e-12);

        let g = Grid::line(-20.0, 20.0, 0.01).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|x| (-x * x).exp()).collect();
        let v = weighted_integral(&g, &f, |_| 1.0).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-6);

        let ball = 4.0 * std::f64::consts::PI / 3.0;
        let mut errs = Vec::new();
        for h in [0.02, 0.01] {
            let g = Grid::radial(3, 0.0, 1.0, h).unwrap();
            let ones = vec![1.0; g.len()];
            errs.push((weighted_integral(&g, &ones, |_| 1.0).unwrap() - ball).abs());
        }
        assert!(errs[0] < 1e-3);
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-13);
    }

    #[test]
    fn laplacian_convergence_order() {
        // Δ of e^{-r²} in N = 3 is (4r² - 6) e^{-r²}.
        let mut errs = Vec::new();
        for h in [0.04, 0.02, 0.01] {
            let g = Grid::radial(3, 0.0, 6.0, h).unwrap();
            let u: Vec<f64> = g.nodes().iter().map(|r| (-r * r).exp()).collect();
            let lap = laplacian_apply(&g, &u).unwrap();
            let e = g.nodes()[..g.len() - 1]
                .iter()
                .zip(&lap)
                .map(|(r, l)| (l - (4.0 * r * r - 6.0) * (-r * r).exp()).abs())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
        }
    }

    #[test]
    fn tridiagonal_solve_round_trip() {
        let m = Tridiagonal {
            lower: vec![0.0, -1.0, -1.0, -1.0],
            diag: vec![4.0, 4.0, 4.0, 4.0],
            upper: vec![-1.0, -1.0, -1.0, 0.0],
        };
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut b = vec![0.0; 4];
        m.apply_into(&x, &mut b);
        TridiagonalLu::factor(&m).unwrap().solve_in_place(&mut b);
        for (a, e) in b.iter().zip(x) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn truncation_monitor_zero_trajectory() {
        let g = Grid::line(0.0, 1.0, 0.1).unwrap();
        let mut t = FieldTrajectory::new("zero");
        t.push(0.0, g.zeros(), None);
        t.push(1.0, g.zeros(), None);
        assert_eq!(truncation_monitor(&g, &t, 3), 0.0);
    }

    #[test]
    fn ramp_is_zero_at_walls_and_one_inside() {
        let g = Grid::line(-1.0, 1.0, 0.01).unwrap();
        let r = boundary_ramp(&g, 10);
        assert_eq!(r[0], 0.0);
        assert_eq!(r[g.len() - 1], 0.0);
        assert_eq!(r[g.len() / 2], 1.0);
    }

    fn dirichlet_grids() -> Vec<Grid> {
        vec![
            Grid::line(-3.0, 2.0, 0.05).unwrap(),
            Grid::radial(2, 0.5, 4.0, 0.05).unwrap(),
            Grid::radial(3, 1.0, 5.0, 0.05).unwrap(),
            Grid::radial(2, 0.0, 4.0, 0.05).unwrap(),
        ]
    }

    fn field(g: &Grid, c: [f64; 4]) -> Vec<f64> {
        g.sample(|r| c[0] * (c[1] * r).sin() + c[2] * (-(r - c[3]).powi(2)).exp())
    }

    proptest! {
        #[test]
        fn laplacian_is_self_adjoint_and_nonpositive(
            a in prop::array::uniform4(-2.0f64..2.0),
            b in prop::array::uniform4(-2.0f64..2.0),
        ) {
            for g in dirichlet_grids() {
                let u = field(&g, a);
                let v = field(&g, b);
                let lu = laplacian_apply(&g, &u).unwrap();
                let lv = laplacian_apply(&g, &v).unwrap();
                let asym = (inner(&g, &lu, &v) - inner(&g, &u, &lv)).abs();
                prop_assert!(asym <= 1e-10 * l2_norm(&g, &u) * l2_norm(&g, &v) + 1e-300);
                prop_assert!(-inner(&g, &lu, &u) >= -1e-10 * l2_norm(&g, &u).powi(2));
            }
        }
    }
}
