//! Randomized invariants across module boundaries.

use cascade_core::discretization::{l2_norm, Grid};
use cascade_core::parabolic::solve_parabolic;
use cascade_core::specfun::{kummer_m, phi_eval, PhiParams};
use cascade_core::weights::{build_a, psi_eval, DampingProfile, OffsetChoice};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kummer_diagonal_is_exponential(b in 0.05f64..5.0, s in 0.0f64..40.0) {
        let m = kummer_m(b, b, s).unwrap();
        prop_assert!((m / s.exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phi_is_positive_and_decreasing(gamma in 0.1f64..0.9, frac in 0.0f64..0.99, s in 0.0f64..30.0) {
        let p = PhiParams::new(frac * gamma, gamma).unwrap();
        let v = phi_eval(p, s).unwrap();
        let w = phi_eval(p, s + 0.1).unwrap();
        prop_assert!(v.phi > 0.0);
        prop_assert!(w.phi <= v.phi * (1.0 + 1e-12));
    }

    #[test]
    fn psi_is_at_least_one_and_grows_in_r(r in 0.0f64..30.0, t in 0.0f64..100.0) {
        let profile = DampingProfile::smooth_power(1.0, 0.5, 3).unwrap();
        let w = build_a(profile, 0.1, 10.0, 40.0, OffsetChoice::Auto).unwrap();
        let here = psi_eval(&w, r, t);
        prop_assert!(here >= 1.0 - 1e-12);
        prop_assert!(psi_eval(&w, r + 1.0, t) >= here);
    }

    #[test]
    fn heat_flow_never_increases_the_norm(
        amps in prop::collection::vec(-1.0f64..1.0, 4),
        a0 in 0.5f64..3.0,
    ) {
        let g = Grid::line(0.0, std::f64::consts::PI, std::f64::consts::PI / 60.0).unwrap();
        let p = DampingProfile::constant(a0, 1).unwrap();
        let v0 = g.sample(|x| amps.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * x).sin()).sum());
        let traj = solve_parabolic(&g, &p, &v0, None, 2.0, 0.05).unwrap();
        let norms = traj.l2_trace(&g);
        prop_assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-15));
        prop_assert!((norms[0] - l2_norm(&g, &v0)).abs() < 1e-12);
    }
}
