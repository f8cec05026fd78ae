//! Closed-form error bound and micromotion phase-matching condition.

use std::f64::consts::{PI, TAU};

/// Backward-kick error bound [θ/(2ω_aτ)]² for a resonant constant pulse.
pub fn backward_bound(theta: f64, omega_a: f64, tau: f64) -> f64 {
    (theta / (2.0 * omega_a * tau)).powi(2)
}

/// RF phase that nulls the micromotion phase of a kick on [t0, t0 + τ]:
/// φ_R = (2n + 1)π/2 − ω_R(t0 + τ/2), wrapped to [0, 2π).
pub fn phase_match_phi(omega_rf: f64, t0: f64, tau: f64, n: i64) -> f64 {
    ((2 * n + 1) as f64 * PI / 2.0 - omega_rf * (t0 + 0.5 * tau)).rem_euclid(TAU)
}

/// The two phase-matched φ_R in [0, 2π) for each RF frequency.
pub fn analytic_loci(omega_rf: &[f64], t0: f64, tau: f64) -> Vec<(f64, [f64; 2])> {
    omega_rf
        .iter()
        .map(|&w| {
            let mut phis = [phase_match_phi(w, t0, tau, 0), phase_match_phi(w, t0, tau, 1)];
            phis.sort_by(f64::total_cmp);
            (w, phis)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_examples() {
        let b = backward_bound(PI, TAU * 10e9, 5e-9);
        assert!((b - 2.5e-5).abs() < 1e-15);
        assert_eq!(backward_bound(0.0, TAU * 10e9, 5e-9), 0.0);
        let q = backward_bound(PI, TAU * 10e9, 10e-9);
        assert!((q / b - 0.25).abs() < 1e-14);
    }

    #[test]
    fn phase_match_examples() {
        let tau = 5e-9;
        let w = TAU * 33.64e6;
        assert!((phase_match_phi(w, -tau / 2.0, tau, 0) - PI / 2.0).abs() < 1e-15);
        assert!((phase_match_phi(w, 0.0, tau, 0) / TAU - 0.166).abs() < 5e-4);
        let (a, b) = (phase_match_phi(w, 0.0, tau, 0), phase_match_phi(w, 0.0, tau, 1));
        assert!(((b - a).rem_euclid(TAU) - PI).abs() < 1e-12);
        let loci = analytic_loci(&[w], 0.0, tau);
        assert!((loci[0].1[1] - loci[0].1[0] - PI).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn wrapped_into_one_period(w in 1e6f64..1e9, t0 in -1e-8f64..1e-8, n in -5i64..5) {
            let p = phase_match_phi(w, t0, 5e-9, n);
            proptest::prop_assert!((0.0..TAU).contains(&p));
        }
    }
}
