//! Exact propagation of the kick ladder under a constant drive amplitude.
//!
//! With χ(s, n) = −s·ω_a + n·Δω and V(t) = diag(e^{iχt}), the rotated
//! amplitudes φ = Vψ obey i·dφ/dt = Mφ with the time-independent real
//! symmetric M = diag(s·ω_a − n·Δω) + g·(ladder couplings). Hence
//! ψ(t1) = V(t1)⁻¹·exp(−iM(t1 − t0))·V(t0)·ψ(t0).

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::kick::KickState;
use super::Drive;
use crate::envelope::Envelope;
use crate::error::{Error, Result};

pub struct LadderSolver {
    chi: Vec<f64>,
    eig: SymmetricEigen<f64, nalgebra::Dyn>,
}

/// Whether |s1, n1⟩ and |s2, n2⟩ are coupled by a forward (or, when
/// requested, backward) kick.
fn coupled(a: (usize, i64), b: (usize, i64), backward: bool) -> bool {
    // rung of the spin-0 ket, rung of the spin-1 ket
    let (n0, n1) = match (a.0, b.0) {
        (0, 1) => (a.1, b.1),
        (1, 0) => (b.1, a.1),
        _ => return false,
    };
    n1 == n0 + 1 || (backward && n1 == n0 - 1)
}

impl LadderSolver {
    /// Solver over the listed basis kets with coupling g = Ω₀/2.
    pub fn new(states: &[(usize, i64)], g: f64, omega_a: f64, dw: f64, backward: bool) -> Self {
        let d = states.len();
        let mut m = DMatrix::<f64>::zeros(d, d);
        for (i, &(s, n)) in states.iter().enumerate() {
            m[(i, i)] = s as f64 * omega_a - n as f64 * dw;
            for (j, &other) in states.iter().enumerate().skip(i + 1) {
                if coupled((s, n), other, backward) {
                    m[(i, j)] = g;
                    m[(j, i)] = g;
                }
            }
        }
        let chi = states
            .iter()
            .map(|&(s, n)| -(s as f64) * omega_a + n as f64 * dw)
            .collect();
        Self {
            chi,
            eig: SymmetricEigen::new(m),
        }
    }

    pub fn dim(&self) -> usize {
        self.chi.len()
    }

    /// Evolves `psi` (in solver basis order) from `t0` to `t1`.
    pub fn evolve(&self, psi: &mut [C64], t0: f64, t1: f64) {
        let q = &self.eig.eigenvectors;
        let d = self.dim();
        // coordinates in the eigenbasis of V(t0)ψ
        let rotated: Vec<C64> = psi
            .iter()
            .zip(&self.chi)
            .map(|(c, x)| c * C64::from_polar(1.0, x * t0))
            .collect();
        let mut coords = vec![C64::new(0.0, 0.0); d];
        for (k, c) in coords.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..d {
                acc += rotated[i] * q[(i, k)];
            }
            *c = acc * C64::from_polar(1.0, -self.eig.eigenvalues[k] * (t1 - t0));
        }
        for i in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for (k, c) in coords.iter().enumerate() {
                acc += c * q[(i, k)];
            }
            psi[i] = acc * C64::from_polar(1.0, -self.chi[i] * t1);
        }
    }
}

const THREE: [(usize, i64); 3] = [(0, 0), (1, 1), (1, -1)];
const FIVE: [(usize, i64); 5] = [(0, 0), (1, 1), (1, -1), (0, 2), (0, -2)];

fn solve_from_ground<const D: usize>(
    states: &[(usize, i64); D],
    g0: f64,
    omega_a: f64,
    dw: f64,
    t: f64,
) -> [C64; D] {
    let mut psi = [C64::new(0.0, 0.0); D];
    psi[0] = C64::new(1.0, 0.0);
    LadderSolver::new(states, g0, omega_a, dw, true).evolve(&mut psi, 0.0, t);
    psi
}

/// Amplitudes of (|0,0⟩, |1,+2iη⟩, |1,−2iη⟩) at time t for a constant
/// coupling g₀ switched on at t = 0 from |0,0⟩.
pub fn gauge_solver_3(g0: f64, omega_a: f64, dw: f64, t: f64) -> [C64; 3] {
    solve_from_ground(&THREE, g0, omega_a, dw, t)
}

/// As [`gauge_solver_3`], adding |0,+4iη⟩ and |0,−4iη⟩.
pub fn gauge_solver_5(g0: f64, omega_a: f64, dw: f64, t: f64) -> [C64; 5] {
    solve_from_ground(&FIVE, g0, omega_a, dw, t)
}

/// Propagates a kick-ladder state through a piecewise-constant envelope
/// (constant pulse or pulse train) without numerical integration.
pub fn propagate_piecewise(state: &mut KickState, drive: &Drive, backward: bool) -> Result<()> {
    let (t0, t1) = (drive.envelope.t_start(), drive.envelope.t_end());
    propagate_piecewise_between(state, drive, backward, t0, t1)
}

/// As [`propagate_piecewise`], restricted to the window [t0, t1].
pub fn propagate_piecewise_between(
    state: &mut KickState,
    drive: &Drive,
    backward: bool,
    t0: f64,
    t1: f64,
) -> Result<()> {
    if matches!(drive.envelope, Envelope::Sine { .. }) {
        return Err(Error::InvalidParameter(
            "exact ladder propagation needs a piecewise-constant envelope".into(),
        ));
    }
    let states: Vec<(usize, i64)> = state.basis().collect();
    for (a, b) in drive.envelope.active_intervals() {
        let (lo, hi) = (a.max(t0), b.min(t1));
        if hi <= lo {
            continue;
        }
        let amp = drive.envelope.value(0.5 * (a + b));
        let solver = LadderSolver::new(&states, 0.5 * amp, drive.omega_a, drive.dw, backward);
        solver.evolve(state.coeffs_mut(), lo, hi);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{propagate, KickModel, ModelFlags, Tolerances};
    use std::f64::consts::{PI, TAU};

    const WA: f64 = TAU * 10e9;
    const TAU_P: f64 = 5e-9;

    #[test]
    fn zero_coupling_stays_in_ground() {
        for t in [0.0, 1e-9, 3.7e-9] {
            let a = gauge_solver_3(0.0, WA, WA, t);
            assert!((a[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
            assert!(a[1].norm() == 0.0 && a[2].norm() == 0.0);
            let b = gauge_solver_5(0.0, WA, WA, t);
            assert!((b[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
            assert!(b[1..].iter().all(|c| c.norm() == 0.0));
        }
    }

    #[test]
    fn constant_kick_manifolds() {
        let g0 = PI / (2.0 * TAU_P);
        let five = gauge_solver_5(g0, WA, WA, TAU_P);
        let infidelity = 1.0 - five[1].norm_sqr();
        assert!((infidelity - 1.9e-5).abs() < 0.2 * 1.9e-5, "{infidelity}");
        // the three-level manifold misses the |0,±4iη⟩ leakage
        let three = gauge_solver_3(g0, WA, WA, TAU_P);
        let partial = 1.0 - three[1].norm_sqr();
        assert!(partial > 0.3 * infidelity && partial < infidelity, "{partial}");
    }

    #[test]
    fn unitarity() {
        let g0 = PI / (2.0 * TAU_P);
        for k in 0..10 {
            let t = TAU_P * (0.37 + 0.61 * k as f64) / 3.0;
            let n3: f64 = gauge_solver_3(g0, WA, 0.9 * WA, t).iter().map(|c| c.norm_sqr()).sum();
            let n5: f64 = gauge_solver_5(g0, WA, 0.9 * WA, t).iter().map(|c| c.norm_sqr()).sum();
            assert!((n3 - 1.0).abs() < 1e-12 && (n5 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn three_and_five_level_agree() {
        let g0 = PI / (2.0 * TAU_P);
        let mut worst: f64 = 0.0;
        for k in 0..=50 {
            let t = TAU_P * k as f64 / 50.0;
            let a = gauge_solver_3(g0, WA, WA, t);
            let b = gauge_solver_5(g0, WA, WA, t);
            for i in 0..3 {
                worst = worst.max((a[i].norm_sqr() - b[i].norm_sqr()).abs());
            }
            // outer rungs stay at O(g₀²/ω_a²)
            assert!(b[3].norm_sqr() < 4.0 * (g0 / WA).powi(2) && b[4].norm_sqr() < 4.0 * (g0 / WA).powi(2));
        }
        assert!(worst < 1e-4, "{worst}");
    }

    /// Truncated Hamiltonian on the 3- or 5-level subspace, for residual checks.
    fn apply_h(states: &[(usize, i64)], g: f64, dw: f64, t: f64, psi: &[C64]) -> Vec<C64> {
        let (wm, wp) = (WA - dw, WA + dw);
        let mut out = vec![C64::new(0.0, 0.0); psi.len()];
        for (i, &(si, ni)) in states.iter().enumerate() {
            for (j, &(sj, nj)) in states.iter().enumerate() {
                let h = match (si, sj) {
                    (1, 0) if ni == nj + 1 => C64::from_polar(g, wm * t),
                    (1, 0) if ni == nj - 1 => C64::from_polar(g, wp * t),
                    (0, 1) if nj == ni + 1 => C64::from_polar(g, -wm * t),
                    (0, 1) if nj == ni - 1 => C64::from_polar(g, -wp * t),
                    _ => continue,
                };
                out[i] += h * psi[j];
            }
        }
        out
    }

    #[test]
    fn amplitudes_satisfy_schroedinger_equation() {
        let g0 = PI / (2.0 * TAU_P);
        let dw = WA * (1.0 + 3e-3);
        let h = 1e-15;
        for k in 1..8 {
            let t = TAU_P * k as f64 / 8.0;
            let fd3: Vec<C64> = {
                let (p, m) = (gauge_solver_3(g0, WA, dw, t + h), gauge_solver_3(g0, WA, dw, t - h));
                p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect()
            };
            let rhs = apply_h(&THREE, g0, dw, t, &gauge_solver_3(g0, WA, dw, t));
            for (d, r) in fd3.iter().zip(&rhs) {
                assert!((d * C64::new(0.0, 1.0) - r).norm() < 1e-6 * g0);
            }
            let fd5: Vec<C64> = {
                let (p, m) = (gauge_solver_5(g0, WA, dw, t + h), gauge_solver_5(g0, WA, dw, t - h));
                p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect()
            };
            let rhs = apply_h(&FIVE, g0, dw, t, &gauge_solver_5(g0, WA, dw, t));
            for (d, r) in fd5.iter().zip(&rhs) {
                assert!((d * C64::new(0.0, 1.0) - r).norm() < 1e-6 * g0);
            }
        }
    }

    #[test]
    fn piecewise_matches_integrator_on_pulse_train() {
        let env = crate::envelope::sine_sampled_train(PI, 10, 10e-12, TAU * 1.946e9).unwrap();
        let drive = Drive::new(env, WA, 0.027 * WA);
        let mut exact = KickState::ground(4);
        propagate_piecewise(&mut exact, &drive, true).unwrap();
        let model = KickModel::new(&drive, 4, ModelFlags::KICK).unwrap();
        let mut num = KickState::ground(4);
        let (t0, t1) = (drive.envelope.t_start(), drive.envelope.t_end());
        propagate(num.coeffs_mut(), &model, t0, t1, &Tolerances::default()).unwrap();
        for (a, b) in exact.coeffs().iter().zip(num.coeffs()) {
            assert!((a - b).norm() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn piecewise_rejects_sine() {
        let drive = Drive::new(Envelope::sine(PI, TAU_P).unwrap(), WA, WA);
        assert!(propagate_piecewise(&mut KickState::ground(2), &drive, true).is_err());
    }
}
