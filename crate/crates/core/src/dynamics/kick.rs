//! Spin ⊗ momentum-kick ladder in the frozen-secular limit.
//!
//! Basis ket |s, n⟩ stands for spin s with the motional coherent state
//! |2·n·i·η⟩; the displacement operators act as exact ladder shifts n → n ± 1.

use num_complex::Complex64 as C64;

use super::{Drive, Hamiltonian, ModelFlags};
use crate::error::{Error, Result};

pub const DEFAULT_KICK_N: usize = 6;
pub const KICK_TRUNCATION_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct KickState {
    n_max: usize,
    coeffs: Vec<C64>,
}

impl KickState {
    /// |0, 0⟩ on a ladder n ∈ [−N, N].
    pub fn ground(n_max: usize) -> Self {
        let mut state = Self {
            n_max,
            coeffs: vec![C64::new(0.0, 0.0); 2 * (2 * n_max + 1)],
        };
        let i = state.index(0, 0);
        state.coeffs[i] = C64::new(1.0, 0.0);
        state
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn index(&self, s: usize, n: i64) -> usize {
        ladder_index(self.n_max, s, n)
    }

    pub fn amp(&self, s: usize, n: i64) -> C64 {
        if n.unsigned_abs() as usize > self.n_max {
            return C64::new(0.0, 0.0);
        }
        self.coeffs[self.index(s, n)]
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn norm_sqr(&self) -> f64 {
        super::integrator::norm_sqr(&self.coeffs)
    }

    /// (s, n) of every basis ket, in storage order.
    pub fn basis(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        let n = self.n_max as i64;
        (0..2).flat_map(move |s| (-n..=n).map(move |k| (s, k)))
    }

    pub fn populations(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Largest amplitude on the outermost rungs |n| = N.
    pub fn edge_amplitude(&self) -> f64 {
        let n = self.n_max as i64;
        [(0, -n), (0, n), (1, -n), (1, n)]
            .iter()
            .map(|&(s, k)| self.amp(s, k).norm())
            .fold(0.0, f64::max)
    }

    pub fn check_truncation(&self, threshold: f64) -> Result<()> {
        let edge = self.edge_amplitude();
        if edge > threshold {
            return Err(Error::KickTruncation {
                amplitude: edge,
                n_max: self.n_max,
            });
        }
        Ok(())
    }

    /// Largest amplitude outside the sector reachable from |0, 0⟩ (spin 1 on
    /// odd rungs, spin 0 on even rungs).
    pub fn parity_violation(&self) -> f64 {
        self.basis()
            .zip(&self.coeffs)
            .filter(|((s, n), _)| (*s as i64 + n).rem_euclid(2) == 1)
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn ladder_index(n_max: usize, s: usize, n: i64) -> usize {
    s * (2 * n_max + 1) + (n + n_max as i64) as usize
}

/// H(t) = (Ω₀(t)/2)[L₊σ₊e^{iω₋t} + L₋σ₋e^{−iω₋t}] plus, optionally, the
/// backward terms rotating at ω₊.
pub struct KickModel<'a> {
    drive: &'a Drive,
    n_max: usize,
    include_backward: bool,
}

impl<'a> KickModel<'a> {
    pub fn new(drive: &'a Drive, n_max: usize, flags: ModelFlags) -> Result<Self> {
        if flags.include_micromotion || !flags.frozen_secular {
            return Err(Error::InvalidParameter(
                "the kick-ladder model needs frozen secular motion and no micromotion".into(),
            ));
        }
        if n_max == 0 {
            return Err(Error::InvalidParameter("kick ladder needs N >= 1".into()));
        }
        Ok(Self {
            drive,
            n_max,
            include_backward: flags.include_backward,
        })
    }
}

impl Hamiltonian for KickModel<'_> {
    fn dim(&self) -> usize {
        2 * (2 * self.n_max + 1)
    }

    fn derivative(&self, t: f64, within: f64, psi: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        let g = 0.5 * self.drive.envelope.value_within(t, within);
        if g == 0.0 {
            return;
        }
        let nm = self.n_max as i64;
        let width = 2 * self.n_max + 1;
        // −i·g·e^{±iωt}
        let fm = C64::from_polar(g, self.drive.omega_minus() * t) * C64::new(0.0, -1.0);
        let fm_c = C64::from_polar(g, -self.drive.omega_minus() * t) * C64::new(0.0, -1.0);
        let (zero, one) = psi.split_at(width);
        let (d0, d1) = out.split_at_mut(width);
        for i in 0..width {
            let n = i as i64 - nm;
            // |0,n⟩ → |1,n+1⟩ and |1,n⟩ → |0,n−1⟩
            if n < nm {
                d1[i + 1] += fm * zero[i];
            }
            if n > -nm {
                d0[i - 1] += fm_c * one[i];
            }
        }
        if self.include_backward {
            let fp = C64::from_polar(g, self.drive.omega_plus() * t) * C64::new(0.0, -1.0);
            let fp_c = C64::from_polar(g, -self.drive.omega_plus() * t) * C64::new(0.0, -1.0);
            for i in 0..width {
                let n = i as i64 - nm;
                // |0,n⟩ → |1,n−1⟩ and |1,n⟩ → |0,n+1⟩
                if n > -nm {
                    d1[i - 1] += fp * zero[i];
                }
                if n < nm {
                    d0[i + 1] += fp_c * one[i];
                }
            }
        }
    }

    fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        self.drive.envelope.breakpoints(t0, t1)
    }

    fn is_idle(&self, t0: f64, t1: f64) -> bool {
        self.drive.envelope.value(0.5 * (t0 + t1)) == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{propagate, Tolerances};
    use crate::envelope::Envelope;
    use std::f64::consts::{PI, TAU};

    const WA: f64 = TAU * 10e9;

    fn run(env: Envelope, dw: f64, n_max: usize, backward: bool) -> KickState {
        let drive = Drive::new(env, WA, dw);
        let flags = ModelFlags {
            include_backward: backward,
            ..ModelFlags::KICK
        };
        let model = KickModel::new(&drive, n_max, flags).unwrap();
        let mut psi = KickState::ground(n_max);
        let (t0, t1) = (drive.envelope.t_start(), drive.envelope.t_end());
        propagate(psi.coeffs_mut(), &model, t0, t1, &Tolerances::default()).unwrap();
        psi
    }

    #[test]
    fn zero_drive_gives_zero_derivative() {
        let drive = Drive::new(Envelope::constant(0.0, 5e-9).unwrap(), WA, WA);
        let model = KickModel::new(&drive, 3, ModelFlags::KICK).unwrap();
        let psi = KickState::ground(3);
        let mut out = vec![C64::new(1.0, 1.0); psi.dim()];
        model.derivative(1e-9, 1e-9, psi.coeffs(), &mut out);
        assert!(out.iter().all(|c| *c == C64::new(0.0, 0.0)));
    }

    #[test]
    fn forward_only_resonant_rabi_flop() {
        // two-level closed form: P(|1,+1⟩) = sin²(θ/2)
        for theta in [PI / 3.0, PI / 2.0, PI] {
            let psi = run(Envelope::constant(theta, 5e-9).unwrap(), WA, 4, false);
            let p = psi.amp(1, 1).norm_sqr();
            assert!((p - (theta / 2.0).sin().powi(2)).abs() < 1e-11, "{theta}: {p}");
        }
    }

    #[test]
    fn norm_parity_and_truncation() {
        let psi = run(Envelope::sine(PI, 5e-9).unwrap(), WA * (1.0 + 5e-5), 6, true);
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-9);
        assert_eq!(psi.parity_violation(), 0.0);
        psi.check_truncation(KICK_TRUNCATION_THRESHOLD).unwrap();
    }

    #[test]
    fn truncation_flagged_on_short_ladder() {
        // a slow, strong drive pushes amplitude to the edge of a 1-rung ladder
        let psi = run(Envelope::constant(PI, 5e-11).unwrap(), WA, 1, true);
        assert!(matches!(
            psi.check_truncation(KICK_TRUNCATION_THRESHOLD),
            Err(Error::KickTruncation { .. })
        ));
    }

    #[test]
    fn model_rejects_unfrozen_flags() {
        let drive = Drive::new(Envelope::constant(PI, 5e-9).unwrap(), WA, WA);
        assert!(KickModel::new(&drive, 6, ModelFlags::FULL).is_err());
    }
}
