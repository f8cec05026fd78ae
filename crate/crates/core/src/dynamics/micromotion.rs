//! Micromotion accumulated over a kick in the frozen-secular limit.
//!
//! With the secular phase frozen the micromotion term is proportional to the
//! fixed operator (a + a†)², so its time-ordered exponential is the plain
//! exponential of the integrated coefficient.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::fock::{position_squared, FockState, FOCK_TAIL_THRESHOLD};
use crate::error::{Error, Result};
use crate::trap::{secular_frequency, TrapParams};

/// θ_mm = 2·cos(ω_R t0 + φ_R + ω_R τ/2)·sin(ω_R τ/2).
pub fn micromotion_phase(trap: &TrapParams, t0: f64, tau: f64) -> f64 {
    let w = trap.omega_rf;
    2.0 * (w * t0 + trap.phi_rf + 0.5 * w * tau).cos() * (0.5 * w * tau).sin()
}

/// θ_mm including the static −q_z²/2 part of the drive:
/// sin(ω_R(t0 + τ) + φ_R) − sin(ω_R t0 + φ_R) − ω_R τ q_z/4.
pub fn micromotion_phase_exact(trap: &TrapParams, t0: f64, tau: f64) -> f64 {
    let w = trap.omega_rf;
    (w * (t0 + tau) + trap.phi_rf).sin() - (w * t0 + trap.phi_rf).sin() - w * tau * trap.q_z / 4.0
}

/// Spin-diagonal motional propagator
/// U = exp[−i·(ω_R²/16ω_S)·(a + a†)²·(2q_z/ω_R)·θ_mm].
#[derive(Clone, Debug)]
pub struct MicromotionPropagator {
    matrix: DMatrix<C64>,
}

impl MicromotionPropagator {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Applies U to both spin components and checks the Fock cutoff.
    pub fn apply(&self, state: &mut FockState) -> Result<()> {
        let m = self.matrix.nrows();
        if state.m_max() != m {
            return Err(Error::InvalidParameter(format!(
                "propagator on {m} levels applied to a state with {}",
                state.m_max()
            )));
        }
        for s in 0..2 {
            let v = nalgebra::DVector::from_column_slice(state.spin(s));
            let w = &self.matrix * v;
            state.spin_mut(s).copy_from_slice(w.as_slice());
        }
        state.check_cutoff(FOCK_TAIL_THRESHOLD)
    }
}

pub fn micromotion_propagator(trap: &TrapParams, m_max: usize, theta_mm: f64) -> Result<MicromotionPropagator> {
    let omega_s = secular_frequency(trap)?;
    let kappa = if trap.q_z == 0.0 || omega_s == 0.0 {
        0.0
    } else {
        trap.omega_rf * trap.omega_rf / (16.0 * omega_s) * (2.0 * trap.q_z / trap.omega_rf) * theta_mm
    };
    let eig = SymmetricEigen::new(position_squared(m_max));
    let q = eig.eigenvectors.map(|v| C64::new(v, 0.0));
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, -kappa * l)));
    Ok(MicromotionPropagator {
        matrix: &q * d * q.transpose(),
    })
}
