//! Hamiltonians and propagators for a single Raman kick.

pub mod fock;
pub mod gauge;
pub mod integrator;
pub mod kick;
pub mod micromotion;

use serde::{Deserialize, Serialize};

pub use fock::{FockModel, FockOps, FockState};
pub use gauge::{gauge_solver_3, gauge_solver_5, LadderSolver};
pub use integrator::{propagate, propagate_sampled, Hamiltonian, PropagationStats, Tolerances};
pub use kick::{KickModel, KickState};
pub use micromotion::{micromotion_phase, micromotion_phase_exact, micromotion_propagator};

/// Which terms of the interaction-picture Hamiltonian are kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFlags {
    pub include_micromotion: bool,
    /// Counter-rotating kick at ω_a + Δω.
    pub include_backward: bool,
    /// Drop the secular phase e^{±iω_S t} from every operator.
    pub frozen_secular: bool,
}

impl ModelFlags {
    /// Everything on: the full Fock-space model.
    pub const FULL: ModelFlags = ModelFlags {
        include_micromotion: true,
        include_backward: true,
        frozen_secular: false,
    };

    /// Frozen secular motion without micromotion: the kick-ladder model.
    pub const KICK: ModelFlags = ModelFlags {
        include_micromotion: false,
        include_backward: true,
        frozen_secular: true,
    };
}

impl Default for ModelFlags {
    fn default() -> Self {
        Self::FULL
    }
}

/// Raman drive: envelope plus the two frequencies that set its phases.
#[derive(Clone, Debug, PartialEq)]
pub struct Drive {
    pub envelope: crate::envelope::Envelope,
    /// Qubit splitting ω_a (rad/s).
    pub omega_a: f64,
    /// Raman beat Δω (rad/s).
    pub dw: f64,
}

impl Drive {
    pub fn new(envelope: crate::envelope::Envelope, omega_a: f64, dw: f64) -> Self {
        Self {
            envelope,
            omega_a,
            dw,
        }
    }

    /// ω₋ = ω_a − Δω, the detuning of the forward kick.
    pub fn omega_minus(&self) -> f64 {
        self.omega_a - self.dw
    }

    /// ω₊ = ω_a + Δω, the detuning of the backward kick.
    pub fn omega_plus(&self) -> f64 {
        self.omega_a + self.dw
    }
}
