//! Kick infidelity: one minus the population of the forward-kicked target.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::fock::coherent_state;
use crate::dynamics::{FockState, KickState};

/// Time at which the secular phase of the coherent target is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetTime {
    /// Area-weighted centre of the envelope, where the kick is delivered.
    #[default]
    Centroid,
    /// End of the pulse.
    End,
}

/// 1 − |c(1, +1)|² on the kick ladder.
pub fn kick_infidelity(state: &KickState) -> f64 {
    (1.0 - state.amp(1, 1).norm_sqr()).max(0.0)
}

/// Coherent amplitude 2iη·e^{iφ} of the kicked motional target.
pub fn target_alpha(eta: f64, secular_phase: f64) -> C64 {
    C64::new(0.0, 2.0 * eta) * C64::from_polar(1.0, secular_phase)
}

/// 1 − |(⟨1| ⊗ ⟨α|)ψ|²
pub fn fock_infidelity(state: &FockState, alpha: C64) -> f64 {
    let target = coherent_state(state.m_max(), alpha);
    let overlap: C64 = target.iter().zip(state.spin(1)).map(|(t, c)| t.conj() * c).sum();
    (1.0 - overlap.norm_sqr()).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_targets_have_zero_infidelity() {
        let mut k = KickState::ground(3);
        let (i0, i1) = (k.index(0, 0), k.index(1, 1));
        k.coeffs_mut()[i0] = C64::new(0.0, 0.0);
        k.coeffs_mut()[i1] = C64::new(0.0, 1.0);
        assert_eq!(kick_infidelity(&k), 0.0);
        assert_eq!(kick_infidelity(&KickState::ground(3)), 1.0);

        let alpha = target_alpha(0.1, 0.3);
        let mut coeffs = vec![C64::new(0.0, 0.0); 40];
        coeffs[20..].copy_from_slice(&coherent_state(20, alpha));
        let f = FockState::from_coeffs(20, coeffs).unwrap();
        assert!(fock_infidelity(&f, alpha) < 1e-15);
        assert_eq!(fock_infidelity(&FockState::ground(20), alpha), 1.0);
    }
}
