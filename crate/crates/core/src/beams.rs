//! Two-photon Rabi frequency of a pair of collimated Raman beams along the
//! quantization axis.
//!
//! Single-beam Rabi frequencies Ω₁, Ω₂ already contain the reduced dipole
//! factors and field amplitudes. Differential light shifts are not modelled;
//! diagnostics report the small-light-shift approximation as assumed.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_HIERARCHY_THRESHOLD: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamPair {
    /// Polarization angle β₁ (rad).
    pub beta1: f64,
    /// Polarization angle β₂ (rad).
    pub beta2: f64,
    /// Relative polarization phase Δψ (rad).
    pub dpsi: f64,
    /// Wavevector difference Δk (1/m).
    pub dk: f64,
    /// Raman beat Δω (rad/s); the beat phase is Δφ(t) = Δω·t.
    pub dphi_rate: f64,
    /// Single-photon detuning Δ (rad/s), used only by diagnostics.
    pub detuning: Option<f64>,
}

impl BeamPair {
    /// Counter-propagating beams with orthogonal linear polarizations
    /// (β₁ = −β₂ = π/4, Δψ = 0, Δk = 2k).
    pub fn lin_perp_lin(k: f64, raman_beat: f64, detuning: Option<f64>) -> Result<Self> {
        let pair = Self {
            beta1: FRAC_PI_4,
            beta2: -FRAC_PI_4,
            dpsi: 0.0,
            dk: 2.0 * k,
            dphi_rate: raman_beat,
            detuning,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.detuning {
            if !(d > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "single-photon detuning must be positive, got {d}"
                )));
            }
        }
        Ok(())
    }

    /// Coefficients (cos 2β₁, cos 2β₂) of the momentum-free carrier terms.
    pub fn carrier_weights(&self) -> (f64, f64) {
        ((2.0 * self.beta1).cos(), (2.0 * self.beta2).cos())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterferenceParams {
    pub amp: f64,
    pub gamma: f64,
    pub a_comp: f64,
    pub b_comp: f64,
}

pub fn interference_params(pair: &BeamPair) -> InterferenceParams {
    let (s1, c1) = pair.beta1.sin_cos();
    let (s2, c2) = pair.beta2.sin_cos();
    let (sp, cp) = pair.dpsi.sin_cos();
    let a = s1 * s2 * sp;
    let b = c1 * c2 - s1 * s2 * cp;
    InterferenceParams {
        amp: a.hypot(b),
        gamma: a.atan2(b),
        a_comp: a,
        b_comp: b,
    }
}

/// Ω = Ω₁cos2β₁ + Ω₂cos2β₂ + 2√(Ω₁Ω₂)·A·cos(Δk·z − Δω·t − γ).
pub fn effective_rabi(pair: &BeamPair, omega1: f64, omega2: f64, z: f64, t: f64) -> f64 {
    let ip = interference_params(pair);
    let (w1, w2) = pair.carrier_weights();
    omega1 * w1
        + omega2 * w2
        + 2.0 * (omega1 * omega2).sqrt() * ip.amp * (pair.dk * z - pair.dphi_rate * t - ip.gamma).cos()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioCheck {
    pub ratio: f64,
    pub pass: bool,
}

impl RatioCheck {
    fn new(ratio: f64, threshold: f64) -> Self {
        Self {
            ratio,
            pass: ratio <= threshold,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyReport {
    pub threshold: f64,
    /// Δω/Δ
    pub beat_over_detuning: RatioCheck,
    /// ω_a/Δ
    pub splitting_over_detuning: RatioCheck,
    /// envelope bandwidth/Δ
    pub bandwidth_over_detuning: RatioCheck,
    /// Differential light shifts are dropped, not computed.
    pub small_differential_light_shift_assumed: bool,
    pub pass: bool,
}

/// Checks the frequency hierarchy that justifies the rotating-wave and
/// adiabatic-elimination steps behind the effective two-level drive.
pub fn validate_hierarchy(
    pair: &BeamPair,
    envelope_bandwidth: f64,
    omega_a: f64,
    threshold: f64,
) -> Result<HierarchyReport> {
    let detuning = pair.detuning.ok_or_else(|| {
        Error::InvalidParameter("hierarchy check needs the single-photon detuning".into())
    })?;
    pair.validate()?;
    let beat = RatioCheck::new(pair.dphi_rate.abs() / detuning, threshold);
    let split = RatioCheck::new(omega_a.abs() / detuning, threshold);
    let bw = RatioCheck::new(envelope_bandwidth.abs() / detuning, threshold);
    Ok(HierarchyReport {
        threshold,
        beat_over_detuning: beat,
        splitting_over_detuning: split,
        bandwidth_over_detuning: bw,
        small_differential_light_shift_assumed: true,
        pass: beat.pass && split.pass && bw.pass,
    })
}
