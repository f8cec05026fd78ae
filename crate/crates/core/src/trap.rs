//! Paul-trap and ion parameters, derived secular frequency, and the
//! fast-kick validity diagnostics.
//!
//! ħ = 1 throughout; a Lamb-Dicke parameter supplied through mass and
//! wavenumber is converted with the SI value of ħ at the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant in J·s, used only when converting (mass, k) to η.
pub const HBAR_SI: f64 = 1.054_571_817e-34;

/// Default threshold on ω_S·τ below which the frozen-secular description is
/// considered valid.
pub const DEFAULT_FAST_SDK_THRESHOLD: f64 = 0.1;

/// RF drive and Mathieu parameters of the trap axis along the kick direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapParams {
    /// RF drive ω_R in rad/s.
    pub omega_rf: f64,
    /// RF phase φ_R in rad.
    pub phi_rf: f64,
    pub a_z: f64,
    pub q_z: f64,
}

impl TrapParams {
    pub fn new(omega_rf: f64, phi_rf: f64, a_z: f64, q_z: f64) -> Result<Self> {
        let trap = Self {
            omega_rf,
            phi_rf,
            a_z,
            q_z,
        };
        trap.validate()?;
        Ok(trap)
    }

    /// a_z + q_z²/2, the quantity whose sign decides stability.
    pub fn stability_parameter(&self) -> f64 {
        self.a_z + 0.5 * self.q_z * self.q_z
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_rf > 0.0) || !self.omega_rf.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "omega_rf must be positive, got {}",
                self.omega_rf
            )));
        }
        let s = self.stability_parameter();
        if s < 0.0 {
            return Err(Error::UnstableTrap(s));
        }
        Ok(())
    }

    pub fn derived(&self) -> Result<DerivedParams> {
        Ok(DerivedParams {
            omega_s: secular_frequency(self)?,
        })
    }
}

/// Secular frequency ω_S = ω_R·sqrt(a_z + q_z²/2)/2.
pub fn secular_frequency(trap: &TrapParams) -> Result<f64> {
    let s = trap.stability_parameter();
    if s < 0.0 {
        return Err(Error::UnstableTrap(s));
    }
    Ok(trap.omega_rf * s.sqrt() / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub omega_s: f64,
}

/// Qubit splitting and Lamb-Dicke parameter of the ion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IonParams {
    /// Qubit splitting ω_a in rad/s.
    pub omega_a: f64,
    pub eta: f64,
    /// Ion mass in kg, when η was derived from it.
    pub mass: Option<f64>,
    /// Wavenumber k in 1/m, when η was derived from it.
    pub k: Option<f64>,
}

/// η = k·sqrt(ħ/(2·m·ω_S)) in SI units.
pub fn lamb_dicke(k: f64, mass: f64, omega_s: f64) -> f64 {
    k * (HBAR_SI / (2.0 * mass * omega_s)).sqrt()
}

impl IonParams {
    pub fn with_eta(omega_a: f64, eta: f64) -> Result<Self> {
        let ion = Self {
            omega_a,
            eta,
            mass: None,
            k: None,
        };
        ion.validate_basic()?;
        Ok(ion)
    }

    /// Derives η from the ion mass and the beam wavenumber at secular
    /// frequency `omega_s`.
    pub fn from_mass_and_k(omega_a: f64, mass: f64, k: f64, omega_s: f64) -> Result<Self> {
        if !(mass > 0.0) || !(k > 0.0) || !(omega_s > 0.0) {
            return Err(Error::InvalidParameter(
                "mass, k and omega_s must be positive to derive eta".into(),
            ));
        }
        let ion = Self {
            omega_a,
            eta: lamb_dicke(k, mass, omega_s),
            mass: Some(mass),
            k: Some(k),
        };
        ion.validate_basic()?;
        Ok(ion)
    }

    fn validate_basic(&self) -> Result<()> {
        if !(self.omega_a > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "omega_a must be positive, got {}",
                self.omega_a
            )));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        Ok(())
    }

    /// Full validation, including consistency of a supplied (mass, k) pair
    /// with η at the given secular frequency.
    pub fn validate(&self, omega_s: f64) -> Result<()> {
        self.validate_basic()?;
        if let (Some(mass), Some(k)) = (self.mass, self.k) {
            let expect = lamb_dicke(k, mass, omega_s);
            if ((self.eta - expect) / expect).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "eta = {} inconsistent with mass and k (expected {expect})",
                    self.eta
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FastSdkReport {
    /// ω_S·τ
    pub secular_phase: f64,
    pub threshold: f64,
    /// true when ω_S·τ < threshold
    pub fast: bool,
    /// ω_R·τ·q_z/4, the term dropped from the micromotion phase
    pub micromotion_correction: f64,
}

/// Checks the fast-kick condition ω_S·τ ≪ 1.
pub fn validate_fast_sdk(trap: &TrapParams, tau: f64, threshold: f64) -> Result<FastSdkReport> {
    let omega_s = secular_frequency(trap)?;
    let secular_phase = omega_s * tau;
    Ok(FastSdkReport {
        secular_phase,
        threshold,
        fast: secular_phase < threshold,
        micromotion_correction: trap.omega_rf * tau * trap.q_z / 4.0,
    })
}
