//! One kick, end to end: build the model, propagate from the ground state and
//! score the result.

use serde::{Deserialize, Serialize};

use super::fidelity::{fock_infidelity, kick_infidelity, target_alpha, TargetTime};
use crate::dynamics::fock::FOCK_TAIL_THRESHOLD;
use crate::dynamics::gauge::propagate_piecewise_between;
use crate::dynamics::kick::KICK_TRUNCATION_THRESHOLD;
use crate::dynamics::{
    propagate_sampled, Drive, FockModel, FockOps, FockState, KickModel, KickState, ModelFlags,
    PropagationStats, Tolerances,
};
use crate::envelope::Envelope;
use crate::error::{Error, Result};
use crate::trap::{secular_frequency, IonParams, TrapParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Frozen-secular kick ladder.
    Kick,
    /// Truncated Fock space with secular phases and micromotion.
    Fock,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Exact ladder propagation when the envelope allows it, else integrate.
    #[default]
    Auto,
    Integrate,
    /// Exact ladder propagation; kick model with piecewise-constant envelopes only.
    Exact,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdkProblem {
    pub trap: TrapParams,
    pub ion: IonParams,
    pub envelope: Envelope,
    /// Raman beat Δω (rad/s).
    pub dw: f64,
    pub model: ModelKind,
    pub flags: ModelFlags,
    pub n_max: usize,
    pub m_max: usize,
    pub tol: Tolerances,
    pub solver: Solver,
    pub target_time: TargetTime,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdkOutcome {
    pub infidelity: f64,
    pub norm_drift: f64,
    /// Edge amplitude of the kick ladder, or Fock tail mass.
    pub truncation: f64,
    pub secular_frequency: f64,
    pub stats: PropagationStats,
}

/// Populations sampled along a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Series {
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    pub populations: Vec<Vec<f64>>,
    pub envelope: Vec<f64>,
}

enum Final {
    Kick(KickState),
    Fock(FockState),
}

impl SdkProblem {
    pub fn drive(&self) -> Drive {
        Drive::new(self.envelope.clone(), self.ion.omega_a, self.dw)
    }

    pub fn validate(&self) -> Result<()> {
        self.trap.validate()?;
        let omega_s = secular_frequency(&self.trap)?;
        self.ion.validate(omega_s)?;
        self.envelope.validate()?;
        self.tol.validate()?;
        if !(self.dw.is_finite()) {
            return Err(Error::InvalidParameter(format!("raman beat must be finite, got {}", self.dw)));
        }
        match self.model {
            ModelKind::Kick => {
                if self.flags.include_micromotion || !self.flags.frozen_secular {
                    return Err(Error::InvalidParameter(
                        "the kick-ladder model needs frozen_secular = true and include_micromotion = false"
                            .into(),
                    ));
                }
                if self.n_max == 0 {
                    return Err(Error::InvalidParameter("kick ladder needs N >= 1".into()));
                }
            }
            ModelKind::Fock => {
                if self.m_max < 2 {
                    return Err(Error::InvalidParameter("Fock cutoff must be at least 2".into()));
                }
                if self.solver == Solver::Exact {
                    return Err(Error::InvalidParameter(
                        "the exact solver applies to the kick-ladder model only".into(),
                    ));
                }
            }
        }
        if self.solver == Solver::Exact && matches!(self.envelope, Envelope::Sine { .. }) {
            return Err(Error::InvalidParameter(
                "the exact solver needs a piecewise-constant envelope".into(),
            ));
        }
        Ok(())
    }

    /// Copy with a new trap; a Lamb-Dicke parameter derived from mass and k
    /// follows the new secular frequency.
    pub fn with_trap(&self, trap: TrapParams) -> Result<Self> {
        let mut p = self.clone();
        p.trap = trap;
        if let (Some(mass), Some(k)) = (self.ion.mass, self.ion.k) {
            let omega_s = secular_frequency(&trap)?;
            p.ion = IonParams::from_mass_and_k(self.ion.omega_a, mass, k, omega_s)?;
        }
        Ok(p)
    }

    fn use_exact(&self) -> bool {
        match self.solver {
            Solver::Exact => true,
            Solver::Integrate => false,
            Solver::Auto => {
                self.model == ModelKind::Kick && !matches!(self.envelope, Envelope::Sine { .. })
            }
        }
    }

    pub fn time_window(&self) -> (f64, f64) {
        (self.envelope.t_start(), self.envelope.t_end())
    }

    fn target_phase(&self, omega_s: f64) -> f64 {
        if self.flags.frozen_secular {
            return 0.0;
        }
        let t = match self.target_time {
            TargetTime::Centroid => self.envelope.centroid(),
            TargetTime::End => self.envelope.t_end(),
        };
        omega_s * t
    }

    pub fn labels(&self) -> Vec<String> {
        match self.model {
            ModelKind::Kick => KickState::ground(self.n_max)
                .basis()
                .filter(|(s, n)| (*s as i64 + n).rem_euclid(2) == 0)
                .map(|(s, n)| format!("p_{s}_{n:+}"))
                .collect(),
            ModelKind::Fock => vec!["p_spin0".into(), "p_spin1".into(), "p_target".into()],
        }
    }

    pub fn run(&self) -> Result<SdkOutcome> {
        let (t0, t1) = self.time_window();
        self.run_sampled(&[t0, t1], |_, _| {})
    }

    /// Runs while recording populations at `n_samples` evenly spaced times
    /// spanning the pulse.
    pub fn run_series(&self, n_samples: usize) -> Result<(SdkOutcome, Series)> {
        let (t0, t1) = self.time_window();
        let n = n_samples.max(2);
        let times: Vec<f64> = (0..n)
            .map(|k| if k + 1 == n { t1 } else { t0 + (t1 - t0) * k as f64 / (n - 1) as f64 })
            .collect();
        let mut series = Series {
            labels: self.labels(),
            ..Series::default()
        };
        let omega_s = secular_frequency(&self.trap)?;
        let alpha = target_alpha(self.ion.eta, self.target_phase(omega_s));
        let parity: Vec<bool> = KickState::ground(self.n_max)
            .basis()
            .map(|(s, n)| (s as i64 + n).rem_euclid(2) == 0)
            .collect();
        let outcome = self.run_sampled(&times, |t, state| {
            let row = match state {
                Final::Kick(k) => k
                    .populations()
                    .into_iter()
                    .zip(&parity)
                    .filter(|(_, keep)| **keep)
                    .map(|(p, _)| p)
                    .collect(),
                Final::Fock(f) => vec![
                    f.spin_population(0),
                    f.spin_population(1),
                    1.0 - fock_infidelity(f, alpha),
                ],
            };
            series.times.push(t);
            series.populations.push(row);
            series.envelope.push(self.envelope.value(t));
        })?;
        Ok((outcome, series))
    }

    fn run_sampled<F: FnMut(f64, &Final)>(&self, times: &[f64], mut observe: F) -> Result<SdkOutcome> {
        self.validate()?;
        let drive = self.drive();
        let omega_s = secular_frequency(&self.trap)?;
        match self.model {
            ModelKind::Kick => {
                let mut state = KickState::ground(self.n_max);
                let norm0 = state.norm_sqr();
                let mut stats = PropagationStats::default();
                if self.use_exact() {
                    observe(times[0], &Final::Kick(state.clone()));
                    for w in times.windows(2) {
                        propagate_piecewise_between(&mut state, &drive, self.flags.include_backward, w[0], w[1])?;
                        observe(w[1], &Final::Kick(state.clone()));
                    }
                } else {
                    let model = KickModel::new(&drive, self.n_max, self.flags)?;
                    let n_max = self.n_max;
                    stats = propagate_sampled(state.coeffs_mut(), &model, times, &self.tol, |t, c| {
                        let mut s = KickState::ground(n_max);
                        s.coeffs_mut().copy_from_slice(c);
                        observe(t, &Final::Kick(s));
                    })?;
                }
                stats.norm_drift = (state.norm_sqr() - norm0).abs();
                state.check_truncation(KICK_TRUNCATION_THRESHOLD)?;
                Ok(SdkOutcome {
                    infidelity: kick_infidelity(&state),
                    norm_drift: stats.norm_drift,
                    truncation: state.edge_amplitude(),
                    secular_frequency: omega_s,
                    stats,
                })
            }
            ModelKind::Fock => {
                let ops = FockOps::new(self.m_max, self.ion.eta)?;
                let model = FockModel::new(&drive, &ops, &self.trap, self.flags)?;
                let mut state = FockState::ground(self.m_max);
                let m = self.m_max;
                let stats = propagate_sampled(state.coeffs_mut(), &model, times, &self.tol, |t, c| {
                    if let Ok(s) = FockState::from_coeffs(m, c.to_vec()) {
                        observe(t, &Final::Fock(s));
                    }
                })?;
                state.check_cutoff(FOCK_TAIL_THRESHOLD)?;
                let alpha = target_alpha(self.ion.eta, self.target_phase(omega_s));
                Ok(SdkOutcome {
                    infidelity: fock_infidelity(&state, alpha),
                    norm_drift: stats.norm_drift,
                    truncation: state.tail_mass(),
                    secular_frequency: omega_s,
                    stats,
                })
            }
        }
    }
}
