//! Rabi-frequency envelopes Ω₀(t) with closed-form pulse areas.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    /// Ω₀ = θ/τ on [t_start, t_start + τ].
    Constant { theta: f64, tau: f64, t_start: f64 },
    /// Ω₀ = (πθ/2τ)·sin(π(t − t_start)/τ) on [t_start, t_start + τ].
    Sine { theta: f64, tau: f64, t_start: f64 },
    /// Rectangular sub-pulses of height `amps[j]`, centred at
    /// t_start + (j + ½)·2π/rep_rate.
    PulseTrain {
        amps: Vec<f64>,
        width: f64,
        rep_rate: f64,
        t_start: f64,
    },
}

fn check_duration(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "pulse duration must be positive, got {tau}"
        )));
    }
    Ok(())
}

impl Envelope {
    pub fn constant(theta: f64, tau: f64) -> Result<Self> {
        check_duration(tau)?;
        Ok(Envelope::Constant {
            theta,
            tau,
            t_start: 0.0,
        })
    }

    pub fn sine(theta: f64, tau: f64) -> Result<Self> {
        check_duration(tau)?;
        Ok(Envelope::Sine {
            theta,
            tau,
            t_start: 0.0,
        })
    }

    pub fn pulse_train(amps: Vec<f64>, width: f64, rep_rate: f64) -> Result<Self> {
        let env = Envelope::PulseTrain {
            amps,
            width,
            rep_rate,
            t_start: 0.0,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Envelope::Constant { tau, .. } | Envelope::Sine { tau, .. } => check_duration(*tau),
            Envelope::PulseTrain {
                amps,
                width,
                rep_rate,
                ..
            } => {
                if amps.is_empty() {
                    return Err(Error::InvalidParameter("pulse train needs at least one pulse".into()));
                }
                if !(*width > 0.0) || !(*rep_rate > 0.0) {
                    return Err(Error::InvalidParameter(
                        "pulse width and repetition rate must be positive".into(),
                    ));
                }
                let spacing = TAU / rep_rate;
                if *width > spacing {
                    return Err(Error::PulseOverlap {
                        width: *width,
                        spacing,
                    });
                }
                Ok(())
            }
        }
    }

    pub fn with_t_start(mut self, t0: f64) -> Self {
        match &mut self {
            Envelope::Constant { t_start, .. }
            | Envelope::Sine { t_start, .. }
            | Envelope::PulseTrain { t_start, .. } => *t_start = t0,
        }
        self
    }

    pub fn t_start(&self) -> f64 {
        match self {
            Envelope::Constant { t_start, .. }
            | Envelope::Sine { t_start, .. }
            | Envelope::PulseTrain { t_start, .. } => *t_start,
        }
    }

    pub fn duration(&self) -> f64 {
        match self {
            Envelope::Constant { tau, .. } | Envelope::Sine { tau, .. } => *tau,
            Envelope::PulseTrain { amps, rep_rate, .. } => amps.len() as f64 * TAU / rep_rate,
        }
    }

    pub fn t_end(&self) -> f64 {
        self.t_start() + self.duration()
    }

    fn pulse_center(t_start: f64, rep_rate: f64, j: usize) -> f64 {
        t_start + (j as f64 + 0.5) * TAU / rep_rate
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Envelope::Constant { theta, tau, t_start } => {
                if t < *t_start || t > t_start + tau {
                    0.0
                } else {
                    theta / tau
                }
            }
            Envelope::Sine { theta, tau, t_start } => {
                let u = (t - t_start) / tau;
                if !(0.0..=1.0).contains(&u) {
                    return 0.0;
                }
                // folded so both edges evaluate to exactly zero
                PI * theta / (2.0 * tau) * (PI * u.min(1.0 - u)).sin()
            }
            Envelope::PulseTrain {
                amps,
                width,
                rep_rate,
                t_start,
            } => {
                let spacing = TAU / rep_rate;
                let j = ((t - t_start) / spacing).floor();
                if j < -1.0 || j > amps.len() as f64 {
                    return 0.0;
                }
                let half = 0.5 * width;
                let j0 = j.max(0.0) as usize;
                for k in [j0.saturating_sub(1), j0, j0 + 1] {
                    if k < amps.len() {
                        let c = Self::pulse_center(*t_start, *rep_rate, k);
                        if (t - c).abs() <= half {
                            return amps[k];
                        }
                    }
                }
                0.0
            }
        }
    }

    /// Value at `t` on the smooth piece that contains `within`, so that a
    /// rectangular edge evaluates to the level of the side being integrated.
    pub fn value_within(&self, t: f64, within: f64) -> f64 {
        match self {
            Envelope::Sine { .. } => self.value(t),
            Envelope::Constant { .. } | Envelope::PulseTrain { .. } => self.value(within),
        }
    }

    /// ∫Ω₀(t)dt in closed form.
    pub fn area(&self) -> f64 {
        match self {
            Envelope::Constant { theta, .. } | Envelope::Sine { theta, .. } => *theta,
            Envelope::PulseTrain { amps, width, .. } => width * amps.iter().sum::<f64>(),
        }
    }

    /// Area-weighted mean time ∫tΩ₀dt / ∫Ω₀dt; the pulse midpoint when the
    /// area vanishes.
    pub fn centroid(&self) -> f64 {
        match self {
            Envelope::Constant { tau, t_start, .. } | Envelope::Sine { tau, t_start, .. } => {
                t_start + 0.5 * tau
            }
            Envelope::PulseTrain {
                amps,
                rep_rate,
                t_start,
                ..
            } => {
                let total: f64 = amps.iter().sum();
                if total == 0.0 {
                    return self.t_start() + 0.5 * self.duration();
                }
                amps.iter()
                    .enumerate()
                    .map(|(j, a)| a * Self::pulse_center(*t_start, *rep_rate, j))
                    .sum::<f64>()
                    / total
            }
        }
    }

    pub fn peak(&self) -> f64 {
        match self {
            Envelope::Constant { theta, tau, .. } => (theta / tau).abs(),
            Envelope::Sine { theta, tau, .. } => (PI * theta / (2.0 * tau)).abs(),
            Envelope::PulseTrain { amps, .. } => amps.iter().fold(0.0, |m, a| f64::max(m, a.abs())),
        }
    }

    /// Characteristic spectral width of the envelope, 2π over its shortest
    /// feature.
    pub fn bandwidth(&self) -> f64 {
        match self {
            Envelope::Constant { tau, .. } | Envelope::Sine { tau, .. } => TAU / tau,
            Envelope::PulseTrain { width, .. } => TAU / width,
        }
    }

    /// Times in [t0, t1] where the envelope or its derivative is
    /// discontinuous, always including both ends.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut pts = vec![t0];
        let mut push = |t: f64| {
            if t > t0 && t < t1 {
                pts.push(t);
            }
        };
        match self {
            Envelope::Constant { tau, t_start, .. } | Envelope::Sine { tau, t_start, .. } => {
                push(*t_start);
                push(t_start + tau);
            }
            Envelope::PulseTrain {
                amps,
                width,
                rep_rate,
                t_start,
            } => {
                for j in 0..amps.len() {
                    let c = Self::pulse_center(*t_start, *rep_rate, j);
                    push(c - 0.5 * width);
                    push(c + 0.5 * width);
                }
            }
        }
        pts.push(t1);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Intervals on which the envelope is nonzero.
    pub fn active_intervals(&self) -> Vec<(f64, f64)> {
        match self {
            Envelope::Constant { theta, tau, t_start } | Envelope::Sine { theta, tau, t_start } => {
                if *theta == 0.0 {
                    vec![]
                } else {
                    vec![(*t_start, t_start + tau)]
                }
            }
            Envelope::PulseTrain {
                amps,
                width,
                rep_rate,
                t_start,
            } => amps
                .iter()
                .enumerate()
                .filter(|(_, a)| **a != 0.0)
                .map(|(j, _)| {
                    let c = Self::pulse_center(*t_start, *rep_rate, j);
                    (c - 0.5 * width, c + 0.5 * width)
                })
                .collect(),
        }
    }

    /// Copy with every amplitude multiplied by `factor` (area scales with it).
    pub fn scaled(&self, factor: f64) -> Self {
        let mut env = self.clone();
        match &mut env {
            Envelope::Constant { theta, .. } | Envelope::Sine { theta, .. } => *theta *= factor,
            Envelope::PulseTrain { amps, .. } => amps.iter_mut().for_each(|a| *a *= factor),
        }
        env
    }

    /// Copy of a pulse train with new amplitudes.
    pub fn with_amps(&self, new_amps: &[f64]) -> Result<Self> {
        match self {
            Envelope::PulseTrain {
                amps,
                width,
                rep_rate,
                t_start,
            } => {
                if new_amps.len() != amps.len() {
                    return Err(Error::InvalidParameter(format!(
                        "expected {} amplitudes, got {}",
                        amps.len(),
                        new_amps.len()
                    )));
                }
                Ok(Envelope::PulseTrain {
                    amps: new_amps.to_vec(),
                    width: *width,
                    rep_rate: *rep_rate,
                    t_start: *t_start,
                })
            }
            _ => Err(Error::InvalidParameter(
                "only pulse trains carry free amplitudes".into(),
            )),
        }
    }

    pub fn with_rep_rate(&self, new_rate: f64) -> Result<Self> {
        match self {
            Envelope::PulseTrain {
                amps,
                width,
                t_start,
                ..
            } => {
                let env = Envelope::PulseTrain {
                    amps: amps.clone(),
                    width: *width,
                    rep_rate: new_rate,
                    t_start: *t_start,
                };
                env.validate()?;
                Ok(env)
            }
            _ => Err(Error::InvalidParameter(
                "only pulse trains have a repetition rate".into(),
            )),
        }
    }
}

/// Pulse train whose amplitudes sample sin(π(j + ½)/n), rescaled to total
/// area `theta`.
pub fn sine_sampled_train(theta: f64, n: usize, width: f64, rep_rate: f64) -> Result<Envelope> {
    if n == 0 {
        return Err(Error::InvalidParameter("pulse train needs n >= 1".into()));
    }
    let weights: Vec<f64> = (0..n)
        .map(|j| (PI * (j as f64 + 0.5) / n as f64).sin())
        .collect();
    let total: f64 = weights.iter().sum();
    let scale = theta / (width * total);
    Envelope::pulse_train(weights.iter().map(|w| w * scale).collect(), width, rep_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // composite Gauss-Legendre (5-point) between breakpoints
    fn quadrature(env: &Envelope) -> f64 {
        const X: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let bp = env.breakpoints(env.t_start() - 1e-9, env.t_end() + 1e-9);
        let mut total = 0.0;
        for w in bp.windows(2) {
            let sub = 64;
            let h = (w[1] - w[0]) / sub as f64;
            for k in 0..sub {
                let a = w[0] + k as f64 * h;
                let mid = a + 0.5 * h;
                total += X
                    .iter()
                    .zip(W)
                    .map(|(x, wt)| wt * env.value(mid + 0.5 * h * x))
                    .sum::<f64>()
                    * 0.5
                    * h;
            }
        }
        total
    }

    #[test]
    fn value_examples() {
        let c = Envelope::constant(PI, 5e-9).unwrap();
        assert!((c.value(2e-9) - PI / 5e-9).abs() < 1e-3);
        assert!((c.value(2e-9) / TAU / 1e6 - 100.0).abs() < 1e-9);
        let s = Envelope::sine(PI, 5e-9).unwrap();
        let peak = PI * PI / (2.0 * 5e-9);
        assert!((s.value(2.5e-9) - peak).abs() / peak < 1e-15);
        assert!((s.value(2.5e-9) / TAU / 1e6 - 157.08).abs() < 0.01);
        for env in [c, s, sine_sampled_train(PI, 10, 10e-12, TAU * 1.9e9).unwrap()] {
            assert_eq!(env.value(env.t_start() - 1e-9), 0.0);
        }
    }

    #[test]
    fn sine_edges_are_exactly_zero() {
        let s = Envelope::sine(PI, 5e-9).unwrap().with_t_start(1.3e-9);
        assert_eq!(s.value(1.3e-9), 0.0);
        assert_eq!(s.value(1.3e-9 + 5e-9), 0.0);
    }

    #[test]
    fn areas() {
        assert_eq!(Envelope::constant(PI, 5e-9).unwrap().area(), PI);
        assert_eq!(Envelope::sine(0.99 * PI, 5e-9).unwrap().area(), 0.99 * PI);
        let train = sine_sampled_train(PI, 10, 10e-12, TAU * 1.9e9).unwrap();
        assert!((train.area() - PI).abs() < 1e-14);
    }

    #[test]
    fn ten_pulse_train() {
        let train = sine_sampled_train(PI, 10, 10e-12, TAU * 1.9e9).unwrap();
        assert!((train.duration() - 5.263e-9).abs() < 1e-12);
        // 10 ps of active drive per pulse forces a mean amplitude of 2π×5 GHz
        assert!(train.peak() > TAU * 5e9);
        let Envelope::PulseTrain { amps, .. } = &train else { unreachable!() };
        assert_eq!(amps.len(), 10);
        assert!((amps[0] - amps[9]).abs() < 1e-6 * amps[0]);
    }

    #[test]
    fn single_pulse_train() {
        let train = sine_sampled_train(0.5, 1, 10e-12, TAU * 1e9).unwrap();
        let Envelope::PulseTrain { amps, .. } = &train else { unreachable!() };
        assert_eq!(amps.len(), 1);
        assert!((amps[0] * 10e-12 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn overlap_rejected() {
        let err = sine_sampled_train(PI, 10, 1e-9, TAU * 1.9e9).unwrap_err();
        assert!(matches!(err, Error::PulseOverlap { .. }));
        assert!(sine_sampled_train(PI, 0, 1e-12, TAU * 1e9).is_err());
    }

    #[test]
    fn quadrature_matches_closed_form_area() {
        let envs = [
            Envelope::constant(PI, 5e-9).unwrap(),
            Envelope::sine(PI, 5e-9).unwrap().with_t_start(-2.5e-9),
            sine_sampled_train(PI, 10, 10e-12, TAU * 1.9e9).unwrap(),
        ];
        for env in envs {
            let q = quadrature(&env);
            assert!((q - env.area()).abs() / env.area() < 1e-10, "{env:?}: {q}");
        }
    }

    proptest! {
        #[test]
        fn train_quadrature_and_positivity(amps in proptest::collection::vec(0.0f64..1e11, 1..12),
                                           width in 1e-12f64..1e-11, t in -1e-9f64..1e-8) {
            let env = Envelope::pulse_train(amps, width, TAU * 1.9e9).unwrap();
            prop_assert!(env.value(t) >= 0.0);
            let area = env.area();
            if area > 0.0 {
                prop_assert!((quadrature(&env) - area).abs() / area < 1e-10);
            }
        }

        #[test]
        fn sine_nonnegative(theta in 0.0f64..10.0, t in -1e-9f64..7e-9) {
            prop_assert!(Envelope::sine(theta, 5e-9).unwrap().value(t) >= 0.0);
        }
    }
}
