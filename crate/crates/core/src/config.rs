//! TOML run configuration with unit-aware fields and dotted-path overrides.
//!
//! Every table rejects unknown keys. Quantities accept either bare numbers in
//! base units or strings with a unit suffix (see [`crate::units`]). The
//! resolved form, with every default filled in, serializes back to plain base
//! units and is embedded in each output file.

use std::f64::consts::FRAC_PI_4;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    ModelKind, NelderMeadOptions, OptimizeTarget, SdkProblem, Solver, StepScales, SweepParameter,
    TargetTime,
};
use crate::beams::{interference_params, BeamPair, DEFAULT_HIERARCHY_THRESHOLD};
use crate::dynamics::fock::DEFAULT_FOCK_M;
use crate::dynamics::kick::DEFAULT_KICK_N;
use crate::dynamics::{ModelFlags, Tolerances};
use crate::envelope::{sine_sampled_train, Envelope};
use crate::error::{Error, Result};
use crate::trap::{secular_frequency, IonParams, TrapParams, DEFAULT_FAST_SDK_THRESHOLD};
use crate::units::{Angle, AngularFrequency, Duration};

/// Largest |cos 2β| accepted for a carrier-free beam pair.
const CARRIER_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Reserved; every algorithm here is deterministic.
    #[serde(default)]
    pub seed: u64,
    pub trap: TrapConfig,
    pub ion: IonConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beams: Option<BeamsConfig>,
    pub drive: DriveConfig,
    pub envelope: EnvelopeConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub landscape: LandscapeConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub optimize: OptimizeConfig,
    #[serde(default)]
    pub check: CheckConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapConfig {
    pub omega_rf: AngularFrequency,
    #[serde(default)]
    pub phi_rf: Angle,
    #[serde(default)]
    pub a_z: f64,
    pub q_z: f64,
}

/// Either `eta` directly, or `mass` (kg) and `k` (1/m) to derive it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonConfig {
    pub omega_a: AngularFrequency,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
}

/// Polarization geometry. The effective drive is the envelope scaled by the
/// interference amplitude A; the pair must be free of carrier terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamsConfig {
    #[serde(default = "default_beta1")]
    pub beta1: Angle,
    #[serde(default = "default_beta2")]
    pub beta2: Angle,
    #[serde(default)]
    pub dpsi: Angle,
    /// Single-photon detuning, used by `check` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<AngularFrequency>,
}

fn default_beta1() -> Angle {
    Angle(FRAC_PI_4)
}

fn default_beta2() -> Angle {
    Angle(-FRAC_PI_4)
}

impl Default for BeamsConfig {
    fn default() -> Self {
        Self {
            beta1: default_beta1(),
            beta2: default_beta2(),
            dpsi: Angle(0.0),
            detuning: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub raman_beat: AngularFrequency,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvelopeConfig {
    Constant {
        theta: Angle,
        tau: Duration,
        #[serde(default)]
        t_start: Duration,
    },
    Sine {
        theta: Angle,
        tau: Duration,
        #[serde(default)]
        t_start: Duration,
    },
    PulseTrain {
        amps: Vec<AngularFrequency>,
        width: Duration,
        rep_rate: AngularFrequency,
        #[serde(default)]
        t_start: Duration,
    },
    /// `n` sub-pulses whose heights sample a sine of total area `theta`.
    SineSampledTrain {
        theta: Angle,
        n: usize,
        width: Duration,
        rep_rate: AngularFrequency,
        #[serde(default)]
        t_start: Duration,
    },
}

impl EnvelopeConfig {
    pub fn build(&self) -> Result<Envelope> {
        let (env, t0) = match self {
            EnvelopeConfig::Constant { theta, tau, t_start } => {
                (Envelope::constant(theta.0, tau.0)?, t_start.0)
            }
            EnvelopeConfig::Sine { theta, tau, t_start } => (Envelope::sine(theta.0, tau.0)?, t_start.0),
            EnvelopeConfig::PulseTrain {
                amps,
                width,
                rep_rate,
                t_start,
            } => (
                Envelope::pulse_train(amps.iter().map(|a| a.0).collect(), width.0, rep_rate.0)?,
                t_start.0,
            ),
            EnvelopeConfig::SineSampledTrain {
                theta,
                n,
                width,
                rep_rate,
                t_start,
            } => (sine_sampled_train(theta.0, *n, width.0, rep_rate.0)?, t_start.0),
        };
        Ok(env.with_t_start(t0))
    }
}

/// Flags left out take the defaults of the chosen model kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub include_micromotion: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub include_backward: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frozen_secular: Option<bool>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Fock,
            include_micromotion: None,
            include_backward: None,
            frozen_secular: None,
        }
    }
}

impl ModelConfig {
    pub fn flags(&self) -> ModelFlags {
        let base = match self.kind {
            ModelKind::Kick => ModelFlags::KICK,
            ModelKind::Fock => ModelFlags::FULL,
        };
        ModelFlags {
            include_micromotion: self.include_micromotion.unwrap_or(base.include_micromotion),
            include_backward: self.include_backward.unwrap_or(base.include_backward),
            frozen_secular: self.frozen_secular.unwrap_or(base.frozen_secular),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub tolerances: Tolerances,
    /// Kick-ladder truncation N.
    pub n_max: usize,
    /// Fock cutoff M.
    pub m_max: usize,
    pub solver: Solver,
    pub target_time: TargetTime,
    /// Time samples in the `simulate` series.
    pub samples: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            n_max: DEFAULT_KICK_N,
            m_max: DEFAULT_FOCK_M,
            solver: Solver::Auto,
            target_time: TargetTime::Centroid,
            samples: 201,
        }
    }
}

/// ω_R grid on [omega_rf_min, omega_rf_max]; φ_R grid covers [0, 2π).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandscapeConfig {
    pub omega_rf_min: AngularFrequency,
    pub omega_rf_max: AngularFrequency,
    pub n_omega: usize,
    pub n_phi: usize,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            omega_rf_min: AngularFrequency::parse("4 MHz").unwrap(),
            omega_rf_max: AngularFrequency::parse("40 MHz").unwrap(),
            n_omega: 64,
            n_phi: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    /// Relative half-width of the sweep.
    pub span: f64,
    pub points: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            parameter: SweepParameter::PulseArea,
            span: 0.01,
            points: 11,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeConfig {
    pub target: OptimizeTarget,
    pub budget: usize,
    pub xtol_rel: f64,
    pub max_restarts: usize,
    pub steps: StepScales,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        let nm = NelderMeadOptions::default();
        Self {
            target: OptimizeTarget::RamanBeat,
            budget: nm.budget,
            xtol_rel: nm.xtol_rel,
            max_restarts: nm.max_restarts,
            steps: StepScales::default(),
        }
    }
}

impl OptimizeConfig {
    pub fn options(&self) -> NelderMeadOptions {
        NelderMeadOptions {
            budget: self.budget,
            xtol_rel: self.xtol_rel,
            max_restarts: self.max_restarts,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckConfig {
    pub fast_sdk_threshold: f64,
    pub hierarchy_threshold: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            fast_sdk_threshold: DEFAULT_FAST_SDK_THRESHOLD,
            hierarchy_threshold: DEFAULT_HIERARCHY_THRESHOLD,
        }
    }
}

/// Splits `a.b.c=value`; the value is read as a TOML literal, or as a plain
/// string when it does not parse as one.
fn parse_override(spec: &str) -> Result<(Vec<String>, toml::Value)> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not of the form key=value")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_owned).collect();
    if path.iter().any(String::is_empty) {
        return Err(Error::Config(format!("override `{spec}` has an empty key segment")));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()));
    Ok((path, value))
}

fn apply_override(root: &mut toml::Table, path: &[String], value: toml::Value) -> Result<()> {
    let (last, parents) = path.split_last().expect("nonempty path");
    let mut table = root;
    for (depth, seg) in parents.iter().enumerate() {
        let entry = table
            .entry(seg.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| {
            Error::Config(format!("override path `{}` crosses a non-table value", path[..=depth].join(".")))
        })?;
    }
    table.insert(last.clone(), value);
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses `text`, applies `key=value` overrides in order, and
    /// deserializes the result.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        if overrides.is_empty() {
            return toml::from_str(text).map_err(|e| Error::Config(e.to_string()));
        }
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for spec in overrides {
            let (path, value) = parse_override(spec)?;
            apply_override(&mut table, &path, value)?;
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("after overrides: {e}")))
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_with_overrides(&text, overrides).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Copy with kind-dependent model flags and beam defaults made explicit.
    pub fn resolved(&self) -> Self {
        let mut cfg = self.clone();
        let flags = cfg.model.flags();
        cfg.model.include_micromotion = Some(flags.include_micromotion);
        cfg.model.include_backward = Some(flags.include_backward);
        cfg.model.frozen_secular = Some(flags.frozen_secular);
        cfg.beams.get_or_insert_with(BeamsConfig::default);
        cfg
    }

    pub fn trap_params(&self) -> Result<TrapParams> {
        TrapParams::new(self.trap.omega_rf.0, self.trap.phi_rf.0, self.trap.a_z, self.trap.q_z)
    }

    pub fn ion_params(&self, omega_s: f64) -> Result<IonParams> {
        let ion = &self.ion;
        match (ion.eta, ion.mass, ion.k) {
            (Some(eta), None, None) => IonParams::with_eta(ion.omega_a.0, eta),
            (eta, Some(mass), Some(k)) => {
                let derived = IonParams::from_mass_and_k(ion.omega_a.0, mass, k, omega_s)?;
                if let Some(eta) = eta {
                    let rel = ((eta - derived.eta) / derived.eta).abs();
                    if rel > 1e-6 {
                        return Err(Error::Config(format!(
                            "ion.eta = {eta} disagrees with mass and k (which give {})",
                            derived.eta
                        )));
                    }
                }
                Ok(derived)
            }
            _ => Err(Error::Config(
                "ion needs either eta, or both mass (kg) and k (1/m)".into(),
            )),
        }
    }

    pub fn beam_pair(&self) -> Result<BeamPair> {
        let b = self.beams.clone().unwrap_or_default();
        let pair = BeamPair {
            beta1: b.beta1.0,
            beta2: b.beta2.0,
            dpsi: b.dpsi.0,
            dk: 0.0,
            dphi_rate: self.drive.raman_beat.0,
            detuning: b.detuning.map(|d| d.0),
        };
        pair.validate()?;
        Ok(pair)
    }

    /// Interference amplitude A of a carrier-free beam pair.
    fn drive_scale(&self) -> Result<f64> {
        let pair = self.beam_pair()?;
        let (c1, c2) = pair.carrier_weights();
        if c1.abs() > CARRIER_TOLERANCE || c2.abs() > CARRIER_TOLERANCE {
            return Err(Error::Config(format!(
                "beams carry a momentum-free carrier (cos 2β₁ = {c1:.3e}, cos 2β₂ = {c2:.3e}); \
                 only β = ±π/4 geometries are modelled"
            )));
        }
        let amp = interference_params(&pair).amp;
        if !(amp > 0.0) {
            return Err(Error::Config("beam geometry extinguishes the two-photon drive".into()));
        }
        Ok(amp)
    }

    pub fn envelope(&self) -> Result<Envelope> {
        let env = self.envelope.build()?;
        let scale = self.drive_scale()?;
        Ok(if scale == 1.0 { env } else { env.scaled(scale) })
    }

    /// The single-kick problem described by this config.
    pub fn problem(&self) -> Result<SdkProblem> {
        let trap = self.trap_params()?;
        let omega_s = secular_frequency(&trap)?;
        let n = &self.numerics;
        let p = SdkProblem {
            trap,
            ion: self.ion_params(omega_s)?,
            envelope: self.envelope()?,
            dw: self.drive.raman_beat.0,
            model: self.model.kind,
            flags: self.model.flags(),
            n_max: n.n_max,
            m_max: n.m_max,
            tol: n.tolerances,
            solver: n.solver,
            target_time: n.target_time,
        };
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    const CONSTANT_KICK: &str = r#"
        [trap]
        omega_rf = "33.64 MHz"
        q_z = 0.15

        [ion]
        omega_a = "10 GHz"
        eta = 0.1

        [drive]
        raman_beat = "10 GHz"

        [envelope]
        kind = "constant"
        theta = "1 pi"
        tau = "5 ns"

        [model]
        kind = "kick"
    "#;

    #[test]
    fn parses_units_and_defaults() {
        let cfg = RunConfig::from_toml(CONSTANT_KICK).unwrap();
        assert!((cfg.ion.omega_a.0 - TAU * 1e10).abs() < 1e-3);
        assert_eq!(cfg.trap.a_z, 0.0);
        assert_eq!(cfg.numerics.n_max, DEFAULT_KICK_N);
        assert_eq!(cfg.model.flags(), ModelFlags::KICK);
        let p = cfg.problem().unwrap();
        assert!((p.envelope.area() - PI).abs() < 1e-12);
        assert_eq!(p.model, ModelKind::Kick);
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_name() {
        let text = CONSTANT_KICK.replace("q_z = 0.15", "q_z = 0.15\nqz = 1");
        let err = RunConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("qz"), "{err}");
        let text = CONSTANT_KICK.replace("kind = \"kick\"", "kind = \"kick\"\nmicromotion = true");
        assert!(RunConfig::from_toml(&text).is_err());
    }

    #[test]
    fn wrong_units_are_rejected() {
        let text = CONSTANT_KICK.replace("tau = \"5 ns\"", "tau = \"5 GHz\"");
        let err = RunConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("duration"), "{err}");
    }

    #[test]
    fn overrides_apply_in_order() {
        let ov = vec![
            "trap.phi_rf=\"0.25 turn\"".to_string(),
            "numerics.n_max=9".into(),
            "model.include_backward=false".into(),
            "envelope.tau=4ns".into(),
        ];
        let cfg = RunConfig::from_toml_with_overrides(CONSTANT_KICK, &ov).unwrap();
        assert!((cfg.trap.phi_rf.0 - PI / 2.0).abs() < 1e-15);
        assert_eq!(cfg.numerics.n_max, 9);
        assert!(!cfg.model.flags().include_backward);
        match cfg.envelope {
            EnvelopeConfig::Constant { tau, .. } => assert!((tau.0 - 4e-9).abs() < 1e-24),
            _ => panic!(),
        }
        assert!(RunConfig::from_toml_with_overrides(CONSTANT_KICK, &["trap.nope=1".into()]).is_err());
        assert!(RunConfig::from_toml_with_overrides(CONSTANT_KICK, &["noequals".into()]).is_err());
        assert!(RunConfig::from_toml_with_overrides(CONSTANT_KICK, &["trap.q_z.x=1".into()]).is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = RunConfig::from_toml(CONSTANT_KICK).unwrap().resolved();
        let text = toml::to_string(&cfg).unwrap();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.model.frozen_secular, Some(true));
    }

    #[test]
    fn ion_needs_eta_or_mass_and_k() {
        let cfg = RunConfig::from_toml(&CONSTANT_KICK.replace("eta = 0.1", "mass = 2.2e-25")).unwrap();
        assert!(matches!(cfg.problem(), Err(Error::Config(_))));
        let cfg = RunConfig::from_toml(&CONSTANT_KICK.replace("eta = 0.1", "mass = 2.2e-25\nk = 1.18e7")).unwrap();
        let p = cfg.problem().unwrap();
        assert!(p.ion.eta > 0.0 && p.ion.mass.is_some());
    }

    #[test]
    fn carrier_geometry_is_refused() {
        let text = format!("{CONSTANT_KICK}\n[beams]\nbeta1 = \"0 rad\"\nbeta2 = \"0 rad\"\n");
        let cfg = RunConfig::from_toml(&text).unwrap();
        assert!(matches!(cfg.problem(), Err(Error::Config(_))));
        let text = format!("{CONSTANT_KICK}\n[beams]\nbeta1 = \"-45 deg\"\nbeta2 = \"45 deg\"\n");
        let p = RunConfig::from_toml(&text).unwrap().problem().unwrap();
        assert!((p.envelope.area() - PI).abs() < 1e-12);
    }

    #[test]
    fn unstable_trap_is_a_validation_error() {
        let text = CONSTANT_KICK.replace("q_z = 0.15", "q_z = 0.1\na_z = -0.1");
        let err = RunConfig::from_toml(&text).unwrap().problem().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn sine_sampled_train_envelope() {
        let text = CONSTANT_KICK.replace(
            "kind = \"constant\"\n        theta = \"1 pi\"\n        tau = \"5 ns\"",
            "kind = \"sine_sampled_train\"\ntheta = \"1 pi\"\nn = 10\nwidth = \"10 ps\"\nrep_rate = \"1.9 GHz\"",
        );
        let env = RunConfig::from_toml(&text).unwrap().envelope().unwrap();
        assert!((env.area() - PI).abs() < 1e-12);
        assert!(matches!(env, Envelope::PulseTrain { ref amps, .. } if amps.len() == 10));
    }
}
