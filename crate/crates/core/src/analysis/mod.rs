//! Fidelity, bounds, sweeps and optimization on top of the dynamics.

pub mod bounds;
pub mod fidelity;
pub mod optimize;
pub mod simulate;
pub mod sweep;

pub use bounds::{analytic_loci, backward_bound, phase_match_phi};
pub use fidelity::{fock_infidelity, kick_infidelity, target_alpha, TargetTime};
pub use optimize::{nelder_mead, optimize, NelderMeadOptions, OptimizationReport, OptimizeTarget, StepScales};
pub use simulate::{ModelKind, SdkOutcome, SdkProblem, Series, Solver};
pub use sweep::{landscape, linspace, phase_grid, robustness_sweep, Axis, SweepParameter, SweepResult};
