//! Cross-checks between independent models and solvers on the public API.

use std::f64::consts::{PI, TAU};

use raman_sdk::analysis::{ModelKind, SdkProblem, Solver, TargetTime};
use raman_sdk::dynamics::{ModelFlags, Tolerances};
use raman_sdk::envelope::{sine_sampled_train, Envelope};
use raman_sdk::trap::{IonParams, TrapParams};

const WA: f64 = TAU * 10e9;

fn kick(envelope: Envelope, dw: f64) -> SdkProblem {
    SdkProblem {
        trap: TrapParams::new(TAU * 33.64e6, 0.0, 0.0, 0.15).unwrap(),
        ion: IonParams::with_eta(WA, 0.1).unwrap(),
        envelope,
        dw,
        model: ModelKind::Kick,
        flags: ModelFlags::KICK,
        n_max: 6,
        m_max: 32,
        tol: Tolerances::default(),
        solver: Solver::Auto,
        target_time: TargetTime::Centroid,
    }
}

/// The ladder scores |c₁,₊₁|² with orthogonal momentum kets; the Fock model
/// scores the overlap with a coherent state, which also picks up the other
/// spin-1 rungs through ⟨2iη|2iηn⟩ = exp(−2η²(n − 1)²). The two infidelities
/// may differ by at most that interference.
#[test]
fn frozen_fock_model_matches_the_ladder() {
    for env in [Envelope::constant(PI, 5e-9).unwrap(), Envelope::sine(PI, 5e-9).unwrap()] {
        let k = kick(env, WA * (1.0 + 5e-5));
        let mut f = k.clone();
        f.model = ModelKind::Fock;
        f.tol = Tolerances::with_rtol(1e-11);
        let (out, series) = k.run_series(2).unwrap();
        let a = out.infidelity;
        let b = f.run().unwrap().infidelity;
        let last = series.populations.last().unwrap();
        let mut leak = 0.0;
        for (label, p) in series.labels.iter().zip(last) {
            let Some(n) = label.strip_prefix("p_1_") else { continue };
            let n: i64 = n.parse().unwrap();
            if n != 1 {
                leak += (-2.0 * 0.01 * ((n - 1) as f64).powi(2)).exp() * p.sqrt();
            }
        }
        let bound = 2.0 * leak + leak * leak + 1e-9;
        assert!((a - b).abs() <= bound, "{a} vs {b}, bound {bound}");
        assert!((a - b).abs() < 1e-4);
    }
}

#[test]
fn no_trap_curvature_means_no_secular_or_micromotion_effects() {
    // q_z = 0: ω_S = 0 and the micromotion term vanishes, so the full model
    // collapses to the frozen ladder
    let mut k = kick(Envelope::sine(PI, 5e-9).unwrap(), WA * (1.0 + 5e-5));
    k.trap = TrapParams::new(TAU * 33.64e6, 1.0, 0.0, 0.0).unwrap();
    let mut f = k.clone();
    f.model = ModelKind::Fock;
    f.flags = ModelFlags::FULL;
    f.tol = Tolerances::with_rtol(1e-11);
    let (a, b) = (k.run().unwrap().infidelity, f.run().unwrap().infidelity);
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
}

#[test]
fn exact_and_integrated_ladders_agree() {
    let train = sine_sampled_train(PI, 10, 10e-12, (WA - 0.027 * WA) / 5.0).unwrap();
    for (env, dw, n) in [
        (Envelope::constant(PI, 5e-9).unwrap(), WA, 6),
        (train, 0.027 * WA, 16),
    ] {
        let mut a = kick(env, dw);
        a.n_max = n;
        a.solver = Solver::Exact;
        let mut b = a.clone();
        b.solver = Solver::Integrate;
        let (x, y) = (a.run().unwrap().infidelity, b.run().unwrap().infidelity);
        assert!((x - y).abs() < 1e-9, "{x} vs {y}");
    }
}

#[test]
fn backward_kick_is_the_whole_constant_pulse_error() {
    let mut p = kick(Envelope::constant(PI, 5e-9).unwrap(), WA);
    let full = p.run().unwrap().infidelity;
    p.flags.include_backward = false;
    let forward = p.run().unwrap().infidelity;
    assert!(forward < 1e-12, "{forward}");
    assert!((full - 1.9e-5).abs() < 0.2 * 1.9e-5);
}

#[test]
fn ladder_size_does_not_change_a_converged_answer() {
    let mut p = kick(Envelope::sine(PI, 5e-9).unwrap(), WA * (1.0 + 5e-5));
    let a = p.run().unwrap().infidelity;
    p.n_max = 10;
    let b = p.run().unwrap().infidelity;
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn fock_cutoff_does_not_change_a_converged_answer() {
    let mut p = kick(Envelope::sine(PI, 5e-9).unwrap(), WA * (1.0 + 5e-5));
    p.model = ModelKind::Fock;
    p.flags = ModelFlags::FULL;
    p.trap.phi_rf = TAU * 0.16;
    let a = p.run().unwrap().infidelity;
    p.m_max = 48;
    let b = p.run().unwrap().infidelity;
    assert!((a - b).abs() < 1e-10, "{a} vs {b}");
}
