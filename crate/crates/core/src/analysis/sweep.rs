//! Infidelity landscapes over (ω_R, φ_R) and 1-D robustness sweeps.
//!
//! Cells are independent runs evaluated on the rayon pool; results are
//! stored in grid order regardless of completion order. A failed cell is
//! logged and stored as NaN.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::simulate::SdkProblem;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, unit: &str, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
            values,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Row axis.
    pub axis1: Axis,
    /// Column axis; absent for 1-D sweeps, which store one column.
    pub axis2: Option<Axis>,
    /// values[row][col]
    pub values: Vec<Vec<f64>>,
    pub meta: serde_json::Value,
}

impl SweepResult {
    pub fn shape(&self) -> (usize, usize) {
        (self.values.len(), self.values.first().map_or(0, Vec::len))
    }

    fn finite(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.values.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, v)| v.is_finite())
                .map(move |(j, v)| (i, j, *v))
        })
    }

    /// Smallest finite value and its (row, col).
    pub fn min(&self) -> Option<(usize, usize, f64)> {
        self.finite().min_by(|a, b| a.2.total_cmp(&b.2))
    }

    pub fn max(&self) -> Option<(usize, usize, f64)> {
        self.finite().max_by(|a, b| a.2.total_cmp(&b.2))
    }

    pub fn nan_cells(&self) -> usize {
        self.values.iter().flatten().filter(|v| v.is_nan()).count()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[j]).collect()
    }
}

/// n evenly spaced points on [a, b] (a alone when n = 1).
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n)
            .map(|k| if k + 1 == n { b } else { a + (b - a) * k as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// n phases k·2π/n covering one period.
pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

fn cell_value(problem: Result<SdkProblem>, label: &str) -> f64 {
    match problem.and_then(|p| p.run()) {
        Ok(out) => out.infidelity,
        Err(e) => {
            log::warn!("{label}: {e}");
            f64::NAN
        }
    }
}

/// Infidelity over rows φ_R and columns ω_R. `on_cell(row, col, value)` is
/// called as each cell finishes, from worker threads.
pub fn landscape<F>(base: &SdkProblem, omega_rf: &[f64], phi_rf: &[f64], on_cell: F) -> Result<SweepResult>
where
    F: Fn(usize, usize, f64) + Sync,
{
    if omega_rf.is_empty() || phi_rf.is_empty() {
        return Err(Error::InvalidParameter("landscape grids must be nonempty".into()));
    }
    base.validate()?;
    let cols = omega_rf.len();
    let flat: Vec<f64> = (0..phi_rf.len() * cols)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / cols, idx % cols);
            let mut trap = base.trap;
            trap.omega_rf = omega_rf[j];
            trap.phi_rf = phi_rf[i];
            let v = cell_value(base.with_trap(trap), &format!("cell (phi_rf {}, omega_rf {})", phi_rf[i], omega_rf[j]));
            on_cell(i, j, v);
            v
        })
        .collect();
    Ok(SweepResult {
        axis1: Axis::new("phi_rf", "rad", phi_rf.to_vec()),
        axis2: Some(Axis::new("omega_rf", "rad/s", omega_rf.to_vec())),
        values: flat.chunks(cols).map(<[f64]>::to_vec).collect(),
        meta: serde_json::Value::Null,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// θ → θ·(1 + δ)
    PulseArea,
    /// Δω → Δω·(1 + δ)
    RamanBeat,
}

/// Infidelity against a relative error δ ∈ [−span, span] on `n_points`.
pub fn robustness_sweep(
    base: &SdkProblem,
    parameter: SweepParameter,
    span: f64,
    n_points: usize,
) -> Result<SweepResult> {
    if n_points == 0 || !(span >= 0.0) {
        return Err(Error::InvalidParameter(
            "sweep needs at least one point and a nonnegative span".into(),
        ));
    }
    base.validate()?;
    let deltas = linspace(-span, span, n_points);
    let values: Vec<Vec<f64>> = deltas
        .par_iter()
        .map(|&d| {
            let mut p = base.clone();
            match parameter {
                SweepParameter::PulseArea => p.envelope = p.envelope.scaled(1.0 + d),
                SweepParameter::RamanBeat => p.dw *= 1.0 + d,
            }
            vec![cell_value(Ok(p), &format!("delta {d}"))]
        })
        .collect();
    let name = match parameter {
        SweepParameter::PulseArea => "delta_theta",
        SweepParameter::RamanBeat => "delta_raman_beat",
    };
    Ok(SweepResult {
        axis1: Axis::new(name, "relative", deltas),
        axis2: None,
        values,
        meta: serde_json::Value::Null,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::simulate::tests::{kick_problem, WA};
    use crate::analysis::simulate::ModelKind;
    use crate::dynamics::ModelFlags;
    use crate::envelope::Envelope;
    use std::f64::consts::PI;

    #[test]
    fn grids() {
        assert_eq!(linspace(1.0, 2.0, 3), vec![1.0, 1.5, 2.0]);
        assert_eq!(linspace(1.0, 2.0, 1), vec![1.0]);
        let g = phase_grid(4);
        assert_eq!(g.len(), 4);
        assert!((g[2] - PI).abs() < 1e-15);
    }

    #[test]
    fn flat_landscape_without_micromotion() {
        let mut p = kick_problem(Envelope::sine(PI, 5e-9).unwrap(), WA * (1.0 + 5e-5));
        p.model = ModelKind::Fock;
        p.m_max = 12;
        p.flags = ModelFlags {
            include_micromotion: false,
            ..ModelFlags::FULL
        };
        p.tol = crate::dynamics::Tolerances::with_rtol(1e-10);
        let r = landscape(&p, &[TAU * 20e6, TAU * 33.64e6], &phase_grid(3), |_, _, _| {}).unwrap();
        assert_eq!(r.shape(), (3, 2));
        // φ_R cannot matter; ω_R still sets ω_S and so the target phase
        for j in 0..2 {
            let col = r.column(j);
            let spread = col.iter().cloned().fold(f64::MIN, f64::max) - col.iter().cloned().fold(f64::MAX, f64::min);
            assert!(spread < 1e-9);
        }
    }

    #[test]
    fn failed_cells_become_nan() {
        let mut p = kick_problem(Envelope::sine(PI, 5e-9).unwrap(), WA);
        p.model = ModelKind::Fock;
        p.flags = ModelFlags::FULL;
        p.m_max = 3;
        let r = landscape(&p, &[TAU * 33.64e6], &[0.0], |_, _, _| {}).unwrap();
        assert_eq!(r.nan_cells(), 1);
        assert!(r.min().is_none());
    }

    #[test]
    fn sweep_centre_matches_base() {
        let p = kick_problem(Envelope::sine(PI, 5e-9).unwrap(), WA * (1.0 + 5e-5));
        let r = robustness_sweep(&p, SweepParameter::PulseArea, 0.01, 5).unwrap();
        assert_eq!(r.shape(), (5, 1));
        assert_eq!(r.values[2][0], p.run().unwrap().infidelity);
        assert!(r.values[0][0] > r.values[2][0]);
    }
}
