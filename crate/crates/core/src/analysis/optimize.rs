//! Bounded Nelder–Mead simplex search and the pulse-parameter problems built
//! on it.

use serde::{Deserialize, Serialize};

use super::simulate::SdkProblem;
use crate::envelope::Envelope;
use crate::error::{Error, Result};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NelderMeadOptions {
    /// Maximum number of objective evaluations.
    pub budget: usize,
    /// Stop when every vertex is within this relative distance of the best.
    pub xtol_rel: f64,
    /// Rebuilds of the initial simplex around the best point after convergence.
    pub max_restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            budget: 5000,
            xtol_rel: 1e-10,
            max_restarts: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub evaluations: usize,
    pub best: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub init_f: f64,
    pub evaluations: usize,
    pub restarts: usize,
    pub converged: bool,
    pub budget_exhausted: bool,
    pub trace: Vec<TraceEntry>,
}

struct Counted<F> {
    f: F,
    bounds: Vec<(f64, f64)>,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn project(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(&self.bounds) {
            *v = v.clamp(*lo, *hi);
        }
    }

    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        let v = (self.f)(x);
        // failed evaluations rank last
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t·(b − a)
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Minimizes `f` from `init` with an initial simplex of per-coordinate
/// `steps`. Coordinates are clamped to `bounds` (empty means unbounded).
/// Deterministic; never returns a point worse than `init`.
pub fn nelder_mead<F>(
    f: F,
    init: &[f64],
    steps: &[f64],
    bounds: &[(f64, f64)],
    opts: &NelderMeadOptions,
) -> Result<NelderMeadResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = init.len();
    if n == 0 || steps.len() != n || !(bounds.is_empty() || bounds.len() == n) {
        return Err(Error::InvalidParameter(
            "init, steps and bounds must have matching nonzero length".into(),
        ));
    }
    if opts.budget < n + 1 {
        return Err(Error::InvalidParameter(format!(
            "budget {} is below the simplex size {}",
            opts.budget,
            n + 1
        )));
    }
    if steps.iter().any(|s| *s == 0.0 || !s.is_finite()) {
        return Err(Error::InvalidParameter("simplex steps must be nonzero".into()));
    }
    let mut obj = Counted {
        f,
        bounds: if bounds.is_empty() {
            vec![(f64::NEG_INFINITY, f64::INFINITY); n]
        } else {
            bounds.to_vec()
        },
        evaluations: 0,
    };
    let mut best_x = init.to_vec();
    obj.project(&mut best_x);
    let init_f = obj.eval(&best_x);
    let mut best_f = init_f;
    let mut trace = vec![TraceEntry {
        evaluations: 1,
        best: best_f,
    }];
    let mut restarts = 0;
    let mut converged = false;

    'outer: loop {
        // simplex around the current best, which keeps its known value
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![(best_x.clone(), best_f)];
        for i in 0..n {
            if obj.evaluations >= opts.budget {
                break;
            }
            let mut x = best_x.clone();
            x[i] += steps[i];
            obj.project(&mut x);
            if x[i] == best_x[i] {
                // pinned at a bound: step inward instead
                x[i] = best_x[i] - steps[i];
                obj.project(&mut x);
            }
            let fx = obj.eval(&x);
            simplex.push((x, fx));
        }
        if simplex.len() <= n {
            if let Some((x, fx)) = simplex.iter().min_by(|a, b| a.1.total_cmp(&b.1)) {
                if *fx < best_f {
                    best_f = *fx;
                    best_x = x.clone();
                }
            }
            break;
        }
        let start_f = best_f;

        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            if simplex[0].1 < best_f {
                best_f = simplex[0].1;
                best_x = simplex[0].0.clone();
            }
            trace.push(TraceEntry {
                evaluations: obj.evaluations,
                best: best_f,
            });

            let diameter = simplex[1..]
                .iter()
                .flat_map(|(x, _)| {
                    x.iter()
                        .zip(&simplex[0].0)
                        .zip(steps)
                        .map(|((a, b), s)| (a - b).abs() / b.abs().max(s.abs()))
                })
                .fold(0.0, f64::max);
            if diameter < opts.xtol_rel {
                converged = true;
                break;
            }
            if obj.evaluations >= opts.budget {
                break 'outer;
            }

            let centroid: Vec<f64> = (0..n)
                .map(|i| simplex[..n].iter().map(|(x, _)| x[i]).sum::<f64>() / n as f64)
                .collect();
            let worst = simplex[n].clone();
            let mut xr = lerp(&centroid, &worst.0, -REFLECT);
            obj.project(&mut xr);
            let fr = obj.eval(&xr);

            if fr < simplex[0].1 {
                if obj.evaluations >= opts.budget {
                    simplex[n] = (xr, fr);
                    continue;
                }
                let mut xe = lerp(&centroid, &worst.0, -EXPAND);
                obj.project(&mut xe);
                let fe = obj.eval(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            if obj.evaluations >= opts.budget {
                continue;
            }
            // outside contraction toward the reflected point, else inside
            let (xc, fc) = if fr < worst.1 {
                let mut xc = lerp(&centroid, &xr, CONTRACT);
                obj.project(&mut xc);
                let fc = obj.eval(&xc);
                (xc, fc)
            } else {
                let mut xc = lerp(&centroid, &worst.0, CONTRACT);
                obj.project(&mut xc);
                let fc = obj.eval(&xc);
                (xc, fc)
            };
            if fc < fr.min(worst.1) {
                simplex[n] = (xc, fc);
                continue;
            }
            let anchor = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                if obj.evaluations >= opts.budget {
                    break;
                }
                let mut x = lerp(&anchor, &vertex.0, SHRINK);
                obj.project(&mut x);
                let fx = obj.eval(&x);
                *vertex = (x, fx);
            }
        }

        if restarts >= opts.max_restarts || !(best_f < start_f) || obj.evaluations >= opts.budget {
            break;
        }
        restarts += 1;
        converged = false;
    }

    trace.push(TraceEntry {
        evaluations: obj.evaluations,
        best: best_f,
    });
    trace.dedup();
    Ok(NelderMeadResult {
        x: best_x,
        f: best_f,
        init_f,
        evaluations: obj.evaluations,
        restarts,
        converged,
        budget_exhausted: obj.evaluations >= opts.budget && !converged,
        trace,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizeTarget {
    /// Raman beat only.
    RamanBeat,
    /// Pulse-train amplitudes, Raman beat and repetition rate.
    PulseTrain,
}

/// Relative initial simplex steps per parameter group.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepScales {
    pub amplitude: f64,
    pub raman_beat: f64,
    pub rep_rate: f64,
}

impl Default for StepScales {
    fn default() -> Self {
        Self {
            amplitude: 1e-1,
            raman_beat: 1e-5,
            rep_rate: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedParameter {
    pub name: String,
    pub unit: String,
    pub init: f64,
    pub best: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub target: OptimizeTarget,
    pub best_params: Vec<NamedParameter>,
    pub best_infidelity: f64,
    pub init_infidelity: f64,
    pub evaluations: usize,
    pub restarts: usize,
    pub converged: bool,
    pub budget_exhausted: bool,
    pub trace: Vec<TraceEntry>,
}

impl OptimizationReport {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.best_params.iter().find(|p| p.name == name).map(|p| p.best)
    }
}

struct Layout {
    names: Vec<(String, String)>,
    init: Vec<f64>,
    steps: Vec<f64>,
    bounds: Vec<(f64, f64)>,
}

fn layout(base: &SdkProblem, target: OptimizeTarget, scales: &StepScales) -> Result<Layout> {
    let dw = base.dw;
    let dw_bounds = (0.0, f64::INFINITY);
    match target {
        OptimizeTarget::RamanBeat => Ok(Layout {
            names: vec![("raman_beat".into(), "rad/s".into())],
            init: vec![dw],
            steps: vec![scales.raman_beat * dw.abs().max(base.ion.omega_a)],
            bounds: vec![dw_bounds],
        }),
        OptimizeTarget::PulseTrain => {
            let Envelope::PulseTrain {
                amps,
                width,
                rep_rate,
                ..
            } = &base.envelope
            else {
                return Err(Error::InvalidParameter(
                    "pulse-train optimization needs a pulse_train envelope".into(),
                ));
            };
            let mut names: Vec<(String, String)> =
                (0..amps.len()).map(|j| (format!("amp_{j}"), "rad/s".into())).collect();
            names.push(("raman_beat".into(), "rad/s".into()));
            names.push(("rep_rate".into(), "rad/s".into()));
            let mean = amps.iter().sum::<f64>() / amps.len() as f64;
            let mut steps: Vec<f64> = amps
                .iter()
                .map(|a| scales.amplitude * if *a != 0.0 { a.abs() } else { mean.max(1.0) })
                .collect();
            steps.push(scales.raman_beat * dw.abs().max(base.ion.omega_a));
            steps.push(scales.rep_rate * rep_rate);
            let mut bounds = vec![(0.0, f64::INFINITY); amps.len()];
            bounds.push(dw_bounds);
            // sub-pulses must not overlap
            bounds.push((0.0, std::f64::consts::TAU / width));
            let mut init = amps.clone();
            init.push(dw);
            init.push(*rep_rate);
            Ok(Layout {
                names,
                init,
                steps,
                bounds,
            })
        }
    }
}

fn apply(base: &SdkProblem, target: OptimizeTarget, x: &[f64]) -> Result<SdkProblem> {
    let mut p = base.clone();
    match target {
        OptimizeTarget::RamanBeat => p.dw = x[0],
        OptimizeTarget::PulseTrain => {
            let n = x.len() - 2;
            p.dw = x[n];
            p.envelope = p.envelope.with_amps(&x[..n])?.with_rep_rate(x[n + 1])?;
        }
    }
    Ok(p)
}

/// Problem with the optimized parameters written back.
pub fn apply_report(base: &SdkProblem, report: &OptimizationReport) -> Result<SdkProblem> {
    let x: Vec<f64> = report.best_params.iter().map(|p| p.best).collect();
    apply(base, report.target, &x)
}

pub fn objective(base: &SdkProblem, target: OptimizeTarget, x: &[f64]) -> f64 {
    match apply(base, target, x).and_then(|p| p.run()) {
        Ok(out) => out.infidelity,
        Err(e) => {
            log::debug!("objective failed: {e}");
            f64::NAN
        }
    }
}

pub fn optimize(
    base: &SdkProblem,
    target: OptimizeTarget,
    scales: &StepScales,
    opts: &NelderMeadOptions,
) -> Result<OptimizationReport> {
    base.validate()?;
    let l = layout(base, target, scales)?;
    let r = nelder_mead(|x| objective(base, target, x), &l.init, &l.steps, &l.bounds, opts)?;
    Ok(OptimizationReport {
        target,
        best_params: l
            .names
            .into_iter()
            .zip(l.init.iter().zip(&r.x))
            .map(|((name, unit), (init, best))| NamedParameter {
                name,
                unit,
                init: *init,
                best: *best,
            })
            .collect(),
        best_infidelity: r.f,
        init_infidelity: r.init_f,
        evaluations: r.evaluations,
        restarts: r.restarts,
        converged: r.converged,
        budget_exhausted: r.budget_exhausted,
        trace: r.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bowl(x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, v)| (i as f64 + 1.0) * (v - 0.5 * i as f64).powi(2))
            .sum()
    }

    #[test]
    fn quadratic_bowl() {
        let opts = NelderMeadOptions {
            budget: 200,
            ..Default::default()
        };
        let r = nelder_mead(bowl, &[2.0, -1.0], &[0.5, 0.5], &[], &opts).unwrap();
        assert!(r.evaluations <= 200);
        assert!((r.x[0]).abs() < 1e-8 && (r.x[1] - 0.5).abs() < 1e-8, "{:?}", r.x);
    }

    #[test]
    fn degenerate_budget_returns_after_first_simplex() {
        let opts = NelderMeadOptions {
            budget: 3,
            ..Default::default()
        };
        let r = nelder_mead(bowl, &[2.0, -1.0], &[0.5, 0.5], &[], &opts).unwrap();
        assert_eq!(r.evaluations, 3);
        assert!(r.budget_exhausted);
        assert!(r.f <= r.init_f);
        assert!(nelder_mead(bowl, &[2.0, -1.0], &[0.5, 0.5], &[], &NelderMeadOptions {
            budget: 2,
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn bounds_are_respected() {
        let opts = NelderMeadOptions::default();
        let r = nelder_mead(|x| (x[0] + 3.0).powi(2), &[1.0], &[0.3], &[(-1.0, 2.0)], &opts).unwrap();
        assert_eq!(r.x[0], -1.0);
    }

    #[test]
    fn nan_objective_is_ranked_last() {
        let opts = NelderMeadOptions {
            budget: 300,
            ..Default::default()
        };
        let r = nelder_mead(
            |x| if x[0] < 0.0 { f64::NAN } else { (x[0] - 1.0).powi(2) },
            &[3.0],
            &[1.0],
            &[],
            &opts,
        )
        .unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn never_worse_than_init(x0 in proptest::collection::vec(-5.0f64..5.0, 1..5),
                                 step in 0.01f64..2.0, budget in 2usize..80) {
            let n = x0.len();
            let opts = NelderMeadOptions { budget: budget.max(n + 1), ..Default::default() };
            // a bumpy objective
            let f = |x: &[f64]| x.iter().map(|v| v * v + (3.0 * v).sin()).sum::<f64>();
            let r = nelder_mead(f, &x0, &vec![step; n], &[], &opts).unwrap();
            prop_assert!(r.f <= f(&x0));
            prop_assert_eq!(r.f, f(&r.x));
            prop_assert!(r.evaluations <= opts.budget);
        }
    }
}
