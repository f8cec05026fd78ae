//! Subcommands behind the `raman-sdk` binary and the files they write.
//!
//! Every file carries the resolved configuration: JSON files under a
//! `config` key, CSV files as a leading `# config: {...}` comment line.
//! Floats are written in shortest round-trip form, so reading a CSV back
//! recovers the in-memory values exactly.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::optimize::apply_report;
use crate::analysis::{
    analytic_loci, backward_bound, landscape, linspace, optimize, phase_grid, robustness_sweep,
    ModelKind, OptimizationReport, SdkOutcome, SweepResult,
};
use crate::beams::validate_hierarchy;
use crate::config::{EnvelopeConfig, RunConfig};
use crate::envelope::Envelope;
use crate::error::{Error, Result};
use crate::trap::{secular_frequency, validate_fast_sdk};
use crate::units::{AngularFrequency, Duration};

/// Shortest decimal that parses back to the same f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn config_json(cfg: &RunConfig) -> Value {
    serde_json::to_value(cfg.resolved()).expect("config serializes")
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn csv_writer(path: &Path, cfg: &RunConfig) -> Result<csv::Writer<BufWriter<File>>> {
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "# config: {}", config_json(cfg))?;
    Ok(csv::Writer::from_writer(file))
}

fn write_rows<I>(path: &Path, cfg: &RunConfig, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = csv_writer(path, cfg)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    log::info!("wrote {}", path.display());
    Ok(())
}

/// Reads a CSV written by this module: header plus numeric rows, with `#`
/// lines skipped.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let header = r.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::Config(format!("{}: `{s}`: {e}", path.display()))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn out_file(out: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(out)?;
    Ok(out.join(name))
}

fn outcome_json(o: &SdkOutcome) -> Value {
    json!({
        "infidelity": o.infidelity,
        "norm_drift": o.norm_drift,
        "truncation": o.truncation,
        "secular_frequency": o.secular_frequency,
        "stats": o.stats,
    })
}

/// Propagates one kick; writes `simulate.csv` (populations against time)
/// and `simulate.json`.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<SdkOutcome> {
    let p = cfg.problem()?;
    let (outcome, series) = p.run_series(cfg.numerics.samples)?;
    let mut header = vec!["t".to_string()];
    header.extend(series.labels.iter().cloned());
    header.push("omega0".into());
    let rows = series.times.iter().enumerate().map(|(k, t)| {
        let mut row = vec![*t];
        row.extend(&series.populations[k]);
        row.push(series.envelope[k]);
        row
    });
    write_rows(&out_file(out, "simulate.csv")?, cfg, &header, rows)?;
    let summary = json!({
        "command": "simulate",
        "config": config_json(cfg),
        "summary": outcome_json(&outcome),
    });
    write_json(&out_file(out, "simulate.json")?, &summary)?;
    log::info!("infidelity {:e}", outcome.infidelity);
    Ok(outcome)
}

fn sweep_json(r: &SweepResult) -> Value {
    let cell = |c: Option<(usize, usize, f64)>| {
        c.map(|(i, j, v)| {
            let mut o = json!({ r.axis1.name.clone(): r.axis1.values[i], "value": v });
            if let Some(a2) = &r.axis2 {
                o[a2.name.clone()] = json!(a2.values[j]);
            }
            o
        })
    };
    json!({
        "shape": r.shape(),
        "min": cell(r.min()),
        "max": cell(r.max()),
        "nan_cells": r.nan_cells(),
        "axis1": r.axis1,
        "axis2": r.axis2,
    })
}

/// Infidelity over (φ_R, ω_R). Cells are appended to `landscape_cells.csv`
/// as they finish, so an interrupted run keeps its partial grid; the matrix
/// goes to `landscape.csv`, the phase-matched loci to `landscape_loci.csv`.
pub fn cmd_landscape(cfg: &RunConfig, out: &Path) -> Result<SweepResult> {
    let p = cfg.problem()?;
    if p.model != ModelKind::Fock {
        return Err(Error::Config("landscape needs model.kind = \"fock\"".into()));
    }
    let l = &cfg.landscape;
    if l.n_omega == 0 || l.n_phi == 0 {
        return Err(Error::Config("landscape grid sizes must be positive".into()));
    }
    let omega = linspace(l.omega_rf_min.0, l.omega_rf_max.0, l.n_omega);
    let phi = phase_grid(l.n_phi);

    let mut cells = csv_writer(&out_file(out, "landscape_cells.csv")?, cfg)?;
    cells.write_record(["row", "col", "phi_rf", "omega_rf", "infidelity"])?;
    cells.flush()?;
    let cells = Mutex::new(cells);
    let done = std::sync::atomic::AtomicUsize::new(0);
    let total = omega.len() * phi.len();
    let mut r = landscape(&p, &omega, &phi, |i, j, v| {
        let mut w = cells.lock().expect("cell writer poisoned");
        let rec = [i.to_string(), j.to_string(), fmt_f64(phi[i]), fmt_f64(omega[j]), fmt_f64(v)];
        if let Err(e) = w.write_record(&rec).and_then(|_| w.flush().map_err(Into::into)) {
            log::warn!("cannot record cell ({i}, {j}): {e}");
        }
        let n = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
        if n.is_multiple_of(64) || n == total {
            log::info!("landscape {n}/{total} cells");
        }
    })?;

    let mut header = vec!["phi_rf".to_string()];
    header.extend(omega.iter().map(|w| fmt_f64(*w)));
    let rows = r.values.iter().zip(&phi).map(|(row, ph)| {
        let mut v = vec![*ph];
        v.extend(row);
        v
    });
    write_rows(&out_file(out, "landscape.csv")?, cfg, &header, rows)?;

    let (t0, tau) = (p.envelope.t_start(), p.envelope.duration());
    let loci = analytic_loci(&omega, t0, tau);
    write_rows(
        &out_file(out, "landscape_loci.csv")?,
        cfg,
        &["omega_rf".into(), "phi_rf_a".into(), "phi_rf_b".into()],
        loci.iter().map(|(w, ph)| vec![*w, ph[0], ph[1]]),
    )?;

    let column_minima: Vec<Value> = (0..omega.len())
        .map(|j| {
            let col = r.column(j);
            let best = col
                .iter()
                .enumerate()
                .filter(|(_, v)| v.is_finite())
                .min_by(|a, b| a.1.total_cmp(b.1));
            json!({
                "omega_rf": omega[j],
                "phi_rf": best.map(|(i, _)| phi[i]),
                "value": best.map(|(_, v)| *v),
            })
        })
        .collect();
    r.meta = json!({ "column_minima": column_minima });
    let meta = json!({
        "command": "landscape",
        "config": config_json(cfg),
        "result": sweep_json(&r),
        "column_minima": r.meta["column_minima"],
    });
    write_json(&out_file(out, "landscape.json")?, &meta)?;
    Ok(r)
}

/// Relative-error robustness sweep; writes `sweep.csv` and `sweep.json`.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<SweepResult> {
    let p = cfg.problem()?;
    let s = &cfg.sweep;
    let r = robustness_sweep(&p, s.parameter, s.span, s.points)?;
    write_rows(
        &out_file(out, "sweep.csv")?,
        cfg,
        &[r.axis1.name.clone(), "infidelity".into()],
        r.axis1.values.iter().zip(&r.values).map(|(d, v)| vec![*d, v[0]]),
    )?;
    let meta = json!({
        "command": "sweep",
        "config": config_json(cfg),
        "parameter": s.parameter,
        "result": sweep_json(&r),
        "values": r.values.iter().map(|v| v[0]).collect::<Vec<_>>(),
    });
    write_json(&out_file(out, "sweep.json")?, &meta)?;
    Ok(r)
}

/// The input config with the optimized parameters written back in.
pub fn optimized_config(cfg: &RunConfig, report: &OptimizationReport) -> Result<RunConfig> {
    let base = cfg.problem()?;
    let best = apply_report(&base, report)?;
    let mut next = cfg.clone();
    next.drive.raman_beat = AngularFrequency(best.dw);
    if let Envelope::PulseTrain {
        amps,
        width,
        rep_rate,
        t_start,
    } = &best.envelope
    {
        // config amplitudes are before the beam interference factor
        let built = cfg.envelope.build()?;
        let scale = base.envelope.peak() / built.peak();
        next.envelope = EnvelopeConfig::PulseTrain {
            amps: amps.iter().map(|a| AngularFrequency(a / scale)).collect(),
            width: Duration(*width),
            rep_rate: AngularFrequency(*rep_rate),
            t_start: Duration(*t_start),
        };
    }
    Ok(next)
}

/// Nelder–Mead over the configured target; writes `optimize.json` with the
/// full trace and `optimized.toml`, a config for the best point.
pub fn cmd_optimize(cfg: &RunConfig, out: &Path) -> Result<OptimizationReport> {
    let p = cfg.problem()?;
    let o = &cfg.optimize;
    let report = optimize(&p, o.target, &o.steps, &o.options())?;
    let next = optimized_config(cfg, &report)?;
    let meta = json!({
        "command": "optimize",
        "config": config_json(cfg),
        "report": report,
        "optimized_config": config_json(&next),
    });
    write_json(&out_file(out, "optimize.json")?, &meta)?;
    let toml_text = toml::to_string(&next.resolved())
        .map_err(|e| Error::Config(format!("cannot serialize optimized config: {e}")))?;
    let path = out_file(out, "optimized.toml")?;
    fs::write(&path, toml_text)?;
    log::info!(
        "best infidelity {:e} (init {:e}) after {} evaluations",
        report.best_infidelity,
        report.init_infidelity,
        report.evaluations
    );
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub stable: bool,
    pub stability_parameter: f64,
    pub secular_frequency: Option<f64>,
    pub fast_sdk: Option<crate::trap::FastSdkReport>,
    pub hierarchy: Option<crate::beams::HierarchyReport>,
    pub envelope_area: f64,
    pub envelope_duration: f64,
    pub envelope_peak: f64,
    pub envelope_bandwidth: f64,
    /// [θ/(2ω_aτ)]², meaningful for resonant constant pulses.
    pub backward_bound: f64,
    pub problems: Vec<String>,
}

/// Validity diagnostics; writes `check.json`. The report is written even
/// when the trap is unstable, in which case the error is returned after.
pub fn cmd_check(cfg: &RunConfig, out: &Path) -> Result<CheckReport> {
    let trap = crate::trap::TrapParams {
        omega_rf: cfg.trap.omega_rf.0,
        phi_rf: cfg.trap.phi_rf.0,
        a_z: cfg.trap.a_z,
        q_z: cfg.trap.q_z,
    };
    let envelope = cfg.envelope()?;
    let stability_parameter = trap.stability_parameter();
    let stable = trap.validate().is_ok();
    let mut problems = Vec::new();
    if !stable {
        problems.push(format!("unstable trap: a_z + q_z^2/2 = {stability_parameter}"));
    }
    let secular = if stable { Some(secular_frequency(&trap)?) } else { None };
    let fast_sdk = if stable {
        Some(validate_fast_sdk(&trap, envelope.duration(), cfg.check.fast_sdk_threshold)?)
    } else {
        None
    };
    if let Some(f) = &fast_sdk {
        if !f.fast {
            problems.push(format!("slow kick: omega_s * tau = {} >= {}", f.secular_phase, f.threshold));
        }
    }
    let pair = cfg.beam_pair()?;
    let hierarchy = match pair.detuning {
        Some(_) => Some(validate_hierarchy(
            &pair,
            envelope.bandwidth(),
            cfg.ion.omega_a.0,
            cfg.check.hierarchy_threshold,
        )?),
        None => None,
    };
    if hierarchy.as_ref().is_some_and(|h| !h.pass) {
        problems.push("frequency hierarchy violated".into());
    }
    let report = CheckReport {
        stable,
        stability_parameter,
        secular_frequency: secular,
        fast_sdk,
        hierarchy,
        envelope_area: envelope.area(),
        envelope_duration: envelope.duration(),
        envelope_peak: envelope.peak(),
        envelope_bandwidth: envelope.bandwidth(),
        backward_bound: backward_bound(envelope.area(), cfg.ion.omega_a.0, envelope.duration()),
        problems,
    };
    let meta = json!({
        "command": "check",
        "config": config_json(cfg),
        "report": report,
    });
    write_json(&out_file(out, "check.json")?, &meta)?;
    if !stable {
        return Err(crate::Error::UnstableTrap(stability_parameter));
    }
    Ok(report)
}
