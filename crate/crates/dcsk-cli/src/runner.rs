//! Sweep execution: points fan out over a rayon pool, results funnel into a
//! single writer thread that emits rows in a fixed order.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::thread;

use dcsk_swipt::linksel::write_trace_csv;
use dcsk_swipt::montecarlo::{baseline_trial, protocol_trial, run_protocol_traced, ParamError, Tally};
use dcsk_swipt::theory::{ber_protocol1, ber_protocol2, delay_protocol1, delay_protocol2, GaussHermiteRule};
use dcsk_swipt::{Protocol, RunResult, SystemParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Curve, ExperimentConfig, Metric, System};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("worker pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.display().to_string(), source }
}

/// One resolved (series, sweep) grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<f64>,
    pub sweep: f64,
    pub seed: u64,
    pub params: SystemParams,
}

/// Grid points in series-major order. Seeds are `seed + index`, so every
/// curve at a point sees the same random streams.
pub fn points(cfg: &ExperimentConfig) -> Vec<PointSpec> {
    let series: Vec<Option<f64>> = match &cfg.series {
        Some(s) => s.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut out = Vec::with_capacity(series.len() * cfg.sweep.values.len());
    for sv in series {
        let mut base = cfg.params.clone();
        if let (Some(s), Some(x)) = (&cfg.series, sv) {
            s.apply(&mut base, x);
        }
        for &x in &cfg.sweep.values {
            let mut p = base.clone();
            cfg.sweep.apply(&mut p, x);
            let seed = cfg.seed.wrapping_add(out.len() as u64);
            p.seed = seed;
            p.slots = cfg.slots;
            out.push(PointSpec { series: sv, sweep: x, seed, params: p });
        }
    }
    out
}

/// One CSV row. Undefined numbers are written as empty cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub sweep: f64,
    pub protocol: String,
    pub sim: Option<f64>,
    pub stderr: Option<f64>,
    pub theory: Option<f64>,
    pub seed: u64,
    pub slots: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub protocol: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<f64>,
    pub sweep: f64,
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub config: ExperimentConfig,
    pub points: Vec<PointSpec>,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub rows: Vec<CurvePoint>,
    pub failures: Vec<Failure>,
}

pub fn curve_label(cfg: &ExperimentConfig, curve: Curve, series: Option<f64>) -> String {
    match (&cfg.series, series) {
        (Some(s), Some(x)) => format!("{} ({}={})", curve.as_str(), s.variable.as_str(), x),
        _ => curve.as_str().to_string(),
    }
}

struct Outcome {
    row: CurvePoint,
    failures: Vec<Failure>,
    notes: Vec<String>,
    trace: Option<Vec<u8>>,
}

fn split_trials(p: &SystemParams, trials: u64) -> Vec<SystemParams> {
    let per = p.slots / trials;
    let extra = p.slots % trials;
    (0..trials)
        .map(|t| {
            let mut q = p.clone();
            q.slots = per + u64::from(t < extra);
            q
        })
        .collect()
}

/// (mean, standard error) of the requested metric.
fn simulate(p: &SystemParams, curve: Curve, metric: Metric, trials: u64) -> Result<(f64, f64), ParamError> {
    let mut tallies: Vec<Tally> = Vec::with_capacity(trials as usize);
    let (silent, delay_terms) = match curve.system() {
        System::Relay(proto) => (proto.silent_boundaries(), true),
        System::Baseline(_) => (false, false),
    };
    for (t, q) in split_trials(p, trials).iter().enumerate() {
        tallies.push(match curve.system() {
            System::Relay(proto) => protocol_trial(q, proto, t as u64)?,
            System::Baseline(b) => baseline_trial(q, b, t as u64)?,
        });
    }
    let mut merged = tallies[0].clone();
    for t in &tallies[1..] {
        merged.merge(t);
    }
    let total = RunResult::from_tally(merged, silent, delay_terms);
    Ok(match metric {
        Metric::Ber => {
            // with no observed error the packet spread is zero; one error in
            // the observed bits is the smallest resolvable step
            let floor = if total.tally.bits > 0 { 1.0 / total.tally.bits as f64 } else { f64::NAN };
            (total.end_to_end_ber, total.confidence.max(floor))
        }
        Metric::Delay => {
            let per: Vec<f64> =
                tallies.into_iter().map(|t| RunResult::from_tally(t, silent, delay_terms).avg_delay_slots).collect();
            let n = per.len() as f64;
            let mean = per.iter().sum::<f64>() / n;
            let var = per.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (total.avg_delay_slots, (var / n).sqrt())
        }
    })
}

fn theory(
    p: &SystemParams,
    curve: Curve,
    metric: Metric,
    rule: &GaussHermiteRule,
) -> Option<Result<(f64, Vec<String>), String>> {
    let r = match (curve, metric) {
        (Curve::P1, Metric::Ber) => ber_protocol1(p, rule).map(|t| (t.ber_bound, t.warnings)),
        (Curve::P2, Metric::Ber) => ber_protocol2(p, rule).map(|t| (t.ber_bound, t.warnings)),
        (Curve::P1, Metric::Delay) => delay_protocol1(p).map(|d| (d.total, Vec::new())),
        (Curve::P2, Metric::Delay) => delay_protocol2(p).map(|d| (d.total, Vec::new())),
        _ => return None,
    };
    Some(r.map_err(|e| e.to_string()))
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn evaluate(cfg: &ExperimentConfig, point: &PointSpec, curve: Curve, rule: &GaussHermiteRule) -> Outcome {
    let label = curve_label(cfg, curve, point.series);
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    let fail = |stage: &str, message: String| Failure {
        protocol: label.clone(),
        series: point.series,
        sweep: point.sweep,
        stage: stage.into(),
        message,
    };
    let (sim, stderr) = match simulate(&point.params, curve, cfg.metric, cfg.trials) {
        Ok((m, s)) => {
            if !m.is_finite() {
                failures.push(fail("simulation", "no packets delivered; metric undefined".into()));
            }
            (finite(m), finite(m).and(finite(s)))
        }
        Err(e) => {
            failures.push(fail("simulation", e.to_string()));
            (None, None)
        }
    };
    let theory = match theory(&point.params, curve, cfg.metric, rule) {
        None => None,
        Some(Ok((v, warnings))) => {
            notes.extend(warnings.into_iter().map(|w| format!("{label} at {}: {w}", point.sweep)));
            finite(v)
        }
        Some(Err(e)) => {
            failures.push(fail("theory", e));
            None
        }
    };
    let trace = match curve.system() {
        System::Relay(proto) if cfg.trace_slots > 0 => {
            trace_bytes(&point.params, proto, cfg.trace_slots).map_err(|e| failures.push(fail("trace", e))).ok()
        }
        _ => None,
    };
    Outcome {
        row: CurvePoint {
            sweep: point.sweep,
            protocol: label,
            sim,
            stderr,
            theory,
            seed: point.seed,
            slots: point.params.slots,
        },
        failures,
        notes,
        trace,
    }
}

fn trace_bytes(p: &SystemParams, proto: Protocol, slots: usize) -> Result<Vec<u8>, String> {
    let mut q = p.clone();
    q.slots = slots as u64;
    let (_, rows) = run_protocol_traced(&q, proto, slots).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    write_trace_csv(&mut out, &rows).map_err(|e| e.to_string())?;
    Ok(out)
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn trace_name(figure: &str, label: &str, index: usize) -> String {
    let mut clean = String::with_capacity(label.len());
    for c in label.chars() {
        if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
            clean.push(c);
        } else if !clean.ends_with('_') {
            clean.push('_');
        }
    }
    format!("{figure}_{}_{index:03}.csv", clean.trim_end_matches('_'))
}

enum Message {
    Done(usize, Outcome),
}

/// Runs every (point, curve) pair and writes `<figure_id>.csv`,
/// `<figure_id>.manifest.json` and, when enabled, decision traces.
pub fn run_experiment(cfg: &ExperimentConfig, warnings: &[String], workers: usize) -> Result<RunSummary, RunError> {
    let out_dir = cfg.output_dir.clone();
    fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    let trace_dir = out_dir.join("traces");
    if cfg.trace_slots > 0 {
        fs::create_dir_all(&trace_dir).map_err(io_err(&trace_dir))?;
    }
    let csv_path = out_dir.join(format!("{}.csv", cfg.figure_id));
    let manifest_path = out_dir.join(format!("{}.manifest.json", cfg.figure_id));

    let pts = points(cfg);
    let n_sweep = cfg.sweep.values.len();
    let n_curves = cfg.protocols.len();
    // rows ordered series, then curve, then sweep value
    let jobs: Vec<(usize, usize)> = (0..pts.len() / n_sweep)
        .flat_map(|s| (0..n_curves).flat_map(move |c| (0..n_sweep).map(move |i| (s * n_sweep + i, c))))
        .collect();
    let rule = GaussHermiteRule::new(cfg.quadrature_order).map_err(|e| RunError::Pool(e.to_string()))?;

    let (tx, rx) = mpsc::channel::<Message>();
    let writer = {
        let csv_path = csv_path.clone();
        let trace_dir = trace_dir.clone();
        let figure = cfg.figure_id.clone();
        let total = jobs.len();
        thread::spawn(move || -> Result<Vec<Outcome>, RunError> {
            let file = fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
            let mut w = csv::Writer::from_writer(io::BufWriter::new(file));
            let csv_err = |e: csv::Error| RunError::Io { path: csv_path.display().to_string(), source: e.into() };
            w.write_record(["sweep", "protocol", "sim", "stderr", "theory"]).map_err(csv_err)?;
            let mut pending = BTreeMap::new();
            let mut done = Vec::with_capacity(total);
            for Message::Done(idx, outcome) in rx {
                pending.insert(idx, outcome);
                while let Some(o) = pending.remove(&done.len()) {
                    let r = &o.row;
                    w.write_record([
                        r.sweep.to_string(),
                        r.protocol.clone(),
                        cell(r.sim),
                        cell(r.stderr),
                        cell(r.theory),
                    ])
                    .map_err(csv_err)?;
                    if let Some(bytes) = &o.trace {
                        let path = trace_dir.join(trace_name(&figure, &r.protocol, done.len() % n_sweep));
                        fs::write(&path, bytes).map_err(io_err(&path))?;
                    }
                    done.push(o);
                }
            }
            w.flush().map_err(|e| RunError::Io { path: csv_path.display().to_string(), source: e })?;
            Ok(done)
        })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    pool.install(|| {
        jobs.par_iter().enumerate().for_each_with(tx, |tx, (idx, &(pi, ci))| {
            let outcome = evaluate(cfg, &pts[pi], cfg.protocols[ci], &rule);
            log::debug!("{} at {} done", outcome.row.protocol, outcome.row.sweep);
            // the writer only hangs up after an I/O error, which join() reports
            let _ = tx.send(Message::Done(idx, outcome));
        });
    });
    let outcomes = writer.join().map_err(|_| RunError::Pool("writer thread panicked".into()))??;

    let mut notes: Vec<String> = warnings.to_vec();
    let mut failures = Vec::new();
    let mut rows = Vec::with_capacity(outcomes.len());
    let mut outputs = vec![file_name(&csv_path)];
    for (k, o) in outcomes.into_iter().enumerate() {
        notes.extend(o.notes);
        failures.extend(o.failures);
        if o.trace.is_some() {
            outputs.push(format!("traces/{}", trace_name(&cfg.figure_id, &o.row.protocol, k % n_sweep)));
        }
        rows.push(o.row);
    }
    for f in &failures {
        log::warn!("{} at {} ({}): {}", f.protocol, f.sweep, f.stage, f.message);
    }
    let manifest = Manifest {
        tool: format!("dcsk-sim {}", env!("CARGO_PKG_VERSION")),
        config: cfg.clone(),
        points: pts,
        outputs,
        warnings: notes,
        failures: failures.clone(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| RunError::Io { path: manifest_path.display().to_string(), source: e.into() })?;
    text.push('\n');
    fs::write(&manifest_path, text).map_err(io_err(&manifest_path))?;
    Ok(RunSummary { csv: csv_path, manifest: manifest_path, rows, failures })
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}
