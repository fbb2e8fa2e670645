//! Experiment configuration: TOML with preset inheritance, resolved into a
//! fully specified [`ExperimentConfig`].

use std::collections::HashSet;
use std::path::PathBuf;

use dcsk_swipt::montecarlo::ParamError;
use dcsk_swipt::theory::GaussHermiteRule;
use dcsk_swipt::{Baseline, Protocol, SystemParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::presets;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Ber,
    Delay,
}

/// One curve of a figure: a relay protocol or a baseline system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    P1,
    P2,
    Snr1,
    Snr2,
    ConvSd,
    ConvNoBufferSwipt,
    ConvDcskRelay,
}

impl Curve {
    pub fn as_str(self) -> &'static str {
        match self.system() {
            System::Relay(p) => p.as_str(),
            System::Baseline(b) => b.as_str(),
        }
    }

    pub fn system(self) -> System {
        match self {
            Curve::P1 => System::Relay(Protocol::P1),
            Curve::P2 => System::Relay(Protocol::P2),
            Curve::Snr1 => System::Relay(Protocol::Snr1),
            Curve::Snr2 => System::Relay(Protocol::Snr2),
            Curve::ConvSd => System::Baseline(Baseline::ConvSd),
            Curve::ConvNoBufferSwipt => System::Baseline(Baseline::ConvNoBufferSwipt),
            Curve::ConvDcskRelay => System::Baseline(Baseline::ConvDcskRelay),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum System {
    Relay(Protocol),
    Baseline(Baseline),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    SnrDb,
    Theta,
    Delta,
    DSr,
    BufferSize,
}

impl SweepVar {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVar::SnrDb => "snr_db",
            SweepVar::Theta => "theta",
            SweepVar::Delta => "delta",
            SweepVar::DSr => "d_sr",
            SweepVar::BufferSize => "buffer_size",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVar,
    pub values: Vec<f64>,
    /// Keeps d_sr + d_rd fixed when sweeping d_sr.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_distance: Option<f64>,
}

impl Sweep {
    /// Writes `x` into the swept field of `p`.
    pub fn apply(&self, p: &mut SystemParams, x: f64) {
        match self.variable {
            SweepVar::SnrDb => *p = p.clone().with_snr_db(x),
            SweepVar::Theta => p.theta = x,
            SweepVar::Delta => p.delta = x,
            SweepVar::DSr => {
                p.d_sr = x;
                if let Some(total) = self.total_distance {
                    p.d_rd = total - x;
                }
            }
            SweepVar::BufferSize => p.buffer_size = x as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub figure_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub metric: Metric,
    pub protocols: Vec<Curve>,
    /// P_S/N_0 of every point unless the sweep or series sets it.
    pub snr_db: f64,
    pub sweep: Sweep,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<Sweep>,
    pub trials: u64,
    pub slots: u64,
    pub seed: u64,
    pub quadrature_order: usize,
    /// Decision-trace rows written per protocol point; 0 disables traces.
    pub trace_slots: usize,
    pub output_dir: PathBuf,
    pub params: SystemParams,
}

fn default_figure_id() -> String {
    "custom".into()
}
fn default_metric() -> Metric {
    Metric::Ber
}
fn default_protocols() -> Vec<Curve> {
    vec![Curve::P1, Curve::P2]
}
fn default_snr() -> f64 {
    20.0
}
fn default_trials() -> u64 {
    4
}
fn default_slots() -> u64 {
    200_000
}
fn default_seed() -> u64 {
    1
}
fn default_order() -> usize {
    40
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    variable: SweepVar,
    values: Option<Vec<f64>>,
    /// [start, stop, step], stop included.
    range: Option<[f64; 3]>,
    total_distance: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    #[serde(default = "default_figure_id")]
    figure_id: String,
    #[serde(default = "default_metric")]
    metric: Metric,
    #[serde(default = "default_protocols")]
    protocols: Vec<Curve>,
    #[serde(default = "default_snr")]
    snr_db: f64,
    sweep: RawSweep,
    series: Option<RawSweep>,
    #[serde(default = "default_trials")]
    trials: u64,
    #[serde(default = "default_slots")]
    slots: u64,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_order")]
    quadrature_order: usize,
    #[serde(default)]
    trace_slots: usize,
    #[serde(default = "default_out")]
    output_dir: PathBuf,
    #[serde(default)]
    params: toml::Table,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub slots: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(o) = &self.output_dir {
            cfg.output_dir = o.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
            cfg.params.seed = s;
        }
        if let Some(s) = self.slots {
            cfg.slots = s;
            cfg.params.slots = s;
        }
    }
}

/// Deep merge: tables merge key by key, anything else is replaced. A sweep
/// grid given one way (values or range) replaces a grid given the other way.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => {
                if k == "sweep" || k == "series" {
                    if o.contains_key("values") || o.contains_key("range") {
                        b.remove("values");
                        b.remove("range");
                    }
                    if o.contains_key("variable") && o.get("variable") != b.get("variable") {
                        b.remove("total_distance");
                    }
                }
                merge(b, o);
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn parse_table(text: &str, origin: &str) -> Result<toml::Table, ConfigError> {
    text.parse::<toml::Table>().map_err(|e| ConfigError::Parse { origin: origin.into(), message: e.to_string() })
}

fn preset_table(name: &str, field: &str) -> Result<toml::Table, ConfigError> {
    let src = presets::source(name).ok_or_else(|| {
        invalid(field, format!("unknown preset {name:?}; expected one of {}", presets::NAMES.join(", ")))
    })?;
    parse_table(src, &format!("preset {name}"))
}

fn deserialize<T: serde::de::DeserializeOwned>(value: toml::Value, prefix: &str) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let field = match (prefix.is_empty(), path == ".") {
            (true, _) => path,
            (false, true) => prefix.to_string(),
            (false, false) => format!("{prefix}.{path}"),
        };
        invalid(field, e.into_inner().to_string())
    })
}

fn expand(raw: RawSweep, field: &str) -> Result<Sweep, ConfigError> {
    let values = match (raw.values, raw.range) {
        (Some(_), Some(_)) => return Err(invalid(field, "give either values or range, not both")),
        (None, None) => return Err(invalid(format!("{field}.values"), "missing sweep grid")),
        (Some(v), None) => v,
        (None, Some([start, stop, step])) => {
            if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
                return Err(invalid(format!("{field}.range"), "need start <= stop and step > 0"));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            if n > 100_000 {
                return Err(invalid(format!("{field}.range"), "more than 100000 points"));
            }
            // round away accumulated binary noise so grids print as typed
            (0..=n).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect()
        }
    };
    Ok(Sweep { variable: raw.variable, values, total_distance: raw.total_distance })
}

/// Resolves a merged table into a typed config (not yet validated).
fn resolve(table: toml::Table) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = deserialize(toml::Value::Table(table), "")?;
    let mut base =
        toml::Table::try_from(SystemParams::at_snr(raw.snr_db)).map_err(|e| invalid("params", e.to_string()))?;
    merge(&mut base, raw.params);
    let mut params: SystemParams = deserialize(toml::Value::Table(base), "params")?;
    params.slots = raw.slots;
    params.seed = raw.seed;
    Ok(ExperimentConfig {
        figure_id: raw.figure_id,
        preset: raw.preset,
        metric: raw.metric,
        protocols: raw.protocols,
        snr_db: raw.snr_db,
        sweep: expand(raw.sweep, "sweep")?,
        series: raw.series.map(|s| expand(s, "series")).transpose()?,
        trials: raw.trials,
        slots: raw.slots,
        seed: raw.seed,
        quadrature_order: raw.quadrature_order,
        trace_slots: raw.trace_slots,
        output_dir: raw.output_dir,
        params,
    })
}

/// Parses config text, applies its preset (or `preset` when the text names
/// none) and validates the result. Returns the config and any warnings.
pub fn load_str(
    text: &str,
    origin: &str,
    preset: Option<&str>,
) -> Result<(ExperimentConfig, Vec<String>), ConfigError> {
    let user = parse_table(text, origin)?;
    let named = match user.get("preset") {
        Some(toml::Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(invalid("preset", "must be a string")),
        None => None,
    };
    let mut table = match (named.as_deref(), preset) {
        (Some(a), Some(b)) if a != b => {
            return Err(invalid("preset", format!("file names {a:?} but --preset gave {b:?}")));
        }
        (Some(name), _) | (None, Some(name)) => {
            let mut t = preset_table(name, "preset")?;
            t.insert("preset".into(), toml::Value::String(name.into()));
            t
        }
        (None, None) => toml::Table::new(),
    };
    merge(&mut table, user);
    let cfg = resolve(table)?;
    let warnings = validate(&cfg)?;
    Ok((cfg, warnings))
}

/// Full default config of a named preset.
pub fn from_preset(name: &str) -> Result<(ExperimentConfig, Vec<String>), ConfigError> {
    load_str("", &format!("preset {name}"), Some(name))
}

/// Reads the `config` object of a run manifest.
pub fn from_manifest_str(text: &str, origin: &str) -> Result<(ExperimentConfig, Vec<String>), ConfigError> {
    #[derive(Deserialize)]
    struct Wrapper {
        config: ExperimentConfig,
    }
    let de = &mut serde_json::Deserializer::from_str(text);
    let w: Wrapper = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        ConfigError::Parse { origin: origin.into(), message: format!("{field}: {}", e.into_inner()) }
    })?;
    let warnings = validate(&w.config)?;
    Ok((w.config, warnings))
}

fn param_field(e: &ParamError) -> String {
    match e {
        ParamError::Invalid { field, .. } => format!("params.{field}"),
        ParamError::Channel(_) => "params.taps".into(),
        ParamError::Swipt(_) => "params".into(),
    }
}

fn param_message(e: &ParamError) -> String {
    match e {
        ParamError::Invalid { message, .. } => message.clone(),
        other => other.to_string(),
    }
}

fn check_grid(s: &Sweep, field: &str) -> Result<(), ConfigError> {
    if s.values.is_empty() {
        return Err(invalid(format!("{field}.values"), "sweep grid is empty"));
    }
    for (i, v) in s.values.iter().enumerate() {
        if !v.is_finite() {
            return Err(invalid(format!("{field}.values[{i}]"), format!("{v} is not finite")));
        }
        if s.variable == SweepVar::BufferSize && (*v < 1.0 || v.fract() != 0.0) {
            return Err(invalid(format!("{field}.values[{i}]"), format!("buffer size {v} is not a positive integer")));
        }
    }
    let up = s.values.windows(2).all(|w| w[1] > w[0]);
    let down = s.values.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(invalid(format!("{field}.values"), "grid must be strictly monotone"));
    }
    match (s.variable, s.total_distance) {
        (_, None) => {}
        (SweepVar::DSr, Some(t)) if t > 0.0 && t.is_finite() => {}
        (SweepVar::DSr, Some(t)) => {
            return Err(invalid(format!("{field}.total_distance"), format!("{t} must be positive")))
        }
        (_, Some(_)) => {
            return Err(invalid(format!("{field}.total_distance"), "only meaningful when sweeping d_sr"));
        }
    }
    Ok(())
}

/// Checks a resolved config. Degenerate but legal settings come back as
/// warnings.
pub fn validate(cfg: &ExperimentConfig) -> Result<Vec<String>, ConfigError> {
    let mut warnings = Vec::new();
    if cfg.figure_id.is_empty() || !cfg.figure_id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        return Err(invalid("figure_id", "must be non-empty and use only [A-Za-z0-9_-]"));
    }
    if cfg.protocols.is_empty() {
        return Err(invalid("protocols", "no protocol selected"));
    }
    let mut seen = HashSet::new();
    for (i, c) in cfg.protocols.iter().enumerate() {
        if !seen.insert(c) {
            return Err(invalid(format!("protocols[{i}]"), format!("{} listed twice", c.as_str())));
        }
        if cfg.metric == Metric::Delay && matches!(c.system(), System::Baseline(_)) {
            return Err(invalid(format!("protocols[{i}]"), format!("{} has no buffer delay", c.as_str())));
        }
    }
    if cfg.trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    if cfg.metric == Metric::Delay && cfg.trials < 2 {
        return Err(invalid("trials", "delay error bars need at least 2 trials"));
    }
    if cfg.slots < cfg.trials {
        return Err(invalid("slots", format!("{} slots cannot be split over {} trials", cfg.slots, cfg.trials)));
    }
    if !cfg.snr_db.is_finite() {
        return Err(invalid("snr_db", "must be finite"));
    }
    GaussHermiteRule::new(cfg.quadrature_order).map_err(|e| invalid("quadrature_order", e.to_string()))?;

    check_grid(&cfg.sweep, "sweep")?;
    if let Some(series) = &cfg.series {
        check_grid(series, "series")?;
        if series.variable == cfg.sweep.variable {
            return Err(invalid("series.variable", "must differ from sweep.variable"));
        }
    }
    cfg.params.validate().map_err(|e| invalid(param_field(&e), param_message(&e)))?;
    if cfg.params.delta == 0.0 {
        warnings.push("params.delta = 0: S->R wins every energy comparison".to_string());
    }

    let series: Vec<Option<(usize, f64)>> = match &cfg.series {
        Some(s) => s.values.iter().copied().enumerate().map(Some).collect(),
        None => vec![None],
    };
    for sv in &series {
        let mut base = cfg.params.clone();
        if let (Some(s), Some((_, x))) = (&cfg.series, sv) {
            s.apply(&mut base, *x);
        }
        for (i, &x) in cfg.sweep.values.iter().enumerate() {
            let mut p = base.clone();
            cfg.sweep.apply(&mut p, x);
            let field = match sv {
                Some((j, _)) => format!("sweep.values[{i}] at series.values[{j}]"),
                None => format!("sweep.values[{i}]"),
            };
            p.validate().map_err(|e| invalid(field.clone(), param_message(&e)))?;
            if p.delta == 0.0 && cfg.params.delta != 0.0 {
                let w = format!("{field}: delta = 0, S->R wins every energy comparison");
                if !warnings.contains(&w) {
                    warnings.push(w);
                }
            }
        }
    }
    Ok(warnings)
}
