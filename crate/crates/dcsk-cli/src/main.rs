use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dcsk_cli::config::{self, ConfigError, Overrides};
use dcsk_cli::runner::run_experiment;

/// Reproduce BER and delay curves of the buffer-aided DCSK-SWIPT relay.
#[derive(Parser, Debug)]
#[command(name = "dcsk-sim", version)]
struct Args {
    /// TOML experiment config, or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset (fig4 ... fig11); the base for --config when it names none.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory (overrides output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweep points; defaults to the available cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Simulated slots per point (overrides slots).
    #[arg(long)]
    slots: Option<u64>,
}

fn load(args: &Args) -> Result<(config::ExperimentConfig, Vec<String>), ConfigError> {
    let overrides =
        Overrides { preset: args.preset.clone(), output_dir: args.out.clone(), seed: args.seed, slots: args.slots };
    let (mut cfg, _) = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
            let origin = path.display().to_string();
            if path.extension().is_some_and(|e| e == "json") {
                config::from_manifest_str(&text, &origin)?
            } else {
                config::load_str(&text, &origin, overrides.preset.as_deref())?
            }
        }
        (None, Some(name)) => config::from_preset(name)?,
        (None, None) => {
            return Err(ConfigError::Invalid { field: "--config".into(), message: "pass --config or --preset".into() })
        }
    };
    overrides.apply(&mut cfg);
    let warnings = config::validate(&cfg)?;
    Ok((cfg, warnings))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info,dcsk_swipt=error")).init();
    let args = Args::parse();
    let (cfg, warnings) = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            log::error!("config: {e}");
            return ExitCode::from(2);
        }
    };
    for w in &warnings {
        log::warn!("{w}");
    }
    let workers = args.workers.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    log::info!(
        "{}: {} points x {} curves, {} slots each, {} workers",
        cfg.figure_id,
        cfg.sweep.values.len() * cfg.series.as_ref().map_or(1, |s| s.values.len()),
        cfg.protocols.len(),
        cfg.slots,
        workers
    );
    match run_experiment(&cfg, &warnings, workers) {
        Ok(summary) => {
            if !summary.failures.is_empty() {
                log::warn!("{} point(s) failed; see {}", summary.failures.len(), summary.manifest.display());
            }
            log::info!("wrote {} and {}", summary.csv.display(), summary.manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(1)
        }
    }
}
