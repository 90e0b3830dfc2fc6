//! The `cremer` command line.

pub mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::ensemble::{load_model, save_model, train_cremer};
use crate::error::{Error, Result};
use crate::eval::{evaluate, predict_all, roc_points};
use crate::harness::{
    run_repeated, split_dataset, weight_sweep, Retrainer, MISSION_END, MISSION_START,
};
use crate::ingest::{
    parse_event_log, parse_timestamp, read_dataset, timeline_stats, write_dataset, write_event_log,
    EventLog,
};
use crate::persist::write_atomic;
use crate::resample::undersample;
use crate::rng::{derive_seed, stream};
use crate::synth::{
    generate_test_positives, poisson_disk_exact, synthesize_negatives, uniform_sample,
    AltitudeModel, LatLon, SamplingMethod, SynthesisPlan,
};
use crate::types::{normalize_longitude, GeoSample};
use config::{validate_config, CliConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "CREMER_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "cremer",
    version,
    about = "Predict single event upsets from orbital position"
)]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config file and CREMER_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Log progress and echo the effective config.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize negative samples for an event log.
    Synth(SynthArgs),
    /// Balance a labeled dataset by cluster-centroid undersampling.
    Resample(ResampleArgs),
    /// Train the voting model on a labeled dataset.
    Train(TrainArgs),
    /// Score one position.
    Predict(PredictArgs),
    /// Evaluate a model on a labeled dataset.
    Eval(EvalArgs),
    /// Sweep the positive class weight.
    Sweep(SweepArgs),
    /// Repeated split/train/evaluate runs.
    Bench(BenchArgs),
    /// Retrain periodically from a growing event log.
    Watch(WatchArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Event log CSV (timestamp,latitude_deg,longitude_deg,altitude_km).
    #[arg(long, conflicts_with = "demo")]
    events: Option<PathBuf>,
    /// Generate a synthetic hotspot of N events instead of reading a log.
    #[arg(long, value_name = "N")]
    demo: Option<usize>,
    /// Write the generated demo events here.
    #[arg(long, requires = "demo")]
    events_out: Option<PathBuf>,
    /// poisson_disk or uniform.
    #[arg(long)]
    method: Option<SamplingMethod>,
    /// Number of negatives; defaults to the scrub-derived count.
    #[arg(long)]
    count: Option<usize>,
    /// Poisson-disk radius in degrees; derived from the count when omitted.
    #[arg(long)]
    radius: Option<f64>,
    /// Prepend the events (label 1) to the output.
    #[arg(long)]
    with_events: bool,
    /// Output dataset CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write poisson_disk.csv and uniform.csv point sets to this directory.
    #[arg(long, value_name = "DIR")]
    emit_plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ResampleArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Cluster on z-scored features.
    #[arg(long)]
    standardize: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    positive_class_weight: Option<f64>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    lat: f64,
    #[arg(long, allow_negative_numbers = true)]
    lon: f64,
    /// Altitude in km.
    #[arg(long)]
    alt: f64,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write ROC points (fpr,tpr) to this CSV.
    #[arg(long, value_name = "CSV")]
    emit_roc: Option<PathBuf>,
    /// Include wall-clock timings in the JSON report.
    #[arg(long)]
    with_timing: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "100,50,10,5,1,0.1")]
    weights: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    runs: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 100)]
    runs: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall-clock timings in the JSON report.
    #[arg(long)]
    with_timing: bool,
}

#[derive(Debug, Args)]
struct WatchArgs {
    #[arg(long)]
    events: Option<PathBuf>,
    /// Minutes between retrains.
    #[arg(long, default_value_t = 60.0)]
    period: f64,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Stop after this many cycles.
    #[arg(long)]
    max_cycles: Option<u64>,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        Error::Output { .. } => EXIT_RUNTIME,
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::EmptyLog(_)
        | Error::DegenerateBounds { .. }
        | Error::Domain(_)
        | Error::Infeasible(_)
        | Error::CorruptModel(_)
        | Error::ModelVersion { .. }
        | Error::ModelSchema { .. } => EXIT_DATA,
    }
}

fn usage_error(key: &str, constraint: &str) -> Error {
    Error::Config(vec![crate::error::Violation {
        key: key.into(),
        value: String::new(),
        constraint: constraint.into(),
    }])
}

fn required(flag: Option<PathBuf>, fallback: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or_else(|| fallback.clone()).ok_or_else(|| {
        usage_error(
            name,
            &format!("--{name} is required (or set it under paths in the config)"),
        )
    })
}

/// Flags over environment over file over defaults.
fn load_config(cli: &Cli) -> Result<CliConfig> {
    let mut cfg = match &cli.config {
        Some(p) => validate_config(p)?,
        None => CliConfig::default(),
    };
    if let Ok(s) = std::env::var(SEED_ENV) {
        cfg.run.rng_seed = s.trim().parse().map_err(|_| {
            usage_error(
                SEED_ENV,
                &format!("{SEED_ENV}={s:?} is not an unsigned integer"),
            )
        })?;
    }
    if let Some(seed) = cli.seed {
        cfg.run.rng_seed = seed;
    }
    Ok(cfg)
}

/// Runs the command line and returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli)?;
    eprintln!("cremer: seed {}", cfg.run.rng_seed);
    echo(&cfg, cli.verbose);
    match cli.command {
        Command::Synth(a) => synth(a, &cfg),
        Command::Resample(a) => {
            cfg.run.resample.standardize |= a.standardize;
            resample(a, &cfg)
        }
        Command::Train(a) => {
            if let Some(w) = a.positive_class_weight {
                cfg.run.positive_class_weight = w;
            }
            cfg.run.validate()?;
            train(a, &cfg)
        }
        Command::Predict(a) => predict(a, &cfg),
        Command::Eval(a) => eval(a, &cfg),
        Command::Sweep(a) => sweep(a, &cfg),
        Command::Bench(a) => bench(a, &cfg),
        Command::Watch(a) => watch(a, &cfg),
    }
}

fn echo(cfg: &CliConfig, verbose: bool) {
    if verbose {
        eprintln!(
            "{}",
            serde_json::to_string_pretty(cfg).expect("config serializes")
        );
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Error::Output {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        writeln!(w).map_err(|e| Error::io(path, e))
    })
}

fn write_points(path: &Path, points: &[LatLon]) -> Result<()> {
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::Output {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        csv.write_record(["latitude_deg", "longitude_deg"])
            .map_err(err)?;
        for (lat, lon) in points {
            csv.write_record([lat.to_string(), lon.to_string()])
                .map_err(err)?;
        }
        csv.flush().map_err(|e| Error::io(path, e))
    })
}

fn synth(a: SynthArgs, cfg: &CliConfig) -> Result<()> {
    let seed = cfg.run.rng_seed;
    let out = required(a.out, &cfg.paths.negatives_out, "out")?;
    let log: EventLog = match (a.demo, &a.events) {
        (Some(n), _) => {
            let start = parse_timestamp(MISSION_START).expect("valid constant");
            let end = parse_timestamp(MISSION_END).expect("valid constant");
            generate_test_positives(
                n,
                (-30.0, -40.0),
                15.0,
                AltitudeModel::new(600.0, 5.0)?,
                (start, end),
                derive_seed(seed, stream::POSITIVES, 0),
            )?
        }
        (None, events) => parse_event_log(&required(events.clone(), &cfg.paths.events, "events")?)?,
    };
    if let Some(p) = &a.events_out {
        write_event_log(&log, p)?;
    }
    let stats = timeline_stats(&log, cfg.run.scrub_interval_minutes)?;
    log::info!(
        "{} events over {} minutes: {} scrubs, {} negatives",
        log.len(),
        stats.span_minutes,
        stats.scrub_count,
        stats.negative_count
    );
    let count = a.count.unwrap_or(stats.negative_count as usize);
    if count == 0 {
        return Err(Error::Infeasible(
            "the event span leaves no negative scrubs; pass --count".into(),
        ));
    }
    let method = a.method.unwrap_or(cfg.run.synthesis.method);
    let mut plan = SynthesisPlan::fitted(&log, count, method)?;
    plan.disk_radius = a.radius;
    plan.max_attempts_per_point = cfg.run.synthesis.max_attempts_per_point as usize;
    let neg_seed = derive_seed(seed, stream::NEGATIVES, 0);
    let negatives = synthesize_negatives(&log, &plan, neg_seed)?;
    let data = if a.with_events {
        log.to_dataset().concat(&negatives)
    } else {
        negatives
    };
    write_dataset(&data, &out)?;
    eprintln!("wrote {} rows to {}", data.len(), out.display());

    if let Some(dir) = a.emit_plot_data {
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let (disk, r) = poisson_disk_exact(
            &plan.bounds,
            count,
            a.radius,
            plan.max_attempts_per_point,
            neg_seed,
        )?;
        let uniform = uniform_sample(&plan.bounds, count, neg_seed)?;
        write_points(&dir.join("poisson_disk.csv"), &disk)?;
        write_points(&dir.join("uniform.csv"), &uniform)?;
        log::info!("plot data in {} (disk radius {r})", dir.display());
    }
    Ok(())
}

fn resample(a: ResampleArgs, cfg: &CliConfig) -> Result<()> {
    let data = read_dataset(&a.input)?;
    let balanced = undersample(
        &data,
        derive_seed(cfg.run.rng_seed, stream::UNDERSAMPLE, 1),
        &cfg.run.resample,
    )?;
    write_dataset(&balanced, &a.out)?;
    eprintln!(
        "{} rows ({} positive) -> {} rows ({} positive)",
        data.len(),
        data.positives(),
        balanced.len(),
        balanced.positives()
    );
    Ok(())
}

fn train(a: TrainArgs, cfg: &CliConfig) -> Result<()> {
    let out = required(a.out, &cfg.paths.model, "out")?;
    let data = read_dataset(&a.data)?;
    let model = train_cremer(&data, &cfg.run)?;
    save_model(&model, &out)?;
    eprintln!(
        "trained on {} balanced rows in {:.3} s; model written to {}",
        model.metadata.train_samples,
        model.metadata.train_seconds,
        out.display()
    );
    Ok(())
}

fn predict(a: PredictArgs, cfg: &CliConfig) -> Result<()> {
    let model = load_model(&required(a.model, &cfg.paths.model, "model")?)?;
    let lon = normalize_longitude(a.lon)?;
    let epoch = chrono::DateTime::UNIX_EPOCH;
    let sample = GeoSample::new(epoch, a.lat, lon, a.alt)?;
    let (label, p) = crate::ensemble::predict(&model, &sample);
    println!("{label},{p}");
    Ok(())
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| x.to_string())
}

fn eval(a: EvalArgs, cfg: &CliConfig) -> Result<()> {
    let model = load_model(&required(a.model, &cfg.paths.model, "model")?)?;
    let data = read_dataset(&a.data)?;
    let report = evaluate(&model, &data)?;
    if let Some(t) = &report.timing {
        eprintln!(
            "prediction latency {:.3} us/sample",
            t.predict_micros_per_sample
        );
    }
    println!(
        "recall {} precision {} auroc {}",
        fmt_metric(report.recall),
        fmt_metric(report.precision),
        fmt_metric(report.auroc)
    );
    if let Some(path) = &a.emit_roc {
        let (_, probs, _) = predict_all(&model, &data);
        let points = roc_points(data.labels(), &probs)?;
        write_atomic(path, |w| {
            let mut csv = csv::Writer::from_writer(w);
            let err = |e: csv::Error| Error::Output {
                path: path.clone(),
                message: e.to_string(),
            };
            csv.write_record(["fpr", "tpr"]).map_err(err)?;
            for (x, y) in &points {
                csv.write_record([x.to_string(), y.to_string()])
                    .map_err(err)?;
            }
            csv.flush().map_err(|e| Error::io(path, e))
        })?;
    }
    let out = a
        .out
        .or_else(|| cfg.paths.reports_dir.as_ref().map(|d| d.join("eval.json")));
    if let Some(out) = out {
        let report = if a.with_timing {
            report
        } else {
            report.without_timing()
        };
        write_json(&out, &report)?;
    }
    Ok(())
}

fn sweep(a: SweepArgs, cfg: &CliConfig) -> Result<()> {
    let data = read_dataset(&a.data)?;
    let result = weight_sweep(&data, &cfg.run, &a.weights, a.runs)?;
    write_atomic(&a.out, |w| {
        let mut csv = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::Output {
            path: a.out.clone(),
            message: e.to_string(),
        };
        csv.write_record(["weight", "recall", "precision", "auroc"])
            .map_err(err)?;
        for r in &result.rows {
            csv.write_record([
                r.weight.to_string(),
                fmt_metric(r.mean_recall),
                fmt_metric(r.mean_precision),
                fmt_metric(r.mean_auroc),
            ])
            .map_err(err)?;
        }
        csv.flush().map_err(|e| Error::io(&a.out, e))
    })?;
    for r in &result.rows {
        println!(
            "{:>8} {:>22} {:>22} {:>22}",
            r.weight,
            fmt_metric(r.mean_recall),
            fmt_metric(r.mean_precision),
            fmt_metric(r.mean_auroc)
        );
    }
    Ok(())
}

fn bench(a: BenchArgs, cfg: &CliConfig) -> Result<()> {
    let data = read_dataset(&a.data)?;
    // Fail on unsplittable data before any run starts.
    split_dataset(&data, cfg.run.split_fraction, cfg.run.rng_seed)?;
    let report = run_repeated(&data, &cfg.run, a.runs)?;
    if let Some(t) = &report.timing {
        eprintln!(
            "mean train {:.3} s, mean prediction {:.3} us/sample",
            t.mean_train_seconds, t.mean_predict_micros_per_sample
        );
    }
    println!(
        "recall {} (sd {}) precision {} (sd {}) auroc {} (sd {})",
        fmt_metric(report.recall.mean),
        fmt_metric(report.recall.std),
        fmt_metric(report.precision.mean),
        fmt_metric(report.precision.std),
        fmt_metric(report.auroc.mean),
        fmt_metric(report.auroc.std)
    );
    let out = a
        .out
        .or_else(|| cfg.paths.reports_dir.as_ref().map(|d| d.join("bench.json")));
    if let Some(out) = out {
        let report = if a.with_timing {
            report
        } else {
            report.without_timing()
        };
        write_json(&out, &report)?;
    }
    Ok(())
}

fn watch(a: WatchArgs, cfg: &CliConfig) -> Result<()> {
    if !(a.period.is_finite() && a.period >= 0.0) {
        return Err(usage_error(
            "period",
            "--period must be a non-negative number of minutes",
        ));
    }
    let retrainer = Retrainer {
        events: required(a.events, &cfg.paths.events, "events")?,
        model: required(a.model, &cfg.paths.model, "model")?,
        config: cfg.run.clone(),
    };
    let stop = AtomicBool::new(false);
    let cycles = retrainer.run(
        Duration::from_secs_f64(a.period * 60.0),
        a.max_cycles,
        &stop,
    );
    eprintln!("{cycles} cycle(s) run");
    Ok(())
}
