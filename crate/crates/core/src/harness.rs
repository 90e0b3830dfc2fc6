//! Experiment orchestration: stratified splits, repeated runs, the class
//! weight sweep, timing and the periodic retrain loop.

use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::ensemble::{save_model, train_cremer, VotingModel};
use crate::error::{Error, Result};
use crate::eval::{evaluate, predict_all, Timing};
use crate::ingest::{parse_event_log, parse_timestamp, timeline_stats, EventLog};
use crate::rng::{derive_seed, derived_rng, stream};
use crate::synth::{generate_test_positives, synthesize_negatives, AltitudeModel, SynthesisPlan};
use crate::types::{LabeledDataset, RunConfig};

pub const REPORT_FORMAT_VERSION: u64 = 1;

/// Stratified split. Each class keeps `round(fraction · count)` rows for
/// training, clamped so both sides get at least one.
pub fn split_dataset(
    data: &LabeledDataset,
    fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::domain(format!(
            "split fraction {fraction} not in (0,1)"
        )));
    }
    let mut rng = derived_rng(seed, stream::SPLIT, 0);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for label in [0u8, 1] {
        let mut idx: Vec<usize> = (0..data.len())
            .filter(|&i| data.labels()[i] == label)
            .collect();
        if idx.len() < 2 {
            return Err(Error::domain(format!(
                "class {label} has {} sample(s); a split needs at least 2",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let n_train = ((fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((data.subset(&train), data.subset(&test)))
}

/// Seed of run `index` under `master`.
pub fn run_seed(master: u64, index: u64) -> u64 {
    derive_seed(master, stream::RUN, index)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: u64,
    pub seed: u64,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub auroc: Option<f64>,
    #[serde(skip)]
    pub timing: Option<Timing>,
}

/// Split, train and evaluate once with `seed` as the run's master seed.
pub fn run_once(
    data: &LabeledDataset,
    config: &RunConfig,
    run: u64,
    seed: u64,
) -> Result<RunRecord> {
    let (train, test) = split_dataset(data, config.split_fraction, seed)?;
    let cfg = RunConfig {
        rng_seed: seed,
        ..config.clone()
    };
    let model = train_cremer(&train, &cfg)?;
    let report = evaluate(&model, &test)?;
    log::debug!(
        "run {run}: recall {:?} precision {:?} auroc {:?}",
        report.recall,
        report.precision,
        report.auroc
    );
    Ok(RunRecord {
        run,
        seed,
        recall: report.recall,
        precision: report.precision,
        auroc: report.auroc,
        timing: report.timing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    /// Population standard deviation over the runs where the metric exists.
    pub std: Option<f64>,
    pub defined_runs: usize,
}

impl MetricSummary {
    pub fn of(values: impl Iterator<Item = Option<f64>>) -> Self {
        let v: Vec<f64> = values.flatten().collect();
        if v.is_empty() {
            return Self {
                mean: None,
                std: None,
                defined_runs: 0,
            };
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean: Some(mean),
            std: Some(var.sqrt()),
            defined_runs: v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub mean_train_seconds: f64,
    pub mean_predict_micros_per_sample: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub format_version: u64,
    pub master_seed: u64,
    pub n_runs: u64,
    pub recall: MetricSummary,
    pub precision: MetricSummary,
    pub auroc: MetricSummary,
    pub runs: Vec<RunRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingSummary>,
    pub config_echo: RunConfig,
}

impl AggregateReport {
    pub fn without_timing(mut self) -> Self {
        self.timing = None;
        self
    }
}

/// `n_runs` independent split/undersample/train/evaluate cycles.
pub fn run_repeated(
    data: &LabeledDataset,
    config: &RunConfig,
    n_runs: u64,
) -> Result<AggregateReport> {
    if n_runs == 0 {
        return Err(Error::domain("n_runs must be >= 1"));
    }
    config.validate()?;
    let master = config.rng_seed;
    let runs = (0..n_runs)
        .map(|i| run_once(data, config, i, run_seed(master, i)))
        .collect::<Result<Vec<_>>>()?;
    let timings: Vec<Timing> = runs.iter().filter_map(|r| r.timing).collect();
    let timing = (!timings.is_empty()).then(|| {
        let n = timings.len() as f64;
        TimingSummary {
            mean_train_seconds: timings.iter().map(|t| t.train_seconds).sum::<f64>() / n,
            mean_predict_micros_per_sample: timings
                .iter()
                .map(|t| t.predict_micros_per_sample)
                .sum::<f64>()
                / n,
        }
    });
    Ok(AggregateReport {
        format_version: REPORT_FORMAT_VERSION,
        master_seed: master,
        n_runs,
        recall: MetricSummary::of(runs.iter().map(|r| r.recall)),
        precision: MetricSummary::of(runs.iter().map(|r| r.precision)),
        auroc: MetricSummary::of(runs.iter().map(|r| r.auroc)),
        runs,
        timing,
        config_echo: config.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub weight: f64,
    pub mean_recall: Option<f64>,
    pub mean_precision: Option<f64>,
    pub mean_auroc: Option<f64>,
    pub runs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Repeats the experiment for each positive class weight. Every weight
/// reuses the same run seeds, so rows differ only in the weight.
pub fn weight_sweep(
    data: &LabeledDataset,
    config: &RunConfig,
    weights: &[f64],
    runs_per_weight: u64,
) -> Result<SweepResult> {
    if weights.is_empty() {
        return Err(Error::domain("no weights to sweep"));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::domain(format!("sweep weight {w} must be > 0")));
    }
    let rows = weights
        .iter()
        .map(|&weight| {
            let cfg = RunConfig {
                positive_class_weight: weight,
                ..config.clone()
            };
            let agg = run_repeated(data, &cfg, runs_per_weight)?;
            log::info!(
                "weight {weight}: recall {:?} precision {:?}",
                agg.recall.mean,
                agg.precision.mean
            );
            Ok(SweepRow {
                weight,
                mean_recall: agg.recall.mean,
                mean_precision: agg.precision.mean,
                mean_auroc: agg.auroc.mean,
                runs: runs_per_weight,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows })
}

/// Training time from the model metadata and the mean per-sample
/// prediction latency over `test`.
pub fn timing_probe(model: &VotingModel, test: &LabeledDataset) -> Timing {
    let (_, _, micros) = predict_all(model, test);
    Timing {
        train_seconds: model.metadata.train_seconds,
        predict_micros_per_sample: micros,
    }
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. `None` when
/// either side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

pub const MISSION_START: &str = "2017-08-15T01:24:30Z";
pub const MISSION_END: &str = "2018-05-28T05:46:25Z";
pub const MISSION_POSITIVES: usize = 2130;
pub const MISSION_NEGATIVES: usize = 203_920;

/// Synthetic stand-in for the satellite's upset log: a Gaussian hotspot
/// of events at roughly 600 km over the South Atlantic, plus Poisson-disk
/// negatives over the events' bounding box. `scale` divides both counts.
pub fn desk_mission(scale: usize, seed: u64) -> Result<(EventLog, LabeledDataset)> {
    if scale == 0 {
        return Err(Error::domain("scale must be >= 1"));
    }
    let start = parse_timestamp(MISSION_START).expect("valid constant");
    let end = parse_timestamp(MISSION_END).expect("valid constant");
    let log = generate_test_positives(
        MISSION_POSITIVES / scale,
        (-30.0, -40.0),
        15.0,
        AltitudeModel::new(600.0, 5.0)?,
        (start, end),
        derive_seed(seed, stream::POSITIVES, 1),
    )?;
    let plan = SynthesisPlan::fitted(&log, MISSION_NEGATIVES / scale, Default::default())?;
    let negatives = synthesize_negatives(&log, &plan, derive_seed(seed, stream::NEGATIVES, 1))?;
    let data = log.to_dataset().concat(&negatives);
    Ok((log, data))
}

/// Outcome of one retrain cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleReport {
    pub cycle: u64,
    pub seed: u64,
    pub events: usize,
    pub negatives: usize,
    pub config_hash: String,
}

/// Periodic full retrain from an event log that keeps growing.
pub struct Retrainer {
    pub events: PathBuf,
    pub model: PathBuf,
    pub config: RunConfig,
}

impl Retrainer {
    /// Seed for `cycle`; advances every cycle so unchanged data is still
    /// resampled afresh.
    pub fn cycle_seed(&self, cycle: u64) -> u64 {
        derive_seed(self.config.rng_seed, stream::CYCLE, cycle)
    }

    /// Re-ingest, re-synthesize, retrain and atomically replace the model.
    /// On error the existing model file is left as it was.
    pub fn run_cycle(&self, cycle: u64) -> Result<CycleReport> {
        let seed = self.cycle_seed(cycle);
        let log = parse_event_log(&self.events)?;
        let stats = timeline_stats(&log, self.config.scrub_interval_minutes)?;
        let mut plan = SynthesisPlan::fitted(
            &log,
            stats.negative_count as usize,
            self.config.synthesis.method,
        )?;
        plan.max_attempts_per_point = self.config.synthesis.max_attempts_per_point as usize;
        let negatives = synthesize_negatives(&log, &plan, derive_seed(seed, stream::NEGATIVES, 0))?;
        let data = log.to_dataset().concat(&negatives);
        let cfg = RunConfig {
            rng_seed: seed,
            ..self.config.clone()
        };
        let model = train_cremer(&data, &cfg)?;
        save_model(&model, &self.model)?;
        Ok(CycleReport {
            cycle,
            seed,
            events: log.len(),
            negatives: negatives.len(),
            config_hash: model.metadata.config_hash,
        })
    }

    /// Runs cycles every `period` until `stop` is set or `max_cycles` have
    /// run. Failed cycles are logged and skipped. Returns the cycle count.
    pub fn run(&self, period: Duration, max_cycles: Option<u64>, stop: &AtomicBool) -> u64 {
        let mut cycle = 0;
        while !stop.load(Ordering::Relaxed) && max_cycles.is_none_or(|m| cycle < m) {
            let started = Instant::now();
            match self.run_cycle(cycle) {
                Ok(r) => log::info!(
                    "cycle {}: {} events, {} negatives, model written to {}",
                    r.cycle,
                    r.events,
                    r.negatives,
                    self.model.display()
                ),
                Err(e) => log::warn!("cycle {cycle} failed, keeping previous model: {e}"),
            }
            cycle += 1;
            if max_cycles.is_some_and(|m| cycle >= m) {
                break;
            }
            while started.elapsed() < period && !stop.load(Ordering::Relaxed) {
                std::thread::sleep(Duration::from_millis(50).min(period));
            }
        }
        cycle
    }
}
