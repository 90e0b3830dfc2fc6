//! Event-log CSV ingestion and scrub-timeline arithmetic.
//!
//! Event files carry the header `timestamp,latitude_deg,longitude_deg,altitude_km`
//! with ISO 8601 UTC timestamps at second resolution. Labeled dataset files
//! append a `label` column.

use std::io::Write;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Utc};

use crate::error::{Error, Result};
use crate::persist::write_atomic;
use crate::types::{GeoSample, LabeledDataset};

pub const EVENT_HEADER: [&str; 4] = ["timestamp", "latitude_deg", "longitude_deg", "altitude_km"];
pub const DATASET_HEADER: [&str; 5] = [
    "timestamp",
    "latitude_deg",
    "longitude_deg",
    "altitude_km",
    "label",
];

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT)
        .ok()
        .map(|t| t.and_utc())
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

/// Non-empty, time-ordered positive events.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    events: Vec<GeoSample>,
}

impl EventLog {
    /// Sorts by timestamp, keeping file order among equal timestamps.
    pub fn new(mut events: Vec<GeoSample>) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::domain("event log must contain at least one event"));
        }
        events.sort_by_key(GeoSample::timestamp);
        Ok(Self { events })
    }

    pub fn events(&self) -> &[GeoSample] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn first_event(&self) -> DateTime<Utc> {
        self.events[0].timestamp()
    }

    pub fn last_event(&self) -> DateTime<Utc> {
        self.events[self.events.len() - 1].timestamp()
    }

    /// All events labeled positive with unit weight.
    pub fn to_dataset(&self) -> LabeledDataset {
        LabeledDataset::single_class(self.events.clone(), 1).expect("events are valid samples")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimelineStats {
    pub first_event: DateTime<Utc>,
    pub last_event: DateTime<Utc>,
    pub span_minutes: u64,
    pub scrub_count: u64,
    pub negative_count: u64,
}

/// Whole minutes between the first and last event, rounded down.
pub fn span_minutes(log: &EventLog) -> u64 {
    let seconds = (log.last_event() - log.first_event()).num_seconds();
    (seconds.max(0) / 60) as u64
}

/// Scrubs executed over the log's span, and how many of them found nothing.
pub fn timeline_stats(log: &EventLog, scrub_interval_minutes: f64) -> Result<TimelineStats> {
    if !(scrub_interval_minutes.is_finite() && scrub_interval_minutes > 0.0) {
        return Err(Error::domain(format!(
            "scrub interval must be positive, got {scrub_interval_minutes}"
        )));
    }
    let span = span_minutes(log);
    let scrub_count = (span as f64 / scrub_interval_minutes).floor() as u64;
    Ok(TimelineStats {
        first_event: log.first_event(),
        last_event: log.last_event(),
        span_minutes: span,
        scrub_count,
        negative_count: scrub_count.saturating_sub(log.len() as u64),
    })
}

fn open_csv(path: &Path, expected: &[&str]) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers().map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: e.to_string(),
    })?;
    let found: Vec<&str> = headers.iter().collect();
    if found != expected {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                found.join(",")
            ),
        });
    }
    Ok(reader)
}

fn parse_sample(record: &csv::StringRecord) -> std::result::Result<GeoSample, String> {
    let field = |i: usize| record.get(i).unwrap_or("");
    let ts = parse_timestamp(field(0)).ok_or_else(|| {
        format!(
            "invalid timestamp `{}` (want YYYY-MM-DDTHH:MM:SSZ)",
            field(0)
        )
    })?;
    let num = |i: usize, name: &str| {
        field(i)
            .parse::<f64>()
            .map_err(|_| format!("invalid {name} `{}`", field(i)))
    };
    let lat = num(1, "latitude_deg")?;
    let lon = num(2, "longitude_deg")?;
    let alt = num(3, "altitude_km")?;
    GeoSample::new(ts, lat, lon, alt).map_err(|e| e.to_string())
}

fn read_rows<T>(
    path: &Path,
    header: &[&str],
    mut row: impl FnMut(&csv::StringRecord) -> std::result::Result<T, String>,
) -> Result<Vec<T>> {
    let mut reader = open_csv(path, header)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        out.push(row(&record).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        })?);
    }
    Ok(out)
}

/// Reads a positive-event CSV.
pub fn parse_event_log(path: &Path) -> Result<EventLog> {
    let events = read_rows(path, &EVENT_HEADER, parse_sample)?;
    if events.is_empty() {
        return Err(Error::EmptyLog(path.to_path_buf()));
    }
    EventLog::new(events)
}

/// Reads a labeled CSV. Rows keep file order.
pub fn read_dataset(path: &Path) -> Result<LabeledDataset> {
    let rows = read_rows(path, &DATASET_HEADER, |r| {
        let sample = parse_sample(r)?;
        let label = match r.get(4).unwrap_or("") {
            "0" => 0u8,
            "1" => 1u8,
            other => return Err(format!("invalid label `{other}` (want 0 or 1)")),
        };
        Ok((sample, label))
    })?;
    if rows.is_empty() {
        return Err(Error::EmptyLog(path.to_path_buf()));
    }
    let (samples, labels) = rows.into_iter().unzip();
    LabeledDataset::unweighted(samples, labels)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn sample_fields(s: &GeoSample) -> [String; 4] {
    [
        format_timestamp(&s.timestamp()),
        s.latitude().to_string(),
        s.longitude().to_string(),
        s.altitude().to_string(),
    ]
}

pub fn write_event_log(log: &EventLog, path: &Path) -> Result<()> {
    write_atomic(path, |w: &mut dyn Write| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(EVENT_HEADER).map_err(csv_err(path))?;
        for s in log.events() {
            out.write_record(sample_fields(s)).map_err(csv_err(path))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    })
}

pub fn write_dataset(data: &LabeledDataset, path: &Path) -> Result<()> {
    write_atomic(path, |w: &mut dyn Write| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(DATASET_HEADER).map_err(csv_err(path))?;
        for (s, label) in data.samples().iter().zip(data.labels()) {
            let [t, lat, lon, alt] = sample_fields(s);
            out.write_record([t, lat, lon, alt, label.to_string()])
                .map_err(csv_err(path))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    })
}
