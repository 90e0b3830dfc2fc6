//! Domain types shared across the pipeline.
//!
//! A [`GeoSample`] is one observation (timestamp plus orbital position). The
//! model only ever sees its [`FeatureVector`] projection: latitude,
//! longitude, altitude, in that order. Timestamps are metadata used for
//! scrub counting.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::boost::BoostParams;
use crate::error::{Error, Result, Violation};
use crate::forest::ForestParams;
use crate::synth::SamplingMethod;

/// Number of model features.
pub const N_FEATURES: usize = 3;

pub const FEATURE_NAMES: [&str; N_FEATURES] = ["latitude_deg", "longitude_deg", "altitude_km"];

/// Effective linear energy transfer for a particle entering a cell at
/// `theta` radians off the normal: `L / cos(theta)`.
pub fn effective_let(let_normal: f64, theta: f64) -> Result<f64> {
    if !(let_normal.is_finite() && let_normal > 0.0) {
        return Err(Error::domain(format!(
            "LET must be positive and finite, got {let_normal}"
        )));
    }
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::domain(format!(
            "incidence angle must lie in [0, pi/2), got {theta}"
        )));
    }
    let cos = theta.cos();
    if cos <= 0.0 {
        return Err(Error::domain("grazing incidence: cos(theta) is zero"));
    }
    Ok(let_normal / cos)
}

/// Wraps a longitude in degrees into `[-180, 180)`.
pub fn normalize_longitude(deg: f64) -> Result<f64> {
    if !deg.is_finite() {
        return Err(Error::domain(format!(
            "longitude must be finite, got {deg}"
        )));
    }
    if (-180.0..180.0).contains(&deg) {
        return Ok(deg);
    }
    let r = deg.rem_euclid(360.0);
    // rem_euclid may round up to exactly 360
    Ok(if r >= 180.0 { r - 360.0 } else { r })
}

/// One observation: when and where the spacecraft was.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoSample {
    timestamp: DateTime<Utc>,
    latitude: f64,
    longitude: f64,
    altitude: f64,
}

impl GeoSample {
    /// Validates every field; longitude must already be normalized.
    pub fn new(
        timestamp: DateTime<Utc>,
        latitude: f64,
        longitude: f64,
        altitude: f64,
    ) -> Result<Self> {
        if !(latitude.is_finite() && (-90.0..=90.0).contains(&latitude)) {
            return Err(Error::domain(format!(
                "latitude must lie in [-90, 90], got {latitude}"
            )));
        }
        if !(longitude.is_finite() && (-180.0..180.0).contains(&longitude)) {
            return Err(Error::domain(format!(
                "longitude must lie in [-180, 180), got {longitude}"
            )));
        }
        if !(altitude.is_finite() && altitude > 0.0) {
            return Err(Error::domain(format!(
                "altitude must be positive and finite, got {altitude}"
            )));
        }
        Ok(Self {
            timestamp,
            latitude,
            longitude,
            altitude,
        })
    }

    pub fn timestamp(&self) -> DateTime<Utc> {
        self.timestamp
    }

    pub fn latitude(&self) -> f64 {
        self.latitude
    }

    pub fn longitude(&self) -> f64 {
        self.longitude
    }

    pub fn altitude(&self) -> f64 {
        self.altitude
    }

    pub fn features(&self) -> FeatureVector {
        features_of(self)
    }
}

/// Model input in fixed order `(lat, lon, alt)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

impl FeatureVector {
    pub fn new(latitude: f64, longitude: f64, altitude: f64) -> Self {
        Self([latitude, longitude, altitude])
    }

    pub fn latitude(&self) -> f64 {
        self.0[0]
    }

    pub fn longitude(&self) -> f64 {
        self.0[1]
    }

    pub fn altitude(&self) -> f64 {
        self.0[2]
    }

    pub fn as_array(&self) -> &[f64; N_FEATURES] {
        &self.0
    }

    pub fn squared_distance(&self, other: &FeatureVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Drops the timestamp.
pub fn features_of(s: &GeoSample) -> FeatureVector {
    FeatureVector::new(s.latitude, s.longitude, s.altitude)
}

/// Samples with parallel binary labels (1 = SEU) and positive weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset {
    samples: Vec<GeoSample>,
    labels: Vec<u8>,
    weights: Vec<f64>,
}

impl LabeledDataset {
    pub fn new(samples: Vec<GeoSample>, labels: Vec<u8>, weights: Vec<f64>) -> Result<Self> {
        if samples.len() != labels.len() || samples.len() != weights.len() {
            return Err(Error::domain(format!(
                "dataset columns differ in length: {} samples, {} labels, {} weights",
                samples.len(),
                labels.len(),
                weights.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::domain(format!("labels must be 0 or 1, found {bad}")));
        }
        if let Some(bad) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::domain(format!(
                "sample weights must be positive and finite, found {bad}"
            )));
        }
        Ok(Self {
            samples,
            labels,
            weights,
        })
    }

    /// Unit weights.
    pub fn unweighted(samples: Vec<GeoSample>, labels: Vec<u8>) -> Result<Self> {
        let weights = vec![1.0; samples.len()];
        Self::new(samples, labels, weights)
    }

    /// Every sample with the same label.
    pub fn single_class(samples: Vec<GeoSample>, label: u8) -> Result<Self> {
        let labels = vec![label; samples.len()];
        Self::unweighted(samples, labels)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[GeoSample] {
        &self.samples
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn features(&self) -> Vec<FeatureVector> {
        self.samples.iter().map(features_of).collect()
    }

    pub fn count_label(&self, label: u8) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn positives(&self) -> usize {
        self.count_label(1)
    }

    pub fn negatives(&self) -> usize {
        self.count_label(0)
    }

    /// Errors unless both classes are present.
    pub fn require_both_classes(&self) -> Result<()> {
        if self.positives() == 0 || self.negatives() == 0 {
            return Err(Error::domain(format!(
                "both classes required, got {} positive and {} negative samples",
                self.positives(),
                self.negatives()
            )));
        }
        Ok(())
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            samples: indices.iter().map(|&i| self.samples[i]).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            weights: indices.iter().map(|&i| self.weights[i]).collect(),
        }
    }

    pub fn concat(mut self, other: &LabeledDataset) -> Self {
        self.samples.extend_from_slice(&other.samples);
        self.labels.extend_from_slice(&other.labels);
        self.weights.extend_from_slice(&other.weights);
        self
    }

    /// Latest timestamp in the dataset.
    pub fn latest_timestamp(&self) -> Option<DateTime<Utc>> {
        self.samples.iter().map(GeoSample::timestamp).max()
    }
}

/// Settings for centroid undersampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResampleParams {
    pub max_iter: u64,
    pub tol: f64,
    /// Cluster z-scored features instead of raw degrees/km.
    pub standardize: bool,
}

impl Default for ResampleParams {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-6,
            standardize: false,
        }
    }
}

/// Settings for negative synthesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisParams {
    pub method: SamplingMethod,
    pub max_attempts_per_point: u64,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        Self {
            method: SamplingMethod::PoissonDisk,
            max_attempts_per_point: 30,
        }
    }
}

/// Everything that determines a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub rng_seed: u64,
    /// Applied to the forest's positive class weight and the booster's
    /// positive gradient scale alike. The negative class weight is 1.
    pub positive_class_weight: f64,
    pub scrub_interval_minutes: f64,
    pub split_fraction: f64,
    pub threshold: f64,
    /// Soft-vote weights for (forest, boost).
    pub vote_weights: [f64; 2],
    pub forest: ForestParams,
    pub boost: BoostParams,
    pub resample: ResampleParams,
    pub synthesis: SynthesisParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            rng_seed: 42,
            positive_class_weight: 94.0,
            scrub_interval_minutes: 2.0,
            split_fraction: 0.8,
            threshold: 0.5,
            vote_weights: [1.0, 1.0],
            forest: ForestParams::default(),
            boost: BoostParams::default(),
            resample: ResampleParams::default(),
            synthesis: SynthesisParams::default(),
        }
    }
}

fn check(out: &mut Vec<Violation>, ok: bool, key: &str, value: impl ToString, constraint: &str) {
    if !ok {
        out.push(Violation {
            key: key.to_string(),
            value: value.to_string(),
            constraint: constraint.to_string(),
        });
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl RunConfig {
    /// Every range violation, not just the first.
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        check(
            &mut v,
            positive(self.positive_class_weight),
            "positive_class_weight",
            self.positive_class_weight,
            "positive_class_weight must be > 0",
        );
        check(
            &mut v,
            positive(self.scrub_interval_minutes),
            "scrub_interval_minutes",
            self.scrub_interval_minutes,
            "scrub_interval_minutes must be > 0",
        );
        check(
            &mut v,
            self.split_fraction > 0.0 && self.split_fraction < 1.0,
            "split_fraction",
            self.split_fraction,
            "split_fraction must be in (0,1)",
        );
        check(
            &mut v,
            self.threshold > 0.0 && self.threshold < 1.0,
            "threshold",
            self.threshold,
            "threshold must be in (0,1)",
        );
        check(
            &mut v,
            self.vote_weights.iter().all(|w| positive(*w)),
            "vote_weights",
            format!("{:?}", self.vote_weights),
            "vote_weights must both be > 0",
        );

        let f = &self.forest;
        check(
            &mut v,
            f.n_trees >= 1,
            "forest.n_trees",
            f.n_trees,
            "forest.n_trees must be >= 1",
        );
        check(
            &mut v,
            f.min_samples_leaf >= 1,
            "forest.min_samples_leaf",
            f.min_samples_leaf,
            "forest.min_samples_leaf must be >= 1",
        );
        check(
            &mut v,
            (1..=N_FEATURES as u64).contains(&f.features_per_split),
            "forest.features_per_split",
            f.features_per_split,
            "forest.features_per_split must be in [1, 3]",
        );

        let b = &self.boost;
        check(
            &mut v,
            b.n_rounds >= 1,
            "boost.n_rounds",
            b.n_rounds,
            "boost.n_rounds must be >= 1",
        );
        check(
            &mut v,
            b.learning_rate > 0.0 && b.learning_rate <= 1.0,
            "boost.learning_rate",
            b.learning_rate,
            "boost.learning_rate must be in (0,1]",
        );
        check(
            &mut v,
            b.lambda.is_finite() && b.lambda >= 0.0,
            "boost.lambda",
            b.lambda,
            "boost.lambda must be >= 0",
        );
        check(
            &mut v,
            b.gamma.is_finite() && b.gamma >= 0.0,
            "boost.gamma",
            b.gamma,
            "boost.gamma must be >= 0",
        );
        check(
            &mut v,
            b.min_child_weight.is_finite() && b.min_child_weight >= 0.0,
            "boost.min_child_weight",
            b.min_child_weight,
            "boost.min_child_weight must be >= 0",
        );

        let r = &self.resample;
        check(
            &mut v,
            r.max_iter >= 1,
            "resample.max_iter",
            r.max_iter,
            "resample.max_iter must be >= 1",
        );
        check(
            &mut v,
            r.tol.is_finite() && r.tol >= 0.0,
            "resample.tol",
            r.tol,
            "resample.tol must be >= 0",
        );

        check(
            &mut v,
            self.synthesis.max_attempts_per_point >= 1,
            "synthesis.max_attempts_per_point",
            self.synthesis.max_attempts_per_point,
            "synthesis.max_attempts_per_point must be >= 1",
        );
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
