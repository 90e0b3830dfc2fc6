//! Soft-voting ensemble of the forest and the booster, the training
//! pipeline, and the versioned model file.

use std::path::Path;
use std::time::Instant;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::boost::{fit_boosted, BoostModel};
use crate::error::{Error, Result};
use crate::forest::{fit_forest, ForestModel};
use crate::persist::write_bytes_atomic;
use crate::resample::undersample;
use crate::rng::{derive_seed, stream};
use crate::types::{features_of, FeatureVector, GeoSample, LabeledDataset, RunConfig};

pub const MODEL_FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    /// Latest sample timestamp in the training data.
    pub trained_through: Option<DateTime<Utc>>,
    pub config_hash: String,
    pub rng_seed: u64,
    /// Rows in the balanced set the submodels were fitted on.
    pub train_samples: usize,
    /// Wall-clock fit time. Not persisted, so equal inputs give equal files.
    #[serde(skip)]
    pub train_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VotingModel {
    pub forest: ForestModel,
    pub boost: BoostModel,
    pub threshold: f64,
    pub config: RunConfig,
    pub metadata: ModelMetadata,
}

fn check_probability(p: f64, name: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} probability {p} outside [0,1]"
        )))
    }
}

/// Unweighted mean of the two submodel probabilities.
pub fn soft_vote(p_forest: f64, p_boost: f64) -> Result<f64> {
    soft_vote_weighted(p_forest, p_boost, [1.0, 1.0])
}

/// Weighted mean with weights `(forest, boost)`.
pub fn soft_vote_weighted(p_forest: f64, p_boost: f64, weights: [f64; 2]) -> Result<f64> {
    check_probability(p_forest, "forest")?;
    check_probability(p_boost, "boost")?;
    if !weights.iter().all(|w| w.is_finite() && *w > 0.0) {
        return Err(Error::domain("vote weights must be > 0"));
    }
    let [a, b] = weights;
    let p = if a == b {
        (p_forest + p_boost) / 2.0
    } else {
        (a * p_forest + b * p_boost) / (a + b)
    };
    // Rounding must not leave the hull of the inputs.
    Ok(p.clamp(p_forest.min(p_boost), p_forest.max(p_boost)))
}

/// Undersamples `train`, then fits both submodels on the balanced set with
/// the configured positive class weight.
pub fn train_cremer(train: &LabeledDataset, config: &RunConfig) -> Result<VotingModel> {
    config.validate()?;
    train.require_both_classes()?;
    let start = Instant::now();
    let seed = config.rng_seed;
    let balanced = undersample(
        train,
        derive_seed(seed, stream::UNDERSAMPLE, 1),
        &config.resample,
    )?;
    let w = config.positive_class_weight;
    let forest = fit_forest(
        &balanced,
        &config.forest,
        [1.0, w],
        derive_seed(seed, stream::FOREST, 1),
    )?;
    let boost = fit_boosted(
        &balanced,
        &config.boost,
        w,
        derive_seed(seed, stream::BOOST, 1),
    )?;
    let train_seconds = start.elapsed().as_secs_f64();
    log::info!(
        "trained on {} balanced rows ({} raw) in {train_seconds:.3} s",
        balanced.len(),
        train.len()
    );
    Ok(VotingModel {
        forest,
        boost,
        threshold: config.threshold,
        config: config.clone(),
        metadata: ModelMetadata {
            trained_through: train.latest_timestamp(),
            config_hash: config.hash(),
            rng_seed: seed,
            train_samples: balanced.len(),
            train_seconds,
        },
    })
}

impl VotingModel {
    pub fn proba(&self, x: &FeatureVector) -> f64 {
        let pf = self.forest.predict_proba(x);
        let pb = self.boost.predict_proba(x);
        soft_vote_weighted(pf, pb, self.config.vote_weights)
            .expect("submodel probabilities lie in [0,1]")
    }

    /// `(label, probability)`; the label is 1 when the probability reaches
    /// the threshold.
    pub fn predict_features(&self, x: &FeatureVector) -> (u8, f64) {
        let p = self.proba(x);
        (u8::from(p >= self.threshold), p)
    }
}

pub fn predict(model: &VotingModel, s: &GeoSample) -> (u8, f64) {
    model.predict_features(&features_of(s))
}

#[derive(Serialize)]
struct ModelFileRef<'a> {
    format_version: u64,
    config: &'a RunConfig,
    forest: &'a ForestModel,
    boost: &'a BoostModel,
    threshold: f64,
    metadata: &'a ModelMetadata,
}

pub fn model_to_json(model: &VotingModel) -> String {
    let file = ModelFileRef {
        format_version: MODEL_FORMAT_VERSION,
        config: &model.config,
        forest: &model.forest,
        boost: &model.boost,
        threshold: model.threshold,
        metadata: &model.metadata,
    };
    serde_json::to_string(&file).expect("model serializes")
}

pub fn save_model(model: &VotingModel, path: &Path) -> Result<()> {
    let mut json = model_to_json(model);
    json.push('\n');
    write_bytes_atomic(path, json.as_bytes())
}

fn field<T: serde::de::DeserializeOwned>(
    obj: &mut serde_json::Map<String, Value>,
    name: &str,
) -> Result<T> {
    let value = obj.remove(name).ok_or_else(|| Error::ModelSchema {
        field: name.into(),
        message: "missing".into(),
    })?;
    serde_json::from_value(value).map_err(|e| Error::ModelSchema {
        field: name.into(),
        message: e.to_string(),
    })
}

pub fn model_from_json(text: &str) -> Result<VotingModel> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::CorruptModel(e.to_string()))?;
    let Value::Object(mut obj) = value else {
        return Err(Error::CorruptModel("top level is not a JSON object".into()));
    };
    let version = obj
        .get("format_version")
        .ok_or_else(|| Error::ModelSchema {
            field: "format_version".into(),
            message: "missing".into(),
        })?
        .as_u64()
        .ok_or_else(|| Error::ModelSchema {
            field: "format_version".into(),
            message: "must be a non-negative integer".into(),
        })?;
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::ModelVersion {
            found: version,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let model = VotingModel {
        config: field(&mut obj, "config")?,
        forest: field(&mut obj, "forest")?,
        boost: field(&mut obj, "boost")?,
        threshold: field(&mut obj, "threshold")?,
        metadata: field(&mut obj, "metadata")?,
    };
    if !(model.threshold > 0.0 && model.threshold < 1.0) {
        return Err(Error::ModelSchema {
            field: "threshold".into(),
            message: format!("{} is not in (0,1)", model.threshold),
        });
    }
    if let Some(v) = model.config.violations().into_iter().next() {
        return Err(Error::ModelSchema {
            field: format!("config.{}", v.key),
            message: v.constraint,
        });
    }
    model.forest.validate()?;
    model.boost.validate()?;
    Ok(model)
}

pub fn load_model(path: &Path) -> Result<VotingModel> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::InvalidData => {
            Error::CorruptModel(format!("{}: not UTF-8", path.display()))
        }
        _ => Error::io(path, e),
    })?;
    model_from_json(&text)
}
