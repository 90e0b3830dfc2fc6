//! Single-event-upset prediction from orbital position.
//!
//! The pipeline ingests a log of upsets (scrubs that found a flipped bit),
//! synthesizes the scrubs that found nothing, balances the classes with
//! cluster-centroid undersampling and fits a soft-voting ensemble of a
//! class-weighted random forest and a positively scaled gradient booster.

pub mod boost;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod forest;
pub mod harness;
pub mod ingest;
pub mod persist;
pub mod resample;
pub mod rng;
pub mod synth;
pub mod tree;
pub mod types;

pub use error::{Error, Result, Violation};
pub use types::{
    effective_let, features_of, normalize_longitude, FeatureVector, GeoSample, LabeledDataset,
    RunConfig,
};
