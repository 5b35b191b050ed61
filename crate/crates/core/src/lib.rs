//! Functionally-grounded interpretability metrics.
//!
//! The crate evaluates explanations along three axes:
//!
//! - feature extractors, through feature/target mutual information ([`mi`]);
//! - example-based explanations, through non-representativeness and
//!   diversity of prototype sets ([`examples`]);
//! - feature attributions, through complexity, monotonicity,
//!   non-sensitivity, effective complexity and a perturbation test
//!   ([`metrics`]).
//!
//! Reference explainers ([`attribution`], [`examples`]) and benchmark
//! models ([`bench`]) are included so experiments run end to end.

pub mod attribution;
pub mod bench;
pub mod data;
pub mod distribution;
pub mod error;
pub mod examples;
pub mod loss;
pub mod metrics;
pub mod mi;
pub mod model;
pub mod report;
pub mod rng;
pub mod stats;

pub use data::TabularDataset;
pub use distribution::{FeatureDistribution, Sampler, SamplingMode};
pub use error::{Error, Result};
pub use loss::{evaluate_loss, LossFunction};
pub use model::{
    gradient, restrict_model, GradientCapability, Interval, Model, OutputKind, Prediction,
    Restricted,
};
pub use report::MetricReport;
