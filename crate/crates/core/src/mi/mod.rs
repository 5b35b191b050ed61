//! Mutual-information monitoring of feature extractors.

pub mod estimate;
pub mod extractor;
pub mod report;

pub use estimate::{estimate_mi, plugin_entropy, MIEstimate, MiEstimator, Variable};
pub use extractor::{apply_extractor, fit_entropy_discretizer, FeatureExtractor};
pub use report::{
    extractor_report, extractor_report_with_target, extractor_study, extractor_study_with_target,
    model_target, ExtractorReport, StudyConfig, StudyRow,
};
