use serde::{Deserialize, Serialize};

use super::estimate::{estimate_mi, MIEstimate, Variable};
use super::extractor::{apply_extractor, FeatureExtractor};
use crate::data::TabularDataset;
use crate::error::{ensure, Error, Result};
use crate::model::{Model, OutputKind, Prediction};

/// Feature and target mutual information for one extractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorReport {
    pub extractor: String,
    /// `I(X, Z)`: simplicity/broadness monitor.
    pub mi_xz: MIEstimate,
    /// `I(Z, Y)`: fidelity monitor.
    pub mi_zy: MIEstimate,
    /// `I(X, Y)`, the data-processing upper bound for `mi_zy`.
    pub mi_xy: MIEstimate,
}

/// The model's output on every sample as an MI variable: class symbols for
/// classifiers, a continuous column for regressors.
pub fn model_target(model: &dyn Model, data: &TabularDataset) -> Result<Variable> {
    ensure!(
        model.arity() == data.n_features(),
        "model takes {} features, dataset has {}",
        model.arity(),
        data.n_features()
    );
    let preds = data
        .rows()
        .iter()
        .map(|x| model.predict(x))
        .collect::<Result<Vec<_>>>()?;
    match model.output_kind() {
        OutputKind::Scalar => Ok(Variable::continuous_1d(
            &preds
                .iter()
                .map(|p| match p {
                    Prediction::Scalar(v) => Ok(*v),
                    _ => Err(Error::ModelProtocol("expected scalar output".into())),
                })
                .collect::<Result<Vec<_>>>()?,
        )),
        OutputKind::Probs | OutputKind::Label => Ok(Variable::discrete(
            preds
                .iter()
                .map(|p| {
                    p.class()
                        .ok_or_else(|| Error::ModelProtocol("expected class output".into()))
                })
                .collect::<Result<Vec<_>>>()?,
        )),
    }
}

fn extracted(g: &FeatureExtractor, data: &TabularDataset) -> Result<Variable> {
    let z = apply_extractor(g, data)?;
    if g.is_discrete() {
        Ok(Variable::discrete_rows(z.rows()))
    } else {
        Variable::continuous(z.rows())
    }
}

pub fn extractor_report(
    data: &TabularDataset,
    g: &FeatureExtractor,
    model: &dyn Model,
    k: usize,
    seed: u64,
) -> Result<ExtractorReport> {
    let y = model_target(model, data)?;
    extractor_report_with_target(data, g, &y, k, seed)
}

/// As [`extractor_report`] with the target variable precomputed.
pub fn extractor_report_with_target(
    data: &TabularDataset,
    g: &FeatureExtractor,
    y: &Variable,
    k: usize,
    seed: u64,
) -> Result<ExtractorReport> {
    let x = Variable::continuous(data.rows())?;
    let z = extracted(g, data)?;
    Ok(ExtractorReport {
        extractor: g.name().to_string(),
        mi_xz: estimate_mi(&x, &z, k, seed)?,
        mi_zy: estimate_mi(&z, y, k, seed)?,
        mi_xy: estimate_mi(&x, y, k, seed)?,
    })
}

/// Which extractors a multi-run study compares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub runs: usize,
    pub k: usize,
    /// Columns overwritten by the out-of-distribution extractor.
    pub n_replaced: usize,
    pub ood_value: f64,
    /// Depth of the per-feature entropy trees.
    pub discretizer_depth: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            runs: 50,
            k: super::estimate::DEFAULT_NEIGHBORS,
            n_replaced: 3,
            ood_value: super::extractor::OOD_VALUE,
            discretizer_depth: 1,
        }
    }
}

/// Mean MI values of one extractor over all runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub extractor: String,
    pub mi_xz: f64,
    pub mi_zy: f64,
    pub mi_xy: f64,
}

/// Compares identity, random out-of-distribution replacement and the entropy
/// discretizer over `cfg.runs` runs. Run `r` uses seed `seed + r` for the
/// replaced columns and estimator jitter; the discretizer is fit once.
pub fn extractor_study(
    data: &TabularDataset,
    model: &dyn Model,
    cfg: &StudyConfig,
    seed: u64,
) -> Result<Vec<StudyRow>> {
    let y = model_target(model, data)?;
    extractor_study_with_target(data, &y, cfg, seed)
}

/// As [`extractor_study`] with the target variable given directly, e.g. the
/// dataset labels.
pub fn extractor_study_with_target(
    data: &TabularDataset,
    y: &Variable,
    cfg: &StudyConfig,
    seed: u64,
) -> Result<Vec<StudyRow>> {
    ensure!(cfg.runs >= 1, "at least one run required");
    ensure!(y.len() == data.n_samples(), "target has the wrong length");
    let arity = data.n_features();
    let discretizer = super::extractor::fit_entropy_discretizer(data, cfg.discretizer_depth)?;
    let mut sums = [[0.0; 3]; 3];
    for r in 0..cfg.runs {
        let run_seed = seed.wrapping_add(r as u64);
        let extractors = [
            FeatureExtractor::identity(arity),
            FeatureExtractor::random_ood(arity, cfg.n_replaced, cfg.ood_value, run_seed)?,
            discretizer.clone(),
        ];
        for (acc, g) in sums.iter_mut().zip(&extractors) {
            let rep = extractor_report_with_target(data, g, y, cfg.k, run_seed)?;
            acc[0] += rep.mi_xz.value;
            acc[1] += rep.mi_zy.value;
            acc[2] += rep.mi_xy.value;
        }
    }
    let runs = cfg.runs as f64;
    Ok(["identity", "random-ood", "entropy"]
        .iter()
        .zip(sums)
        .map(|(name, s)| StudyRow {
            extractor: name.to_string(),
            mi_xz: s[0] / runs,
            mi_zy: s[1] / runs,
            mi_xy: s[2] / runs,
        })
        .collect())
}
