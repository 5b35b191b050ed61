//! Metrics judging feature attributions against the model itself.
//!
//! The reference quantity is the expected restriction loss
//! `e_i = E[l(y*, f_i(X_i)) | x*_{-i}]`: how much the prediction degrades when
//! feature `i` is resampled and every other input stays at the explained
//! point. Attribution magnitudes are compared with it through rank
//! correlation (monotonicity), zero patterns (non-sensitivity) and a
//! top-k sufficiency search (effective complexity).

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::AttributionVector;
use crate::data::TabularDataset;
use crate::distribution::{FeatureDistribution, Sampler};
use crate::error::{ensure, Error, Result};
use crate::loss::LossFunction;
use crate::model::{check_arity, Model, OutputKind, Prediction};
use crate::rng;
use crate::stats::spearman;

pub const DEFAULT_MC_SAMPLES: usize = 5000;
pub const DEFAULT_ZERO_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_EPSILON: f64 = 0.01;
const MIN_MC_SAMPLES: usize = 100;
const RELATIVE_ZERO: f64 = 1e-12;

// Random streams: feature i of the e-vector uses stream i, top-k set k of
// the effective-complexity search uses EC_STREAM + k.
const EC_STREAM: u64 = 1 << 32;

/// Monte Carlo settings for the expectation over resampled inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationConfig {
    pub n_mc_samples: usize,
    pub distribution: FeatureDistribution,
    pub loss: LossFunction,
    pub zero_tolerance: f64,
    pub seed: u64,
}

impl ExpectationConfig {
    pub fn new(distribution: FeatureDistribution, loss: LossFunction, seed: u64) -> Self {
        Self {
            n_mc_samples: DEFAULT_MC_SAMPLES,
            distribution,
            loss,
            zero_tolerance: DEFAULT_ZERO_TOLERANCE,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.n_mc_samples >= MIN_MC_SAMPLES,
            "n_mc_samples must be at least {MIN_MC_SAMPLES}, got {}",
            self.n_mc_samples
        );
        ensure!(
            self.zero_tolerance >= 0.0 && self.zero_tolerance.is_finite(),
            "zero_tolerance must be a finite non-negative number"
        );
        Ok(())
    }

    fn check(&self, model: &dyn Model, x: &[f64]) -> Result<()> {
        self.validate()?;
        check_arity(model, x)?;
        self.distribution.check_compatible(model)
    }

    /// Serializable summary without the sampler payloads.
    pub fn settings(&self) -> ExpectationSettings {
        let samplers = self.distribution.samplers();
        let distribution = if samplers
            .iter()
            .all(|s| matches!(s, Sampler::Empirical { .. }))
        {
            "empirical".to_string()
        } else if samplers.windows(2).all(|w| w[0] == w[1]) {
            match &samplers[0] {
                Sampler::Uniform { lo, hi } => format!("uniform[{lo},{hi})"),
                Sampler::Empirical { .. } => "empirical".to_string(),
            }
        } else {
            "mixed".to_string()
        };
        ExpectationSettings {
            n_mc_samples: self.n_mc_samples,
            distribution,
            mode: self.distribution.mode(),
            loss: self.loss,
            zero_tolerance: self.zero_tolerance,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationSettings {
    pub n_mc_samples: usize,
    pub distribution: String,
    pub mode: crate::distribution::SamplingMode,
    pub loss: LossFunction,
    pub zero_tolerance: f64,
    pub seed: u64,
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Average loss against `y*` when the coordinates in `free` are redrawn
/// jointly and all others stay at `x`.
fn resampled_loss(
    model: &dyn Model,
    x: &[f64],
    y_star: &Prediction,
    free: &[usize],
    cfg: &ExpectationConfig,
    stream: u64,
) -> Result<McEstimate> {
    let mut r = rng::stream(cfg.seed, stream);
    let mut probe = x.to_vec();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..cfg.n_mc_samples {
        for &i in free {
            probe[i] = cfg.distribution.sample(i, &mut r)?;
        }
        let l = cfg.loss.evaluate(y_star, &model.predict(&probe)?)?;
        sum += l;
        sum_sq += l * l;
    }
    let n = cfg.n_mc_samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(McEstimate {
        mean,
        std_error: (var / n).sqrt(),
    })
}

/// Monte Carlo estimate of `E[l(y*, f_i(X_i)) | x*_{-i}]` with its standard error.
pub fn expected_restriction_loss_estimate(
    model: &dyn Model,
    x: &[f64],
    i: usize,
    cfg: &ExpectationConfig,
) -> Result<McEstimate> {
    cfg.check(model, x)?;
    ensure!(
        i < x.len(),
        "feature {i} out of range for arity {}",
        x.len()
    );
    let y_star = model.predict(x)?;
    resampled_loss(model, x, &y_star, &[i], cfg, i as u64)
}

pub fn expected_restriction_loss(
    model: &dyn Model,
    x: &[f64],
    i: usize,
    cfg: &ExpectationConfig,
) -> Result<f64> {
    Ok(expected_restriction_loss_estimate(model, x, i, cfg)?.mean)
}

/// `e_i` for every feature.
pub fn expected_loss_vector(
    model: &dyn Model,
    x: &[f64],
    cfg: &ExpectationConfig,
) -> Result<Vec<f64>> {
    cfg.check(model, x)?;
    let y_star = model.predict(x)?;
    (0..x.len())
        .into_par_iter()
        .map(|i| Ok(resampled_loss(model, x, &y_star, &[i], cfg, i as u64)?.mean))
        .collect()
}

/// Threshold below which `|a_i|` counts as zero: `1e-12 * max_j |a_j|`, or
/// `1e-12` when every attribution is zero.
pub fn attribution_zero_threshold(values: &[f64]) -> f64 {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max > 0.0 {
        RELATIVE_ZERO * max
    } else {
        RELATIVE_ZERO
    }
}

/// Indices with zero attribution (`A_0`).
pub fn zero_attributions(attr: &AttributionVector) -> Vec<usize> {
    let t = attribution_zero_threshold(&attr.values);
    (0..attr.arity())
        .filter(|&i| attr.values[i].abs() <= t)
        .collect()
}

/// Number of non-zero attributions.
pub fn complexity(attr: &AttributionVector) -> usize {
    attr.arity() - zero_attributions(attr).len()
}

/// Spearman correlation between `|a|` and precomputed expected losses.
pub fn monotonicity_from(attr: &AttributionVector, e: &[f64]) -> Result<f64> {
    ensure!(
        attr.arity() >= 2,
        "monotonicity needs at least two features"
    );
    ensure!(
        e.len() == attr.arity(),
        "expected-loss vector has the wrong length"
    );
    spearman(&attr.magnitudes(), e).map_err(|err| match err {
        Error::UndefinedCorrelation(msg) => Error::UndefinedCorrelation(format!(
            "monotonicity of `{}`: {msg}; |a| = {:?}, e = {e:?}",
            attr.method,
            attr.magnitudes()
        )),
        other => other,
    })
}

pub fn monotonicity(
    attr: &AttributionVector,
    model: &dyn Model,
    cfg: &ExpectationConfig,
) -> Result<f64> {
    ensure!(
        attr.arity() >= 2,
        "monotonicity needs at least two features"
    );
    let e = expected_loss_vector(model, &attr.point, cfg)?;
    monotonicity_from(attr, &e)
}

/// `|A_0 symmetric-difference X_0|` given the expected-loss vector.
pub fn non_sensitivity_from(
    attr: &AttributionVector,
    e: &[f64],
    zero_tolerance: f64,
) -> Result<usize> {
    ensure!(
        e.len() == attr.arity(),
        "expected-loss vector has the wrong length"
    );
    let t = attribution_zero_threshold(&attr.values);
    Ok((0..attr.arity())
        .filter(|&i| (attr.values[i].abs() <= t) != (e[i] <= zero_tolerance))
        .count())
}

pub fn non_sensitivity(
    attr: &AttributionVector,
    model: &dyn Model,
    cfg: &ExpectationConfig,
) -> Result<usize> {
    ensure!(
        attr.arity() >= 1,
        "non-sensitivity needs at least one feature"
    );
    let e = expected_loss_vector(model, &attr.point, cfg)?;
    non_sensitivity_from(attr, &e, cfg.zero_tolerance)
}

/// Feature indices by decreasing `|a_i|`, ties by lower index.
pub fn importance_order(attr: &AttributionVector) -> Vec<usize> {
    let mags = attr.magnitudes();
    let mut order: Vec<usize> = (0..attr.arity()).collect();
    order.sort_by(|&a, &b| mags[b].total_cmp(&mags[a]).then(a.cmp(&b)));
    order
}

/// Result of the top-k sufficiency search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveComplexity {
    pub k: usize,
    /// No top-k set reached the tolerance; `k` is then the arity.
    pub saturated: bool,
    /// Estimated loss for k = 1, 2, ... up to the returned k.
    pub losses: Vec<f64>,
}

/// Smallest `k` such that clamping the `k` most important features at `x*`
/// and jointly resampling all the others keeps the expected loss below
/// `epsilon`.
pub fn effective_complexity(
    attr: &AttributionVector,
    model: &dyn Model,
    epsilon: f64,
    cfg: &ExpectationConfig,
) -> Result<EffectiveComplexity> {
    ensure!(
        epsilon > 0.0 && epsilon.is_finite(),
        "epsilon must be positive"
    );
    cfg.check(model, &attr.point)?;
    ensure!(
        attr.arity() >= 1,
        "effective complexity needs at least one feature"
    );
    let x = &attr.point;
    let y_star = model.predict(x)?;
    let order = importance_order(attr);
    let n = attr.arity();
    let mut losses = Vec::with_capacity(n);
    for k in 1..=n {
        let loss = resampled_loss(model, x, &y_star, &order[k..], cfg, EC_STREAM + k as u64)?.mean;
        losses.push(loss);
        if loss < epsilon {
            return Ok(EffectiveComplexity {
                k,
                saturated: false,
                losses,
            });
        }
    }
    Ok(EffectiveComplexity {
        k: n,
        saturated: true,
        losses,
    })
}

/// Fraction of perturbed inputs that keep the predicted class of `x*` when
/// the top-`k` features stay fixed and every other coordinate is replaced by
/// a uniformly drawn value from the same column of `corpus`.
pub fn perturbation_test(
    attr: &AttributionVector,
    model: &dyn Model,
    k: usize,
    corpus: &TabularDataset,
    n_perturbations: usize,
    seed: u64,
) -> Result<f64> {
    let x = &attr.point;
    check_arity(model, x)?;
    ensure!(
        k <= attr.arity(),
        "cannot keep {k} features of {}",
        attr.arity()
    );
    ensure!(n_perturbations >= 1, "at least one perturbation required");
    ensure!(
        corpus.n_features() == attr.arity(),
        "corpus width {} differs from arity {}",
        corpus.n_features(),
        attr.arity()
    );
    ensure!(
        matches!(model.output_kind(), OutputKind::Probs | OutputKind::Label),
        "perturbation test needs a classifier"
    );
    let class = model
        .predict(x)?
        .class()
        .ok_or_else(|| Error::Contract("classifier returned no class".into()))?;
    let free = importance_order(attr).split_off(k);
    let columns: Vec<Vec<f64>> = free.iter().map(|&j| corpus.column(j)).collect();
    let mut r = rng::stream(seed, 0);
    let mut probe = x.clone();
    let mut kept = 0usize;
    for _ in 0..n_perturbations {
        for (col, &j) in columns.iter().zip(&free) {
            probe[j] = col[r.random_range(0..col.len())];
        }
        if model.predict(&probe)?.class() == Some(class) {
            kept += 1;
        }
    }
    Ok(kept as f64 / n_perturbations as f64)
}

/// Complexity, monotonicity, effective complexity and non-sensitivity of one
/// attribution, sharing a single expected-loss pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionMetricsReport {
    pub method: String,
    pub complexity: usize,
    pub monotonicity: f64,
    pub non_sensitivity: usize,
    pub effective_complexity: usize,
    pub saturated: bool,
    pub epsilon: f64,
    pub e_vector: Vec<f64>,
    pub ec_losses: Vec<f64>,
    pub attribution: Vec<f64>,
    pub settings: ExpectationSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribution_seed: Option<u64>,
}

pub fn attribution_report(
    attr: &AttributionVector,
    model: &dyn Model,
    epsilon: f64,
    cfg: &ExpectationConfig,
) -> Result<AttributionMetricsReport> {
    let e = expected_loss_vector(model, &attr.point, cfg)?;
    let ec = effective_complexity(attr, model, epsilon, cfg)?;
    Ok(AttributionMetricsReport {
        method: attr.method.clone(),
        complexity: complexity(attr),
        monotonicity: monotonicity_from(attr, &e)?,
        non_sensitivity: non_sensitivity_from(attr, &e, cfg.zero_tolerance)?,
        effective_complexity: ec.k,
        saturated: ec.saturated,
        epsilon,
        e_vector: e,
        ec_losses: ec.losses,
        attribution: attr.values.clone(),
        settings: cfg.settings(),
        attribution_seed: attr.seed,
    })
}
