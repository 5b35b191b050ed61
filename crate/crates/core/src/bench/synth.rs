use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::token::LinearSoftmax;
use crate::data::TabularDataset;
use crate::error::{ensure, Result};
use crate::rng;

/// Gaussian-cluster classification generator.
///
/// Every informative feature places the class centres `separation` standard
/// deviations apart (in a seeded per-feature order), so the label signal is
/// repeated across informative features. The last `n_noise_features`
/// columns are standard normal and independent of the label.
///
/// With `modes_per_class > 1` each class is a mixture of sub-clusters
/// ("styles") offset from the class centre by `mode_spread` standard
/// deviations per coordinate; mode `r` has weight proportional to `1/(r+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub separation: f64,
    pub n_noise_features: usize,
    #[serde(default = "one")]
    pub modes_per_class: usize,
    #[serde(default)]
    pub mode_spread: f64,
}

fn one() -> usize {
    1
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            n_features: 10,
            n_classes: 3,
            separation: 10.0,
            n_noise_features: 2,
            modes_per_class: 1,
            mode_spread: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.n_samples >= 1, "n_samples must be positive");
        ensure!(self.n_features >= 1, "n_features must be positive");
        ensure!(self.n_classes >= 1, "n_classes must be positive");
        ensure!(
            self.n_noise_features <= self.n_features,
            "{} noise features exceed {} features",
            self.n_noise_features,
            self.n_features
        );
        ensure!(
            self.separation.is_finite() && self.separation >= 0.0,
            "separation must be finite and non-negative"
        );
        ensure!(
            self.modes_per_class >= 1,
            "modes_per_class must be positive"
        );
        ensure!(
            self.mode_spread.is_finite() && self.mode_spread >= 0.0,
            "mode_spread must be finite and non-negative"
        );
        Ok(())
    }
}

pub fn synth_tabular(config: &SynthConfig, seed: u64) -> Result<TabularDataset> {
    config.validate()?;
    let informative = config.n_features - config.n_noise_features;
    let k = config.n_classes;

    let mut layout = rng::stream(seed, 0);
    let mut centres = vec![vec![0.0; informative]; k];
    #[allow(clippy::needless_range_loop)]
    for j in 0..informative {
        let mut order: Vec<usize> = (0..k).collect();
        order.shuffle(&mut layout);
        for (c, &slot) in order.iter().enumerate() {
            centres[c][j] = config.separation * slot as f64;
        }
    }
    // modes[c][r] = centre of style r of class c
    let modes: Vec<Vec<Vec<f64>>> = centres
        .iter()
        .map(|centre| {
            (0..config.modes_per_class)
                .map(|r| {
                    centre
                        .iter()
                        .map(|&m| {
                            if r == 0 {
                                m
                            } else {
                                let z: f64 = StandardNormal.sample(&mut layout);
                                m + config.mode_spread * z
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let weights: Vec<f64> = (0..config.modes_per_class)
        .map(|r| 1.0 / (r + 1) as f64)
        .collect();
    let mode_pick = rand_distr::weighted::WeightedIndex::new(&weights).expect("positive weights");

    let mut draws = rng::stream(seed, 1);
    let mut rows = Vec::with_capacity(config.n_samples);
    let mut labels = Vec::with_capacity(config.n_samples);
    for i in 0..config.n_samples {
        let c = i % k;
        let mode = &modes[c][mode_pick.sample(&mut draws)];
        let mut row = Vec::with_capacity(config.n_features);
        for &m in mode {
            let z: f64 = StandardNormal.sample(&mut draws);
            row.push(m + z);
        }
        for _ in 0..config.n_noise_features {
            row.push(StandardNormal.sample(&mut draws));
        }
        rows.push(row);
        labels.push(c);
    }
    TabularDataset::with_labels(rows, labels)
}

/// Ten overlapping Gaussian classes of 100 samples in six dimensions,
/// used for prototype-selection experiments.
pub fn clustered_config() -> SynthConfig {
    SynthConfig {
        n_samples: 1000,
        n_features: 6,
        n_classes: 10,
        separation: 0.3,
        n_noise_features: 0,
        modes_per_class: 1,
        mode_spread: 0.0,
    }
}

/// Clustered dataset together with a softmax classifier trained on it.
#[derive(Debug, Clone)]
pub struct ClusteredBenchmark {
    pub data: TabularDataset,
    pub model: LinearSoftmax,
}

pub fn clustered_benchmark(seed: u64) -> Result<ClusteredBenchmark> {
    let cfg = clustered_config();
    let data = synth_tabular(&cfg, seed)?;
    let model = LinearSoftmax::train(&data, cfg.n_classes, 300, 0.5, 1e-3)?;
    Ok(ClusteredBenchmark { data, model })
}
