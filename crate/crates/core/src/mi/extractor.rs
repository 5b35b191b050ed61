use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::bench::tree::{DecisionTreeModel, SplitCriterion};
use crate::data::TabularDataset;
use crate::error::{contract, ensure, Result};
use crate::rng;

/// Replacement value used by the out-of-distribution extractor by default.
pub const OOD_VALUE: f64 = -10.0;

/// Map `g` from the original inputs to an interpretable representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FeatureExtractor {
    Identity {
        arity: usize,
    },
    /// Overwrites the listed columns with a constant.
    RandomOod {
        arity: usize,
        indices: Vec<usize>,
        value: f64,
    },
    /// Per-feature bin edges; the output is the bin index of each value.
    EntropyDiscretizer {
        edges: Vec<Vec<f64>>,
    },
}

impl FeatureExtractor {
    pub fn identity(arity: usize) -> Self {
        FeatureExtractor::Identity { arity }
    }

    /// Replaces `n_replaced` distinct columns, drawn with `seed`, by `value`.
    pub fn random_ood(arity: usize, n_replaced: usize, value: f64, seed: u64) -> Result<Self> {
        ensure!(
            n_replaced <= arity,
            "cannot replace {n_replaced} of {arity} features"
        );
        let mut indices = index::sample(&mut rng::stream(seed, 0), arity, n_replaced).into_vec();
        indices.sort_unstable();
        Self::random_ood_at(arity, indices, value)
    }

    pub fn random_ood_at(arity: usize, indices: Vec<usize>, value: f64) -> Result<Self> {
        ensure!(value.is_finite(), "replacement value must be finite");
        ensure!(
            indices.iter().all(|&i| i < arity),
            "replaced index out of range for arity {arity}"
        );
        Ok(FeatureExtractor::RandomOod {
            arity,
            indices,
            value,
        })
    }

    pub fn discretizer(edges: Vec<Vec<f64>>) -> Result<Self> {
        ensure!(!edges.is_empty(), "discretizer needs at least one feature");
        for (j, e) in edges.iter().enumerate() {
            ensure!(
                e.windows(2).all(|w| w[0] < w[1]),
                "bin edges of feature {j} are not strictly increasing"
            );
        }
        Ok(FeatureExtractor::EntropyDiscretizer { edges })
    }

    pub fn arity(&self) -> usize {
        match self {
            FeatureExtractor::Identity { arity } | FeatureExtractor::RandomOod { arity, .. } => {
                *arity
            }
            FeatureExtractor::EntropyDiscretizer { edges } => edges.len(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FeatureExtractor::Identity { .. } => "identity",
            FeatureExtractor::RandomOod { .. } => "random-ood",
            FeatureExtractor::EntropyDiscretizer { .. } => "entropy",
        }
    }

    /// Whether the output is a symbol per feature rather than a real value.
    pub fn is_discrete(&self) -> bool {
        matches!(self, FeatureExtractor::EntropyDiscretizer { .. })
    }

    pub fn apply_row(&self, x: &[f64]) -> Vec<f64> {
        match self {
            FeatureExtractor::Identity { .. } => x.to_vec(),
            FeatureExtractor::RandomOod { indices, value, .. } => {
                let mut z = x.to_vec();
                for &i in indices {
                    z[i] = *value;
                }
                z
            }
            FeatureExtractor::EntropyDiscretizer { edges } => x
                .iter()
                .zip(edges)
                .map(|(&v, e)| bin_index(e, v) as f64)
                .collect(),
        }
    }
}

/// Bin of `v` given sorted edges: values `<= edge` fall on its left.
pub fn bin_index(edges: &[f64], v: f64) -> usize {
    edges.partition_point(|&e| e < v)
}

pub fn apply_extractor(g: &FeatureExtractor, data: &TabularDataset) -> Result<TabularDataset> {
    ensure!(
        g.arity() == data.n_features(),
        "extractor takes {} features, dataset has {}",
        g.arity(),
        data.n_features()
    );
    let rows = data.rows().iter().map(|x| g.apply_row(x)).collect();
    TabularDataset::build(rows, data.labels().map(<[usize]>::to_vec), None)
}

/// Grows, for each feature on its own, an entropy-criterion tree of depth at
/// most `max_depth` against the labels; its sorted thresholds become that
/// feature's bin edges.
pub fn fit_entropy_discretizer(
    data: &TabularDataset,
    max_depth: usize,
) -> Result<FeatureExtractor> {
    ensure!(max_depth >= 1, "max_depth must be at least 1");
    let labels = data
        .labels()
        .ok_or_else(|| contract("entropy discretizer needs labeled data"))?;
    let n_classes = data.n_classes();
    let edges = (0..data.n_features())
        .map(|j| {
            let tree = DecisionTreeModel::fit_columns(
                &[data.column(j)],
                labels,
                n_classes,
                max_depth,
                SplitCriterion::Entropy,
            )?;
            Ok(tree.thresholds(0))
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureExtractor::discretizer(edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeled(xs: &[f64], ys: &[usize]) -> TabularDataset {
        TabularDataset::with_labels(xs.iter().map(|&v| vec![v]).collect(), ys.to_vec()).unwrap()
    }

    #[test]
    fn perfectly_separating_feature() {
        let xs = [0.0, 0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9, 1.0];
        let ys = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        let g = fit_entropy_discretizer(&labeled(&xs, &ys), 1).unwrap();
        assert_eq!(
            g,
            FeatureExtractor::EntropyDiscretizer {
                edges: vec![vec![0.5]]
            }
        );
    }

    #[test]
    fn constant_feature_gets_no_edges() {
        let g = fit_entropy_discretizer(&labeled(&[3.0; 10], &[0, 1, 0, 1, 0, 1, 0, 1, 0, 1]), 3)
            .unwrap();
        assert_eq!(
            g,
            FeatureExtractor::EntropyDiscretizer {
                edges: vec![vec![]]
            }
        );
    }

    #[test]
    fn uninformative_feature_gets_no_edges() {
        // every value carries one sample of each class, so no split has gain
        let xs = [1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0];
        let ys = [0, 1, 0, 1, 0, 1, 0, 1];
        let data = labeled(&xs, &ys);
        let columns = vec![data.column(0)];
        let all: Vec<usize> = (0..8).collect();
        // oracle: enumerate every midpoint and compute its entropy gain
        for t in [1.5, 2.5, 3.5] {
            let (l, r): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| xs[i] <= t);
            let h = |s: &[usize]| {
                let ones = s.iter().filter(|&&i| ys[i] == 1).count();
                SplitCriterion::Entropy.impurity(&[s.len() - ones, ones], s.len())
            };
            let gain = h(&all) - (l.len() as f64 * h(&l) + r.len() as f64 * h(&r)) / 8.0;
            assert!(gain.abs() <= 1e-12);
        }
        assert!(
            crate::bench::tree::best_split(&columns, &ys, 2, &all, SplitCriterion::Entropy)
                .is_none()
        );
        let g = fit_entropy_discretizer(&data, 2).unwrap();
        assert_eq!(
            g,
            FeatureExtractor::EntropyDiscretizer {
                edges: vec![vec![]]
            }
        );
    }

    #[test]
    fn random_ood_replaces_configured_columns() {
        let g = FeatureExtractor::random_ood_at(6, vec![0, 2, 4], OOD_VALUE).unwrap();
        assert_eq!(
            g.apply_row(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
            vec![-10.0, 2.0, -10.0, 4.0, -10.0, 6.0]
        );
        let drawn = FeatureExtractor::random_ood(10, 3, OOD_VALUE, 5).unwrap();
        match drawn {
            FeatureExtractor::RandomOod { indices, .. } => {
                assert_eq!(indices.len(), 3);
                assert!(indices.windows(2).all(|w| w[0] < w[1]));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn threshold_semantics() {
        let g = FeatureExtractor::discretizer(vec![vec![0.5]]).unwrap();
        assert_eq!(g.apply_row(&[0.3]), vec![0.0]);
        assert_eq!(g.apply_row(&[0.7]), vec![1.0]);
        assert_eq!(g.apply_row(&[0.5]), vec![0.0]);
        assert!(FeatureExtractor::discretizer(vec![vec![1.0, 1.0]]).is_err());
    }

    #[test]
    fn identity_is_bitwise_and_arity_checked() {
        let data = TabularDataset::new(vec![vec![0.1, -0.0], vec![1e300, 5.0]]).unwrap();
        let out = apply_extractor(&FeatureExtractor::identity(2), &data).unwrap();
        assert_eq!(out, data);
        assert!(apply_extractor(&FeatureExtractor::identity(3), &data).is_err());
    }
}
