//! Greedy top-down classification trees (CART).
//!
//! Splits are axis-aligned thresholds at midpoints between consecutive
//! distinct values. The best split maximises the impurity decrease; ties go
//! to the lowest feature index, then the lowest threshold. A node becomes a
//! leaf at `max_depth`, when it is pure, when it holds fewer than two samples,
//! or when no split decreases impurity by more than `1e-12`.

use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{contract, ensure, Result};
use crate::model::{check_arity, Model, OutputKind, Prediction};

const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitCriterion {
    Gini,
    Entropy,
}

impl SplitCriterion {
    pub fn impurity(self, counts: &[usize], total: usize) -> f64 {
        if total == 0 {
            return 0.0;
        }
        let n = total as f64;
        match self {
            SplitCriterion::Gini => {
                1.0 - counts
                    .iter()
                    .map(|&c| {
                        let p = c as f64 / n;
                        p * p
                    })
                    .sum::<f64>()
            }
            SplitCriterion::Entropy => -counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / n;
                    p * p.ln()
                })
                .sum::<f64>(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        distribution: Vec<f64>,
    },
}

/// Best split of a node, with its impurity decrease.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Exhaustive search for the best midpoint split over the given samples.
pub fn best_split(
    columns: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    samples: &[usize],
    criterion: SplitCriterion,
) -> Option<Split> {
    let total = samples.len();
    let mut parent_counts = vec![0usize; n_classes];
    for &s in samples {
        parent_counts[labels[s]] += 1;
    }
    let parent = criterion.impurity(&parent_counts, total);
    let mut best: Option<Split> = None;
    let mut sorted = samples.to_vec();
    for (feature, column) in columns.iter().enumerate() {
        sorted.sort_by(|&a, &b| column[a].total_cmp(&column[b]));
        let mut left = vec![0usize; n_classes];
        let mut right = parent_counts.clone();
        for pos in 0..total.saturating_sub(1) {
            let s = sorted[pos];
            left[labels[s]] += 1;
            right[labels[s]] -= 1;
            let (lo, hi) = (column[s], column[sorted[pos + 1]]);
            if lo == hi {
                continue;
            }
            let n_left = pos + 1;
            let n_right = total - n_left;
            let child = (n_left as f64 * criterion.impurity(&left, n_left)
                + n_right as f64 * criterion.impurity(&right, n_right))
                / total as f64;
            let gain = parent - child;
            if best.is_none_or(|b| gain > b.gain) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(Split {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
    }
    best.filter(|b| b.gain > MIN_GAIN)
}

/// Fitted classification tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeModel {
    nodes: Vec<Node>,
    n_features: usize,
    n_classes: usize,
    max_depth: usize,
    criterion: SplitCriterion,
}

impl DecisionTreeModel {
    /// Grows a tree on column-major features.
    pub fn fit_columns(
        columns: &[Vec<f64>],
        labels: &[usize],
        n_classes: usize,
        max_depth: usize,
        criterion: SplitCriterion,
    ) -> Result<Self> {
        ensure!(!columns.is_empty(), "tree needs at least one feature");
        ensure!(!labels.is_empty(), "tree needs at least one sample");
        ensure!(
            columns.iter().all(|c| c.len() == labels.len()),
            "feature columns and labels differ in length"
        );
        ensure!(
            labels.iter().all(|&l| l < n_classes),
            "label out of range for {n_classes} classes"
        );
        let mut tree = Self {
            nodes: Vec::new(),
            n_features: columns.len(),
            n_classes,
            max_depth,
            criterion,
        };
        let all: Vec<usize> = (0..labels.len()).collect();
        tree.grow(columns, labels, &all, 0);
        Ok(tree)
    }

    fn grow(
        &mut self,
        columns: &[Vec<f64>],
        labels: &[usize],
        samples: &[usize],
        depth: usize,
    ) -> usize {
        let id = self.nodes.len();
        let mut counts = vec![0usize; self.n_classes];
        for &s in samples {
            counts[labels[s]] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let split = if depth >= self.max_depth || pure || samples.len() < 2 {
            None
        } else {
            best_split(columns, labels, self.n_classes, samples, self.criterion)
        };
        match split {
            None => {
                let n = samples.len() as f64;
                self.nodes.push(Node::Leaf {
                    distribution: counts.iter().map(|&c| c as f64 / n).collect(),
                });
            }
            Some(split) => {
                self.nodes.push(Node::Leaf {
                    distribution: Vec::new(),
                });
                let column = &columns[split.feature];
                let (l, r): (Vec<usize>, Vec<usize>) =
                    samples.iter().partition(|&&s| column[s] <= split.threshold);
                let left = self.grow(columns, labels, &l, depth + 1);
                let right = self.grow(columns, labels, &r, depth + 1);
                self.nodes[id] = Node::Split {
                    feature: split.feature,
                    threshold: split.threshold,
                    left,
                    right,
                };
            }
        }
        id
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    /// Length of the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Split thresholds used on `feature`, sorted and deduplicated.
    pub fn thresholds(&self, feature: usize) -> Vec<f64> {
        let mut t: Vec<f64> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split {
                    feature: f,
                    threshold,
                    ..
                } if *f == feature => Some(*threshold),
                _ => None,
            })
            .collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }

    pub fn distribution(&self, x: &[f64]) -> &[f64] {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { distribution } => return distribution,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    id = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    pub fn accuracy(&self, data: &TabularDataset) -> Result<f64> {
        let labels = data
            .labels()
            .ok_or_else(|| contract("accuracy needs labeled data"))?;
        let hits = data
            .rows()
            .iter()
            .zip(labels)
            .filter(|(x, &y)| crate::model::argmax(self.distribution(x)) == y)
            .count();
        Ok(hits as f64 / data.n_samples() as f64)
    }
}

/// Gini CART on a labeled dataset.
pub fn fit_decision_tree(data: &TabularDataset, max_depth: usize) -> Result<DecisionTreeModel> {
    let labels = data
        .labels()
        .ok_or_else(|| contract("decision tree needs labeled data"))?;
    let columns: Vec<Vec<f64>> = (0..data.n_features()).map(|j| data.column(j)).collect();
    DecisionTreeModel::fit_columns(
        &columns,
        labels,
        data.n_classes(),
        max_depth,
        SplitCriterion::Gini,
    )
}

impl Model for DecisionTreeModel {
    fn arity(&self) -> usize {
        self.n_features
    }

    fn output_kind(&self) -> OutputKind {
        OutputKind::Probs
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        check_arity(self, x)?;
        Ok(Prediction::Probs(self.distribution(x).to_vec()))
    }
}
