use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Samples stored as fixed-width real rows with optional class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    rows: Vec<Vec<f64>>,
    labels: Option<Vec<usize>>,
    feature_names: Option<Vec<String>>,
}

impl TabularDataset {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::build(rows, None, None)
    }

    pub fn with_labels(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        Self::build(rows, Some(labels), None)
    }

    pub fn build(
        rows: Vec<Vec<f64>>,
        labels: Option<Vec<usize>>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        ensure!(!rows.is_empty(), "dataset has no samples");
        let width = rows[0].len();
        ensure!(width >= 1, "dataset rows must have at least one feature");
        for (i, row) in rows.iter().enumerate() {
            ensure!(
                row.len() == width,
                "row {i} has width {} but the dataset width is {width}",
                row.len()
            );
            ensure!(
                row.iter().all(|v| v.is_finite()),
                "row {i} contains a non-finite value"
            );
        }
        if let Some(labels) = &labels {
            ensure!(
                labels.len() == rows.len(),
                "{} labels for {} samples",
                labels.len(),
                rows.len()
            );
        }
        if let Some(names) = &feature_names {
            ensure!(
                names.len() == width,
                "{} feature names for {width} features",
                names.len()
            );
        }
        Ok(Self {
            rows,
            labels,
            feature_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Number of classes implied by the labels (`max + 1`), zero when unlabeled.
    pub fn n_classes(&self) -> usize {
        self.labels
            .as_ref()
            .and_then(|l| l.iter().max())
            .map_or(0, |m| m + 1)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Indices of the samples carrying label `class`.
    pub fn class_indices(&self, class: usize) -> Vec<usize> {
        match &self.labels {
            Some(labels) => labels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == class)
                .map(|(i, _)| i)
                .collect(),
            None => Vec::new(),
        }
    }

    /// Sub-dataset made of the given sample indices, in order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        ensure!(!indices.is_empty(), "empty subset");
        let rows = indices.iter().map(|&i| self.rows[i].clone()).collect();
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        Self::build(rows, labels, self.feature_names.clone())
    }

    pub fn with_rows(&self, rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::build(rows, self.labels.clone(), None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_rows() {
        let err = TabularDataset::new(vec![vec![1.0, 2.0], vec![1.0]]).unwrap_err();
        assert!(err.to_string().contains("width"));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(TabularDataset::new(vec![vec![f64::NAN]]).is_err());
        assert!(TabularDataset::new(vec![vec![f64::INFINITY]]).is_err());
    }

    #[test]
    fn rejects_zero_width_and_empty() {
        assert!(TabularDataset::new(vec![vec![]]).is_err());
        assert!(TabularDataset::new(vec![]).is_err());
    }

    #[test]
    fn class_queries() {
        let ds = TabularDataset::with_labels(vec![vec![0.0], vec![1.0], vec![2.0]], vec![1, 0, 1])
            .unwrap();
        assert_eq!(ds.n_classes(), 2);
        assert_eq!(ds.class_indices(1), vec![0, 2]);
        assert_eq!(ds.subset(&[2, 1]).unwrap().labels(), Some(&[1, 0][..]));
    }
}
