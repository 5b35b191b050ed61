//! Nearest-neighbour and plug-in mutual information estimators (nats).
//!
//! - continuous/continuous: Kraskov–Stögbauer–Grassberger estimator #1 under
//!   the max-coordinate metric;
//! - continuous/discrete: the nearest-neighbour estimator with per-class
//!   neighbour counts (Ross, 2014), dropping classes with a single sample;
//! - discrete/discrete: plug-in `H(X) + H(Y) - H(X,Y)` on joint frequencies.
//!
//! Continuous coordinates are standardised and then jittered by
//! `1e-10 * N(0,1)` (seeded) to break distance ties.

use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::error::{ensure, Result};
use crate::rng;

pub const DEFAULT_NEIGHBORS: usize = 3;
const JITTER: f64 = 1e-10;

/// One side of a mutual-information query.
#[derive(Debug, Clone, PartialEq)]
pub enum Variable {
    /// Row-major samples of a `dim`-dimensional continuous variable.
    Continuous { values: Vec<f64>, dim: usize },
    /// Symbol per sample.
    Discrete(Vec<usize>),
}

impl Variable {
    pub fn continuous(rows: &[Vec<f64>]) -> Result<Self> {
        ensure!(!rows.is_empty(), "variable has no samples");
        let dim = rows[0].len();
        ensure!(
            dim >= 1,
            "continuous variable needs at least one coordinate"
        );
        ensure!(
            rows.iter().all(|r| r.len() == dim),
            "ragged continuous variable"
        );
        Ok(Variable::Continuous {
            values: rows.concat(),
            dim,
        })
    }

    pub fn continuous_1d(values: &[f64]) -> Self {
        Variable::Continuous {
            values: values.to_vec(),
            dim: 1,
        }
    }

    pub fn discrete(symbols: Vec<usize>) -> Self {
        Variable::Discrete(symbols)
    }

    /// Treats each row as one joint symbol. Symbols are numbered in order of
    /// first appearance.
    pub fn discrete_rows(rows: &[Vec<f64>]) -> Self {
        let mut ids: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        let symbols = rows
            .iter()
            .map(|r| {
                let key: Vec<u64> = r.iter().map(|v| v.to_bits()).collect();
                let next = ids.len();
                *ids.entry(key).or_insert(next)
            })
            .collect();
        Variable::Discrete(symbols)
    }

    pub fn len(&self) -> usize {
        match self {
            Variable::Continuous { values, dim } => values.len() / dim,
            Variable::Discrete(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MiEstimator {
    KsgContinuous,
    MixedDiscrete,
    PluginDiscrete,
}

/// Mutual information estimate. `value` is `raw` clamped at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MIEstimate {
    pub value: f64,
    pub raw: f64,
    pub estimator: MiEstimator,
    pub k_neighbors: usize,
    pub n_samples: usize,
}

pub fn estimate_mi(a: &Variable, b: &Variable, k: usize, seed: u64) -> Result<MIEstimate> {
    let n = a.len();
    ensure!(n == b.len(), "sample counts differ: {n} vs {}", b.len());
    ensure!(k >= 1, "k must be positive");
    ensure!(k < n, "k = {k} must be below the sample count {n}");
    ensure!(
        n >= (k + 2).max(20),
        "need at least max(20, k+2) = {} samples, got {n}",
        (k + 2).max(20)
    );
    let (raw, estimator) = match (a, b) {
        (Variable::Discrete(x), Variable::Discrete(y)) => {
            (plugin_mi(x, y), MiEstimator::PluginDiscrete)
        }
        (Variable::Continuous { values, dim }, Variable::Discrete(y))
        | (Variable::Discrete(y), Variable::Continuous { values, dim }) => {
            let x = prepare(values, *dim, seed, 0);
            (mixed_mi(&x, *dim, y, k), MiEstimator::MixedDiscrete)
        }
        (
            Variable::Continuous {
                values: xa,
                dim: da,
            },
            Variable::Continuous {
                values: xb,
                dim: db,
            },
        ) => {
            let pa = prepare(xa, *da, seed, 0);
            let pb = prepare(xb, *db, seed, 1);
            (ksg_mi(&pa, *da, &pb, *db, k), MiEstimator::KsgContinuous)
        }
    };
    Ok(MIEstimate {
        value: raw.max(0.0),
        raw,
        estimator,
        k_neighbors: k,
        n_samples: n,
    })
}

/// Standardises each coordinate (constant ones are only centred) and adds
/// seeded jitter.
fn prepare(values: &[f64], dim: usize, seed: u64, stream: u64) -> Vec<f64> {
    let n = values.len() / dim;
    let mut out = values.to_vec();
    for j in 0..dim {
        let mean = (0..n).map(|i| values[i * dim + j]).sum::<f64>() / n as f64;
        let var = (0..n)
            .map(|i| (values[i * dim + j] - mean).powi(2))
            .sum::<f64>()
            / n as f64;
        let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        for i in 0..n {
            out[i * dim + j] = (values[i * dim + j] - mean) / scale;
        }
    }
    let mut r = rng::stream(seed, stream);
    for v in &mut out {
        let z: f64 = StandardNormal.sample(&mut r);
        *v += JITTER * z;
    }
    out
}

fn chebyshev(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
}

/// KSG estimator #1: `psi(k) + psi(n) - <psi(n_x + 1) + psi(n_y + 1)>`.
fn ksg_mi(x: &[f64], dx: usize, y: &[f64], dy: usize, k: usize) -> f64 {
    let n = x.len() / dx;
    let sum: f64 = (0..n)
        .into_par_iter()
        .map_init(
            || {
                (
                    Vec::with_capacity(n),
                    Vec::with_capacity(n),
                    Vec::with_capacity(n),
                )
            },
            |(dist_x, dist_y, joint), i| {
                dist_x.clear();
                dist_y.clear();
                joint.clear();
                let xi = &x[i * dx..(i + 1) * dx];
                let yi = &y[i * dy..(i + 1) * dy];
                for j in (0..n).filter(|&j| j != i) {
                    let a = chebyshev(xi, &x[j * dx..(j + 1) * dx]);
                    let b = chebyshev(yi, &y[j * dy..(j + 1) * dy]);
                    dist_x.push(a);
                    dist_y.push(b);
                    joint.push(a.max(b));
                }
                let (_, eps, _) = joint.select_nth_unstable_by(k - 1, f64::total_cmp);
                let eps = *eps;
                let nx = dist_x.iter().filter(|&&d| d < eps).count();
                let ny = dist_y.iter().filter(|&&d| d < eps).count();
                digamma((nx + 1) as f64) + digamma((ny + 1) as f64)
            },
        )
        .sum();
    digamma(k as f64) + digamma(n as f64) - sum / n as f64
}

/// Continuous `x` against class labels `y`.
fn mixed_mi(x: &[f64], dim: usize, y: &[usize], k: usize) -> f64 {
    let n = y.len();
    let mut class_count: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in y {
        *class_count.entry(c).or_default() += 1;
    }
    let kept: Vec<usize> = (0..n).filter(|&i| class_count[&y[i]] > 1).collect();
    if kept.is_empty() {
        return 0.0;
    }
    let point = |i: usize| &x[i * dim..(i + 1) * dim];
    let terms: Vec<(f64, f64, f64)> = kept
        .par_iter()
        .map(|&i| {
            let count = class_count[&y[i]];
            let kc = k.min(count - 1);
            let mut same: Vec<f64> = kept
                .iter()
                .filter(|&&j| j != i && y[j] == y[i])
                .map(|&j| chebyshev(point(i), point(j)))
                .collect();
            let (_, radius, _) = same.select_nth_unstable_by(kc - 1, f64::total_cmp);
            let radius = *radius;
            // the point itself plus every kept point strictly inside the radius
            let m = 1 + kept
                .iter()
                .filter(|&&j| j != i && chebyshev(point(i), point(j)) < radius)
                .count();
            (digamma(kc as f64), digamma(count as f64), digamma(m as f64))
        })
        .collect();
    let nk = kept.len() as f64;
    let (sk, sc, sm) = terms.iter().fold((0.0, 0.0, 0.0), |acc, t| {
        (acc.0 + t.0, acc.1 + t.1, acc.2 + t.2)
    });
    digamma(nk) + sk / nk - sc / nk - sm / nk
}

/// Plug-in entropy (nats) of a symbol sequence.
pub fn plugin_entropy<K: Ord + Clone>(symbols: &[K]) -> f64 {
    let mut counts: BTreeMap<K, usize> = BTreeMap::new();
    for s in symbols {
        *counts.entry(s.clone()).or_default() += 1;
    }
    entropy_from_counts(counts.values().copied(), symbols.len())
}

pub(crate) fn entropy_from_counts(counts: impl Iterator<Item = usize>, total: usize) -> f64 {
    let n = total as f64;
    -counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

fn plugin_mi(x: &[usize], y: &[usize]) -> f64 {
    let joint: Vec<(usize, usize)> = x.iter().copied().zip(y.iter().copied()).collect();
    plugin_entropy(x) + plugin_entropy(y) - plugin_entropy(&joint)
}
