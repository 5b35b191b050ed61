//! Example-based explanations: prototype selectors and the metrics judging
//! them.
//!
//! An [`ExampleSet`] explains a prediction `y*` with a handful of samples.
//! Its non-representativeness is the mean loss between `y*` and the model's
//! predictions on the examples; its diversity is the mean pairwise distance
//! between them. Three selectors build such sets from one class of a
//! dataset: PAM k-medoids, greedy MMD minimisation and ProtoDash.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{contract, ensure, Error, Result};
use crate::loss::LossFunction;
use crate::model::{check_arity, Model, Prediction};

const MAX_SWAP_PASSES: usize = 100;
const NNLS_ITERATIONS: usize = 500;
const NNLS_TOLERANCE: f64 = 1e-8;

/// Examples explaining one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleSet {
    pub examples: Vec<Vec<f64>>,
    pub target_prediction: Prediction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_indices: Option<Vec<usize>>,
}

impl ExampleSet {
    pub fn new(examples: Vec<Vec<f64>>, target_prediction: Prediction) -> Result<Self> {
        ensure!(
            !examples.is_empty(),
            "an example set needs at least one example"
        );
        let d = examples[0].len();
        ensure!(
            examples.iter().all(|e| e.len() == d),
            "examples must share one arity"
        );
        Ok(Self {
            examples,
            target_prediction,
            source_indices: None,
        })
    }

    fn from_indices(data: &TabularDataset, indices: Vec<usize>, target: Prediction) -> Self {
        Self {
            examples: indices.iter().map(|&i| data.row(i).to_vec()).collect(),
            target_prediction: target,
            source_indices: Some(indices),
        }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distance {
    #[default]
    Euclidean,
    Manhattan,
}

impl Distance {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Distance::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Distance::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }
}

impl std::str::FromStr for Distance {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "euclidean" => Ok(Distance::Euclidean),
            "manhattan" => Ok(Distance::Manhattan),
            other => Err(format!("unknown distance `{other}`")),
        }
    }
}

/// Which pairs the diversity sum runs over before dividing by `2 N_E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairCounting {
    /// Every `(i, j)` with `i != j`; each unordered pair counts twice.
    #[default]
    Ordered,
    /// Each unordered pair once.
    Unordered,
}

/// Mean loss between `y*` and the model's predictions on the examples.
///
/// When `y*` is a label and the model emits probabilities, predictions are
/// reduced to their argmax class first.
pub fn non_representativeness(
    set: &ExampleSet,
    model: &dyn Model,
    loss: LossFunction,
) -> Result<f64> {
    ensure!(!set.is_empty(), "empty example set");
    let mut total = 0.0;
    for x in &set.examples {
        check_arity(model, x)?;
        let mut y = model.predict(x)?;
        if matches!(set.target_prediction, Prediction::Label(_)) {
            if let Some(c) = y.class() {
                y = Prediction::Label(c);
            }
        }
        total += loss.evaluate(&set.target_prediction, &y)?;
    }
    Ok(total / set.len() as f64)
}

/// `sum_{i != j} d(x_i, x_j) / (2 N_E)` (or the unordered-pair variant).
/// Rows are put in lexicographic order first so the value does not depend
/// on the order of the examples.
pub fn diversity(set: &ExampleSet, metric: Distance, pairs: PairCounting) -> f64 {
    let n = set.len();
    if n < 2 {
        return 0.0;
    }
    let mut rows: Vec<&Vec<f64>> = set.examples.iter().collect();
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            let counted = match pairs {
                PairCounting::Ordered => i != j,
                PairCounting::Unordered => i < j,
            };
            if counted {
                sum += metric.eval(rows[i], rows[j]);
            }
        }
    }
    sum / (2 * n) as f64
}

/// Gaussian RBF kernel `exp(-|x - y|^2 / (2 sigma^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default)]
    pub kind: KernelKind,
    /// Explicit `sigma`; `None` selects the median heuristic.
    #[serde(default)]
    pub bandwidth: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    #[default]
    GaussianRbf,
}

impl KernelConfig {
    pub fn rbf(bandwidth: f64) -> Self {
        Self {
            kind: KernelKind::GaussianRbf,
            bandwidth: Some(bandwidth),
        }
    }

    pub fn median_heuristic() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.bandwidth {
            ensure!(
                b > 0.0 && b.is_finite(),
                "kernel bandwidth must be positive, got {b}"
            );
        }
        Ok(())
    }

    /// Bandwidth for `rows`: the explicit value or the median pairwise
    /// Euclidean distance (1 when all rows coincide).
    pub fn resolve(&self, rows: &[&[f64]]) -> Result<f64> {
        self.validate()?;
        if let Some(b) = self.bandwidth {
            return Ok(b);
        }
        let mut d: Vec<f64> = (0..rows.len())
            .flat_map(|i| (i + 1..rows.len()).map(move |j| (i, j)))
            .map(|(i, j)| Distance::Euclidean.eval(rows[i], rows[j]))
            .collect();
        if d.is_empty() {
            return Ok(1.0);
        }
        d.sort_by(f64::total_cmp);
        let m = d.len();
        let median = if m % 2 == 1 {
            d[m / 2]
        } else {
            0.5 * (d[m / 2 - 1] + d[m / 2])
        };
        Ok(if median > 0.0 { median } else { 1.0 })
    }
}

/// Dense symmetric matrix of pairwise values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMatrix {
    n: usize,
    values: Vec<f64>,
}

impl PairMatrix {
    fn build(rows: &[&[f64]], f: impl Fn(&[f64], &[f64]) -> f64 + Sync) -> Self {
        let n = rows.len();
        let values = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let f = &f;
                (0..n).map(move |j| f(rows[i], rows[j]))
            })
            .collect();
        Self { n, values }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.values)
    }
}

pub fn distance_matrix(rows: &[&[f64]], metric: Distance) -> PairMatrix {
    PairMatrix::build(rows, |a, b| metric.eval(a, b))
}

pub fn rbf_gram(rows: &[&[f64]], bandwidth: f64) -> PairMatrix {
    let s = 2.0 * bandwidth * bandwidth;
    PairMatrix::build(rows, |a, b| {
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        (-d2 / s).exp()
    })
}

/// Rows eligible for selection: one class, or the whole dataset.
fn filtered(data: &TabularDataset, class: Option<usize>, n: usize) -> Result<Vec<usize>> {
    let indices = match class {
        Some(c) => {
            ensure!(
                data.labels().is_some(),
                "class filter needs a labeled dataset"
            );
            data.class_indices(c)
        }
        None => (0..data.n_samples()).collect(),
    };
    ensure!(n >= 1, "at least one prototype must be requested");
    ensure!(
        indices.len() >= n,
        "{n} prototypes requested but only {} samples available",
        indices.len()
    );
    Ok(indices)
}

fn target(class: Option<usize>) -> Prediction {
    Prediction::Label(class.unwrap_or(0))
}

fn total_cost(dist: &PairMatrix, medoids: &[usize]) -> f64 {
    (0..dist.len())
        .map(|i| {
            medoids
                .iter()
                .map(|&m| dist.get(i, m))
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// PAM on a precomputed distance matrix; returns local indices in
/// ascending order.
pub fn pam(dist: &PairMatrix, n: usize) -> Result<Vec<usize>> {
    let size = dist.len();
    ensure!(
        n >= 1 && n <= size,
        "cannot choose {n} medoids from {size} points"
    );
    let mut is_medoid = vec![false; size];
    let mut medoids = Vec::with_capacity(n);
    let mut nearest = vec![f64::INFINITY; size];

    // BUILD
    while medoids.len() < n {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for c in (0..size).filter(|&c| !is_medoid[c]) {
            let gain: f64 = if medoids.is_empty() {
                -(0..size).map(|i| dist.get(i, c)).sum::<f64>()
            } else {
                (0..size)
                    .map(|i| (nearest[i] - dist.get(i, c)).max(0.0))
                    .sum()
            };
            if gain > best.1 {
                best = (c, gain);
            }
        }
        let c = best.0;
        is_medoid[c] = true;
        medoids.push(c);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(dist.get(i, c));
        }
    }

    // SWAP
    for _ in 0..MAX_SWAP_PASSES {
        let mut first = vec![0usize; size];
        let mut d1 = vec![f64::INFINITY; size];
        let mut d2 = vec![f64::INFINITY; size];
        for i in 0..size {
            for (slot, &m) in medoids.iter().enumerate() {
                let d = dist.get(i, m);
                if d < d1[i] {
                    d2[i] = d1[i];
                    d1[i] = d;
                    first[i] = slot;
                } else if d < d2[i] {
                    d2[i] = d;
                }
            }
        }
        let mut best = (0usize, 0usize, 0.0f64);
        for slot in 0..medoids.len() {
            for h in (0..size).filter(|&h| !is_medoid[h]) {
                let delta: f64 = (0..size)
                    .map(|i| {
                        let keep = if first[i] == slot { d2[i] } else { d1[i] };
                        keep.min(dist.get(i, h)) - d1[i]
                    })
                    .sum();
                if delta < best.2 {
                    best = (slot, h, delta);
                }
            }
        }
        let scale = d1.iter().sum::<f64>().max(1.0);
        if best.2 >= -1e-12 * scale {
            break;
        }
        let (slot, h, _) = best;
        is_medoid[medoids[slot]] = false;
        is_medoid[h] = true;
        medoids[slot] = h;
    }
    medoids.sort_unstable();
    Ok(medoids)
}

/// Sum of distances from every point to its nearest medoid.
pub fn kmedoids_cost(dist: &PairMatrix, medoids: &[usize]) -> f64 {
    total_cost(dist, medoids)
}

pub fn select_kmedoids(
    data: &TabularDataset,
    class: Option<usize>,
    n: usize,
    metric: Distance,
) -> Result<ExampleSet> {
    let idx = filtered(data, class, n)?;
    let rows: Vec<&[f64]> = idx.iter().map(|&i| data.row(i)).collect();
    let local = pam(&distance_matrix(&rows, metric), n)?;
    Ok(ExampleSet::from_indices(
        data,
        local.into_iter().map(|l| idx[l]).collect(),
        target(class),
    ))
}

/// Biased MMD^2 between the points in `set` and all points, from the Gram
/// matrix of all points.
pub fn mmd2(gram: &PairMatrix, set: &[usize]) -> f64 {
    let n = gram.len() as f64;
    let m = set.len() as f64;
    let mut pp = 0.0;
    for &a in set {
        for &b in set {
            pp += gram.get(a, b);
        }
    }
    let mut px = 0.0;
    for &a in set {
        for j in 0..gram.len() {
            px += gram.get(a, j);
        }
    }
    let xx: f64 = gram.values.iter().sum();
    pp / (m * m) + xx / (n * n) - 2.0 * px / (m * n)
}

/// Greedy MMD minimisation in selection order, with the MMD^2 after each step.
pub fn mmd_greedy(gram: &PairMatrix, n: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let size = gram.len();
    ensure!(
        n >= 1 && n <= size,
        "cannot choose {n} prototypes from {size} points"
    );
    let total = size as f64;
    let row_sum: Vec<f64> = (0..size)
        .map(|i| (0..size).map(|j| gram.get(i, j)).sum())
        .collect();
    let xx = row_sum.iter().sum::<f64>() / (total * total);
    let mut chosen = Vec::with_capacity(n);
    let mut in_set = vec![false; size];
    // running sum_{p in P} K(c, p) for every candidate c
    let mut cross = vec![0.0; size];
    let (mut pp, mut px) = (0.0, 0.0);
    let mut trace = Vec::with_capacity(n);
    for _ in 0..n {
        let m = (chosen.len() + 1) as f64;
        let mut best = (usize::MAX, f64::INFINITY);
        for c in (0..size).filter(|&c| !in_set[c]) {
            let pp_c = pp + 2.0 * cross[c] + gram.get(c, c);
            let value = pp_c / (m * m) + xx - 2.0 * (px + row_sum[c]) / (m * total);
            if value < best.1 {
                best = (c, value);
            }
        }
        let c = best.0;
        pp += 2.0 * cross[c] + gram.get(c, c);
        px += row_sum[c];
        in_set[c] = true;
        chosen.push(c);
        for (j, s) in cross.iter_mut().enumerate() {
            *s += gram.get(j, c);
        }
        trace.push(best.1.max(0.0));
    }
    Ok((chosen, trace))
}

pub fn select_mmd_critic(
    data: &TabularDataset,
    class: Option<usize>,
    n: usize,
    kernel: &KernelConfig,
) -> Result<ExampleSet> {
    let idx = filtered(data, class, n)?;
    let rows: Vec<&[f64]> = idx.iter().map(|&i| data.row(i)).collect();
    let gram = rbf_gram(&rows, kernel.resolve(&rows)?);
    let (local, _) = mmd_greedy(&gram, n)?;
    Ok(ExampleSet::from_indices(
        data,
        local.into_iter().map(|l| idx[l]).collect(),
        target(class),
    ))
}

/// ProtoDash state after the last step.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtoDashRun {
    /// Local indices in selection order.
    pub selected: Vec<usize>,
    pub weights: Vec<f64>,
    /// `l(w) = w'mu - w'Kw/2` after each step.
    pub objective: Vec<f64>,
}

fn objective(mu: &[f64], k: &DMatrix<f64>, w: &[f64]) -> f64 {
    let mut v = 0.0;
    for i in 0..w.len() {
        v += w[i] * mu[i];
        for j in 0..w.len() {
            v -= 0.5 * w[i] * k[(i, j)] * w[j];
        }
    }
    v
}

/// Maximises `w'mu - w'Kw/2` over `w >= 0` by projected gradient ascent.
fn refit_weights(mu: &[f64], k: &DMatrix<f64>, w: &mut [f64]) {
    let lmax = k.clone().symmetric_eigen().eigenvalues.max();
    if lmax <= 0.0 {
        return;
    }
    let step = 1.0 / lmax;
    let m = w.len();
    for _ in 0..NNLS_ITERATIONS {
        let mut change = 0.0f64;
        let kw: Vec<f64> = (0..m)
            .map(|i| (0..m).map(|j| k[(i, j)] * w[j]).sum())
            .collect();
        for i in 0..m {
            let next = (w[i] + step * (mu[i] - kw[i])).max(0.0);
            change = change.max((next - w[i]).abs());
            w[i] = next;
        }
        if change < NNLS_TOLERANCE {
            break;
        }
    }
}

pub fn protodash(gram: &PairMatrix, n: usize) -> Result<ProtoDashRun> {
    let size = gram.len();
    ensure!(
        n >= 1 && n <= size,
        "cannot choose {n} prototypes from {size} points"
    );
    let mu: Vec<f64> = (0..size)
        .map(|i| (0..size).map(|j| gram.get(i, j)).sum::<f64>() / size as f64)
        .collect();
    let mut selected: Vec<usize> = Vec::with_capacity(n);
    let mut in_set = vec![false; size];
    let mut weights: Vec<f64> = Vec::with_capacity(n);
    let mut trace = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for c in (0..size).filter(|&c| !in_set[c]) {
            let kw: f64 = selected
                .iter()
                .zip(&weights)
                .map(|(&s, w)| gram.get(c, s) * w)
                .sum();
            let g = mu[c] - kw;
            if g > best.1 {
                best = (c, g);
            }
        }
        in_set[best.0] = true;
        selected.push(best.0);
        weights.push(0.0);
        let m = selected.len();
        let k = DMatrix::from_fn(m, m, |i, j| gram.get(selected[i], selected[j]));
        let mu_s: Vec<f64> = selected.iter().map(|&s| mu[s]).collect();
        refit_weights(&mu_s, &k, &mut weights);
        trace.push(objective(&mu_s, &k, &weights));
    }
    Ok(ProtoDashRun {
        selected,
        weights,
        objective: trace,
    })
}

/// ProtoDash prototypes with their nonnegative weights (same order as the
/// examples).
pub fn select_protodash(
    data: &TabularDataset,
    class: Option<usize>,
    n: usize,
    kernel: &KernelConfig,
) -> Result<(ExampleSet, Vec<f64>)> {
    let idx = filtered(data, class, n)?;
    let rows: Vec<&[f64]> = idx.iter().map(|&i| data.row(i)).collect();
    let gram = rbf_gram(&rows, kernel.resolve(&rows)?);
    let run = protodash(&gram, n)?;
    let set = ExampleSet::from_indices(
        data,
        run.selected.iter().map(|&l| idx[l]).collect(),
        target(class),
    );
    Ok((set, run.weights))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    KMedoids,
    Mmd,
    ProtoDash,
}

impl Selector {
    pub const ALL: [Selector; 3] = [Selector::KMedoids, Selector::Mmd, Selector::ProtoDash];

    pub fn name(self) -> &'static str {
        match self {
            Selector::KMedoids => "kmedoids",
            Selector::Mmd => "mmd",
            Selector::ProtoDash => "protodash",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Selector::KMedoids => "K-medoids",
            Selector::Mmd => "MMD",
            Selector::ProtoDash => "ProtoDash",
        }
    }
}

impl std::str::FromStr for Selector {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kmedoids" | "k-medoids" => Ok(Selector::KMedoids),
            "mmd" | "mmd-critic" => Ok(Selector::Mmd),
            "protodash" => Ok(Selector::ProtoDash),
            other => Err(format!("unknown selector `{other}`")),
        }
    }
}

/// Settings shared by the per-class evaluation and the n sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleConfig {
    pub metric: Distance,
    pub kernel: KernelConfig,
    pub pairs: PairCounting,
    pub loss: LossFunction,
}

impl Default for ExampleConfig {
    fn default() -> Self {
        Self {
            metric: Distance::Euclidean,
            kernel: KernelConfig::median_heuristic(),
            pairs: PairCounting::Ordered,
            loss: LossFunction::ZeroOne,
        }
    }
}

pub fn select(
    selector: Selector,
    data: &TabularDataset,
    class: Option<usize>,
    n: usize,
    cfg: &ExampleConfig,
) -> Result<ExampleSet> {
    match selector {
        Selector::KMedoids => select_kmedoids(data, class, n, cfg.metric),
        Selector::Mmd => select_mmd_critic(data, class, n, &cfg.kernel),
        Selector::ProtoDash => Ok(select_protodash(data, class, n, &cfg.kernel)?.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub class: usize,
    pub non_representativeness: f64,
    pub diversity: f64,
    pub source_indices: Vec<usize>,
}

/// Class-averaged NR and D of one selector at one prototype count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorScores {
    pub selector: Selector,
    pub n: usize,
    pub non_representativeness: f64,
    pub diversity: f64,
    pub per_class: Vec<ClassScores>,
}

fn classes(data: &TabularDataset) -> Result<Vec<usize>> {
    let labels = data
        .labels()
        .ok_or_else(|| Error::Contract("example metrics need a labeled dataset".into()))?;
    let mut present: Vec<usize> = labels.to_vec();
    present.sort_unstable();
    present.dedup();
    Ok(present)
}

/// Selects `n` prototypes per class, explains `y* = class` with them and
/// averages NR and D over classes.
pub fn evaluate_selector(
    data: &TabularDataset,
    model: &dyn Model,
    selector: Selector,
    n: usize,
    cfg: &ExampleConfig,
) -> Result<SelectorScores> {
    let classes = classes(data)?;
    let per_class = classes
        .par_iter()
        .map(|&c| {
            let set = select(selector, data, Some(c), n, cfg)?;
            Ok(ClassScores {
                class: c,
                non_representativeness: non_representativeness(&set, model, cfg.loss)?,
                diversity: diversity(&set, cfg.metric, cfg.pairs),
                source_indices: set.source_indices.unwrap_or_default(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = per_class.len() as f64;
    Ok(SelectorScores {
        selector,
        n,
        non_representativeness: per_class
            .iter()
            .map(|s| s.non_representativeness)
            .sum::<f64>()
            / k,
        diversity: per_class.iter().map(|s| s.diversity).sum::<f64>() / k,
        per_class,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub non_representativeness: f64,
    pub diversity: f64,
}

/// NR and D as functions of the number of prototypes per class.
pub fn metrics_vs_n(
    data: &TabularDataset,
    model: &dyn Model,
    selector: Selector,
    n_range: impl IntoIterator<Item = usize>,
    cfg: &ExampleConfig,
) -> Result<Vec<CurvePoint>> {
    let smallest = classes(data)?
        .iter()
        .map(|&c| data.class_indices(c).len())
        .min()
        .unwrap_or(0);
    n_range
        .into_iter()
        .map(|n| {
            if n > smallest {
                return Err(contract(format!(
                    "n = {n} exceeds the smallest class size {smallest}"
                )));
            }
            let s = evaluate_selector(data, model, selector, n, cfg)?;
            Ok(CurvePoint {
                n,
                non_representativeness: s.non_representativeness,
                diversity: s.diversity,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConstantModel;

    fn data1d(values: &[f64]) -> TabularDataset {
        TabularDataset::new(values.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    #[test]
    fn diversity_examples() {
        let e =
            ExampleSet::new(vec![vec![0.0, 0.0], vec![3.0, 4.0]], Prediction::Label(0)).unwrap();
        assert_eq!(
            diversity(&e, Distance::Euclidean, PairCounting::Ordered),
            2.5
        );
        assert_eq!(
            diversity(&e, Distance::Euclidean, PairCounting::Unordered),
            1.25
        );
        let single = ExampleSet::new(vec![vec![1.0, 2.0]], Prediction::Label(0)).unwrap();
        assert_eq!(
            diversity(&single, Distance::Euclidean, PairCounting::Ordered),
            0.0
        );
        let dup = ExampleSet::new(vec![vec![1.0, 2.0]; 4], Prediction::Label(0)).unwrap();
        assert_eq!(
            diversity(&dup, Distance::Euclidean, PairCounting::Ordered),
            0.0
        );
    }

    #[test]
    fn non_representativeness_examples() {
        let m = ConstantModel::new(1, Prediction::Probs(vec![0.1, 0.9]));
        let hit = ExampleSet::new(vec![vec![0.0]; 3], Prediction::Label(1)).unwrap();
        assert_eq!(
            non_representativeness(&hit, &m, LossFunction::ZeroOne).unwrap(),
            0.0
        );
        let miss = ExampleSet::new(vec![vec![0.0]; 3], Prediction::Label(0)).unwrap();
        assert_eq!(
            non_representativeness(&miss, &m, LossFunction::ZeroOne).unwrap(),
            1.0
        );
        let wide = ExampleSet::new(vec![vec![0.0, 0.0]], Prediction::Label(0)).unwrap();
        assert!(non_representativeness(&wide, &m, LossFunction::ZeroOne).is_err());
    }

    #[test]
    fn half_mispredicted_gives_half() {
        struct Sign;
        impl Model for Sign {
            fn arity(&self) -> usize {
                1
            }
            fn output_kind(&self) -> crate::model::OutputKind {
                crate::model::OutputKind::Label
            }
            fn predict(&self, x: &[f64]) -> Result<Prediction> {
                Ok(Prediction::Label(usize::from(x[0] > 0.0)))
            }
        }
        let e = ExampleSet::new(
            vec![vec![-1.0], vec![1.0], vec![2.0], vec![-3.0]],
            Prediction::Label(1),
        )
        .unwrap();
        assert_eq!(
            non_representativeness(&e, &Sign, LossFunction::ZeroOne).unwrap(),
            0.5
        );
    }

    #[test]
    fn kmedoids_small_cases() {
        let d = data1d(&[0.0, 1.0, 2.0, 10.0]);
        let e = select_kmedoids(&d, None, 1, Distance::Manhattan).unwrap();
        let m = e.source_indices.unwrap()[0];
        assert!(m == 1 || m == 2);
        let all = select_kmedoids(&d, None, 4, Distance::Euclidean).unwrap();
        assert_eq!(all.source_indices.unwrap(), vec![0, 1, 2, 3]);
        assert!(select_kmedoids(&d, None, 5, Distance::Euclidean).is_err());
        assert!(select_kmedoids(&d, Some(0), 1, Distance::Euclidean).is_err());
    }

    #[test]
    fn mmd_of_full_set_is_zero() {
        let d = data1d(&[0.0, 0.4, 1.3, 2.0, 7.0]);
        let rows: Vec<&[f64]> = d.rows().iter().map(|r| r.as_slice()).collect();
        let g = rbf_gram(&rows, 1.0);
        assert!(mmd2(&g, &[0, 1, 2, 3, 4]).abs() < 1e-15);
        let (sel, trace) = mmd_greedy(&g, 5).unwrap();
        assert_eq!(sel.len(), 5);
        assert!(trace[4].abs() < 1e-12);
    }

    #[test]
    fn protodash_first_pick_and_weights() {
        let d = data1d(&[0.0, 0.2, 0.3, 0.35, 3.0, 3.1, 9.0]);
        let rows: Vec<&[f64]> = d.rows().iter().map(|r| r.as_slice()).collect();
        let g = rbf_gram(&rows, 1.0);
        let mu: Vec<f64> = (0..7)
            .map(|i| (0..7).map(|j| g.get(i, j)).sum::<f64>() / 7.0)
            .collect();
        let argmax = (0..7).fold(0, |b, i| if mu[i] > mu[b] { i } else { b });
        let run = protodash(&g, 4).unwrap();
        assert_eq!(run.selected[0], argmax);
        assert!(run.weights.iter().all(|w| *w >= 0.0));
        for w in run.objective.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn median_heuristic_bandwidth() {
        let a = [0.0];
        let b = [1.0];
        let c = [3.0];
        // distances 1, 3, 2
        assert_eq!(
            KernelConfig::median_heuristic()
                .resolve(&[&a, &b, &c])
                .unwrap(),
            2.0
        );
        assert_eq!(
            KernelConfig::median_heuristic().resolve(&[&a, &a]).unwrap(),
            1.0
        );
        assert!(KernelConfig::rbf(0.0).validate().is_err());
    }

    #[test]
    fn selectors_return_class_members() {
        let d = TabularDataset::with_labels(
            (0..12)
                .map(|i| vec![i as f64, (i * i) as f64 * 0.1])
                .collect(),
            (0..12).map(|i| i % 3).collect(),
        )
        .unwrap();
        for s in Selector::ALL {
            let e = select(s, &d, Some(1), 3, &ExampleConfig::default()).unwrap();
            assert_eq!(e.len(), 3);
            assert!(e.source_indices.unwrap().iter().all(|i| i % 3 == 1));
            assert_eq!(e.target_prediction, Prediction::Label(1));
        }
    }
}
