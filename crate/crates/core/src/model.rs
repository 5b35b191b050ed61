//! Black-box model abstraction.
//!
//! Every metric consumes models through the [`Model`] trait. Built-in models
//! live in this module and in [`crate::bench`]; external processes are
//! adapted by the CLI crate.

use serde::{Deserialize, Serialize};

use crate::error::{contract, ensure, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    /// One real-valued regression output.
    Scalar,
    /// A class-probability vector.
    Probs,
    /// A bare class index.
    Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientCapability {
    Exact,
    FiniteDifference,
    None,
}

/// A single model output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prediction {
    Scalar(f64),
    Probs(Vec<f64>),
    Label(usize),
}

impl Prediction {
    pub fn kind(&self) -> OutputKind {
        match self {
            Prediction::Scalar(_) => OutputKind::Scalar,
            Prediction::Probs(_) => OutputKind::Probs,
            Prediction::Label(_) => OutputKind::Label,
        }
    }

    /// Predicted class: argmax for probabilities (ties go to the lowest
    /// index), the label itself for labels, `None` for regression outputs.
    pub fn class(&self) -> Option<usize> {
        match self {
            Prediction::Scalar(_) => None,
            Prediction::Label(c) => Some(*c),
            Prediction::Probs(p) => Some(argmax(p)),
        }
    }

    /// Scalar value of output component `output`.
    pub fn component(&self, output: usize) -> Result<f64> {
        match self {
            Prediction::Scalar(v) if output == 0 => Ok(*v),
            Prediction::Probs(p) if output < p.len() => Ok(p[output]),
            Prediction::Label(_) => Err(Error::Unsupported(
                "label outputs have no differentiable component".into(),
            )),
            _ => Err(contract(format!("output component {output} out of range"))),
        }
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Half-open interval `[lo, hi)` of admissible values for one input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v < self.hi
    }
}

/// A predictor `f: R^arity -> Y`.
///
/// Implementations must be callable from several threads at once.
pub trait Model: Send + Sync {
    fn arity(&self) -> usize;

    fn output_kind(&self) -> OutputKind;

    fn gradient_capability(&self) -> GradientCapability {
        GradientCapability::None
    }

    /// Declared input domain, if the model has one.
    fn domain(&self) -> Option<Vec<Interval>> {
        None
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction>;

    /// Analytic gradient of output component `output`. Only called when the
    /// capability is [`GradientCapability::Exact`].
    fn exact_gradient(&self, _x: &[f64], _output: usize) -> Result<Vec<f64>> {
        Err(Error::Unsupported("model has no analytic gradient".into()))
    }
}

impl<M: Model + ?Sized> Model for &M {
    fn arity(&self) -> usize {
        (**self).arity()
    }
    fn output_kind(&self) -> OutputKind {
        (**self).output_kind()
    }
    fn gradient_capability(&self) -> GradientCapability {
        (**self).gradient_capability()
    }
    fn domain(&self) -> Option<Vec<Interval>> {
        (**self).domain()
    }
    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        (**self).predict(x)
    }
    fn exact_gradient(&self, x: &[f64], output: usize) -> Result<Vec<f64>> {
        (**self).exact_gradient(x, output)
    }
}

impl<M: Model + ?Sized> Model for std::sync::Arc<M> {
    fn arity(&self) -> usize {
        (**self).arity()
    }
    fn output_kind(&self) -> OutputKind {
        (**self).output_kind()
    }
    fn gradient_capability(&self) -> GradientCapability {
        (**self).gradient_capability()
    }
    fn domain(&self) -> Option<Vec<Interval>> {
        (**self).domain()
    }
    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        (**self).predict(x)
    }
    fn exact_gradient(&self, x: &[f64], output: usize) -> Result<Vec<f64>> {
        (**self).exact_gradient(x, output)
    }
}

/// Contract error unless `x` has the model's arity.
pub fn check_arity(model: &dyn Model, x: &[f64]) -> Result<()> {
    ensure!(
        x.len() == model.arity(),
        "model takes {} inputs, got {}",
        model.arity(),
        x.len()
    );
    Ok(())
}

/// Gradient of output component `output` at `x`.
///
/// Uses the analytic gradient when the model has one, central differences
/// with step `1e-5 * max(1, |x_i|)` when it only supports finite differences.
pub fn gradient(model: &dyn Model, x: &[f64], output: usize) -> Result<Vec<f64>> {
    check_arity(model, x)?;
    match model.gradient_capability() {
        GradientCapability::Exact => model.exact_gradient(x, output),
        GradientCapability::FiniteDifference => finite_difference_gradient(model, x, output),
        GradientCapability::None => {
            Err(Error::Unsupported("model does not expose gradients".into()))
        }
    }
}

pub fn finite_difference_gradient(model: &dyn Model, x: &[f64], output: usize) -> Result<Vec<f64>> {
    check_arity(model, x)?;
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = 1e-5 * x[i].abs().max(1.0);
        probe[i] = x[i] + h;
        let up = model.predict(&probe)?.component(output)?;
        probe[i] = x[i] - h;
        let down = model.predict(&probe)?.component(output)?;
        probe[i] = x[i];
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// The output component an attribution should explain: the scalar output for
/// regression models, the predicted class for probability models.
pub fn explained_output(model: &dyn Model, x: &[f64]) -> Result<usize> {
    match model.predict(x)? {
        Prediction::Scalar(_) => Ok(0),
        Prediction::Probs(p) => Ok(argmax(&p)),
        Prediction::Label(_) => Err(Error::Unsupported(
            "cannot differentiate a label-valued model".into(),
        )),
    }
}

/// `model` with every coordinate outside `free` clamped to `anchor`.
///
/// The restricted predictor takes only the free coordinates, in the order
/// given by `free`.
pub struct Restricted<'a> {
    model: &'a dyn Model,
    anchor: Vec<f64>,
    free: Vec<usize>,
}

pub fn restrict_model<'a>(
    model: &'a dyn Model,
    anchor: &[f64],
    free: &[usize],
) -> Result<Restricted<'a>> {
    check_arity(model, anchor)?;
    for &i in free {
        ensure!(
            i < model.arity(),
            "free index {i} out of range for arity {}",
            model.arity()
        );
    }
    let mut seen = vec![false; model.arity()];
    for &i in free {
        ensure!(!seen[i], "free index {i} listed twice");
        seen[i] = true;
    }
    Ok(Restricted {
        model,
        anchor: anchor.to_vec(),
        free: free.to_vec(),
    })
}

impl Restricted<'_> {
    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    /// Full-arity input with the free coordinates set to `values`.
    pub fn embed(&self, values: &[f64]) -> Vec<f64> {
        let mut x = self.anchor.clone();
        for (&i, &v) in self.free.iter().zip(values) {
            x[i] = v;
        }
        x
    }
}

impl Model for Restricted<'_> {
    fn arity(&self) -> usize {
        self.free.len()
    }

    fn output_kind(&self) -> OutputKind {
        self.model.output_kind()
    }

    fn gradient_capability(&self) -> GradientCapability {
        self.model.gradient_capability()
    }

    fn domain(&self) -> Option<Vec<Interval>> {
        self.model
            .domain()
            .map(|d| self.free.iter().map(|&i| d[i]).collect())
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        check_arity(self, x)?;
        self.model.predict(&self.embed(x))
    }

    fn exact_gradient(&self, x: &[f64], output: usize) -> Result<Vec<f64>> {
        check_arity(self, x)?;
        let full = self.model.exact_gradient(&self.embed(x), output)?;
        Ok(self.free.iter().map(|&i| full[i]).collect())
    }
}

/// Model returning the same output everywhere.
#[derive(Debug, Clone)]
pub struct ConstantModel {
    arity: usize,
    value: Prediction,
}

impl ConstantModel {
    pub fn new(arity: usize, value: Prediction) -> Self {
        Self { arity, value }
    }
}

impl Model for ConstantModel {
    fn arity(&self) -> usize {
        self.arity
    }
    fn output_kind(&self) -> OutputKind {
        self.value.kind()
    }
    fn gradient_capability(&self) -> GradientCapability {
        match self.value {
            Prediction::Label(_) => GradientCapability::None,
            _ => GradientCapability::Exact,
        }
    }
    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        check_arity(self, x)?;
        Ok(self.value.clone())
    }
    fn exact_gradient(&self, x: &[f64], output: usize) -> Result<Vec<f64>> {
        self.value.component(output)?;
        Ok(vec![0.0; x.len()])
    }
}

/// Regression model `w . x + b`.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        Self { weights, bias }
    }
}

impl Model for LinearModel {
    fn arity(&self) -> usize {
        self.weights.len()
    }
    fn output_kind(&self) -> OutputKind {
        OutputKind::Scalar
    }
    fn gradient_capability(&self) -> GradientCapability {
        GradientCapability::Exact
    }
    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        check_arity(self, x)?;
        let dot: f64 = self.weights.iter().zip(x).map(|(w, v)| w * v).sum();
        Ok(Prediction::Scalar(dot + self.bias))
    }
    fn exact_gradient(&self, _x: &[f64], output: usize) -> Result<Vec<f64>> {
        ensure!(output == 0, "linear model has a single output");
        Ok(self.weights.clone())
    }
}

/// Wraps a model and hides its analytic gradient so callers fall back to
/// central differences.
pub struct FiniteDifferenced<M>(pub M);

impl<M: Model> Model for FiniteDifferenced<M> {
    fn arity(&self) -> usize {
        self.0.arity()
    }
    fn output_kind(&self) -> OutputKind {
        self.0.output_kind()
    }
    fn gradient_capability(&self) -> GradientCapability {
        GradientCapability::FiniteDifference
    }
    fn domain(&self) -> Option<Vec<Interval>> {
        self.0.domain()
    }
    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        self.0.predict(x)
    }
}
