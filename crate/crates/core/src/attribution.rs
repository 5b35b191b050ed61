//! Reference feature-attribution methods: Saliency, InputXGradient,
//! Integrated Gradients and a random baseline.
//!
//! For probability models the explained output is the class predicted at the
//! explained point; Integrated Gradients keeps that class fixed along its path.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::model::{explained_output, gradient, Model, Prediction};
use crate::rng;

pub const DEFAULT_IG_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Saliency,
    InpXGrad,
    IntGrad,
    Random,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Saliency,
        Method::InpXGrad,
        Method::IntGrad,
        Method::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Saliency => "saliency",
            Method::InpXGrad => "inpxgrad",
            Method::IntGrad => "intgrad",
            Method::Random => "random",
        }
    }

    /// Display label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Saliency => "Saliency",
            Method::InpXGrad => "InpXGrad",
            Method::IntGrad => "IntGrad",
            Method::Random => "Random",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "saliency" => Ok(Method::Saliency),
            "inpxgrad" | "input_x_gradient" | "inputxgradient" => Ok(Method::InpXGrad),
            "intgrad" | "integrated_gradients" | "ig" => Ok(Method::IntGrad),
            "random" => Ok(Method::Random),
            other => Err(format!("unknown attribution method `{other}`")),
        }
    }
}

/// Attributions `a` explaining `prediction = f(point)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionVector {
    pub point: Vec<f64>,
    pub prediction: Option<Prediction>,
    pub values: Vec<f64>,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl AttributionVector {
    pub fn new(point: Vec<f64>, values: Vec<f64>, method: impl Into<String>) -> Result<Self> {
        ensure!(
            point.len() == values.len(),
            "{} attributions for a point of length {}",
            values.len(),
            point.len()
        );
        ensure!(
            values.iter().chain(&point).all(|v| v.is_finite()),
            "attributions and point must be finite"
        );
        Ok(Self {
            point,
            prediction: None,
            values,
            method: method.into(),
            seed: None,
        })
    }

    pub fn arity(&self) -> usize {
        self.values.len()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.abs()).collect()
    }

    /// The same attributions multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

fn finish(
    model: &dyn Model,
    x: &[f64],
    values: Vec<f64>,
    method: Method,
) -> Result<AttributionVector> {
    let mut a = AttributionVector::new(x.to_vec(), values, method.name())?;
    a.prediction = Some(model.predict(x)?);
    Ok(a)
}

/// `a = grad f(x*)`, signed.
pub fn saliency(model: &dyn Model, x: &[f64]) -> Result<AttributionVector> {
    let out = explained_output(model, x)?;
    finish(model, x, gradient(model, x, out)?, Method::Saliency)
}

/// `a_i = x*_i * df/dx_i(x*)`.
pub fn input_x_gradient(model: &dyn Model, x: &[f64]) -> Result<AttributionVector> {
    let out = explained_output(model, x)?;
    let g = gradient(model, x, out)?;
    let values = g.iter().zip(x).map(|(g, v)| g * v).collect();
    finish(model, x, values, Method::InpXGrad)
}

/// Midpoint Riemann sum of the path integral from `baseline` to `x`:
/// `a_i = (x_i - b_i) / steps * sum_t df/dx_i(b + (t - 1/2)/steps * (x - b))`.
pub fn integrated_gradients(
    model: &dyn Model,
    x: &[f64],
    baseline: &[f64],
    steps: usize,
) -> Result<AttributionVector> {
    ensure!(
        baseline.len() == x.len(),
        "baseline has length {}, point has {}",
        baseline.len(),
        x.len()
    );
    ensure!(steps >= 1, "integrated gradients needs at least one step");
    let out = explained_output(model, x)?;
    let mut sum = vec![0.0; x.len()];
    let mut probe = vec![0.0; x.len()];
    for t in 0..steps {
        let alpha = (t as f64 + 0.5) / steps as f64;
        for ((p, b), v) in probe.iter_mut().zip(baseline).zip(x) {
            *p = b + alpha * (v - b);
        }
        for (s, g) in sum.iter_mut().zip(gradient(model, &probe, out)?) {
            *s += g;
        }
    }
    let values = sum
        .iter()
        .zip(x.iter().zip(baseline))
        .map(|(s, (v, b))| (v - b) * s / steps as f64)
        .collect();
    finish(model, x, values, Method::IntGrad)
}

/// Integrated Gradients from the zero baseline with the default step count.
pub fn integrated_gradients_default(model: &dyn Model, x: &[f64]) -> Result<AttributionVector> {
    integrated_gradients(model, x, &vec![0.0; x.len()], DEFAULT_IG_STEPS)
}

/// I.i.d. uniform values on `[-1, 1]`, none exactly zero.
pub fn random_attribution(arity: usize, seed: u64) -> Result<AttributionVector> {
    ensure!(arity >= 1, "arity must be positive");
    let mut r = rng::stream(seed, 0);
    let values: Vec<f64> = (0..arity)
        .map(|_| loop {
            let v: f64 = r.random_range(-1.0..=1.0);
            if v != 0.0 {
                break v;
            }
        })
        .collect();
    let mut a = AttributionVector::new(vec![0.0; arity], values, Method::Random.name())?;
    a.seed = Some(seed);
    Ok(a)
}

/// Runs `method` at `x`; `seed` only affects [`Method::Random`].
pub fn attribute(
    model: &dyn Model,
    x: &[f64],
    method: Method,
    seed: u64,
) -> Result<AttributionVector> {
    match method {
        Method::Saliency => saliency(model, x),
        Method::InpXGrad => input_x_gradient(model, x),
        Method::IntGrad => integrated_gradients_default(model, x),
        Method::Random => {
            let mut a = random_attribution(x.len(), seed)?;
            a.point = x.to_vec();
            a.prediction = Some(model.predict(x)?);
            Ok(a)
        }
    }
}
