use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{ensure, Error, Result};
use crate::model::{Interval, Model};
use crate::rng::Rng;

/// How one input coordinate is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    /// Uniform over `[lo, hi)`.
    Uniform { lo: f64, hi: f64 },
    /// Uniform resampling of an observed column.
    Empirical { values: Vec<f64> },
}

impl Sampler {
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match self {
            Sampler::Uniform { lo, hi } => rng.random_range(*lo..*hi),
            Sampler::Empirical { values } => values[rng.random_range(0..values.len())],
        }
    }

    pub fn support(&self) -> Interval {
        match self {
            Sampler::Uniform { lo, hi } => Interval::new(*lo, *hi),
            Sampler::Empirical { values } => {
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                // closed on the right for observed values
                Interval::new(lo, next_up(hi))
            }
        }
    }
}

fn next_up(v: f64) -> f64 {
    if v == f64::INFINITY {
        v
    } else if v == 0.0 {
        f64::from_bits(1)
    } else if v > 0.0 {
        f64::from_bits(v.to_bits() + 1)
    } else {
        f64::from_bits(v.to_bits() - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// Each coordinate drawn independently of the others.
    Marginal,
    /// Coordinates drawn conditionally on the clamped ones. Not implemented.
    Conditional,
}

/// Per-feature sampling distribution `p(x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDistribution {
    samplers: Vec<Sampler>,
    mode: SamplingMode,
}

impl FeatureDistribution {
    pub fn marginal(samplers: Vec<Sampler>) -> Result<Self> {
        ensure!(
            !samplers.is_empty(),
            "distribution needs at least one sampler"
        );
        for (i, s) in samplers.iter().enumerate() {
            match s {
                Sampler::Uniform { lo, hi } => ensure!(
                    lo.is_finite() && hi.is_finite() && lo < hi,
                    "sampler {i}: invalid interval [{lo}, {hi})"
                ),
                Sampler::Empirical { values } => ensure!(
                    !values.is_empty() && values.iter().all(|v| v.is_finite()),
                    "sampler {i}: empirical column must be non-empty and finite"
                ),
            }
        }
        Ok(Self {
            samplers,
            mode: SamplingMode::Marginal,
        })
    }

    /// Same uniform interval for each of `arity` features.
    pub fn uniform(arity: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::marginal(vec![Sampler::Uniform { lo, hi }; arity])
    }

    /// Empirical marginal of every column of `data`.
    pub fn empirical(data: &TabularDataset) -> Result<Self> {
        Self::marginal(
            (0..data.n_features())
                .map(|j| Sampler::Empirical {
                    values: data.column(j),
                })
                .collect(),
        )
    }

    /// Declared stub: conditional sampling is rejected when used.
    pub fn conditional(samplers: Vec<Sampler>) -> Result<Self> {
        let mut d = Self::marginal(samplers)?;
        d.mode = SamplingMode::Conditional;
        Ok(d)
    }

    pub fn arity(&self) -> usize {
        self.samplers.len()
    }

    pub fn mode(&self) -> SamplingMode {
        self.mode
    }

    pub fn samplers(&self) -> &[Sampler] {
        &self.samplers
    }

    pub fn sample(&self, feature: usize, rng: &mut Rng) -> Result<f64> {
        match self.mode {
            SamplingMode::Marginal => Ok(self.samplers[feature].sample(rng)),
            SamplingMode::Conditional => Err(Error::Unsupported(
                "conditional feature sampling is not implemented".into(),
            )),
        }
    }

    /// Checks that this distribution can feed `model`: same arity, and every
    /// sampler support inside the model's declared domain.
    pub fn check_compatible(&self, model: &dyn Model) -> Result<()> {
        ensure!(
            self.arity() == model.arity(),
            "distribution covers {} features, model takes {}",
            self.arity(),
            model.arity()
        );
        if let Some(domain) = model.domain() {
            for (i, (s, d)) in self.samplers.iter().zip(&domain).enumerate() {
                let sup = s.support();
                ensure!(
                    sup.lo >= d.lo && sup.hi <= d.hi,
                    "sampler {i} support [{}, {}) leaves the model domain [{}, {})",
                    sup.lo,
                    sup.hi,
                    d.lo,
                    d.hi
                );
            }
        }
        Ok(())
    }
}
