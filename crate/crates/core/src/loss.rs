use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::model::Prediction;

/// Pointwise performance measure `l(y_ref, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossFunction {
    /// 1 when the predicted classes (or scalar values) differ, else 0.
    ZeroOne,
    /// Squared difference; summed over components for probability vectors.
    SquaredError,
    /// `-sum_c p_ref[c] ln p[c]`; a label reference acts as a one-hot vector.
    CrossEntropy,
}

impl std::str::FromStr for LossFunction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "zero-one" => Ok(LossFunction::ZeroOne),
            "squared-error" => Ok(LossFunction::SquaredError),
            "cross-entropy" => Ok(LossFunction::CrossEntropy),
            other => Err(format!("unknown loss `{other}`")),
        }
    }
}

const PROB_FLOOR: f64 = 1e-15;

impl LossFunction {
    pub fn evaluate(self, y_ref: &Prediction, y: &Prediction) -> Result<f64> {
        if y_ref.kind() != y.kind() {
            return Err(contract(format!(
                "loss between mismatched outputs {:?} and {:?}",
                y_ref.kind(),
                y.kind()
            )));
        }
        match self {
            LossFunction::ZeroOne => Ok(match (y_ref, y) {
                (Prediction::Scalar(a), Prediction::Scalar(b)) => indicator(a != b),
                _ => indicator(y_ref.class() != y.class()),
            }),
            LossFunction::SquaredError => match (y_ref, y) {
                (Prediction::Scalar(a), Prediction::Scalar(b)) => Ok((a - b) * (a - b)),
                (Prediction::Probs(p), Prediction::Probs(q)) => {
                    same_len(p, q)?;
                    Ok(p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum())
                }
                _ => Err(contract("squared error is undefined for class labels")),
            },
            LossFunction::CrossEntropy => match (y_ref, y) {
                (Prediction::Probs(p), Prediction::Probs(q)) => {
                    same_len(p, q)?;
                    let ce: f64 = p
                        .iter()
                        .zip(q)
                        .filter(|(a, _)| **a > 0.0)
                        .map(|(a, b)| -a * b.max(PROB_FLOOR).ln())
                        .sum();
                    Ok(ce.max(0.0))
                }
                (Prediction::Label(a), Prediction::Label(b)) => {
                    // one-hot against one-hot: 0 or -ln(floor)
                    Ok(if a == b { 0.0 } else { -PROB_FLOOR.ln() })
                }
                _ => Err(Error::Contract("cross-entropy needs class outputs".into())),
            },
        }
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn same_len(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() == q.len() {
        Ok(())
    } else {
        Err(contract(format!(
            "probability vectors of length {} and {}",
            p.len(),
            q.len()
        )))
    }
}

/// Free-function form of [`LossFunction::evaluate`].
pub fn evaluate_loss(loss: LossFunction, y_ref: &Prediction, y: &Prediction) -> Result<f64> {
    loss.evaluate(y_ref, y)
}
