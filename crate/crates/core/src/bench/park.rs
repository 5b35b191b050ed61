use crate::error::Result;
use crate::model::{check_arity, GradientCapability, Interval, Model, OutputKind, Prediction};

/// The six-input test function `f(x) = 2/3 e^(x0+x1) - x3 sin(x2) + x2` on
/// `[0,1)^6`. Inputs `x4` and `x5` are inactive.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParkFunction;

/// The explained point used with [`ParkFunction`] throughout the benchmarks.
pub const PARK_POINT: [f64; 6] = [0.24, 0.48, 0.56, 0.99, 0.68, 0.86];

impl ParkFunction {
    pub fn eval(x: &[f64]) -> f64 {
        2.0 / 3.0 * (x[0] + x[1]).exp() - x[3] * x[2].sin() + x[2]
    }

    pub fn grad(x: &[f64]) -> Vec<f64> {
        let e = 2.0 / 3.0 * (x[0] + x[1]).exp();
        vec![e, e, 1.0 - x[3] * x[2].cos(), -x[2].sin(), 0.0, 0.0]
    }
}

pub fn park_model() -> ParkFunction {
    ParkFunction
}

impl Model for ParkFunction {
    fn arity(&self) -> usize {
        6
    }

    fn output_kind(&self) -> OutputKind {
        OutputKind::Scalar
    }

    fn gradient_capability(&self) -> GradientCapability {
        GradientCapability::Exact
    }

    fn domain(&self) -> Option<Vec<Interval>> {
        Some(vec![Interval::new(0.0, 1.0); 6])
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        check_arity(self, x)?;
        if x.iter().any(|v| !(0.0..1.0).contains(v)) {
            log::warn!("park function evaluated outside [0,1)^6 at {x:?}");
        }
        Ok(Prediction::Scalar(Self::eval(x)))
    }

    fn exact_gradient(&self, x: &[f64], output: usize) -> Result<Vec<f64>> {
        crate::error::ensure!(output == 0, "park function has a single output");
        check_arity(self, x)?;
        Ok(Self::grad(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::finite_difference_gradient;

    #[test]
    fn value_at_origin() {
        assert_eq!(ParkFunction::eval(&[0.0; 6]), 2.0 / 3.0);
    }

    #[test]
    fn value_at_explained_point() {
        // 2/3 e^0.72 - 0.99 sin 0.56 + 0.56
        assert!((ParkFunction::eval(&PARK_POINT) - 1.403_748).abs() < 1e-5);
    }

    #[test]
    fn gradient_at_explained_point() {
        let g = ParkFunction::grad(&PARK_POINT);
        let want = [1.369_622, 1.369_622, 0.161_217, -0.531_186, 0.0, 0.0];
        for (a, b) in g.iter().zip(want) {
            assert!((a - b).abs() < 1e-5, "{g:?}");
        }
        let fd = finite_difference_gradient(&ParkFunction, &PARK_POINT, 0).unwrap();
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn out_of_domain_still_evaluates() {
        assert!(ParkFunction
            .predict(&[2.0, 0.0, 0.0, 0.0, 0.0, -1.0])
            .is_ok());
    }
}
