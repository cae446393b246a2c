//! Per-sample stochastic gradient descent for regularized linear models.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_labels, LinearModel, Solver};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::vectorize::DocVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Hinge,
    Logistic,
}

impl Loss {
    /// Derivative of the loss with respect to the margin `y * f(x)`.
    fn dloss(self, margin: f64) -> f64 {
        match self {
            Loss::Hinge => {
                if margin < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Loss::Logistic => {
                if margin > 18.0 {
                    -(-margin).exp()
                } else if margin < -18.0 {
                    -1.0
                } else {
                    -1.0 / (1.0 + margin.exp())
                }
            }
        }
    }

    pub fn value(self, margin: f64) -> f64 {
        match self {
            Loss::Hinge => (1.0 - margin).max(0.0),
            Loss::Logistic => {
                if margin > 18.0 {
                    (-margin).exp()
                } else if margin < -18.0 {
                    -margin
                } else {
                    (1.0 + (-margin).exp()).ln()
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgdParams {
    pub loss: Loss,
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SgdParams {
    fn default() -> Self {
        SgdParams {
            loss: Loss::Hinge,
            lambda: 1e-4,
            epochs: 20,
        }
    }
}

/// Minimizes `lambda/2 |w|^2 + 1/n sum loss(y_i (w . x_i + b))` with step
/// size `1 / (lambda (t + t0))`, `t` counting updates from 1 and
/// `t0 = max(1, 1/lambda)` so the first step is at most 1. The bias is not
/// regularized. Samples are reshuffled every epoch from `seed`.
pub fn train_sgd(
    x: &[DocVector],
    y: &[Label],
    n_features: usize,
    params: &SgdParams,
    seed: u64,
) -> Result<LinearModel> {
    check_labels(x, y, n_features)?;
    let lambda = params.lambda;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    if params.epochs == 0 {
        return Err(Error::InvalidArgument("epochs must be at least 1".into()));
    }
    // w = scale * v keeps the shrink step O(1) per sample.
    let mut v = vec![0.0; n_features];
    let mut scale = 1.0;
    let mut b = 0.0;
    let t0 = (1.0 / lambda).max(1.0);
    let mut t = 1.0;
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let eta = 1.0 / (lambda * (t + t0));
            let yi = y[i].sign();
            let margin = yi * (scale * x[i].dot_dense(&v) + b);
            let d = params.loss.dloss(margin);
            scale *= 1.0 - eta * lambda;
            if d != 0.0 {
                let step = -eta * d * yi;
                for &(j, xv) in x[i].entries() {
                    v[j] += step / scale * xv;
                }
                b += step;
            }
            if scale < 1e-9 {
                for w in &mut v {
                    *w *= scale;
                }
                scale = 1.0;
            }
            t += 1.0;
        }
    }
    Ok(LinearModel {
        weights: v.into_iter().map(|w| w * scale).collect(),
        bias: b,
        regularization: lambda,
        solver: Solver::Sgd,
    })
}
