//! L1-loss linear SVM trained by dual coordinate descent.
//!
//! The bias is handled as an extra constant feature of value 1, so the
//! objective actually minimized is
//!
//! ```text
//! 1/2 (|w|^2 + b^2) + C * sum_i max(0, 1 - y_i (w . x_i + b))
//! ```
//!
//! whose dual is a box-constrained QP over `alpha in [0, C]^n` without the
//! equality constraint an unregularized bias would add. Each coordinate step
//! minimizes the dual exactly, so the dual objective never increases.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_labels, LinearModel, Solver};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::vectorize::DocVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    #[serde(rename = "C")]
    pub c: f64,
    /// Maximum number of passes over the data.
    pub max_iter: usize,
    /// Stop once the largest projected-gradient violation in a pass is below this.
    pub tol: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            max_iter: 5000,
            tol: 1e-4,
        }
    }
}

/// Per-epoch trace of a DCD run.
#[derive(Debug, Clone)]
pub struct SvmFit {
    pub model: LinearModel,
    pub epochs: usize,
    pub converged: bool,
    /// Primal objective after each epoch.
    pub primal: Vec<f64>,
    /// Dual objective `1/2 |w~|^2 - sum(alpha)` after each epoch.
    pub dual: Vec<f64>,
    /// Largest projected-gradient violation seen in each epoch.
    pub violation: Vec<f64>,
}

pub fn primal_objective(
    weights: &[f64],
    bias: f64,
    x: &[DocVector],
    y: &[Label],
    c: f64,
) -> f64 {
    let reg = 0.5 * (weights.iter().map(|w| w * w).sum::<f64>() + bias * bias);
    let loss: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (1.0 - yi.sign() * (xi.dot_dense(weights) + bias)).max(0.0))
        .sum();
    reg + c * loss
}

pub fn train_linear_svm(
    x: &[DocVector],
    y: &[Label],
    n_features: usize,
    params: &SvmParams,
    seed: u64,
) -> Result<LinearModel> {
    Ok(fit_linear_svm(x, y, n_features, params, seed)?.model)
}

pub fn fit_linear_svm(
    x: &[DocVector],
    y: &[Label],
    n_features: usize,
    params: &SvmParams,
    seed: u64,
) -> Result<SvmFit> {
    check_labels(x, y, n_features)?;
    if !(params.c > 0.0) || !params.c.is_finite() {
        return Err(Error::InvalidArgument(format!("C must be positive, got {}", params.c)));
    }
    let n = x.len();
    let c = params.c;
    let diag: Vec<f64> = x.iter().map(|xi| xi.norm_squared() + 1.0).collect();
    let sign: Vec<f64> = y.iter().map(|l| l.sign()).collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; n_features];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut fit = SvmFit {
        model: LinearModel::default(),
        epochs: 0,
        converged: false,
        primal: Vec::new(),
        dual: Vec::new(),
        violation: Vec::new(),
    };
    for _ in 0..params.max_iter {
        order.shuffle(&mut rng);
        let mut worst: f64 = 0.0;
        for &i in &order {
            let xi = &x[i];
            let g = sign[i] * (xi.dot_dense(&w) + b) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            worst = worst.max(pg.abs());
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / diag[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * sign[i];
                for &(j, v) in xi.entries() {
                    w[j] += step * v;
                }
                b += step;
            }
        }
        fit.epochs += 1;
        fit.violation.push(worst);
        fit.primal.push(primal_objective(&w, b, x, y, c));
        let norm = w.iter().map(|v| v * v).sum::<f64>() + b * b;
        fit.dual.push(0.5 * norm - alpha.iter().sum::<f64>());
        if worst < params.tol {
            fit.converged = true;
            break;
        }
    }
    fit.model = LinearModel {
        weights: w,
        bias: b,
        regularization: c,
        solver: Solver::Dcd,
    };
    Ok(fit)
}
