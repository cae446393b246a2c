//! Multinomial naive Bayes with additive smoothing.

use serde::{Deserialize, Serialize};

use super::check_labels;
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::vectorize::DocVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    /// Indexed by `Label::index` (editorial, commercial).
    pub class_log_prior: [f64; 2],
    pub feature_log_prob: [Vec<f64>; 2],
    pub alpha: f64,
}

pub fn train_naive_bayes(
    x: &[DocVector],
    y: &[Label],
    n_features: usize,
    alpha: f64,
) -> Result<NbModel> {
    check_labels(x, y, n_features)?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    let mut mass = [vec![0.0; n_features], vec![0.0; n_features]];
    let mut docs = [0usize; 2];
    for (xi, yi) in x.iter().zip(y) {
        docs[yi.index()] += 1;
        for &(j, v) in xi.entries() {
            if v < 0.0 {
                return Err(Error::NegativeFeature { index: j, value: v });
            }
            mass[yi.index()][j] += v;
        }
    }
    let n = x.len() as f64;
    let log_prob = |m: &[f64]| -> Vec<f64> {
        let total: f64 = m.iter().sum();
        let denom = (total + alpha * n_features as f64).ln();
        m.iter().map(|&c| (c + alpha).ln() - denom).collect()
    };
    Ok(NbModel {
        class_log_prior: [(docs[0] as f64 / n).ln(), (docs[1] as f64 / n).ln()],
        feature_log_prob: [log_prob(&mass[0]), log_prob(&mass[1])],
        alpha,
    })
}

impl NbModel {
    pub fn n_features(&self) -> usize {
        self.feature_log_prob[0].len()
    }

    /// Unnormalized joint log-likelihood per class.
    pub fn joint_log_likelihood(&self, x: &DocVector) -> [f64; 2] {
        let mut jll = self.class_log_prior;
        for (c, j) in jll.iter_mut().enumerate() {
            *j += x.dot_dense(&self.feature_log_prob[c]);
        }
        jll
    }

    /// `log P(commercial | x) - log P(editorial | x)`.
    pub fn score(&self, x: &DocVector) -> f64 {
        let jll = self.joint_log_likelihood(x);
        jll[1] - jll[0]
    }

    /// Posterior probabilities (editorial, commercial).
    pub fn posterior(&self, x: &DocVector) -> [f64; 2] {
        let jll = self.joint_log_likelihood(x);
        let max = jll[0].max(jll[1]);
        let lse = max + ((jll[0] - max).exp() + (jll[1] - max).exp()).ln();
        [(jll[0] - lse).exp(), (jll[1] - lse).exp()]
    }
}
