//! k-nearest neighbours by cosine similarity.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::vectorize::DocVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub n_features: usize,
    pub x: Vec<DocVector>,
    pub y: Vec<Label>,
    norms: Vec<f64>,
}

fn cosine(a: &DocVector, na: f64, b: &DocVector, nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        a.dot(b) / (na * nb)
    }
}

impl KnnModel {
    pub fn fit(x: &[DocVector], y: &[Label], n_features: usize, k: usize) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidArgument("k-NN needs a non-empty training set".into()));
        }
        if x.len() != y.len() {
            return Err(Error::InvalidArgument(format!(
                "{} vectors but {} labels",
                x.len(),
                y.len()
            )));
        }
        if k == 0 || k > x.len() {
            return Err(Error::InvalidArgument(format!(
                "k must be in 1..={}, got {k}",
                x.len()
            )));
        }
        Ok(KnnModel {
            k,
            n_features,
            norms: x.iter().map(DocVector::norm).collect(),
            x: x.to_vec(),
            y: y.to_vec(),
        })
    }

    /// Indices of the `k` most similar training points. Equal similarities
    /// are ordered by training index.
    pub fn neighbours(&self, query: &DocVector) -> Vec<usize> {
        let nq = query.norm();
        let mut sims: Vec<(f64, usize)> = self
            .x
            .iter()
            .zip(&self.norms)
            .enumerate()
            .map(|(i, (xi, &ni))| (cosine(query, nq, xi, ni), i))
            .collect();
        sims.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        sims.truncate(self.k);
        sims.into_iter().map(|(_, i)| i).collect()
    }

    /// `(#commercial - #editorial) / k` over the neighbours.
    pub fn score(&self, query: &DocVector) -> f64 {
        let votes: i64 = self
            .neighbours(query)
            .into_iter()
            .map(|i| match self.y[i] {
                Label::Commercial => 1,
                Label::Editorial => -1,
            })
            .sum();
        votes as f64 / self.k as f64
    }
}

/// Classifies one query against a training set.
pub fn knn_predict(
    x: &[DocVector],
    y: &[Label],
    query: &DocVector,
    k: usize,
) -> Result<(Label, f64)> {
    let n_features = x.iter().filter_map(DocVector::max_index).max().map_or(0, |m| m + 1);
    let model = KnnModel::fit(x, y, n_features, k)?;
    let score = model.score(query);
    Ok((Label::from_score(score), score))
}
