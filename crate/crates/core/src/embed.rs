//! Exact t-SNE of document vectors into two dimensions.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::par::*;
use crate::vectorize::DocVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch: usize,
    pub min_gain: f64,
    pub init_std: f64,
    pub checkpoint_every: usize,
}

impl Default for TsneParams {
    fn default() -> Self {
        TsneParams {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            min_gain: 0.01,
            init_std: 1e-4,
            checkpoint_every: 50,
        }
    }
}

/// Dense copies of sparse vectors, `n_features` columns each.
pub fn densify(vectors: &[DocVector], n_features: usize) -> Vec<Vec<f64>> {
    vectors
        .par_iter()
        .map(|v| {
            let mut row = vec![0.0; n_features];
            for &(i, x) in v.entries() {
                if i < n_features {
                    row[i] = x;
                }
            }
            row
        })
        .collect()
}

fn squared_distances(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    points[i]
                        .iter()
                        .zip(&points[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum()
                })
                .collect()
        })
        .collect();
    rows.concat()
}

/// Symmetric joint probabilities, row-major `n x n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affinities {
    n: usize,
    p: Vec<f64>,
}

impl Affinities {
    /// Wraps an explicit joint distribution (symmetric, zero diagonal, sums to 1).
    pub fn from_matrix(n: usize, p: Vec<f64>) -> Result<Self> {
        if p.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: p.len() });
        }
        Ok(Affinities { n, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }
}

/// Conditional row `p_{j|i}` at precision `beta`, and its entropy in bits.
fn conditional_row(d: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    let d_min = d
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &x)| x)
        .fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for (j, (o, &dj)) in out.iter_mut().zip(d).enumerate() {
        *o = if j == i { 0.0 } else { (-beta * (dj - d_min)).exp() };
        sum += *o;
    }
    let mut h = 0.0;
    for o in out.iter_mut() {
        *o /= sum;
        if *o > 0.0 {
            h -= *o * o.log2();
        }
    }
    h
}

/// Per-point Gaussian bandwidths found by bisection on the precision so that
/// each conditional row has entropy `log2(perplexity)`.
pub fn pairwise_affinities(points: &[Vec<f64>], perplexity: f64) -> Result<Affinities> {
    let n = points.len();
    if n < 4 {
        return Err(Error::InvalidArgument(format!("t-SNE needs at least 4 points, got {n}")));
    }
    if !(perplexity > 0.0) || perplexity >= n as f64 {
        return Err(Error::InvalidArgument(format!(
            "perplexity must be in (0, n={n}), got {perplexity}"
        )));
    }
    let dim = points[0].len();
    if let Some(bad) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
    }
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("input points".into()));
    }
    let d = squared_distances(points);
    if d.iter().all(|&x| x == 0.0) {
        return Err(Error::NonFinite("all input points coincide".into()));
    }
    let target = perplexity.log2();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let di = &d[i * n..(i + 1) * n];
            let mut row = vec![0.0; n];
            let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
            let mut beta = 1.0;
            for _ in 0..50 {
                let h = conditional_row(di, i, beta, &mut row);
                if (h - target).abs() < 1e-5 {
                    break;
                }
                if h > target {
                    lo = beta;
                    beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
                } else {
                    hi = beta;
                    beta = (beta + lo) / 2.0;
                }
            }
            conditional_row(di, i, beta, &mut row);
            row
        })
        .collect();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = (rows[i][j] + rows[j][i]) / (2.0 * n as f64);
            }
        }
    }
    Ok(Affinities { n, p })
}

/// Student-t kernels `(1 + |y_i - y_j|^2)^-1` (zero on the diagonal) and
/// their total `Z`.
fn kernel(y: &[[f64; 2]]) -> (Vec<Vec<f64>>, f64) {
    let n = y.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        let dx = y[i][0] - y[j][0];
                        let dy = y[i][1] - y[j][1];
                        1.0 / (1.0 + dx * dx + dy * dy)
                    }
                })
                .collect()
        })
        .collect();
    let z = rows.iter().map(|r| r.iter().sum::<f64>()).sum();
    (rows, z)
}

fn kl_from_kernel(p: &Affinities, w: &[Vec<f64>], z: f64) -> f64 {
    let n = p.n;
    let mut kl = 0.0;
    for (i, wi) in w.iter().enumerate() {
        for (j, &wij) in wi.iter().enumerate() {
            let pij = p.p[i * n + j];
            if pij > 0.0 {
                kl += pij * (pij / (wij / z)).ln();
            }
        }
    }
    kl
}

/// `KL(P || Q)` in nats for the embedding `y`.
pub fn kl_divergence(p: &Affinities, y: &[[f64; 2]]) -> Result<f64> {
    if y.len() != p.n {
        return Err(Error::DimensionMismatch { expected: p.n, got: y.len() });
    }
    let (w, z) = kernel(y);
    Ok(kl_from_kernel(p, &w, z))
}

fn gradient_scaled(p: &Affinities, y: &[[f64; 2]], scale: f64) -> (Vec<[f64; 2]>, Vec<Vec<f64>>, f64) {
    let n = p.n;
    let (w, z) = kernel(y);
    let grad: Vec<[f64; 2]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut g = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let wij = w[i][j];
                let m = (scale * p.p[i * n + j] - wij / z) * wij;
                g[0] += m * (y[i][0] - y[j][0]);
                g[1] += m * (y[i][1] - y[j][1]);
            }
            [4.0 * g[0], 4.0 * g[1]]
        })
        .collect();
    (grad, w, z)
}

/// Exact gradient of `KL(P || Q)` with respect to each output coordinate.
pub fn kl_gradient(p: &Affinities, y: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    if y.len() != p.n {
        return Err(Error::DimensionMismatch { expected: p.n, got: y.len() });
    }
    Ok(gradient_scaled(p, y, 1.0).0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneResult {
    pub coords: Vec<[f64; 2]>,
    pub kl: f64,
    /// `(iteration, KL)` recorded every `checkpoint_every` iterations
    /// (1-based iteration counts).
    pub history: Vec<(usize, f64)>,
    pub params: TsneParams,
    pub seed: u64,
}

pub fn tsne(points: &[Vec<f64>], params: &TsneParams, seed: u64) -> Result<TsneResult> {
    tsne_with_progress(points, params, seed, |_, _| {})
}

/// Runs t-SNE, calling `progress(iteration, kl)` at each checkpoint.
pub fn tsne_with_progress(
    points: &[Vec<f64>],
    params: &TsneParams,
    seed: u64,
    mut progress: impl FnMut(usize, f64),
) -> Result<TsneResult> {
    if params.iterations == 0 || params.checkpoint_every == 0 {
        return Err(Error::InvalidArgument("iterations and checkpoint interval must be positive".into()));
    }
    if !(params.learning_rate > 0.0) || !(params.init_std > 0.0) {
        return Err(Error::InvalidArgument("learning rate and init std must be positive".into()));
    }
    let p = pairwise_affinities(points, params.perplexity)?;
    let n = p.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, params.init_std)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect();
    let mut update = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut history = Vec::new();
    for it in 0..params.iterations {
        if it == params.exaggeration_iters && it > 0 {
            update.iter_mut().for_each(|u| *u = [0.0; 2]);
            gains.iter_mut().for_each(|g| *g = [1.0; 2]);
        }
        let scale = if it < params.exaggeration_iters { params.early_exaggeration } else { 1.0 };
        let momentum = if it < params.momentum_switch {
            params.initial_momentum
        } else {
            params.final_momentum
        };
        let (grad, w, z) = gradient_scaled(&p, &y, scale);
        if grad.iter().flatten().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("t-SNE gradient at iteration {it}")));
        }
        if it % params.checkpoint_every == 0 && it > 0 {
            let kl = kl_from_kernel(&p, &w, z);
            history.push((it, kl));
            progress(it, kl);
        }
        for i in 0..n {
            for d in 0..2 {
                let g = grad[i][d];
                let u = update[i][d];
                gains[i][d] = if (g > 0.0) != (u > 0.0) {
                    gains[i][d] + 0.2
                } else {
                    gains[i][d] * 0.8
                };
                gains[i][d] = gains[i][d].max(params.min_gain);
                update[i][d] = momentum * u - params.learning_rate * gains[i][d] * g;
                y[i][d] += update[i][d];
            }
        }
        let mean = y.iter().fold([0.0; 2], |m, r| [m[0] + r[0], m[1] + r[1]]);
        let mean = [mean[0] / n as f64, mean[1] / n as f64];
        for r in &mut y {
            r[0] -= mean[0];
            r[1] -= mean[1];
        }
    }
    if y.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("t-SNE coordinates".into()));
    }
    let kl = kl_divergence(&p, &y)?;
    history.push((params.iterations, kl));
    progress(params.iterations, kl);
    Ok(TsneResult {
        coords: y,
        kl,
        history,
        params: params.clone(),
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub label: String,
    pub medium: String,
}

/// A t-SNE result paired with the documents it embeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub rows: Vec<ScatterRow>,
    pub kl: f64,
    pub history: Vec<(usize, f64)>,
}

impl Embedding {
    pub fn new(docs: &[Document], result: TsneResult) -> Result<Self> {
        if docs.len() != result.coords.len() {
            return Err(Error::DimensionMismatch { expected: docs.len(), got: result.coords.len() });
        }
        Ok(Embedding {
            rows: docs
                .iter()
                .zip(&result.coords)
                .map(|(d, c)| ScatterRow {
                    id: d.id.clone(),
                    x: c[0],
                    y: c[1],
                    label: d.label.as_str().to_string(),
                    medium: d.medium.clone(),
                })
                .collect(),
            kl: result.kl,
            history: result.history,
        })
    }

    /// CSV `id,x,y,label,medium` in input order.
    pub fn write_scatter(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["id", "x", "y", "label", "medium"])?;
        for r in &self.rows {
            w.write_record([
                r.id.clone(),
                format!("{:.17e}", r.x),
                format!("{:.17e}", r.y),
                r.label.clone(),
                r.medium.clone(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

pub fn read_scatter(reader: impl std::io::Read) -> Result<Vec<ScatterRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let rows = r.deserialize().collect::<std::result::Result<Vec<ScatterRow>, _>>()?;
    Ok(rows)
}
