//! Metrics, k-fold cross-validation and leave-one-medium-out evaluation.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::{complement, stratified_folds, Corpus, Label};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::models::{Model, ModelSpec};
use crate::par::*;
use crate::vectorize::{apply_tfidf, count_tokens, tokenize_corpus, DocVector, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Bow,
    #[default]
    Tfidf,
}

impl Representation {
    pub fn as_str(self) -> &'static str {
        match self {
            Representation::Bow => "bow",
            Representation::Tfidf => "tfidf",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Representation::Bow => "bag of words",
            Representation::Tfidf => "tfidf",
        }
    }
}

impl std::str::FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bow" => Ok(Representation::Bow),
            "tfidf" => Ok(Representation::Tfidf),
            other => Err(Error::InvalidArgument(format!("unknown representation {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// F1 of the commercial class.
    pub f1: f64,
    /// `None` when the truth holds a single class.
    pub auc: Option<f64>,
    pub confusion: Confusion,
}

/// Twice the Mann-Whitney U statistic of the commercial scores, using
/// midranks for ties, together with the class sizes. Doubling keeps the value
/// an integer. `None` if either class is absent.
pub fn mann_whitney_u2(scores: &[f64], truth: &[Label]) -> Option<(u128, u64, u64)> {
    let n_pos = truth.iter().filter(|&&l| l == Label::Commercial).count() as u64;
    let n_neg = truth.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum2: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[start]] {
            end += 1;
        }
        // 1-based positions start+1 ..= end+1 share the midrank; doubled
        let mid2 = (start + 1 + end + 1) as u128;
        for &i in &order[start..=end] {
            if truth[i] == Label::Commercial {
                rank_sum2 += mid2;
            }
        }
        start = end + 1;
    }
    let u2 = rank_sum2 - (n_pos as u128) * (n_pos as u128 + 1);
    Some((u2, n_pos, n_neg))
}

pub fn auc(scores: &[f64], truth: &[Label]) -> Option<f64> {
    mann_whitney_u2(scores, truth).map(|(u2, p, n)| u2 as f64 / (2 * p * n) as f64)
}

/// Accuracy and F1 from thresholded scores (`> 0` is commercial), AUC from
/// the raw scores.
pub fn compute_metrics(scores: &[f64], truth: &[Label]) -> Result<Metrics> {
    if scores.len() != truth.len() {
        return Err(Error::InvalidArgument(format!(
            "{} scores but {} labels",
            scores.len(),
            truth.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::InvalidArgument("no scores to evaluate".into()));
    }
    let mut c = Confusion::default();
    for (&s, &t) in scores.iter().zip(truth) {
        match (Label::from_score(s), t) {
            (Label::Commercial, Label::Commercial) => c.tp += 1,
            (Label::Commercial, Label::Editorial) => c.fp += 1,
            (Label::Editorial, Label::Editorial) => c.tn += 1,
            (Label::Editorial, Label::Commercial) => c.fn_ += 1,
        }
    }
    let accuracy = (c.tp + c.tn) as f64 / scores.len() as f64;
    let denom = 2 * c.tp + c.fp + c.fn_;
    // 2PR / (P + R) simplifies to 2TP / (2TP + FP + FN)
    let f1 = if denom == 0 {
        0.0
    } else {
        (2 * c.tp) as f64 / denom as f64
    };
    Ok(Metrics {
        accuracy,
        f1,
        auc: auc(scores, truth),
        confusion: c,
    })
}

/// Mean, sample standard deviation and range of a set of fold values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len();
        if n == 0 {
            return Summary {
                mean: f64::NAN,
                std: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
                n,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Summary {
            mean,
            std,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            n,
        }
    }

    fn pm(&self) -> String {
        if self.n == 0 {
            "n/a".to_string()
        } else {
            format!("{:.2}±{:.2}", self.mean, self.std)
        }
    }
}

/// Everything needed to go from token lists to a fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub representation: Representation,
    pub max_features: usize,
    pub stopwords: HashSet<String>,
    pub model: ModelSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            representation: Representation::Tfidf,
            max_features: 5000,
            stopwords: crate::vectorize::default_stopwords(),
            model: ModelSpec::default(),
        }
    }
}

pub fn featurize(
    tokens: &[&[String]],
    vocab: &Vocabulary,
    representation: Representation,
) -> Vec<DocVector> {
    let counts: Vec<DocVector> = tokens.par_iter().map(|t| count_tokens(t, vocab)).collect();
    match representation {
        Representation::Bow => counts,
        Representation::Tfidf => apply_tfidf(&counts, vocab),
    }
}

#[derive(Debug, Clone)]
pub struct FittedPipeline {
    pub vocab: Vocabulary,
    pub model: Model,
    pub representation: Representation,
}

impl FittedPipeline {
    /// Fits vocabulary, idf and model on the given training documents only.
    pub fn fit(
        tokens: &[&[String]],
        labels: &[Label],
        config: &PipelineConfig,
        seed: u64,
    ) -> Result<Self> {
        let vocab = Vocabulary::fit(tokens, config.max_features)?;
        let x = featurize(tokens, &vocab, config.representation);
        let model = config.model.fit(&x, labels, vocab.len(), seed)?;
        Ok(FittedPipeline {
            vocab,
            model,
            representation: config.representation,
        })
    }

    pub fn scores(&self, tokens: &[&[String]]) -> Result<Vec<f64>> {
        featurize(tokens, &self.vocab, self.representation)
            .iter()
            .map(|x| self.model.decision_score(x))
            .collect()
    }
}

fn select<'a>(tokens: &'a [Vec<String>], idx: &[usize]) -> Vec<&'a [String]> {
    idx.iter().map(|&i| tokens[i].as_slice()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub representation: Representation,
    pub model: String,
    pub folds: Vec<Metrics>,
    pub accuracy: Summary,
    pub f1: Summary,
    /// Over the folds where AUC is defined.
    pub auc: Summary,
}

impl ReportRow {
    fn new(representation: Representation, model: String, folds: Vec<Metrics>) -> Self {
        let acc: Vec<f64> = folds.iter().map(|m| m.accuracy).collect();
        let f1: Vec<f64> = folds.iter().map(|m| m.f1).collect();
        let auc: Vec<f64> = folds.iter().filter_map(|m| m.auc).collect();
        ReportRow {
            representation,
            model,
            accuracy: Summary::of(&acc),
            f1: Summary::of(&f1),
            auc: Summary::of(&auc),
            folds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

fn write_err(e: std::io::Error) -> Error {
    Error::io("<report output>", e)
}

impl EvalReport {
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "representation",
            "model",
            "folds",
            "accuracy_mean",
            "accuracy_std",
            "f1_mean",
            "f1_std",
            "auc_mean",
            "auc_std",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.representation.as_str().to_string(),
                r.model.clone(),
                r.folds.len().to_string(),
                format!("{:.6}", r.accuracy.mean),
                format!("{:.6}", r.accuracy.std),
                format!("{:.6}", r.f1.mean),
                format!("{:.6}", r.f1.std),
                format!("{:.6}", r.auc.mean),
                format!("{:.6}", r.auc.std),
            ])?;
        }
        w.flush().map_err(write_err)?;
        Ok(())
    }

    /// Aligned text table: representation, model, then mean±std per metric.
    pub fn to_table(&self) -> String {
        let header = ["representation", "learning model", "accuracy", "f1 score", "auc"];
        let rows: Vec<[String; 5]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.representation.display_name().to_string(),
                    r.model.clone(),
                    r.accuracy.pm(),
                    r.f1.pm(),
                    r.auc.pm(),
                ]
            })
            .collect();
        render_table(&header.map(String::from), &rows)
    }
}

fn render_table<const N: usize>(header: &[String; N], rows: &[[String; N]]) -> String {
    let mut widths: [usize; N] = std::array::from_fn(|i| header[i].chars().count());
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String; N]| -> String {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str(" | ");
            }
            let pad = w - cell.chars().count();
            s.push_str(cell);
            s.extend(std::iter::repeat_n(' ', pad));
        }
        s.trim_end().to_string()
    };
    let mut out = String::new();
    let _ = writeln!(out, "{}", line(header));
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let _ = writeln!(out, "{}", rule.join("-+-"));
    for r in rows {
        let _ = writeln!(out, "{}", line(r));
    }
    out
}

/// Stratified k-fold cross-validation of one pipeline. Vocabulary, idf and
/// model are refit on each training split.
pub fn cross_validate(
    corpus: &Corpus,
    config: &PipelineConfig,
    k: usize,
    seed: u64,
) -> Result<EvalReport> {
    cross_validate_suite(corpus, std::slice::from_ref(config), k, seed)
}

/// Cross-validates several pipelines over the same folds, one report row each.
pub fn cross_validate_suite(
    corpus: &Corpus,
    configs: &[PipelineConfig],
    k: usize,
    seed: u64,
) -> Result<EvalReport> {
    let labels = corpus.labels();
    let folds = stratified_folds(&labels, k, derive_seed(seed, "folds"))?;
    let mut rows = Vec::with_capacity(configs.len());
    // Token lists only depend on the stop-word set; reuse across configs.
    let mut cache: Vec<(&HashSet<String>, Vec<Vec<String>>)> = Vec::new();
    for config in configs {
        let pos = match cache.iter().position(|(sw, _)| **sw == config.stopwords) {
            Some(p) => p,
            None => {
                cache.push((&config.stopwords, tokenize_corpus(corpus, &config.stopwords)));
                cache.len() - 1
            }
        };
        let tokens = &cache[pos].1;
        let fold_metrics: Vec<Result<Metrics>> = folds
            .par_iter()
            .enumerate()
            .map(|(f, test)| {
                evaluate_split(tokens, &labels, test, config, derive_seed(seed, &format!("fold{f}")))
                    .map_err(|e| Error::Fold {
                        fold: f,
                        source: Box::new(e),
                    })
            })
            .collect();
        let fold_metrics = fold_metrics.into_iter().collect::<Result<Vec<_>>>()?;
        rows.push(ReportRow::new(
            config.representation,
            config.model.display_name().to_string(),
            fold_metrics,
        ));
    }
    Ok(EvalReport { rows })
}

fn evaluate_split(
    tokens: &[Vec<String>],
    labels: &[Label],
    test: &[usize],
    config: &PipelineConfig,
    seed: u64,
) -> Result<Metrics> {
    let (train, test) = complement(tokens.len(), test);
    let train_tokens = select(tokens, &train);
    let train_labels: Vec<Label> = train.iter().map(|&i| labels[i]).collect();
    let pipeline = FittedPipeline::fit(&train_tokens, &train_labels, config, seed)?;
    assert_no_leakage(&pipeline.vocab, &train_tokens)?;
    let scores = pipeline.scores(&select(tokens, &test))?;
    let truth: Vec<Label> = test.iter().map(|&i| labels[i]).collect();
    compute_metrics(&scores, &truth)
}

/// Every vocabulary term must occur in the training split.
fn assert_no_leakage(vocab: &Vocabulary, train: &[&[String]]) -> Result<()> {
    if vocab.n_docs() != train.len() || vocab.df().contains(&0) {
        return Err(Error::InvalidArgument(
            "vocabulary was not fitted on the training split".into(),
        ));
    }
    let mut seen = vec![false; vocab.len()];
    for doc in train {
        for t in doc.iter() {
            if let Some(i) = vocab.index_of(t) {
                seen[i] = true;
            }
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidArgument(format!(
            "vocabulary term {:?} does not occur in the training split",
            vocab.term(i)
        )));
    }
    Ok(())
}

/// Leave-one-medium-out results: media in rows, models in columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossDomainTable {
    pub media: Vec<String>,
    pub models: Vec<String>,
    /// `cells[medium][model]`.
    pub cells: Vec<Vec<Metrics>>,
}

impl CrossDomainTable {
    pub fn accuracy(&self, medium: usize, model: usize) -> f64 {
        self.cells[medium][model].accuracy
    }

    /// Accuracy summary across models for one held-out medium.
    pub fn row_summary(&self, medium: usize) -> Summary {
        let v: Vec<f64> = self.cells[medium].iter().map(|m| m.accuracy).collect();
        Summary::of(&v)
    }

    /// Accuracy summary across held-out media for one model.
    pub fn column_summary(&self, model: usize) -> Summary {
        let v: Vec<f64> = self.cells.iter().map(|row| row[model].accuracy).collect();
        Summary::of(&v)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["medium".to_string()];
        header.extend(self.models.iter().cloned());
        header.extend(["mean".to_string(), "std".to_string()]);
        w.write_record(&header)?;
        for (i, medium) in self.media.iter().enumerate() {
            let mut rec = vec![medium.clone()];
            rec.extend(self.cells[i].iter().map(|m| format!("{:.6}", m.accuracy)));
            let s = self.row_summary(i);
            rec.extend([format!("{:.6}", s.mean), format!("{:.6}", s.std)]);
            w.write_record(&rec)?;
        }
        let cols: Vec<Summary> = (0..self.models.len()).map(|j| self.column_summary(j)).collect();
        let mut mean = vec!["mean".to_string()];
        mean.extend(cols.iter().map(|s| format!("{:.6}", s.mean)));
        mean.extend([String::new(), String::new()]);
        let mut std = vec!["std".to_string()];
        std.extend(cols.iter().map(|s| format!("{:.6}", s.std)));
        std.extend([String::new(), String::new()]);
        w.write_record(&mean)?;
        w.write_record(&std)?;
        w.flush().map_err(write_err)?;
        Ok(())
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let width = self.media.iter().map(|m| m.chars().count()).max().unwrap_or(0).max(8);
        let col = self.models.iter().map(|m| m.chars().count()).max().unwrap_or(0).max(9);
        let _ = write!(out, "{:width$}", "");
        for m in &self.models {
            let _ = write!(out, " | {m:>col$}");
        }
        let _ = writeln!(out, " | mean±std");
        for (i, medium) in self.media.iter().enumerate() {
            let _ = write!(out, "{medium:width$}");
            for cell in &self.cells[i] {
                let _ = write!(out, " | {:>col$.2}", cell.accuracy);
            }
            let _ = writeln!(out, " | {}", self.row_summary(i).pm());
        }
        let _ = write!(out, "{:width$}", "mean±std");
        for j in 0..self.models.len() {
            let _ = write!(out, " | {:>col$}", self.column_summary(j).pm());
        }
        let _ = writeln!(out);
        out
    }
}

/// Trains on all media but one and tests on the held-out medium, for every
/// medium and every pipeline.
pub fn cross_domain_evaluate(
    corpus: &Corpus,
    configs: &[PipelineConfig],
    seed: u64,
) -> Result<CrossDomainTable> {
    if corpus.media().len() < 2 {
        return Err(Error::InvalidArgument(
            "cross-domain evaluation needs at least two media".into(),
        ));
    }
    let media: Vec<String> = corpus.media().iter().cloned().collect();
    let labels = corpus.labels();
    let token_sets: Vec<Vec<Vec<String>>> = configs
        .iter()
        .map(|c| tokenize_corpus(corpus, &c.stopwords))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..media.len())
        .flat_map(|m| (0..configs.len()).map(move |c| (m, c)))
        .collect();
    let results: Vec<Result<Metrics>> = jobs
        .par_iter()
        .map(|&(m, c)| {
            let test: Vec<usize> = corpus
                .documents()
                .iter()
                .enumerate()
                .filter(|(_, d)| d.medium == media[m])
                .map(|(i, _)| i)
                .collect();
            let seed = derive_seed(seed, &format!("medium:{}", media[m]));
            evaluate_split(&token_sets[c], &labels, &test, &configs[c], seed).map_err(|e| {
                Error::Medium {
                    medium: media[m].clone(),
                    source: Box::new(e),
                }
            })
        })
        .collect();
    let mut results = results.into_iter();
    let mut cells = Vec::with_capacity(media.len());
    for _ in &media {
        let row = results
            .by_ref()
            .take(configs.len())
            .collect::<Result<Vec<_>>>()?;
        cells.push(row);
    }
    Ok(CrossDomainTable {
        media,
        models: configs.iter().map(|c| c.model.display_name().to_string()).collect(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub max_features: usize,
    pub accuracy: Summary,
    pub f1: Summary,
    pub auc: Summary,
}

/// Cross-validated accuracy as a function of the vocabulary cap.
pub fn feature_sweep(
    corpus: &Corpus,
    config: &PipelineConfig,
    feature_counts: &[usize],
    k: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    if feature_counts.is_empty() {
        return Err(Error::InvalidArgument("no feature counts given".into()));
    }
    if feature_counts.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("feature counts must be ascending".into()));
    }
    let configs: Vec<PipelineConfig> = feature_counts
        .iter()
        .map(|&n| PipelineConfig {
            max_features: n,
            ..config.clone()
        })
        .collect();
    let report = cross_validate_suite(corpus, &configs, k, seed)?;
    Ok(feature_counts
        .iter()
        .zip(report.rows)
        .map(|(&n, row)| SweepPoint {
            max_features: n,
            accuracy: row.accuracy,
            f1: row.f1,
            auc: row.auc,
        })
        .collect())
}

pub fn write_sweep_csv(points: &[SweepPoint], writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["max_features", "accuracy_mean", "accuracy_std", "f1_mean", "auc_mean"])?;
    for p in points {
        w.write_record([
            p.max_features.to_string(),
            format!("{:.6}", p.accuracy.mean),
            format!("{:.6}", p.accuracy.std),
            format!("{:.6}", p.f1.mean),
            format!("{:.6}", p.auc.mean),
        ])?;
    }
    w.flush().map_err(write_err)?;
    Ok(())
}
