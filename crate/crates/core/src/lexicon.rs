//! Signed term lexicon taken from a linear model's coefficients.
//!
//! Positive weights indicate commercial language, negative weights editorial
//! language. Documents can be scored by summing `count * weight` over their
//! tokens, or by counting positive against negative tokens.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::{Corpus, Document, Label};
use crate::error::{Error, Result};
use crate::models::Model;
use crate::vectorize::{tokenize, DocVector, Vocabulary};

pub const SIGN_CONVENTION: &str = "positive weight = commercial, negative weight = editorial";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexEntry {
    pub term: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconMeta {
    pub model_kind: String,
    pub model_params: Value,
    pub vocab_hash: String,
    pub created: Option<String>,
    pub sign_convention: String,
    pub n_entries: usize,
    /// Set when every weight is zero (e.g. a model trained to nothing).
    pub all_zero: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    entries: Vec<LexEntry>,
    weights: HashMap<String, (usize, f64)>,
    pub metadata: LexiconMeta,
}

impl Lexicon {
    /// Builds a lexicon from (term, weight) pairs, sorting by weight
    /// descending (ties by term). Duplicate terms are rejected.
    pub fn from_entries(entries: Vec<LexEntry>, metadata: LexiconMeta) -> Result<Self> {
        let mut entries = entries;
        entries.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.term.cmp(&b.term)));
        let mut weights = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if weights.insert(e.term.clone(), (i, e.weight)).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate lexicon term {:?}",
                    e.term
                )));
            }
        }
        let metadata = LexiconMeta {
            n_entries: entries.len(),
            all_zero: entries.iter().all(|e| e.weight == 0.0),
            ..metadata
        };
        Ok(Lexicon {
            entries,
            weights,
            metadata,
        })
    }

    pub fn entries(&self) -> &[LexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn weight(&self, term: &str) -> Option<f64> {
        self.weights.get(term).map(|&(_, w)| w)
    }

    /// Same terms with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Lexicon {
        let entries = self
            .entries
            .iter()
            .map(|e| LexEntry {
                term: e.term.clone(),
                weight: e.weight * factor,
            })
            .collect();
        Lexicon::from_entries(entries, self.metadata.clone()).expect("terms stay unique")
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["term", "weight"])?;
        for e in &self.entries {
            w.write_record([e.term.clone(), format!("{:.16e}", e.weight)])?;
        }
        w.flush().map_err(|e| Error::io("<lexicon output>", e))?;
        Ok(())
    }

    /// Reads a `term,weight` CSV. The metadata is left mostly empty; pair it
    /// with [`Lexicon::read_metadata`] when the sidecar is available.
    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["term", "weight"] {
            return Err(Error::Malformed {
                line: 1,
                message: "expected header term,weight".into(),
            });
        }
        let mut entries = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let weight = rec[1].parse::<f64>().map_err(|e| Error::Malformed {
                line: i + 2,
                message: e.to_string(),
            })?;
            entries.push(LexEntry {
                term: rec[0].to_string(),
                weight,
            });
        }
        let meta = LexiconMeta {
            model_kind: String::new(),
            model_params: Value::Null,
            vocab_hash: String::new(),
            created: None,
            sign_convention: SIGN_CONVENTION.into(),
            n_entries: 0,
            all_zero: false,
        };
        Lexicon::from_entries(entries, meta)
    }

    pub fn write_metadata(&self, mut writer: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(&mut writer, &self.metadata)?;
        writeln!(writer).map_err(|e| Error::io("<lexicon metadata>", e))?;
        Ok(())
    }

    pub fn read_metadata(reader: impl Read) -> Result<LexiconMeta> {
        Ok(serde_json::from_reader(reader)?)
    }
}

/// One entry per vocabulary term, weighted by the model's coefficient.
pub fn derive_lexicon(model: &Model, vocab: &Vocabulary, created: Option<String>) -> Result<Lexicon> {
    let linear = model.as_linear().ok_or(Error::NotLinear)?;
    if linear.weights.len() != vocab.len() {
        return Err(Error::DimensionMismatch {
            expected: vocab.len(),
            got: linear.weights.len(),
        });
    }
    let entries = vocab
        .terms()
        .iter()
        .zip(&linear.weights)
        .map(|(t, &w)| LexEntry {
            term: t.clone(),
            weight: w,
        })
        .collect();
    let meta = LexiconMeta {
        model_kind: model.kind().to_string(),
        model_params: serde_json::json!({
            "regularization": linear.regularization,
            "solver": linear.solver,
            "bias": linear.bias,
            "n_features": vocab.len(),
        }),
        vocab_hash: vocab.hash(),
        created,
        sign_convention: SIGN_CONVENTION.into(),
        n_entries: 0,
        all_zero: false,
    };
    Lexicon::from_entries(entries, meta)
}

fn term_counts(body: &str, lexicon: &Lexicon) -> Vec<(usize, usize)> {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for tok in tokenize(body, &HashSet::new()) {
        if let Some(&(i, _)) = lexicon.weights.get(&tok) {
            *counts.entry(i).or_insert(0) += 1;
        }
    }
    let mut counts: Vec<(usize, usize)> = counts.into_iter().collect();
    counts.sort_unstable();
    counts
}

/// `sum over lexicon terms of count(term, body) * weight(term)`.
pub fn score_text(body: &str, lexicon: &Lexicon) -> f64 {
    term_counts(body, lexicon)
        .into_iter()
        .map(|(i, c)| c as f64 * lexicon.entries[i].weight)
        .sum()
}

pub fn score_weighted(doc: &Document, lexicon: &Lexicon) -> f64 {
    score_text(&doc.body, lexicon)
}

/// Lexicon score of an already vectorized document: `sum x_i * weight(term_i)`.
/// With a TF-IDF vector this reproduces the linear model's score minus bias.
pub fn score_vector(x: &DocVector, vocab: &Vocabulary, lexicon: &Lexicon) -> f64 {
    x.entries()
        .iter()
        .map(|&(i, v)| v * lexicon.weight(vocab.term(i)).unwrap_or(0.0))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CountScore {
    pub positive: usize,
    pub negative: usize,
    pub verdict: Label,
}

/// Counts tokens with positive and negative weight; zero-weight terms are
/// ignored. Commercial iff strictly more positive tokens.
pub fn score_count_text(body: &str, lexicon: &Lexicon) -> CountScore {
    let (mut positive, mut negative) = (0, 0);
    for (i, c) in term_counts(body, lexicon) {
        let w = lexicon.entries[i].weight;
        if w > 0.0 {
            positive += c;
        } else if w < 0.0 {
            negative += c;
        }
    }
    CountScore {
        positive,
        negative,
        verdict: if positive > negative {
            Label::Commercial
        } else {
            Label::Editorial
        },
    }
}

pub fn score_count(doc: &Document, lexicon: &Lexicon) -> CountScore {
    score_count_text(&doc.body, lexicon)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub editorial: usize,
    pub commercial: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bins: Vec<HistogramBin>,
}

impl Histogram {
    /// Equal-width bins over `[min, max]` of the scores; the last bin is
    /// closed. A zero-width range is widened by 0.5 on each side.
    pub fn build(scores: &[f64], labels: &[Label], bins: usize) -> Result<Histogram> {
        if bins == 0 {
            return Err(Error::InvalidArgument("bins must be at least 1".into()));
        }
        if scores.is_empty() {
            return Err(Error::InvalidArgument("cannot histogram an empty corpus".into()));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("lexicon score".into()));
        }
        let mut lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let mut hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi == lo {
            lo -= 0.5;
            hi += 0.5;
        }
        let width = (hi - lo) / bins as f64;
        let mut out: Vec<HistogramBin> = (0..bins)
            .map(|b| HistogramBin {
                low: lo + b as f64 * width,
                high: if b + 1 == bins { hi } else { lo + (b + 1) as f64 * width },
                editorial: 0,
                commercial: 0,
            })
            .collect();
        for (&s, &l) in scores.iter().zip(labels) {
            let b = (((s - lo) / width) as usize).min(bins - 1);
            match l {
                Label::Editorial => out[b].editorial += 1,
                Label::Commercial => out[b].commercial += 1,
            }
        }
        Ok(Histogram { bins: out })
    }

    /// Centre of the fullest bin for one class.
    pub fn mode(&self, label: Label) -> Option<f64> {
        let count = |b: &HistogramBin| match label {
            Label::Editorial => b.editorial,
            Label::Commercial => b.commercial,
        };
        let best = self.bins.iter().max_by(|a, b| {
            count(a).cmp(&count(b)).then(b.low.total_cmp(&a.low))
        })?;
        (count(best) > 0).then(|| (best.low + best.high) / 2.0)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["bin_low", "bin_high", "count_editorial", "count_commercial"])?;
        for b in &self.bins {
            w.write_record([
                b.low.to_string(),
                b.high.to_string(),
                b.editorial.to_string(),
                b.commercial.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<histogram output>", e))?;
        Ok(())
    }
}

/// Weighted lexicon scores of every document, binned per true class.
pub fn score_distribution(corpus: &Corpus, lexicon: &Lexicon, bins: usize) -> Result<Histogram> {
    let scores: Vec<f64> = corpus
        .documents()
        .iter()
        .map(|d| score_weighted(d, lexicon))
        .collect();
    Histogram::build(&scores, &corpus.labels(), bins)
}

/// The `n` entries of the requested sign with the largest `|weight|`.
pub fn top_features(lexicon: &Lexicon, n: usize, side: Label) -> Vec<LexEntry> {
    let mut picked: Vec<LexEntry> = lexicon
        .entries
        .iter()
        .filter(|e| match side {
            Label::Commercial => e.weight > 0.0,
            Label::Editorial => e.weight < 0.0,
        })
        .cloned()
        .collect();
    picked.sort_by(|a, b| {
        b.weight
            .abs()
            .total_cmp(&a.weight.abs())
            .then_with(|| a.term.cmp(&b.term))
    });
    picked.truncate(n);
    picked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LinearModel;
    use proptest::prelude::*;

    fn meta() -> LexiconMeta {
        LexiconMeta {
            model_kind: "test".into(),
            model_params: Value::Null,
            vocab_hash: String::new(),
            created: None,
            sign_convention: SIGN_CONVENTION.into(),
            n_entries: 0,
            all_zero: false,
        }
    }

    fn lex(pairs: &[(&str, f64)]) -> Lexicon {
        let entries = pairs
            .iter()
            .map(|&(t, w)| LexEntry {
                term: t.into(),
                weight: w,
            })
            .collect();
        Lexicon::from_entries(entries, meta()).unwrap()
    }

    fn vocab(terms: &str) -> Vocabulary {
        let toks = tokenize(terms, &HashSet::new());
        Vocabulary::fit(&[toks], 100).unwrap()
    }

    #[test]
    fn derive_from_linear_model() {
        let v = vocab("koop minister");
        assert_eq!(v.terms(), ["koop", "minister"]);
        let model = Model::Linear(LinearModel {
            weights: vec![0.5, -0.2],
            ..Default::default()
        });
        let l = derive_lexicon(&model, &v, None).unwrap();
        assert_eq!(l.entries()[0], LexEntry { term: "koop".into(), weight: 0.5 });
        assert_eq!(l.entries()[1], LexEntry { term: "minister".into(), weight: -0.2 });
        assert!(!l.metadata.all_zero);
        assert_eq!(l.metadata.vocab_hash, v.hash());

        let zero = Model::Linear(LinearModel {
            weights: vec![0.0, 0.0],
            ..Default::default()
        });
        assert!(derive_lexicon(&zero, &v, None).unwrap().metadata.all_zero);
    }

    #[test]
    fn derive_rejects_non_linear() {
        let v = vocab("aa bb");
        let x = vec![
            DocVector::from_dense(&[1.0, 0.0], crate::vectorize::NormMode::RawCounts),
            DocVector::from_dense(&[0.0, 1.0], crate::vectorize::NormMode::RawCounts),
        ];
        let nb = crate::models::ModelSpec::NaiveBayes { alpha: 1.0 }
            .fit(&x, &[Label::Commercial, Label::Editorial], 2, 0)
            .unwrap();
        let err = derive_lexicon(&nb, &v, None).unwrap_err();
        assert_eq!(err.to_string(), "lexicon requires linear model");
    }

    #[test]
    fn scoring_examples() {
        let l = lex(&[("goed", 2.0), ("minister", -1.0)]);
        assert_eq!(score_text("goed goed minister", &l), 3.0);
        assert_eq!(score_text("", &l), 0.0);
        assert_eq!(score_text("onbekend woord", &l), 0.0);
        let c = score_count_text("goed goed minister", &l);
        assert_eq!((c.positive, c.negative, c.verdict), (2, 1, Label::Commercial));
        assert_eq!(score_count_text("goed minister", &l).verdict, Label::Editorial);
        let empty = score_count_text("", &l);
        assert_eq!((empty.positive, empty.negative, empty.verdict), (0, 0, Label::Editorial));
    }

    #[test]
    fn zero_weight_terms_are_ignored_by_count() {
        let l = lex(&[("aa", 0.0), ("bb", 1.0)]);
        let c = score_count_text("aa aa aa bb", &l);
        assert_eq!((c.positive, c.negative), (1, 0));
    }

    #[test]
    fn top_features_examples() {
        let l = lex(&[("aa", 3.0), ("bb", -2.0), ("cc", 1.0)]);
        assert_eq!(
            top_features(&l, 1, Label::Commercial),
            vec![LexEntry { term: "aa".into(), weight: 3.0 }]
        );
        assert_eq!(
            top_features(&l, 1, Label::Editorial),
            vec![LexEntry { term: "bb".into(), weight: -2.0 }]
        );
        assert_eq!(top_features(&l, 10, Label::Commercial).len(), 2);
    }

    #[test]
    fn sorted_and_unique() {
        let l = lex(&[("bb", 1.0), ("aa", 1.0), ("cc", 5.0), ("dd", -3.0)]);
        let terms: Vec<&str> = l.entries().iter().map(|e| e.term.as_str()).collect();
        assert_eq!(terms, ["cc", "aa", "bb", "dd"]);
        let dup = vec![
            LexEntry { term: "aa".into(), weight: 1.0 },
            LexEntry { term: "aa".into(), weight: 2.0 },
        ];
        assert!(Lexicon::from_entries(dup, meta()).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let l = lex(&[("aa", 0.1), ("bb", -1.0 / 3.0), ("cc", 1e-300)]);
        let mut buf = Vec::new();
        l.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("term,weight\naa,1.0000000000000001e-1\n"));
        let back = Lexicon::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.entries(), l.entries());
    }

    #[test]
    fn histogram_edges() {
        let h = Histogram::build(&[2.0], &[Label::Commercial], 5).unwrap();
        assert_eq!(h.bins.iter().filter(|b| b.commercial + b.editorial > 0).count(), 1);
        assert_eq!(h.bins[0].low, 1.5);
        assert_eq!(h.bins[4].high, 2.5);

        let h = Histogram::build(&[1.0, 1.0, 1.0], &[Label::Editorial; 3], 3).unwrap();
        assert_eq!(h.bins[1].editorial, 3);

        let h = Histogram::build(&[-1.0, 0.0, 1.0], &[Label::Editorial, Label::Editorial, Label::Commercial], 2)
            .unwrap();
        assert_eq!((h.bins[0].editorial, h.bins[1].editorial, h.bins[1].commercial), (1, 1, 1));
        assert!(Histogram::build(&[], &[], 3).is_err());
        assert!(Histogram::build(&[1.0], &[Label::Editorial], 0).is_err());
    }

    fn term_name(i: usize) -> String {
        format!("t{i}")
    }

    proptest! {
        #[test]
        fn weighted_score_is_brute_force_sum(
            weights in proptest::collection::vec(-64i32..64, 1..12),
            body in proptest::collection::vec(0usize..16, 0..60),
        ) {
            // dyadic weights keep every partial sum exact
            let pairs: Vec<(String, f64)> = weights
                .iter()
                .enumerate()
                .map(|(i, &w)| (term_name(i), w as f64 / 8.0))
                .collect();
            let l = Lexicon::from_entries(
                pairs.iter().map(|(t, w)| LexEntry { term: t.clone(), weight: *w }).collect(),
                meta(),
            ).unwrap();
            let text: Vec<String> = body.iter().map(|&i| term_name(i)).collect();
            let text = text.join(" ");
            let mut expected = 0.0;
            for (t, w) in &pairs {
                let count = text.split(' ').filter(|tok| tok == t).count();
                expected += count as f64 * w;
            }
            prop_assert_eq!(score_text(&text, &l), expected);

            // scaling and additivity
            let scaled = l.scaled(4.0);
            prop_assert_eq!(score_text(&text, &scaled), 4.0 * expected);
            prop_assert_eq!(
                score_count_text(&text, &scaled).verdict,
                score_count_text(&text, &l).verdict
            );
            let doubled = format!("{text} {text}");
            prop_assert_eq!(score_text(&doubled, &l), 2.0 * expected);
        }

        #[test]
        fn arbitrary_weights_scale_and_add(
            weights in proptest::collection::vec(-3.0f64..3.0, 1..8),
            a in proptest::collection::vec(0usize..10, 0..30),
            b in proptest::collection::vec(0usize..10, 0..30),
            factor in 0.01f64..100.0,
        ) {
            let l = Lexicon::from_entries(
                weights.iter().enumerate().map(|(i, &w)| LexEntry { term: term_name(i), weight: w }).collect(),
                meta(),
            ).unwrap();
            let ta = a.iter().map(|&i| term_name(i)).collect::<Vec<_>>().join(" ");
            let tb = b.iter().map(|&i| term_name(i)).collect::<Vec<_>>().join(" ");
            let sa = score_text(&ta, &l);
            let sb = score_text(&tb, &l);
            let sab = score_text(&format!("{ta} {tb}"), &l);
            prop_assert!((sab - (sa + sb)).abs() <= 1e-12 * (1.0 + sa.abs() + sb.abs()) * 10.0);
            let scaled = l.scaled(factor);
            let ss = score_text(&ta, &scaled);
            prop_assert!((ss - factor * sa).abs() <= 1e-12 * (1.0 + (factor * sa).abs()) * 10.0);
            prop_assert_eq!(score_count_text(&ta, &scaled), score_count_text(&ta, &l));
        }
    }
}
