//! Tokenization, vocabulary selection and sparse BoW / TF-IDF vectors.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::par::*;

/// Dutch stop words shipped with the crate.
pub const DUTCH_STOPWORDS: &str = include_str!("../data/stopwords_nl.txt");

pub fn default_stopwords() -> HashSet<String> {
    crate::corpus::parse_term_list(DUTCH_STOPWORDS)
}

/// Splits on every non-alphanumeric character, dropping tokens shorter than
/// two characters and stop words. Order and multiplicity are preserved.
pub fn tokenize(text: &str, stopwords: &HashSet<String>) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().nth(1).is_some())
        .filter(|t| !stopwords.contains(*t))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    RawCounts,
    TfidfL2,
}

/// Sparse feature vector; entries are sorted by index and strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocVector {
    entries: Vec<(usize, f64)>,
    mode: NormMode,
}

impl DocVector {
    /// Builds a vector from arbitrary (index, value) pairs. Duplicate indices
    /// are summed and zeros dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>, mode: NormMode) -> Self {
        let mut entries: Vec<(usize, f64)> = pairs.into_iter().collect();
        entries.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match merged.last_mut() {
                Some((j, w)) if *j == i => *w += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        DocVector {
            entries: merged,
            mode,
        }
    }

    pub fn from_dense(values: &[f64], mode: NormMode) -> Self {
        Self::from_pairs(values.iter().copied().enumerate(), mode)
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn mode(&self) -> NormMode {
        self.mode
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.entries.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|&(i, _)| i)
    }

    pub fn norm_squared(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Dot product with a dense vector. Indices past its end count as zero.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, v)| dense.get(i).map_or(0.0, |w| v * w))
            .sum()
    }

    pub fn dot(&self, other: &DocVector) -> f64 {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut acc = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    acc += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        acc
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for &(i, v) in &self.entries {
            if i < dim {
                out[i] = v;
            }
        }
        out
    }

    /// Applies a permutation of feature indices: entry `i` moves to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> DocVector {
        DocVector::from_pairs(self.entries.iter().map(|&(i, v)| (perm[i], v)), self.mode)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    df: Vec<usize>,
    idf: Vec<f64>,
    n_docs: usize,
    max_features: usize,
}

/// Smoothed inverse document frequency, `ln((1 + n) / (1 + df)) + 1`.
pub fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

impl Vocabulary {
    /// Fits a vocabulary on tokenized documents. Terms are ranked by total
    /// count, ties broken by ascending term, and the top `max_features` kept.
    pub fn fit<T: AsRef<[String]> + Sync>(docs: &[T], max_features: usize) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot build a vocabulary from an empty corpus".into(),
            ));
        }
        if max_features == 0 {
            return Err(Error::InvalidArgument("max_features must be at least 1".into()));
        }
        let per_doc: Vec<HashMap<&str, usize>> = docs
            .par_iter()
            .map(|tokens| {
                let mut counts = HashMap::new();
                for t in tokens.as_ref() {
                    *counts.entry(t.as_str()).or_insert(0) += 1;
                }
                counts
            })
            .collect();
        let mut totals: HashMap<&str, (usize, usize)> = HashMap::new();
        for counts in &per_doc {
            for (&t, &c) in counts {
                let e = totals.entry(t).or_insert((0, 0));
                e.0 += c;
                e.1 += 1;
            }
        }
        let mut ranked: Vec<(&str, usize, usize)> =
            totals.into_iter().map(|(t, (c, df))| (t, c, df)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_features);
        let n_docs = docs.len();
        let terms: Vec<String> = ranked.iter().map(|r| r.0.to_string()).collect();
        let df: Vec<usize> = ranked.iter().map(|r| r.2).collect();
        let idf = df.iter().map(|&d| smoothed_idf(n_docs, d)).collect();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Vocabulary {
            terms,
            index,
            df,
            idf,
            n_docs,
            max_features,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df(&self) -> &[usize] {
        &self.df
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn max_features(&self) -> usize {
        self.max_features
    }

    /// Hex digest identifying the term list and order.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for t in &self.terms {
            hasher.update(t.as_bytes());
            hasher.update(b"\n");
        }
        hasher.finalize()[..16]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Restores the term index after deserialization.
    pub fn rebuild_index(&mut self) {
        self.index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }

    /// Writes `term,index,df,idf` rows.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["term", "index", "df", "idf"])?;
        for (i, t) in self.terms.iter().enumerate() {
            w.write_record([
                t.clone(),
                i.to_string(),
                self.df[i].to_string(),
                self.idf[i].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<vocabulary output>", e))?;
        Ok(())
    }
}

/// Tokenizes every body in the corpus (titles are never used).
pub fn tokenize_corpus(corpus: &Corpus, stopwords: &HashSet<String>) -> Vec<Vec<String>> {
    corpus
        .documents()
        .par_iter()
        .map(|d| tokenize(&d.body, stopwords))
        .collect()
}

pub fn build_vocabulary(
    corpus: &Corpus,
    max_features: usize,
    stopwords: &HashSet<String>,
) -> Result<Vocabulary> {
    Vocabulary::fit(&tokenize_corpus(corpus, stopwords), max_features)
}

/// Raw term counts of a token list; out-of-vocabulary tokens are ignored.
pub fn count_tokens(tokens: &[String], vocab: &Vocabulary) -> DocVector {
    DocVector::from_pairs(
        tokens
            .iter()
            .filter_map(|t| vocab.index_of(t))
            .map(|i| (i, 1.0)),
        NormMode::RawCounts,
    )
}

pub fn vectorize_counts(doc: &Document, vocab: &Vocabulary) -> DocVector {
    count_tokens(&tokenize(&doc.body, &HashSet::new()), vocab)
}

/// Reweights one count vector by idf and L2-normalizes it.
pub fn tfidf(counts: &DocVector, vocab: &Vocabulary) -> DocVector {
    let weighted: Vec<(usize, f64)> = counts
        .entries()
        .iter()
        .map(|&(i, c)| (i, c * vocab.idf[i]))
        .collect();
    let norm = weighted.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
    DocVector {
        entries: if norm > 0.0 {
            weighted.into_iter().map(|(i, v)| (i, v / norm)).collect()
        } else {
            Vec::new()
        },
        mode: NormMode::TfidfL2,
    }
}

pub fn apply_tfidf(counts: &[DocVector], vocab: &Vocabulary) -> Vec<DocVector> {
    counts.par_iter().map(|c| tfidf(c, vocab)).collect()
}
