//! Synthetic corpora from a unigram mixture with known ground truth, and a
//! Monte Carlo estimate of the Bayes-optimal accuracy on them.
//!
//! Each token of a document is a class signal token with probability `s`,
//! otherwise a medium nuisance token with probability `nuisance_rate`,
//! otherwise a shared background token. Within a pool tokens are uniform.
//! In a medium with `jargon_overlap = o > 0`, editorial signal tokens come
//! from the commercial jargon subset with probability `o`.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document, Label};
use crate::error::{Error, Result};
use crate::par::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    pub name: String,
    pub share: f64,
    #[serde(default)]
    pub jargon_overlap: f64,
}

impl MediumSpec {
    pub fn new(name: impl Into<String>, share: f64) -> Self {
        MediumSpec { name: name.into(), share, jargon_overlap: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeakerSpec {
    pub token: String,
    pub label: Label,
    pub medium: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_docs: usize,
    pub media: Vec<MediumSpec>,
    /// Fraction of commercial documents.
    pub balance: f64,
    pub commercial_terms: usize,
    pub editorial_terms: usize,
    pub background_terms: usize,
    pub nuisance_terms: usize,
    /// Size of the commercial subset editorial text borrows from in media
    /// with jargon overlap.
    pub jargon_terms: usize,
    pub doc_len_min: usize,
    pub doc_len_max: usize,
    pub s: f64,
    pub nuisance_rate: f64,
    pub leaker: Option<LeakerSpec>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_docs: 2000,
            media: (0..4).map(|i| MediumSpec::new(format!("medium{i}"), 0.25)).collect(),
            balance: 0.5,
            commercial_terms: 50,
            editorial_terms: 50,
            background_terms: 400,
            nuisance_terms: 20,
            jargon_terms: 10,
            doc_len_min: 100,
            doc_len_max: 300,
            s: 0.4,
            nuisance_rate: 0.1,
            leaker: None,
            seed: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Token {
    Commercial(usize),
    Editorial(usize),
    Background(usize),
    Nuisance(usize),
}

pub fn commercial_term(i: usize) -> String {
    format!("cm{i}")
}

pub fn editorial_term(i: usize) -> String {
    format!("ed{i}")
}

pub fn background_term(i: usize) -> String {
    format!("bg{i}")
}

pub fn nuisance_term(medium: usize, i: usize) -> String {
    format!("md{medium}n{i}")
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("{name} must be in [0, 1], got {x}")));
    }
    Ok(())
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.media.is_empty() {
            return Err(Error::InvalidArgument("at least one medium is required".into()));
        }
        let mut names = HashSet::new();
        for m in &self.media {
            if m.name.is_empty() || !names.insert(m.name.as_str()) {
                return Err(Error::InvalidArgument(format!("bad or duplicate medium name {:?}", m.name)));
            }
            if !(m.share >= 0.0) {
                return Err(Error::InvalidArgument(format!("negative share for {}", m.name)));
            }
            check_unit("jargon_overlap", m.jargon_overlap)?;
            if m.jargon_overlap > 0.0 && self.jargon_terms == 0 {
                return Err(Error::InvalidArgument("jargon overlap needs jargon_terms > 0".into()));
            }
        }
        let total: f64 = self.media.iter().map(|m| m.share).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("media shares sum to {total}, not 1")));
        }
        check_unit("balance", self.balance)?;
        check_unit("s", self.s)?;
        check_unit("nuisance_rate", self.nuisance_rate)?;
        if self.commercial_terms == 0 || self.editorial_terms == 0 || self.background_terms == 0 {
            return Err(Error::InvalidArgument("term pools must be non-empty".into()));
        }
        if self.nuisance_rate > 0.0 && self.nuisance_terms == 0 {
            return Err(Error::InvalidArgument("nuisance_rate > 0 needs nuisance_terms > 0".into()));
        }
        if self.jargon_terms > self.commercial_terms {
            return Err(Error::InvalidArgument("jargon_terms exceeds commercial_terms".into()));
        }
        if self.doc_len_min == 0 || self.doc_len_min > self.doc_len_max {
            return Err(Error::InvalidArgument("need 1 <= doc_len_min <= doc_len_max".into()));
        }
        if let Some(l) = &self.leaker {
            if !self.media.iter().any(|m| m.name == l.medium) {
                return Err(Error::UnknownMedium(l.medium.clone()));
            }
            let generated = ["cm", "ed", "bg", "md"];
            if l.token.chars().count() < 2
                || !l.token.chars().all(|c| c.is_alphanumeric() && !c.is_uppercase())
                || generated.iter().any(|p| l.token.starts_with(p))
            {
                return Err(Error::InvalidArgument(format!("unusable leaker token {:?}", l.token)));
            }
        }
        Ok(())
    }

    /// Documents per medium by largest remainder, then commercial count per
    /// medium by rounding.
    fn allocation(&self) -> Vec<[usize; 2]> {
        let exact: Vec<f64> = self.media.iter().map(|m| m.share * self.n_docs as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
        let mut rest = self.n_docs - counts.iter().sum::<usize>().min(self.n_docs);
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| {
            let fa = exact[a] - exact[a].floor();
            let fb = exact[b] - exact[b].floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for &i in order.iter().cycle() {
            if rest == 0 {
                break;
            }
            counts[i] += 1;
            rest -= 1;
        }
        counts
            .into_iter()
            .map(|c| {
                let commercial = (c as f64 * self.balance).round() as usize;
                [c - commercial, commercial]
            })
            .collect()
    }

    fn sample_tokens(&self, medium: usize, label: Label, rng: &mut ChaCha8Rng) -> Vec<Token> {
        let len = rng.gen_range(self.doc_len_min..=self.doc_len_max);
        let overlap = self.media[medium].jargon_overlap;
        (0..len)
            .map(|_| {
                if rng.gen_bool(self.s) {
                    match label {
                        Label::Commercial => Token::Commercial(rng.gen_range(0..self.commercial_terms)),
                        Label::Editorial => {
                            if overlap > 0.0 && rng.gen_bool(overlap) {
                                Token::Commercial(rng.gen_range(0..self.jargon_terms))
                            } else {
                                Token::Editorial(rng.gen_range(0..self.editorial_terms))
                            }
                        }
                    }
                } else if self.nuisance_rate > 0.0 && rng.gen_bool(self.nuisance_rate) {
                    Token::Nuisance(rng.gen_range(0..self.nuisance_terms))
                } else {
                    Token::Background(rng.gen_range(0..self.background_terms))
                }
            })
            .collect()
    }

    fn render(&self, medium: usize, tokens: &[Token], rng: &mut ChaCha8Rng) -> String {
        let words: Vec<String> = tokens
            .iter()
            .map(|t| match *t {
                Token::Commercial(i) => commercial_term(i),
                Token::Editorial(i) => editorial_term(i),
                Token::Background(i) => background_term(i),
                Token::Nuisance(i) => nuisance_term(medium, i),
            })
            .collect();
        let mut sentences = Vec::new();
        let mut rest = words.as_slice();
        while !rest.is_empty() {
            let take = rng.gen_range(10..=20).min(rest.len());
            sentences.push(rest[..take].join(" "));
            rest = &rest[take..];
        }
        let mut body = sentences.join(". ");
        body.push('.');
        body
    }

    fn log_likelihoods(&self, medium: usize, tokens: &[Token]) -> [f64; 2] {
        let overlap = self.media[medium].jargon_overlap;
        let (mut jargon, mut other_commercial, mut editorial) = (0usize, 0usize, 0usize);
        for t in tokens {
            match *t {
                Token::Commercial(i) if i < self.jargon_terms => jargon += 1,
                Token::Commercial(_) => other_commercial += 1,
                Token::Editorial(_) => editorial += 1,
                _ => {}
            }
        }
        // background and nuisance terms have the same likelihood under both
        // classes and are left out
        let term = |count: usize, p: f64| -> f64 {
            if count == 0 {
                0.0
            } else if p > 0.0 {
                count as f64 * p.ln()
            } else {
                f64::NEG_INFINITY
            }
        };
        let s = self.s;
        let commercial = term(jargon + other_commercial, s / self.commercial_terms as f64)
            + term(editorial, 0.0);
        let jargon_p = if self.jargon_terms > 0 { s * overlap / self.jargon_terms as f64 } else { 0.0 };
        let editorial_ll = term(jargon, jargon_p)
            + term(other_commercial, 0.0)
            + term(editorial, s * (1.0 - overlap) / self.editorial_terms as f64);
        [editorial_ll, commercial]
    }
}

/// Generated corpus with the pools that produced it.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub corpus: Corpus,
    pub truth: GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: SynthSpec,
    pub commercial_pool: Vec<String>,
    pub editorial_pool: Vec<String>,
    pub background_pool: Vec<String>,
    pub jargon_pool: Vec<String>,
    pub nuisance_pools: BTreeMap<String, Vec<String>>,
}

impl GroundTruth {
    fn of(spec: &SynthSpec) -> Self {
        GroundTruth {
            spec: spec.clone(),
            commercial_pool: (0..spec.commercial_terms).map(commercial_term).collect(),
            editorial_pool: (0..spec.editorial_terms).map(editorial_term).collect(),
            background_pool: (0..spec.background_terms).map(background_term).collect(),
            jargon_pool: (0..spec.jargon_terms).map(commercial_term).collect(),
            nuisance_pools: spec
                .media
                .iter()
                .enumerate()
                .map(|(m, ms)| (ms.name.clone(), (0..spec.nuisance_terms).map(|i| nuisance_term(m, i)).collect()))
                .collect(),
        }
    }

    pub fn write_json(&self, writer: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }
}

fn doc_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn generate(spec: &SynthSpec) -> Result<Synthetic> {
    spec.validate()?;
    let mut slots: Vec<(usize, Label)> = Vec::with_capacity(spec.n_docs);
    for (m, [ed, cm]) in spec.allocation().into_iter().enumerate() {
        slots.extend(std::iter::repeat((m, Label::Editorial)).take(ed));
        slots.extend(std::iter::repeat((m, Label::Commercial)).take(cm));
    }
    slots.shuffle(&mut doc_rng(spec.seed, 0));
    let width = spec.n_docs.max(1).to_string().len();
    let docs: Vec<Document> = slots
        .par_iter()
        .enumerate()
        .map(|(i, &(m, label))| {
            let mut rng = doc_rng(spec.seed, i as u64 + 1);
            let tokens = spec.sample_tokens(m, label, &mut rng);
            let mut body = spec.render(m, &tokens, &mut rng);
            let medium = &spec.media[m].name;
            if let Some(l) = &spec.leaker {
                if l.label == label && &l.medium == medium {
                    body.push(' ');
                    body.push_str(&l.token);
                    body.push('.');
                }
            }
            Document {
                id: format!("syn{i:0width$}"),
                medium: medium.clone(),
                label,
                title: format!("document {i}"),
                body,
                date: None,
            }
        })
        .collect();
    Ok(Synthetic {
        corpus: Corpus::new(docs)?,
        truth: GroundTruth::of(spec),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesEstimate {
    pub accuracy: f64,
    pub std_error: f64,
    pub n_mc: usize,
}

/// Accuracy of the exact likelihood-ratio classifier (which knows the medium
/// and the generating distribution) on `n_mc` fresh documents. Exact ties
/// score one half. Leaker tokens are not part of the model.
pub fn bayes_accuracy(spec: &SynthSpec, n_mc: usize, seed: u64) -> Result<BayesEstimate> {
    spec.validate()?;
    if n_mc < 2 {
        return Err(Error::InvalidArgument("n_mc must be at least 2".into()));
    }
    let shares: Vec<f64> = spec.media.iter().map(|m| m.share).collect();
    let log_prior = [(1.0 - spec.balance).ln(), spec.balance.ln()];
    let outcomes: Vec<f64> = (0..n_mc)
        .into_par_iter()
        .map(|i| {
            let mut rng = doc_rng(seed, i as u64);
            let label = if rng.gen_bool(spec.balance) { Label::Commercial } else { Label::Editorial };
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut m = shares.len() - 1;
            for (k, &sh) in shares.iter().enumerate() {
                acc += sh;
                if u < acc {
                    m = k;
                    break;
                }
            }
            let tokens = spec.sample_tokens(m, label, &mut rng);
            let ll = spec.log_likelihoods(m, &tokens);
            let post = [ll[0] + log_prior[0], ll[1] + log_prior[1]];
            if post[0] == post[1] {
                0.5
            } else if (post[1] > post[0]) == (label == Label::Commercial) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let n = n_mc as f64;
    let mean = outcomes.iter().sum::<f64>() / n;
    let var = outcomes.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Ok(BayesEstimate {
        accuracy: mean,
        std_error: (var / n).sqrt(),
        n_mc,
    })
}
