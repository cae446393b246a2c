#![allow(dead_code)]

use advlex::eval::{featurize, Representation};
use advlex::vectorize::{tokenize_corpus, Vocabulary};
use advlex::{Corpus, DocVector};

/// Mean silhouette of 2-D points under the given cluster assignment.
pub fn silhouette(y: &[[f64; 2]], cluster: &[usize]) -> f64 {
    let n = y.len();
    let k = cluster.iter().max().map_or(0, |m| m + 1);
    let dist = |i: usize, j: usize| ((y[i][0] - y[j][0]).powi(2) + (y[i][1] - y[j][1]).powi(2)).sqrt();
    let mut total = 0.0;
    for i in 0..n {
        let mut sum = vec![0.0; k];
        let mut count = vec![0usize; k];
        for j in 0..n {
            if j != i {
                sum[cluster[j]] += dist(i, j);
                count[cluster[j]] += 1;
            }
        }
        if count[cluster[i]] == 0 {
            continue;
        }
        let a = sum[cluster[i]] / count[cluster[i]] as f64;
        let b = (0..k)
            .filter(|&c| c != cluster[i] && count[c] > 0)
            .map(|c| sum[c] / count[c] as f64)
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / n as f64
}

/// Twice the Mann-Whitney U by explicit pair counting: 2 per won pair, 1 per tie.
pub fn pair_count_u2(scores: &[f64], positive: &[bool]) -> u128 {
    let mut u2 = 0;
    for (i, &si) in scores.iter().enumerate() {
        if !positive[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if positive[j] {
                continue;
            }
            if si > sj {
                u2 += 2;
            } else if si == sj {
                u2 += 1;
            }
        }
    }
    u2
}

/// Vocabulary and TF-IDF vectors of a whole corpus, no stop words.
pub fn tfidf_corpus(corpus: &Corpus, max_features: usize) -> (Vocabulary, Vec<DocVector>) {
    let tokens = tokenize_corpus(corpus, &Default::default());
    let refs: Vec<&[String]> = tokens.iter().map(|t| t.as_slice()).collect();
    let vocab = Vocabulary::fit(&refs, max_features).unwrap();
    let x = featurize(&refs, &vocab, Representation::Tfidf);
    (vocab, x)
}

/// Tokens of a body by the documented split rule, written independently.
pub fn split_tokens(body: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in body.chars() {
        if ch.is_alphanumeric() {
            cur.push(ch);
        } else {
            if cur.chars().count() >= 2 {
                out.push(cur.clone());
            }
            cur.clear();
        }
    }
    if cur.chars().count() >= 2 {
        out.push(cur);
    }
    out
}
