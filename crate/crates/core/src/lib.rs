//! Commercial vs editorial text analysis.
//!
//! The crate covers the full pipeline: corpus ingestion and cleaning,
//! bag-of-words / TF-IDF features, a suite of classical classifiers with a
//! shared decision-score convention (commercial = positive), evaluation
//! protocols, lexicon induction from a linear model, sentence co-occurrence
//! networks, exact t-SNE and a synthetic corpus generator with a
//! Bayes-optimal oracle.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default) and fall back to plain iterators otherwise. Results are
//! identical either way.

pub mod cooc;
pub mod corpus;
pub mod embed;
mod error;
pub mod eval;
pub mod lexicon;
pub mod models;
mod par;
pub mod synth;
pub mod vectorize;

pub use corpus::{Corpus, Document, Label};
pub use error::{Error, Result};
pub use lexicon::Lexicon;
pub use models::{LinearModel, Model};
pub use vectorize::{DocVector, Vocabulary};

/// Derives an independent stage seed from a base seed and a stage name:
/// the first eight bytes (little-endian) of `SHA-256(base.to_le_bytes() || name)`.
pub fn derive_seed(base: u64, name: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(name.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
