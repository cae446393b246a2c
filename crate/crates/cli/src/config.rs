use std::collections::HashSet;
use std::path::{Path, PathBuf};

use advlex::corpus::{filter_leakers, load_corpus, load_term_list};
use advlex::embed::TsneParams;
use advlex::eval::{PipelineConfig, Representation};
use advlex::models::ModelSpec;
use advlex::synth::SynthSpec;
use advlex::vectorize::default_stopwords;
use advlex::Corpus;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoocConfig {
    pub threshold: f64,
    /// `null` uses every lexicon term.
    pub top_terms: Option<usize>,
}

impl Default for CoocConfig {
    fn default() -> Self {
        CoocConfig {
            threshold: advlex::cooc::DEFAULT_THRESHOLD,
            top_terms: Some(advlex::cooc::DEFAULT_TOP_TERMS),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconConfig {
    pub bins: usize,
}

impl Default for LexiconConfig {
    fn default() -> Self {
        LexiconConfig { bins: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub features: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { features: vec![100, 500, 1000, 2000, 3000, 4000, 5000] }
    }
}

/// Settings for every subcommand. Loaded from JSON, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    /// Replaces the built-in Dutch stop-word list.
    pub stopwords: Option<PathBuf>,
    pub leakers: Option<PathBuf>,
    pub representation: Representation,
    pub max_features: usize,
    pub model: ModelSpec,
    pub seed: u64,
    pub out: PathBuf,
    pub folds: usize,
    pub cooc: CoocConfig,
    pub tsne: TsneParams,
    pub lexicon: LexiconConfig,
    pub sweep: SweepConfig,
    pub synth: SynthSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            stopwords: None,
            leakers: None,
            representation: Representation::Tfidf,
            max_features: 5000,
            model: ModelSpec::default(),
            seed: 2,
            out: PathBuf::from("out"),
            folds: 10,
            cooc: CoocConfig::default(),
            tsne: TsneParams::default(),
            lexicon: LexiconConfig::default(),
            sweep: SweepConfig::default(),
            synth: SynthSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn stopword_set(&self) -> Result<HashSet<String>, CliError> {
        match &self.stopwords {
            Some(p) => Ok(load_term_list(p)?),
            None => Ok(default_stopwords()),
        }
    }

    pub fn pipeline(&self) -> Result<PipelineConfig, CliError> {
        if self.max_features == 0 {
            return Err(CliError::Usage("max_features must be at least 1".into()));
        }
        Ok(PipelineConfig {
            representation: self.representation,
            max_features: self.max_features,
            stopwords: self.stopword_set()?,
            model: self.model.clone(),
        })
    }

    /// The corpus with leaker terms removed, if a leaker list is configured.
    pub fn corpus(&self) -> Result<Corpus, CliError> {
        let path = self
            .corpus
            .as_ref()
            .ok_or_else(|| CliError::Usage("no corpus given (use --corpus or the config key \"corpus\")".into()))?;
        let corpus = load_corpus(path)?;
        if corpus.is_empty() {
            return Err(CliError::Data(format!("corpus {} is empty", path.display())));
        }
        Ok(match &self.leakers {
            Some(p) => filter_leakers(&corpus, &load_term_list(p)?),
            None => corpus,
        })
    }
}
