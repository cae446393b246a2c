mod config;
mod error;

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use advlex::cooc::{build_cooc, top_terms};
use advlex::corpus::{audit_leaker_candidates, write_corpus};
use advlex::embed::{densify, tsne_with_progress, Embedding};
use advlex::eval::{
    cross_domain_evaluate, cross_validate_suite, feature_sweep, write_sweep_csv, FittedPipeline,
    PipelineConfig, Representation,
};
use advlex::lexicon::{
    derive_lexicon, score_count, score_count_text, score_distribution, score_text, score_weighted,
};
use advlex::models::ModelSpec;
use advlex::synth::{bayes_accuracy, generate};
use advlex::vectorize::tokenize_corpus;
use advlex::{Corpus, Label, Lexicon};
use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "advlex", version, about = "Separate advertorials from editorial text")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Labelled corpus, one JSON document per line.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Vocabulary cap.
    #[arg(long, global = true)]
    features: Option<usize>,
    /// linear_svm, sgd, naive_bayes, knn, decision_tree or random_forest.
    #[arg(long, global = true)]
    model: Option<String>,
    /// tfidf or bow.
    #[arg(long, global = true)]
    representation: Option<String>,
    /// Stop-word list, one term per line.
    #[arg(long, global = true)]
    stopwords: Option<PathBuf>,
    /// Terms to strip from every document before anything else.
    #[arg(long, global = true)]
    leakers: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stratified k-fold cross-validation.
    Cv {
        #[arg(long)]
        folds: Option<usize>,
        /// Every model under both representations.
        #[arg(long)]
        all_models: bool,
    },
    /// Train on all media but one, test on the held-out medium.
    Crossdomain {
        #[arg(long)]
        all_models: bool,
    },
    /// Cross-validated accuracy against vocabulary size.
    Sweep {
        /// Comma-separated ascending vocabulary caps.
        #[arg(long, value_delimiter = ',')]
        steps: Option<Vec<usize>>,
        #[arg(long)]
        folds: Option<usize>,
    },
    #[command(subcommand)]
    Lexicon(LexiconCommand),
    /// Sentence co-occurrence network over lexicon terms.
    Cooc {
        /// Lexicon CSV; derived from the corpus when absent.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        /// Keep the n terms with largest |weight|; 0 keeps all.
        #[arg(long)]
        top_terms: Option<usize>,
    },
    /// Two-dimensional t-SNE map of the documents.
    Tsne {
        #[arg(long)]
        perplexity: Option<f64>,
        #[arg(long)]
        iters: Option<usize>,
    },
    /// Generate a synthetic corpus with known signal.
    Synth {
        #[arg(long)]
        n_docs: Option<usize>,
        /// Signal strength.
        #[arg(long)]
        s: Option<f64>,
        /// Also estimate Bayes accuracy from this many Monte Carlo draws.
        #[arg(long)]
        bayes: Option<usize>,
    },
    /// Rank terms concentrated in one class and one medium.
    AuditLeakers {
        /// Number of candidates written; 0 writes all.
        #[arg(long, default_value_t = 50)]
        top: usize,
    },
    /// Print the effective configuration as JSON.
    Config,
}

#[derive(Debug, Subcommand)]
enum LexiconCommand {
    /// Train a linear model on the whole corpus and export its weights.
    Derive {
        /// Creation stamp for the metadata; defaults to today's UTC date.
        #[arg(long)]
        created: Option<String>,
    },
    /// Score text or a corpus with a lexicon.
    Score {
        #[arg(long)]
        lexicon: PathBuf,
        /// Score this string instead of a corpus.
        #[arg(long)]
        text: Option<String>,
    },
    /// Histogram of lexicon scores per class.
    Hist {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        bins: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("advlex: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn resolve(global: &GlobalArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &global.corpus {
        cfg.corpus = Some(v.clone());
    }
    if let Some(v) = &global.out {
        cfg.out = v.clone();
    }
    if let Some(v) = global.seed {
        cfg.seed = v;
    }
    if let Some(v) = global.features {
        cfg.max_features = v;
    }
    if let Some(v) = &global.model {
        cfg.model = ModelSpec::from_kind(v)?;
    }
    if let Some(v) = &global.representation {
        cfg.representation = v.parse()?;
    }
    if let Some(v) = &global.stopwords {
        cfg.stopwords = Some(v.clone());
    }
    if let Some(v) = &global.leakers {
        cfg.leakers = Some(v.clone());
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = resolve(&cli.global)?;
    match cli.command {
        Command::Cv { folds, all_models } => {
            if let Some(k) = folds {
                cfg.folds = k;
            }
            cmd_cv(&cfg, all_models)
        }
        Command::Crossdomain { all_models } => cmd_crossdomain(&cfg, all_models),
        Command::Sweep { steps, folds } => {
            if let Some(s) = steps {
                cfg.sweep.features = s;
            }
            if let Some(k) = folds {
                cfg.folds = k;
            }
            cmd_sweep(&cfg)
        }
        Command::Lexicon(LexiconCommand::Derive { created }) => cmd_derive(&cfg, created),
        Command::Lexicon(LexiconCommand::Score { lexicon, text }) => {
            cmd_score(&cfg, &lexicon, text.as_deref())
        }
        Command::Lexicon(LexiconCommand::Hist { lexicon, bins }) => {
            if let Some(b) = bins {
                cfg.lexicon.bins = b;
            }
            cmd_hist(&cfg, &lexicon)
        }
        Command::Cooc { lexicon, threshold, top_terms } => {
            if let Some(t) = threshold {
                cfg.cooc.threshold = t;
            }
            if let Some(n) = top_terms {
                cfg.cooc.top_terms = (n > 0).then_some(n);
            }
            cmd_cooc(&cfg, lexicon.as_deref())
        }
        Command::Tsne { perplexity, iters } => {
            if let Some(p) = perplexity {
                cfg.tsne.perplexity = p;
            }
            if let Some(n) = iters {
                cfg.tsne.iterations = n;
            }
            cmd_tsne(&cfg)
        }
        Command::Synth { n_docs, s, bayes } => {
            if let Some(n) = n_docs {
                cfg.synth.n_docs = n;
            }
            if let Some(s) = s {
                cfg.synth.s = s;
            }
            if let Some(seed) = cli.global.seed {
                cfg.synth.seed = seed;
            }
            cmd_synth(&cfg, bayes)
        }
        Command::AuditLeakers { top } => cmd_audit(&cfg, top),
        Command::Config => {
            println!("{}", serde_json::to_string_pretty(&cfg)?);
            Ok(())
        }
    }
}

/// Writes `name` under the output directory through a temporary file, so a
/// failed run never leaves a truncated artifact behind.
fn write_output(
    cfg: &RunConfig,
    name: &str,
    body: impl FnOnce(&mut dyn Write) -> Result<(), CliError>,
) -> Result<PathBuf, CliError> {
    let dir = &cfg.out;
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    let target = dir.join(name);
    let tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::Data(format!("cannot write in {}: {e}", dir.display())))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(&target)
        .map_err(|e| CliError::Data(format!("cannot write {}: {}", target.display(), e.error)))?;
    eprintln!("wrote {}", target.display());
    Ok(target)
}

fn all_configs(cfg: &RunConfig, representations: &[Representation]) -> Result<Vec<PipelineConfig>, CliError> {
    let base = cfg.pipeline()?;
    let mut out = Vec::new();
    for &representation in representations {
        for model in ModelSpec::all_defaults() {
            out.push(PipelineConfig { representation, model, ..base.clone() });
        }
    }
    Ok(out)
}

fn cmd_cv(cfg: &RunConfig, all_models: bool) -> Result<(), CliError> {
    let corpus = cfg.corpus()?;
    let configs = if all_models {
        all_configs(cfg, &[Representation::Bow, Representation::Tfidf])?
    } else {
        vec![cfg.pipeline()?]
    };
    let report = cross_validate_suite(&corpus, &configs, cfg.folds, cfg.seed)?;
    write_output(cfg, "cv_report.csv", |w| Ok(report.write_csv(w)?))?;
    print!("{}", report.to_table());
    Ok(())
}

fn cmd_crossdomain(cfg: &RunConfig, all_models: bool) -> Result<(), CliError> {
    let corpus = cfg.corpus()?;
    let configs = if all_models {
        all_configs(cfg, &[cfg.representation])?
    } else {
        vec![cfg.pipeline()?]
    };
    let table = cross_domain_evaluate(&corpus, &configs, cfg.seed)?;
    write_output(cfg, "crossdomain.csv", |w| Ok(table.write_csv(w)?))?;
    print!("{}", table.to_table());
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let corpus = cfg.corpus()?;
    let points = feature_sweep(&corpus, &cfg.pipeline()?, &cfg.sweep.features, cfg.folds, cfg.seed)?;
    write_output(cfg, "sweep.csv", |w| Ok(write_sweep_csv(&points, w)?))?;
    for p in &points {
        println!("{:>6}  {:.4}", p.max_features, p.accuracy.mean);
    }
    Ok(())
}

fn fit_full(cfg: &RunConfig, corpus: &Corpus) -> Result<FittedPipeline, CliError> {
    let pipeline = cfg.pipeline()?;
    let tokens = tokenize_corpus(corpus, &pipeline.stopwords);
    let refs: Vec<&[String]> = tokens.iter().map(|t| t.as_slice()).collect();
    Ok(FittedPipeline::fit(&refs, &corpus.labels(), &pipeline, cfg.seed)?)
}

fn derive(cfg: &RunConfig, corpus: &Corpus, created: Option<String>) -> Result<(FittedPipeline, Lexicon), CliError> {
    if cfg.model.kind() != "linear_svm" && cfg.model.kind() != "sgd" {
        return Err(advlex::Error::NotLinear.into());
    }
    let fitted = fit_full(cfg, corpus)?;
    let lexicon = derive_lexicon(&fitted.model, &fitted.vocab, created)?;
    Ok((fitted, lexicon))
}

fn cmd_derive(cfg: &RunConfig, created: Option<String>) -> Result<(), CliError> {
    let corpus = cfg.corpus()?;
    let created = created.unwrap_or_else(|| chrono::Utc::now().format("%Y-%m-%d").to_string());
    let (fitted, lexicon) = derive(cfg, &corpus, Some(created))?;
    write_output(cfg, "lexicon.csv", |w| Ok(lexicon.write_csv(w)?))?;
    write_output(cfg, "lexicon.meta.json", |w| Ok(lexicon.write_metadata(w)?))?;
    let model = fitted.model.to_json(&fitted.vocab.hash());
    write_output(cfg, "model.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &model)?;
        Ok(writeln!(w)?)
    })?;
    println!("{} terms", lexicon.len());
    Ok(())
}

fn read_lexicon(path: &Path) -> Result<Lexicon, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(Lexicon::read_csv(std::io::BufReader::new(file))?)
}

fn cmd_score(cfg: &RunConfig, lexicon: &Path, text: Option<&str>) -> Result<(), CliError> {
    let lexicon = read_lexicon(lexicon)?;
    if let Some(text) = text {
        let weighted = score_text(text, &lexicon) + 0.0;
        let count = score_count_text(text, &lexicon);
        println!(
            "weighted {weighted:.6} {} | count +{} -{} {}",
            Label::from_score(weighted).as_str(),
            count.positive,
            count.negative,
            count.verdict.as_str()
        );
        return Ok(());
    }
    let corpus = cfg.corpus()?;
    write_output(cfg, "scores.csv", |w| {
        writeln!(w, "id,label,medium,weighted,weighted_verdict,positive,negative,count_verdict")?;
        for d in corpus.documents() {
            let weighted = score_weighted(d, &lexicon);
            let count = score_count(d, &lexicon);
            writeln!(
                w,
                "{},{},{},{:.17e},{},{},{},{}",
                csv_field(&d.id),
                d.label.as_str(),
                csv_field(&d.medium),
                weighted,
                Label::from_score(weighted).as_str(),
                count.positive,
                count.negative,
                count.verdict.as_str()
            )?;
        }
        Ok(())
    })?;
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cmd_hist(cfg: &RunConfig, lexicon: &Path) -> Result<(), CliError> {
    let lexicon = read_lexicon(lexicon)?;
    let corpus = cfg.corpus()?;
    let hist = score_distribution(&corpus, &lexicon, cfg.lexicon.bins)?;
    write_output(cfg, "histogram.csv", |w| Ok(hist.write_csv(w)?))?;
    for label in Label::ALL {
        match hist.mode(label) {
            Some(m) => println!("{} mode {m:.4}", label.as_str()),
            None => println!("{} mode n/a", label.as_str()),
        }
    }
    Ok(())
}

fn cmd_cooc(cfg: &RunConfig, lexicon: Option<&Path>) -> Result<(), CliError> {
    let corpus = cfg.corpus()?;
    let lexicon = match lexicon {
        Some(p) => read_lexicon(p)?,
        None => derive(cfg, &corpus, None)?.1,
    };
    let terms = match cfg.cooc.top_terms {
        Some(n) => top_terms(&lexicon, n),
        None => lexicon.entries().to_vec(),
    };
    let bodies: Vec<&str> = corpus.documents().iter().map(|d| d.body.as_str()).collect();
    let graph = build_cooc(&bodies, &terms, cfg.cooc.threshold)?;
    let export = graph.export();
    write_output(cfg, "cooc.json", |w| Ok(export.write_json(w)?))?;
    write_output(cfg, "cooc.dot", |w| Ok(w.write_all(export.to_dot().as_bytes())?))?;
    println!("{} nodes, {} edges", export.nodes.len(), export.edges.len());
    Ok(())
}

fn cmd_tsne(cfg: &RunConfig) -> Result<(), CliError> {
    let corpus = cfg.corpus()?;
    let pipeline = cfg.pipeline()?;
    let tokens = tokenize_corpus(&corpus, &pipeline.stopwords);
    let refs: Vec<&[String]> = tokens.iter().map(|t| t.as_slice()).collect();
    let vocab = advlex::Vocabulary::fit(&refs, pipeline.max_features)?;
    let x = advlex::eval::featurize(&refs, &vocab, pipeline.representation);
    let points = densify(&x, vocab.len());
    eprintln!("iter,kl");
    let result = tsne_with_progress(&points, &cfg.tsne, cfg.seed, |it, kl| {
        eprintln!("{it},{kl:.6}");
    })?;
    let embedding = Embedding::new(corpus.documents(), result)?;
    write_output(cfg, "tsne.csv", |w| Ok(embedding.write_scatter(w)?))?;
    println!("kl {:.6}", embedding.kl);
    Ok(())
}

fn cmd_synth(cfg: &RunConfig, bayes: Option<usize>) -> Result<(), CliError> {
    let synthetic = generate(&cfg.synth)?;
    write_output(cfg, "corpus.jsonl", |w| Ok(write_corpus(&synthetic.corpus, w)?))?;
    write_output(cfg, "ground_truth.json", |w| Ok(synthetic.truth.write_json(w)?))?;
    println!("{} documents", synthetic.corpus.len());
    if let Some(n) = bayes {
        let est = bayes_accuracy(&cfg.synth, n, cfg.synth.seed)?;
        println!("bayes accuracy {:.4} ± {:.4}", est.accuracy, est.std_error);
    }
    Ok(())
}

fn cmd_audit(cfg: &RunConfig, top: usize) -> Result<(), CliError> {
    let corpus = cfg.corpus()?;
    let fitted = fit_full(cfg, &corpus)?;
    let linear = fitted.model.as_linear().ok_or(advlex::Error::NotLinear)?;
    let mut ranked = audit_leaker_candidates(linear, &corpus, &fitted.vocab)?;
    if top > 0 {
        ranked.truncate(top);
    }
    write_output(cfg, "leaker_candidates.csv", |w| {
        writeln!(w, "term,weight,class_exclusivity,medium_exclusivity,score")?;
        for c in &ranked {
            writeln!(
                w,
                "{},{:.17e},{:.6},{:.6},{:.17e}",
                csv_field(&c.term),
                c.weight,
                c.class_exclusivity,
                c.medium_exclusivity,
                c.score
            )?;
        }
        Ok(())
    })?;
    for c in ranked.iter().take(10) {
        println!("{:<24} {:+.4} {:.3}", c.term, c.weight, c.score);
    }
    Ok(())
}
