//! Document collection: loading, cleaning, leaker removal and splits.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::LinearModel;
use crate::vectorize::{tokenize, Vocabulary};

/// Class of a document. Commercial is the positive class project-wide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Editorial,
    Commercial,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Editorial, Label::Commercial];

    /// +1 for commercial, -1 for editorial.
    pub fn sign(self) -> f64 {
        match self {
            Label::Commercial => 1.0,
            Label::Editorial => -1.0,
        }
    }

    /// Thresholding rule shared by every model: strictly positive scores are
    /// commercial, everything else (including 0 and NaN) is editorial.
    pub fn from_score(score: f64) -> Label {
        if score > 0.0 {
            Label::Commercial
        } else {
            Label::Editorial
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Commercial => Label::Editorial,
            Label::Editorial => Label::Commercial,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Editorial => "editorial",
            Label::Commercial => "commercial",
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Label::Editorial => 0,
            Label::Commercial => 1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "editorial" => Ok(Label::Editorial),
            "commercial" => Ok(Label::Commercial),
            other => Err(Error::InvalidArgument(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub medium: String,
    pub label: Label,
    /// Kept for reference, never used as a feature source.
    pub title: String,
    pub body: String,
    pub date: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
    media: BTreeSet<String>,
}

impl Corpus {
    /// Builds a corpus, checking id uniqueness and non-empty media.
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(documents.len());
        let mut media = BTreeSet::new();
        for doc in &documents {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
            if doc.medium.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "document {:?} has an empty medium",
                    doc.id
                )));
            }
            media.insert(doc.medium.clone());
        }
        Ok(Corpus { documents, media })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn media(&self) -> &BTreeSet<String> {
        &self.media
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.documents.iter().map(|d| d.label).collect()
    }

    pub fn into_documents(self) -> Vec<Document> {
        self.documents
    }

    /// Sub-corpus of the given positions, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        let docs: Vec<Document> = indices.iter().map(|&i| self.documents[i].clone()).collect();
        let media = docs.iter().map(|d| d.medium.clone()).collect();
        Corpus {
            documents: docs,
            media,
        }
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for d in &self.documents {
            counts[d.label.index()] += 1;
        }
        counts
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    medium: String,
    label: String,
    #[serde(default)]
    title: String,
    body: String,
    #[serde(default)]
    date: Option<String>,
}

/// Reads a JSONL corpus. Bodies are passed through [`clean_text`].
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file))
}

pub fn read_corpus(reader: impl BufRead) -> Result<Corpus> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        let label = raw
            .label
            .parse::<Label>()
            .map_err(|_| Error::UnknownLabel { line: line_no })?;
        docs.push(Document {
            id: raw.id,
            medium: raw.medium,
            label,
            title: raw.title,
            body: clean_text(&raw.body),
            date: raw.date,
        });
    }
    Corpus::new(docs)
}

pub fn write_corpus(corpus: &Corpus, mut writer: impl Write) -> Result<()> {
    for doc in corpus.documents() {
        let line = serde_json::to_string(doc)?;
        writeln!(writer, "{line}").map_err(|e| Error::io("<corpus output>", e))?;
    }
    Ok(())
}

const DROPPED_ELEMENTS: [&str; 2] = ["script", "style"];
const BLOCK_ELEMENTS: [&str; 22] = [
    "p", "br", "div", "li", "ul", "ol", "h1", "h2", "h3", "h4", "h5", "h6", "tr", "td", "th",
    "table", "blockquote", "section", "article", "header", "footer", "hr",
];

/// Normalizes raw text: HTML to flat text, commas removed, lowercased,
/// whitespace collapsed. Whitespace runs containing a line break collapse to
/// a single `\n` (sentence boundary for co-occurrence), other runs to a single
/// space. The function is idempotent.
pub fn clean_text(raw: &str) -> String {
    // Removing commas, tags or entities (or lowercasing U+212A) can expose new
    // tags or entities ("<<i>b>"), so iterate to a fixed point.
    let mut text = raw.to_string();
    loop {
        let next = decode_entities(&strip_tags(&text.replace(',', "").to_lowercase()));
        if next == text {
            break;
        }
        text = next;
    }
    collapse_whitespace(&text)
}

fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending: Option<char> = None;
    for ch in text.chars() {
        if ch.is_whitespace() {
            let is_break = ch == '\n' || ch == '\r';
            pending = match pending {
                Some('\n') => Some('\n'),
                _ if is_break => Some('\n'),
                _ => Some(' '),
            };
        } else {
            if let Some(sep) = pending.take() {
                if !out.is_empty() {
                    out.push(sep);
                }
            }
            out.push(ch);
        }
    }
    out
}

fn tag_name(tag: &str) -> String {
    tag.trim_start_matches('/')
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase()
}

/// Removes one layer of markup. A `<` only opens a tag when followed by an
/// ASCII letter, `/` or `!` and closed by a later `>`; otherwise it is text.
fn strip_tags(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find('<') {
        out.push_str(&rest[..pos]);
        let after = &rest[pos + 1..];
        let opens = after
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '/' || c == '!');
        let close = after.find('>');
        match (opens, close) {
            (true, Some(end)) => {
                let tag = &after[..end];
                rest = &after[end + 1..];
                if let Some(comment) = tag.strip_prefix("!--") {
                    // A comment may contain '>' before its terminator.
                    if !comment.ends_with("--") {
                        match rest.find("-->") {
                            Some(stop) => rest = &rest[stop + 3..],
                            None => rest = "",
                        }
                    }
                    continue;
                }
                let name = tag_name(tag);
                if !tag.starts_with('/') && DROPPED_ELEMENTS.contains(&name.as_str()) {
                    let closing = format!("</{name}");
                    let lower = rest.to_ascii_lowercase();
                    match lower.find(&closing) {
                        Some(stop) => {
                            let tail = &rest[stop..];
                            rest = match tail.find('>') {
                                Some(gt) => &tail[gt + 1..],
                                None => "",
                            };
                        }
                        None => rest = "",
                    }
                } else if BLOCK_ELEMENTS.contains(&name.as_str()) {
                    out.push('\n');
                }
            }
            _ => {
                out.push('<');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

fn decode_entities(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        let after = &rest[pos + 1..];
        let decoded = after.find(';').filter(|&end| end <= 10).and_then(|end| {
            let name = &after[..end];
            let ch = match name {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some(' '),
                _ => {
                    let code = if let Some(hex) =
                        name.strip_prefix("#x").or_else(|| name.strip_prefix("#X"))
                    {
                        u32::from_str_radix(hex, 16).ok()
                    } else {
                        name.strip_prefix('#').and_then(|d| d.parse::<u32>().ok())
                    };
                    code.and_then(char::from_u32)
                }
            };
            ch.map(|c| (c, end))
        });
        match decoded {
            Some((c, end)) => {
                out.push(c);
                rest = &after[end + 1..];
            }
            None => {
                out.push('&');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Deletes every whole-token occurrence of the given terms from `body`.
/// Tokens are maximal alphanumeric runs, the same units [`tokenize`] uses.
pub fn remove_tokens(body: &str, leakers: &HashSet<String>) -> String {
    if leakers.is_empty() {
        return body.to_string();
    }
    let mut out = String::with_capacity(body.len());
    let mut token = String::new();
    for ch in body.chars() {
        if ch.is_alphanumeric() {
            token.push(ch);
        } else {
            if !leakers.contains(&token) {
                out.push_str(&token);
            }
            token.clear();
            out.push(ch);
        }
    }
    if !leakers.contains(&token) {
        out.push_str(&token);
    }
    collapse_whitespace(&out)
}

pub fn filter_leakers(corpus: &Corpus, leakers: &HashSet<String>) -> Corpus {
    if leakers.is_empty() {
        return corpus.clone();
    }
    let documents = corpus
        .documents
        .iter()
        .map(|d| Document {
            body: remove_tokens(&d.body, leakers),
            ..d.clone()
        })
        .collect();
    Corpus {
        documents,
        media: corpus.media.clone(),
    }
}

/// Reads a one-term-per-line list, ignoring blank lines and `#` comments.
pub fn parse_term_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

pub fn load_term_list(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_term_list(&text))
}

/// Stratified k-fold assignment over a label sequence. Returns the test
/// positions of each fold, ascending.
///
/// Each class is shuffled with a seeded PRNG and dealt round-robin, with the
/// dealing offset carried over between classes so fold sizes stay balanced.
/// Per-fold class counts are `floor` or `ceil` of `class_count / k`.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut offset = 0;
    for class in Label::ALL {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if members.len() < k {
            return Err(Error::InvalidArgument(format!(
                "k = {k} exceeds the {} {class} documents",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for (j, idx) in members.into_iter().enumerate() {
            folds[(offset + j) % k].push(idx);
        }
        offset = (offset + labels.iter().filter(|&&l| l == class).count()) % k;
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

/// One train/test split of document ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldIds {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

pub fn split_stratified_kfold(corpus: &Corpus, k: usize, seed: u64) -> Result<Vec<FoldIds>> {
    let folds = stratified_folds(&corpus.labels(), k, seed)?;
    let ids: Vec<&str> = corpus.documents.iter().map(|d| d.id.as_str()).collect();
    Ok(folds
        .iter()
        .map(|test| {
            let (train, test) = complement(ids.len(), test);
            FoldIds {
                train: train.iter().map(|&i| ids[i].to_string()).collect(),
                test: test.iter().map(|&i| ids[i].to_string()).collect(),
            }
        })
        .collect())
}

/// Splits `0..n` into (positions not in `test`, `test`), both ascending.
pub(crate) fn complement(n: usize, test: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut in_test = vec![false; n];
    for &i in test {
        in_test[i] = true;
    }
    let train = (0..n).filter(|&i| !in_test[i]).collect();
    let mut test = test.to_vec();
    test.sort_unstable();
    (train, test)
}

/// Holds out one medium: returns (all other media, that medium).
pub fn split_leave_one_medium_out(corpus: &Corpus, medium: &str) -> Result<(Corpus, Corpus)> {
    if !corpus.media.contains(medium) {
        return Err(Error::UnknownMedium(medium.to_string()));
    }
    let (test, train): (Vec<usize>, Vec<usize>) =
        (0..corpus.len()).partition(|&i| corpus.documents[i].medium == medium);
    if train.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "holding out {medium:?} leaves an empty training set"
        )));
    }
    Ok((corpus.subset(&train), corpus.subset(&test)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakerCandidate {
    pub term: String,
    pub weight: f64,
    pub class_exclusivity: f64,
    pub medium_exclusivity: f64,
    /// `|weight| * class_exclusivity * medium_exclusivity`.
    pub score: f64,
}

/// Ranks vocabulary terms that look like dataset artifacts: heavily weighted
/// and concentrated in one class and one medium. Advisory output only.
pub fn audit_leaker_candidates(
    model: &LinearModel,
    corpus: &Corpus,
    vocab: &Vocabulary,
) -> Result<Vec<LeakerCandidate>> {
    if model.weights.len() != vocab.len() {
        return Err(Error::DimensionMismatch {
            expected: vocab.len(),
            got: model.weights.len(),
        });
    }
    let media: Vec<&String> = corpus.media.iter().collect();
    let medium_pos: HashMap<&str, usize> =
        media.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect();
    let empty = HashSet::new();
    let mut class_df = vec![[0usize; 2]; vocab.len()];
    let mut medium_df = vec![vec![0usize; media.len()]; vocab.len()];
    for doc in corpus.documents() {
        let mut present = BTreeSet::new();
        for tok in tokenize(&doc.body, &empty) {
            if let Some(i) = vocab.index_of(&tok) {
                present.insert(i);
            }
        }
        let m = medium_pos[doc.medium.as_str()];
        for i in present {
            class_df[i][doc.label.index()] += 1;
            medium_df[i][m] += 1;
        }
    }
    let mut out: Vec<LeakerCandidate> = vocab
        .terms()
        .iter()
        .enumerate()
        .map(|(i, term)| {
            let total: usize = class_df[i].iter().sum();
            let (class_ex, medium_ex) = if total == 0 {
                (0.0, 0.0)
            } else {
                let c = *class_df[i].iter().max().unwrap() as f64 / total as f64;
                let m = *medium_df[i].iter().max().unwrap() as f64 / total as f64;
                (c, m)
            };
            let weight = model.weights[i];
            LeakerCandidate {
                term: term.clone(),
                weight,
                class_exclusivity: class_ex,
                medium_exclusivity: medium_ex,
                score: weight.abs() * class_ex * medium_ex,
            }
        })
        .collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.term.cmp(&b.term)));
    Ok(out)
}

/// Document counts per (medium, label), for summaries.
pub fn medium_label_counts(corpus: &Corpus) -> BTreeMap<String, [usize; 2]> {
    let mut out: BTreeMap<String, [usize; 2]> = BTreeMap::new();
    for d in corpus.documents() {
        out.entry(d.medium.clone()).or_default()[d.label.index()] += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn doc(id: &str, medium: &str, label: Label, body: &str) -> Document {
        Document {
            id: id.into(),
            medium: medium.into(),
            label,
            title: String::new(),
            body: body.into(),
            date: None,
        }
    }

    fn set(terms: &[&str]) -> HashSet<String> {
        terms.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn load_three_lines() {
        let text = r#"{"id":"1","medium":"nu","label":"editorial","title":"t","body":"A, b","date":null}
{"id":"2","medium":"nrc","label":"commercial","title":"t","body":"c","date":"2021-01-01"}
{"id":"3","medium":"nu","label":"editorial","title":"t","body":"d"}
"#;
        let c = read_corpus(text.as_bytes()).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.labels(), vec![Label::Editorial, Label::Commercial, Label::Editorial]);
        assert_eq!(c.media().iter().collect::<Vec<_>>(), vec!["nrc", "nu"]);
        assert_eq!(c.documents()[0].body, "a b");
        assert_eq!(c.documents()[1].date.as_deref(), Some("2021-01-01"));
    }

    #[test]
    fn load_empty() {
        assert!(read_corpus("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn unknown_label_names_line() {
        let text = r#"{"id":"1","medium":"nu","label":"editorial","title":"","body":"x"}
{"id":"2","medium":"nu","label":"advert","title":"","body":"x"}"#;
        let err = read_corpus(text.as_bytes()).unwrap_err();
        assert_eq!(err.to_string(), "unknown label at line 2");
    }

    #[test]
    fn malformed_and_duplicate() {
        let err = read_corpus("{\"id\":1".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 1, .. }));
        let text = r#"{"id":"1","medium":"nu","label":"editorial","title":"","body":"x"}
{"id":"1","medium":"nu","label":"editorial","title":"","body":"y"}"#;
        assert!(matches!(read_corpus(text.as_bytes()), Err(Error::DuplicateId(_))));
    }

    #[test]
    fn clean_examples() {
        assert_eq!(clean_text("Hello, <b>World</b>"), "hello world");
        assert_eq!(clean_text(""), "");
        assert_eq!(clean_text("a, b,, c"), "a b c");
        assert_eq!(clean_text("A,B,,C"), "abc");
    }

    #[test]
    fn clean_html() {
        assert_eq!(
            clean_text("<p>One</p><script>var x = 1;</script><p>Two &amp; three</p>"),
            "one\ntwo & three"
        );
        assert_eq!(clean_text("a < b and c > d"), "a < b and c > d");
        assert_eq!(clean_text("x <!-- hidden > still --> y"), "x y");
        assert_eq!(clean_text("&lt;b&gt;bold&lt;/b&gt;"), "bold");
        assert_eq!(clean_text("1&#44;5"), "15");
        assert_eq!(clean_text("  lots \t of\r\n\n space  "), "lots of\nspace");
    }

    #[test]
    fn leaker_examples() {
        let c = Corpus::new(vec![doc("1", "nu", Label::Commercial, "gesponsord door acme")]).unwrap();
        let f = filter_leakers(&c, &set(&["gesponsord", "acme"]));
        assert_eq!(f.documents()[0].body, "door");
        assert_eq!(remove_tokens("ad adder", &set(&["ad"])), "adder");
        let same = filter_leakers(&c, &HashSet::new());
        assert_eq!(same, c);
    }

    #[test]
    fn kfold_small_and_errors() {
        let labels = [Label::Editorial, Label::Commercial, Label::Editorial, Label::Commercial];
        let folds = stratified_folds(&labels, 2, 7).unwrap();
        for f in &folds {
            assert_eq!(f.len(), 2);
            let c = f.iter().filter(|&&i| labels[i] == Label::Commercial).count();
            assert_eq!(c, 1);
        }
        assert!(stratified_folds(&labels, 3, 7).is_err());
        assert!(stratified_folds(&labels, 1, 7).is_err());
        assert_eq!(folds, stratified_folds(&labels, 2, 7).unwrap());
    }

    #[test]
    fn kfold_paper_scale() {
        let labels: Vec<Label> = (0..2000)
            .map(|i| if i % 2 == 0 { Label::Commercial } else { Label::Editorial })
            .collect();
        let folds = stratified_folds(&labels, 10, 1).unwrap();
        assert_eq!(folds.len(), 10);
        for f in &folds {
            assert_eq!(f.len(), 200);
            let c = f.iter().filter(|&&i| labels[i] == Label::Commercial).count();
            assert!((99..=101).contains(&c));
        }
    }

    #[test]
    fn lomo() {
        let mut docs = Vec::new();
        for (m, medium) in ["nu", "nrc", "telegraaf", "ondernemer"].iter().enumerate() {
            for j in 0..5 {
                let label = if j % 2 == 0 { Label::Commercial } else { Label::Editorial };
                docs.push(doc(&format!("{m}-{j}"), medium, label, "x"));
            }
        }
        let c = Corpus::new(docs).unwrap();
        let (train, test) = split_leave_one_medium_out(&c, "nrc").unwrap();
        assert_eq!((train.len(), test.len()), (15, 5));
        assert!(test.documents().iter().all(|d| d.medium == "nrc"));
        assert!(matches!(
            split_leave_one_medium_out(&c, "volkskrant"),
            Err(Error::UnknownMedium(_))
        ));
        let total: usize = c
            .media()
            .iter()
            .map(|m| split_leave_one_medium_out(&c, m).unwrap().1.len())
            .sum();
        assert_eq!(total, c.len());

        let single = Corpus::new(vec![doc("a", "nu", Label::Commercial, "x")]).unwrap();
        assert!(split_leave_one_medium_out(&single, "nu").is_err());
    }

    #[test]
    fn term_list_parsing() {
        let s = parse_term_list("# header\nde\n  het  # article\n\nEen\n");
        assert_eq!(s, set(&["de", "het", "een"]));
    }

    fn html_ish() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof![
                Just("<".to_string()),
                Just(">".to_string()),
                Just(",".to_string()),
                Just("&".to_string()),
                Just(";".to_string()),
                Just("amp".to_string()),
                Just("lt".to_string()),
                Just("#44".to_string()),
                Just("/".to_string()),
                Just("!--".to_string()),
                Just("script".to_string()),
                Just("b".to_string()),
                Just("p".to_string()),
                Just(" ".to_string()),
                Just("\n".to_string()),
                "[A-Za-zÀ-ÿ0-9 .]{0,4}",
            ],
            0..24,
        )
        .prop_map(|parts| parts.concat())
    }

    proptest! {
        #[test]
        fn clean_is_idempotent(s in html_ish()) {
            let once = clean_text(&s);
            prop_assert_eq!(clean_text(&once), once.clone());
            prop_assert!(!once.contains(','));
            prop_assert_eq!(once.to_lowercase(), once);
        }

        #[test]
        fn clean_is_idempotent_any(s in any::<String>()) {
            let once = clean_text(&s);
            prop_assert_eq!(clean_text(&once), once);
        }

        #[test]
        fn disjoint_leaker_sets_commute(
            body in "[a-d ]{0,40}",
            a in proptest::collection::hash_set("[a-d]{1,2}", 0..3),
            b in proptest::collection::hash_set("[a-d]{1,2}", 0..3),
        ) {
            let b: HashSet<String> = b.difference(&a).cloned().collect();
            let body = clean_text(&body);
            let ab = remove_tokens(&remove_tokens(&body, &a), &b);
            let ba = remove_tokens(&remove_tokens(&body, &b), &a);
            prop_assert_eq!(ab, ba);
        }

        #[test]
        fn folds_partition_and_stratify(
            labels in proptest::collection::vec(any::<bool>(), 4..120),
            k in 2usize..8,
            seed in any::<u64>(),
        ) {
            let labels: Vec<Label> = labels
                .into_iter()
                .map(|b| if b { Label::Commercial } else { Label::Editorial })
                .collect();
            let n_c = labels.iter().filter(|&&l| l == Label::Commercial).count();
            let n_e = labels.len() - n_c;
            match stratified_folds(&labels, k, seed) {
                Err(_) => prop_assert!(n_c < k || n_e < k),
                Ok(folds) => {
                    let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
                    all.sort_unstable();
                    prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
                    for f in &folds {
                        for (class, n) in [(Label::Commercial, n_c), (Label::Editorial, n_e)] {
                            let got = f.iter().filter(|&&i| labels[i] == class).count() as f64;
                            prop_assert!((got - n as f64 / k as f64).abs() <= 1.0);
                        }
                    }
                }
            }
        }
    }
}
