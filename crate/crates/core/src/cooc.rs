//! Directed sentence co-occurrence network over lexicon terms.
//!
//! The edge `a -> b` carries the fraction of sentences containing `a` that
//! also contain `b`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{LexEntry, Lexicon};
use crate::par::*;
use crate::vectorize::tokenize;

/// Default for the minimum retained edge weight.
pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Default number of lexicon terms (by `|weight|`) used as nodes.
pub const DEFAULT_TOP_TERMS: usize = 250;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermClass {
    Commercial,
    Editorial,
    Neutral,
}

impl TermClass {
    pub fn of_weight(w: f64) -> TermClass {
        if w > 0.0 {
            TermClass::Commercial
        } else if w < 0.0 {
            TermClass::Editorial
        } else {
            TermClass::Neutral
        }
    }

    fn colour(self) -> &'static str {
        match self {
            TermClass::Commercial => "red",
            TermClass::Editorial => "blue",
            TermClass::Neutral => "gray",
        }
    }
}

/// Splits on `.`, `!`, `?` and line breaks; each sentence becomes the set of
/// its tokens. Empty sentences are dropped.
pub fn segment_sentences(body: &str) -> Vec<BTreeSet<String>> {
    let none = HashSet::new();
    body.split(['.', '!', '?', '\n'])
        .map(|s| tokenize(s, &none).into_iter().collect::<BTreeSet<String>>())
        .filter(|s| !s.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoocEdge {
    pub from: String,
    pub to: String,
    /// Sentences containing both terms.
    pub joint: usize,
    /// Sentences containing `from`.
    pub base: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoocGraph {
    pub threshold: f64,
    /// Node terms with their class, in lexicon order.
    pub terms: Vec<(String, TermClass)>,
    /// Number of sentences containing each node term.
    pub sentence_counts: BTreeMap<String, usize>,
    /// Retained edges sorted by (from, to).
    pub edges: Vec<CoocEdge>,
}

type PairCounts = HashMap<(usize, usize), usize>;

fn count_document(body: &str, index: &HashMap<&str, usize>) -> (Vec<(usize, usize)>, PairCounts) {
    let mut singles: HashMap<usize, usize> = HashMap::new();
    let mut pairs: PairCounts = HashMap::new();
    for sentence in segment_sentences(body) {
        let mut present: Vec<usize> = sentence
            .iter()
            .filter_map(|t| index.get(t.as_str()).copied())
            .collect();
        present.sort_unstable();
        for (k, &a) in present.iter().enumerate() {
            *singles.entry(a).or_insert(0) += 1;
            for &b in &present[k + 1..] {
                *pairs.entry((a, b)).or_insert(0) += 1;
            }
        }
    }
    (singles.into_iter().collect(), pairs)
}

/// Counts sentence (co-)occurrences of `terms` over `bodies` and keeps the
/// directed edges whose conditional frequency reaches `threshold`.
pub fn build_cooc<S: AsRef<str> + Sync>(
    bodies: &[S],
    terms: &[LexEntry],
    threshold: f64,
) -> Result<CoocGraph> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold must be in (0, 1], got {threshold}"
        )));
    }
    if terms.is_empty() {
        return Err(Error::InvalidArgument("no terms to build a network over".into()));
    }
    let index: HashMap<&str, usize> = terms
        .iter()
        .enumerate()
        .map(|(i, e)| (e.term.as_str(), i))
        .collect();
    let per_doc: Vec<(Vec<(usize, usize)>, PairCounts)> = bodies
        .par_iter()
        .map(|b| count_document(b.as_ref(), &index))
        .collect();
    let mut singles = vec![0usize; terms.len()];
    let mut pairs: PairCounts = HashMap::new();
    for (s, p) in per_doc {
        for (i, c) in s {
            singles[i] += c;
        }
        for (k, c) in p {
            *pairs.entry(k).or_insert(0) += c;
        }
    }
    let mut edges = Vec::new();
    for (&(a, b), &joint) in &pairs {
        for (from, to) in [(a, b), (b, a)] {
            let weight = joint as f64 / singles[from] as f64;
            if weight >= threshold {
                edges.push(CoocEdge {
                    from: terms[from].term.clone(),
                    to: terms[to].term.clone(),
                    joint,
                    base: singles[from],
                    weight,
                });
            }
        }
    }
    edges.sort_by(|x, y| (&x.from, &x.to).cmp(&(&y.from, &y.to)));
    Ok(CoocGraph {
        threshold,
        terms: terms
            .iter()
            .map(|e| (e.term.clone(), TermClass::of_weight(e.weight)))
            .collect(),
        sentence_counts: terms
            .iter()
            .zip(&singles)
            .map(|(e, &c)| (e.term.clone(), c))
            .collect(),
        edges,
    })
}

/// The `n` lexicon entries with the largest `|weight|` (ties by term).
pub fn top_terms(lexicon: &Lexicon, n: usize) -> Vec<LexEntry> {
    let mut all = lexicon.entries().to_vec();
    all.sort_by(|a, b| {
        b.weight
            .abs()
            .total_cmp(&a.weight.abs())
            .then_with(|| a.term.cmp(&b.term))
    });
    all.truncate(n);
    all
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: String,
    pub class: TermClass,
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub from: String,
    pub to: String,
    pub weight: f64,
}

/// The exported view of a graph: nodes with at least one retained edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphExport {
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
}

impl CoocGraph {
    /// Retained edges incident to each term (in + out).
    pub fn degrees(&self) -> BTreeMap<&str, usize> {
        let mut deg: BTreeMap<&str, usize> = BTreeMap::new();
        for e in &self.edges {
            *deg.entry(e.from.as_str()).or_insert(0) += 1;
            *deg.entry(e.to.as_str()).or_insert(0) += 1;
        }
        deg
    }

    pub fn weight(&self, from: &str, to: &str) -> Option<f64> {
        self.edges
            .binary_search_by(|e| (e.from.as_str(), e.to.as_str()).cmp(&(from, to)))
            .ok()
            .map(|i| self.edges[i].weight)
    }

    pub fn export(&self) -> GraphExport {
        let deg = self.degrees();
        GraphExport {
            nodes: self
                .terms
                .iter()
                .filter_map(|(t, c)| {
                    deg.get(t.as_str()).map(|&d| NodeRecord {
                        id: t.clone(),
                        class: *c,
                        degree: d,
                    })
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    from: e.from.clone(),
                    to: e.to.clone(),
                    weight: e.weight,
                })
                .collect(),
        }
    }
}

impl GraphExport {
    pub fn write_json(&self, writer: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    pub fn read_json(reader: impl std::io::Read) -> Result<GraphExport> {
        Ok(serde_json::from_reader(reader)?)
    }

    /// Graphviz digraph: editorial nodes blue, commercial red, node width
    /// proportional to degree, edges labelled with their weight.
    pub fn to_dot(&self) -> String {
        let max_degree = self.nodes.iter().map(|n| n.degree).max().unwrap_or(1).max(1);
        let mut out = String::from("digraph cooc {\n  node [shape=circle, style=filled, fontcolor=white];\n");
        for n in &self.nodes {
            let width = 0.3 + 1.2 * n.degree as f64 / max_degree as f64;
            let _ = writeln!(
                out,
                "  {} [color={c}, fillcolor={c}, width={width:.3}, degree={}];",
                quote(&n.id),
                n.degree,
                c = n.class.colour(),
            );
        }
        for e in &self.edges {
            let _ = writeln!(
                out,
                "  {} -> {} [label=\"{:.2}\", weight={:.4}];",
                quote(&e.from),
                quote(&e.to),
                e.weight,
                e.weight
            );
        }
        out.push_str("}\n");
        out
    }
}

fn quote(id: &str) -> String {
    format!("\"{}\"", id.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Undirected view: `{a, b}` weighted by the smaller of the two directions.
#[derive(Debug, Clone, PartialEq)]
pub struct UndirectedGraph {
    /// `(a, b, weight)` with `a < b`, sorted.
    pub edges: Vec<(String, String, f64)>,
}

impl UndirectedGraph {
    /// Both directions of every edge, for re-projection.
    pub fn to_directed(&self) -> Vec<EdgeRecord> {
        let mut out: Vec<EdgeRecord> = self
            .edges
            .iter()
            .flat_map(|(a, b, w)| {
                [
                    EdgeRecord { from: a.clone(), to: b.clone(), weight: *w },
                    EdgeRecord { from: b.clone(), to: a.clone(), weight: *w },
                ]
            })
            .collect();
        out.sort_by(|x, y| (&x.from, &x.to).cmp(&(&y.from, &y.to)));
        out
    }
}

/// Keeps pairs retained in both directions with weight `min(w(a->b), w(b->a))`.
/// A direction missing from `edges` counts as 0, which drops the pair.
pub fn project_edges(edges: &[EdgeRecord]) -> UndirectedGraph {
    let lookup: HashMap<(&str, &str), f64> = edges
        .iter()
        .map(|e| ((e.from.as_str(), e.to.as_str()), e.weight))
        .collect();
    let mut out: Vec<(String, String, f64)> = edges
        .iter()
        .filter(|e| e.from < e.to)
        .filter_map(|e| {
            lookup
                .get(&(e.to.as_str(), e.from.as_str()))
                .map(|&back| (e.from.clone(), e.to.clone(), e.weight.min(back)))
        })
        .collect();
    out.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
    UndirectedGraph { edges: out }
}

pub fn project_undirected(graph: &CoocGraph) -> UndirectedGraph {
    project_edges(&graph.export().edges)
}
