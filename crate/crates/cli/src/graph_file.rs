//! Graph files: an edge list (`i j w` per line, `#` comments, optional
//! `n N` line) or a JSON document `{"n": N, "edges": [[i, j, w], ...]}`.
//! Vertices are 1-based on disk and 0-based once parsed.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use consensus_core::digraph::Arc;
use consensus_core::scalar::parse_rational;
use consensus_core::{Rational, WeightedDigraph};
use num_traits::Zero;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("invalid graph document: {0}")]
    Document(String),
}

/// A parsed, validated graph file.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFile {
    pub n: usize,
    pub arcs: Vec<Arc>,
}

impl GraphFile {
    pub fn load(path: &Path) -> Result<Self, GraphFileError> {
        let text = fs::read_to_string(path).map_err(|source| GraphFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Picks the format from the first non-blank character.
    pub fn parse(text: &str) -> Result<Self, GraphFileError> {
        if text.trim_start().starts_with('{') {
            parse_json(text)
        } else {
            parse_edge_list(text)
        }
    }

    pub fn digraph(&self) -> WeightedDigraph {
        WeightedDigraph::new(self.n, self.arcs.clone()).expect("arcs validated while parsing")
    }
}

/// One arc as written, before range checks; `at` locates it for messages.
struct RawArc {
    at: Location,
    tail: usize,
    head: usize,
    weight: Rational,
}

#[derive(Clone, Copy)]
enum Location {
    Line(usize),
    Edge(usize),
}

impl Location {
    fn error(self, message: String) -> GraphFileError {
        match self {
            Location::Line(line) => GraphFileError::Line { line, message },
            Location::Edge(k) => GraphFileError::Document(format!("edge {k}: {message}")),
        }
    }
}

fn parse_edge_list(text: &str) -> Result<GraphFile, GraphFileError> {
    let mut declared = None;
    let mut raw = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let at = Location::Line(idx + 1);
        let content = line.split('#').next().unwrap_or("");
        let fields: Vec<&str> = content.split_whitespace().collect();
        match fields.as_slice() {
            [] => {}
            ["n", count] => {
                if declared.is_some() {
                    return Err(at.error("vertex count declared twice".into()));
                }
                let n = count
                    .parse::<usize>()
                    .map_err(|_| at.error(format!("bad vertex count {count:?}")))?;
                declared = Some(n);
            }
            [i, j, w] => raw.push(RawArc {
                at,
                tail: parse_vertex(i, at)?,
                head: parse_vertex(j, at)?,
                weight: parse_rational(w).map_err(|e| at.error(e.to_string()))?,
            }),
            _ => {
                return Err(at.error(format!(
                    "expected `i j w` or `n N`, got {} field(s)",
                    fields.len()
                )))
            }
        }
    }
    build(declared, raw)
}

fn parse_vertex(text: &str, at: Location) -> Result<usize, GraphFileError> {
    text.parse::<usize>()
        .map_err(|_| at.error(format!("bad vertex {text:?}")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonGraph {
    n: Option<usize>,
    edges: Vec<(usize, usize, JsonWeight)>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonWeight {
    Number(serde_json::Number),
    Text(String),
}

fn parse_json(text: &str) -> Result<GraphFile, GraphFileError> {
    let doc: JsonGraph =
        serde_json::from_str(text).map_err(|e| GraphFileError::Document(e.to_string()))?;
    let mut raw = Vec::with_capacity(doc.edges.len());
    for (k, (tail, head, w)) in doc.edges.into_iter().enumerate() {
        let at = Location::Edge(k + 1);
        let text = match w {
            JsonWeight::Number(num) => num.to_string(),
            JsonWeight::Text(s) => s,
        };
        let weight = parse_rational(&text).map_err(|e| at.error(e.to_string()))?;
        raw.push(RawArc {
            at,
            tail,
            head,
            weight,
        });
    }
    build(doc.n, raw)
}

fn build(declared: Option<usize>, raw: Vec<RawArc>) -> Result<GraphFile, GraphFileError> {
    let n = match declared {
        Some(n) => n,
        None => raw.iter().map(|a| a.tail.max(a.head)).max().unwrap_or(0),
    };
    if n == 0 {
        return Err(GraphFileError::Document(
            "graph has no vertices; declare the count with `n N`".into(),
        ));
    }
    let mut seen = BTreeSet::new();
    let mut arcs = Vec::with_capacity(raw.len());
    for a in raw {
        for v in [a.tail, a.head] {
            if v == 0 || v > n {
                return Err(a.at.error(format!("vertex {v} outside 1..={n}")));
            }
        }
        if a.tail == a.head {
            return Err(a.at.error(format!("self-loop at vertex {}", a.tail)));
        }
        if a.weight <= Rational::zero() {
            return Err(a.at.error(format!("weight {} is not positive", a.weight)));
        }
        if !seen.insert((a.tail, a.head)) {
            return Err(a
                .at
                .error(format!("duplicate arc {} -> {}", a.tail, a.head)));
        }
        arcs.push(Arc {
            tail: a.tail - 1,
            head: a.head - 1,
            weight: a.weight,
        });
    }
    Ok(GraphFile { n, arcs })
}
