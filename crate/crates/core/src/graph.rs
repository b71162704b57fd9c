//! Similarity graph construction.
//!
//! Two records are compared by the attention-weighted double sum
//!
//! ```text
//! S(u, v) = Σ_i Σ_j cos(c_i, c_j) · exp(−|i − j|)
//! ```
//!
//! over equal-length chord segments, and joined by an edge of weight
//! `S(u, v)` when `S(u, v) > xi`. Nodes left without neighbours are dropped.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;

use crate::chord2vec::ChordEmbeddings;
use crate::corpus::{segment, Corpus, Mode, Selector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub id: String,
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphStats {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub avg_degree: f64,
}

/// Weighted undirected simple graph over compositions.
///
/// Edges are stored once with `u < v`, sorted; adjacency lists are sorted by
/// neighbour index.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoraleGraph {
    nodes: Vec<GraphNode>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl ChoraleGraph {
    /// Validates and indexes a graph. Rejects self-loops, repeated pairs,
    /// out-of-range endpoints, non-finite weights and isolated nodes.
    pub fn new(nodes: Vec<GraphNode>, edges: Vec<Edge>) -> Result<Self> {
        let n = nodes.len();
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|e| {
                if e.u < e.v {
                    e
                } else {
                    Edge { u: e.v, v: e.u, weight: e.weight }
                }
            })
            .collect();
        edges.sort_by_key(|e| (e.u, e.v));
        let mut adjacency = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            if e.u == e.v {
                return Err(Error::InvalidGraph(format!("self-loop on node {}", e.u)));
            }
            if e.v >= n {
                return Err(Error::InvalidGraph(format!("edge endpoint {} out of range", e.v)));
            }
            if !e.weight.is_finite() {
                return Err(Error::InvalidGraph(format!("edge ({}, {}) has non-finite weight", e.u, e.v)));
            }
            if i > 0 && (edges[i - 1].u, edges[i - 1].v) == (e.u, e.v) {
                return Err(Error::InvalidGraph(format!("edge ({}, {}) repeated", e.u, e.v)));
            }
            adjacency[e.u].push((e.v, e.weight));
            adjacency[e.v].push((e.u, e.weight));
        }
        if let Some(isolated) = adjacency.iter().position(Vec::is_empty) {
            return Err(Error::InvalidGraph(format!("node {isolated} is isolated")));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(v, _)| v);
        }
        Ok(ChoraleGraph {
            nodes,
            edges,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        let list = self.adjacency.get(u)?;
        list.binary_search_by_key(&v, |&(n, _)| n)
            .ok()
            .map(|i| list[i].1)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.weight(u, v).is_some()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn min_weight(&self) -> Option<f64> {
        self.edges.iter().map(|e| e.weight).reduce(f64::min)
    }

    pub fn stats(&self) -> GraphStats {
        graph_stats(self)
    }

    pub fn to_text(&self) -> Result<String> {
        let mut out = format!("#nodes {}\n", self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id.is_empty() || n.id.chars().any(char::is_whitespace) {
                return Err(Error::InvalidGraph(format!(
                    "node id {:?} cannot be written to a graph file",
                    n.id
                )));
            }
            out.push_str(&format!("{i} {} {}\n", n.id, n.mode));
        }
        out.push_str(&format!("#edges {}\n", self.edges.len()));
        for e in &self.edges {
            out.push_str(&format!("{} {} {}\n", e.u, e.v, e.weight));
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let bad = |line: usize, message: String| Error::Malformed {
            line: line + 1,
            message,
        };
        let mut header = |tag: &str| -> Result<usize> {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| bad(0, format!("missing #{tag} header")))?;
            line.strip_prefix(&format!("#{tag} "))
                .and_then(|n| n.trim().parse().ok())
                .ok_or_else(|| bad(ln, format!("expected '#{tag} <count>'")))
        };
        let n = header("nodes")?;
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| bad(0, format!("file ends after {i} of {n} nodes")))?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [idx, id, mode] = parts[..] else {
                return Err(bad(ln, "expected '<index> <id> <mode>'".into()));
            };
            if idx.parse::<usize>().ok() != Some(i) {
                return Err(bad(ln, format!("expected node index {i}")));
            }
            let mode = mode.parse().map_err(|e: Error| bad(ln, e.to_string()))?;
            nodes.push(GraphNode { id: id.to_string(), mode });
        }
        let m = {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| bad(0, "missing #edges header".into()))?;
            line.strip_prefix("#edges ")
                .and_then(|n| n.trim().parse::<usize>().ok())
                .ok_or_else(|| bad(ln, "expected '#edges <count>'".into()))?
        };
        let mut edges = Vec::with_capacity(m);
        for (ln, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [u, v, w] = parts[..] else {
                return Err(bad(ln, "expected '<u> <v> <weight>'".into()));
            };
            let parse_err = || bad(ln, format!("bad edge line {line:?}"));
            let u: usize = u.parse().map_err(|_| parse_err())?;
            let v: usize = v.parse().map_err(|_| parse_err())?;
            let weight: f64 = w.parse().map_err(|_| parse_err())?;
            if u >= v {
                return Err(bad(ln, "edge endpoints must satisfy u < v".into()));
            }
            edges.push(Edge { u, v, weight });
        }
        if edges.len() != m {
            return Err(bad(0, format!("header declares {m} edges, found {}", edges.len())));
        }
        ChoraleGraph::new(nodes, edges)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

pub fn graph_stats(g: &ChoraleGraph) -> GraphStats {
    let (n, m) = (g.node_count(), g.edge_count());
    GraphStats {
        num_nodes: n,
        num_edges: m,
        avg_degree: if n == 0 { 0.0 } else { 2.0 * m as f64 / n as f64 },
    }
}

/// `exp(−|i − j|)` for `i, j < n`, row-major.
fn attention(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            w[i * n + j] = (-(i.abs_diff(j) as f64)).exp();
        }
    }
    w
}

/// Attention-weighted similarity of two equal-length chord sequences.
pub fn sequence_similarity<S: AsRef<str>>(
    seq_u: &[S],
    seq_v: &[S],
    emb: &ChordEmbeddings,
) -> Result<f64> {
    if seq_u.len() != seq_v.len() {
        return Err(Error::LengthMismatch {
            left: seq_u.len(),
            right: seq_v.len(),
        });
    }
    if seq_u.is_empty() {
        return Err(Error::InvalidParameter("empty chord sequence".into()));
    }
    let u: Vec<&[f64]> = seq_u
        .iter()
        .map(|t| emb.vector(t.as_ref()))
        .collect::<Result<_>>()?;
    let v: Vec<&[f64]> = seq_v
        .iter()
        .map(|t| emb.vector(t.as_ref()))
        .collect::<Result<_>>()?;
    let n = u.len();
    Ok(attended_sum(n, &attention(n), |i, j| {
        crate::vectors::cosine(u[i], v[j])
    }))
}

/// `Σᵢⱼ c(i, j) · att[i, j]`, with each off-diagonal pair `c(i, j) + c(j, i)`
/// added as a unit so that swapping the two sequences is bit-for-bit exact.
fn attended_sum(n: usize, att: &[f64], c: impl Fn(usize, usize) -> f64) -> f64 {
    let mut total = 0.0;
    for i in 0..n {
        total += c(i, i) * att[i * n + i];
        for j in i + 1..n {
            total += (c(i, j) + c(j, i)) * att[i * n + j];
        }
    }
    total
}

/// Precomputed chord-pair similarities over encoded segments.
pub(crate) struct SegmentScorer {
    table: Vec<f64>,
    vocab_len: usize,
    attention: HashMap<usize, Vec<f64>>,
}

impl SegmentScorer {
    pub(crate) fn new(emb: &ChordEmbeddings, lengths: impl IntoIterator<Item = usize>) -> Self {
        SegmentScorer {
            table: emb.similarity_table(),
            vocab_len: emb.vocab().len(),
            attention: lengths.into_iter().map(|n| (n, attention(n))).collect(),
        }
    }

    fn score(&self, u: &[usize], v: &[usize]) -> Result<f64> {
        if u.len() != v.len() {
            return Err(Error::LengthMismatch {
                left: u.len(),
                right: v.len(),
            });
        }
        let n = u.len();
        let k = self.vocab_len;
        Ok(attended_sum(n, &self.attention[&n], |i, j| {
            self.table[u[i] * k + v[j]]
        }))
    }

    /// Summed similarity over matching segments.
    pub(crate) fn score_segments(&self, u: &[Vec<usize>], v: &[Vec<usize>]) -> Result<f64> {
        u.iter().zip(v).map(|(a, b)| self.score(a, b)).sum()
    }
}

/// Segments of every record under a selector, encoded as chord-embedding
/// vocabulary indices. Records too short for the selector come back as `None`.
pub(crate) fn encode_segments(
    corpus: &Corpus,
    emb: &ChordEmbeddings,
    selector: Selector,
) -> Result<Vec<Option<Vec<Vec<usize>>>>> {
    corpus
        .records()
        .iter()
        .map(|r| match segment(r, selector) {
            Ok(segs) => segs
                .into_iter()
                .map(|s| emb.vocab().encode(s))
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Err(Error::SegmentTooShort { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// All pairwise similarities over the usable records of a corpus, computed
/// once and thresholded any number of times.
#[derive(Debug, Clone)]
pub struct PairwiseSimilarity {
    nodes: Vec<GraphNode>,
    skipped: Vec<String>,
    /// Condensed upper triangle, row by row.
    values: Vec<f64>,
}

impl PairwiseSimilarity {
    /// Scores every pair of records. Records whose intro is shorter than the
    /// selector asks for are skipped with a warning.
    pub fn compute(corpus: &Corpus, emb: &ChordEmbeddings, selector: Selector) -> Result<Self> {
        if corpus.len() < 2 {
            return Err(Error::InvalidParameter(
                "graph construction needs at least two records".into(),
            ));
        }
        let encoded = encode_segments(corpus, emb, selector)?;
        let mut nodes = Vec::new();
        let mut segs = Vec::new();
        let mut skipped = Vec::new();
        for (r, enc) in corpus.records().iter().zip(encoded) {
            match enc {
                Some(s) => {
                    nodes.push(GraphNode {
                        id: r.id.clone(),
                        mode: r.mode,
                    });
                    segs.push(s);
                }
                None => {
                    log::warn!("skipping {}: too short for {selector}", r.id);
                    skipped.push(r.id.clone());
                }
            }
        }
        let lengths: Vec<usize> = segs.iter().flatten().map(Vec::len).collect();
        let scorer = SegmentScorer::new(emb, lengths);
        let n = segs.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|u| {
                ((u + 1)..n)
                    .map(|v| scorer.score_segments(&segs[u], &segs[v]))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        Ok(PairwiseSimilarity {
            nodes,
            skipped,
            values: rows.concat(),
        })
    }

    pub fn skipped(&self) -> &[String] {
        &self.skipped
    }

    pub fn candidates(&self) -> &[GraphNode] {
        &self.nodes
    }

    /// `(u, v, S(u, v))` for every candidate pair with `u < v`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.nodes.len();
        (0..n)
            .flat_map(move |u| ((u + 1)..n).map(move |v| (u, v)))
            .zip(&self.values)
            .map(|((u, v), &s)| (u, v, s))
    }

    /// Keeps pairs with `S > xi` and drops nodes left isolated.
    pub fn threshold(&self, xi: f64) -> Result<ChoraleGraph> {
        if xi.is_nan() {
            return Err(Error::InvalidParameter("threshold is NaN".into()));
        }
        let kept: Vec<(usize, usize, f64)> = self.pairs().filter(|&(_, _, s)| s > xi).collect();
        let mut remap = vec![usize::MAX; self.nodes.len()];
        for &(u, v, _) in &kept {
            remap[u] = 0;
            remap[v] = 0;
        }
        let mut nodes = Vec::new();
        for (i, slot) in remap.iter_mut().enumerate() {
            if *slot == 0 {
                *slot = nodes.len();
                nodes.push(self.nodes[i].clone());
            }
        }
        let edges = kept
            .into_iter()
            .map(|(u, v, weight)| Edge {
                u: remap[u],
                v: remap[v],
                weight,
            })
            .collect();
        ChoraleGraph::new(nodes, edges)
    }

    /// The threshold that keeps the `edges` most similar pairs (fewer when
    /// similarities tie at the cut). Asking for every pair yields `−∞`.
    pub fn threshold_for_edge_count(&self, edges: usize) -> f64 {
        let mut sorted = self.values.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        match sorted.get(edges) {
            Some(&s) => s,
            None => f64::NEG_INFINITY,
        }
    }
}

/// Builds the thresholded similarity graph in one go.
pub fn build_graph(
    corpus: &Corpus,
    emb: &ChordEmbeddings,
    selector: Selector,
    xi: f64,
) -> Result<ChoraleGraph> {
    PairwiseSimilarity::compute(corpus, emb, selector)?.threshold(xi)
}
