//! Cross-model agreement on top-k neighbour lists and the mean harmonic
//! similarity of the neighbours each model suggests.

use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::chord2vec::ChordEmbeddings;
use crate::corpus::{Corpus, Selector};
use crate::embedding::{top_k_similar, train_model, EncoderMatrix, Method, TrainConfig};
use crate::error::{Error, Result};
use crate::graph::{encode_segments, ChoraleGraph, SegmentScorer};
use crate::walk::{generate_walks, WalkConfig};

/// Neighbour-list length used throughout the evaluation.
pub const TOP_K: usize = 10;

/// `|A ∩ B|` for two equal-length lists of distinct nodes.
pub fn common_count(a: &[usize], b: &[usize]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let set_a: HashSet<usize> = a.iter().copied().collect();
    let set_b: HashSet<usize> = b.iter().copied().collect();
    if set_a.len() != a.len() || set_b.len() != b.len() {
        return Err(Error::InvalidParameter("neighbour list has duplicate entries".into()));
    }
    Ok(set_a.intersection(&set_b).count())
}

/// Top-`k` neighbour list of every node.
pub fn top_lists(z: &EncoderMatrix, k: usize) -> Result<Vec<Vec<usize>>> {
    (0..z.num_nodes())
        .map(|u| Ok(top_k_similar(z, u, k)?.into_iter().map(|(v, _)| v).collect()))
        .collect()
}

/// Record-level similarity `S(u, v)` between graph nodes.
pub struct NodeSimilarity {
    segments: Vec<Vec<Vec<usize>>>,
    scorer: SegmentScorer,
}

impl NodeSimilarity {
    /// Resolves every graph node to its corpus record and encodes its segments.
    pub fn new(
        g: &ChoraleGraph,
        corpus: &Corpus,
        emb: &ChordEmbeddings,
        selector: Selector,
    ) -> Result<Self> {
        let encoded = encode_segments(corpus, emb, selector)?;
        let index = corpus.id_index();
        let segments = g
            .nodes()
            .iter()
            .map(|n| {
                let r = *index
                    .get(n.id.as_str())
                    .ok_or_else(|| Error::UnknownNode(n.id.clone()))?;
                encoded[r].clone().ok_or_else(|| Error::SegmentTooShort {
                    id: n.id.clone(),
                    len: corpus.records()[r].chords.len(),
                    needed: match selector {
                        Selector::Intro(k) | Selector::IntroAndCadence(k) => k,
                        Selector::Cadence => 0,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let lengths: Vec<usize> = segments.iter().flatten().map(Vec::len).collect();
        Ok(NodeSimilarity {
            segments,
            scorer: SegmentScorer::new(emb, lengths),
        })
    }

    pub fn similarity(&self, u: usize, v: usize) -> Result<f64> {
        self.scorer
            .score_segments(&self.segments[u], &self.segments[v])
    }
}

/// Grand mean of `S(u, v)` over every node `u` and its `k` nearest embedding
/// neighbours `v`.
pub fn mean_node_similarity_with(
    model: &EncoderMatrix,
    sim: &NodeSimilarity,
    k: usize,
) -> Result<f64> {
    let lists = top_lists(model, k)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for (u, list) in lists.iter().enumerate() {
        for &v in list {
            total += sim.similarity(u, v)?;
            count += 1;
        }
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}

pub fn mean_node_similarity(
    model: &EncoderMatrix,
    g: &ChoraleGraph,
    corpus: &Corpus,
    emb: &ChordEmbeddings,
    selector: Selector,
) -> Result<f64> {
    if model.num_nodes() != g.node_count() {
        return Err(Error::InvalidParameter(format!(
            "model covers {} nodes, graph has {}",
            model.num_nodes(),
            g.node_count()
        )));
    }
    mean_node_similarity_with(model, &NodeSimilarity::new(g, corpus, emb, selector)?, TOP_K)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairAgreement {
    pub label: String,
    pub per_node: Vec<usize>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    pub p: f64,
    pub q: f64,
    /// Pairs in the order (0,1), (0,2), (1,2) of `methods`.
    pub pairs: [PairAgreement; 3],
    pub methods: [Method; 3],
    pub mean_similarity: [f64; 3],
}

/// Agreement between three trained models over every node.
pub fn agreement(
    models: &[EncoderMatrix; 3],
    sim: &NodeSimilarity,
    k: usize,
    (p, q): (f64, f64),
) -> Result<AgreementReport> {
    let lists: Vec<Vec<Vec<usize>>> = models
        .iter()
        .map(|m| top_lists(m, k))
        .collect::<Result<_>>()?;
    let pair = |a: usize, b: usize| -> Result<PairAgreement> {
        let per_node = lists[a]
            .iter()
            .zip(&lists[b])
            .map(|(x, y)| common_count(x, y))
            .collect::<Result<Vec<_>>>()?;
        let mean = per_node.iter().sum::<usize>() as f64 / per_node.len().max(1) as f64;
        Ok(PairAgreement {
            label: format!("{}-{}", models[a].method, models[b].method).to_uppercase(),
            per_node,
            mean,
        })
    };
    let mut mean_similarity = [0.0; 3];
    for (slot, m) in mean_similarity.iter_mut().zip(models) {
        *slot = mean_node_similarity_with(m, sim, k)?;
    }
    Ok(AgreementReport {
        p,
        q,
        pairs: [pair(0, 1)?, pair(0, 2)?, pair(1, 2)?],
        methods: [models[0].method, models[1].method, models[2].method],
        mean_similarity,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub grid: Vec<(f64, f64)>,
    pub walk: WalkConfig,
    pub train: TrainConfig,
    pub methods: [Method; 3],
    pub k: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            grid: vec![(1.0, 1.0), (0.7, 1.0), (1.0, 0.7)],
            walk: WalkConfig::default(),
            train: TrainConfig::default(),
            methods: Method::ALL,
            k: TOP_K,
        }
    }
}

/// For each `(p, q)`: one walk set, three models trained on it, one report.
pub fn run_agreement_study(
    g: &ChoraleGraph,
    corpus: &Corpus,
    emb: &ChordEmbeddings,
    selector: Selector,
    cfg: &StudyConfig,
) -> Result<Vec<AgreementReport>> {
    if g.node_count() == 0 {
        return Err(Error::InvalidGraph("graph is empty".into()));
    }
    let sim = NodeSimilarity::new(g, corpus, emb, selector)?;
    cfg.grid
        .iter()
        .map(|&(p, q)| {
            let walks = generate_walks(g, &WalkConfig { p, q, ..cfg.walk })?;
            let models: Vec<EncoderMatrix> = cfg
                .methods
                .par_iter()
                .map(|&m| train_model(m, g, &walks, &cfg.train))
                .collect::<Result<_>>()?;
            let models: [EncoderMatrix; 3] = models.try_into().expect("three methods");
            agreement(&models, &sim, cfg.k, (p, q))
        })
        .collect()
}

/// One row per grid point per metric: `p,q,metric,value`.
pub fn reports_csv(reports: &[AgreementReport]) -> String {
    let mut out = String::from("p,q,metric,value\n");
    for r in reports {
        for pair in &r.pairs {
            let _ = writeln!(out, "{},{},common_{},{}", r.p, r.q, pair.label, pair.mean);
        }
        for (m, s) in r.methods.iter().zip(r.mean_similarity) {
            let _ = writeln!(out, "{},{},similarity_{},{}", r.p, r.q, m.as_str().to_uppercase(), s);
        }
    }
    out
}

pub fn reports_table(reports: &[AgreementReport]) -> String {
    let mut out = String::new();
    let Some(first) = reports.first() else {
        return out;
    };
    let _ = writeln!(out, "Mean common nodes between");
    let labels: Vec<&str> = first.pairs.iter().map(|p| p.label.as_str()).collect();
    let _ = writeln!(out, "{:>10} {:>10} {:>10}  remarks", labels[0], labels[1], labels[2]);
    for r in reports {
        let _ = writeln!(
            out,
            "{:>10.2} {:>10.2} {:>10.2}  p={}, q={}",
            r.pairs[0].mean, r.pairs[1].mean, r.pairs[2].mean, r.p, r.q
        );
    }
    let _ = writeln!(out, "Mean node similarity from");
    let names: Vec<String> = first.methods.iter().map(|m| m.as_str().to_uppercase()).collect();
    let _ = writeln!(out, "{:>10} {:>10} {:>10}", names[0], names[1], names[2]);
    for r in reports {
        let s = r.mean_similarity;
        let _ = writeln!(out, "{:>10.2} {:>10.2} {:>10.2}  p={}, q={}", s[0], s[1], s[2], r.p, r.q);
    }
    out
}
