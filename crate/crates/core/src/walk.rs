//! Second-order biased random walks and the training pairs drawn from them.
//!
//! From current node `v` reached via `u`, a candidate `w ∈ N(v)` gets bias
//! `1` when `w = u`, `1/p` when `w` is also a neighbour of `u`, and `1/q`
//! otherwise. Biases are multiplied by the edge weight `W(v, w)` and
//! normalized.
//!
//! Note that this differs from the original node2vec convention, which puts
//! `1/p` on the return edge and `1` on common neighbours.

use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::ChoraleGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub p: f64,
    pub q: f64,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walks_per_node: 10,
            walk_length: 10,
            p: 1.0,
            q: 1.0,
            seed: 42,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walk_length < 2 {
            return Err(Error::InvalidParameter("walk length must be at least 2".into()));
        }
        if self.walks_per_node < 1 {
            return Err(Error::InvalidParameter("walks per node must be at least 1".into()));
        }
        check_pq(self.p, self.q)
    }
}

fn check_pq(p: f64, q: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite() && q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "p and q must be positive and finite (p = {p}, q = {q})"
        )));
    }
    Ok(())
}

/// Walks over a graph; walk `i` starts at node `i / walks_per_node`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkSet {
    pub walks: Vec<Vec<usize>>,
    pub config: WalkConfig,
}

impl WalkSet {
    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    /// One walk per line, space-separated node indices, after a `#` header
    /// recording the generation settings.
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = format!(
            "# walks_per_node={} walk_length={} p={} q={} seed={}\n",
            c.walks_per_node, c.walk_length, c.p, c.q, c.seed
        );
        for walk in &self.walks {
            let line: Vec<String> = walk.iter().map(usize::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses a walk dump and checks every step against `graph`.
    pub fn from_text(text: &str, graph: &ChoraleGraph) -> Result<Self> {
        let mut config = WalkConfig::default();
        let mut walks = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let bad = |message: String| Error::Malformed { line: i + 1, message };
            if let Some(header) = line.strip_prefix('#') {
                for kv in header.split_whitespace() {
                    let Some((k, v)) = kv.split_once('=') else { continue };
                    let e = || bad(format!("bad header value {kv:?}"));
                    match k {
                        "walks_per_node" => config.walks_per_node = v.parse().map_err(|_| e())?,
                        "walk_length" => config.walk_length = v.parse().map_err(|_| e())?,
                        "p" => config.p = v.parse().map_err(|_| e())?,
                        "q" => config.q = v.parse().map_err(|_| e())?,
                        "seed" => config.seed = v.parse().map_err(|_| e())?,
                        _ => {}
                    }
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let walk: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad(format!("bad node index {t:?}"))))
                .collect::<Result<_>>()?;
            if let Some(&n) = walk.iter().find(|&&n| n >= graph.node_count()) {
                return Err(bad(format!("node {n} not in graph")));
            }
            if let Some(w) = walk.windows(2).find(|w| !graph.has_edge(w[0], w[1])) {
                return Err(bad(format!("step {} -> {} is not an edge", w[0], w[1])));
            }
            walks.push(walk);
        }
        Ok(WalkSet { walks, config })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, graph: &ChoraleGraph) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, graph)
    }
}

fn check_weights(g: &ChoraleGraph) -> Result<()> {
    match g.min_weight() {
        Some(w) if w < 0.0 => Err(Error::InvalidGraph(format!(
            "walks need non-negative edge weights (minimum is {w})"
        ))),
        _ => Ok(()),
    }
}

/// Next-step distribution from `cur` having arrived from `prev`, over
/// `N(cur)` in adjacency order.
pub fn step_distribution(
    g: &ChoraleGraph,
    prev: usize,
    cur: usize,
    p: f64,
    q: f64,
) -> Result<Vec<(usize, f64)>> {
    check_pq(p, q)?;
    if cur >= g.node_count() || prev >= g.node_count() {
        return Err(Error::UnknownNode(cur.max(prev).to_string()));
    }
    if !g.has_edge(prev, cur) {
        return Err(Error::InvalidParameter(format!(
            "{prev} is not a neighbour of {cur}"
        )));
    }
    let mut dist = step_weights(g, prev, cur, p, q);
    let total: f64 = dist.iter().map(|&(_, w)| w).sum();
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(total > 0.0) {
        return Err(Error::InvalidGraph(format!(
            "node {cur} has no positively weighted neighbour"
        )));
    }
    for (_, w) in &mut dist {
        *w /= total;
    }
    Ok(dist)
}

fn step_weights(g: &ChoraleGraph, prev: usize, cur: usize, p: f64, q: f64) -> Vec<(usize, f64)> {
    g.neighbors(cur)
        .iter()
        .map(|&(w, weight)| {
            let bias = if w == prev {
                1.0
            } else if g.has_edge(prev, w) {
                1.0 / p
            } else {
                1.0 / q
            };
            (w, bias * weight)
        })
        .collect()
}

fn draw<R: Rng>(options: &[(usize, f64)], rng: &mut R) -> Result<usize> {
    let dist = WeightedIndex::new(options.iter().map(|&(_, w)| w))
        .map_err(|e| Error::InvalidGraph(format!("cannot sample next step: {e}")))?;
    Ok(options[dist.sample(rng)].0)
}

/// Draws one walk of `cfg.walk_length` nodes starting at `start`. The first
/// step is proportional to edge weight.
pub fn walk_from<R: Rng>(
    g: &ChoraleGraph,
    start: usize,
    cfg: &WalkConfig,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(start);
    let mut cur = draw(g.neighbors(start), rng)?;
    walk.push(cur);
    while walk.len() < cfg.walk_length {
        let prev = walk[walk.len() - 2];
        cur = draw(&step_weights(g, prev, cur, cfg.p, cfg.q), rng)?;
        walk.push(cur);
    }
    Ok(walk)
}

/// `walks_per_node` walks from every node. Each start node draws from its own
/// ChaCha stream, so the result does not depend on thread scheduling.
pub fn generate_walks(g: &ChoraleGraph, cfg: &WalkConfig) -> Result<WalkSet> {
    cfg.validate()?;
    check_weights(g)?;
    let per_node: Vec<Vec<Vec<usize>>> = (0..g.node_count())
        .into_par_iter()
        .map(|start| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(start as u64);
            (0..cfg.walks_per_node)
                .map(|_| walk_from(g, start, cfg, &mut rng))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(WalkSet {
        walks: per_node.into_iter().flatten().collect(),
        config: *cfg,
    })
}

/// Positions within `window` of `t` in a sequence of length `len`, excluding `t`.
pub fn context_window(len: usize, t: usize, window: usize) -> impl Iterator<Item = usize> {
    let lo = t.saturating_sub(window);
    let hi = (t + window + 1).min(len);
    (lo..hi).filter(move |&i| i != t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingSample {
    pub target: usize,
    pub context: usize,
    pub label: u8,
}

/// Every (walk[t], walk[t′]) with `0 < |t − t′| ≤ window`, labelled positive.
pub fn positive_pairs(ws: &WalkSet, window: usize) -> Result<Vec<TrainingSample>> {
    if window < 1 {
        return Err(Error::InvalidParameter("window must be at least 1".into()));
    }
    Ok(ws
        .walks
        .iter()
        .flat_map(|walk| {
            (0..walk.len()).flat_map(move |t| {
                context_window(walk.len(), t, window).map(move |i| TrainingSample {
                    target: walk[t],
                    context: walk[i],
                    label: 1,
                })
            })
        })
        .collect())
}

/// Negative-sampling distribution `P(n) ∝ degree(n)^0.75`.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    weights: Vec<f64>,
}

/// The negative distribution restricted to a candidate subset.
#[derive(Debug, Clone)]
pub struct RestrictedSampler {
    candidates: Vec<usize>,
    dist: WeightedIndex<f64>,
}

impl NegativeSampler {
    pub const POWER: f64 = 0.75;

    pub fn from_graph(g: &ChoraleGraph) -> Self {
        Self::from_degrees((0..g.node_count()).map(|u| g.degree(u)))
    }

    pub fn from_degrees(degrees: impl IntoIterator<Item = usize>) -> Self {
        NegativeSampler {
            weights: degrees
                .into_iter()
                .map(|d| (d as f64).powf(Self::POWER))
                .collect(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.weights.len()
    }

    /// Unrestricted probability of drawing `node`.
    pub fn probability(&self, node: usize) -> f64 {
        self.weights[node] / self.weights.iter().sum::<f64>()
    }

    /// Restricts the distribution to nodes not in `exclude`.
    pub fn restricted(&self, exclude: &[usize]) -> Result<RestrictedSampler> {
        let mut excluded = vec![false; self.weights.len()];
        for &n in exclude {
            if let Some(slot) = excluded.get_mut(n) {
                *slot = true;
            }
        }
        let candidates: Vec<usize> = (0..self.weights.len())
            .filter(|&n| !excluded[n] && self.weights[n] > 0.0)
            .collect();
        let dist = WeightedIndex::new(candidates.iter().map(|&n| self.weights[n])).map_err(|_| {
            Error::NoNegativeCandidates {
                target: exclude.first().copied().unwrap_or(0),
            }
        })?;
        Ok(RestrictedSampler { candidates, dist })
    }

    /// `k` draws (with replacement) excluding `target` and, when given, every
    /// node of the walk the pair came from.
    pub fn sample<R: Rng>(
        &self,
        target: usize,
        walk: Option<&[usize]>,
        k: usize,
        rng: &mut R,
    ) -> Result<Vec<usize>> {
        if k < 1 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let mut exclude = vec![target];
        exclude.extend(walk.unwrap_or_default());
        let r = self
            .restricted(&exclude)
            .map_err(|_| Error::NoNegativeCandidates { target })?;
        let mut out = Vec::with_capacity(k);
        r.fill(k, rng, &mut out);
        Ok(out)
    }
}

impl RestrictedSampler {
    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    pub fn fill<R: Rng>(&self, k: usize, rng: &mut R, out: &mut Vec<usize>) {
        out.extend((0..k).map(|_| self.candidates[self.dist.sample(rng)]));
    }
}

/// `k` degree-biased negatives for `target` drawn from `rng`.
pub fn negative_samples<R: Rng>(
    g: &ChoraleGraph,
    target: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    NegativeSampler::from_graph(g).sample(target, None, k, rng)
}
