//! Node embeddings: the shared encoder matrix, its three trainers and
//! nearest-neighbour queries.

mod objective;
mod train;

use std::fmt;
use std::str::FromStr;

pub use objective::{
    cbow_loss_and_grads, sg_loss_and_grads, sgns_loss_and_grads, softmax_prob, softmax_row,
    Gradients,
};
pub use train::{train_sgns, train_softmax, SoftmaxMethod, Trained};

use crate::error::{Error, Result};
use crate::graph::ChoraleGraph;
use crate::vectors::{cosine, ColumnMatrix};
use crate::walk::{NegativeSampler, WalkSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Sgns,
    Sg,
    Cbow,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Sgns, Method::Sg, Method::Cbow];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sgns => "sgns",
            Method::Sg => "sg",
            Method::Cbow => "cbow",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgns" => Ok(Method::Sgns),
            "sg" | "skipgram" | "skip-gram" => Ok(Method::Sg),
            "cbow" => Ok(Method::Cbow),
            _ => Err(Error::InvalidParameter(format!("unknown method {s:?}"))),
        }
    }
}

/// SGD hyperparameters. The learning rate decays linearly per epoch from
/// `lr` to `lr_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub epochs: usize,
    pub lr: f64,
    pub lr_min: f64,
    pub negatives: usize,
    pub window: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 64,
            epochs: 100,
            lr: 0.025,
            lr_min: 0.025 / 100.0,
            negatives: 5,
            window: 5,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.dim < 2 {
            return bad("dim must be at least 2");
        }
        if self.epochs < 1 {
            return bad("epochs must be at least 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.lr_min > 0.0 && self.lr_min <= self.lr) {
            return bad("final learning rate must lie in (0, lr]");
        }
        if self.negatives < 1 {
            return bad("negatives must be at least 1");
        }
        if self.window < 1 {
            return bad("window must be at least 1");
        }
        Ok(())
    }

    fn header(&self) -> String {
        format!(
            "dim={} epochs={} lr={} lr_min={} negatives={} window={} seed={}",
            self.dim, self.epochs, self.lr, self.lr_min, self.negatives, self.window, self.seed
        )
    }
}

/// The `d × |V|` node-embedding matrix with the method and settings that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderMatrix {
    pub method: Method,
    pub config: TrainConfig,
    matrix: ColumnMatrix,
}

impl EncoderMatrix {
    pub fn new(method: Method, config: TrainConfig, matrix: ColumnMatrix) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::InvalidParameter("embedding has non-finite entries".into()));
        }
        Ok(EncoderMatrix {
            method,
            config,
            matrix,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn num_nodes(&self) -> usize {
        self.matrix.cols()
    }

    pub fn column(&self, node: usize) -> &[f64] {
        self.matrix.column(node)
    }

    pub fn matrix(&self) -> &ColumnMatrix {
        &self.matrix
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# method={} {}\n", self.method, self.config.header());
        out.push_str(&crate::vectors::write_vectors(
            (0..self.num_nodes()).map(|i| i.to_string()),
            &self.matrix,
        ));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let header = text
            .lines()
            .next()
            .and_then(|l| l.strip_prefix('#'))
            .ok_or_else(|| Error::Malformed {
                line: 1,
                message: "missing method header".into(),
            })?;
        let mut method = None;
        let mut cfg = TrainConfig::default();
        for kv in header.split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Malformed {
                line: 1,
                message: format!("bad header field {kv:?}"),
            })?;
            let num_err = || Error::Malformed {
                line: 1,
                message: format!("bad value for {k}"),
            };
            match k {
                "method" => method = Some(v.parse::<Method>()?),
                "dim" => cfg.dim = v.parse().map_err(|_| num_err())?,
                "epochs" => cfg.epochs = v.parse().map_err(|_| num_err())?,
                "lr" => cfg.lr = v.parse().map_err(|_| num_err())?,
                "lr_min" => cfg.lr_min = v.parse().map_err(|_| num_err())?,
                "negatives" => cfg.negatives = v.parse().map_err(|_| num_err())?,
                "window" => cfg.window = v.parse().map_err(|_| num_err())?,
                "seed" => cfg.seed = v.parse().map_err(|_| num_err())?,
                _ => {}
            }
        }
        let method = method.ok_or_else(|| Error::Malformed {
            line: 1,
            message: "header lacks method".into(),
        })?;
        let (labels, matrix) = crate::vectors::read_vectors(text)?;
        for (i, label) in labels.iter().enumerate() {
            if label.parse::<usize>().ok() != Some(i) {
                return Err(Error::Malformed {
                    line: i + 3,
                    message: format!("expected node index {i}, found {label:?}"),
                });
            }
        }
        EncoderMatrix::new(method, cfg, matrix)
    }
}

/// Trains one model of the given method on a walk set over `graph`.
pub fn train_model(
    method: Method,
    graph: &ChoraleGraph,
    walks: &WalkSet,
    cfg: &TrainConfig,
) -> Result<EncoderMatrix> {
    let trained = match method {
        Method::Sgns => train_sgns(walks, &NegativeSampler::from_graph(graph), cfg)?,
        Method::Sg => train_softmax(&walks.walks, graph.node_count(), SoftmaxMethod::SkipGram, cfg)?,
        Method::Cbow => train_softmax(&walks.walks, graph.node_count(), SoftmaxMethod::Cbow, cfg)?,
    };
    EncoderMatrix::new(method, *cfg, trained.matrix)
}

/// The `k` nodes most cosine-similar to `node`, descending, ties broken by
/// ascending index. `node` itself is never returned.
pub fn top_k_similar(z: &EncoderMatrix, node: usize, k: usize) -> Result<Vec<(usize, f64)>> {
    top_k_in(z.matrix(), node, k)
}

pub(crate) fn top_k_in(z: &ColumnMatrix, node: usize, k: usize) -> Result<Vec<(usize, f64)>> {
    let n = z.cols();
    if node >= n {
        return Err(Error::UnknownNode(node.to_string()));
    }
    if k >= n {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must be smaller than the node count {n}"
        )));
    }
    let zu = z.column(node);
    let mut scored: Vec<(usize, f64)> = (0..n)
        .filter(|&v| v != node)
        .map(|v| (v, cosine(zu, z.column(v))))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored)
}
