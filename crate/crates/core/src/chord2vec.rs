//! Chord-token embeddings learned from the chord sequences of a corpus.
//!
//! Each record's full chord sequence is treated as a sentence and fed to the
//! same full-softmax skip-gram / CBOW trainer used for node embeddings.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::corpus::{Corpus, Vocab};
use crate::embedding::{train_softmax, SoftmaxMethod, TrainConfig};
use crate::error::{Error, Result};
use crate::vectors::{cosine, read_vectors, write_vectors, ColumnMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChordMethod {
    Cbow,
    SkipGram,
}

impl FromStr for ChordMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cbow" => Ok(ChordMethod::Cbow),
            "skipgram" | "skip-gram" | "sg" => Ok(ChordMethod::SkipGram),
            _ => Err(Error::InvalidParameter(format!("unknown chord method {s:?}"))),
        }
    }
}

impl fmt::Display for ChordMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChordMethod::Cbow => "cbow",
            ChordMethod::SkipGram => "skipgram",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChordTrainConfig {
    pub method: ChordMethod,
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub lr: f64,
    pub lr_min: f64,
    pub seed: u64,
}

impl Default for ChordTrainConfig {
    fn default() -> Self {
        ChordTrainConfig {
            method: ChordMethod::Cbow,
            dim: 32,
            window: 4,
            epochs: 50,
            lr: 0.025,
            lr_min: 0.0001,
            seed: 42,
        }
    }
}

/// One vector per vocabulary token.
#[derive(Debug, Clone, PartialEq)]
pub struct ChordEmbeddings {
    vocab: Vocab,
    vectors: ColumnMatrix,
}

impl ChordEmbeddings {
    pub fn new(vocab: Vocab, vectors: ColumnMatrix) -> Result<Self> {
        if vocab.len() != vectors.cols() {
            return Err(Error::InvalidParameter(format!(
                "{} tokens but {} vectors",
                vocab.len(),
                vectors.cols()
            )));
        }
        if !vectors.is_finite() {
            return Err(Error::InvalidParameter("non-finite chord vector".into()));
        }
        Ok(ChordEmbeddings { vocab, vectors })
    }

    /// Builds embeddings from explicit `(token, vector)` pairs.
    pub fn from_pairs<S: Into<String>>(pairs: Vec<(S, Vec<f64>)>) -> Result<Self> {
        let dim = pairs.first().map_or(0, |(_, v)| v.len());
        let mut named: Vec<(String, Vec<f64>)> =
            pairs.into_iter().map(|(t, v)| (t.into(), v)).collect();
        named.sort_by(|a, b| a.0.cmp(&b.0));
        let vocab = Vocab::from_tokens(named.iter().map(|(t, _)| t.clone()));
        if vocab.len() != named.len() {
            return Err(Error::InvalidParameter("duplicate chord token".into()));
        }
        let columns: Vec<Vec<f64>> = named.into_iter().map(|(_, v)| v).collect();
        let vectors = ColumnMatrix::from_columns(dim, &columns)
            .ok_or_else(|| Error::InvalidParameter("chord vectors differ in length".into()))?;
        Self::new(vocab, vectors)
    }

    pub fn dim(&self) -> usize {
        self.vectors.dim()
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn vector(&self, token: &str) -> Result<&[f64]> {
        let i = self
            .vocab
            .index_of(token)
            .ok_or_else(|| Error::UnknownToken(token.to_string()))?;
        Ok(self.vectors.column(i))
    }

    pub fn vectors(&self) -> &ColumnMatrix {
        &self.vectors
    }

    /// Cosine similarity between two chord tokens.
    pub fn similarity(&self, a: &str, b: &str) -> Result<f64> {
        Ok(cosine(self.vector(a)?, self.vector(b)?))
    }

    /// Dense `|vocab|²` cosine table, row-major by vocabulary index.
    pub fn similarity_table(&self) -> Vec<f64> {
        let n = self.vocab.len();
        let mut table = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let s = self.vectors.cosine_cols(i, j);
                table[i * n + j] = s;
                table[j * n + i] = s;
            }
        }
        table
    }

    pub fn to_text(&self) -> String {
        write_vectors(self.vocab.tokens().iter().cloned(), &self.vectors)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (labels, matrix) = read_vectors(text)?;
        let pairs = labels
            .into_iter()
            .enumerate()
            .map(|(i, t)| (t, matrix.column(i).to_vec()))
            .collect();
        Self::from_pairs(pairs)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Chord sequences of every record, as vocabulary indices.
pub fn chord_sentences(corpus: &Corpus) -> Vec<Vec<usize>> {
    corpus
        .records()
        .iter()
        // Tokens come from the corpus itself, so encoding cannot fail.
        .map(|r| corpus.vocab().encode(&r.chords).expect("corpus token"))
        .collect()
}

/// Trains chord embeddings, returning them along with the epoch-mean losses.
pub fn train_chord_embeddings_with_loss(
    corpus: &Corpus,
    cfg: &ChordTrainConfig,
) -> Result<(ChordEmbeddings, Vec<f64>)> {
    if corpus.vocab().len() < 2 {
        return Err(Error::InvalidParameter(
            "chord vocabulary needs at least two tokens".into(),
        ));
    }
    let train_cfg = TrainConfig {
        dim: cfg.dim,
        epochs: cfg.epochs,
        lr: cfg.lr,
        lr_min: cfg.lr_min.min(cfg.lr),
        negatives: 1,
        window: cfg.window,
        seed: cfg.seed,
    };
    let method = match cfg.method {
        ChordMethod::Cbow => SoftmaxMethod::Cbow,
        ChordMethod::SkipGram => SoftmaxMethod::SkipGram,
    };
    let trained = train_softmax(
        &chord_sentences(corpus),
        corpus.vocab().len(),
        method,
        &train_cfg,
    )?;
    let emb = ChordEmbeddings::new(corpus.vocab().clone(), trained.matrix)?;
    Ok((emb, trained.epoch_loss))
}

pub fn train_chord_embeddings(corpus: &Corpus, cfg: &ChordTrainConfig) -> Result<ChordEmbeddings> {
    train_chord_embeddings_with_loss(corpus, cfg).map(|(e, _)| e)
}
