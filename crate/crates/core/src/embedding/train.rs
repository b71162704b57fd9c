//! SGD trainers over walk (or sentence) corpora.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::objective::{cbow_accumulate, sg_accumulate, sgns_accumulate, Gradients};
use super::TrainConfig;
use crate::error::{Error, Result};
use crate::vectors::ColumnMatrix;
use crate::walk::{context_window, NegativeSampler, RestrictedSampler, WalkSet};

/// Full-softmax variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoftmaxMethod {
    SkipGram,
    Cbow,
}

/// A trained matrix with the epoch-mean loss recorded after every epoch.
#[derive(Debug, Clone)]
pub struct Trained {
    pub matrix: ColumnMatrix,
    pub epoch_loss: Vec<f64>,
}

fn epoch_lr(cfg: &TrainConfig, epoch: usize) -> f64 {
    if cfg.epochs <= 1 {
        return cfg.lr;
    }
    let frac = epoch as f64 / (cfg.epochs - 1) as f64;
    cfg.lr + (cfg.lr_min - cfg.lr) * frac
}

fn check_epoch(epoch: usize, total: f64, count: usize) -> Result<f64> {
    let mean = total / count as f64;
    if !mean.is_finite() {
        return Err(Error::Diverged { epoch, loss: mean });
    }
    Ok(mean)
}

fn validate_sequences(sequences: &[Vec<usize>], num_nodes: usize) -> Result<()> {
    if let Some(bad) = sequences.iter().flatten().find(|&&n| n >= num_nodes) {
        return Err(Error::UnknownNode(bad.to_string()));
    }
    Ok(())
}

/// Trains skip-gram or CBOW with a full softmax over `num_nodes` columns.
///
/// Each sequence contributes, for every position `t`, the positions within
/// `cfg.window` of `t` as context. Skip-gram takes one step per
/// (target, context) pair; CBOW takes one step per target against the
/// context mean.
pub fn train_softmax(
    sequences: &[Vec<usize>],
    num_nodes: usize,
    method: SoftmaxMethod,
    cfg: &TrainConfig,
) -> Result<Trained> {
    cfg.validate()?;
    validate_sequences(sequences, num_nodes)?;

    let windows: Vec<(usize, Vec<usize>)> = sequences
        .iter()
        .flat_map(|seq| {
            (0..seq.len()).filter_map(move |t| {
                let ctx: Vec<usize> = context_window(seq.len(), t, cfg.window)
                    .map(|i| seq[i])
                    .collect();
                (!ctx.is_empty()).then(|| (seq[t], ctx))
            })
        })
        .collect();
    let pairs: Vec<(usize, usize)> = match method {
        SoftmaxMethod::SkipGram => windows
            .iter()
            .flat_map(|(t, ctx)| ctx.iter().map(move |&c| (*t, c)))
            .collect(),
        SoftmaxMethod::Cbow => Vec::new(),
    };
    let count = match method {
        SoftmaxMethod::SkipGram => pairs.len(),
        SoftmaxMethod::Cbow => windows.len(),
    };
    if count == 0 {
        return Err(Error::InvalidParameter(
            "no training samples: sequences are too short".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut z = ColumnMatrix::random(cfg.dim, num_nodes, &mut rng);
    let mut grads = Gradients::for_matrix(&z);
    let mut order: Vec<usize> = (0..count).collect();
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lr = epoch_lr(cfg, epoch);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            grads.reset();
            total += match method {
                SoftmaxMethod::SkipGram => {
                    let (t, c) = pairs[i];
                    sg_accumulate(&z, t, c, &mut grads)
                }
                SoftmaxMethod::Cbow => {
                    let (t, ref ctx) = windows[i];
                    cbow_accumulate(&z, t, ctx, &mut grads)
                }
            };
            grads.apply(&mut z, lr);
        }
        epoch_loss.push(check_epoch(epoch, total, count)?);
    }
    Ok(Trained {
        matrix: z,
        epoch_loss,
    })
}

/// Trains skip-gram with negative sampling.
///
/// Positive pairs come from within-window co-occurrence in each walk.
/// Every positive pair draws `cfg.negatives` fresh negatives per epoch from
/// the degree-biased distribution restricted to nodes off the pair's walk;
/// when a walk covers every other node the restriction falls back to
/// excluding only the target and the context.
pub fn train_sgns(
    walks: &WalkSet,
    sampler: &NegativeSampler,
    cfg: &TrainConfig,
) -> Result<Trained> {
    cfg.validate()?;
    let num_nodes = sampler.num_nodes();
    validate_sequences(&walks.walks, num_nodes)?;

    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    for (w, walk) in walks.walks.iter().enumerate() {
        for t in 0..walk.len() {
            for i in context_window(walk.len(), t, cfg.window) {
                pairs.push((walk[t], walk[i], w));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("no positive pairs in walk set".into()));
    }

    let per_walk: Vec<Option<RestrictedSampler>> = walks
        .walks
        .iter()
        .map(|walk| sampler.restricted(walk).ok())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut z = ColumnMatrix::random(cfg.dim, num_nodes, &mut rng);
    let mut grads = Gradients::for_matrix(&z);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut negatives = Vec::with_capacity(cfg.negatives);
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lr = epoch_lr(cfg, epoch);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let (target, context, w) = pairs[i];
            negatives.clear();
            match &per_walk[w] {
                Some(r) => r.fill(cfg.negatives, &mut rng, &mut negatives),
                None => sampler
                    .restricted(&[target, context])
                    .map_err(|_| Error::NoNegativeCandidates { target })?
                    .fill(cfg.negatives, &mut rng, &mut negatives),
            }
            grads.reset();
            total += sgns_accumulate(&z, target, context, &negatives, &mut grads);
            grads.apply(&mut z, lr);
        }
        epoch_loss.push(check_epoch(epoch, total, pairs.len())?);
    }
    Ok(Trained {
        matrix: z,
        epoch_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lr_decays_linearly_to_floor() {
        let cfg = TrainConfig {
            epochs: 5,
            lr: 0.1,
            lr_min: 0.001,
            ..TrainConfig::default()
        };
        assert_eq!(epoch_lr(&cfg, 0), 0.1);
        assert!((epoch_lr(&cfg, 4) - 0.001).abs() < 1e-15);
        assert!(epoch_lr(&cfg, 2) < 0.1 && epoch_lr(&cfg, 2) > 0.001);
    }

    #[test]
    fn out_of_range_node_rejected() {
        let cfg = TrainConfig::default();
        let err = train_softmax(&[vec![0, 5]], 3, SoftmaxMethod::SkipGram, &cfg).unwrap_err();
        assert!(matches!(err, Error::UnknownNode(_)));
    }

    #[test]
    fn single_token_sequences_have_no_samples() {
        let cfg = TrainConfig::default();
        assert!(train_softmax(&[vec![0], vec![1]], 2, SoftmaxMethod::Cbow, &cfg).is_err());
    }

    #[test]
    fn huge_learning_rate_reports_divergence() {
        let cfg = TrainConfig {
            dim: 4,
            epochs: 50,
            lr: 1e6,
            lr_min: 1e6,
            window: 2,
            ..TrainConfig::default()
        };
        let seqs = vec![vec![0, 1, 2, 0, 1, 2], vec![2, 1, 0, 2, 1, 0]];
        match train_softmax(&seqs, 3, SoftmaxMethod::SkipGram, &cfg) {
            Err(Error::Diverged { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
