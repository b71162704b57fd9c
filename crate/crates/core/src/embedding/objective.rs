//! Per-sample losses and their analytic gradients.
//!
//! All three objectives use one shared matrix `Z`; a column may play target,
//! context and negative roles at once, so gradients are accumulated per
//! column rather than per role. For a score `x = z_a · z_b` with upstream
//! derivative `g`, column `a` receives `g * z_b` and column `b` receives
//! `g * z_a` (both land on `a` when `a == b`).

use crate::vectors::{axpy, dot, ColumnMatrix};

/// Gradient buffer over the columns of a [`ColumnMatrix`], tracking which
/// columns were touched so resets stay proportional to the work done.
#[derive(Debug, Clone)]
pub struct Gradients {
    buf: ColumnMatrix,
    touched: Vec<usize>,
    mark: Vec<bool>,
}

impl Gradients {
    pub fn new(dim: usize, cols: usize) -> Self {
        Gradients {
            buf: ColumnMatrix::zeros(dim, cols),
            touched: Vec::new(),
            mark: vec![false; cols],
        }
    }

    pub fn for_matrix(z: &ColumnMatrix) -> Self {
        Self::new(z.dim(), z.cols())
    }

    pub fn reset(&mut self) {
        for &c in &self.touched {
            self.buf.column_mut(c).fill(0.0);
            self.mark[c] = false;
        }
        self.touched.clear();
    }

    fn add(&mut self, col: usize, alpha: f64, x: &[f64]) {
        if !self.mark[col] {
            self.mark[col] = true;
            self.touched.push(col);
        }
        axpy(alpha, x, self.buf.column_mut(col));
    }

    /// Gradient with respect to column `col`, or `None` if the loss does not depend on it.
    pub fn column(&self, col: usize) -> Option<&[f64]> {
        self.mark[col].then(|| self.buf.column(col))
    }

    pub fn touched(&self) -> &[usize] {
        &self.touched
    }

    /// `z -= lr * grad` on every touched column.
    pub fn apply(&self, z: &mut ColumnMatrix, lr: f64) {
        for &c in &self.touched {
            axpy(-lr, self.buf.column(c), z.column_mut(c));
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log σ(x)`, stable for large |x|.
fn log_sigmoid(x: f64) -> f64 {
    -((-x).max(0.0) + (-x.abs()).exp().ln_1p())
}

/// Softmax of `scores` in place; returns log-sum-exp.
fn softmax_in_place(scores: &mut [f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
    max + sum.ln()
}

/// `P(· | z_u)` over all columns, normalized with max-shifted exponentials.
pub fn softmax_row(z: &ColumnMatrix, u: usize) -> Vec<f64> {
    let zu = z.column(u);
    let mut scores: Vec<f64> = (0..z.cols()).map(|n| dot(zu, z.column(n))).collect();
    softmax_in_place(&mut scores);
    scores
}

/// `P(w | z_u) = exp(z_u·z_w) / Σ_n exp(z_u·z_n)`.
pub fn softmax_prob(z: &ColumnMatrix, u: usize, w: usize) -> f64 {
    softmax_row(z, u)[w]
}

/// Negative-sampling loss `−log σ(z_u·z_w) − Σ_i log σ(−z_u·z_{n_i})`,
/// accumulating its gradient into `grads`.
pub fn sgns_accumulate(
    z: &ColumnMatrix,
    target: usize,
    context: usize,
    negatives: &[usize],
    grads: &mut Gradients,
) -> f64 {
    let zu = z.column(target);
    let x = dot(zu, z.column(context));
    let mut loss = -log_sigmoid(x);
    let g = sigmoid(x) - 1.0;
    grads.add(target, g, z.column(context));
    grads.add(context, g, zu);
    for &n in negatives {
        let x = dot(zu, z.column(n));
        loss -= log_sigmoid(-x);
        let g = sigmoid(x);
        grads.add(target, g, z.column(n));
        grads.add(n, g, zu);
    }
    loss
}

/// Full-softmax skip-gram loss `−log P(context | z_target)`.
pub fn sg_accumulate(
    z: &ColumnMatrix,
    target: usize,
    context: usize,
    grads: &mut Gradients,
) -> f64 {
    let zu = z.column(target);
    let mut p: Vec<f64> = (0..z.cols()).map(|n| dot(zu, z.column(n))).collect();
    let x_c = p[context];
    let lse = softmax_in_place(&mut p);
    p[context] -= 1.0;
    let mut dt = vec![0.0; z.dim()];
    for (n, &a) in p.iter().enumerate() {
        axpy(a, z.column(n), &mut dt);
        grads.add(n, a, zu);
    }
    grads.add(target, 1.0, &dt);
    lse - x_c
}

/// Full-softmax CBOW loss `−log P(target | h)` with `h` the mean of the
/// context columns (repeated contexts count with multiplicity).
///
/// `contexts` must be non-empty.
pub fn cbow_accumulate(
    z: &ColumnMatrix,
    target: usize,
    contexts: &[usize],
    grads: &mut Gradients,
) -> f64 {
    debug_assert!(!contexts.is_empty());
    let dim = z.dim();
    let inv = 1.0 / contexts.len() as f64;
    let mut h = vec![0.0; dim];
    for &c in contexts {
        axpy(inv, z.column(c), &mut h);
    }
    let mut p: Vec<f64> = (0..z.cols()).map(|n| dot(&h, z.column(n))).collect();
    let x_t = p[target];
    let lse = softmax_in_place(&mut p);
    p[target] -= 1.0;
    let mut dh = vec![0.0; dim];
    for (n, &a) in p.iter().enumerate() {
        grads.add(n, a, &h);
        axpy(a, z.column(n), &mut dh);
    }
    for &c in contexts {
        grads.add(c, inv, &dh);
    }
    lse - x_t
}

/// Loss and gradients of one SGNS sample.
pub fn sgns_loss_and_grads(
    z: &ColumnMatrix,
    target: usize,
    context: usize,
    negatives: &[usize],
) -> (f64, Gradients) {
    let mut g = Gradients::for_matrix(z);
    let loss = sgns_accumulate(z, target, context, negatives, &mut g);
    (loss, g)
}

/// Loss and gradients of one skip-gram sample.
pub fn sg_loss_and_grads(z: &ColumnMatrix, target: usize, context: usize) -> (f64, Gradients) {
    let mut g = Gradients::for_matrix(z);
    let loss = sg_accumulate(z, target, context, &mut g);
    (loss, g)
}

/// Loss and gradients of one CBOW sample.
pub fn cbow_loss_and_grads(z: &ColumnMatrix, target: usize, contexts: &[usize]) -> (f64, Gradients) {
    let mut g = Gradients::for_matrix(z);
    let loss = cbow_accumulate(z, target, contexts, &mut g);
    (loss, g)
}
