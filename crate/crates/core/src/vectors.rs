//! Dense column storage shared by chord and node embeddings.

use rand::Rng;

use crate::error::{Error, Result};

/// A `dim × cols` matrix stored column-major; column `i` is one embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMatrix {
    dim: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ColumnMatrix {
    pub fn zeros(dim: usize, cols: usize) -> Self {
        ColumnMatrix {
            dim,
            cols,
            data: vec![0.0; dim * cols],
        }
    }

    /// Entries drawn uniformly from `[-0.5/dim, 0.5/dim]`.
    pub fn random<R: Rng>(dim: usize, cols: usize, rng: &mut R) -> Self {
        let half = 0.5 / dim as f64;
        let data = (0..dim * cols)
            .map(|_| rng.random_range(-half..=half))
            .collect();
        ColumnMatrix { dim, cols, data }
    }

    /// Builds from explicit columns, all of which must have length `dim`.
    pub fn from_columns(dim: usize, columns: &[Vec<f64>]) -> Option<Self> {
        if columns.iter().any(|c| c.len() != dim) {
            return None;
        }
        Some(ColumnMatrix {
            dim,
            cols: columns.len(),
            data: columns.concat(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn dot_cols(&self, a: usize, b: usize) -> f64 {
        dot(self.column(a), self.column(b))
    }

    pub fn cosine_cols(&self, a: usize, b: usize) -> f64 {
        cosine(self.column(a), self.column(b))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    // Four independent partial sums let the compiler vectorize the loop.
    let mut lanes = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            lanes[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity; 0 when either vector is zero. Clamped to `[-1, 1]`.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        return 0.0;
    }
    (dot(a, b) / denom).clamp(-1.0, 1.0)
}

/// `y += alpha * x`
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Text form: a `<count> <dim>` line, then `<label> <v1> ... <vd>` per column.
/// Values use the shortest representation that parses back to the same bits.
pub fn write_vectors<I>(labels: I, m: &ColumnMatrix) -> String
where
    I: IntoIterator<Item = String>,
{
    let mut out = format!("{} {}\n", m.cols(), m.dim());
    for (i, label) in labels.into_iter().enumerate() {
        out.push_str(&label);
        for v in m.column(i) {
            out.push(' ');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

/// Parses [`write_vectors`] output. Lines starting with `#` are skipped.
pub fn read_vectors(text: &str) -> Result<(Vec<String>, ColumnMatrix)> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let bad = |line: usize, message: String| Error::Malformed {
        line: line + 1,
        message,
    };
    let (hline, header) = lines.next().ok_or(Error::Malformed {
        line: 1,
        message: "missing size header".into(),
    })?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad(hline, format!("bad size header {header:?}")))?;
    let [count, dim] = dims[..] else {
        return Err(bad(hline, format!("bad size header {header:?}")));
    };
    let mut labels = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * dim);
    for (ln, line) in lines {
        let mut parts = line.split_whitespace();
        let label = parts.next().unwrap_or_default().to_string();
        let before = data.len();
        for p in parts {
            let v: f64 = p
                .parse()
                .map_err(|_| bad(ln, format!("bad number {p:?}")))?;
            if !v.is_finite() {
                return Err(bad(ln, format!("non-finite value {p:?}")));
            }
            data.push(v);
        }
        if data.len() - before != dim {
            return Err(bad(ln, format!("expected {dim} values for {label:?}")));
        }
        labels.push(label);
    }
    if labels.len() != count {
        return Err(bad(
            hline,
            format!("header declares {count} vectors, found {}", labels.len()),
        ));
    }
    Ok((labels, ColumnMatrix { dim, cols: count, data }))
}
