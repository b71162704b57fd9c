//! Independent oracles shared by the integration suites and the acceptance run.
#![allow(dead_code)]

use std::collections::HashMap;

use chorale_graph::chord2vec::ChordEmbeddings;
use chorale_graph::classify::{init_state, LabelState};
use chorale_graph::corpus::{ChoraleRecord, Corpus, Mode};
use chorale_graph::embedding::{
    cbow_loss_and_grads, sg_loss_and_grads, sgns_loss_and_grads, Gradients,
};
use chorale_graph::embedding::{top_k_similar, train_model, Method, TrainConfig};
use chorale_graph::graph::{sequence_similarity, ChoraleGraph, Edge, GraphNode};
use chorale_graph::vectors::ColumnMatrix;
use chorale_graph::walk::{generate_walks, step_distribution, WalkConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn graph(n: usize, edges: &[(usize, usize, f64)]) -> ChoraleGraph {
    graph_with_modes(&vec![Mode::Major; n], edges)
}

pub fn graph_with_modes(modes: &[Mode], edges: &[(usize, usize, f64)]) -> ChoraleGraph {
    let nodes = modes
        .iter()
        .enumerate()
        .map(|(i, &mode)| GraphNode {
            id: format!("n{i}"),
            mode,
        })
        .collect();
    let edges = edges
        .iter()
        .map(|&(u, v, weight)| Edge { u, v, weight })
        .collect();
    ChoraleGraph::new(nodes, edges).expect("valid test graph")
}

/// Triangle 0-1-2 with a pendant 3 hanging off 1, non-uniform weights.
pub fn triangle_pendant() -> ChoraleGraph {
    graph(4, &[(0, 1, 1.0), (0, 2, 2.0), (1, 2, 1.5), (1, 3, 0.5)])
}

/// Two `size`-cliques joined by a single bridge edge.
pub fn two_cliques(size: usize) -> ChoraleGraph {
    let mut edges = Vec::new();
    for base in [0, size] {
        for i in 0..size {
            for j in i + 1..size {
                edges.push((base + i, base + j, 1.0));
            }
        }
    }
    edges.push((size - 1, size, 1.0));
    graph(2 * size, &edges)
}

fn random_matrix(rng: &mut ChaCha8Rng, dim: usize, cols: usize) -> ColumnMatrix {
    let columns: Vec<Vec<f64>> = (0..cols)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    ColumnMatrix::from_columns(dim, &columns).unwrap()
}

/// Worst relative error `‖a − n‖ / (‖a‖ + ‖n‖)` and worst absolute entry
/// error between analytic and central-difference gradients over `instances`
/// random problems with `d ≤ 8`, `|V| ≤ 12`. Roles may alias.
pub fn gradient_check(method: Method, instances: usize, seed: u64) -> (f64, f64) {
    const H: f64 = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_rel = 0.0f64;
    let mut worst_abs = 0.0f64;
    for _ in 0..instances {
        let n = rng.random_range(2..=12);
        let d = rng.random_range(2..=8);
        let z = random_matrix(&mut rng, d, n);
        let t = rng.random_range(0..n);
        let c = rng.random_range(0..n);
        let k = rng.random_range(1..=5);
        let extra: Vec<usize> = (0..k).map(|_| rng.random_range(0..n)).collect();
        let eval = |m: &ColumnMatrix| -> (f64, Gradients) {
            match method {
                Method::Sgns => sgns_loss_and_grads(m, t, c, &extra),
                Method::Sg => sg_loss_and_grads(m, t, c),
                Method::Cbow => cbow_loss_and_grads(m, t, &extra),
            }
        };
        let (_, grads) = eval(&z);
        let (mut diff2, mut a2, mut n2) = (0.0, 0.0, 0.0);
        for col in 0..n {
            for r in 0..d {
                let mut plus = z.clone();
                plus.column_mut(col)[r] += H;
                let mut minus = z.clone();
                minus.column_mut(col)[r] -= H;
                let numeric = (eval(&plus).0 - eval(&minus).0) / (2.0 * H);
                let analytic = grads.column(col).map_or(0.0, |g| g[r]);
                diff2 += (analytic - numeric).powi(2);
                a2 += analytic * analytic;
                n2 += numeric * numeric;
                worst_abs = worst_abs.max((analytic - numeric).abs());
            }
        }
        let denom = a2.sqrt() + n2.sqrt();
        if denom > 0.0 {
            worst_rel = worst_rel.max(diff2.sqrt() / denom);
        }
    }
    (worst_rel, worst_abs)
}

fn brute_cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for i in 0..a.len() {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    ab / (aa.sqrt() * bb.sqrt())
}

/// Double loop over 1-based positions, written independently of the library.
pub fn brute_similarity(u: &[String], v: &[String], vectors: &HashMap<String, Vec<f64>>) -> f64 {
    let mut s = 0.0;
    for i in 1..=u.len() {
        for j in 1..=v.len() {
            let w = (-((i as f64) - (j as f64)).abs()).exp();
            s += brute_cosine(&vectors[&u[i - 1]], &vectors[&v[j - 1]]) * w;
        }
    }
    s
}

pub fn random_embeddings(
    rng: &mut ChaCha8Rng,
    tokens: usize,
    dim: usize,
) -> (ChordEmbeddings, HashMap<String, Vec<f64>>) {
    let vectors: HashMap<String, Vec<f64>> = (0..tokens)
        .map(|i| {
            let v = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            (format!("c{i}"), v)
        })
        .collect();
    let emb = ChordEmbeddings::from_pairs(vectors.clone().into_iter().collect()).unwrap();
    (emb, vectors)
}

/// Worst deviation from the brute-force double sum over `pairs` random
/// segment pairs of up to six tokens, and whether every pair was exactly
/// symmetric.
pub fn similarity_oracle(pairs: usize, seed: u64) -> (f64, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (emb, vectors) = random_embeddings(&mut rng, 8, 5);
    let mut worst = 0.0f64;
    let mut symmetric = true;
    for _ in 0..pairs {
        let n = rng.random_range(1..=6);
        let mut seq = || -> Vec<String> {
            (0..n)
                .map(|_| format!("c{}", rng.random_range(0..8)))
                .collect()
        };
        let (u, v) = (seq(), seq());
        let s = sequence_similarity(&u, &v, &emb).unwrap();
        worst = worst.max((s - brute_similarity(&u, &v, &vectors)).abs());
        symmetric &= s.to_bits() == sequence_similarity(&v, &u, &emb).unwrap().to_bits();
    }
    (worst, symmetric)
}

/// Largest absolute gap between empirical next-step frequencies and
/// `step_distribution` over every `(prev, cur)` state seen in 10^5 sampled
/// second-order steps on the triangle-plus-pendant graph.
pub fn walk_oracle(p: f64, q: f64, seed: u64) -> f64 {
    let g = triangle_pendant();
    // 4 start nodes × 3125 walks × 8 second-order steps = 10^5 steps.
    let cfg = WalkConfig {
        walks_per_node: 3125,
        walk_length: 10,
        p,
        q,
        seed,
    };
    let walks = generate_walks(&g, &cfg).unwrap();
    let mut counts: HashMap<(usize, usize), HashMap<usize, usize>> = HashMap::new();
    let mut steps = 0;
    for w in &walks.walks {
        for t in 2..w.len() {
            *counts
                .entry((w[t - 2], w[t - 1]))
                .or_default()
                .entry(w[t])
                .or_default() += 1;
            steps += 1;
        }
    }
    assert_eq!(steps, 100_000);
    let mut worst = 0.0f64;
    for (&(prev, cur), next) in &counts {
        let total: usize = next.values().sum();
        for (w, prob) in step_distribution(&g, prev, cur, p, q).unwrap() {
            let freq = *next.get(&w).unwrap_or(&0) as f64 / total as f64;
            worst = worst.max((freq - prob).abs());
        }
    }
    worst
}

/// Fraction of nodes in a two-clique graph whose nearest embedding
/// neighbour lies in their own clique.
pub fn clique_fraction(method: Method, seed: u64) -> f64 {
    let size = 6;
    let g = two_cliques(size);
    let walks = generate_walks(
        &g,
        &WalkConfig {
            seed,
            ..WalkConfig::default()
        },
    )
    .unwrap();
    let cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let z = train_model(method, &g, &walks, &cfg).unwrap();
    let hits = (0..g.node_count())
        .filter(|&u| {
            let nearest = top_k_similar(&z, u, 1).unwrap()[0].0;
            (nearest < size) == (u < size)
        })
        .count();
    hits as f64 / g.node_count() as f64
}

/// [`clique_fraction`] for seeds `0..seeds`, one thread per seed.
pub fn clique_fractions(method: Method, seeds: u64) -> Vec<f64> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..seeds)
            .map(|s| scope.spawn(move || clique_fraction(method, s)))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

/// `D⁻¹W · values` from an explicit dense matrix, kept only on unobserved rows.
pub fn dense_propagate(g: &ChoraleGraph, s: &LabelState) -> Vec<f64> {
    let n = g.node_count();
    let mut w = vec![vec![0.0; n]; n];
    for e in g.edges() {
        w[e.u][e.v] = e.weight;
        w[e.v][e.u] = e.weight;
    }
    (0..n)
        .map(|u| {
            if s.observed()[u] {
                return s.values()[u];
            }
            let degree: f64 = w[u].iter().sum();
            let mut acc = 0.0;
            for v in 0..n {
                acc += w[u][v] / degree * s.values()[v];
            }
            acc
        })
        .collect()
}

/// Records `R01..` with random chord sequences of length `len` over `c0..c{tokens-1}`.
pub fn random_corpus(rng: &mut ChaCha8Rng, records: usize, tokens: usize, len: usize) -> Corpus {
    let recs = (0..records)
        .map(|i| {
            let chords: Vec<String> = (0..len)
                .map(|_| format!("c{}", rng.random_range(0..tokens)))
                .collect();
            ChoraleRecord {
                id: format!("R{:02}", i + 1),
                mode: if rng.random_bool(0.5) { Mode::Major } else { Mode::Minor },
                cadence: chords[len - 3..].to_vec(),
                chords,
            }
        })
        .collect();
    Corpus::from_records(recs).unwrap()
}

/// Connected random weighted graph on `n` nodes with random modes.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, density: f64) -> ChoraleGraph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v, rng.random_range(0.1..5.0)));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(density) && !edges.iter().any(|e: &(usize, usize, f64)| e.0 == u && e.1 == v) {
                edges.push((u, v, rng.random_range(0.1..5.0)));
            }
        }
    }
    let modes: Vec<Mode> = (0..n)
        .map(|_| if rng.random_bool(0.6) { Mode::Major } else { Mode::Minor })
        .collect();
    graph_with_modes(&modes, &edges)
}

pub fn random_state(rng: &mut ChaCha8Rng, g: &ChoraleGraph) -> LabelState {
    let mut s = init_state(g, 0.5, rng).unwrap();
    // Give hidden nodes arbitrary intermediate values as after a few sweeps.
    let values: Vec<f64> = s
        .values()
        .iter()
        .zip(s.observed())
        .map(|(&v, &o)| if o { v } else { rng.random_range(0.0..=1.0) })
        .collect();
    s = LabelState::new(values, s.observed().to_vec(), s.truth().to_vec()).unwrap();
    s
}
