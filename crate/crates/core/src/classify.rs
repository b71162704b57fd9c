//! Collective classification of binary node labels by weighted neighbour
//! averaging, and the missing-label experiment grid.
//!
//! Label values live in `[0, 1]`: `0` is minor, `1` is major and `0.5`
//! means unlabeled. Observed labels are clamped. Each iteration replaces
//! every unobserved value by the weighted mean of its neighbours' previous
//! values (a synchronous sweep), then thresholds.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{ChoraleGraph, GraphStats};

pub const UNLABELED: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct LabelState {
    values: Vec<f64>,
    observed: Vec<bool>,
    truth: Vec<u8>,
}

impl LabelState {
    pub fn new(values: Vec<f64>, observed: Vec<bool>, truth: Vec<u8>) -> Result<Self> {
        if values.len() != observed.len() || values.len() != truth.len() {
            return Err(Error::InvalidParameter("label state vectors differ in length".into()));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter("label values must lie in [0, 1]".into()));
        }
        if truth.iter().any(|&t| t > 1) {
            return Err(Error::InvalidParameter("ground truth must be 0 or 1".into()));
        }
        if values
            .iter()
            .zip(&observed)
            .any(|(&v, &o)| o && v != 0.0 && v != 1.0)
        {
            return Err(Error::InvalidParameter("observed labels must be 0 or 1".into()));
        }
        Ok(LabelState {
            values,
            observed,
            truth,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn observed(&self) -> &[bool] {
        &self.observed
    }

    pub fn truth(&self) -> &[u8] {
        &self.truth
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Ground-truth class per graph node (minor = 0, major = 1).
pub fn ground_truth(g: &ChoraleGraph) -> Vec<u8> {
    g.nodes().iter().map(|n| n.mode.label()).collect()
}

/// Hides `⌊missing_rate · |V|⌋` uniformly chosen labels.
pub fn init_state<R: Rng>(g: &ChoraleGraph, missing_rate: f64, rng: &mut R) -> Result<LabelState> {
    if !(0.0..1.0).contains(&missing_rate) {
        return Err(Error::InvalidParameter(format!(
            "missing rate {missing_rate} outside [0, 1)"
        )));
    }
    let truth = ground_truth(g);
    let n = truth.len();
    let hidden = (missing_rate * n as f64).floor() as usize;
    let mut observed = vec![true; n];
    for i in sample(rng, n, hidden) {
        observed[i] = false;
    }
    let values = truth
        .iter()
        .zip(&observed)
        .map(|(&t, &o)| if o { t as f64 } else { UNLABELED })
        .collect();
    LabelState::new(values, observed, truth)
}

/// One synchronous sweep: each unobserved node takes the `W`-weighted mean
/// of its neighbours' current values.
pub fn propagate_step(g: &ChoraleGraph, s: &LabelState) -> Result<LabelState> {
    if g.node_count() != s.len() {
        return Err(Error::InvalidParameter("label state does not match graph".into()));
    }
    let mut values = s.values.clone();
    for (u, value) in values.iter_mut().enumerate() {
        if s.observed[u] {
            continue;
        }
        let mut wsum = 0.0;
        let mut acc = 0.0;
        for &(v, w) in g.neighbors(u) {
            wsum += w;
            acc += w * s.values[v];
        }
        // Negated so that a NaN sum is rejected too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(wsum > 0.0) {
            return Err(Error::NonPositiveWeightSum { node: u, sum: wsum });
        }
        // Rounding can push a convex combination a hair outside [0, 1].
        *value = (acc / wsum).clamp(0.0, 1.0);
    }
    Ok(LabelState {
        values,
        observed: s.observed.clone(),
        truth: s.truth.clone(),
    })
}

/// Snaps values strictly above `class1_thr` to 1 and strictly below
/// `class0_thr` to 0.
pub fn threshold(s: &LabelState, class1_thr: f64, class0_thr: f64) -> Result<LabelState> {
    if class0_thr > class1_thr {
        return Err(Error::InvalidParameter(format!(
            "class 0 threshold {class0_thr} exceeds class 1 threshold {class1_thr}"
        )));
    }
    let values = s
        .values
        .iter()
        .map(|&v| {
            if v > class1_thr {
                1.0
            } else if v < class0_thr {
                0.0
            } else {
                v
            }
        })
        .collect();
    Ok(LabelState {
        values,
        observed: s.observed.clone(),
        truth: s.truth.clone(),
    })
}

/// Fraction of all nodes whose value equals their true class exactly.
pub fn accuracy(s: &LabelState) -> f64 {
    if s.is_empty() {
        return 0.0;
    }
    let correct = s
        .values
        .iter()
        .zip(&s.truth)
        .filter(|&(&v, &t)| v == t as f64)
        .count();
    correct as f64 / s.len() as f64
}

/// What carries over between iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelCarry {
    /// Continuous values propagate; thresholding is applied to a copy that
    /// is only used for scoring.
    #[default]
    Soft,
    /// Thresholded values replace the state, so snapped nodes propagate as
    /// hard 0/1 labels.
    Hard,
}

impl std::str::FromStr for LabelCarry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft" => Ok(LabelCarry::Soft),
            "hard" => Ok(LabelCarry::Hard),
            _ => Err(Error::InvalidParameter(format!("unknown label carry {s:?}"))),
        }
    }
}

impl std::fmt::Display for LabelCarry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LabelCarry::Soft => "soft",
            LabelCarry::Hard => "hard",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyConfig {
    pub iterations: usize,
    pub class1_thr: f64,
    pub class0_thr: f64,
    pub carry: LabelCarry,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            iterations: 5,
            class1_thr: 0.5,
            class0_thr: 0.5,
            carry: LabelCarry::Soft,
        }
    }
}

/// A classification run: accuracy before any sweep and after each one,
/// plus the final thresholded state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub accuracy: Vec<f64>,
    pub final_state: LabelState,
}

pub fn classify(g: &ChoraleGraph, init: LabelState, cfg: &ClassifyConfig) -> Result<Trial> {
    let mut state = init;
    let mut snapped = threshold(&state, cfg.class1_thr, cfg.class0_thr)?;
    let mut acc = vec![accuracy(&snapped)];
    for _ in 0..cfg.iterations {
        state = propagate_step(g, &state)?;
        snapped = threshold(&state, cfg.class1_thr, cfg.class0_thr)?;
        if cfg.carry == LabelCarry::Hard {
            state = snapped.clone();
        }
        acc.push(accuracy(&snapped));
    }
    Ok(Trial {
        accuracy: acc,
        final_state: snapped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub rates: Vec<f64>,
    pub repeats: usize,
    pub classify: ClassifyConfig,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            rates: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            repeats: 30,
            classify: ClassifyConfig::default(),
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub graph_id: String,
    pub stats: GraphStats,
    pub missing_rate: f64,
    /// `trials[r][i]`: accuracy of repeat `r` after `i` iterations.
    pub trials: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl CellReport {
    pub fn final_mean(&self) -> f64 {
        *self.mean.last().expect("at least the initial accuracy")
    }

    pub fn final_std(&self) -> f64 {
        *self.std.last().expect("at least the initial accuracy")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub cells: Vec<CellReport>,
}

/// Mean and sample standard deviation.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl ExperimentReport {
    pub fn cell(&self, graph_id: &str, rate: f64) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.graph_id == graph_id && c.missing_rate == rate)
    }

    /// `graph_id,nodes,edges,avg_degree,missing_rate,iteration,mean_accuracy,std_accuracy`
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "graph_id,nodes,edges,avg_degree,missing_rate,iteration,mean_accuracy,std_accuracy\n",
        );
        for c in &self.cells {
            for (i, (m, s)) in c.mean.iter().zip(&c.std).enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    c.graph_id,
                    c.stats.num_nodes,
                    c.stats.num_edges,
                    c.stats.avg_degree,
                    c.missing_rate,
                    i,
                    m,
                    s
                );
            }
        }
        out
    }

    /// Long format, one row per repeat per iteration, for accuracy curves.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("graph_id,missing_rate,repeat,iteration,accuracy\n");
        for c in &self.cells {
            for (r, trial) in c.trials.iter().enumerate() {
                for (i, a) in trial.iter().enumerate() {
                    let _ = writeln!(out, "{},{},{},{},{}", c.graph_id, c.missing_rate, r, i, a);
                }
            }
        }
        out
    }

    /// Final mean accuracy (%) per graph and rate.
    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        let mut graphs: Vec<&str> = Vec::new();
        let mut rates: Vec<f64> = Vec::new();
        for c in &self.cells {
            if !graphs.contains(&c.graph_id.as_str()) {
                graphs.push(&c.graph_id);
            }
            if !rates.contains(&c.missing_rate) {
                rates.push(c.missing_rate);
            }
        }
        let _ = write!(out, "{:<12}", "graph");
        for r in &rates {
            let _ = write!(out, "{:>8}", format!("{}%", (r * 100.0).round()));
        }
        let _ = writeln!(out, "{:>8}{:>8}{:>8}", "nodes", "edges", "degree");
        for g in graphs {
            let _ = write!(out, "{g:<12}");
            let mut stats = None;
            for &r in &rates {
                match self.cell(g, r) {
                    Some(c) => {
                        stats = Some(c.stats);
                        let _ = write!(out, "{:>8.1}", c.final_mean() * 100.0);
                    }
                    None => {
                        let _ = write!(out, "{:>8}", "-");
                    }
                }
            }
            if let Some(s) = stats {
                let _ = write!(out, "{:>8}{:>8}{:>8.1}", s.num_nodes, s.num_edges, s.avg_degree);
            }
            out.push('\n');
        }
        out
    }
}

/// Runs `repeats` independent trials for every (graph, rate) cell. Trial
/// `r` of cell `c` draws from ChaCha stream `c · repeats + r`, so results do
/// not depend on scheduling.
pub fn run_experiment(
    graphs: &[(String, ChoraleGraph)],
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    if cfg.repeats < 1 {
        return Err(Error::InvalidParameter("repeats must be at least 1".into()));
    }
    for (id, g) in graphs {
        if g.node_count() == 0 {
            return Err(Error::InvalidGraph(format!("graph {id} is empty")));
        }
        if let Some(w) = g.min_weight().filter(|&w| w < 0.0) {
            return Err(Error::InvalidGraph(format!(
                "graph {id} has negative edge weight {w}; build it with a non-negative threshold"
            )));
        }
    }
    let cells: Vec<(usize, &(String, ChoraleGraph), f64)> = graphs
        .iter()
        .flat_map(|g| cfg.rates.iter().map(move |&r| (g, r)))
        .enumerate()
        .map(|(i, (g, r))| (i, g, r))
        .collect();
    let cells = cells
        .into_par_iter()
        .map(|(ci, (id, g), rate)| {
            let trials = (0..cfg.repeats)
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    rng.set_stream((ci * cfg.repeats + r) as u64);
                    let init = init_state(g, rate, &mut rng)?;
                    Ok(classify(g, init, &cfg.classify)?.accuracy)
                })
                .collect::<Result<Vec<Vec<f64>>>>()?;
            let iters = cfg.classify.iterations + 1;
            let (mean, std): (Vec<f64>, Vec<f64>) = (0..iters)
                .map(|i| mean_std(&trials.iter().map(|t| t[i]).collect::<Vec<_>>()))
                .unzip();
            Ok(CellReport {
                graph_id: id.clone(),
                stats: g.stats(),
                missing_rate: rate,
                trials,
                mean,
                std,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport { cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Mode;
    use crate::graph::{Edge, GraphNode};

    fn graph(modes: &[Mode], edges: &[(usize, usize, f64)]) -> ChoraleGraph {
        let nodes = modes
            .iter()
            .enumerate()
            .map(|(i, &mode)| GraphNode { id: format!("n{i}"), mode })
            .collect();
        ChoraleGraph::new(
            nodes,
            edges.iter().map(|&(u, v, weight)| Edge { u, v, weight }).collect(),
        )
        .unwrap()
    }

    fn state(values: &[f64], observed: &[bool], truth: &[u8]) -> LabelState {
        LabelState::new(values.to_vec(), observed.to_vec(), truth.to_vec()).unwrap()
    }

    #[test]
    fn symmetric_neighbours_cancel() {
        let g = graph(&[Mode::Major, Mode::Major, Mode::Minor], &[(0, 1, 1.0), (1, 2, 1.0)]);
        let s = state(&[1.0, 0.5, 0.0], &[true, false, true], &[1, 1, 0]);
        assert_eq!(propagate_step(&g, &s).unwrap().values()[1], 0.5);
    }

    #[test]
    fn weighted_mean_then_threshold() {
        let g = graph(&[Mode::Major, Mode::Major, Mode::Minor], &[(0, 1, 3.0), (1, 2, 1.0)]);
        let s = state(&[1.0, 0.5, 0.0], &[true, false, true], &[1, 1, 0]);
        let next = propagate_step(&g, &s).unwrap();
        assert_eq!(next.values()[1], 0.75);
        let snapped = threshold(&next, 0.5, 0.5).unwrap();
        assert_eq!(snapped.values()[1], 1.0);
        assert_eq!(accuracy(&snapped), 1.0);
    }

    #[test]
    fn unanimous_neighbours() {
        let g = graph(
            &[Mode::Major; 3],
            &[(0, 2, 0.4), (1, 2, 2.5)],
        );
        let s = state(&[1.0, 1.0, 0.5], &[true, true, false], &[1, 1, 1]);
        assert_eq!(propagate_step(&g, &s).unwrap().values()[2], 1.0);
    }

    #[test]
    fn threshold_is_strict() {
        let s = state(&[0.5, 0.2, 0.8], &[false; 3], &[1, 0, 1]);
        let t = threshold(&s, 0.5, 0.5).unwrap();
        assert_eq!(t.values(), &[0.5, 0.0, 1.0]);
        assert!(threshold(&s, 0.4, 0.6).is_err());
    }

    #[test]
    fn accuracy_counts_exact_matches() {
        let s = state(&[1.0, 0.0, 0.5, 1.0], &[false; 4], &[1, 0, 1, 0]);
        assert_eq!(accuracy(&s), 0.5);
        let s = state(&[1.0, 0.0, 0.5, 0.0], &[false; 4], &[1, 0, 1, 0]);
        assert_eq!(accuracy(&s), 0.75);
    }

    #[test]
    fn init_counts() {
        let modes: Vec<Mode> = (0..100)
            .map(|i| if i % 3 == 0 { Mode::Minor } else { Mode::Major })
            .collect();
        let edges: Vec<(usize, usize, f64)> = (0..99).map(|i| (i, i + 1, 1.0)).collect();
        let g = graph(&modes, &edges);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = init_state(&g, 0.9, &mut rng).unwrap();
        assert_eq!(s.values().iter().filter(|&&v| v == UNLABELED).count(), 90);
        assert!((accuracy(&s) - 0.1).abs() < 1e-12);
        let s = init_state(&g, 0.0, &mut rng).unwrap();
        assert_eq!(accuracy(&s), 1.0);
        assert!(init_state(&g, 1.0, &mut rng).is_err());
    }

    #[test]
    fn non_positive_weights_rejected() {
        let g = graph(&[Mode::Major; 2], &[(0, 1, -1.0)]);
        let s = state(&[1.0, 0.5], &[true, false], &[1, 1]);
        assert!(matches!(
            propagate_step(&g, &s),
            Err(Error::NonPositiveWeightSum { node: 1, .. })
        ));
        let cfg = ExperimentConfig { repeats: 1, ..Default::default() };
        assert!(run_experiment(&[("neg".into(), g)], &cfg).is_err());
    }

    #[test]
    fn hard_carry_snaps_state() {
        let g = graph(
            &[Mode::Major, Mode::Major, Mode::Major, Mode::Minor],
            &[(0, 1, 3.0), (1, 2, 1.0), (2, 3, 1.0)],
        );
        let init = state(&[1.0, 0.5, 0.5, 0.0], &[true, false, false, true], &[1, 1, 1, 0]);
        let soft = classify(&g, init.clone(), &ClassifyConfig { iterations: 2, ..Default::default() })
            .unwrap();
        let hard = classify(
            &g,
            init,
            &ClassifyConfig { iterations: 2, carry: LabelCarry::Hard, ..Default::default() },
        )
        .unwrap();
        // soft: sweep 1 gives (0.875, 0.25), sweep 2 gives (0.8125, 0.4375)
        assert_eq!(soft.accuracy, vec![0.5, 0.75, 0.75]);
        // hard: sweep 1 snaps to (1, 0), sweep 2 leaves node 2 at exactly 0.5
        assert_eq!(hard.accuracy, vec![0.5, 0.75, 0.75]);
        assert_eq!(hard.final_state.values()[2], 0.5);
        assert_eq!(soft.final_state.values()[2], 0.0);
    }
}
