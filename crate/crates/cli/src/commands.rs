use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use chorale_graph::chord2vec::{train_chord_embeddings, ChordEmbeddings, ChordTrainConfig};
use chorale_graph::classify::{run_experiment, ClassifyConfig, ExperimentConfig};
use chorale_graph::corpus::load_corpus;
use chorale_graph::embedding::{top_k_similar, train_model, EncoderMatrix, Method, TrainConfig};
use chorale_graph::eval::{reports_csv, reports_table, run_agreement_study, StudyConfig};
use chorale_graph::graph::{ChoraleGraph, PairwiseSimilarity};
use chorale_graph::seed::derive_seed;
use chorale_graph::synthetic::{generate_corpus, SyntheticConfig};
use chorale_graph::walk::{generate_walks, WalkConfig, WalkSet};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::manifest::{self, Entry};
use crate::RuntimeFailure;

pub fn run(cli: Cli) -> Result<()> {
    let stage = cli.command.name();
    match cli.command {
        Command::Synth(a) => synth(stage, a),
        Command::Ingest(a) => ingest(stage, a),
        Command::Chords(a) => chords(stage, a),
        Command::BuildGraph(a) => build_graph(stage, a),
        Command::Walks(a) => walks(stage, a),
        Command::Train(a) => train(stage, a),
        Command::Query(a) => query(stage, a),
        Command::Agree(a) => agree(stage, a),
        Command::Classify(a) => classify(stage, a),
        Command::Experiment(a) => experiment(stage, a),
    }
}

/// Fails fast, naming the first input that does not exist.
fn require(paths: &[&Path]) -> Result<()> {
    for p in paths {
        ensure!(p.exists(), "missing input file: {}", p.display());
    }
    Ok(())
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| RuntimeFailure(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| RuntimeFailure(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_graph(path: &Path) -> Result<ChoraleGraph> {
    ChoraleGraph::from_text(&read(path)?).with_context(|| format!("in graph {}", path.display()))
}

struct Record<'a> {
    stage: &'a str,
    common: &'a Common,
    stage_seed: Option<u64>,
    params: Value,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Record<'_> {
    fn new<'a>(stage: &'a str, common: &'a Common, args: &impl Serialize) -> Result<Record<'a>> {
        Ok(Record {
            stage,
            common,
            stage_seed: None,
            params: serde_json::to_value(args)?,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    fn seeded(mut self, name: &str) -> (Self, u64) {
        let s = derive_seed(self.common.seed, name);
        self.stage_seed = Some(s);
        (self, s)
    }

    /// Appends the manifest line, next to `anchor` unless `--manifest` says otherwise.
    fn finish(self, anchor: &Path) -> Result<()> {
        let path = self
            .common
            .manifest
            .clone()
            .unwrap_or_else(|| manifest::default_path(anchor));
        Entry {
            stage: self.stage,
            seed: self.common.seed,
            stage_seed: self.stage_seed,
            params: self.params,
            inputs: self.inputs,
            outputs: self.outputs,
        }
        .append(&path)
    }
}

fn synth(stage: &str, a: SynthArgs) -> Result<()> {
    let (mut rec, seed) = Record::new(stage, &a.common, &a)?.seeded(stage);
    let corpus = generate_corpus(&SyntheticConfig {
        records: a.records,
        families: a.families,
        major_fraction: a.major_fraction,
        mutation: a.mutation,
        min_len: a.min_len,
        max_len: a.max_len,
        seed,
    })?;
    write(&a.out, &corpus.to_jsonl())?;
    println!("{} records written to {}", corpus.len(), a.out.display());
    rec.outputs.push(a.out.clone());
    rec.finish(&a.out)
}

fn ingest(stage: &str, a: IngestArgs) -> Result<()> {
    require(&[&a.corpus])?;
    let mut rec = Record::new(stage, &a.common, &a)?;
    let corpus = load_corpus(&a.corpus)?;
    let (major, minor) = corpus.mode_counts();
    println!("{} records", corpus.len());
    println!("vocabulary: {} tokens", corpus.vocab().len());
    println!("modes: {major} major, {minor} minor");
    rec.inputs.push(a.corpus.clone());
    if let Some(report) = &a.report {
        let summary = json!({
            "records": corpus.len(),
            "vocabulary": corpus.vocab().len(),
            "major": major,
            "minor": minor,
        });
        write(report, &format!("{}\n", serde_json::to_string_pretty(&summary)?))?;
        rec.outputs.push(report.clone());
    }
    rec.finish(a.report.as_deref().unwrap_or(&a.corpus))
}

fn chords(stage: &str, a: ChordsArgs) -> Result<()> {
    require(&[&a.corpus])?;
    let (mut rec, seed) = Record::new(stage, &a.common, &a)?.seeded(stage);
    let corpus = load_corpus(&a.corpus)?;
    let cfg = ChordTrainConfig {
        method: a.chord.chord_method,
        dim: a.chord.chord_dim,
        window: a.chord.chord_window,
        epochs: a.chord.chord_epochs,
        lr: a.chord.chord_lr,
        lr_min: a.chord.chord_lr_min,
        seed,
    };
    let emb = train_chord_embeddings(&corpus, &cfg)?;
    write(&a.out, &emb.to_text())?;
    println!(
        "{} chord vectors of dimension {} written to {}",
        emb.vocab().len(),
        emb.dim(),
        a.out.display()
    );
    rec.inputs.push(a.corpus.clone());
    rec.outputs.push(a.out.clone());
    rec.finish(&a.out)
}

fn build_graph(stage: &str, a: BuildGraphArgs) -> Result<()> {
    require(&[&a.corpus, &a.chords])?;
    let mut rec = Record::new(stage, &a.common, &a)?;
    let corpus = load_corpus(&a.corpus)?;
    let emb = ChordEmbeddings::from_text(&read(&a.chords)?)
        .with_context(|| format!("in chord embeddings {}", a.chords.display()))?;
    let ps = PairwiseSimilarity::compute(&corpus, &emb, a.selector)?;
    if !ps.skipped().is_empty() {
        println!(
            "skipped {} records too short for {}",
            ps.skipped().len(),
            a.selector
        );
    }
    let thresholds: Vec<f64> = if a.xi.is_empty() {
        a.target_edges
            .iter()
            .map(|&m| ps.threshold_for_edge_count(m))
            .collect()
    } else {
        a.xi.clone()
    };
    for (i, &xi) in thresholds.iter().enumerate() {
        ensure!(!xi.is_nan(), "threshold must be a number");
        let g = ps.threshold(xi)?;
        let path = a.out_dir.join(format!("graph_{}.txt", i + 1));
        write(&path, &g.to_text()?)?;
        let s = g.stats();
        println!(
            "{} xi={xi} nodes={} edges={} avg_degree={:.2}",
            path.display(),
            s.num_nodes,
            s.num_edges,
            s.avg_degree
        );
        rec.outputs.push(path);
    }
    rec.params["resolved_xi"] = json!(thresholds.iter().map(|x| x.to_string()).collect::<Vec<_>>());
    rec.inputs.extend([a.corpus.clone(), a.chords.clone()]);
    rec.finish(&a.out_dir.join("graph_1.txt"))
}

fn walk_config(w: &WalkParams, pq: &PqParams, seed: u64) -> WalkConfig {
    WalkConfig {
        walks_per_node: w.walks_per_node,
        walk_length: w.walk_length,
        p: pq.p,
        q: pq.q,
        seed,
    }
}

fn walks(stage: &str, a: WalksArgs) -> Result<()> {
    require(&[&a.graph])?;
    let (mut rec, seed) = Record::new(stage, &a.common, &a)?.seeded(stage);
    let g = load_graph(&a.graph)?;
    let ws = generate_walks(&g, &walk_config(&a.walk, &a.pq, seed))?;
    write(&a.out, &ws.to_text())?;
    println!("{} walks written to {}", ws.len(), a.out.display());
    rec.inputs.push(a.graph.clone());
    rec.outputs.push(a.out.clone());
    rec.finish(&a.out)
}

fn train_config(t: &TrainParams, seed: u64) -> TrainConfig {
    TrainConfig {
        dim: t.dim,
        epochs: t.epochs,
        lr: t.lr,
        lr_min: t.lr_min.unwrap_or(t.lr / 100.0),
        negatives: t.negatives,
        window: t.window,
        seed,
    }
}

fn train(stage: &str, a: TrainArgs) -> Result<()> {
    require(&[&a.graph])?;
    if let Some(w) = &a.walks {
        require(&[w])?;
    }
    let (mut rec, seed) = Record::new(stage, &a.common, &a)?.seeded(stage);
    let g = load_graph(&a.graph)?;
    rec.inputs.push(a.graph.clone());
    let ws = match &a.walks {
        Some(path) => {
            rec.inputs.push(path.clone());
            WalkSet::from_text(&read(path)?, &g)
                .with_context(|| format!("in walks {}", path.display()))?
        }
        None => {
            let walk_seed = derive_seed(a.common.seed, "walks");
            generate_walks(&g, &walk_config(&a.walk, &a.pq, walk_seed))?
        }
    };
    let z = train_model(a.method, &g, &ws, &train_config(&a.train, seed))?;
    write(&a.out, &z.to_text())?;
    println!(
        "{} embeddings for {} nodes (dimension {}) written to {}",
        a.method,
        z.num_nodes(),
        z.dim(),
        a.out.display()
    );
    rec.outputs.push(a.out.clone());
    rec.finish(&a.out)
}

fn query(stage: &str, a: QueryArgs) -> Result<()> {
    require(&[&a.graph, &a.model])?;
    let mut rec = Record::new(stage, &a.common, &a)?;
    let g = load_graph(&a.graph)?;
    let z = EncoderMatrix::from_text(&read(&a.model)?)
        .with_context(|| format!("in model {}", a.model.display()))?;
    ensure!(
        z.num_nodes() == g.node_count(),
        "model has {} nodes but graph has {}",
        z.num_nodes(),
        g.node_count()
    );
    let Some(u) = g.index_of(&a.node) else {
        bail!("node {:?} is not in graph {}", a.node, a.graph.display());
    };
    let mut out = String::new();
    for (rank, (v, cos)) in top_k_similar(&z, u, a.k)?.into_iter().enumerate() {
        out.push_str(&format!("{}\t{}\t{cos:.6}\n", rank + 1, g.nodes()[v].id));
    }
    print!("{out}");
    rec.inputs.extend([a.graph.clone(), a.model.clone()]);
    if let Some(path) = &a.out {
        write(path, &out)?;
        rec.outputs.push(path.clone());
    }
    rec.finish(a.out.as_deref().unwrap_or(&a.model))
}

fn agree(stage: &str, a: AgreeArgs) -> Result<()> {
    require(&[&a.corpus, &a.chords, &a.graph])?;
    let (mut rec, seed) = Record::new(stage, &a.common, &a)?.seeded("train");
    let corpus = load_corpus(&a.corpus)?;
    let emb = ChordEmbeddings::from_text(&read(&a.chords)?)
        .with_context(|| format!("in chord embeddings {}", a.chords.display()))?;
    let g = load_graph(&a.graph)?;
    let cfg = StudyConfig {
        grid: a.grid.iter().map(|p| (p.0, p.1)).collect(),
        walk: walk_config(
            &a.walk,
            &PqParams { p: 1.0, q: 1.0 },
            derive_seed(a.common.seed, "walks"),
        ),
        train: train_config(&a.train, seed),
        methods: Method::ALL,
        k: a.k,
    };
    let reports = run_agreement_study(&g, &corpus, &emb, a.selector, &cfg)?;
    write(&a.out, &reports_csv(&reports))?;
    print!("{}", reports_table(&reports));
    rec.inputs.extend([a.corpus.clone(), a.chords.clone(), a.graph.clone()]);
    rec.outputs.push(a.out.clone());
    rec.finish(&a.out)
}

fn classify_config(c: &ClassifyParams) -> ClassifyConfig {
    ClassifyConfig {
        iterations: c.iterations,
        class1_thr: c.class1_thr,
        class0_thr: c.class0_thr,
        carry: c.carry,
    }
}

fn graph_id(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn classify(stage: &str, a: ClassifyArgs) -> Result<()> {
    require(&[&a.graph])?;
    let (mut rec, seed) = Record::new(stage, &a.common, &a)?.seeded(stage);
    let g = load_graph(&a.graph)?;
    let cfg = ExperimentConfig {
        rates: vec![a.missing_rate],
        repeats: 1,
        classify: classify_config(&a.classify),
        seed,
    };
    let report = run_experiment(&[(graph_id(&a.graph), g)], &cfg)?;
    let mut csv = String::from("iteration,accuracy\n");
    for (i, acc) in report.cells[0].trials[0].iter().enumerate() {
        csv.push_str(&format!("{i},{acc}\n"));
        println!("iteration {i}: accuracy {:.1}%", acc * 100.0);
    }
    write(&a.out, &csv)?;
    rec.inputs.push(a.graph.clone());
    rec.outputs.push(a.out.clone());
    rec.finish(&a.out)
}

fn experiment(stage: &str, a: ExperimentArgs) -> Result<()> {
    let inputs: Vec<&Path> = a.graphs.iter().map(PathBuf::as_path).collect();
    require(&inputs)?;
    let (mut rec, seed) = Record::new(stage, &a.common, &a)?.seeded(stage);
    let ids: Vec<String> = if a.graph_ids.is_empty() {
        a.graphs.iter().map(|p| graph_id(p)).collect()
    } else {
        a.graph_ids.clone()
    };
    ensure!(
        ids.len() == a.graphs.len(),
        "{} graph ids for {} graphs",
        ids.len(),
        a.graphs.len()
    );
    ensure!(
        ids.iter().collect::<HashSet<_>>().len() == ids.len(),
        "graph ids must be distinct"
    );
    let graphs = ids
        .into_iter()
        .zip(&a.graphs)
        .map(|(id, p)| Ok((id, load_graph(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let cfg = ExperimentConfig {
        rates: a.rates.clone(),
        repeats: a.repeats,
        classify: classify_config(&a.classify),
        seed,
    };
    let report = run_experiment(&graphs, &cfg)?;
    let curves = a.curves.clone().unwrap_or_else(|| {
        a.out
            .with_file_name(format!("{}_curves.csv", graph_id(&a.out)))
    });
    write(&a.out, &report.to_csv())?;
    write(&curves, &report.curves_csv())?;
    print!("{}", report.summary_table());
    rec.inputs.extend(a.graphs.iter().cloned());
    rec.outputs.extend([a.out.clone(), curves]);
    rec.finish(&a.out)
}
