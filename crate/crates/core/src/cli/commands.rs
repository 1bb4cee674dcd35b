use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::{Command, Common, DataArg, RunConfig, SweepArgs, GRADCHECK_TOLERANCE, SCHEMA_VERSION};
use crate::dataset::{load_dataset, write_dataset, write_edges, Dataset};
use crate::error::{Error, Result};
use crate::experiments::{
    knn_homophily_sweep, levels, mean_metric, pairs_homophily, run_sweep, toy_grad_check,
    write_long_csv, SweepRecord,
};
use crate::faat::{forward, AttentionTrace, Mode};
use crate::graph::{
    edge_homophily, per_node_homophily, perturb_to_homophily, synth_graph, HeteroGraph,
    HomophilyReport, LabelSet, PERTURB_RELATION,
};
use crate::homoaug::{homo_aug, KNN_RELATION};
use crate::train::{
    ablation_run, evaluate, make_splits, AblationVariant, Checkpoint, MetricsReport,
    PipelineOutcome, SplitSet, TrainConfig,
};

pub(super) enum Failure {
    Usage(String),
    Runtime(Error),
}

impl<E: Into<Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

type Outcome = std::result::Result<i32, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

pub(super) fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Analyze { common, data } => analyze(&common, &data),
        Command::Synth {
            common,
            homophily,
            nodes_per_class,
            seed,
        } => synth(&common, homophily, nodes_per_class, seed),
        Command::Perturb {
            common,
            data,
            target,
            seed,
        } => perturb(&common, &data, target, seed),
        Command::Augment {
            common,
            data,
            k,
            seed,
            sweep_k,
            seeds,
        } => augment_cmd(&common, &data, k, seed, sweep_k.map(|l| l.0), seeds),
        Command::Train {
            common,
            data,
            variant,
            variants,
            seed,
            k,
            max_epochs,
            sweep,
        } => {
            let opts = TrainOpts {
                variant,
                variants: variants.map(|v| v.0),
                seed,
                k,
                max_epochs,
            };
            train_cmd(&common, &data, opts, &sweep)
        }
        Command::Evaluate {
            common,
            data,
            checkpoint,
            splits,
        } => evaluate_cmd(&common, &data, &checkpoint, splits.as_deref()),
        Command::ExportAttention {
            common,
            data,
            checkpoint,
        } => export_attention(&common, &data, &checkpoint),
        Command::Gradcheck { out } => gradcheck(out.as_deref()),
    }
}

fn load_config(common: &Common) -> std::result::Result<RunConfig, Failure> {
    match &common.config {
        Some(path) => RunConfig::load(path).map_err(|e| usage(e.to_string())),
        None => Ok(RunConfig::default()),
    }
}

fn prepare_out(common: &Common) -> Result<&Path> {
    std::fs::create_dir_all(&common.out).map_err(|e| Error::io(&common.out, e))?;
    Ok(&common.out)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_summary(out: &Path, command: &str, mut body: Value, outputs: &[PathBuf]) -> Result<()> {
    let names: Vec<String> = outputs
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let map = body.as_object_mut().expect("summary body is an object");
    map.insert("schema_version".into(), json!(SCHEMA_VERSION));
    map.insert("command".into(), json!(command));
    map.insert("outputs".into(), json!(names));
    write_json(&out.join("summary.json"), &body)
}

fn data_dir(cfg: &RunConfig, data: &DataArg) -> std::result::Result<PathBuf, Failure> {
    data.data
        .clone()
        .or_else(|| cfg.data.clone())
        .ok_or_else(|| usage("a dataset is required: pass --data DIR or set `data` in the config"))
}

fn load(cfg: &RunConfig, dir: &Path) -> Result<Dataset> {
    let (ds, report) = load_dataset(dir, cfg.relations.as_deref())?;
    let dropped: usize = report.duplicates_dropped.values().sum::<usize>()
        + report.self_loops_dropped.values().sum::<usize>();
    if dropped > 0 {
        log::warn!(
            "{}: dropped duplicates {:?} and self-loops {:?}",
            dir.display(),
            report.duplicates_dropped,
            report.self_loops_dropped
        );
    }
    Ok(ds)
}

/// The dataset's own split, or a stratified one from the configured ratios.
fn splits_for(ds: &Dataset, cfg: &RunConfig, seed: u64) -> Result<SplitSet> {
    match &ds.splits {
        Some(s) => Ok(s.clone()),
        None => make_splits(&ds.labels, cfg.split_ratios, seed),
    }
}

fn relation_table(g: &HeteroGraph, labels: &LabelSet) -> Result<Vec<Value>> {
    g.relations()
        .iter()
        .map(|r| {
            let h = pairs_homophily(g.num_nodes(), r.pairs(), labels).ok();
            Ok(json!({"name": r.name(), "edges": r.len(), "edge_homophily": h}))
        })
        .collect()
}

fn analyze(common: &Common, data: &DataArg) -> Outcome {
    let cfg = load_config(common)?;
    let dir = data_dir(&cfg, data)?;
    let (ds, report) = load_dataset(&dir, cfg.relations.as_deref())?;
    let out = prepare_out(common)?;
    let scores = HomophilyReport::compute(&ds.graph, &ds.labels)?;
    let per_node = per_node_homophily(&ds.graph, &ds.labels);

    let node_csv = out.join("node_homophily.csv");
    let mut w = csv::Writer::from_path(&node_csv)?;
    w.write_record(["node", "label", "homophily"])?;
    for (&u, &h) in &per_node.values {
        let label = ds.labels.get(u).expect("labeled");
        w.write_record([u.to_string(), label.to_string(), h.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(&node_csv, e))?;

    let hist_csv = out.join("homophily_histogram.csv");
    let mut w = csv::Writer::from_path(&hist_csv)?;
    w.write_record(["class", "bin_low", "bin_high", "count"])?;
    let edges = crate::graph::HomophilyHistogram::EDGES;
    let classes = [
        ("all", per_node.histogram),
        (
            "human",
            per_node.histogram_for_class(&ds.labels, LabelSet::HUMAN),
        ),
        (
            "bot",
            per_node.histogram_for_class(&ds.labels, LabelSet::BOT),
        ),
    ];
    for (name, hist) in &classes {
        for (b, count) in hist.bins.iter().enumerate() {
            w.write_record([
                name.to_string(),
                edges[b].to_string(),
                edges[b + 1].to_string(),
                count.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(&hist_csv, e))?;

    let analysis = json!({
        "schema_version": SCHEMA_VERSION,
        "num_nodes": ds.graph.num_nodes(),
        "num_labeled": ds.labels.labeled_nodes().len(),
        "num_edges": ds.graph.num_edges(),
        "node_homophily": scores.node_homophily,
        "edge_homophily": scores.edge_homophily,
        "class_insensitive_homophily": scores.class_insensitive_homophily,
        "relations": relation_table(&ds.graph, &ds.labels)?,
        "load_report": report,
    });
    let analysis_path = out.join("analysis.json");
    write_json(&analysis_path, &analysis)?;
    write_summary(
        out,
        "analyze",
        json!({
            "node_homophily": scores.node_homophily,
            "edge_homophily": scores.edge_homophily,
            "class_insensitive_homophily": scores.class_insensitive_homophily,
        }),
        &[analysis_path, node_csv, hist_csv],
    )?;
    println!(
        "node {:.4}  edge {:.4}  class-insensitive {:.4}",
        scores.node_homophily, scores.edge_homophily, scores.class_insensitive_homophily
    );
    Ok(0)
}

fn synth(
    common: &Common,
    homophily: Option<f64>,
    nodes_per_class: Option<usize>,
    seed: Option<u64>,
) -> Outcome {
    let cfg = load_config(common)?;
    let mut synth = cfg.synth.clone();
    if let Some(h) = homophily {
        synth.target_edge_homophily = h;
    }
    if let Some(n) = nodes_per_class {
        synth.n_per_class = n;
    }
    if let Some(s) = seed {
        synth.seed = s;
    }
    synth.validate().map_err(|e| usage(e.to_string()))?;
    let (graph, features, labels) = synth_graph(&synth)?;
    let splits = make_splits(&labels, cfg.split_ratios, synth.seed)?;
    let ds = Dataset {
        graph,
        features,
        labels,
        splits: Some(splits),
    };
    let out = prepare_out(common)?;
    let written = write_dataset(out, &ds)?;
    let achieved = edge_homophily(&ds.graph, &ds.labels)?;
    write_summary(
        out,
        "synth",
        json!({
            "synth": synth,
            "num_nodes": ds.graph.num_nodes(),
            "num_edges": ds.graph.num_edges(),
            "edge_homophily": achieved,
        }),
        &written,
    )?;
    println!(
        "{} nodes, {} edges, edge homophily {achieved:.4}",
        ds.graph.num_nodes(),
        ds.graph.num_edges()
    );
    Ok(0)
}

fn perturb(common: &Common, data: &DataArg, target: Option<f64>, seed: Option<u64>) -> Outcome {
    let cfg = load_config(common)?;
    let target = target
        .or(cfg.perturb_target)
        .ok_or_else(|| usage("perturb needs --target H or `perturb_target` in the config"))?;
    let dir = data_dir(&cfg, data)?;
    let mut ds = load(&cfg, &dir)?;
    let before = edge_homophily(&ds.graph, &ds.labels)?;
    let seed = seed.unwrap_or(cfg.train.seed);
    ds.graph = perturb_to_homophily(&ds.graph, &ds.labels, target, seed)?;
    let after = edge_homophily(&ds.graph, &ds.labels)?;
    let added = ds.graph.relation(PERTURB_RELATION).map_or(0, |r| r.len());
    let out = prepare_out(common)?;
    let written = write_dataset(out, &ds)?;
    write_summary(
        out,
        "perturb",
        json!({
            "target": target,
            "seed": seed,
            "edge_homophily_before": before,
            "edge_homophily_after": after,
            "added_edges": added,
        }),
        &written,
    )?;
    println!("edge homophily {before:.4} -> {after:.4} ({added} edges added)");
    Ok(0)
}

fn seed_list(base: u64, count: Option<usize>) -> std::result::Result<Vec<u64>, Failure> {
    match count {
        Some(0) => Err(usage("--seeds must be at least 1")),
        Some(n) => Ok((0..n as u64).map(|i| base + i).collect()),
        None => Ok(vec![base]),
    }
}

fn augment_cmd(
    common: &Common,
    data: &DataArg,
    k: Option<usize>,
    seed: Option<u64>,
    sweep_k: Option<Vec<usize>>,
    seeds: Option<usize>,
) -> Outcome {
    let mut cfg = load_config(common)?;
    if let Some(k) = k {
        cfg.train.k = k;
    }
    if cfg.train.k == 0 {
        return Err(usage("k must be at least 1"));
    }
    let seed = seed.unwrap_or(cfg.train.seed);
    let dir = data_dir(&cfg, data)?;
    let ds = load(&cfg, &dir)?;
    if ds.graph.relation(KNN_RELATION).is_some() {
        return Err(Failure::Runtime(Error::RelationExists(KNN_RELATION.into())));
    }
    let out = prepare_out(common)?;

    if let Some(ks) = sweep_k {
        let mut records = Vec::new();
        for s in seed_list(seed, seeds)? {
            let mut with_split = ds.clone();
            with_split.splits = Some(splits_for(&ds, &cfg, s)?);
            let mlp = TrainConfig {
                seed: s,
                ..cfg.train.clone()
            }
            .mlp_config();
            records.extend(knn_homophily_sweep(&with_split, &ks, &mlp, s)?);
        }
        let path = out.join("knn_sweep.csv");
        write_long_csv(&path, &records)?;
        let means: Vec<Value> = levels(&records)
            .into_iter()
            .map(|k| {
                json!({
                    "k": k,
                    "knn_edge_homophily": mean_metric(&records, "homo_aug", k, "knn_edge_homophily"),
                    "combined_edge_homophily":
                        mean_metric(&records, "homo_aug", k, "combined_edge_homophily"),
                })
            })
            .collect();
        write_summary(
            out,
            "augment",
            json!({"sweep": "k", "means": means}),
            &[path],
        )?;
        return Ok(0);
    }

    let splits = splits_for(&ds, &cfg, seed)?;
    let mlp = TrainConfig {
        seed,
        ..cfg.train.clone()
    }
    .mlp_config();
    let (augmented, knn, _) = homo_aug(
        &ds.graph,
        &ds.features,
        &ds.labels,
        &splits.train,
        &splits.val,
        cfg.train.k,
        &mlp,
    )?;
    let pairs = knn.pairs();
    let knn_h = pairs_homophily(ds.graph.num_nodes(), &pairs, &ds.labels)?;
    let combined = edge_homophily(&augmented, &ds.labels)?;
    let knn_path = out.join("knn_edges.csv");
    write_edges(&knn_path, &knn.injected_relation, &pairs)?;
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "k": knn.k,
        "knn_edges": pairs.len(),
        "knn_edge_homophily": knn_h,
        "combined_edge_homophily": combined,
    });
    let report_path = out.join("augment.json");
    write_json(&report_path, &report)?;
    let bundle = Dataset {
        graph: augmented,
        splits: Some(splits),
        ..ds
    };
    let mut written = write_dataset(out, &bundle)?;
    written.extend([knn_path, report_path]);
    write_summary(
        out,
        "augment",
        json!({"k": knn.k, "knn_edge_homophily": knn_h, "combined_edge_homophily": combined}),
        &written,
    )?;
    println!(
        "k = {}: knn edge homophily {knn_h:.4}, combined {combined:.4}",
        knn.k
    );
    Ok(0)
}

struct TrainOpts {
    variant: Option<AblationVariant>,
    variants: Option<Vec<AblationVariant>>,
    seed: Option<u64>,
    k: Option<usize>,
    max_epochs: Option<usize>,
}

fn metrics_json(variant: AblationVariant, seed: u64, m: &MetricsReport) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "variant": variant.name(),
        "seed": seed,
        "accuracy": m.accuracy,
        "f1": m.f1,
        "balanced_accuracy": m.balanced_accuracy,
        "confusion": m.confusion,
    })
}

fn write_attention(path: &Path, trace: &AttentionTrace, labels: &LabelSet) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    trace.write_csv(labels, BufWriter::new(file))
}

fn train_cmd(common: &Common, data: &DataArg, opts: TrainOpts, sweep: &SweepArgs) -> Outcome {
    let mut cfg = load_config(common)?;
    if let Some(s) = opts.seed {
        cfg.train.seed = s;
    }
    if let Some(k) = opts.k {
        cfg.train.k = k;
    }
    if let Some(e) = opts.max_epochs {
        cfg.train.max_epochs = e;
    }
    if let Some(v) = opts.variant {
        cfg.variant = v;
    }
    cfg.train.validate().map_err(|e| usage(e.to_string()))?;
    let dir = data.data.clone().or_else(|| cfg.data.clone());
    let dataset = match &dir {
        Some(d) => Some(load(&cfg, d)?),
        None => None,
    };
    if sweep.sweep_k.is_some() || sweep.sweep_homophily.is_some() {
        let variants = opts.variants.unwrap_or_else(|| vec![cfg.variant]);
        return train_sweep(common, &cfg, dataset, &variants, sweep);
    }
    if sweep.seeds.is_some() {
        let variants = opts.variants.unwrap_or_else(|| vec![cfg.variant]);
        let seeds = seed_list(cfg.train.seed, sweep.seeds)?;
        return seeds_only(common, &cfg, dataset, &variants, &seeds);
    }
    if opts.variants.is_some() {
        return Err(usage(
            "--variants needs a sweep flag; use --variant for a single run",
        ));
    }

    let seed = cfg.train.seed;
    let ds = match dataset {
        Some(ds) => ds,
        None => cfg
            .benchmark()
            .instance(cfg.synth.target_edge_homophily, seed)?,
    };
    let splits = splits_for(&ds, &cfg, seed)?;
    let outcome = ablation_run(
        cfg.variant,
        &ds.graph,
        &ds.features,
        &ds.labels,
        &splits,
        &cfg.train,
    )?;
    let out = prepare_out(common)?;
    let files = write_run(out, &cfg, &ds, &splits, &outcome)?;
    let t = &outcome.train;
    write_summary(
        out,
        "train",
        json!({
            "variant": cfg.variant.name(),
            "seed": seed,
            "accuracy": t.test.accuracy,
            "f1": t.test.f1,
            "balanced_accuracy": t.test.balanced_accuracy,
            "epochs_ran": t.epochs_ran,
            "best_epoch": t.best_epoch,
            "attention_signs": t.trace.sign_summary(&ds.labels),
        }),
        &files,
    )?;
    println!(
        "{}: accuracy {:.4}  f1 {:.4}  balanced accuracy {:.4}  (best epoch {} of {})",
        cfg.variant,
        t.test.accuracy,
        t.test.f1,
        t.test.balanced_accuracy,
        t.best_epoch,
        t.epochs_ran
    );
    Ok(0)
}

fn write_run(
    out: &Path,
    cfg: &RunConfig,
    ds: &Dataset,
    splits: &SplitSet,
    outcome: &PipelineOutcome,
) -> Result<Vec<PathBuf>> {
    let t = &outcome.train;
    let mut metrics = metrics_json(outcome.variant, cfg.train.seed, &t.test);
    let map = metrics.as_object_mut().expect("object");
    map.insert("epochs_ran".into(), json!(t.epochs_ran));
    map.insert("best_epoch".into(), json!(t.best_epoch));
    map.insert("validation".into(), json!(t.val));
    let metrics_path = out.join("metrics.json");
    write_json(&metrics_path, &metrics)?;

    let mut train_config = cfg.train.clone();
    if outcome.variant == AblationVariant::NoWegl {
        train_config.lambda2 = 0.0;
    }
    let checkpoint_path = out.join("checkpoint.json");
    Checkpoint::new(&t.params, &train_config, outcome.injected.as_ref()).save(&checkpoint_path)?;

    let splits_path = out.join("splits.json");
    write_json(&splits_path, splits)?;

    let history_path = out.join("history.csv");
    let mut w = csv::Writer::from_path(&history_path)?;
    w.write_record([
        "epoch",
        "cross_entropy",
        "l2",
        "guidance",
        "total",
        "val_accuracy",
    ])?;
    for h in &t.history {
        w.write_record([
            h.epoch.to_string(),
            h.loss.cross_entropy.to_string(),
            h.loss.l2.to_string(),
            h.loss.guidance.to_string(),
            h.loss.total.to_string(),
            h.val_accuracy.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&history_path, e))?;

    let attention_path = out.join("attention.csv");
    write_attention(&attention_path, &t.trace, &ds.labels)?;
    Ok(vec![
        metrics_path,
        checkpoint_path,
        splits_path,
        history_path,
        attention_path,
    ])
}

fn sweep_summary(records: &[SweepRecord], variants: &[AblationVariant]) -> Vec<Value> {
    let mut rows = Vec::new();
    for level in levels(records) {
        for v in variants {
            rows.push(json!({
                "level": level,
                "variant": v.name(),
                "accuracy": mean_metric(records, v.name(), level, "accuracy"),
                "f1": mean_metric(records, v.name(), level, "f1"),
                "balanced_accuracy": mean_metric(records, v.name(), level, "balanced_accuracy"),
            }));
        }
    }
    rows
}

fn finish_sweep(
    common: &Common,
    name: &str,
    records: &[SweepRecord],
    variants: &[AblationVariant],
    seeds: &[u64],
) -> Outcome {
    let out = prepare_out(common)?;
    let path = out.join("sweep.csv");
    write_long_csv(&path, records)?;
    let means = sweep_summary(records, variants);
    for row in &means {
        println!(
            "{name} = {}  {:<16} accuracy {:.4}",
            row["level"],
            row["variant"].as_str().unwrap_or(""),
            row["accuracy"].as_f64().unwrap_or(f64::NAN)
        );
    }
    write_summary(
        out,
        "train",
        json!({"sweep": name, "seeds": seeds, "means": means}),
        &[path],
    )?;
    Ok(0)
}

fn seeds_only(
    common: &Common,
    cfg: &RunConfig,
    dataset: Option<Dataset>,
    variants: &[AblationVariant],
    seeds: &[u64],
) -> Outcome {
    let level = cfg.synth.target_edge_homophily;
    let bench = cfg.benchmark();
    let records = run_sweep("seed", &[level], seeds, variants, |h, seed| {
        let tc = TrainConfig {
            seed,
            ..cfg.train.clone()
        };
        let ds = match &dataset {
            Some(ds) => with_splits(ds.clone(), cfg, seed)?,
            None => bench.instance(h, seed)?,
        };
        Ok((ds, tc))
    })?;
    finish_sweep(common, "seed", &records, variants, seeds)
}

fn with_splits(mut ds: Dataset, cfg: &RunConfig, seed: u64) -> Result<Dataset> {
    ds.splits = Some(splits_for(&ds, cfg, seed)?);
    Ok(ds)
}

fn train_sweep(
    common: &Common,
    cfg: &RunConfig,
    dataset: Option<Dataset>,
    variants: &[AblationVariant],
    sweep: &SweepArgs,
) -> Outcome {
    let seeds = seed_list(cfg.train.seed, sweep.seeds)?;
    let bench = cfg.benchmark();
    match (&sweep.sweep_k, &sweep.sweep_homophily) {
        (Some(_), Some(_)) => Err(usage("choose one of --sweep-k and --sweep-homophily")),
        (Some(ks), None) => {
            let levels: Vec<f64> = ks.0.iter().map(|&k| k as f64).collect();
            let h = cfg.synth.target_edge_homophily;
            let records = run_sweep("k", &levels, &seeds, variants, |k, seed| {
                let tc = TrainConfig {
                    seed,
                    k: k as usize,
                    ..cfg.train.clone()
                };
                let ds = match &dataset {
                    Some(ds) => with_splits(ds.clone(), cfg, seed)?,
                    None => bench.instance(h, seed)?,
                };
                Ok((ds, tc))
            })?;
            finish_sweep(common, "k", &records, variants, &seeds)
        }
        (None, Some(levels)) => {
            let records = run_sweep("homophily", &levels.0, &seeds, variants, |h, seed| {
                let tc = TrainConfig {
                    seed,
                    ..cfg.train.clone()
                };
                let ds = match &dataset {
                    Some(ds) => {
                        let mut ds = with_splits(ds.clone(), cfg, seed)?;
                        ds.graph = perturb_to_homophily(&ds.graph, &ds.labels, h, seed)?;
                        ds
                    }
                    None => bench.instance(h, seed)?,
                };
                Ok((ds, tc))
            })?;
            finish_sweep(common, "homophily", &records, variants, &seeds)
        }
        (None, None) => unreachable!("called without a sweep flag"),
    }
}

/// The dataset graph plus the relation injected at training time, checked
/// against the relations the checkpoint was trained on.
fn restore(
    cfg: &RunConfig,
    data: &DataArg,
    path: &Path,
) -> std::result::Result<(Checkpoint, Dataset), Failure> {
    let checkpoint = Checkpoint::load(path)?;
    let dir = data_dir(cfg, data)?;
    let mut ds = load(cfg, &dir)?;
    if let Some(name) = &checkpoint.injected_relation {
        if ds.graph.relation(name).is_none() {
            ds.graph
                .add_relation(name, checkpoint.injected_pairs.iter().copied())?;
        }
    }
    for r in &checkpoint.relations {
        if ds.graph.relation(r).is_none() {
            return Err(Failure::Runtime(Error::Graph(format!(
                "checkpoint relation `{r}` is missing from the dataset"
            ))));
        }
    }
    Ok((checkpoint, ds))
}

fn evaluate_cmd(
    common: &Common,
    data: &DataArg,
    checkpoint: &Path,
    splits: Option<&Path>,
) -> Outcome {
    let cfg = load_config(common)?;
    let (ckpt, ds) = restore(&cfg, data, checkpoint)?;
    let params = ckpt.to_params()?;
    let seed = ckpt.train_config.seed;
    let splits = match splits {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str::<SplitSet>(&text).map_err(Error::from)?
        }
        None => splits_for(&ds, &cfg, seed)?,
    };
    let (logits, _) = forward(&ds.graph, &ds.features, &params, Mode::Eval)?;
    let test = evaluate(&logits, &ds.labels, &splits.test)?;
    let out = prepare_out(common)?;
    let attention = params.config.attention;
    let mut metrics = metrics_json(AblationVariant::Full, seed, &test);
    let map = metrics.as_object_mut().expect("object");
    map.remove("variant");
    map.insert("attention".into(), json!(attention));
    map.insert("test_nodes".into(), json!(splits.test.len()));
    let path = out.join("metrics.json");
    write_json(&path, &metrics)?;
    write_summary(
        out,
        "evaluate",
        json!({"accuracy": test.accuracy, "f1": test.f1, "balanced_accuracy": test.balanced_accuracy}),
        &[path],
    )?;
    println!(
        "accuracy {:.4}  f1 {:.4}  balanced accuracy {:.4}",
        test.accuracy, test.f1, test.balanced_accuracy
    );
    Ok(0)
}

fn export_attention(common: &Common, data: &DataArg, checkpoint: &Path) -> Outcome {
    let cfg = load_config(common)?;
    let (ckpt, ds) = restore(&cfg, data, checkpoint)?;
    let params = ckpt.to_params()?;
    let (_, trace) = forward(&ds.graph, &ds.features, &params, Mode::Eval)?;
    let out = prepare_out(common)?;
    let path = out.join("attention.csv");
    write_attention(&path, &trace, &ds.labels)?;
    let signs = trace.sign_summary(&ds.labels);
    let range = trace.range();
    write_summary(
        out,
        "export-attention",
        json!({"slots": trace.num_slots(), "signs": signs, "range": range}),
        &[path],
    )?;
    println!(
        "mean alpha_bar: homophilic {:.4}, heterophilic {:.4}; negative share {:.3} vs {:.3}",
        signs.homo_mean, signs.hetero_mean, signs.homo_negative, signs.hetero_negative
    );
    Ok(0)
}

fn gradcheck(out: Option<&Path>) -> Outcome {
    let reports = toy_grad_check()?;
    let worst = reports
        .iter()
        .map(|(_, r)| r.max_rel_err)
        .fold(0.0, f64::max);
    let passed = worst <= GRADCHECK_TOLERANCE;
    for (residual, r) in &reports {
        println!(
            "{residual:?}: max relative error {:.3e} over {} entries (worst {} {:?})",
            r.max_rel_err, r.entries_checked, r.worst_param, r.worst_index
        );
    }
    println!("{}", if passed { "PASS" } else { "FAIL" });
    if let Some(out) = out {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let runs: Vec<Value> = reports
            .iter()
            .map(|(residual, r)| json!({"residual": residual, "report": r}))
            .collect();
        let body = json!({
            "schema_version": SCHEMA_VERSION,
            "tolerance": GRADCHECK_TOLERANCE,
            "max_rel_err": worst,
            "passed": passed,
            "runs": runs,
        });
        let path = out.join("gradcheck.json");
        write_json(&path, &body)?;
        write_summary(
            out,
            "gradcheck",
            json!({"max_rel_err": worst, "passed": passed}),
            &[path],
        )?;
    }
    Ok(if passed { 0 } else { 1 })
}
