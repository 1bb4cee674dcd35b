//! CSV dataset bundles.
//!
//! A bundle directory holds `nodes.csv` (`id,label[,split]`), `edges.csv`
//! (`src,dst,relation`) and one `features_<family>.csv` (`id,f0,f1,…`) per
//! present family. Labels of `-1` mark unlabeled users; `split` is one of
//! `train`, `val`, `test` or empty.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::{FeatureFamily, FeatureSet};
use crate::graph::{HeteroGraph, LabelSet};
use crate::numcore::Matrix;
use crate::train::SplitSet;

pub const NODES_FILE: &str = "nodes.csv";
pub const EDGES_FILE: &str = "edges.csv";

pub fn features_file(family: FeatureFamily) -> String {
    format!("features_{}.csv", family.name())
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: HeteroGraph,
    pub features: FeatureSet,
    pub labels: LabelSet,
    pub splits: Option<SplitSet>,
}

/// Per-relation counts of rows dropped while loading edges.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub num_nodes: usize,
    pub edges_kept: BTreeMap<String, usize>,
    pub self_loops_dropped: BTreeMap<String, usize>,
    pub duplicates_dropped: BTreeMap<String, usize>,
}

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        msg: msg.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn check_header(
    path: &Path,
    rdr: &mut csv::Reader<File>,
    expected: &[&str],
) -> Result<csv::StringRecord> {
    let header = rdr.headers()?.clone();
    let ok = expected
        .iter()
        .enumerate()
        .all(|(i, e)| header.get(i) == Some(*e));
    if !ok {
        return Err(parse_err(
            path,
            1,
            format!("expected header starting with {}", expected.join(",")),
        ));
    }
    Ok(header)
}

fn field<'a>(path: &Path, rec: &'a csv::StringRecord, i: usize, name: &str) -> Result<&'a str> {
    rec.get(i)
        .ok_or_else(|| parse_err(path, line_of(rec), format!("missing `{name}` column")))
}

fn parse_id(
    path: &Path,
    rec: &csv::StringRecord,
    i: usize,
    name: &str,
    n: Option<usize>,
) -> Result<usize> {
    let raw = field(path, rec, i, name)?;
    let id: usize = raw.parse().map_err(|_| {
        parse_err(
            path,
            line_of(rec),
            format!("`{name}` = `{raw}` is not a node id"),
        )
    })?;
    if let Some(n) = n {
        if id >= n {
            return Err(parse_err(
                path,
                line_of(rec),
                format!("`{name}` = {id} references a node outside 0..{n}"),
            ));
        }
    }
    Ok(id)
}

struct NodeRows {
    labels: Vec<Option<usize>>,
    splits: Option<(Vec<usize>, Vec<usize>, Vec<usize>)>,
}

fn load_nodes(path: &Path) -> Result<NodeRows> {
    let mut rdr = reader(path)?;
    let header = check_header(path, &mut rdr, &["id", "label"])?;
    let has_split = header.get(2) == Some("split");
    let mut rows: Vec<(usize, Option<usize>, Option<String>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let id = parse_id(path, &rec, 0, "id", None)?;
        let raw = field(path, &rec, 1, "label")?;
        let label = match raw {
            "-1" | "" => None,
            "0" => Some(LabelSet::HUMAN),
            "1" => Some(LabelSet::BOT),
            other => {
                return Err(parse_err(
                    path,
                    line_of(&rec),
                    format!("label `{other}` is not 0, 1 or -1"),
                ))
            }
        };
        let split = if has_split {
            match rec.get(2).unwrap_or("") {
                "" => None,
                s @ ("train" | "val" | "test") => Some(s.to_string()),
                other => {
                    return Err(parse_err(
                        path,
                        line_of(&rec),
                        format!("split `{other}` is not train, val or test"),
                    ))
                }
            }
        } else {
            None
        };
        if split.is_some() && label.is_none() {
            return Err(parse_err(
                path,
                line_of(&rec),
                format!("unlabeled node {id} is assigned to a split"),
            ));
        }
        rows.push((id, label, split));
    }
    let n = rows.len();
    let mut labels = vec![None; n];
    let mut seen = vec![false; n];
    let (mut train, mut val, mut test) = (vec![], vec![], vec![]);
    for (row, (id, label, split)) in rows.into_iter().enumerate() {
        if id >= n || seen[id] {
            return Err(parse_err(
                path,
                row as u64 + 2,
                format!("node ids must be 0..{n} with each id once; got {id}"),
            ));
        }
        seen[id] = true;
        labels[id] = label;
        match split.as_deref() {
            Some("train") => train.push(id),
            Some("val") => val.push(id),
            Some("test") => test.push(id),
            _ => {}
        }
    }
    let splits = has_split.then_some((train, val, test));
    Ok(NodeRows { labels, splits })
}

fn load_edges(
    path: &Path,
    n: usize,
    declared: Option<&[String]>,
    report: &mut LoadReport,
) -> Result<HeteroGraph> {
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &["src", "dst", "relation"])?;
    let mut by_relation: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let u = parse_id(path, &rec, 0, "src", Some(n))?;
        let v = parse_id(path, &rec, 1, "dst", Some(n))?;
        let rel = field(path, &rec, 2, "relation")?;
        if rel.is_empty() {
            return Err(parse_err(path, line_of(&rec), "empty relation name"));
        }
        if let Some(known) = declared {
            if !known.iter().any(|k| k == rel) {
                return Err(parse_err(
                    path,
                    line_of(&rec),
                    format!(
                        "relation `{rel}` is not declared (known: {})",
                        known.join(", ")
                    ),
                ));
            }
        }
        if !by_relation.contains_key(rel) {
            order.push(rel.to_string());
        }
        by_relation.entry(rel.to_string()).or_default().push((u, v));
    }
    let mut graph = HeteroGraph::new(n);
    for name in order {
        let stats = graph.add_relation(&name, by_relation.remove(&name).unwrap_or_default())?;
        if stats.self_loops > 0 || stats.duplicates > 0 {
            log::info!(
                "relation `{name}`: dropped {} self-loops and {} duplicate rows",
                stats.self_loops,
                stats.duplicates
            );
        }
        report.edges_kept.insert(name.clone(), stats.inserted);
        report
            .self_loops_dropped
            .insert(name.clone(), stats.self_loops);
        report.duplicates_dropped.insert(name, stats.duplicates);
    }
    Ok(graph)
}

fn load_features(path: &Path, n: usize) -> Result<Matrix> {
    let mut rdr = reader(path)?;
    let header = check_header(path, &mut rdr, &["id"])?;
    let width = header.len() - 1;
    let mut data = vec![f64::NAN; n * width];
    let mut seen = vec![false; n];
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let id = parse_id(path, &rec, 0, "id", Some(n))?;
        if seen[id] {
            return Err(parse_err(path, line, format!("node {id} appears twice")));
        }
        seen[id] = true;
        rows += 1;
        if rec.len() != width + 1 {
            return Err(parse_err(
                path,
                line,
                format!("expected {} values, found {}", width, rec.len() - 1),
            ));
        }
        for j in 0..width {
            let raw = &rec[j + 1];
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(path, line, format!("feature `{raw}` is not numeric")))?;
            if !v.is_finite() {
                return Err(parse_err(
                    path,
                    line,
                    format!("feature `{raw}` is not finite"),
                ));
            }
            data[id * width + j] = v;
        }
    }
    if rows != n {
        return Err(parse_err(
            path,
            rows as u64 + 1,
            format!("{rows} feature rows for {n} nodes"),
        ));
    }
    Matrix::from_vec(n, width, data)
}

/// Loads a bundle directory. `declared` restricts the accepted relation names.
pub fn load_dataset(dir: &Path, declared: Option<&[String]>) -> Result<(Dataset, LoadReport)> {
    let nodes = load_nodes(&dir.join(NODES_FILE))?;
    let n = nodes.labels.len();
    let mut report = LoadReport {
        num_nodes: n,
        ..Default::default()
    };
    let graph = load_edges(&dir.join(EDGES_FILE), n, declared, &mut report)?;
    let mut features = FeatureSet::new(n);
    for family in FeatureFamily::ALL {
        let path = dir.join(features_file(family));
        if path.exists() {
            features.set(family, load_features(&path, n)?)?;
        }
    }
    if features.total_width() == 0 {
        return Err(Error::Config(format!(
            "no features_<family>.csv found in {}",
            dir.display()
        )));
    }
    let labels = LabelSet::new(nodes.labels, 2)?;
    let splits = match nodes.splits {
        Some((train, val, test)) if !train.is_empty() => Some(SplitSet::new(train, val, test)?),
        _ => None,
    };
    Ok((
        Dataset {
            graph,
            features,
            labels,
            splits,
        },
        report,
    ))
}

fn create(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

/// Writes a bundle that [`load_dataset`] reads back exactly.
pub fn write_dataset(dir: &Path, ds: &Dataset) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let path = dir.join(NODES_FILE);
    let mut split_of = vec![""; ds.labels.len()];
    if let Some(s) = &ds.splits {
        for (name, part) in [("train", &s.train), ("val", &s.val), ("test", &s.test)] {
            for &u in part {
                split_of[u] = name;
            }
        }
    }
    let mut w = create(&path)?;
    w.write_record(["id", "label", "split"])?;
    for (u, split) in split_of.iter().enumerate() {
        let label = ds.labels.get(u).map_or("-1".to_string(), |l| l.to_string());
        w.write_record([u.to_string(), label, split.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    written.push(path);

    let path = dir.join(EDGES_FILE);
    let mut w = create(&path)?;
    w.write_record(["src", "dst", "relation"])?;
    for rel in ds.graph.relations() {
        for &(u, v) in rel.pairs() {
            w.write_record([u.to_string(), v.to_string(), rel.name().to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    written.push(path);

    for (family, m) in ds.features.present() {
        let path = dir.join(features_file(family));
        let mut w = create(&path)?;
        let mut header = vec!["id".to_string()];
        header.extend((0..m.cols()).map(|j| format!("f{j}")));
        w.write_record(&header)?;
        for u in 0..m.rows() {
            let mut row = vec![u.to_string()];
            row.extend(m.row(u).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Writes `src,dst,relation` rows for one relation's pairs.
pub fn write_edges(path: &Path, relation: &str, pairs: &[(usize, usize)]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(["src", "dst", "relation"])?;
    for &(u, v) in pairs {
        w.write_record([u.to_string(), v.to_string(), relation.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        std::fs::write(dir.join(name), body).unwrap();
    }

    fn fixture(dir: &Path, edges: &str) {
        write(dir, NODES_FILE, "id,label\n0,0\n1,1\n2,-1\n");
        write(dir, EDGES_FILE, edges);
        write(
            dir,
            "features_numerical.csv",
            "id,f0,f1\n0,1.0,2\n1,0.5,-1\n2,0,0\n",
        );
    }

    #[test]
    fn minimal_fixture_loads() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path(), "src,dst,relation\n0,1,follower\n1,2,follower\n");
        let (ds, report) = load_dataset(dir.path(), None).unwrap();
        assert_eq!(ds.graph.relations().len(), 1);
        assert_eq!(ds.graph.num_edges(), 2);
        assert_eq!(ds.labels.get(2), None);
        assert_eq!(ds.features.total_width(), 2);
        assert_eq!(report.duplicates_dropped["follower"], 0);
        assert!(ds.splits.is_none());
    }

    #[test]
    fn dangling_endpoint_names_line() {
        let dir = tempfile::tempdir().unwrap();
        fixture(
            dir.path(),
            "src,dst,relation\n0,1,follower\n1,99,follower\n",
        );
        let err = load_dataset(dir.path(), None).unwrap_err();
        match err {
            Error::Parse { line, ref msg, .. } => {
                assert_eq!(line, 3);
                assert!(msg.contains("99"), "{msg}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicates_and_self_loops_counted() {
        let dir = tempfile::tempdir().unwrap();
        fixture(
            dir.path(),
            "src,dst,relation\n0,1,friend\n1,0,friend\n2,2,friend\n",
        );
        let (ds, report) = load_dataset(dir.path(), None).unwrap();
        assert_eq!(ds.graph.num_edges(), 1);
        assert_eq!(report.duplicates_dropped["friend"], 1);
        assert_eq!(report.self_loops_dropped["friend"], 1);
    }

    #[test]
    fn bad_feature_and_undeclared_relation() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path(), "src,dst,relation\n0,1,friend\n");
        write(
            dir.path(),
            "features_numerical.csv",
            "id,f0\n0,1\n1,abc\n2,0\n",
        );
        let err = load_dataset(dir.path(), None).unwrap_err().to_string();
        assert!(err.contains(":3:") && err.contains("abc"), "{err}");

        fixture(dir.path(), "src,dst,relation\n0,1,friend\n");
        let declared = vec!["follower".to_string()];
        assert!(load_dataset(dir.path(), Some(&declared)).is_err());
    }

    #[test]
    fn node_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path(), "src,dst,relation\n0,1,friend\n");
        write(dir.path(), "features_numerical.csv", "id,f0\n0,1\n1,2\n");
        assert!(load_dataset(dir.path(), None).is_err());
    }

    #[test]
    fn write_then_load_roundtrips() {
        let (g, fs, labels) = crate::graph::synth_graph(&crate::graph::SynthConfig {
            n_per_class: 20,
            seed: 3,
            ..Default::default()
        })
        .unwrap();
        let splits = crate::train::make_splits(&labels, crate::train::DEFAULT_RATIOS, 1).unwrap();
        let ds = Dataset {
            graph: g,
            features: fs,
            labels,
            splits: Some(splits),
        };
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &ds).unwrap();
        let (back, _) = load_dataset(dir.path(), None).unwrap();
        assert_eq!(back.graph, ds.graph);
        assert_eq!(back.features, ds.features);
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.splits, ds.splits);
    }
}
