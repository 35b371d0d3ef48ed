//! Plain-text dataset directory:
//!
//! ```text
//! meta.json      {"num_nodes": n, "num_classes": c, "feature_dim": k}
//! edges.tsv      u<TAB>v per line, 0-indexed, undirected, duplicates allowed
//! features.csv   n rows of k comma-separated reals
//! labels.txt     n lines, class index or -1
//! train.txt / val.txt / test.txt   node indices, one per line
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct DatasetMeta {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub feature_dim: usize,
}

fn read(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    if !path.exists() {
        return Err(Error::MissingFile(path));
    }
    fs::read_to_string(&path).map_err(|e| Error::io(path, e))
}

fn parse_err(file: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_string(),
        line,
        msg: msg.into(),
    }
}

fn non_blank(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn read_index_list(dir: &Path, name: &str, n: usize) -> Result<Vec<usize>> {
    let text = read(dir, name)?;
    non_blank(&text)
        .map(|(line, l)| {
            let v: usize = l
                .parse()
                .map_err(|_| parse_err(name, line, format!("bad node index {l:?}")))?;
            if v >= n {
                return Err(Error::NodeOutOfRange { index: v, n });
            }
            Ok(v)
        })
        .collect()
}

/// Loads and validates a dataset directory.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Graph> {
    let dir = dir.as_ref();
    let meta: DatasetMeta = serde_json::from_str(&read(dir, "meta.json")?)?;
    let n = meta.num_nodes;

    let edges_text = read(dir, "edges.tsv")?;
    let mut edges = Vec::new();
    for (line, l) in non_blank(&edges_text) {
        let mut it = l.split_whitespace();
        let mut next = || -> Result<usize> {
            let tok = it
                .next()
                .ok_or_else(|| parse_err("edges.tsv", line, "expected two node indices"))?;
            let v: usize = tok
                .parse()
                .map_err(|_| parse_err("edges.tsv", line, format!("bad node index {tok:?}")))?;
            if v >= n {
                return Err(Error::NodeOutOfRange { index: v, n });
            }
            Ok(v)
        };
        let u = next()?;
        let v = next()?;
        edges.push((u, v));
    }

    let features_path = dir.join("features.csv");
    if !features_path.exists() {
        return Err(Error::MissingFile(features_path));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(&features_path)?;
    let mut data = Vec::with_capacity(n * meta.feature_dim);
    let mut rows = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != meta.feature_dim {
            return Err(parse_err(
                "features.csv",
                i + 1,
                format!("expected {} columns, found {}", meta.feature_dim, rec.len()),
            ));
        }
        for f in rec.iter() {
            data.push(
                f.parse::<f64>()
                    .map_err(|_| parse_err("features.csv", i + 1, format!("bad real {f:?}")))?,
            );
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::Shape(format!("features.csv has {rows} rows, meta says {n}")));
    }
    let features = Array2::from_shape_vec((n, meta.feature_dim), data)
        .map_err(|e| Error::Shape(e.to_string()))?;

    let labels_text = read(dir, "labels.txt")?;
    let mut labels = Vec::with_capacity(n);
    for (line, l) in non_blank(&labels_text) {
        let v: i64 = l
            .parse()
            .map_err(|_| parse_err("labels.txt", line, format!("bad label {l:?}")))?;
        labels.push(match v {
            -1 => None,
            c if c >= 0 => Some(c as usize),
            _ => return Err(parse_err("labels.txt", line, format!("bad label {v}"))),
        });
    }
    if labels.len() != n {
        return Err(Error::InvalidGraph(format!(
            "label count mismatch: labels.txt has {}, meta says {n}",
            labels.len()
        )));
    }

    let train = read_index_list(dir, "train.txt", n)?;
    let val = read_index_list(dir, "val.txt", n)?;
    let test = read_index_list(dir, "test.txt", n)?;

    Graph::from_edges(n, &edges, features, labels, meta.num_classes, train, val, test)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes `edges` (one undirected edge per line) in the `edges.tsv` format.
pub fn write_edges(path: impl AsRef<Path>, edges: &[(usize, usize)]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    for &(u, v) in edges {
        writeln!(w, "{u}\t{v}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes a graph as a dataset directory readable by [`load_dataset`].
pub fn save_dataset(graph: &Graph, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = DatasetMeta {
        num_nodes: graph.num_nodes(),
        num_classes: graph.num_classes(),
        feature_dim: graph.feature_dim(),
    };
    let meta_path = dir.join("meta.json");
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)
        .map_err(|e| Error::io(&meta_path, e))?;
    write_edges(dir.join("edges.tsv"), &graph.edges())?;

    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(dir.join("features.csv"))?;
    for row in graph.features().rows() {
        wtr.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    wtr.flush().map_err(|e| Error::io(dir.join("features.csv"), e))?;

    let labels_path = dir.join("labels.txt");
    let mut w = create(&labels_path)?;
    for l in graph.labels() {
        let v = l.map(|c| c as i64).unwrap_or(-1);
        writeln!(w, "{v}").map_err(|e| Error::io(&labels_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&labels_path, e))?;

    for (name, mask) in [
        ("train.txt", graph.train_nodes()),
        ("val.txt", graph.val_nodes()),
        ("test.txt", graph.test_nodes()),
    ] {
        let path = dir.join(name);
        let mut w = create(&path)?;
        for v in mask {
            writeln!(w, "{v}").map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
