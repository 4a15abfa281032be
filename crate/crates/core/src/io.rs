//! File formats: headerless CSV matrices, tab-separated edge lists, label files
//! and line-delimited JSON reports.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cce::Embeddings;
use crate::data::DataMatrix;
use crate::error::{KsvdError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    General,
    DirectedGraph,
    DocTerm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub matrix: DataMatrix,
    pub labels: Option<Vec<usize>>,
    pub kind: DatasetKind,
}

impl Dataset {
    pub fn new(matrix: DataMatrix, labels: Option<Vec<usize>>, kind: DatasetKind) -> Result<Self> {
        if kind == DatasetKind::DirectedGraph && matrix.nrows() != matrix.ncols() {
            return Err(KsvdError::Data(format!(
                "graph adjacency must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if let Some(l) = &labels {
            if l.len() != matrix.nrows() {
                return Err(KsvdError::Data(format!("{} labels for {} rows", l.len(), matrix.nrows())));
            }
        }
        Ok(Self { matrix, labels, kind })
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| KsvdError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| KsvdError::io(path, e))
}

fn parse_error(path: &Path, line: u64, column: usize, message: impl Into<String>) -> KsvdError {
    KsvdError::Parse { path: path.to_path_buf(), line, column, message: message.into() }
}

/// Reads a rectangular, comma-separated, headerless matrix of reals.
pub fn load_dense_csv(path: impl AsRef<Path>) -> Result<DataMatrix> {
    let path = path.as_ref();
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(open(path)?);
    let mut data = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, 0, e.to_string())
        })?;
        let line = record.position().map_or(rows as u64 + 1, |p| p.line());
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(parse_error(
                path,
                line,
                record.len().min(w) + 1,
                format!("ragged row: expected {w} fields, found {}", record.len()),
            ));
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_error(path, line, j + 1, format!("cannot parse {field:?} as a real number")))?;
            data.push(v);
        }
        rows += 1;
    }
    let cols = width.ok_or_else(|| KsvdError::Data(format!("{} is empty", path.display())))?;
    DataMatrix::new(rows, cols, data)
}

/// Writes one row per line with 17 significant digits, enough to round-trip
/// every `f64` exactly.
pub fn save_dense_csv(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if j > 0 {
                    out.write_all(b",")?;
                }
                write!(out, "{:.16e}", m[(i, j)])?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| KsvdError::io(path, e))
}

pub fn save_embeddings(path: impl AsRef<Path>, emb: &Embeddings) -> Result<()> {
    save_dense_csv(path, &emb.values)
}

/// Loads a binary adjacency matrix from `src<TAB>dst` lines (0-based).
///
/// The size is `n_nodes`, else the `# n=<N>` header, else the largest index
/// plus one. Duplicate edges collapse and self-loops are kept. Other lines
/// starting with `#` and blank lines are ignored.
pub fn load_edge_list(path: impl AsRef<Path>, n_nodes: Option<usize>) -> Result<DataMatrix> {
    let path = path.as_ref();
    let reader = BufReader::new(open(path)?);
    let mut header_n = None;
    let mut edges = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| KsvdError::io(path, e))?;
        let lineno = lineno as u64 + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(rest) = text.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("n=") {
                header_n = Some(
                    v.trim()
                        .parse::<usize>()
                        .map_err(|_| parse_error(path, lineno, 1, format!("bad node-count header {text:?}")))?,
                );
            }
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(parse_error(
                path,
                lineno,
                fields.len().min(2) + 1,
                format!("expected two node indices, found {} fields", fields.len()),
            ));
        }
        let mut ends = [0usize; 2];
        for (c, f) in fields.iter().enumerate() {
            let v: i64 = f
                .parse()
                .map_err(|_| parse_error(path, lineno, c + 1, format!("cannot parse {f:?} as a node index")))?;
            if v < 0 {
                return Err(parse_error(path, lineno, c + 1, format!("negative node index {v}")));
            }
            ends[c] = v as usize;
        }
        edges.push((lineno, ends[0], ends[1]));
    }
    let n = match n_nodes.or(header_n) {
        Some(n) => {
            if let Some(&(line, s, d)) = edges.iter().find(|(_, s, d)| *s >= n || *d >= n) {
                return Err(parse_error(
                    path,
                    line,
                    if s >= n { 1 } else { 2 },
                    format!("node index {} out of range for {n} nodes", s.max(d)),
                ));
            }
            n
        }
        None => edges.iter().map(|&(_, s, d)| s.max(d) + 1).max().unwrap_or(0),
    };
    let mut a = DataMatrix::zeros(n, n);
    for (_, s, d) in edges {
        a.set(s, d, 1.0);
    }
    Ok(a)
}

/// One non-negative integer label per line; blank lines are skipped.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let reader = BufReader::new(open(path)?);
    let mut labels = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| KsvdError::io(path, e))?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        labels.push(
            text.parse()
                .map_err(|_| parse_error(path, lineno as u64 + 1, 1, format!("cannot parse {text:?} as a label")))?,
        );
    }
    Ok(labels)
}

/// Writes one JSON object per line.
pub fn save_report<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| KsvdError::Data(format!("{}: {e}", path.display())))?;
        out.write_all(b"\n").map_err(|e| KsvdError::io(path, e))?;
    }
    out.flush().map_err(|e| KsvdError::io(path, e))
}

pub fn load_report<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let reader = BufReader::new(open(path)?);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| KsvdError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| parse_error(path, lineno as u64 + 1, e.column(), e.to_string()))?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn csv_basic_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        fs::write(&p, "1,2\n3,4\n").unwrap();
        let m = load_dense_csv(&p).unwrap();
        assert_eq!(m.as_slice(), &[1.0, 2.0, 3.0, 4.0]);

        fs::write(&p, "").unwrap();
        assert!(matches!(load_dense_csv(&p), Err(KsvdError::Data(_))));

        fs::write(&p, "1,2\n3\n").unwrap();
        assert!(matches!(load_dense_csv(&p), Err(KsvdError::Parse { line: 2, .. })));

        fs::write(&p, "1,2\n3,x\n").unwrap();
        assert!(matches!(load_dense_csv(&p), Err(KsvdError::Parse { line: 2, column: 2, .. })));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let m = DMatrix::from_fn(4, 3, |i, j| ((i * 3 + j) as f64 * 0.123456789).sin() * 10f64.powi(i as i32 - 2));
        save_dense_csv(&p, &m).unwrap();
        assert_eq!(load_dense_csv(&p).unwrap().to_dmatrix(), m);
    }

    #[test]
    fn empty_embeddings_give_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        save_dense_csv(&p, &DMatrix::zeros(0, 3)).unwrap();
        assert_eq!(fs::read(&p).unwrap().len(), 0);
    }

    #[test]
    fn edge_lists() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.tsv");
        fs::write(&p, "0\t1\n").unwrap();
        let a = load_edge_list(&p, None).unwrap();
        assert_eq!(a.as_slice(), &[0.0, 1.0, 0.0, 0.0]);

        fs::write(&p, "0\t1\n0\t1\n\n").unwrap();
        assert_eq!(load_edge_list(&p, None).unwrap(), a);

        fs::write(&p, "# n=4\n0\t2\n2\t2\n3\t0\n").unwrap();
        let b = load_edge_list(&p, None).unwrap();
        let mut expect = DataMatrix::zeros(4, 4);
        expect.set(0, 2, 1.0);
        expect.set(2, 2, 1.0);
        expect.set(3, 0, 1.0);
        assert_eq!(b, expect);

        assert!(load_edge_list(&p, Some(3)).is_err());
        fs::write(&p, "0\t-1\n").unwrap();
        assert!(matches!(load_edge_list(&p, None), Err(KsvdError::Parse { column: 2, .. })));
    }

    #[test]
    fn report_round_trip() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct R {
            x: f64,
            s: String,
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.jsonl");
        let rs = vec![R { x: 0.1 + 0.2, s: "a".into() }, R { x: -1e-300, s: "b".into() }];
        save_report(&p, &rs).unwrap();
        assert_eq!(load_report::<R>(&p).unwrap(), rs);
    }
}
