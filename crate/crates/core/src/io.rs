//! CSV matrices, graph JSON and atomic file writes.
//!
//! Matrix CSV has no header, one row per line, comma separated. Graph JSON is
//! `{"n": 3, "edges": [[0, 1, 0.5], ...]}` with 0-based indices; an optional
//! `"directed": true` marks a directed edge list.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, Graph};

/// Shortest decimal text that parses back to the same f64.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x != 0.0 && x.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn format_matrix_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

pub fn format_vector_csv(v: &DVector<f64>) -> String {
    let mut s = String::new();
    for &x in v.iter() {
        let _ = writeln!(s, "{}", fmt_f64(x));
    }
    s
}

pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {f:?}: {e}", lineno + 1))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse(format!(
                    "line {}: {} fields, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.into_iter().flatten()))
}

/// Accepts a single row or a single column.
pub fn parse_vector_csv(text: &str) -> Result<DVector<f64>> {
    let m = parse_matrix_csv(text)?;
    match m.shape() {
        (1, c) => Ok(DVector::from_iterator(c, m.iter().copied())),
        (r, 1) => Ok(DVector::from_iterator(r, m.iter().copied())),
        (0, 0) => Ok(DVector::zeros(0)),
        (r, c) => Err(Error::Parse(format!("expected a vector, got {r}x{c}"))),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    parse_matrix_csv(&read_text(path)?)
}

pub fn read_vector_csv(path: &Path) -> Result<DVector<f64>> {
    parse_vector_csv(&read_text(path)?)
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    atomic_write(path, format_matrix_csv(m).as_bytes())
}

pub fn write_vector_csv(path: &Path, v: &DVector<f64>) -> Result<()> {
    atomic_write(path, format_vector_csv(v).as_bytes())
}

/// Writes to a sibling temp file, then renames over the target.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::invalid(format!("{} has no file name", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp: PathBuf = dir.join(tmp_name);
    fs::write(&tmp, bytes).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(e)
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub directed: bool,
}

impl GraphJson {
    pub fn from_graph(g: &Graph) -> Self {
        Self { n: g.n(), edges: g.edges(), directed: false }
    }

    pub fn from_directed(g: &DirectedGraph) -> Self {
        let n = g.n();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let w = g.weights()[(i, j)];
                if w > 0.0 {
                    edges.push((i, j, w));
                }
            }
        }
        Self { n, edges, directed: true }
    }

    pub fn to_graph(&self) -> Result<Graph> {
        if self.directed {
            return Err(Error::invalid("expected an undirected graph, got \"directed\": true"));
        }
        Graph::from_edges(self.n, &self.edges)
    }

    /// Directed reading of the edge list; an undirected file yields both directions.
    pub fn to_directed(&self) -> Result<DirectedGraph> {
        if self.directed {
            DirectedGraph::from_edges(self.n, &self.edges)
        } else {
            let g = self.to_graph()?;
            DirectedGraph::new(g.into_weights())
        }
    }
}

pub fn parse_graph_json(text: &str) -> Result<GraphJson> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("graph json: {e}")))
}

pub fn read_graph_json(path: &Path) -> Result<GraphJson> {
    parse_graph_json(&read_text(path)?)
}

pub fn graph_json_string(g: &GraphJson) -> String {
    let mut s = serde_json::to_string_pretty(g).expect("graph json serializes");
    s.push('\n');
    s
}

pub fn write_graph_json(path: &Path, g: &GraphJson) -> Result<()> {
    atomic_write(path, graph_json_string(g).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for &x in &[0.1, 1.0, -2.5, 1e-7, 6.02e23, 1.0 / 3.0, 0.0, 123456.789, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(0.25), "0.25");
        assert_eq!(fmt_f64(2.0), "2");
        assert_eq!(fmt_f64(1e-7), "1e-7");
    }

    #[test]
    fn matrix_round_trip() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -0.5, 1.0 / 3.0, 7e-9, 0.0, 2.0]);
        let back = parse_matrix_csv(&format_matrix_csv(&m)).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(parse_matrix_csv("1,2\n3\n").is_err());
        assert!(parse_matrix_csv("1,x\n").is_err());
    }

    #[test]
    fn vector_row_or_column() {
        assert_eq!(parse_vector_csv("1,2,3\n").unwrap().len(), 3);
        assert_eq!(parse_vector_csv("1\n2\n").unwrap().len(), 2);
        assert!(parse_vector_csv("1,2\n3,4\n").is_err());
    }

    #[test]
    fn graph_json_round_trip() {
        let g = Graph::from_edges(3, &[(0, 1, 0.5), (1, 2, 2.0)]).unwrap();
        let j = GraphJson::from_graph(&g);
        let text = graph_json_string(&j);
        assert!(!text.contains("directed"));
        let back = parse_graph_json(&text).unwrap().to_graph().unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        atomic_write(&p, b"1\n").unwrap();
        atomic_write(&p, b"2\n").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "2\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
