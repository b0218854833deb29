//! Graph representation, file loading, validation, and random dot product
//! graph sampling.

use std::path::Path;

use nalgebra::DMatrix;
use rand::RngExt;

use crate::error::{Error, Result, Violation};
use crate::rng::RngSeed;

/// Dense undirected adjacency matrix with binary entries.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    mat: DMatrix<f64>,
    directed: bool,
}

impl AdjacencyMatrix {
    /// Wrap a square matrix without checking invariants; use [`AdjacencyMatrix::validate`]
    /// to obtain a violation report.
    pub fn from_matrix(mat: DMatrix<f64>) -> Self {
        assert_eq!(mat.nrows(), mat.ncols(), "adjacency matrix must be square");
        AdjacencyMatrix { mat, directed: false }
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Report violated invariants (symmetry, hollow diagonal, binary entries).
    /// One entry per violated invariant, carrying the first offending location.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.n();
        let mut found = Vec::new();
        'symmetry: for i in 0..n {
            for j in (i + 1)..n {
                if self.mat[(i, j)] != self.mat[(j, i)] {
                    found.push(Violation::NotSymmetric { i, j });
                    break 'symmetry;
                }
            }
        }
        for i in 0..n {
            if self.mat[(i, i)] != 0.0 {
                found.push(Violation::NotHollow { i });
                break;
            }
        }
        'binary: for i in 0..n {
            for j in 0..n {
                let v = self.mat[(i, j)];
                if v != 0.0 && v != 1.0 {
                    found.push(Violation::NonBinary { i, j, value: v });
                    break 'binary;
                }
            }
        }
        found
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        let n = self.n();
        let mut count = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                if self.mat[(i, j)] != 0.0 {
                    count += 1;
                }
            }
        }
        count
    }

    /// Edge density over the n(n-1)/2 possible edges.
    pub fn density(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        self.edge_count() as f64 / (n * (n - 1) / 2) as f64
    }

    /// Dense CSV encoding, one row per line, entries 0/1.
    pub fn to_dense_csv(&self) -> String {
        let n = self.n();
        let mut out = String::with_capacity(n * (2 * n + 1));
        for i in 0..n {
            for j in 0..n {
                if j > 0 {
                    out.push(',');
                }
                out.push(if self.mat[(i, j)] != 0.0 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

/// Latent position matrix, one row per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPositions {
    mat: DMatrix<f64>,
}

impl LatentPositions {
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() == 0 || mat.ncols() == 0 {
            return Err(Error::Degenerate("latent positions must be non-empty".into()));
        }
        if mat.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("latent positions contain non-finite entries".into()));
        }
        Ok(LatentPositions { mat })
    }

    /// Build from per-vertex rows; all rows must share one dimension.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Degenerate("no latent position rows".into()));
        }
        let d = rows[0].len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::ShapeMismatch {
                context: "latent position rows",
                expected: format!("{d} columns"),
                found: "ragged rows".into(),
            });
        }
        LatentPositions::new(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn d(&self) -> usize {
        self.mat.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.mat.row(i).iter().copied().collect()
    }

    pub fn dot(&self, i: usize, j: usize) -> f64 {
        self.mat.row(i).dot(&self.mat.row(j))
    }

    /// CSV encoding, one row per vertex.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n() {
            let row: Vec<String> = self.mat.row(i).iter().map(|v| format!("{v}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GraphFormat {
    EdgeList,
    DenseCsv,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct LoadOptions {
    pub format: GraphFormat,
    /// 0- or 1-based vertex indexing for edge lists.
    pub index_base: usize,
    /// Skip one header line in dense CSV input.
    pub header: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { format: GraphFormat::EdgeList, index_base: 0, header: false }
    }
}

/// A loaded, validated graph plus load-time bookkeeping.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: AdjacencyMatrix,
    /// Self-loops present in the input are dropped, not errors.
    pub dropped_self_loops: usize,
}

/// Load an undirected binary graph from a file.
pub fn load_graph(path: &Path, options: &LoadOptions) -> Result<LoadedGraph> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_graph(&text, options, path)
}

/// Parse graph text in the given format. `origin` is used in error messages.
pub fn parse_graph(text: &str, options: &LoadOptions, origin: &Path) -> Result<LoadedGraph> {
    match options.format {
        GraphFormat::EdgeList => parse_edge_list(text, options.index_base, origin),
        GraphFormat::DenseCsv => parse_dense_csv(text, options.header, origin),
    }
}

fn parse_edge_list(text: &str, index_base: usize, origin: &Path) -> Result<LoadedGraph> {
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut dropped = 0usize;
    let mut max_idx = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let (a, b) = match (tokens.next(), tokens.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: lineno + 1,
                    message: format!("expected at least two vertex indices, got {line:?}"),
                })
            }
        };
        // any third column (weights) is ignored
        let parse_idx = |tok: &str| -> Result<usize> {
            let v: i64 = tok.parse().map_err(|_| Error::Parse {
                path: origin.to_path_buf(),
                line: lineno + 1,
                message: format!("invalid vertex index {tok:?}"),
            })?;
            if v < index_base as i64 {
                return Err(Error::IndexOutOfRange { line: lineno + 1, index: v, base: index_base });
            }
            Ok((v - index_base as i64) as usize)
        };
        let (i, j) = (parse_idx(a)?, parse_idx(b)?);
        if i == j {
            dropped += 1;
            continue;
        }
        max_idx = max_idx.max(i).max(j);
        edges.push((i, j));
    }
    if edges.is_empty() {
        return Err(Error::Degenerate(format!("{} contains no edges", origin.display())));
    }
    let n = max_idx + 1;
    let mut mat = DMatrix::zeros(n, n);
    for (i, j) in edges {
        mat[(i, j)] = 1.0;
        mat[(j, i)] = 1.0;
    }
    Ok(LoadedGraph { graph: AdjacencyMatrix { mat, directed: false }, dropped_self_loops: dropped })
}

fn parse_dense_csv(text: &str, header: bool, origin: &Path) -> Result<LoadedGraph> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut lines = text.lines().enumerate();
    if header {
        lines.next();
    }
    for (lineno, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>> = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: origin.to_path_buf(),
                    line: lineno + 1,
                    message: format!("invalid numeric entry {:?}", tok.trim()),
                })
            })
            .collect();
        rows.push(row?);
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::Degenerate(format!("{} contains no rows", origin.display())));
    }
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::ShapeMismatch {
            context: "dense csv adjacency",
            expected: format!("{n}x{n}"),
            found: format!("{n} rows with uneven lengths"),
        });
    }
    let mut mat = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let mut dropped = 0usize;
    for i in 0..n {
        if mat[(i, i)] != 0.0 {
            mat[(i, i)] = 0.0;
            dropped += 1;
        }
    }
    let graph = AdjacencyMatrix { mat, directed: false };
    let violations = graph.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidGraph(violations));
    }
    Ok(LoadedGraph { graph, dropped_self_loops: dropped })
}

pub(crate) fn clip01(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// Sample an undirected random dot product graph: edge (i, j) is Bernoulli
/// with probability clip(x_i . x_j, 0, 1), independently over pairs.
pub fn sample_rdpg(x: &LatentPositions, seed: RngSeed) -> AdjacencyMatrix {
    let n = x.n();
    let mut rng = seed.rng();
    let mut mat = DMatrix::zeros(n, n);
    for i in 1..n {
        for j in 0..i {
            let p = clip01(x.dot(i, j));
            if rng.random_bool(p) {
                mat[(i, j)] = 1.0;
                mat[(j, i)] = 1.0;
            }
        }
    }
    AdjacencyMatrix { mat, directed: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;
    use std::path::PathBuf;

    fn origin() -> PathBuf {
        PathBuf::from("<test>")
    }

    #[test]
    fn edge_list_two_edges_gives_three_vertices() {
        let loaded =
            parse_graph("0 1\n1 2\n", &LoadOptions::default(), &origin()).unwrap();
        let g = loaded.graph;
        assert_eq!(g.n(), 3);
        assert_eq!(g.matrix()[(0, 1)], 1.0);
        assert_eq!(g.matrix()[(1, 0)], 1.0);
        assert_eq!(g.matrix()[(1, 2)], 1.0);
        assert_eq!(g.matrix()[(0, 2)], 0.0);
        assert!(g.validate().is_empty());
        assert_eq!(loaded.dropped_self_loops, 0);
    }

    #[test]
    fn one_based_edge_list_shifts_indices() {
        let opts = LoadOptions { index_base: 1, ..LoadOptions::default() };
        let loaded = parse_graph("1 2\n2 3\n", &opts, &origin()).unwrap();
        assert_eq!(loaded.graph.n(), 3);
        assert_eq!(loaded.graph.matrix()[(0, 1)], 1.0);
    }

    #[test]
    fn zero_index_in_one_based_input_is_out_of_range() {
        let opts = LoadOptions { index_base: 1, ..LoadOptions::default() };
        let err = parse_graph("0 1\n", &opts, &origin()).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { index: 0, .. }));
    }

    #[test]
    fn self_loops_are_dropped_and_counted() {
        let loaded = parse_graph("0 0\n0 1\n2 2\n1 2\n", &LoadOptions::default(), &origin()).unwrap();
        assert_eq!(loaded.dropped_self_loops, 2);
        assert!(loaded.graph.validate().is_empty());
    }

    #[test]
    fn third_column_is_ignored() {
        let loaded = parse_graph("0 1 0.75\n1 2 3\n", &LoadOptions::default(), &origin()).unwrap();
        assert_eq!(loaded.graph.n(), 3);
        assert_eq!(loaded.graph.edge_count(), 2);
    }

    #[test]
    fn dense_csv_roundtrip_with_header() {
        let text = "a,b,c\n0,1,0\n1,0,1\n0,1,0\n";
        let opts = LoadOptions { format: GraphFormat::DenseCsv, header: true, index_base: 0 };
        let loaded = parse_graph(text, &opts, &origin()).unwrap();
        assert_eq!(loaded.graph.n(), 3);
        assert_eq!(loaded.graph.edge_count(), 2);
        let csv = loaded.graph.to_dense_csv();
        let reloaded = parse_graph(
            &csv,
            &LoadOptions { format: GraphFormat::DenseCsv, header: false, index_base: 0 },
            &origin(),
        )
        .unwrap();
        assert_eq!(reloaded.graph, loaded.graph);
    }

    #[test]
    fn asymmetric_dense_csv_is_rejected() {
        let text = "0,1,0\n0,0,1\n0,1,0\n";
        let opts = LoadOptions { format: GraphFormat::DenseCsv, header: false, index_base: 0 };
        let err = parse_graph(text, &opts, &origin()).unwrap_err();
        assert!(matches!(err, Error::InvalidGraph(_)));
    }

    #[test]
    fn non_binary_dense_entry_is_rejected() {
        let text = "0,0.5\n0.5,0\n";
        let opts = LoadOptions { format: GraphFormat::DenseCsv, header: false, index_base: 0 };
        let err = parse_graph(text, &opts, &origin()).unwrap_err();
        match err {
            Error::InvalidGraph(violations) => {
                assert!(violations.iter().any(|v| matches!(v, Violation::NonBinary { .. })));
            }
            other => panic!("expected InvalidGraph, got {other:?}"),
        }
    }

    #[test]
    fn validate_reports_diagonal_violation() {
        let mut mat = DMatrix::zeros(3, 3);
        mat[(0, 0)] = 1.0;
        let report = AdjacencyMatrix::from_matrix(mat).validate();
        assert!(report.iter().any(|v| matches!(v, Violation::NotHollow { i: 0 })));
    }

    #[test]
    fn validate_accepts_zero_matrix() {
        let report = AdjacencyMatrix::from_matrix(DMatrix::zeros(4, 4)).validate();
        assert!(report.is_empty());
    }

    #[test]
    fn rdpg_sample_is_symmetric_hollow_binary() {
        let x = LatentPositions::from_rows(&vec![vec![0.5, 0.3]; 30]).unwrap();
        let g = sample_rdpg(&x, RngSeed::new(3));
        assert!(g.validate().is_empty());
    }

    #[test]
    fn rdpg_zero_positions_give_empty_graph() {
        let x = LatentPositions::new(DMatrix::zeros(20, 2)).unwrap();
        let g = sample_rdpg(&x, RngSeed::new(1));
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn rdpg_saturated_dot_products_give_complete_graph() {
        let x = LatentPositions::from_rows(&vec![vec![1.2]; 15]).unwrap();
        let g = sample_rdpg(&x, RngSeed::new(1));
        assert_eq!(g.edge_count(), 15 * 14 / 2);
    }

    #[test]
    fn rdpg_density_matches_expected_edge_probability() {
        // x ~ Unif(0.2, 0.7)^1 iid: E[x_i x_j] = 0.45^2 = 0.2025
        let mut rng = RngSeed::new(11).rng();
        let rows: Vec<Vec<f64>> = (0..1000)
            .map(|_| vec![rand::RngExt::random_range(&mut rng, 0.2..0.7)])
            .collect();
        let x = LatentPositions::from_rows(&rows).unwrap();
        let g = sample_rdpg(&x, RngSeed::new(12));
        assert!((g.density() - 0.2025).abs() < 0.01, "density {}", g.density());
    }

    #[test]
    fn rdpg_same_seed_is_reproducible() {
        let x = LatentPositions::from_rows(&vec![vec![0.4], vec![0.6], vec![0.5]]).unwrap();
        let a = sample_rdpg(&x, RngSeed::new(9));
        let b = sample_rdpg(&x, RngSeed::new(9));
        assert_eq!(a, b);
    }
}
