//! Multiscale graph correlation: local distance correlations over all
//! k-nearest-neighbor truncations of both distance matrices, with the
//! optimal scale chosen from the largest connected region of the grid that
//! beats the global statistic.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{pairwise_distances, u_center};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct MgcParams {
    /// Threshold added to the global statistic when selecting significant
    /// local scales; cells must exceed max(tau, c_nn).
    pub tau: f64,
    /// Rank neighbors by u-centered rows instead of raw distances
    /// (comparison switch; raw distances are the default).
    pub rank_centered: bool,
}

impl Default for MgcParams {
    fn default() -> Self {
        MgcParams { tau: 0.0, rank_centered: false }
    }
}

/// The scale at which the reported statistic was taken: the full grid corner
/// (global) or a local (k, l) pair, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MgcScale {
    Global,
    Local { k: usize, l: usize },
}

#[derive(Debug, Clone)]
pub struct MgcResult {
    pub statistic: f64,
    pub optimal_scale: MgcScale,
    /// local_grid[(k-1, l-1)] is the local correlation at scale (k, l).
    pub local_grid: DMatrix<f64>,
}

impl MgcResult {
    /// Global corner of the grid, equal to the unbiased distance correlation.
    pub fn global_statistic(&self) -> f64 {
        let n = self.local_grid.nrows();
        self.local_grid[(n - 1, n - 1)]
    }

    /// CSV dump of the local correlation grid (row k, column l).
    pub fn grid_csv(&self) -> String {
        let n = self.local_grid.nrows();
        let mut out = String::new();
        for k in 0..n {
            let row: Vec<String> =
                (0..n).map(|l| format!("{}", self.local_grid[(k, l)])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// One side of the MGC computation: u-centered distances plus per-row
/// neighbor ranks (self is rank 0; ties broken toward the lower index).
#[derive(Debug, Clone)]
pub(crate) struct MgcSide {
    pub centered: DMatrix<f64>,
    /// Flat row-major rank matrix; ranks[i*n + j] in 0..n.
    pub ranks: Vec<u32>,
}

impl MgcSide {
    pub fn new(points: &DMatrix<f64>, rank_centered: bool) -> Result<Self> {
        let dist = pairwise_distances(points);
        let centered = u_center(&dist)?;
        let source = if rank_centered { centered.matrix() } else { dist.matrix() };
        let ranks = row_ranks(source);
        Ok(MgcSide { centered: centered.matrix().clone(), ranks })
    }
}

/// Per-row neighbor ranks of a square matrix: entry (i, j) gets the position
/// of j when row i is sorted ascending, with i itself pinned to rank 0 and
/// ties ordered by index.
fn row_ranks(m: &DMatrix<f64>) -> Vec<u32> {
    let n = m.nrows();
    let mut ranks = vec![0u32; n * n];
    let mut order: Vec<usize> = Vec::with_capacity(n - 1);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_unstable_by(|&a, &b| {
            m[(i, a)].partial_cmp(&m[(i, b)]).unwrap().then(a.cmp(&b))
        });
        for (pos, &j) in order.iter().enumerate() {
            ranks[i * n + j] = (pos + 1) as u32;
        }
        ranks[i * n + i] = 0;
    }
    ranks
}

/// Multiscale graph correlation of Z against E.
pub fn mgc(z: &DMatrix<f64>, e: &DMatrix<f64>, params: &MgcParams) -> Result<MgcResult> {
    let a = MgcSide::new(z, params.rank_centered)?;
    let b = MgcSide::new(e, params.rank_centered)?;
    mgc_from_sides(&a, &b, params.tau)
}

pub(crate) fn mgc_from_sides(a: &MgcSide, b: &MgcSide, tau: f64) -> Result<MgcResult> {
    let n = a.centered.nrows();
    if b.centered.nrows() != n {
        return Err(Error::ShapeMismatch {
            context: "mgc sides",
            expected: format!("{n}"),
            found: format!("{}", b.centered.nrows()),
        });
    }

    // bucket products by rank pair, then 2-d prefix sums give every scale
    let mut prod = vec![0.0f64; n * n];
    let mut var_a = vec![0.0f64; n];
    let mut var_b = vec![0.0f64; n];
    for i in 0..n {
        for j in 0..n {
            let av = a.centered[(i, j)];
            let bv = b.centered[(i, j)];
            let u = a.ranks[i * n + j] as usize;
            let v = b.ranks[i * n + j] as usize;
            prod[u * n + v] += av * bv;
            var_a[u] += av * av;
            var_b[v] += bv * bv;
        }
    }
    for u in 0..n {
        for v in 0..n {
            let mut acc = prod[u * n + v];
            if u > 0 {
                acc += prod[(u - 1) * n + v];
            }
            if v > 0 {
                acc += prod[u * n + v - 1];
            }
            if u > 0 && v > 0 {
                acc -= prod[(u - 1) * n + v - 1];
            }
            prod[u * n + v] = acc;
        }
    }
    for u in 1..n {
        var_a[u] += var_a[u - 1];
        var_b[u] += var_b[u - 1];
    }
    if var_a[n - 1] <= 0.0 {
        return Err(Error::Degenerate("distance variance of Z is zero (constant sample)".into()));
    }
    if var_b[n - 1] <= 0.0 {
        return Err(Error::Degenerate("distance variance of E is zero (constant labels)".into()));
    }

    let grid = DMatrix::from_fn(n, n, |ki, li| {
        let den = var_a[ki] * var_b[li];
        if den > 0.0 {
            prod[ki * n + li] / den.sqrt()
        } else {
            0.0
        }
    });
    let c_nn = grid[(n - 1, n - 1)];
    let threshold = tau.max(c_nn);

    let (component, size) = largest_component_above(&grid, threshold);
    if size >= 2 * n {
        // optimal scale: maximum over the region, first cell in row-major
        // order on ties
        let mut best = f64::NEG_INFINITY;
        let mut best_cell = (n - 1, n - 1);
        for ki in 0..n {
            for li in 0..n {
                if component[ki * n + li] && grid[(ki, li)] > best {
                    best = grid[(ki, li)];
                    best_cell = (ki, li);
                }
            }
        }
        Ok(MgcResult {
            statistic: best,
            optimal_scale: MgcScale::Local { k: best_cell.0 + 1, l: best_cell.1 + 1 },
            local_grid: grid,
        })
    } else {
        Ok(MgcResult { statistic: c_nn, optimal_scale: MgcScale::Global, local_grid: grid })
    }
}

/// 4-connected components of {cells with value > threshold}; returns the
/// membership mask of the largest (earliest on ties) and its size.
fn largest_component_above(grid: &DMatrix<f64>, threshold: f64) -> (Vec<bool>, usize) {
    let n = grid.nrows();
    let mut label = vec![u32::MAX; n * n];
    let mut best_label = u32::MAX;
    let mut best_size = 0usize;
    let mut next = 0u32;
    let mut queue = Vec::new();
    for start in 0..n * n {
        if label[start] != u32::MAX || grid[(start / n, start % n)] <= threshold {
            continue;
        }
        let mut size = 0usize;
        queue.push(start);
        label[start] = next;
        while let Some(cell) = queue.pop() {
            size += 1;
            let (ki, li) = (cell / n, cell % n);
            let mut visit = |kk: usize, ll: usize| {
                let c = kk * n + ll;
                if label[c] == u32::MAX && grid[(kk, ll)] > threshold {
                    label[c] = next;
                    queue.push(c);
                }
            };
            if ki > 0 {
                visit(ki - 1, li);
            }
            if ki + 1 < n {
                visit(ki + 1, li);
            }
            if li > 0 {
                visit(ki, li - 1);
            }
            if li + 1 < n {
                visit(ki, li + 1);
            }
        }
        if size > best_size {
            best_size = size;
            best_label = next;
        }
        next += 1;
    }
    let mask: Vec<bool> = label.iter().map(|&v| v == best_label).collect();
    (mask, best_size)
}
