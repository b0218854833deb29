//! Distance-based dependence statistics between a pooled point set and its
//! sample labels, with permutation p-values.

mod dcorr;
mod mgc;
mod permutation;

pub use dcorr::dcorr;
pub(crate) use dcorr::dcorr_from_sides;
pub use mgc::{mgc, MgcParams, MgcResult, MgcScale};
pub use permutation::{permutation_test, permutation_test_with, StatKind, TestResult};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::LatentPositions;

/// Distance metric tag. Only Euclidean is used here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
}

/// Pairwise distance matrix: nonnegative, symmetric, zero diagonal.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    mat: DMatrix<f64>,
    pub metric: Metric,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Centering {
    /// Subtract row and column means, add back the grand mean (all over N).
    Double,
    /// U-centering: means over N-2, grand over (N-1)(N-2), zero diagonal.
    UCentered,
}

/// A centered distance matrix tagged with the centering that produced it.
#[derive(Debug, Clone)]
pub struct CenteredDistanceMatrix {
    mat: DMatrix<f64>,
    pub centering: Centering,
}

impl CenteredDistanceMatrix {
    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }
}

/// Euclidean distances between the rows of `points`.
pub fn pairwise_distances(points: &DMatrix<f64>) -> DistanceMatrix {
    let n = points.nrows();
    let mut mat = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut s = 0.0;
            for c in 0..points.ncols() {
                let diff = points[(i, c)] - points[(j, c)];
                s += diff * diff;
            }
            let d = s.sqrt();
            mat[(i, j)] = d;
            mat[(j, i)] = d;
        }
    }
    DistanceMatrix { mat, metric: Metric::Euclidean }
}

/// Classical double centering: D'_ij = D_ij - rowmean_i - colmean_j + grand.
pub fn double_center(d: &DistanceMatrix) -> CenteredDistanceMatrix {
    let n = d.n();
    let nf = n as f64;
    let m = d.matrix();
    let mut row_means = vec![0.0; n];
    let mut col_means = vec![0.0; n];
    let mut grand = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = m[(i, j)];
            row_means[i] += v;
            col_means[j] += v;
            grand += v;
        }
    }
    for v in row_means.iter_mut().chain(col_means.iter_mut()) {
        *v /= nf;
    }
    grand /= nf * nf;
    let mat = DMatrix::from_fn(n, n, |i, j| m[(i, j)] - row_means[i] - col_means[j] + grand);
    CenteredDistanceMatrix { mat, centering: Centering::Double }
}

/// U-centering: row/column means over N-2, grand mean over (N-1)(N-2), and a
/// zeroed diagonal. Requires N >= 4.
pub fn u_center(d: &DistanceMatrix) -> Result<CenteredDistanceMatrix> {
    let n = d.n();
    if n < 4 {
        return Err(Error::TooFewSamples { n, min: 4 });
    }
    let m = d.matrix();
    let denom = (n - 2) as f64;
    let mut row_sums = vec![0.0; n];
    let mut col_sums = vec![0.0; n];
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = m[(i, j)];
            row_sums[i] += v;
            col_sums[j] += v;
            total += v;
        }
    }
    let grand = total / (((n - 1) * (n - 2)) as f64);
    let mut mat = DMatrix::from_fn(n, n, |i, j| {
        m[(i, j)] - row_sums[i] / denom - col_sums[j] / denom + grand
    });
    for i in 0..n {
        mat[(i, i)] = 0.0;
    }
    Ok(CenteredDistanceMatrix { mat, centering: Centering::UCentered })
}

pub(crate) fn center(d: &DistanceMatrix, centering: Centering) -> Result<CenteredDistanceMatrix> {
    match centering {
        Centering::Double => {
            if d.n() < 4 {
                return Err(Error::TooFewSamples { n: d.n(), min: 4 });
            }
            Ok(double_center(d))
        }
        Centering::UCentered => u_center(d),
    }
}

/// Stack two samples into one point set with 0/1 labels: Z = [X; Y],
/// E = (0,...,0,1,...,1) as an (n+m) x 1 matrix.
pub fn ksample_transform(x: &LatentPositions, y: &LatentPositions) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if x.d() != y.d() {
        return Err(Error::ShapeMismatch {
            context: "k-sample transform dimensions",
            expected: format!("{}", x.d()),
            found: format!("{}", y.d()),
        });
    }
    let (n, m, d) = (x.n(), y.n(), x.d());
    let z = DMatrix::from_fn(n + m, d, |i, j| {
        if i < n {
            x.matrix()[(i, j)]
        } else {
            y.matrix()[(i - n, j)]
        }
    });
    let e = DMatrix::from_fn(n + m, 1, |i, _| if i < n { 0.0 } else { 1.0 });
    Ok((z, e))
}

/// One side of a dependence statistic: centered distances plus the sum of
/// squared entries. Building the two sides separately lets the permutation
/// loop reuse the Z side while recomputing only the label side.
#[derive(Debug, Clone)]
pub(crate) struct CenteredSide {
    pub mat: DMatrix<f64>,
    pub sum_sq: f64,
}

impl CenteredSide {
    pub fn new(points: &DMatrix<f64>, centering: Centering) -> Result<Self> {
        let centered = center(&pairwise_distances(points), centering)?;
        let sum_sq = centered.matrix().iter().map(|v| v * v).sum();
        Ok(CenteredSide { mat: centered.mat, sum_sq })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn line_points() -> DMatrix<f64> {
        DMatrix::from_column_slice(3, 1, &[0.0, 3.0, 4.0])
    }

    #[test]
    fn pairwise_distances_on_a_line() {
        let d = pairwise_distances(&line_points());
        let expected = [[0.0, 3.0, 4.0], [3.0, 0.0, 1.0], [4.0, 1.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((d.matrix()[(i, j)] - expected[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn double_center_matches_hand_computation() {
        // row means (7/3, 4/3, 5/3), grand mean 16/9; entries worked by hand
        let d = pairwise_distances(&line_points());
        let c = double_center(&d);
        let expected = [
            [-26.0 / 9.0, 10.0 / 9.0, 16.0 / 9.0],
            [10.0 / 9.0, -8.0 / 9.0, -2.0 / 9.0],
            [16.0 / 9.0, -2.0 / 9.0, -14.0 / 9.0],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (c.matrix()[(i, j)] - expected[i][j]).abs() < 1e-12,
                    "entry ({i},{j}) = {}",
                    c.matrix()[(i, j)]
                );
            }
        }
    }

    #[test]
    fn double_center_rows_and_columns_sum_to_zero() {
        let points = DMatrix::from_fn(17, 3, |i, j| ((i * 7 + j * 13) % 11) as f64 * 0.37);
        let c = double_center(&pairwise_distances(&points));
        for i in 0..17 {
            let row: f64 = (0..17).map(|j| c.matrix()[(i, j)]).sum();
            let col: f64 = (0..17).map(|j| c.matrix()[(j, i)]).sum();
            assert!(row.abs() < 1e-9, "row {i} sums to {row}");
            assert!(col.abs() < 1e-9, "col {i} sums to {col}");
        }
    }

    #[test]
    fn u_center_off_diagonal_rows_sum_to_zero() {
        let points = DMatrix::from_fn(15, 2, |i, j| ((i * 5 + j * 3) % 13) as f64 * 0.21);
        let c = u_center(&pairwise_distances(&points)).unwrap();
        for i in 0..15 {
            assert_eq!(c.matrix()[(i, i)], 0.0);
            let row: f64 = (0..15).filter(|&j| j != i).map(|j| c.matrix()[(i, j)]).sum();
            assert!(row.abs() < 1e-9, "row {i} sums to {row}");
        }
    }

    #[test]
    fn u_center_requires_four_points() {
        let d = pairwise_distances(&line_points());
        assert!(u_center(&d).is_err());
    }

    #[test]
    fn ksample_transform_stacks_and_labels() {
        let x = LatentPositions::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let y = LatentPositions::from_rows(&[vec![3.0], vec![4.0], vec![5.0]]).unwrap();
        let (z, e) = ksample_transform(&x, &y).unwrap();
        assert_eq!(z.nrows(), 5);
        assert_eq!(z[(0, 0)], 1.0);
        assert_eq!(z[(4, 0)], 5.0);
        let labels: Vec<f64> = e.column(0).iter().copied().collect();
        assert_eq!(labels, vec![0.0, 0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn ksample_transform_rejects_dimension_mismatch() {
        let x = LatentPositions::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let y = LatentPositions::from_rows(&[vec![3.0]]).unwrap();
        assert!(ksample_transform(&x, &y).is_err());
    }

    #[test]
    fn ksample_with_identical_blocks_duplicates_rows() {
        let x = LatentPositions::from_rows(&[vec![0.3, 0.1], vec![0.5, 0.2]]).unwrap();
        let (z, e) = ksample_transform(&x, &x).unwrap();
        assert_eq!(z.nrows(), 4);
        for j in 0..2 {
            assert_eq!(z[(0, j)], z[(2, j)]);
            assert_eq!(z[(1, j)], z[(3, j)]);
        }
        assert_eq!(e.column(0).iter().filter(|&&v| v == 0.0).count(), 2);
    }
}
