//! Adjacency spectral embedding, embedding-dimension selection, and the
//! plug-in limit covariance used for variance correction of embeddings from
//! graphs of unequal order.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{AdjacencyMatrix, LatentPositions};
use crate::rng::RngSeed;

/// Spectral embedding of one graph: estimated latent positions plus the
/// singular values that produced them.
#[derive(Debug, Clone)]
pub struct EmbeddingResult {
    pub positions: LatentPositions,
    /// The d retained singular values, nonincreasing.
    pub singular_values: Vec<f64>,
    /// Full singular spectrum (all n values, nonincreasing), for dimension
    /// selection diagnostics.
    pub spectrum: Vec<f64>,
}

#[derive(Serialize)]
struct EmbeddingJson<'a> {
    schema_version: u32,
    n: usize,
    d: usize,
    singular_values: &'a [f64],
    positions: Vec<Vec<f64>>,
}

impl EmbeddingResult {
    /// CSV encoding of the positions, one row per vertex.
    pub fn to_csv(&self) -> String {
        self.positions.to_csv()
    }

    pub fn to_json(&self) -> String {
        let view = EmbeddingJson {
            schema_version: 1,
            n: self.positions.n(),
            d: self.positions.d(),
            singular_values: &self.singular_values,
            positions: (0..self.positions.n()).map(|i| self.positions.row(i)).collect(),
        };
        serde_json::to_string_pretty(&view).expect("embedding serialization")
    }
}

/// Symmetric eigendecomposition with eigenpairs sorted by |eigenvalue|,
/// largest first. Ties keep the smaller original index first.
fn sorted_symmetric_eigen(mat: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = mat.nrows();
    let eig = mat.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .abs()
            .partial_cmp(&eig.eigenvalues[a].abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Adjacency spectral embedding: the top-d scaled singular vectors of A.
///
/// For symmetric A the singular values are |eigenvalues| and the embedding is
/// U_d * diag(sqrt(s_1..s_d)). Each retained vector is flipped so that its
/// entry of largest absolute value is positive, which fixes the sign
/// indeterminacy deterministically (the rotation indeterminacy remains and is
/// handled by the alignment step).
pub fn ase(a: &AdjacencyMatrix, d: usize) -> Result<EmbeddingResult> {
    let n = a.n();
    if d == 0 {
        return Err(Error::Degenerate("embedding dimension must be >= 1".into()));
    }
    if d > n {
        return Err(Error::DimensionTooLarge { d, n });
    }
    let (values, vectors) = sorted_symmetric_eigen(a.matrix().clone());
    let spectrum: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let singular_values: Vec<f64> = spectrum[..d].to_vec();

    let mut positions = DMatrix::zeros(n, d);
    for j in 0..d {
        let col = vectors.column(j);
        // flip so the entry of largest magnitude is positive
        let mut lead = 0;
        for i in 1..n {
            if col[i].abs() > col[lead].abs() {
                lead = i;
            }
        }
        let sign = if col[lead] < 0.0 { -1.0 } else { 1.0 };
        let scale = singular_values[j].sqrt();
        for i in 0..n {
            positions[(i, j)] = sign * col[i] * scale;
        }
    }
    Ok(EmbeddingResult {
        positions: LatentPositions::new(positions)?,
        singular_values,
        spectrum,
    })
}

/// Outcome of profile-likelihood dimension selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimensionSelection {
    pub dimension: usize,
    /// True when all input values are equal; the returned dimension of 1 is
    /// then a convention, not an elbow.
    pub degenerate: bool,
}

/// Select an embedding dimension by the profile-likelihood elbow method:
/// model the sorted values as two Gaussian segments with separate means and a
/// pooled variance, and return the split maximizing the total log-likelihood.
///
/// `max_candidates` caps the number of splits examined (splits q = 1..=cap,
/// cap = min(len - 1, max_candidates)).
pub fn select_dimension(values: &[f64], max_candidates: usize) -> Result<DimensionSelection> {
    let p = values.len();
    if p < 2 {
        return Err(Error::TooFewSamples { n: p, min: 2 });
    }
    if max_candidates == 0 {
        return Err(Error::Degenerate("max_candidates must be >= 1".into()));
    }
    if values.iter().all(|&v| v == values[0]) {
        return Ok(DimensionSelection { dimension: 1, degenerate: true });
    }
    let max_q = (p - 1).min(max_candidates);
    let mut best_q = 1;
    let mut best_ll = f64::NEG_INFINITY;
    for q in 1..=max_q {
        let ll = split_log_likelihood(values, q);
        if ll > best_ll {
            best_ll = ll;
            best_q = q;
        }
    }
    Ok(DimensionSelection { dimension: best_q, degenerate: false })
}

fn split_log_likelihood(values: &[f64], q: usize) -> f64 {
    let p = values.len() as f64;
    let (head, tail) = values.split_at(q);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (m1, m2) = (mean(head), mean(tail));
    let ss: f64 = head.iter().map(|v| (v - m1).powi(2)).sum::<f64>()
        + tail.iter().map(|v| (v - m2).powi(2)).sum::<f64>();
    let var = ss / p; // pooled maximum-likelihood variance
    if var <= 0.0 {
        // a perfect two-segment fit dominates any imperfect one
        return f64::INFINITY;
    }
    // sum of log N(v; m_g, var) over both segments
    -0.5 * p * (2.0 * std::f64::consts::PI * var).ln() - ss / (2.0 * var)
}

/// Per-vertex plug-in estimate of the limiting embedding covariance.
#[derive(Debug, Clone)]
pub struct CltCovariance {
    per_vertex: Vec<DMatrix<f64>>,
}

impl CltCovariance {
    pub fn n(&self) -> usize {
        self.per_vertex.len()
    }

    pub fn vertex(&self, i: usize) -> &DMatrix<f64> {
        &self.per_vertex[i]
    }

    /// Test hook: zero covariance for every vertex.
    pub fn zeros(n: usize, d: usize) -> Self {
        CltCovariance { per_vertex: vec![DMatrix::zeros(d, d); n] }
    }
}

/// Plug-in estimate of the limiting covariance of each embedded vertex:
///
///   Sigma(x_i) = (1/n) Dinv [ (1/n) sum_j x_j x_j^T max(0, p_ij - p_ij^2) ] Dinv,
///
/// with p_ij = x_i . x_j and Dinv the inverse of the second moment matrix
/// (1/n) X^T X. Each estimate is symmetrized and projected to the positive
/// semidefinite cone by clipping negative eigenvalues to zero.
pub fn estimate_clt_covariance(x: &LatentPositions) -> Result<CltCovariance> {
    let (n, d) = (x.n(), x.d());
    let xm = x.matrix();
    let nf = n as f64;
    let delta = xm.transpose() * xm / nf;
    let delta_inv = delta
        .clone()
        .try_inverse()
        .ok_or(Error::SingularMoment)?;
    let mut per_vertex = Vec::with_capacity(n);
    for i in 0..n {
        let xi = xm.row(i);
        let mut inner = DMatrix::zeros(d, d);
        for j in 0..n {
            let xj = xm.row(j);
            let p = xi.dot(&xj);
            let bern = (p - p * p).max(0.0);
            if bern > 0.0 {
                // inner += bern * x_j x_j^T
                for a in 0..d {
                    for b in 0..d {
                        inner[(a, b)] += bern * xj[a] * xj[b];
                    }
                }
            }
        }
        inner /= nf;
        let sigma = &delta_inv * inner * &delta_inv / nf;
        per_vertex.push(project_psd(&sigma));
    }
    Ok(CltCovariance { per_vertex })
}

/// Symmetrize and clip negative eigenvalues to zero.
fn project_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let clipped = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&v| v.max(0.0)),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose()
}

/// Lower-triangular-free sampling factor: Sigma = F F^T via eigendecomposition
/// (valid for any positive semidefinite matrix).
pub(crate) fn mvn_factor(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = cov.clone().symmetric_eigen();
    let scale = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&v| v.max(0.0).sqrt()),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&scale)
}

pub(crate) fn sample_mvn_row<R: rand::Rng>(
    mean: &[f64],
    factor: &DMatrix<f64>,
    rng: &mut R,
) -> Vec<f64> {
    let d = mean.len();
    let z = DVector::from_iterator(d, (0..d).map(|_| {
        let v: f64 = StandardNormal.sample(rng);
        v
    }));
    let noise = factor * z;
    (0..d).map(|i| mean[i] + noise[i]).collect()
}

/// Inflate the embedding of the larger graph so its estimation noise matches
/// that of a graph with `n_small` vertices: add independent Gaussian noise
/// with covariance (n_large/n_small - 1) * Sigma(x_i) to each row.
pub fn variance_correct(
    x_large: &LatentPositions,
    n_small: usize,
    seed: RngSeed,
) -> Result<LatentPositions> {
    let covs = estimate_clt_covariance(x_large)?;
    let factor = correction_factor(x_large.n(), n_small)?;
    add_scaled_noise(x_large, &covs, factor, seed)
}

pub(crate) fn correction_factor(n_large: usize, n_small: usize) -> Result<f64> {
    if n_small >= n_large {
        return Err(Error::NoCorrectionNeeded { n_large, n_small });
    }
    Ok(n_large as f64 / n_small as f64 - 1.0)
}

/// Noise-addition core, separated so tests can drive it with explicit
/// covariances (zero covariance must reproduce the input exactly).
pub fn add_scaled_noise(
    x: &LatentPositions,
    covs: &CltCovariance,
    factor: f64,
    seed: RngSeed,
) -> Result<LatentPositions> {
    let (n, d) = (x.n(), x.d());
    if covs.n() != n {
        return Err(Error::ShapeMismatch {
            context: "covariance count vs vertex count",
            expected: format!("{n}"),
            found: format!("{}", covs.n()),
        });
    }
    let mut rng = seed.rng();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let fac = mvn_factor(&(covs.vertex(i) * factor));
        rows.push(sample_mvn_row(&x.row(i), &fac, &mut rng));
    }
    let _ = d;
    LatentPositions::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::sample_rdpg;
    use nalgebra::DMatrix;
    use rand::RngExt;

    fn complete_graph(n: usize) -> AdjacencyMatrix {
        AdjacencyMatrix::from_matrix(DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 }))
    }

    #[test]
    fn ase_complete_graph_dim1_has_constant_squared_entries() {
        // K_4 = J - I: leading eigenvalue 3, eigenvector 1/2 * ones, so each
        // squared embedding entry is 3/4.
        let e = ase(&complete_graph(4), 1).unwrap();
        for i in 0..4 {
            let v = e.positions.matrix()[(i, 0)];
            assert!((v * v - 0.75).abs() < 1e-12);
            assert!(v > 0.0, "sign convention must make entries positive");
        }
        assert!((e.singular_values[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn ase_rank_one_outer_product_recovers_vector() {
        let x = [0.1, 0.5, 0.2, 0.8, 0.2];
        let n = x.len();
        let a = AdjacencyMatrix::from_matrix(DMatrix::from_fn(n, n, |i, j| x[i] * x[j]));
        let e = ase(&a, 1).unwrap();
        for i in 0..n {
            assert!((e.positions.matrix()[(i, 0)] - x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn ase_rejects_dimension_above_order() {
        assert!(matches!(
            ase(&complete_graph(3), 4),
            Err(Error::DimensionTooLarge { d: 4, n: 3 })
        ));
    }

    #[test]
    fn ase_spectrum_is_nonincreasing_magnitudes() {
        let x = LatentPositions::from_rows(
            &(0..40).map(|i| vec![0.3 + 0.01 * (i % 7) as f64, 0.2]).collect::<Vec<_>>(),
        )
        .unwrap();
        let g = sample_rdpg(&x, RngSeed::new(5));
        let e = ase(&g, 2).unwrap();
        for w in e.spectrum.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
        assert!(e.spectrum.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn select_dimension_single_spike() {
        let sel = select_dimension(&[100.0, 1.0, 1.0, 1.0], 3).unwrap();
        assert_eq!(sel.dimension, 1);
        assert!(!sel.degenerate);
    }

    #[test]
    fn select_dimension_three_elbow() {
        let sel = select_dimension(&[10.0, 9.5, 9.0, 1.0, 0.9, 0.8], 5).unwrap();
        assert_eq!(sel.dimension, 3);
    }

    #[test]
    fn select_dimension_all_equal_is_degenerate() {
        let sel = select_dimension(&[2.0, 2.0, 2.0], 2).unwrap();
        assert_eq!(sel.dimension, 1);
        assert!(sel.degenerate);
    }

    #[test]
    fn select_dimension_needs_two_values() {
        assert!(select_dimension(&[1.0], 1).is_err());
    }

    #[test]
    fn select_dimension_respects_candidate_cap() {
        // true elbow at 3, but cap of 1 restricts the search to q = 1
        let sel = select_dimension(&[10.0, 9.5, 9.0, 1.0, 0.9, 0.8], 1).unwrap();
        assert_eq!(sel.dimension, 1);
    }

    #[test]
    fn clt_covariance_constant_rows_matches_hand_value() {
        // d=1, all rows 0.5, n=100: Delta = 0.25, bernoulli var = 0.1875,
        // Sigma = (1/100) * 4 * (0.25 * 0.1875) * 4 = 0.0075
        let x = LatentPositions::from_rows(&vec![vec![0.5]; 100]).unwrap();
        let covs = estimate_clt_covariance(&x).unwrap();
        for i in 0..100 {
            assert!((covs.vertex(i)[(0, 0)] - 0.0075).abs() < 1e-12);
        }
    }

    #[test]
    fn clt_covariance_halves_when_rows_duplicated() {
        let mut rng = RngSeed::new(21).rng();
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| vec![rng.random_range(0.3..0.6), rng.random_range(0.1..0.3)])
            .collect();
        let doubled: Vec<Vec<f64>> = rows.iter().chain(rows.iter()).cloned().collect();
        let c1 = estimate_clt_covariance(&LatentPositions::from_rows(&rows).unwrap()).unwrap();
        let c2 = estimate_clt_covariance(&LatentPositions::from_rows(&doubled).unwrap()).unwrap();
        for i in 0..60 {
            for a in 0..2 {
                for b in 0..2 {
                    let full = c1.vertex(i)[(a, b)];
                    let half = c2.vertex(i)[(a, b)];
                    if full.abs() > 1e-12 {
                        let ratio = half / full;
                        assert!((ratio - 0.5).abs() < 0.05 * 0.5, "ratio {ratio}");
                    }
                }
            }
        }
    }

    #[test]
    fn clt_covariance_is_orthogonally_equivariant() {
        let mut rng = RngSeed::new(22).rng();
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![rng.random_range(0.3..0.6), rng.random_range(0.1..0.3)])
            .collect();
        let x = LatentPositions::from_rows(&rows).unwrap();
        let theta: f64 = 0.7;
        let w = DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]);
        let xw = LatentPositions::new(x.matrix() * &w).unwrap();
        let c = estimate_clt_covariance(&x).unwrap();
        let cw = estimate_clt_covariance(&xw).unwrap();
        for i in 0..50 {
            let expected = w.transpose() * c.vertex(i) * &w;
            let diff = (cw.vertex(i) - expected).abs().max();
            assert!(diff < 1e-10, "vertex {i} diff {diff}");
        }
    }

    #[test]
    fn clt_covariance_rejects_rank_deficient_moment() {
        // second column identically zero makes the moment matrix singular
        let x = LatentPositions::from_rows(&vec![vec![0.5, 0.0]; 30]).unwrap();
        assert!(matches!(estimate_clt_covariance(&x), Err(Error::SingularMoment)));
    }

    #[test]
    fn variance_correct_rejects_equal_or_larger_small_side() {
        let x = LatentPositions::from_rows(&vec![vec![0.5]; 30]).unwrap();
        assert!(variance_correct(&x, 30, RngSeed::new(1)).is_err());
        assert!(variance_correct(&x, 31, RngSeed::new(1)).is_err());
    }

    #[test]
    fn zero_covariance_noise_is_identity() {
        let x = LatentPositions::from_rows(&vec![vec![0.4, 0.2]; 25]).unwrap();
        let out = add_scaled_noise(&x, &CltCovariance::zeros(25, 2), 1.0, RngSeed::new(2)).unwrap();
        assert_eq!(out.matrix(), x.matrix());
    }

    #[test]
    fn variance_correction_noise_has_expected_variance() {
        // constant rows 0.5 with n=100 give Sigma = 0.0075 per vertex;
        // n_small = 50 gives factor 1, so added noise variance is 0.0075.
        // Pool 10 independent corrections for 1000 noise draws.
        let x = LatentPositions::from_rows(&vec![vec![0.5]; 100]).unwrap();
        let mut deltas = Vec::with_capacity(1000);
        for s in 0..10 {
            let out = variance_correct(&x, 50, RngSeed::new(100 + s)).unwrap();
            for i in 0..100 {
                deltas.push(out.matrix()[(i, 0)] - 0.5);
            }
        }
        let mean: f64 = deltas.iter().sum::<f64>() / deltas.len() as f64;
        let var: f64 =
            deltas.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (deltas.len() - 1) as f64;
        let target = 0.0075;
        assert!((var - target).abs() < 0.1 * target, "variance {var} vs {target}");
    }

    #[test]
    fn embedding_error_shrinks_with_graph_size() {
        // mean squared embedding error (after the optimal sign flip) should
        // be smaller at n=500 than n=100, averaged over replicates
        let mse_for = |n: usize, rep: u64| -> f64 {
            let seed = RngSeed::new(777).child(n as u64).child(rep);
            let mut rng = seed.rng();
            let rows: Vec<Vec<f64>> =
                (0..n).map(|_| vec![rng.random_range(0.2..0.7)]).collect();
            let x = LatentPositions::from_rows(&rows).unwrap();
            let g = sample_rdpg(&x, seed.child(1));
            let e = ase(&g, 1).unwrap();
            let err = |sign: f64| -> f64 {
                (0..n)
                    .map(|i| (sign * e.positions.matrix()[(i, 0)] - rows[i][0]).powi(2))
                    .sum::<f64>()
                    / n as f64
            };
            err(1.0).min(err(-1.0))
        };
        let reps = 20;
        let m100: f64 = (0..reps).map(|r| mse_for(100, r)).sum::<f64>() / reps as f64;
        let m500: f64 = (0..reps).map(|r| mse_for(500, r)).sum::<f64>() / reps as f64;
        assert!(m500 < m100, "mse at n=500 ({m500}) should be below n=100 ({m100})");
    }

    #[test]
    fn embedding_json_has_schema_version() {
        let e = ase(&complete_graph(4), 1).unwrap();
        let json = e.to_json();
        assert!(json.contains("\"schema_version\": 1"));
        assert!(json.contains("singular_values"));
    }
}
