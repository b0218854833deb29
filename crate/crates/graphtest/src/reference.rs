//! Slow, literal reference implementations of the quantities the optimized
//! code paths compute. These exist so the fast versions can be checked
//! against something written with no shared structure: plain loops, explicit
//! formulas, exhaustive enumeration. They are exercised by the test suite
//! and are not meant for production use.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::stats::Centering;

/// Double centering by explicit row, column, and grand means.
pub fn naive_double_center(d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = d.nrows();
    let mut row_mean = vec![0.0; n];
    let mut col_mean = vec![0.0; n];
    let mut grand = 0.0;
    for i in 0..n {
        for j in 0..n {
            row_mean[i] += d[(i, j)];
            col_mean[j] += d[(i, j)];
            grand += d[(i, j)];
        }
    }
    for v in row_mean.iter_mut().chain(col_mean.iter_mut()) {
        *v /= n as f64;
    }
    grand /= (n * n) as f64;
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = d[(i, j)] - row_mean[i] - col_mean[j] + grand;
        }
    }
    out
}

/// U-centering with the n-2 / (n-1)(n-2) denominators and a zeroed diagonal.
pub fn naive_u_center(d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = d.nrows();
    if n < 4 {
        return Err(Error::TooFewSamples { n, min: 4 });
    }
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut row_sum = 0.0;
            let mut col_sum = 0.0;
            let mut total = 0.0;
            for t in 0..n {
                row_sum += d[(i, t)];
                col_sum += d[(t, j)];
            }
            for s in 0..n {
                for t in 0..n {
                    total += d[(s, t)];
                }
            }
            out[(i, j)] = d[(i, j)] - row_sum / (n as f64 - 2.0) - col_sum / (n as f64 - 2.0)
                + total / ((n as f64 - 1.0) * (n as f64 - 2.0));
        }
    }
    Ok(out)
}

fn euclidean_rows(points: &DMatrix<f64>) -> DMatrix<f64> {
    let n = points.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        let mut acc = 0.0;
        for c in 0..points.ncols() {
            let diff = points[(i, c)] - points[(j, c)];
            acc += diff * diff;
        }
        acc.sqrt()
    })
}

/// Distance correlation through the explicit variance route: the covariance
/// term divided by the product of the two distance standard deviations, each
/// normalized by n(n-3).
pub fn naive_dcorr(z: &DMatrix<f64>, e: &DMatrix<f64>, centering: Centering) -> Result<f64> {
    let n = z.nrows();
    if n < 4 {
        return Err(Error::TooFewSamples { n, min: 4 });
    }
    let dz = euclidean_rows(z);
    let de = euclidean_rows(e);
    let (a, b) = match centering {
        Centering::Double => (naive_double_center(&dz), naive_double_center(&de)),
        Centering::UCentered => (naive_u_center(&dz)?, naive_u_center(&de)?),
    };
    let norm = (n * (n - 3)) as f64;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for i in 0..n {
        for j in 0..n {
            cov += a[(i, j)] * b[(i, j)];
            var_a += a[(i, j)] * a[(i, j)];
            var_b += b[(i, j)] * b[(i, j)];
        }
    }
    cov /= norm;
    let sigma_a = (var_a / norm).sqrt();
    let sigma_b = (var_b / norm).sqrt();
    if sigma_a == 0.0 || sigma_b == 0.0 {
        return Err(Error::Degenerate("reference dcorr: zero distance variance".into()));
    }
    Ok(cov / (sigma_a * sigma_b))
}

/// Local correlation at scale (k, l), 1-based, computed from scratch with
/// explicit neighbor masks.
pub fn naive_local_correlation(
    z: &DMatrix<f64>,
    e: &DMatrix<f64>,
    k: usize,
    l: usize,
) -> Result<f64> {
    let n = z.nrows();
    let dz = euclidean_rows(z);
    let de = euclidean_rows(e);
    let a = naive_u_center(&dz)?;
    let b = naive_u_center(&de)?;

    // rank of j within row i: 0 for the point itself, then ascending
    // distance with ties broken toward the lower index
    let rank = |d: &DMatrix<f64>, i: usize, j: usize| -> usize {
        if i == j {
            return 0;
        }
        let mut r = 1;
        for t in 0..n {
            if t == i || t == j {
                continue;
            }
            if d[(i, t)] < d[(i, j)] || (d[(i, t)] == d[(i, j)] && t < j) {
                r += 1;
            }
        }
        r
    };

    let mut num = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for i in 0..n {
        for j in 0..n {
            let in_a = rank(&dz, i, j) < k;
            let in_b = rank(&de, i, j) < l;
            if in_a && in_b {
                num += a[(i, j)] * b[(i, j)];
            }
            if in_a {
                var_a += a[(i, j)] * a[(i, j)];
            }
            if in_b {
                var_b += b[(i, j)] * b[(i, j)];
            }
        }
    }
    if var_a > 0.0 && var_b > 0.0 {
        Ok(num / (var_a * var_b).sqrt())
    } else {
        Ok(0.0)
    }
}

/// Best rank-d approximation through a full singular value decomposition.
pub fn best_rank_approximation(a: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("svd with u");
    let vt = svd.v_t.expect("svd with v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| {
        svd.singular_values[y].partial_cmp(&svd.singular_values[x]).unwrap().then(x.cmp(&y))
    });
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    for &idx in order.iter().take(d) {
        let sigma = svd.singular_values[idx];
        let col = u.column(idx);
        let row = vt.row(idx);
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                out[(i, j)] += sigma * col[i] * row[j];
            }
        }
    }
    out
}

/// Profile-likelihood elbow selection evaluated term by term with the plain
/// normal log-density.
pub fn naive_select_dimension(values: &[f64]) -> Result<usize> {
    let p = values.len();
    if p < 2 {
        return Err(Error::TooFewSamples { n: p, min: 2 });
    }
    let log_pdf = |v: f64, mu: f64, var: f64| -> f64 {
        -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (v - mu) * (v - mu) / (2.0 * var)
    };
    let mut best_q = 1;
    let mut best_ll = f64::NEG_INFINITY;
    for q in 1..p {
        let head = &values[..q];
        let tail = &values[q..];
        let mu1: f64 = head.iter().sum::<f64>() / head.len() as f64;
        let mu2: f64 = tail.iter().sum::<f64>() / tail.len() as f64;
        let ss: f64 = head.iter().map(|v| (v - mu1) * (v - mu1)).sum::<f64>()
            + tail.iter().map(|v| (v - mu2) * (v - mu2)).sum::<f64>();
        let var = ss / p as f64;
        let ll = if var <= 0.0 {
            f64::INFINITY
        } else {
            head.iter().map(|&v| log_pdf(v, mu1, var)).sum::<f64>()
                + tail.iter().map(|&v| log_pdf(v, mu2, var)).sum::<f64>()
        };
        if ll > best_ll {
            best_ll = ll;
            best_q = q;
        }
    }
    Ok(best_q)
}

/// Exact optimal transport between uniform marginals by enumerating all
/// assignment permutations (Birkhoff vertices). Only usable for tiny n.
pub fn naive_transport_lp(cost: &DMatrix<f64>) -> DMatrix<f64> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "square cost matrix required");
    assert!(n <= 8, "exhaustive transport oracle is factorial in n");

    let mut perm: Vec<usize> = (0..n).collect();
    let mut best_perm = perm.clone();
    let mut best_cost = f64::INFINITY;
    let evaluate = |perm: &[usize], best_cost: &mut f64, best_perm: &mut Vec<usize>| {
        let total: f64 = perm.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
        if total < *best_cost {
            *best_cost = total;
            best_perm.copy_from_slice(perm);
        }
    };
    // iterative Heap's algorithm
    evaluate(&perm, &mut best_cost, &mut best_perm);
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            evaluate(&perm, &mut best_cost, &mut best_perm);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }

    let mut plan = DMatrix::zeros(n, n);
    for (i, &j) in best_perm.iter().enumerate() {
        plan[(i, j)] = 1.0 / n as f64;
    }
    plan
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhaustive_transport_picks_cheap_diagonal() {
        let mut cost = DMatrix::from_element(4, 4, 10.0);
        for i in 0..4 {
            cost[(i, i)] = 0.0;
        }
        let plan = naive_transport_lp(&cost);
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 0.25 } else { 0.0 };
                assert_eq!(plan[(i, j)], expected);
            }
        }
    }

    #[test]
    fn rank_approximation_reproduces_low_rank_input() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.5, 0.5, 0.0, 1.0, 0.25, 0.75]);
        let a = &x * x.transpose();
        let approx = best_rank_approximation(&a, 2);
        assert!((&a - &approx).norm() < 1e-12);
    }

    #[test]
    fn brute_force_dimension_matches_hand_example() {
        assert_eq!(naive_select_dimension(&[10.0, 9.5, 9.0, 1.0, 0.9, 0.8]).unwrap(), 3);
        assert_eq!(naive_select_dimension(&[100.0, 1.0, 1.0, 1.0]).unwrap(), 1);
    }
}
