//! Distance correlation between a point set and its labels.

use nalgebra::DMatrix;

use super::{Centering, CenteredSide};
use crate::error::{Error, Result};

/// Distance correlation of Z against E under the chosen centering.
///
/// With A, B the centered distance matrices, the statistic is
/// sum(A .* B) / sqrt(sum(A.^2) * sum(B.^2)); the N(N-3)-normalized variance
/// terms of the usual presentation cancel against the prefactor. Double
/// centering gives the classical (biased) statistic, U-centering the
/// unbiased one.
pub fn dcorr(z: &DMatrix<f64>, e: &DMatrix<f64>, centering: Centering) -> Result<f64> {
    let a = CenteredSide::new(z, centering)?;
    let b = CenteredSide::new(e, centering)?;
    dcorr_from_sides(&a, &b)
}

pub(crate) fn dcorr_from_sides(a: &CenteredSide, b: &CenteredSide) -> Result<f64> {
    let n = a.mat.nrows();
    if b.mat.nrows() != n {
        return Err(Error::ShapeMismatch {
            context: "dcorr sides",
            expected: format!("{n}"),
            found: format!("{}", b.mat.nrows()),
        });
    }
    if a.sum_sq <= 0.0 {
        return Err(Error::Degenerate("distance variance of Z is zero (constant sample)".into()));
    }
    if b.sum_sq <= 0.0 {
        return Err(Error::Degenerate("distance variance of E is zero (constant labels)".into()));
    }
    let mut num = 0.0;
    for i in 0..n {
        for j in 0..n {
            num += a.mat[(i, j)] * b.mat[(i, j)];
        }
    }
    let stat = num / (a.sum_sq * b.sum_sq).sqrt();
    if !stat.is_finite() {
        return Err(Error::Degenerate("non-finite distance correlation".into()));
    }
    Ok(stat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;
    use crate::rng::RngSeed;
    use nalgebra::DMatrix;
    use rand::RngExt;

    fn random_case(seed: u64, n: usize, d: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut rng = RngSeed::new(seed).rng();
        let z = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        // balanced labels in random order so no draw is constant
        let mut labels: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        use rand::seq::SliceRandom;
        labels.shuffle(&mut rng);
        let e = DMatrix::from_fn(n, 1, |i, _| labels[i]);
        (z, e)
    }

    #[test]
    fn matches_naive_oracle_both_centerings() {
        for seed in 0..20 {
            let (z, e) = random_case(seed, 4 + (seed as usize % 17), 1 + (seed as usize % 3));
            for centering in [Centering::Double, Centering::UCentered] {
                let fast = dcorr(&z, &e, centering).unwrap();
                let slow = reference::naive_dcorr(&z, &e, centering).unwrap();
                assert!(
                    (fast - slow).abs() < 1e-12,
                    "seed {seed} centering {centering:?}: {fast} vs {slow}"
                );
            }
        }
    }

    #[test]
    fn biased_statistic_is_bounded_by_one() {
        for seed in 30..40 {
            let (z, e) = random_case(seed, 25, 2);
            let v = dcorr(&z, &e, Centering::Double).unwrap();
            assert!((-1.0..=1.0).contains(&v), "value {v}");
        }
    }

    #[test]
    fn separated_clusters_give_large_statistic() {
        let n = 20;
        let mut rng = RngSeed::new(5).rng();
        let z = DMatrix::from_fn(2 * n, 2, |i, _| {
            let base = if i < n { 0.0 } else { 10.0 };
            base + rng.random_range(-0.1..0.1)
        });
        let e = DMatrix::from_fn(2 * n, 1, |i, _| if i < n { 0.0 } else { 1.0 });
        let v = dcorr(&z, &e, Centering::UCentered).unwrap();
        assert!(v > 0.9, "statistic {v}");
    }

    #[test]
    fn invariant_under_label_swap() {
        let (z, e) = random_case(77, 19, 2);
        let swapped = DMatrix::from_fn(e.nrows(), 1, |i, _| 1.0 - e[(i, 0)]);
        for centering in [Centering::Double, Centering::UCentered] {
            let a = dcorr(&z, &e, centering).unwrap();
            let b = dcorr(&z, &swapped, centering).unwrap();
            assert_eq!(a, b, "label swap must not change the statistic");
        }
    }

    #[test]
    fn invariant_under_orthogonal_rotation_of_points() {
        let (z, e) = random_case(78, 23, 2);
        let theta: f64 = 0.9;
        let q = DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]);
        let zr = &z * &q;
        for centering in [Centering::Double, Centering::UCentered] {
            let a = dcorr(&z, &e, centering).unwrap();
            let b = dcorr(&zr, &e, centering).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_points_are_degenerate() {
        let z = DMatrix::from_element(10, 2, 0.5);
        let e = DMatrix::from_fn(10, 1, |i, _| (i % 2) as f64);
        assert!(matches!(dcorr(&z, &e, Centering::UCentered), Err(Error::Degenerate(_))));
    }

    #[test]
    fn constant_labels_are_degenerate() {
        let (z, _) = random_case(9, 12, 1);
        let e = DMatrix::from_element(12, 1, 1.0);
        assert!(matches!(dcorr(&z, &e, Centering::Double), Err(Error::Degenerate(_))));
    }

    #[test]
    fn needs_at_least_four_samples() {
        let z = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 2.0]);
        let e = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 0.0]);
        assert!(dcorr(&z, &e, Centering::Double).is_err());
    }
}
