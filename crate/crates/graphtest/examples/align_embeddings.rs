//! Embeddings of two graphs from the same latent distribution still differ
//! by an arbitrary orthogonal transform. This example embeds such a pair
//! and compares three ways of undoing the transform: doing nothing,
//! matching column median signs, and optimal transport Procrustes.
//!
//! The quality measure is the per-dimension sorted-quantile distance: near
//! zero when the two samples match in distribution, dimension by dimension.

use graphtest::alignment::{median_sign_flip, otp_align, sorted_quantile_distance, OtpParams};
use graphtest::embedding::ase;
use graphtest::graph::{sample_rdpg, LatentPositions};
use graphtest::rng::RngSeed;
use rand::RngExt;

fn draw(n: usize, seed: u64) -> LatentPositions {
    let mut rng = RngSeed::new(seed).rng();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            // an asymmetric second coordinate makes the sign flip visible
            let u = rng.random_range(0.5..0.7);
            let s = if rng.random_bool(0.7) {
                rng.random_range(0.25..0.45)
            } else {
                rng.random_range(-0.55..-0.35)
            };
            vec![u, s]
        })
        .collect();
    LatentPositions::from_rows(&rows).unwrap()
}

fn main() {
    let (x, y) = (draw(150, 1), draw(150, 2));
    let a = sample_rdpg(&x, RngSeed::new(3));
    let b = sample_rdpg(&y, RngSeed::new(4));
    let ea = ase(&a, 2).unwrap().positions;
    let eb = ase(&b, 2).unwrap().positions;

    // Each embedding's orientation is an accident of the eigensolver. Force
    // the unlucky case by reflecting the second coordinate of one side.
    let eb_rows: Vec<Vec<f64>> =
        (0..eb.n()).map(|i| { let r = eb.row(i); vec![r[0], -r[1]] }).collect();
    let eb = LatentPositions::from_rows(&eb_rows).unwrap();

    println!("raw:        quantile distance {:.4}", sorted_quantile_distance(&ea, &eb).unwrap());

    let (flipped, signs) = median_sign_flip(&ea, &eb).unwrap();
    println!(
        "median flip: quantile distance {:.4}  (signs {:?})",
        sorted_quantile_distance(&ea, &flipped).unwrap(),
        signs
    );

    let otp = otp_align(&ea, &eb, &OtpParams::default()).unwrap();
    let mapped = otp.aligned_positions(&eb);
    println!(
        "otp:        quantile distance {:.4}  (objective {:.5}, {} outer iterations, init {})",
        sorted_quantile_distance(&ea, &mapped).unwrap(),
        otp.objective,
        otp.iterations,
        otp.initialization
    );
}
