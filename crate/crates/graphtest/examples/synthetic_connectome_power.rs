//! Power of the paired-graph test on synthetic pairs grown from an
//! estimated connectome embedding.
//!
//! The bundled right-hemisphere graph is embedded at dimension 3 and used as
//! the source distribution. Pairs of graphs are resampled from it; in the
//! second graph a fraction `rho` of the vertices is pushed a fixed distance
//! away from its latent position. `rho = 0` is a null configuration,
//! `rho = 1` perturbs every sampled vertex.

use graphtest::datasets::bundled_pair;
use graphtest::embedding::ase;
use graphtest::rng::RngSeed;
use graphtest::sim::{run_synthetic_power, SyntheticConfig};
use graphtest::stats::StatKind;
use graphtest::sim::Alignment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (_, right) = bundled_pair();
    let source = ase(&right, 3)?.positions;
    println!(
        "source: right hemisphere embedding, {} vertices at dimension {}",
        source.n(),
        source.d()
    );

    let m_grid = [60usize, 120];
    let seed = RngSeed::new(5);
    println!("{:<8} {:<8} {:>4} {:>8} {:>18}", "rho", "align", "m", "rate", "95% interval");

    for rho in [0.0, 1.0] {
        for alignment in [Alignment::Median, Alignment::Otp] {
            let mut config = SyntheticConfig::new(source.clone());
            config.rho = rho;
            config.alignment = alignment;
            config.stat = StatKind::DcorrUnbiased;
            config.replicates = 20;
            config.permutations = 99;
            let curve = run_synthetic_power(&config, &m_grid, seed)?;
            for point in &curve.points {
                println!(
                    "{:<8} {:<8} {:>4} {:>8.3} {:>8.3} .. {:<8.3}",
                    rho,
                    alignment.name(),
                    point.n,
                    point.rate,
                    point.ci_lo,
                    point.ci_hi,
                );
            }
        }
    }

    println!();
    println!("At rho = 1 power climbs with m for both alignments. At rho = 0 the");
    println!("two alignments fail in opposite directions: the sign-flip cannot fix");
    println!("rotations between the two embeddings, so it rejects too often, while");
    println!("the paired construction ties the samples vertex by vertex and drags");
    println!("the transport-aligned statistic below its permutation null, so that");
    println!("rejection rate sits near zero rather than at the nominal level.");
    Ok(())
}
