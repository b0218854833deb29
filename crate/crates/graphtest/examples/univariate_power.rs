//! Small power study on one-dimensional random dot product graphs.
//!
//! Runs the three built-in latent scenarios (shared null, mean shift,
//! bimodal alternative) at a couple of graph sizes and prints empirical
//! rejection rates with Wilson intervals. Replicate counts are kept low so
//! the run finishes in about a minute; raise them for smoother estimates.

use graphtest::rng::RngSeed;
use graphtest::sim::{run_univariate_power, UnivariateScenario};
use graphtest::stats::StatKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_grid = [30usize, 60];
    let replicates = 20;
    let permutations = 99;
    let seed = RngSeed::new(5);

    let scenarios = [
        UnivariateScenario::Null,
        UnivariateScenario::LinearShift,
        UnivariateScenario::NonlinearBeta,
    ];
    let stats = [StatKind::DcorrUnbiased, StatKind::Mgc];

    println!(
        "{} replicates per cell, {} permutations, alpha 0.05",
        replicates, permutations
    );
    println!("{:<22} {:<14} {:>4} {:>8} {:>18}", "scenario", "stat", "n", "rate", "95% interval");

    for scenario in scenarios {
        for stat in stats {
            let curve = run_univariate_power(
                scenario,
                &n_grid,
                replicates,
                0.05,
                stat,
                permutations,
                seed,
            )?;
            for point in &curve.points {
                println!(
                    "{:<22} {:<14} {:>4} {:>8.3} {:>8.3} .. {:<8.3}",
                    scenario.name(),
                    stat.name(),
                    point.n,
                    point.rate,
                    point.ci_lo,
                    point.ci_hi,
                );
            }
        }
    }

    println!();
    println!("Under the null the rate should hover near 0.05; under either");
    println!("alternative it should climb with n. The bimodal scenario is the");
    println!("one where the multiscale statistic earns its keep.");
    Ok(())
}
