//! Compare the bundled left and right hemisphere graphs across embedding
//! dimensions, for both alignments and both test statistics.
//!
//! This is the workflow the `reproduce-table1` CLI subcommand runs at full
//! permutation count; here it uses 99 permutations per cell so it finishes
//! in about a minute. P-values below 0.05 are starred.

use graphtest::datasets::bundled_pair;
use graphtest::rng::RngSeed;
use graphtest::sim::{hemisphere_test, PairedTestOptions};
use graphtest::stats::StatKind;
use graphtest::sim::Alignment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (left, right) = bundled_pair();
    println!("left: {} vertices, right: {} vertices", left.n(), right.n());

    let d_grid = [1usize, 2, 3, 4, 5];
    let seed = RngSeed::new(7);
    let combos = [
        (StatKind::Mgc, Alignment::Otp),
        (StatKind::DcorrUnbiased, Alignment::Otp),
        (StatKind::Mgc, Alignment::Median),
        (StatKind::DcorrUnbiased, Alignment::Median),
    ];

    print!("{:<14} {:<8}", "stat", "align");
    for d in d_grid {
        print!(" {:>8}", format!("d={d}"));
    }
    println!();

    for (stat, alignment) in combos {
        let options = PairedTestOptions {
            alignment,
            stat,
            permutations: 99,
            variance_correction: false,
        };
        let table = hemisphere_test(&left, &right, &d_grid, &options, seed)?;
        print!("{:<14} {:<8}", stat.name(), alignment.name());
        for row in &table.rows {
            let star = if row.p_value < 0.05 { "*" } else { "" };
            print!(" {:>8}", format!("{:.3}{star}", row.p_value));
        }
        println!();
    }

    println!();
    println!("The sign-flip alignment can only fix coordinate reflections; once");
    println!("the embedding dimension is high enough that the two hemispheres'");
    println!("bases rotate apart, it reports a difference. The transport-based");
    println!("alignment resolves the rotation and keeps the p-values large.");
    Ok(())
}
