//! Regenerate the bundled synthetic graph pair committed under `data/`.
//!
//! The two graphs play the role of left/right brain hemispheres: drawn from
//! one latent distribution (so a correct test should not reject), with a
//! third latent coordinate designed to make median sign-matching unreliable.
//! Writes dense 0/1 CSVs; pass a directory argument to write elsewhere.

use std::path::PathBuf;

use graphtest::datasets;

fn main() {
    let outdir =
        std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("data"));
    std::fs::create_dir_all(&outdir).expect("create output directory");

    let (left, right) = datasets::bundled_pair();
    for (name, graph) in [("synthetic_left.csv", &left), ("synthetic_right.csv", &right)] {
        let n = graph.n();
        let edges: f64 = graph.matrix().iter().sum::<f64>() / 2.0;
        let density = edges / (n as f64 * (n as f64 - 1.0) / 2.0);
        let path = outdir.join(name);
        std::fs::write(&path, graph.to_dense_csv()).expect("write graph csv");
        println!("{}: {} vertices, {} edges, density {:.3}", path.display(), n, edges, density);
    }
    println!("master seed: {}", datasets::BUNDLED_SEED);
}
