//! Entropically regularized optimal transport on a small cost matrix:
//! watch the plan sharpen toward the exact assignment as the regularizer
//! shrinks, while the marginals stay uniform to machine precision.

use graphtest::alignment::sinkhorn_plan;
use nalgebra::DMatrix;

fn main() {
    // Cost favoring the diagonal, with one off-diagonal temptation.
    let cost = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 2.0, 4.0, 6.0, //
            2.0, 0.1, 2.0, 4.0, //
            4.0, 2.0, 0.2, 1.0, //
            6.0, 4.0, 1.2, 0.3,
        ],
    );

    // Below roughly reg = 0.05 the kernel exp(-cost/reg) underflows for
    // this cost scale, so stop at 0.1.
    for reg in [1.0, 0.3, 0.1] {
        let plan = sinkhorn_plan(&cost, reg, 1e-8, 50_000).unwrap();
        let p = plan.matrix();
        let objective: f64 = p.component_mul(&cost).sum();
        let diag_mass: f64 = (0..4).map(|i| p[(i, i)]).sum();
        println!("reg = {reg}");
        for i in 0..4 {
            let row: Vec<String> = (0..4).map(|j| format!("{:.4}", p[(i, j)])).collect();
            println!("  [{}]", row.join(" "));
        }
        println!("  objective {objective:.4}, diagonal mass {diag_mass:.4}");
        let worst_row = (0..4)
            .map(|i| (p.row(i).sum() - 0.25).abs())
            .fold(0.0_f64, f64::max);
        let worst_col = (0..4)
            .map(|j| (p.column(j).sum() - 0.25).abs())
            .fold(0.0_f64, f64::max);
        println!("  worst marginal violation {:.2e}", worst_row.max(worst_col));
    }

    // Rectangular problems work too: marginals are 1/n and 1/m.
    let wide = DMatrix::from_fn(3, 5, |i, j| ((i as f64) - (j as f64)).abs());
    let plan = sinkhorn_plan(&wide, 0.1, 1e-8, 50_000).unwrap();
    println!(
        "3x5 plan row sums: {:?}",
        (0..3).map(|i| plan.matrix().row(i).sum()).collect::<Vec<f64>>()
    );
}
