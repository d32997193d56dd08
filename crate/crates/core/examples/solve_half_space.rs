//! Solve the Dirichlet problem for a tilted half-space trace and compare
//! with the exact minimiser, then check uniqueness across starting points.

use fbreg::model::{Grid, HalfSpaceSolution, Nonlinearity, VectorField};
use fbreg::solver::{minimize, uniqueness_audit, zero_interior, SolveOptions};

fn main() -> fbreg::error::Result<()> {
    let nl = Nonlinearity::linear(1.0)?;
    let hs = HalfSpaceSolution::new(&[0.5, 1.0], &[0.6, 0.8], 1.0)?;
    let opts = SolveOptions::default();
    for k in [16, 32, 64] {
        let h = 1.0 / k as f64;
        let exact = VectorField::from_fn(Grid::cube(2, -1.0, 1.0, h)?, 2, |x| hs.eval(x));
        let (u, stats) = minimize(&zero_interior(&exact), &nl, &opts)?;
        println!(
            "h = 1/{k:<3} iters {:>5} {:?}  error {:.3e} ({:.3} h²)",
            stats.iterations,
            stats.stop_reason,
            u.max_abs_diff(&exact),
            u.max_abs_diff(&exact) / (h * h)
        );
    }
    let data = VectorField::from_fn(Grid::cube(2, -1.0, 1.0, 1.0 / 32.0)?, 2, |x| hs.eval(x));
    let exp = Nonlinearity::exp_saturating(1.0, 2.0)?;
    let report = uniqueness_audit(&data, &exp, &opts, 4, 1)?;
    println!("uniqueness: {} runs, max gap {:.2e}", report.runs, report.max_gap);
    Ok(())
}
