//! Closed-form and reference solutions used to validate the solver.

use fbreg::model::{Nonlinearity, Potential};
use fbreg::oracle::{exact_linear_1d, exact_radial_linear, reference_radial, reference_solve_1d};
use fbreg::solver::SolveOptions;

fn main() -> fbreg::error::Result<()> {
    let c = exact_linear_1d(1.0, 0.0, 1.0, 0.125, 0.0)?;
    for x in [0.0, 0.25, 0.5, 0.75] {
        println!("1-D contact u({x}) = {:.6}", c.value(x));
    }
    let exp = Nonlinearity::exp_saturating(1.0, 2.0)?;
    let r = reference_solve_1d(&exp, 0.0, 1.0, 0.125, 0.0, 1.0 / 32.0, 4, &SolveOptions::default())?;
    println!("exp-saturating reference u(0.25) = {:.6} ({} iterations)", r.value(0.25), r.stats.iterations);

    for n in [2, 3] {
        let ex = exact_radial_linear(1.0, n, 1.0, 0.1)?;
        let prof = reference_radial(&Nonlinearity::linear(1.0)?, n, 1.0, 0.1, &[1.0], 2000)?;
        println!(
            "n = {n}: contact radius {:.6}, U(0.8) exact {:.6} reference {:.6}",
            ex.contact_radius,
            ex.value(0.8),
            prof.magnitude(0.8)
        );
    }
    println!("f(0) of exp-saturating: {}", exp.f0());
    Ok(())
}
