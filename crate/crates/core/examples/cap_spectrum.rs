//! First eigenvalues of the singular cap problem, Richardson-extrapolated.

use std::f64::consts::{FRAC_PI_2, PI};

use fbreg::spectral::{cap_eigen, cap_monotonicity, shift_bound_check, CapProblem};

fn main() -> fbreg::error::Result<()> {
    for n in [2, 3] {
        let e = cap_eigen(&CapProblem::new(n, FRAC_PI_2, 256), 3)?;
        println!("n = {n}: λ = {:?}, correlation with cos²θ {:.8}", e.lambdas, e.correlation);
        let direct = cap_eigen(&CapProblem::new(n, FRAC_PI_2, 256).direct(), 1)?;
        println!("        untransformed λ1 = {:.8}", direct.lambdas[0]);
        let ladder = cap_monotonicity(n, &[PI / 6.0, PI / 4.0, PI / 3.0, FRAC_PI_2], 256)?;
        println!("        λ1 by cap {:?}", ladder.lambda_1);
        let shift = shift_bound_check(&CapProblem::new(n, FRAC_PI_2, 256), 1, 1e-9)?;
        println!("        λ1 - 2 - λ1(-Δ') = {:.6}", shift.margin);
    }
    Ok(())
}
