//! Discrete energy of a half-space field and the pointwise proximal map.

use fbreg::energy::{discrete_energy, lipschitz_bound, prox_pointwise};
use fbreg::model::{Grid, HalfSpaceSolution, Nonlinearity, VectorField};

fn main() -> fbreg::error::Result<()> {
    let nl = Nonlinearity::linear(1.0)?;
    let hs = HalfSpaceSolution::axis(2, 1, 1, 1.0);
    for k in [16, 32, 64, 128] {
        let grid = Grid::cube(2, -1.0, 1.0, 1.0 / k as f64)?;
        let u = VectorField::from_fn(grid.clone(), 1, |x| hs.eval(x));
        println!("h = 1/{k:<4} E = {:.8}  L = {:.1}", discrete_energy(&u, &nl)?, lipschitz_bound(&grid));
    }
    let exp = Nonlinearity::exp_saturating(1.0, 2.0)?;
    for w in [[0.05, 0.0], [0.3, -0.4], [2.0, 1.0]] {
        let v = prox_pointwise(&w, 0.1, &exp)?;
        println!("prox({w:?}) = [{:.6}, {:.6}]", v[0], v[1]);
    }
    Ok(())
}
