//! Polar quadrature on balls and interpolation of grid fields.

use fbreg::geometry::{ball_quadrature, interpolate, unit_ball_volume, BallQuadrature, QuadratureOrders};
use fbreg::model::{Grid, VectorField};

fn main() -> fbreg::error::Result<()> {
    for n in [2, 3] {
        let q = BallQuadrature::unit(n, 16, 64)?;
        let vol = q.integrate_volume(|_| 1.0);
        let r2 = q.integrate_volume(|x| x.iter().map(|v| v * v).sum());
        println!("n = {n}: |B1| = {vol:.12} (exact {:.12}), ∫|x|² = {r2:.12}", unit_ball_volume(n));
    }
    let grid = Grid::cube(2, -1.0, 1.0, 1.0 / 32.0)?;
    let u = VectorField::from_fn(grid.clone(), 1, |x| vec![x[0] * x[0] - x[1]]);
    let x = [0.123, -0.456];
    let v = interpolate(&u, &x)?;
    println!("interpolated {:.6} vs exact {:.6}", v[0], x[0] * x[0] - x[1]);
    let q = ball_quadrature(&grid, &[0.1, 0.2], 0.5, QuadratureOrders::default())?;
    println!("ball of radius 0.5: {} volume nodes, {} surface nodes", q.vol_len(), q.surf_len());
    Ok(())
}
