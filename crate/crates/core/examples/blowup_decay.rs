//! Blow-ups at a regular free-boundary point: homogeneity defect, projection
//! onto half-space solutions and the decay-rate fit.

use fbreg::blowup::{
    decay_ladder, decay_measurement, homogeneity_defect, project_to_halfspace, rescale, DecayOptions, DecayReference,
};
use fbreg::model::{Grid, Nonlinearity, VectorField};
use fbreg::oracle::RadialExact;
use fbreg::solver::{minimize, SolveOptions};

fn main() -> fbreg::error::Result<()> {
    let h = 1.0 / 128.0;
    // contact disc of radius 2 centred at (-2, 0); the free boundary passes through 0
    let ex = RadialExact { lambda: 1.0, n: 2, radius: 10.0, boundary: 0.0, contact_radius: 2.0, center_value: 0.0 };
    let data = VectorField::from_fn(Grid::cube(2, -1.25, 1.25, h)?, 2, |x| {
        let v = ex.value(((x[0] + 2.0).powi(2) + x[1] * x[1]).sqrt());
        vec![0.6 * v, 0.8 * v]
    });
    let nl = Nonlinearity::linear(1.0)?;
    let (u, _) = minimize(&data, &nl, &SolveOptions::default())?;

    println!("{:>8} {:>10} {:>10} {:>8} {:>8}", "r", "defect", "residual", "nu_x", "nu_y");
    for r in [0.5, 0.25, 0.125, 0.0625] {
        let b = rescale(&u, &[0.0, 0.0], r)?;
        let p = project_to_halfspace(&b.field, 1.0)?;
        println!(
            "{r:>8} {:>10.3e} {:>10.3e} {:>8.4} {:>8.4}",
            homogeneity_defect(&b.field)?,
            p.residual_constrained,
            p.nu[0],
            p.nu[1]
        );
    }
    let radii = decay_ladder(8.0 * h, 1.0)?;
    let opts = DecayOptions { min_span: 10.0, ..DecayOptions::default() };
    let report = decay_measurement(&u, &nl, &[0.0, 0.0], &radii, &DecayReference::Projection, &opts)?;
    for ((r, g), d) in report.radii.iter().zip(&report.g).zip(&report.d) {
        println!("r = {r:.4}  W - W0 = {g:.3e}  d = {d:.3e}");
    }
    println!("{:?}", report.fit);
    Ok(())
}
