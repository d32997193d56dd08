//! Weiss energy along a radius ladder on a solved nonlinear field, with the
//! density fit and point classification.

use fbreg::freeboundary::{default_thresholds, extract, BoundaryClass};
use fbreg::model::{Grid, Nonlinearity, Potential, VectorField};
use fbreg::oracle::reference_radial;
use fbreg::solver::{minimize, SolveOptions};
use fbreg::weiss::{alpha_n, classify_point, geometric_ladder, monotonicity_audit, AuditOptions};

fn main() -> fbreg::error::Result<()> {
    let nl = Nonlinearity::exp_saturating(1.0, 2.0)?;
    let h = 1.0 / 64.0;
    let profile = reference_radial(&nl, 2, 1.5, 0.6, &[1.0], 3000)?;
    let data = VectorField::from_fn(Grid::cube(2, -1.0, 1.0, h)?, 1, |x| profile.eval(x));
    let (u, _) = minimize(&data, &nl, &SolveOptions::default())?;

    let (tp, tg) = default_thresholds(nl.f0(), h);
    let fb = extract(&u, tp, tg)?;
    let k = (0..fb.len()).find(|&k| fb.class[k] == BoundaryClass::Degenerate && fb.point(k)[1].abs() < h).unwrap();
    let x0 = fb.point(k).to_vec();
    let radii = geometric_ladder(8.0 * h, 1.0 - x0[0].abs() - 2.0 * h, 2f64.powf(0.25))?;
    let report = monotonicity_audit(&u, &nl, &x0, &radii, &AuditOptions::default())?;
    print!("{}", report.to_csv());
    println!("violations: {:?}", report.violations);
    println!("W0 = {:.5}, α/2 = {:.5}", report.fit.w0, alpha_n(2, nl.f0()) / 2.0);
    let class = classify_point(&u, &nl, &x0, &radii, 0.05, None, &AuditOptions::default())?;
    println!("x0 = ({:.4}, {:.4}) is {:?}", x0[0], x0[1], class.class);
    Ok(())
}
