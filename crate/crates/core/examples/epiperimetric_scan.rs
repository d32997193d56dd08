//! Competitors for cones near a half-space and the observed contraction.

use fbreg::epiperimetric::{batch_scan, kappa_estimate, sample_cone_near_halfspace, EpiOptions, ScanSpec};
use fbreg::model::{HalfSpaceSolution, Nonlinearity};

fn main() -> fbreg::error::Result<()> {
    let nl = Nonlinearity::exp_saturating(1.0, 2.0)?;
    let base = HalfSpaceSolution::axis(2, 1, 2, 1.0);
    let opts = EpiOptions::default();

    let trace = sample_cone_near_halfspace(&base, 0.05, 3, 7)?;
    let res = kappa_estimate(&trace, &nl, 1e-2, &opts)?;
    println!("H(c) = {:.6}  H(v) = {:.6}  M(h*) = {:.6}  κ = {:?}", res.h_c, res.h_v, res.m_h, res.kappa_best);

    let spec = ScanSpec { seeds: vec![1, 2, 3], ..ScanSpec::default() };
    let table = batch_scan(&base, &nl, &spec, &opts);
    print!("{}", table.to_csv());
    println!("min κ_best = {:?}", table.min_kappa);
    Ok(())
}
