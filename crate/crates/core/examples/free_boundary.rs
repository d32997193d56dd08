//! Free-boundary extraction, non-degeneracy, quadratic growth and normal
//! regularity on the minimiser outside a contact disc.

use fbreg::freeboundary::{
    audit_ladder, default_thresholds, extract, growth_audit, holder_exponent, nondegeneracy_audit, normal_field,
    BoundaryClass, HolderOptions,
};
use fbreg::model::{Grid, Nonlinearity, VectorField};
use fbreg::oracle::exact_radial_linear;
use fbreg::solver::{minimize, SolveOptions};

fn main() -> fbreg::error::Result<()> {
    let h = 1.0 / 128.0;
    let nl = Nonlinearity::linear(1.0)?;
    let exact = exact_radial_linear(1.0, 2, 1.0, 0.1)?;
    println!("contact radius {:.6}", exact.contact_radius);
    let data = VectorField::from_fn(Grid::cube(2, -1.0, 1.0, h)?, 1, |x| vec![exact.value((x[0] * x[0] + x[1] * x[1]).sqrt())]);
    let (u, _) = minimize(&data, &nl, &SolveOptions::default())?;

    let (tp, tg) = default_thresholds(1.0, h);
    let fb = extract(&u, tp, tg)?;
    let degenerate = fb.class.iter().filter(|c| **c == BoundaryClass::Degenerate).count();
    println!("{} free-boundary points, {degenerate} degenerate", fb.len());

    let x0 = fb.point(fb.nearest(&[exact.contact_radius, 0.0]).unwrap()).to_vec();
    let radii = audit_ladder(10.0 * h, 0.45)?;
    print!("{}", nondegeneracy_audit(&u, &x0, &radii, 1.0, None)?.to_csv());
    let growth = growth_audit(&u, &x0, &radii, tg)?;
    println!("growth exponents: |u| {:.3}, |∇u| {:.3}", growth.u_exponent, growth.grad_exponent);

    let normals = normal_field(&fb, &u)?;
    let (mut pts, mut nrm) = (vec![], vec![]);
    for k in 0..fb.len() {
        if let Some(n) = &normals.normals[k] {
            pts.push(fb.point(k).to_vec());
            nrm.push(n.clone());
        }
    }
    let fit = holder_exponent(&pts, &nrm, h, &HolderOptions { max_dist: 0.8, ..HolderOptions::default() })?;
    println!("normal Hölder exponent {:?} from {} pairs", fit.beta, fit.pairs);
    Ok(())
}
