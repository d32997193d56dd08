//! Build each nonlinearity family and check its structural bounds.

use fbreg::model::{make_nonlinearity, validate_nonlinearity, FamilyTag, Nonlinearity, Potential};

fn main() -> fbreg::error::Result<()> {
    let families = [
        Nonlinearity::linear(1.0)?,
        Nonlinearity::affine_quadratic(1.0, 0.5, 4.0)?,
        Nonlinearity::exp_saturating(1.0, 2.0)?,
        // slope table: interleaved (s, F'(s)) samples
        make_nonlinearity(FamilyTag::Table, &[0.0, 2.0, 1.0, 2.5, 2.0, 3.5], None)?,
    ];
    println!("{:<18} {:>8} {:>8} {:>8} {:>6}", "family", "f(0)", "f(1)", "F(1)", "valid");
    for nl in &families {
        let report = validate_nonlinearity(nl, 2.0, 401);
        println!(
            "{:<18} {:>8.4} {:>8.4} {:>8.4} {:>6}",
            nl.tag().name(),
            nl.f0(),
            nl.f(1.0),
            nl.value(1.0),
            report.passed()
        );
    }
    // s-rescaling F_s(t) = F(st)/s² used by the epiperimetric functional
    let exp = &families[2];
    for s in [1.0, 0.1, 0.01] {
        let fs = exp.rescaled(s)?;
        println!("s = {s:<5} F_s(1) = {:.6}", fs.value(1.0));
    }
    Ok(())
}
