//! Configuration-driven run: parse a TOML config, solve, persist the field
//! and read it back.

use fbreg::cli::{read_field, write_field, RunConfig};
use fbreg::solver::minimize;

const CONFIG: &str = r#"
[grid]
dim = 2
spacing = 0.03125

[nonlinearity]
family = "exp-saturating"
params = [1.0, 2.0]

[boundary]
kind = "radial"
center = [0.0, 0.0]
radius = 1.5
boundary = 0.6
e = [0.6, 0.8]
"#;

fn main() -> fbreg::error::Result<()> {
    let cfg = RunConfig::parse(CONFIG)?;
    let nl = cfg.nonlinearity.build()?;
    let data = cfg.boundary_data(&nl)?;
    let (u, stats) = minimize(&data, &nl, &cfg.solver)?;
    println!("solved in {} iterations, energy {:.8}", stats.iterations, stats.final_energy);

    let mut bytes = vec![];
    write_field(&mut bytes, &u)?;
    let back = read_field(&mut bytes.as_slice())?;
    println!("{} bytes, round trip exact: {}", bytes.len(), back.values() == u.values());

    match RunConfig::parse("[grid]\nspacing = 0.1\nsize = 3\n") {
        Ok(_) => unreachable!(),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
