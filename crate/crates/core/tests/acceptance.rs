//! End-to-end acceptance run: one line per criterion, nonzero exit if any fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::OnceLock;
use std::time::Instant;

use fbreg::blowup::{
    decay_ladder, decay_measurement, fit_decay, project_to_halfspace, rescale, standard_rule, DecayOptions,
    DecayReference, DecayReport,
};
use fbreg::cli::{read_field, write_field};
use fbreg::energy::prox_pointwise;
use fbreg::epiperimetric::{batch_scan, EpiOptions, ScanSpec};
use fbreg::freeboundary::{audit_ladder, default_thresholds, extract, growth_audit, nondegeneracy_audit, BoundaryClass};
use fbreg::geometry::{BallQuadrature, UnitBallField};
use fbreg::model::{Grid, HalfSpaceSolution, Nonlinearity, Potential, VectorField};
use fbreg::oracle::{exact_linear_1d, reference_radial, RadialExact};
use fbreg::solver::{minimize, uniqueness_audit, zero_interior, SolveOptions};
use fbreg::spectral::{cap_eigen, cap_monotonicity, shift_bound_check, CapProblem};
use fbreg::weiss::{
    alpha_n, alpha_n_sphere_form, classify_point, density_limit, domain_variation_residual, functional_m,
    geometric_ladder, monotonicity_audit, AuditOptions, Bump, PointClass,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Radial exp-saturating minimiser on [-1, 1]² with its contact radius.
struct ExpField {
    nl: Nonlinearity,
    u: VectorField,
    contact: f64,
}

fn exp_field(h: f64) -> ExpField {
    let nl = Nonlinearity::exp_saturating(1.0, 2.0).unwrap();
    let prof = reference_radial(&nl, 2, 1.5, 0.6, &[1.0], 3000).unwrap();
    let contact = prof.r.iter().zip(&prof.u).filter(|(_, u)| **u == 0.0).map(|(r, _)| *r).fold(0.0, f64::max);
    let grid = Grid::cube(2, -1.0, 1.0, h).unwrap();
    let data = VectorField::from_fn(grid, 1, |x| vec![prof.magnitude(norm(x))]);
    let (u, _) = minimize(&data, &nl, &SolveOptions::default()).unwrap();
    ExpField { nl, u, contact }
}

fn exp_fine() -> &'static ExpField {
    static CELL: OnceLock<ExpField> = OnceLock::new();
    CELL.get_or_init(|| exp_field(1.0 / 128.0))
}

/// Three degenerate free-boundary points spread around the contact disc.
fn exp_points(f: &ExpField) -> Vec<Vec<f64>> {
    let h = f.u.grid().spacing();
    let (tp, tg) = default_thresholds(f.nl.f0(), h);
    let fb = extract(&f.u, tp, tg).unwrap();
    (0..3)
        .map(|k| {
            let t = 0.3 + 2.0 * PI * k as f64 / 3.0;
            let i = fb.nearest(&[f.contact * t.cos(), f.contact * t.sin()]).unwrap();
            assert_eq!(fb.class[i], BoundaryClass::Degenerate);
            fb.point(i).to_vec()
        })
        .collect()
}

/// Linear minimiser outside a contact disc of radius 2 centred at (-2, 0):
/// the free boundary passes through the origin with curvature 1/2.
struct DiscField {
    nl: Nonlinearity,
    u: VectorField,
}

fn disc_field() -> &'static DiscField {
    static CELL: OnceLock<DiscField> = OnceLock::new();
    CELL.get_or_init(|| {
        let r0 = 2.0;
        let ex = RadialExact { lambda: 1.0, n: 2, radius: 10.0, boundary: 0.0, contact_radius: r0, center_value: 0.0 };
        let grid = Grid::cube(2, -1.25, 1.25, 1.0 / 256.0).unwrap();
        let data = VectorField::from_fn(grid, 2, |x| {
            let v = ex.value(norm(&[x[0] + r0, x[1]]));
            vec![0.6 * v, 0.8 * v]
        });
        let nl = Nonlinearity::linear(1.0).unwrap();
        let (u, _) = minimize(&data, &nl, &SolveOptions::default()).unwrap();
        DiscField { nl, u }
    })
}

fn disc_decay() -> &'static DecayReport {
    static CELL: OnceLock<DecayReport> = OnceLock::new();
    CELL.get_or_init(|| {
        let f = disc_field();
        let radii = decay_ladder(8.0 * f.u.grid().spacing(), 1.0).unwrap();
        decay_measurement(&f.u, &f.nl, &[0.0, 0.0], &radii, &DecayReference::Projection, &DecayOptions::default())
            .unwrap()
    })
}

fn tilted_half_space(h: f64) -> (HalfSpaceSolution, VectorField, VectorField) {
    let hs = HalfSpaceSolution::new(&[0.5, 1.0], &[1.0], 1.0).unwrap();
    let exact = VectorField::from_fn(Grid::cube(2, -1.0, 1.0, h).unwrap(), 1, |x| hs.eval(x));
    let nl = Nonlinearity::linear(1.0).unwrap();
    let (u, _) = minimize(&zero_interior(&exact), &nl, &SolveOptions::default()).unwrap();
    (hs, exact, u)
}

fn alpha_closed_forms() -> Outcome {
    let a2 = alpha_n(2, 1.0);
    let a3 = alpha_n(3, 1.0);
    let err = [
        (a2 - PI / 8.0).abs(),
        (a3 - 2.0 * PI / 15.0).abs(),
        (alpha_n_sphere_form(2, 1.0) - a2).abs(),
        (alpha_n_sphere_form(3, 1.0) - a3).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok((err <= 1e-14, format!("max error {err:.1e}")))
}

fn density_quadrature() -> Outcome {
    let quad = BallQuadrature::unit(2, 64, 256).map_err(|e| e.to_string())?;
    let v = UnitBallField::from_half_space(quad, &HalfSpaceSolution::axis(2, 1, 1, 1.0));
    let err = (functional_m(&v, 1.0) - PI / 16.0).abs();
    Ok((err <= 1e-4, format!("|M - π/16| = {err:.2e}")))
}

/// Minimise `½(s − r)² + τF(s)` over `[0, r]` by a dense scan refined with
/// golden sections.
fn brute_prox_radius(r: f64, tau: f64, pot: &Nonlinearity) -> f64 {
    let phi = |s: f64| 0.5 * (s - r) * (s - r) + tau * pot.value(s);
    let k = 4000;
    let best = (0..=k).map(|i| r * i as f64 / k as f64).min_by(|a, b| phi(*a).total_cmp(&phi(*b))).unwrap();
    let (mut lo, mut hi) = ((best - r / k as f64).max(0.0), (best + r / k as f64).min(r));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if phi(a) <= phi(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let s = 0.5 * (lo + hi);
    [0.0, s, r].into_iter().min_by(|a, b| phi(*a).total_cmp(&phi(*b))).unwrap()
}

fn prox_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let pot = match rng.gen_range(0..3) {
            0 => Nonlinearity::linear(rng.gen_range(0.2..3.0)),
            1 => {
                let c = rng.gen_range(0.5..2.0);
                Nonlinearity::exp_saturating(c, c * rng.gen_range(1.0..2.0))
            }
            _ => Nonlinearity::affine_quadratic(rng.gen_range(0.5..2.0), rng.gen_range(0.0..1.0), 10.0),
        }
        .map_err(|e| e.to_string())?;
        let m = rng.gen_range(1..=3);
        let w: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let tau = 10f64.powf(rng.gen_range(-3.0..0.0));
        let got = prox_pointwise(&w, tau, &pot).map_err(|e| e.to_string())?;
        let r = norm(&w);
        let s = brute_prox_radius(r, tau, &pot);
        let gap = w.iter().zip(&got).map(|(wi, gi)| (s * wi / r - gi).abs()).fold(0.0, f64::max);
        worst = worst.max(gap);
    }
    Ok((worst <= 1e-5, format!("max deviation {worst:.2e} over 1000 cases")))
}

fn contact_1d() -> Outcome {
    let nl = Nonlinearity::linear(1.0).unwrap();
    let exact = exact_linear_1d(1.0, 0.0, 1.0, 0.125, 0.0).map_err(|e| e.to_string())?;
    let mut nodal = vec![];
    let mut midpoint = vec![];
    for k in [64.0, 128.0, 256.0] {
        let h = 1.0 / k;
        let grid = Grid::cube(1, 0.0, 1.0, h).unwrap();
        let mut data = VectorField::zeros(grid.clone(), 1);
        data.values_mut()[0] = 0.125;
        let (u, stats) = minimize(&data, &nl, &SolveOptions::default()).map_err(|e| e.to_string())?;
        if !stats.converged {
            return Ok((false, format!("solver stopped with {:?} at h = 1/{k}", stats.stop_reason)));
        }
        let v = u.values();
        nodal.push((0..v.len()).map(|i| (v[i] - exact.value(grid.coords(i)[0])).abs()).fold(0.0, f64::max));
        midpoint.push(
            (0..v.len() - 1)
                .map(|i| (0.5 * (v[i] + v[i + 1]) - exact.value((i as f64 + 0.5) * h)).abs())
                .fold(0.0, f64::max),
        );
    }
    let h = 1.0 / 256.0;
    let p = order(midpoint[0], midpoint[2]) / 2.0;
    Ok((
        nodal[2] <= 10.0 * h * h && p >= 1.8,
        format!("nodal error {:.2e} (10h² = {:.2e}), interpolant order {p:.3}", nodal[2], 10.0 * h * h),
    ))
}

fn half_space_order() -> Outcome {
    let errs: Vec<f64> = [32.0, 64.0, 128.0]
        .into_iter()
        .map(|k| {
            let (_, exact, u) = tilted_half_space(1.0 / k);
            u.max_abs_diff(&exact)
        })
        .collect();
    let p = order(errs[0], errs[2]) / 2.0;
    Ok((p >= 1.5, format!("errors {:.2e} {:.2e} {:.2e}, order {p:.3}", errs[0], errs[1], errs[2])))
}

fn uniqueness() -> Outcome {
    let grid = Grid::cube(2, -1.0, 1.0, 1.0 / 32.0).unwrap();
    let hs = HalfSpaceSolution::new(&[0.3, 1.0], &[1.0, -0.5], 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let wiggle: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.05..0.05)).collect();
    let data = VectorField::from_fn(grid, 2, |x| {
        let mut v = hs.eval(x);
        v[0] += wiggle[0] * (3.0 * x[0]).sin() + wiggle[1] * x[1] * x[1];
        v[1] += wiggle[2] * (2.0 * x[1]).cos() + wiggle[3] * x[0];
        v
    });
    let opts = SolveOptions::default();
    let lin = uniqueness_audit(&data, Nonlinearity::linear(1.0).unwrap(), &opts, 3, 7).map_err(|e| e.to_string())?;
    let exp = uniqueness_audit(&data, Nonlinearity::exp_saturating(1.0, 2.0).unwrap(), &opts, 3, 7)
        .map_err(|e| e.to_string())?;
    let gap = lin.max_gap.max(exp.max_gap);
    Ok((gap <= 1e-6, format!("gaps linear {:.1e}, exp-saturating {:.1e}", lin.max_gap, exp.max_gap)))
}

fn weiss_monotone() -> Outcome {
    let f = exp_fine();
    let h = f.u.grid().spacing();
    let mut details = vec![];
    let mut ok = true;
    for x0 in exp_points(f) {
        let r_max = 1.0 - x0.iter().fold(0.0, |a: f64, v| a.max(v.abs())) - 2.0 * h;
        let radii = geometric_ladder(8.0 * h, r_max, 2f64.powf(0.25)).map_err(|e| e.to_string())?;
        let rep = monotonicity_audit(&f.u, &f.nl, &x0, &radii, &AuditOptions::default()).map_err(|e| e.to_string())?;
        let t_min = rep.t1.iter().chain(&rep.t2).copied().fold(f64::INFINITY, f64::min);
        ok &= radii.len() >= 10 && rep.violations.is_empty() && t_min >= -1e-10;
        details.push(format!("{} radii, {} violations, min T {t_min:.1e}", radii.len(), rep.violations.len()));
    }
    Ok((ok, details.join("; ")))
}

fn weiss_identity() -> Outcome {
    let h = 1.0 / 64.0;
    let nl = Nonlinearity::linear(1.0).unwrap();
    let hs = HalfSpaceSolution::axis(2, 1, 1, 1.0);
    let u = VectorField::from_fn(Grid::cube(2, -1.0, 1.0, h).unwrap(), 1, |x| hs.eval(x));
    let radii = geometric_ladder(8.0 * h, 1.0 - 2.0 * h, 2f64.powf(0.25)).map_err(|e| e.to_string())?;
    let rep = monotonicity_audit(&u, &nl, &[0.0, 0.0], &radii, &AuditOptions::default()).map_err(|e| e.to_string())?;
    let worst = rep.dw_dr.iter().chain(&rep.t1).chain(&rep.t2).map(|v| v.abs()).fold(0.0, f64::max);
    Ok((worst <= 1e-3, format!("max of |dW/dr|, |T1|, |T2| = {worst:.2e} over {} radii", radii.len())))
}

fn nondegeneracy() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut audited = 0;
    let mut check = |u: &VectorField, x0: &[f64], f0: f64, r_max: f64| -> Result<(), String> {
        let h = u.grid().spacing();
        let radii = audit_ladder(10.0 * h, r_max).map_err(|e| e.to_string())?;
        let rep = nondegeneracy_audit(u, x0, &radii, f0, None).map_err(|e| e.to_string())?;
        for row in &rep.rows {
            worst = worst.min(row.sup / row.bound);
            audited += 1;
        }
        Ok(())
    };
    let f = exp_fine();
    for x0 in exp_points(f) {
        let r_max = 1.0 - x0.iter().fold(0.0, |a: f64, v| a.max(v.abs())) - 2.0 / 128.0;
        check(&f.u, &x0, f.nl.f0(), r_max)?;
    }
    let d = disc_field();
    check(&d.u, &[0.0, 0.0], d.nl.f0(), 1.0)?;
    Ok((worst >= 0.95, format!("min sup/bound {worst:.4} over {audited} radii")))
}

fn quadratic_growth() -> Outcome {
    let d = disc_field();
    let h = d.u.grid().spacing();
    let (_, tg) = default_thresholds(d.nl.f0(), h);
    let radii = audit_ladder(10.0 * h, 1.0).map_err(|e| e.to_string())?;
    let rep = growth_audit(&d.u, &[0.0, 0.0], &radii, tg).map_err(|e| e.to_string())?;
    let ok = (1.85..=2.15).contains(&rep.u_exponent) && (0.85..=1.15).contains(&rep.grad_exponent);
    Ok((ok, format!("|u| exponent {:.3}, |∇u| exponent {:.3}", rep.u_exponent, rep.grad_exponent)))
}

fn regular_density() -> Outcome {
    let h = 1.0 / 64.0;
    let (_, _, u) = tilted_half_space(h);
    let nl = Nonlinearity::linear(1.0).unwrap();
    let radii = geometric_ladder(8.0 * h, 1.0 - 2.0 * h, 2f64.powf(0.25)).map_err(|e| e.to_string())?;
    let rep = monotonicity_audit(&u, &nl, &[0.0, 0.0], &radii, &AuditOptions::default()).map_err(|e| e.to_string())?;
    let fit = density_limit(&rep).map_err(|e| e.to_string())?;
    let half = alpha_n(2, 1.0) / 2.0;
    let rel = (fit.w0 - half).abs() / half;
    Ok((rel <= 0.05, format!("W0 = {:.5}, α/2 = {half:.5}, relative gap {rel:.2e}", fit.w0)))
}

fn domain_variation() -> Outcome {
    let coarse = exp_field(1.0 / 64.0);
    let fine = exp_fine();
    let x0 = [fine.contact, 0.0];
    let bump = Bump::dilation(&x0, 0.25);
    let rc = domain_variation_residual(&coarse.u, &coarse.nl, &bump).map_err(|e| e.to_string())?;
    let rf = domain_variation_residual(&fine.u, &fine.nl, &bump).map_err(|e| e.to_string())?;
    let p = order(rc, rf);
    let hs = HalfSpaceSolution::axis(2, 1, 1, 1.0);
    let exact = VectorField::from_fn(Grid::cube(2, -1.0, 1.0, 1.0 / 128.0).unwrap(), 1, |x| hs.eval(x));
    let lin = Nonlinearity::linear(1.0).unwrap();
    let mut exact_worst: f64 = 0.0;
    for bump in [Bump::dilation(&[0.0, 0.0], 0.5), Bump::translation(&[0.1, -0.05], 0.4, &[0.6, 0.8])] {
        exact_worst = exact_worst.max(domain_variation_residual(&exact, &lin, &bump).map_err(|e| e.to_string())?);
    }
    Ok((
        p >= 0.8 && exact_worst <= 1e-3,
        format!("residual {rc:.2e} -> {rf:.2e} (order {p:.2}), exact half-space {exact_worst:.1e}"),
    ))
}

fn epiperimetric() -> Outcome {
    let base = HalfSpaceSolution::axis(2, 1, 2, 1.0);
    let spec = ScanSpec::default();
    let opts = EpiOptions::default();
    let mut ok = true;
    let mut details = vec![];
    for (name, nl) in
        [("linear", Nonlinearity::linear(1.0).unwrap()), ("exp-saturating", Nonlinearity::exp_saturating(1.0, 2.0).unwrap())]
    {
        let table = batch_scan(&base, &nl, &spec, &opts);
        let mut defined = 0;
        for row in &table.rows {
            let Some(res) = &row.result else {
                continue;
            };
            ok &= res.h_v <= res.h_c;
            if let Some(k) = res.kappa_best {
                ok &= k >= 0.01;
                defined += 1;
            }
        }
        details.push(format!(
            "{name}: {defined}/{} rows defined, min κ_best {:.3}",
            table.rows.len(),
            table.min_kappa.unwrap_or(f64::NAN)
        ));
    }
    Ok((ok, details.join("; ")))
}

fn decay_consistency() -> Outcome {
    let radii = decay_ladder(1.0 / 32.0, 1.0).map_err(|e| e.to_string())?;
    let g: Vec<f64> = radii.iter().map(|r| r.powi(4)).collect();
    let d: Vec<f64> = radii.iter().map(|r| r * r).collect();
    let syn = fit_decay(2, &radii, &g, &d, 1e-12).map_err(|e| e.to_string())?;
    let kappa = syn.kappa_hat.unwrap_or(f64::NAN);
    let syn_cons = syn.consistency.unwrap_or(f64::NAN);
    let fit = &disc_decay().fit;
    let (ag, al, cons) =
        (fit.alpha_g.unwrap_or(f64::NAN), fit.alpha_l.unwrap_or(f64::NAN), fit.consistency.unwrap_or(f64::NAN));
    let ok = (kappa - 0.5).abs() <= 0.02 && syn_cons <= 0.05 && ag > 0.0 && al > 0.0 && cons <= 0.3;
    Ok((ok, format!("synthetic κ̂ {kappa:.4} (score {syn_cons:.1e}); solved α_G {ag:.3}, α_L {al:.3}, score {cons:.3}")))
}

fn cap_eigenproblem() -> Outcome {
    let caps = [PI / 6.0, PI / 4.0, PI / 3.0, 5.0 * PI / 12.0, FRAC_PI_2];
    let mut ok = true;
    let mut details = vec![];
    for n in [2, 3] {
        let e = cap_eigen(&CapProblem::new(n, FRAC_PI_2, 256), 1).map_err(|e| e.to_string())?;
        let err = (e.lambdas[0] - 2.0 * n as f64).abs();
        let ladder = cap_monotonicity(n, &caps, 256).map_err(|e| e.to_string())?;
        let shift = shift_bound_check(&CapProblem::new(n, FRAC_PI_2, 256), 1, 1e-9).map_err(|e| e.to_string())?;
        ok &= err <= 1e-3 && e.correlation >= 0.999 && ladder.strictly_decreasing && shift.holds && shift.margin > 0.0;
        details.push(format!(
            "n={n}: λ1 error {err:.1e}, correlation {:.6}, decreasing {}, shift margin {:.3}",
            e.correlation, ladder.strictly_decreasing, shift.margin
        ));
    }
    Ok((ok, details.join("; ")))
}

fn m_floor() -> Outcome {
    let floor = alpha_n(2, 1.0) / 2.0 - 1e-3;
    let mut worst_proj = f64::INFINITY;
    let mut worst_blow = f64::INFINITY;
    let mut regular = 0;
    let mut visit = |u: &VectorField, nl: &Nonlinearity, x0: &[f64], r_max: f64| -> Result<(), String> {
        let h = u.grid().spacing();
        let radii = geometric_ladder(8.0 * h, r_max, 2f64.powf(0.25)).map_err(|e| e.to_string())?;
        let class = classify_point(u, nl, x0, &radii, 0.05, None, &AuditOptions::default()).map_err(|e| e.to_string())?;
        if class.class != PointClass::Regular {
            return Ok(());
        }
        regular += 1;
        let b = rescale(u, x0, 8.0 * h).map_err(|e| e.to_string())?;
        worst_blow = worst_blow.min(functional_m(&b.field, nl.f0()));
        let p = project_to_halfspace(&b.field, nl.f0()).map_err(|e| e.to_string())?;
        let hs = p.half_space().map_err(|e| e.to_string())?;
        let q = UnitBallField::from_half_space(standard_rule(2).map_err(|e| e.to_string())?, &hs);
        worst_proj = worst_proj.min(functional_m(&q, nl.f0()));
        Ok(())
    };
    let d = disc_field();
    visit(&d.u, &d.nl, &[0.0, 0.0], 1.0)?;
    let f = exp_fine();
    for x0 in exp_points(f) {
        let r_max = 1.0 - x0.iter().fold(0.0, |a: f64, v| a.max(v.abs())) - 2.0 / 128.0;
        visit(&f.u, &f.nl, &x0, r_max)?;
    }
    let ok = regular > 0 && worst_proj >= floor && worst_blow >= floor;
    Ok((ok, format!("{regular} regular points; min M projection {worst_proj:.5}, blow-up {worst_blow:.5}, floor {floor:.5}")))
}

fn run_cli(dir: &Path, threads: usize, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_fbreg"))
        .args(args)
        .arg("--config")
        .arg(dir.join("run.toml"))
        .arg("--out")
        .arg(dir.join(format!("t{threads}")))
        .args(["--seed", "3", "--threads", &threads.to_string()])
        .stdout(Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("fbreg {args:?} exited with {status}"))
    }
}

fn persistence() -> Outcome {
    let u = &exp_fine().u;
    let mut bytes = vec![];
    write_field(&mut bytes, u).map_err(|e| e.to_string())?;
    let back = read_field(&mut bytes.as_slice()).map_err(|e| e.to_string())?;
    let mut again = vec![];
    write_field(&mut again, &back).map_err(|e| e.to_string())?;
    let round_trip = bytes == again && back.values() == u.values();

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::write(
        dir.path().join("run.toml"),
        "[grid]\nspacing = 0.03125\n\n[boundary]\nkind = \"half-space\"\nnu = [0.5, 1.0]\ne = [1.0]\n\n\
         [epi]\ndeltas = [0.05]\ns_values = [0.01]\nseeds = [1, 2]\nspacing = 0.0625\n",
    )
    .map_err(|e| e.to_string())?;
    for threads in [1, 4] {
        for args in [&["solve"][..], &["audit", "weiss"], &["audit", "growth"], &["blowup"], &["epi", "scan"], &["report"]] {
            run_cli(dir.path(), threads, args)?;
        }
    }
    let mut names: Vec<_> = std::fs::read_dir(dir.path().join("t1"))
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let mut identical = true;
    for name in &names {
        let a = std::fs::read(dir.path().join("t1").join(name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(dir.path().join("t4").join(name)).map_err(|e| e.to_string())?;
        identical &= a == b;
    }
    Ok((
        round_trip && identical,
        format!("round trip {}, {} artifacts identical across 1 and 4 threads: {identical}", round_trip, names.len()),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 17] = [
        ("doubling constant closed forms", alpha_closed_forms),
        ("energy density quadrature", density_quadrature),
        ("proximal map against brute force", prox_oracle),
        ("1-D contact solution and order", contact_1d),
        ("2-D half-space reproduction order", half_space_order),
        ("uniqueness across starts", uniqueness),
        ("Weiss monotonicity on a solved field", weiss_monotone),
        ("Weiss identity on the exact half-space", weiss_identity),
        ("non-degeneracy", nondegeneracy),
        ("quadratic growth", quadratic_growth),
        ("regular-point density", regular_density),
        ("domain variation", domain_variation),
        ("epiperimetric contraction", epiperimetric),
        ("decay consistency", decay_consistency),
        ("cap eigenproblem", cap_eigenproblem),
        ("energy density floor", m_floor),
        ("persistence and determinism", persistence),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || *f == (k + 1).to_string()) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (pass, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!("{} {:>2} {name}: {detail} [{secs:.1}s]", if pass { "PASS" } else { "FAIL" }, k + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
