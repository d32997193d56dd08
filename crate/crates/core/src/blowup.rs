//! Rescalings `u_{x⁰,r}(x) = u(x⁰ + rx)/r²`, their homogeneity defect,
//! projection onto the half-space solutions and the energy/distance decay
//! along a ladder of radii.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freeboundary::log_log_fit;
use crate::geometry::{BallQuadrature, Sampler, UnitBallField};
use crate::model::{dot, norm, HalfSpaceSolution, Potential, VectorField};
use crate::weiss::{alpha_n, classify_density, monotonicity_audit, AuditOptions, PointClass, WeissReport};

/// Standard polar rule for blow-ups: 32 Gauss radii, and 128 angles in the
/// plane or 32 × 64 nodes on the 2-sphere.
pub fn standard_rule(n: usize) -> Result<BallQuadrature> {
    let angular = if n == 2 { 128 } else { 64 };
    BallQuadrature::unit(n, 32, angular)
}

/// Polar unit-ball samples of `u_{x⁰,r}`.
#[derive(Debug, Clone)]
pub struct BlowupField {
    pub field: UnitBallField,
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BlowupField {
    pub fn dim(&self) -> usize {
        self.field.quad.n
    }

    pub fn components(&self) -> usize {
        self.field.m
    }
}

/// Rescale on the standard rule.
pub fn rescale(u: &VectorField, x0: &[f64], r: f64) -> Result<BlowupField> {
    rescale_on(&Sampler::new(u), x0, r, standard_rule(u.grid().dim())?)
}

/// Rescale with a caller-supplied unit-ball rule and a shared sampler.
pub fn rescale_on(sampler: &Sampler<'_>, x0: &[f64], r: f64, quad: BallQuadrature) -> Result<BlowupField> {
    let grid = sampler.field().grid();
    let (n, m) = (grid.dim(), sampler.field().components());
    if quad.n != n || x0.len() != n {
        return Err(Error::Input("rule, center and field dimensions differ".into()));
    }
    if !(r > 0.0) {
        return Err(Error::Input(format!("blow-up radius must be positive, got {r}")));
    }
    let h = grid.spacing();
    let margin = grid.hull_distance(x0);
    if margin < r + 2.0 * h - 1e-12 {
        return Err(Error::Domain(format!(
            "B_{}({x0:?}) is not inside the grid (margin {margin:.6})",
            r + 2.0 * h
        )));
    }
    let mut x = vec![0.0; n];
    let field = UnitBallField::from_fn(quad, m, |y| {
        for a in 0..n {
            x[a] = x0[a] + r * y[a];
        }
        let mut v = vec![0.0; m];
        let mut g = vec![0.0; m * n];
        sampler.value_into(&x, &mut v)?;
        sampler.gradient_into(&x, &mut g)?;
        v.iter_mut().for_each(|c| *c /= r * r);
        g.iter_mut().for_each(|c| *c /= r);
        Ok((v, g))
    })?;
    Ok(BlowupField { field, center: x0.to_vec(), radius: r })
}

/// `∫_{B₁}|x·∇v − 2v| / max(1, ∫_{B₁}|v|)`.
pub fn homogeneity_defect(v: &UnitBallField) -> Result<f64> {
    let q = &v.quad;
    if q.radial_count < 8 {
        return Err(Error::Input(format!("need at least 8 radial nodes, got {}", q.radial_count)));
    }
    let (n, m) = (q.n, v.m);
    let (mut defect, mut mass) = (0.0, 0.0);
    for k in 0..q.vol_len() {
        let y = q.vol_point(k);
        let (val, jac) = (v.value(k), v.grad(k));
        let mut d2 = 0.0;
        for c in 0..m {
            let radial: f64 = (0..n).map(|a| y[a] * jac[c * n + a]).sum();
            d2 += (radial - 2.0 * val[c]).powi(2);
        }
        defect += q.vol_weights[k] * d2.sqrt();
        mass += q.vol_weights[k] * norm(val);
    }
    Ok(defect / mass.max(1.0))
}

/// Best half-space solution for a unit-ball field.
#[derive(Debug, Clone, Serialize)]
pub struct Projection {
    pub nu: Vec<f64>,
    pub e: Vec<f64>,
    pub f0: f64,
    /// `‖v − f0·max(x·ν,0)²e/2‖_{L²(∂B₁)}`.
    pub residual_constrained: f64,
    /// Same with the amplitude `f0/2` replaced by the best vector coefficient.
    pub residual_free: f64,
    /// Best free coefficient divided by `f0/2` (1 for an exact half-space).
    pub amplitude: f64,
}

impl Projection {
    pub fn half_space(&self) -> Result<HalfSpaceSolution> {
        HalfSpaceSolution::new(&self.nu, &self.e, self.f0)
    }
}

struct Fit {
    rss_constrained: f64,
    b: Vec<f64>,
    qq: f64,
}

fn fit_direction(v: &UnitBallField, f0: f64, vv: f64, nu: &[f64]) -> Fit {
    let q = &v.quad;
    let m = v.m;
    let mut b = vec![0.0; m];
    let mut qq = 0.0;
    for k in 0..q.surf_len() {
        let t = dot(q.surf_point(k), nu).max(0.0);
        let qv = 0.5 * f0 * t * t;
        if qv == 0.0 {
            continue;
        }
        let w = q.surf_weights[k];
        qq += w * qv * qv;
        for (bc, vc) in b.iter_mut().zip(v.surface_value(k)) {
            *bc += w * qv * vc;
        }
    }
    Fit { rss_constrained: (vv - 2.0 * norm(&b) + qq).max(0.0), b, qq }
}

fn fibonacci_sphere(count: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let s = (1.0 - z * z).sqrt();
            let p = golden * i as f64;
            [s * p.cos(), s * p.sin(), z]
        })
        .collect()
}

fn golden_min(mut a: f64, mut b: f64, iters: usize, f: impl Fn(f64) -> f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn chart(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// Closest element of ℍ in `L²(∂B₁)`: coarse search over ν (720 angles in
/// the plane, 1024 Fibonacci directions in space) with the optimal `e` per
/// ν, then golden-section refinement of ν.
pub fn project_to_halfspace(v: &UnitBallField, f0: f64) -> Result<Projection> {
    let q = &v.quad;
    let n = q.n;
    if !(f0 > 0.0) {
        return Err(Error::Input("projection needs f0 > 0".into()));
    }
    let vv: f64 = (0..q.surf_len()).map(|k| q.surf_weights[k] * dot(v.surface_value(k), v.surface_value(k))).sum();
    if !(vv > 0.0) {
        return Err(Error::Input("projection of the zero field is undefined".into()));
    }
    let cost = |nu: &[f64]| fit_direction(v, f0, vv, nu).rss_constrained;
    let nu: Vec<f64> = match n {
        1 => {
            let (a, b) = (cost(&[1.0]), cost(&[-1.0]));
            vec![if a <= b { 1.0 } else { -1.0 }]
        }
        2 => {
            let count = 720;
            let step = 2.0 * PI / count as f64;
            let scores: Vec<f64> =
                (0..count).into_par_iter().map(|i| cost(&[(i as f64 * step).cos(), (i as f64 * step).sin()])).collect();
            let best = argmin(&scores);
            let t0 = best as f64 * step;
            let t = golden_min(t0 - step, t0 + step, 60, |t| cost(&[t.cos(), t.sin()]));
            let refined = [t.cos(), t.sin()];
            if cost(&refined) <= scores[best] {
                refined.to_vec()
            } else {
                vec![t0.cos(), t0.sin()]
            }
        }
        3 => {
            let dirs = fibonacci_sphere(1024);
            let scores: Vec<f64> = dirs.par_iter().map(|d| cost(d)).collect();
            let best = dirs[argmin(&scores)];
            let mut theta = best[2].clamp(-1.0, 1.0).acos();
            let mut phi = best[1].atan2(best[0]);
            let mut width = 0.15;
            for _ in 0..6 {
                theta = golden_min(theta - width, theta + width, 40, |t| cost(&chart(t, phi)));
                phi = golden_min(phi - width, phi + width, 40, |p| cost(&chart(theta, p)));
                width *= 0.5;
            }
            let refined = chart(theta, phi);
            if cost(&refined) <= scores[argmin(&scores)] {
                refined.to_vec()
            } else {
                best.to_vec()
            }
        }
        _ => return Err(Error::Input(format!("projection supports n ≤ 3, got {n}"))),
    };
    let fit = fit_direction(v, f0, vv, &nu);
    let bn = norm(&fit.b);
    if !(bn > 0.0) {
        return Err(Error::Numeric("no half-space direction correlates with the field".into()));
    }
    let e: Vec<f64> = fit.b.iter().map(|c| c / bn).collect();
    Ok(Projection {
        nu,
        e,
        f0,
        residual_constrained: fit.rss_constrained.sqrt(),
        residual_free: (vv - bn * bn / fit.qq).max(0.0).sqrt(),
        amplitude: bn / fit.qq,
    })
}

fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x < xs[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayVerdict {
    DecayConfirmed,
    AlreadyHomogeneous,
    Inconclusive,
}

/// Exponents fitted to `G(r)` and `d(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub alpha_g: Option<f64>,
    pub alpha_l: Option<f64>,
    /// `α_G/(n + 2 + α_G)`, the contraction constant implied by `α_G`.
    pub kappa_hat: Option<f64>,
    /// `|α_L − α_G/2|/α_L`.
    pub consistency: Option<f64>,
    pub verdict: DecayVerdict,
}

/// Invert `α_G = (n+2)κ/(1−κ)`.
pub fn kappa_from_exponent(n: usize, alpha_g: f64) -> f64 {
    alpha_g / (n as f64 + 2.0 + alpha_g)
}

/// Log-log exponents of `G` and `d`. Samples with `G ≤ g_tol` are left out
/// of the `G` fit; if every `|G| ≤ g_tol` the field is already homogeneous.
pub fn fit_decay(n: usize, radii: &[f64], g: &[f64], d: &[f64], g_tol: f64) -> Result<DecayFit> {
    if radii.len() != g.len() || radii.len() != d.len() {
        return Err(Error::Input("radii, G and d must have equal length".into()));
    }
    if g.iter().all(|x| x.abs() <= g_tol) {
        return Ok(DecayFit {
            alpha_g: None,
            alpha_l: None,
            kappa_hat: None,
            consistency: None,
            verdict: DecayVerdict::AlreadyHomogeneous,
        });
    }
    let keep = |ys: &[f64], floor: f64| -> (Vec<f64>, Vec<f64>) {
        radii.iter().zip(ys).filter(|(_, y)| **y > floor).map(|(r, y)| (*r, *y)).unzip()
    };
    let slope = |(r, y): (Vec<f64>, Vec<f64>)| if r.len() >= 3 { log_log_fit(&r, &y).ok().map(|f| f.0) } else { None };
    let alpha_g = slope(keep(g, g_tol));
    let alpha_l = slope(keep(d, 0.0));
    let kappa_hat = alpha_g.map(|a| kappa_from_exponent(n, a));
    let consistency = match (alpha_g, alpha_l) {
        (Some(ag), Some(al)) if al != 0.0 => Some((al - ag / 2.0).abs() / al.abs()),
        _ => None,
    };
    let verdict = match (alpha_g, alpha_l) {
        (Some(ag), Some(al)) if ag > 0.0 && al > 0.0 => DecayVerdict::DecayConfirmed,
        _ => DecayVerdict::Inconclusive,
    };
    Ok(DecayFit { alpha_g, alpha_l, kappa_hat, consistency, verdict })
}

/// `r_j = r_max·2^{−j/2}` down to `r_min`, returned increasing.
pub fn decay_ladder(r_min: f64, r_max: f64) -> Result<Vec<f64>> {
    if !(r_min > 0.0 && r_max >= r_min) {
        return Err(Error::Input("ladder needs 0 < r_min ≤ r_max".into()));
    }
    let mut out = vec![];
    let mut r = r_max;
    while r >= r_min * (1.0 - 1e-12) {
        out.push(r);
        r /= 2f64.sqrt();
    }
    out.reverse();
    Ok(out)
}

/// What `d(r)` is measured against.
#[derive(Debug, Clone, Default)]
pub enum DecayReference {
    /// Best half-space at the smallest radius.
    #[default]
    Projection,
    HalfSpace(HalfSpaceSolution),
    /// Samples on the standard rule.
    Field(UnitBallField),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayOptions {
    /// Regular-point tolerance on the density.
    pub tau: f64,
    /// Degenerate-point threshold on `|∇u(x⁰)|`; `f(0)·h` when absent.
    pub theta_grad: Option<f64>,
    /// `|G| ≤ g_tol·(1 + |W0|)` counts as zero.
    pub g_tol: f64,
    /// Minimum `r_max/r_min` of the ladder.
    pub min_span: f64,
    pub audit: AuditOptions,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self { tau: 0.05, theta_grad: None, g_tol: 1e-5, min_span: 10f64.powf(1.5), audit: AuditOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub w: Vec<f64>,
    pub w0: f64,
    pub g: Vec<f64>,
    pub d: Vec<f64>,
    pub fit: DecayFit,
    pub reference: Option<Projection>,
    /// Some `G(r) < −tol_mono·(1 + |W0|)`.
    pub monotonicity_violation: bool,
    /// `d(r_j) ≤ 1.1·d(r_{j+1})` along the ladder.
    pub d_monotone: bool,
}

/// Energy decay `G(r) = W(r) − W0` and blow-up distance `d(r)` at a
/// regular point.
pub fn decay_measurement<P: Potential>(
    u: &VectorField,
    potential: &P,
    x0: &[f64],
    radii: &[f64],
    reference: &DecayReference,
    opts: &DecayOptions,
) -> Result<DecayReport> {
    let grid = u.grid();
    let (n, h, f0) = (grid.dim(), grid.spacing(), potential.f0());
    if radii.is_empty() || radii[0] < 8.0 * h * (1.0 - 1e-12) {
        return Err(Error::Domain("the ladder must start at or above 8h".into()));
    }
    let span = radii[radii.len() - 1] / radii[0];
    if span < opts.min_span * (1.0 - 1e-9) {
        return Err(Error::InsufficientData(format!(
            "ladder spans a factor {span:.2}, need {:.2}",
            opts.min_span
        )));
    }
    let sampler = Sampler::new(u);
    let theta = opts.theta_grad.unwrap_or(f0 * h);
    let g0 = norm(&sampler.gradient(x0)?);
    if g0 > theta {
        return Err(Error::Refused(format!("|∇u(x⁰)| = {g0:.3e} exceeds {theta:.3e}; not a degenerate point")));
    }
    let report: WeissReport = monotonicity_audit(u, potential, x0, radii, &opts.audit)?;
    let w0 = report.fit.w0;
    let class = classify_density(w0, alpha_n(n, f0), opts.tau);
    if class != PointClass::Regular {
        return Err(Error::Refused(format!("x⁰ is {class:?} (W0 = {w0:.6}), not regular")));
    }
    let blowups: Vec<BlowupField> = radii
        .par_iter()
        .map(|&r| rescale_on(&sampler, x0, r, standard_rule(n)?))
        .collect::<Result<_>>()?;
    let (target, projection) = match reference {
        DecayReference::Projection => {
            let p = project_to_halfspace(&blowups[0].field, f0)?;
            let hs = p.half_space()?;
            (UnitBallField::from_half_space(standard_rule(n)?, &hs), Some(p))
        }
        DecayReference::HalfSpace(hs) => (UnitBallField::from_half_space(standard_rule(n)?, hs), None),
        DecayReference::Field(f) => (f.clone(), None),
    };
    if target.surface.len() != blowups[0].field.surface.len() {
        return Err(Error::Input("reference field is not on the standard rule".into()));
    }
    let d: Vec<f64> = blowups.iter().map(|b| b.field.sphere_l1_distance(&target)).collect();
    let g: Vec<f64> = report.w.iter().map(|w| w - w0).collect();
    let scale = 1.0 + w0.abs();
    let fit = fit_decay(n, radii, &g, &d, opts.g_tol * scale)?;
    Ok(DecayReport {
        center: x0.to_vec(),
        radii: radii.to_vec(),
        w: report.w.clone(),
        w0,
        monotonicity_violation: g.iter().any(|x| *x < -opts.audit.tol_mono * scale),
        d_monotone: d.windows(2).all(|p| p[0] <= 1.1 * p[1]),
        g,
        d,
        fit,
        reference: projection,
    })
}
