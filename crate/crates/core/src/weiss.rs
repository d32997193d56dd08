//! The boundary-adjusted (Weiss) energy, the functionals `H(·, s)` and `M`,
//! monotonicity audits, energy-density fits, regular-point classification
//! and the domain-variation residual.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ball_quadrature, unit_ball_volume, unit_sphere_area, QuadratureOrders, Sampler, UnitBallField};
use crate::model::{Potential, VectorField};

/// `α_n = f(0)²|B₁|/(2(n+2))`, the half-space energy density doubled.
pub fn alpha_n(n: usize, f0: f64) -> f64 {
    f0 * f0 * unit_ball_volume(n) / (2.0 * (n as f64 + 2.0))
}

/// The same constant written through the sphere area,
/// `f(0)² H^{n−1}(∂B₁)/(2n(n+2))`.
pub fn alpha_n_sphere_form(n: usize, f0: f64) -> f64 {
    let nf = n as f64;
    f0 * f0 * unit_sphere_area(n) / (2.0 * nf * (nf + 2.0))
}

/// `W(u, x⁰, r)` with the two terms of its radial derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeissTerms {
    pub w: f64,
    pub t1: f64,
    pub t2: f64,
}

fn frob2(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum()
}

fn weiss_terms_with<P: Potential>(
    sampler: &Sampler<'_>,
    potential: &P,
    x0: &[f64],
    r: f64,
    orders: QuadratureOrders,
) -> Result<WeissTerms> {
    let u = sampler.field();
    let grid = u.grid();
    let (n, m) = (grid.dim(), u.components());
    let quad = ball_quadrature(grid, x0, r, orders)?;
    let mut val = vec![0.0; m];
    let mut jac = vec![0.0; m * n];
    let (mut bulk, mut excess) = (0.0, 0.0);
    for k in 0..quad.vol_len() {
        let x = quad.vol_point(k);
        sampler.value_into(x, &mut val)?;
        sampler.gradient_into(x, &mut jac)?;
        let s = frob2(&val).sqrt();
        let fs = potential.value(s);
        bulk += quad.vol_weights[k] * (frob2(&jac) + fs);
        if s > 0.0 {
            excess += quad.vol_weights[k] * (potential.slope(s) * s - fs);
        }
    }
    let (mut boundary, mut radial) = (0.0, 0.0);
    for k in 0..quad.surf_len() {
        let x = quad.surf_point(k);
        let nu = quad.surf_normal(k);
        sampler.value_into(x, &mut val)?;
        sampler.gradient_into(x, &mut jac)?;
        boundary += quad.surf_weights[k] * frob2(&val);
        let mut d2 = 0.0;
        for q in 0..m {
            let dn: f64 = (0..n).map(|a| jac[q * n + a] * nu[a]).sum();
            let d = dn - 2.0 * val[q] / r;
            d2 += d * d;
        }
        radial += quad.surf_weights[k] * d2;
    }
    let nf = n as i32;
    Ok(WeissTerms {
        w: bulk / r.powi(nf + 2) - 2.0 * boundary / r.powi(nf + 3),
        t1: 2.0 * radial / r.powi(nf + 2),
        t2: 2.0 * excess / r.powi(nf + 3),
    })
}

/// `W(u, x⁰, r) = r^{−n−2}∫_{B_r}(|∇u|² + F(|u|)) − 2r^{−n−3}∫_{∂B_r}|u|²`,
/// integrated on the interpolant with the default ball rule.
pub fn weiss_energy<P: Potential>(u: &VectorField, potential: &P, x0: &[f64], r: f64) -> Result<f64> {
    let sampler = Sampler::new(u);
    Ok(weiss_terms_with(&sampler, potential, x0, r, QuadratureOrders::default())?.w)
}

/// `W` together with `T₁ = 2r^{−n−2}∫_{∂B_r}|∇u·ν − 2u/r|²` and
/// `T₂ = 2r^{−n−3}∫_{B_r}(F′(|u|)|u| − F(|u|))`.
pub fn weiss_terms<P: Potential>(
    u: &VectorField,
    potential: &P,
    x0: &[f64],
    r: f64,
    orders: QuadratureOrders,
) -> Result<WeissTerms> {
    weiss_terms_with(&Sampler::new(u), potential, x0, r, orders)
}

/// `H(v, s) = ∫_{B₁}|∇v|² + F(s²|v|)/s² − 2∫_{∂B₁}|v|²`.
pub fn functional_h<P: Potential>(v: &UnitBallField, potential: &P, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Input(format!("H needs s > 0, got {s}")));
    }
    let s2 = s * s;
    Ok(unit_ball_energy(v, |t| potential.value(s2 * t) / s2))
}

/// `M(v) = ∫_{B₁}|∇v|² + 2f(0)|v| − 2∫_{∂B₁}|v|²`.
pub fn functional_m(v: &UnitBallField, f0: f64) -> f64 {
    unit_ball_energy(v, |t| 2.0 * f0 * t)
}

fn unit_ball_energy(v: &UnitBallField, density: impl Fn(f64) -> f64) -> f64 {
    let q = &v.quad;
    let bulk: f64 = (0..q.vol_len())
        .map(|k| q.vol_weights[k] * (frob2(v.grad(k)) + density(frob2(v.value(k)).sqrt())))
        .sum();
    let boundary: f64 = (0..q.surf_len()).map(|k| q.surf_weights[k] * frob2(v.surface_value(k))).sum();
    bulk - 2.0 * boundary
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditOptions {
    /// Violations are `dW/dr < −tol_mono·(1 + |W|)`.
    pub tol_mono: f64,
    pub radial_order: Option<usize>,
    pub angular_order: Option<usize>,
    /// Radii below `min_radius_cells·h` are rejected.
    pub min_radius_cells: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self { tol_mono: 1e-3, radial_order: None, angular_order: None, min_radius_cells: 8.0 }
    }
}

impl AuditOptions {
    fn orders(&self) -> QuadratureOrders {
        QuadratureOrders { radial: self.radial_order, angular: self.angular_order }
    }
}

/// Power-law fit `W(r) ≈ W0 + A·r^α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityFit {
    pub w0: f64,
    pub amplitude: f64,
    pub exponent: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeissReport {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub w: Vec<f64>,
    pub dw_dr: Vec<f64>,
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
    /// `|dW/dr − (T₁ + T₂)|` per radius.
    pub identity_gap: Vec<f64>,
    /// Indices `j` with `dW/dr < −tol_mono(1 + |W|)`.
    pub violations: Vec<usize>,
    pub tol_mono: f64,
    pub fit: DensityFit,
}

impl WeissReport {
    pub fn monotone(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,W,dW/dr,T1,T2\n");
        for j in 0..self.radii.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.radii[j], self.w[j], self.dw_dr[j], self.t1[j], self.t2[j]
            ));
        }
        out
    }
}

/// Second-order differences on a nonuniform, increasing abscissa.
pub fn nonuniform_derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let k = x.len();
    assert!(k >= 3 && y.len() == k);
    let three_point = |i0: usize, at: usize| {
        let (a, b, c) = (x[i0], x[i0 + 1], x[i0 + 2]);
        let t = x[at];
        // derivative of the Lagrange interpolant through the three points
        y[i0] * ((t - b) + (t - c)) / ((a - b) * (a - c))
            + y[i0 + 1] * ((t - a) + (t - c)) / ((b - a) * (b - c))
            + y[i0 + 2] * ((t - a) + (t - b)) / ((c - a) * (c - b))
    };
    (0..k)
        .map(|j| {
            let i0 = j.saturating_sub(1).min(k - 3);
            three_point(i0, j)
        })
        .collect()
}

/// `r_j = r_min·ratio^j` up to and including `r_max` (to rounding).
pub fn geometric_ladder(r_min: f64, r_max: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(r_min > 0.0 && r_max >= r_min && ratio > 1.0) {
        return Err(Error::Input("ladder needs 0 < r_min ≤ r_max and ratio > 1".into()));
    }
    let mut out = vec![];
    let mut r = r_min;
    while r <= r_max * (1.0 + 1e-12) {
        out.push(r);
        r *= ratio;
    }
    Ok(out)
}

/// Audit `r ↦ W(u, x⁰, r)` over increasing radii.
pub fn monotonicity_audit<P: Potential>(
    u: &VectorField,
    potential: &P,
    x0: &[f64],
    radii: &[f64],
    opts: &AuditOptions,
) -> Result<WeissReport> {
    if radii.len() < 6 {
        return Err(Error::InsufficientData(format!("need at least 6 radii, got {}", radii.len())));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Input("radii must be strictly increasing".into()));
    }
    let h = u.grid().spacing();
    if radii[0] < opts.min_radius_cells * h * (1.0 - 1e-12) {
        return Err(Error::Domain(format!(
            "radius {} is below {}h = {}",
            radii[0],
            opts.min_radius_cells,
            opts.min_radius_cells * h
        )));
    }
    let sampler = Sampler::new(u);
    let terms: Vec<WeissTerms> = radii
        .par_iter()
        .map(|&r| weiss_terms_with(&sampler, potential, x0, r, opts.orders()))
        .collect::<Result<_>>()?;
    let w: Vec<f64> = terms.iter().map(|t| t.w).collect();
    let t1: Vec<f64> = terms.iter().map(|t| t.t1).collect();
    let t2: Vec<f64> = terms.iter().map(|t| t.t2).collect();
    let dw_dr = nonuniform_derivative(radii, &w);
    let identity_gap = (0..radii.len()).map(|j| (dw_dr[j] - t1[j] - t2[j]).abs()).collect();
    let violations = (0..radii.len())
        .filter(|&j| dw_dr[j] < -opts.tol_mono * (1.0 + w[j].abs()))
        .collect();
    let fit = fit_power_law(radii, &w)?;
    Ok(WeissReport {
        center: x0.to_vec(),
        radii: radii.to_vec(),
        w,
        dw_dr,
        t1,
        t2,
        identity_gap,
        violations,
        tol_mono: opts.tol_mono,
        fit,
    })
}

/// `W(0+)` and the decay exponent from a monotonicity report.
pub fn density_limit(report: &WeissReport) -> Result<DensityFit> {
    fit_power_law(&report.radii, &report.w)
}

fn least_squares_at(r: &[f64], w: &[f64], alpha: f64) -> (f64, f64, f64) {
    let k = r.len() as f64;
    let p: Vec<f64> = r.iter().map(|x| x.powf(alpha)).collect();
    let (sp, spp) = (p.iter().sum::<f64>(), p.iter().map(|v| v * v).sum::<f64>());
    let (sw, spw) = (w.iter().sum::<f64>(), p.iter().zip(w).map(|(a, b)| a * b).sum::<f64>());
    let det = k * spp - sp * sp;
    let (w0, a) = if det.abs() <= 1e-14 * (k * spp).max(f64::MIN_POSITIVE) {
        (sw / k, 0.0)
    } else {
        ((spp * sw - sp * spw) / det, (k * spw - sp * sw) / det)
    };
    let rss = p.iter().zip(w).map(|(pi, wi)| (wi - w0 - a * pi).powi(2)).sum();
    (w0, a, rss)
}

/// Fit `W0 + A·r^α`, `α ∈ [0.1, 6]`: coarse scan, then golden-section
/// refinement of the residual with `(W0, A)` by linear least squares.
pub fn fit_power_law(r: &[f64], w: &[f64]) -> Result<DensityFit> {
    if r.len() < 3 || r.len() != w.len() {
        return Err(Error::InsufficientData("power-law fit needs at least 3 samples".into()));
    }
    if r.iter().chain(w).any(|v| !v.is_finite()) || r.iter().any(|&v| v <= 0.0) {
        return Err(Error::Input("power-law fit needs positive radii and finite values".into()));
    }
    let (lo, hi) = (0.1, 6.0);
    let steps = 119;
    let grid_alpha = |i: usize| lo + (hi - lo) * i as f64 / steps as f64;
    let mut best = 0;
    let mut best_rss = f64::INFINITY;
    for i in 0..=steps {
        let rss = least_squares_at(r, w, grid_alpha(i)).2;
        if rss < best_rss {
            best_rss = rss;
            best = i;
        }
    }
    let (mut a, mut b) = (grid_alpha(best.saturating_sub(1)), grid_alpha((best + 1).min(steps)));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = least_squares_at(r, w, c).2;
    let mut fd = least_squares_at(r, w, d).2;
    for _ in 0..80 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = least_squares_at(r, w, c).2;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = least_squares_at(r, w, d).2;
        }
    }
    let mut alpha = 0.5 * (a + b);
    let mut fit = least_squares_at(r, w, alpha);
    let scan = least_squares_at(r, w, grid_alpha(best));
    if scan.2 < fit.2 {
        alpha = grid_alpha(best);
        fit = scan;
    }
    let (w0, amplitude, rss) = fit;
    let residual = (rss / r.len() as f64).sqrt();
    Ok(DensityFit {
        w0,
        amplitude,
        exponent: alpha,
        residual,
        low_confidence: residual > 1e-3 * (1.0 + w0.abs()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointClass {
    Trivial,
    Regular,
    NonRegular,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub class: PointClass,
    pub w0: f64,
    pub alpha_n: f64,
    pub fit: DensityFit,
    pub low_confidence: bool,
}

/// Threshold rule on a measured density `W0`.
pub fn classify_density(w0: f64, alpha: f64, tau: f64) -> PointClass {
    if w0 <= tau * alpha {
        PointClass::Trivial
    } else if (w0 - alpha / 2.0).abs() <= tau * alpha {
        PointClass::Regular
    } else {
        PointClass::NonRegular
    }
}

/// Classify a degenerate free-boundary point by its energy density.
/// `theta_grad` defaults to `f(0)·h`.
pub fn classify_point<P: Potential>(
    u: &VectorField,
    potential: &P,
    x0: &[f64],
    radii: &[f64],
    tau: f64,
    theta_grad: Option<f64>,
    opts: &AuditOptions,
) -> Result<Classification> {
    let f0 = potential.f0();
    let h = u.grid().spacing();
    let theta = theta_grad.unwrap_or(f0 * h);
    let grad = Sampler::new(u).gradient(x0)?;
    let g = frob2(&grad).sqrt();
    if g > theta {
        return Err(Error::Refused(format!(
            "|∇u(x⁰)| = {g:.3e} exceeds θ_grad = {theta:.3e}; not a degenerate point"
        )));
    }
    let report = monotonicity_audit(u, potential, x0, radii, opts)?;
    let alpha = alpha_n(u.grid().dim(), f0);
    let fit = report.fit;
    Ok(Classification {
        class: classify_density(fit.w0, alpha, tau),
        w0: fit.w0,
        alpha_n: alpha,
        fit,
        low_confidence: fit.low_confidence,
    })
}

/// A smooth compactly supported vector field `ξ: ℝⁿ → ℝⁿ`.
pub trait DeformationField: Sync {
    /// Writes `ξ(x)` and its Jacobian `∂_b ξ_a` (row-major `n × n`).
    fn eval(&self, x: &[f64], value: &mut [f64], jacobian: &mut [f64]);
    /// A ball `(center, radius)` containing the support.
    fn support(&self) -> (&[f64], f64);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BumpKind {
    /// `ξ = φ·(x − c)`.
    Dilation,
    /// `ξ = φ·d` for a fixed vector `d`.
    Translation(Vec<f64>),
}

/// `φ(x) = exp(−1/(1 − |x−c|²/R²))` on `B_R(c)`, zero outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub kind: BumpKind,
}

impl Bump {
    pub fn dilation(center: &[f64], radius: f64) -> Self {
        Self { center: center.to_vec(), radius, kind: BumpKind::Dilation }
    }

    pub fn translation(center: &[f64], radius: f64, direction: &[f64]) -> Self {
        Self { center: center.to_vec(), radius, kind: BumpKind::Translation(direction.to_vec()) }
    }
}

impl DeformationField for Bump {
    fn eval(&self, x: &[f64], value: &mut [f64], jacobian: &mut [f64]) {
        let n = self.center.len();
        value[..n].fill(0.0);
        jacobian[..n * n].fill(0.0);
        let y: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let r2 = self.radius * self.radius;
        let t2 = y.iter().map(|v| v * v).sum::<f64>() / r2;
        if t2 >= 1.0 {
            return;
        }
        let phi = (-1.0 / (1.0 - t2)).exp();
        // ∂_b φ = g·y_b
        let g = -2.0 * phi / (r2 * (1.0 - t2) * (1.0 - t2));
        match &self.kind {
            BumpKind::Dilation => {
                for a in 0..n {
                    value[a] = phi * y[a];
                    for b in 0..n {
                        jacobian[a * n + b] = g * y[a] * y[b] + if a == b { phi } else { 0.0 };
                    }
                }
            }
            BumpKind::Translation(d) => {
                for a in 0..n {
                    value[a] = phi * d[a];
                    for b in 0..n {
                        jacobian[a * n + b] = g * d[a] * y[b];
                    }
                }
            }
        }
    }

    fn support(&self) -> (&[f64], f64) {
        (&self.center, self.radius)
    }
}

/// `|∫ |∇u|² div ξ − 2 Σ_q ∇u_q·Dξ ∇u_q + F(|u|) div ξ|` by nodal quadrature
/// with centered-difference gradients.
pub fn domain_variation_residual<P: Potential, X: DeformationField>(
    u: &VectorField,
    potential: &P,
    xi: &X,
) -> Result<f64> {
    let grid = u.grid();
    let (n, m) = (grid.dim(), u.components());
    let h = grid.spacing();
    let (c, radius) = xi.support();
    if c.len() != n || grid.hull_distance(c) <= radius + h {
        return Err(Error::Domain("deformation support must lie strictly inside the grid".into()));
    }
    let sampler = Sampler::new(u);
    let cell = h.powi(n as i32);
    let total: f64 = (0..grid.len())
        .into_par_iter()
        .with_min_len(crate::energy::CHUNK)
        .map_init(
            || (vec![0.0; n], vec![0.0; n], vec![0.0; n * n]),
            |(x, val, jac), i| {
                grid.coords_into(i, x);
                xi.eval(x, val, jac);
                if jac.iter().all(|&v| v == 0.0) {
                    return 0.0;
                }
                let div: f64 = (0..n).map(|a| jac[a * n + a]).sum();
                let du = sampler.nodal_gradient(i);
                let mut grad2 = 0.0;
                let mut form = 0.0;
                for q in 0..m {
                    let p = &du[q * n..(q + 1) * n];
                    grad2 += frob2(p);
                    for a in 0..n {
                        for b in 0..n {
                            form += p[a] * jac[a * n + b] * p[b];
                        }
                    }
                }
                let s = u.norm_at(i);
                cell * (grad2 * div - 2.0 * form + potential.value(s) * div)
            },
        )
        .collect::<Vec<f64>>()
        .chunks(crate::energy::CHUNK)
        .map(|c| c.iter().sum::<f64>())
        .sum();
    Ok(total.abs())
}
