//! Free-boundary extraction and the audits built on it: non-degeneracy,
//! quadratic growth, support offset from a half-space, boundary normals and
//! their Hölder exponent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ball_quadrature, QuadratureOrders, Sampler};
use crate::model::{norm, HalfSpaceSolution, VectorField};
use crate::weiss::geometric_ladder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryClass {
    /// `|∇u| < θ_grad` (the set Γ₀).
    Degenerate,
    /// `|∇u| ≥ θ_grad` (the set Γ₁).
    NonDegenerate,
}

/// Level-set points of `|u|` at `θ_pos`, one per crossed grid edge, in
/// edge-enumeration order (node index, then axis).
#[derive(Debug, Clone, Serialize)]
pub struct FreeBoundarySet {
    pub dim: usize,
    /// Flat, `dim` per point.
    pub points: Vec<f64>,
    pub class: Vec<BoundaryClass>,
    /// Interpolated Frobenius norm of the Jacobian at each point.
    pub grad_norm: Vec<f64>,
    pub theta_pos: f64,
    pub theta_grad: f64,
}

impl FreeBoundarySet {
    pub fn len(&self) -> usize {
        self.class.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    /// Index of the extracted point nearest to `x`.
    pub fn nearest(&self, x: &[f64]) -> Option<usize> {
        (0..self.len()).min_by(|&a, &b| {
            dist2(self.point(a), x).partial_cmp(&dist2(self.point(b), x)).expect("finite points")
        })
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Default thresholds `θ_pos = 1e−2·f(0)h²` and `θ_grad = f(0)h`.
pub fn default_thresholds(f0: f64, h: f64) -> (f64, f64) {
    (1e-2 * f0 * h * h, f0 * h)
}

/// Contour of `|u|` at `θ_pos` on the grid edges (the vertices of the
/// marching-squares / marching-cubes contour). Along an edge the multilinear
/// interpolant is affine, so the crossing solves a quadratic exactly.
pub fn extract(u: &VectorField, theta_pos: f64, theta_grad: f64) -> Result<FreeBoundarySet> {
    if !(theta_pos > 0.0 && theta_grad > 0.0) {
        return Err(Error::Input("extraction thresholds must be positive".into()));
    }
    let grid = u.grid();
    let (n, m) = (grid.dim(), u.components());
    let st = grid.strides();
    let mut points = vec![];
    for i in 0..grid.len() {
        let mi = grid.multi_index(i);
        for a in 0..n {
            if mi[a] + 1 >= grid.dims()[a] {
                continue;
            }
            let j = i + st[a];
            let (si, sj) = (u.norm_at(i), u.norm_at(j));
            if (si > theta_pos) == (sj > theta_pos) {
                continue;
            }
            // |p + t d|² = θ² on t ∈ [0, 1]
            let (p, q) = (u.node(i), u.node(j));
            let d: Vec<f64> = (0..m).map(|c| q[c] - p[c]).collect();
            let aa: f64 = d.iter().map(|v| v * v).sum();
            let bb: f64 = 2.0 * (0..m).map(|c| p[c] * d[c]).sum::<f64>();
            let cc: f64 = si * si - theta_pos * theta_pos;
            let t = crossing(aa, bb, cc, si > theta_pos);
            let mut x = grid.coords(i);
            x[a] += t * grid.spacing();
            points.extend_from_slice(&x);
        }
    }
    let count = points.len() / n;
    let sampler = Sampler::new(u);
    let grad_norm: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|k| sampler.gradient(&points[k * n..(k + 1) * n]).map(|g| norm(&g)))
        .collect::<Result<_>>()?;
    let class = grad_norm
        .iter()
        .map(|&g| if g < theta_grad { BoundaryClass::Degenerate } else { BoundaryClass::NonDegenerate })
        .collect();
    Ok(FreeBoundarySet { dim: n, points, class, grad_norm, theta_pos, theta_grad })
}

/// Root in `[0, 1]` of `a t² + b t + c`, where the sign of the quadratic
/// changes between the endpoints (`starts_above`: positive at `t = 0`).
fn crossing(a: f64, b: f64, c: f64, starts_above: bool) -> f64 {
    let g = |t: f64| (a * t + b) * t + c;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if a > 0.0 {
        let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
        for root in [(-b - disc) / (2.0 * a), (-b + disc) / (2.0 * a)] {
            if (0.0..=1.0).contains(&root) && (g(root - 1e-12).signum() != g(root + 1e-12).signum() || root == 0.0 || root == 1.0) {
                return root;
            }
        }
    }
    // bisection fallback for degenerate edges
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0) == starts_above {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Supremum of `|u|` over `B_r(x⁰)` from the quadrature nodes, the sphere
/// nodes and the grid nodes inside the ball.
fn sup_over_ball(sampler: &Sampler<'_>, x0: &[f64], r: f64, gradient: bool) -> Result<f64> {
    let u = sampler.field();
    let grid = u.grid();
    let quad = ball_quadrature(grid, x0, r, QuadratureOrders::default())?;
    let mut best = 0.0f64;
    let eval = |x: &[f64]| -> Result<f64> {
        if gradient {
            Ok(norm(&sampler.gradient(x)?))
        } else {
            Ok(norm(&sampler.value(x)?))
        }
    };
    for k in 0..quad.vol_len() {
        best = best.max(eval(quad.vol_point(k))?);
    }
    for k in 0..quad.surf_len() {
        best = best.max(eval(quad.surf_point(k))?);
    }
    let n = grid.dim();
    let h = grid.spacing();
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..n {
        lo[a] = (((x0[a] - r - grid.origin()[a]) / h).floor().max(0.0)) as usize;
        hi[a] = ((((x0[a] + r - grid.origin()[a]) / h).ceil()) as usize).min(grid.dims()[a] - 1);
    }
    let mut x = vec![0.0; n];
    for i in 0..grid.len() {
        let mi = grid.multi_index(i);
        if (0..n).any(|a| mi[a] < lo[a] || mi[a] > hi[a]) {
            continue;
        }
        grid.coords_into(i, &mut x);
        if dist2(&x, x0) <= r * r {
            let v = if gradient { norm(sampler.nodal_gradient(i)) } else { u.norm_at(i) };
            best = best.max(v);
        }
    }
    Ok(best)
}

/// True when some node within one cell diagonal of `x0` has `|u| > θ`.
fn in_support_closure(u: &VectorField, x0: &[f64], theta: f64) -> bool {
    let grid = u.grid();
    let h = grid.spacing();
    let reach = h * (grid.dim() as f64).sqrt() * (1.0 + 1e-9);
    let mut x = vec![0.0; grid.dim()];
    (0..grid.len()).any(|i| {
        grid.coords_into(i, &mut x);
        dist2(&x, x0) <= reach * reach && u.norm_at(i) > theta
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NondegeneracyRow {
    pub r: f64,
    pub sup: f64,
    pub bound: f64,
    pub margin: f64,
    pub slack: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NondegeneracyReport {
    pub center: Vec<f64>,
    pub rows: Vec<NondegeneracyRow>,
}

impl NondegeneracyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| !r.flagged)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,sup,bound,margin,slack,flagged\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.r, row.sup, row.bound, row.margin, row.slack, row.flagged
            ));
        }
        out
    }
}

/// Compare `sup_{B_r(x⁰)}|u|` with `f(0)r²/(2n)`; flags rows whose margin
/// falls below `−(0.05·bound + f(0)h²)`. Refuses points outside the closure
/// of `{|u| > θ_pos}`.
pub fn nondegeneracy_audit(
    u: &VectorField,
    x0: &[f64],
    radii: &[f64],
    f0: f64,
    theta_pos: Option<f64>,
) -> Result<NondegeneracyReport> {
    let grid = u.grid();
    let h = grid.spacing();
    let theta = theta_pos.unwrap_or(default_thresholds(f0, h).0);
    if !in_support_closure(u, x0, theta) {
        return Err(Error::Refused(format!("{x0:?} is not in the closure of the support of u")));
    }
    let sampler = Sampler::new(u);
    let n = grid.dim() as f64;
    let rows = radii
        .par_iter()
        .map(|&r| {
            let sup = sup_over_ball(&sampler, x0, r, false)?;
            let bound = f0 * r * r / (2.0 * n);
            let slack = 0.05 * bound + f0 * h * h;
            let margin = sup - bound;
            Ok(NondegeneracyRow { r, sup, bound, margin, slack, flagged: margin < -slack })
        })
        .collect::<Result<_>>()?;
    Ok(NondegeneracyReport { center: x0.to_vec(), rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub sup_u: Vec<f64>,
    pub sup_grad: Vec<f64>,
    pub u_exponent: f64,
    pub u_constant: f64,
    pub grad_exponent: f64,
    pub grad_constant: f64,
}

impl GrowthReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,sup_u,sup_grad\n");
        for j in 0..self.radii.len() {
            out.push_str(&format!("{},{},{}\n", self.radii[j], self.sup_u[j], self.sup_grad[j]));
        }
        out
    }
}

/// Least-squares line through `(log x, log y)`: `(slope, exp(intercept))`.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let pairs: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pairs.len() < 2 {
        return Err(Error::InsufficientData("log-log fit needs two positive samples".into()));
    }
    let k = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientData("log-log fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, (my - slope * mx).exp()))
}

/// Log-log slopes of `sup_{B_r}|u|` and `sup_{B_r}|∇u|` at a point of Γ₀.
/// Radii below `10h` are dropped; at least four must remain.
pub fn growth_audit(u: &VectorField, x0: &[f64], radii: &[f64], theta_grad: f64) -> Result<GrowthReport> {
    let h = u.grid().spacing();
    let sampler = Sampler::new(u);
    let g0 = norm(&sampler.gradient(x0)?);
    if g0 >= theta_grad {
        return Err(Error::Refused(format!("|∇u(x⁰)| = {g0:.3e} ≥ θ_grad; point is not in Γ₀")));
    }
    let valid: Vec<f64> = radii.iter().copied().filter(|&r| r >= 10.0 * h * (1.0 - 1e-12)).collect();
    if valid.len() < 4 {
        return Err(Error::InsufficientData(format!("need 4 radii ≥ 10h, got {}", valid.len())));
    }
    let sups: Vec<(f64, f64)> = valid
        .par_iter()
        .map(|&r| Ok((sup_over_ball(&sampler, x0, r, false)?, sup_over_ball(&sampler, x0, r, true)?)))
        .collect::<Result<_>>()?;
    let sup_u: Vec<f64> = sups.iter().map(|s| s.0).collect();
    let sup_grad: Vec<f64> = sups.iter().map(|s| s.1).collect();
    let (u_exponent, u_constant) = log_log_fit(&valid, &sup_u)?;
    let (grad_exponent, grad_constant) = log_log_fit(&valid, &sup_grad)?;
    Ok(GrowthReport {
        center: x0.to_vec(),
        radii: valid,
        sup_u,
        sup_grad,
        u_exponent,
        u_constant,
        grad_exponent,
        grad_constant,
    })
}

/// `‖u − H‖_{L¹(B₁)}` by nodal quadrature over the nodes in the unit ball.
pub fn l1_distance_unit_ball(u: &VectorField, hs: &HalfSpaceSolution) -> Result<f64> {
    let grid = u.grid();
    let origin = vec![0.0; grid.dim()];
    if grid.hull_distance(&origin) < 1.0 {
        return Err(Error::Domain("the unit ball is not inside the grid".into()));
    }
    let cell = grid.spacing().powi(grid.dim() as i32);
    let mut x = vec![0.0; grid.dim()];
    let mut total = 0.0;
    for i in 0..grid.len() {
        grid.coords_into(i, &mut x);
        if dist2(&x, &origin) < 1.0 {
            let hv = hs.eval(&x);
            total += cell * norm(&u.node(i).iter().zip(&hv).map(|(a, b)| a - b).collect::<Vec<_>>());
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SupportOffset {
    pub epsilon: f64,
    /// `max(0, −min x·ν)` over support nodes in `B_{1/2}`.
    pub offset: f64,
    /// `offset / ε^{1/(2n+2)}`.
    pub ratio: f64,
}

/// How far the support of `u` reaches into the zero side of `H` within
/// `B_{1/2}`, given the measured `ε = ‖u − H‖_{L¹(B₁)} < 1`.
pub fn support_offset(u: &VectorField, hs: &HalfSpaceSolution, epsilon: f64, theta_pos: f64) -> Result<SupportOffset> {
    let grid = u.grid();
    let n = grid.dim();
    if grid.hull_distance(&vec![0.0; n]) < 1.0 {
        return Err(Error::Domain("the unit ball is not inside the grid".into()));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::Input(format!("ε must lie in [0, 1), got {epsilon}")));
    }
    let mut x = vec![0.0; n];
    let mut lowest = 0.0f64;
    for i in 0..grid.len() {
        grid.coords_into(i, &mut x);
        if dist2(&x, &vec![0.0; n]) < 0.25 && u.norm_at(i) > theta_pos {
            lowest = lowest.min(x.iter().zip(&hs.nu).map(|(a, b)| a * b).sum());
        }
    }
    let offset = (-lowest).max(0.0);
    let scale = epsilon.powf(1.0 / (2.0 * n as f64 + 2.0));
    let ratio = if offset == 0.0 { 0.0 } else { offset / scale };
    Ok(SupportOffset { epsilon, offset, ratio })
}

/// Unit normals of the extracted boundary, pointing into `{|u| > 0}`;
/// `None` where the smoothed gradient vanishes or the offset point leaves
/// the grid.
#[derive(Debug, Clone, Serialize)]
pub struct NormalField {
    pub normals: Vec<Option<Vec<f64>>>,
    pub skipped: usize,
}

/// Normals from `∇|u|` after one damped Jacobi smoothing pass, evaluated at
/// the point moved `2h` into the positivity set.
pub fn normal_field(fb: &FreeBoundarySet, u: &VectorField) -> Result<NormalField> {
    let grid = u.grid();
    let h = grid.spacing();
    let stencil = crate::energy::Stencil::new(grid);
    let smooth: Vec<f64> = (0..grid.len())
        .map(|i| {
            let own = u.norm_at(i);
            let (mut sum, mut count) = (0.0, 0usize);
            stencil.for_each_neighbor(i, |j| {
                sum += u.norm_at(j);
                count += 1;
            });
            if count == 0 {
                own
            } else {
                0.5 * own + 0.5 * sum / count as f64
            }
        })
        .collect();
    let scalar = VectorField::from_parts(grid.clone(), 1, smooth, u.mask().to_vec())?;
    let sampler = Sampler::new(&scalar);
    let normals: Vec<Option<Vec<f64>>> = (0..fb.len())
        .into_par_iter()
        .map(|k| {
            let x = fb.point(k);
            let g = sampler.gradient(x).ok()?;
            let gn = norm(&g);
            if !(gn > 1e-300) {
                return None;
            }
            let shifted: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + 2.0 * h * b / gn).collect();
            let g2 = sampler.gradient(&shifted).ok()?;
            let n2 = norm(&g2);
            (n2 > 1e-300).then(|| g2.iter().map(|v| v / n2).collect())
        })
        .collect();
    let skipped = normals.iter().filter(|v| v.is_none()).count();
    Ok(NormalField { normals, skipped })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HolderOptions {
    /// Pairs closer than `min_cells·h` are excluded.
    pub min_cells: f64,
    pub max_dist: f64,
    /// Logarithmic distance bins per decade for the envelope.
    pub bins_per_decade: usize,
}

impl Default for HolderOptions {
    fn default() -> Self {
        Self { min_cells: 10.0, max_dist: 0.3, bins_per_decade: 6 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderFit {
    /// `None` when the normals do not vary (the fit sits at its ceiling).
    pub beta: Option<f64>,
    pub residual: f64,
    pub pairs: usize,
    pub at_ceiling: bool,
}

/// `β(κ) = q/(1+q)` with `q = (n+2)κ/(2(1−κ))`.
pub fn holder_reference(n: usize, kappa: f64) -> f64 {
    let q = (n as f64 + 2.0) * kappa / (2.0 * (1.0 - kappa));
    q / (1.0 + q)
}

/// Slope of `log|ν(x) − ν(y)|` against `log|x − y|`, fitted to the
/// per-bin maxima (the modulus-of-continuity envelope) over pairs with
/// `|x − y| ∈ [min_cells·h, max_dist]`.
pub fn holder_exponent(points: &[Vec<f64>], normals: &[Vec<f64>], h: f64, opts: &HolderOptions) -> Result<HolderFit> {
    if points.len() != normals.len() {
        return Err(Error::Input("points and normals differ in length".into()));
    }
    if points.len() < 20 {
        return Err(Error::InsufficientData(format!("need at least 20 points, got {}", points.len())));
    }
    let lo = opts.min_cells * h;
    let hi = opts.max_dist;
    let mut pairs = vec![];
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = dist2(&points[i], &points[j]).sqrt();
            if d >= lo && d <= hi {
                pairs.push((d, dist2(&normals[i], &normals[j]).sqrt()));
            }
        }
    }
    let (dmin, dmax) = pairs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), p| (a.min(p.0), b.max(p.0)));
    if pairs.is_empty() || dmax < 10.0 * dmin * (1.0 - 1e-9) {
        return Err(Error::InsufficientData("pair distances span less than one decade".into()));
    }
    let count = pairs.len();
    if pairs.iter().all(|p| p.1 <= 1e-12) {
        return Ok(HolderFit { beta: None, residual: 0.0, pairs: count, at_ceiling: true });
    }
    let decades = (dmax / dmin).log10();
    let nbins = ((decades * opts.bins_per_decade as f64).ceil() as usize).max(2);
    let mut env = vec![(0.0f64, 0.0f64); nbins];
    for &(d, dv) in &pairs {
        let b = (((d / dmin).log10() / decades) * nbins as f64).floor() as usize;
        let b = b.min(nbins - 1);
        if dv > env[b].1 {
            env[b] = (d, dv);
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = env.iter().filter(|e| e.1 > 1e-12).map(|e| (e.0, e.1)).unzip();
    if xs.len() < 3 {
        return Ok(HolderFit { beta: None, residual: 0.0, pairs: count, at_ceiling: true });
    }
    let (beta, c) = log_log_fit(&xs, &ys)?;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y.ln() - c.ln() - beta * x.ln()).powi(2))
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    Ok(HolderFit { beta: Some(beta), residual, pairs: count, at_ceiling: false })
}

/// Default radius ladder for point audits: `ratio`-geometric from `r_min`.
pub fn audit_ladder(r_min: f64, r_max: f64) -> Result<Vec<f64>> {
    geometric_ladder(r_min, r_max, 2f64.powf(0.25))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Grid;

    fn half_space_field(h: f64, nu: &[f64]) -> (VectorField, HalfSpaceSolution) {
        let g = Grid::cube(2, -1.0, 1.0, h).unwrap();
        let hs = HalfSpaceSolution::new(nu, &[1.0], 1.0).unwrap();
        (VectorField::from_fn(g, 1, |x| hs.eval(x)), hs)
    }

    #[test]
    fn extraction_of_the_half_space() {
        let h = 1.0 / 32.0;
        let (u, hs) = half_space_field(h, &[0.3, 1.0]);
        let (tp, tg) = default_thresholds(1.0, h);
        let fb = extract(&u, tp, tg).unwrap();
        assert!(fb.len() > 50);
        let expect = (2.0 * tp).sqrt();
        for k in 0..fb.len() {
            let x = fb.point(k);
            let t: f64 = x.iter().zip(&hs.nu).map(|(a, b)| a * b).sum();
            assert!((t - expect).abs() <= 2.0 * h, "{t}");
            let v = crate::geometry::interpolate(&u, x).unwrap();
            assert!((norm(&v) - tp).abs() <= 0.1 * tp);
            assert_eq!(fb.class[k], BoundaryClass::Degenerate);
        }
        let z = VectorField::zeros(u.grid().clone(), 2);
        assert!(extract(&z, tp, tg).unwrap().is_empty());
        let pos = VectorField::from_fn(u.grid().clone(), 1, |_| vec![1.0]);
        assert!(extract(&pos, tp, tg).unwrap().is_empty());
    }

    #[test]
    fn sign_changing_components_are_nondegenerate() {
        let g = Grid::cube(2, -1.0, 1.0, 1.0 / 16.0).unwrap();
        let u = VectorField::from_fn(g, 1, |x| vec![x[0]]);
        let fb = extract(&u, 1e-3, 1.0 / 16.0).unwrap();
        assert!(!fb.is_empty());
        assert!(fb.class.iter().all(|c| *c == BoundaryClass::NonDegenerate));
    }

    #[test]
    fn nondegeneracy_of_the_half_space() {
        let h = 1.0 / 32.0;
        let (u, _) = half_space_field(h, &[0.0, 1.0]);
        let rep = nondegeneracy_audit(&u, &[0.0, 0.0], &[0.5], 1.0, None).unwrap();
        let row = &rep.rows[0];
        assert!((row.sup - 0.125).abs() < 1e-9 && (row.bound - 0.0625).abs() < 1e-15);
        assert!(rep.passed());
        let err = nondegeneracy_audit(&u, &[0.0, -0.5], &[0.2], 1.0, None).unwrap_err();
        assert!(matches!(err, Error::Refused(_)));
    }

    #[test]
    fn growth_exponents_of_the_half_space_and_a_cubic() {
        let h = 1.0 / 64.0;
        let (u, _) = half_space_field(h, &[0.0, 1.0]);
        let radii = audit_ladder(10.0 * h, 0.6).unwrap();
        let rep = growth_audit(&u, &[0.0, 0.0], &radii, h).unwrap();
        assert!((rep.u_exponent - 2.0).abs() < 0.02, "{}", rep.u_exponent);
        assert!((rep.grad_exponent - 1.0).abs() < 0.02, "{}", rep.grad_exponent);
        let cubic = VectorField::from_fn(u.grid().clone(), 1, |x| vec![x[1].max(0.0).powi(3)]);
        let rep = growth_audit(&cubic, &[0.0, 0.0], &radii, h).unwrap();
        assert!((rep.u_exponent - 3.0).abs() < 0.05, "{}", rep.u_exponent);
        assert!(matches!(growth_audit(&u, &[0.0, 0.0], &radii[..3], h), Err(Error::InsufficientData(_))));
        assert!(matches!(growth_audit(&u, &[0.0, 0.5], &radii[..5], h), Err(Error::Refused(_))));
    }

    #[test]
    fn support_offset_examples() {
        let h = 1.0 / 32.0;
        let g = Grid::cube(2, -1.25, 1.25, h).unwrap();
        let hs = HalfSpaceSolution::axis(2, 1, 1, 1.0);
        let u = VectorField::from_fn(g.clone(), 1, |x| hs.eval(x));
        let eps = l1_distance_unit_ball(&u, &hs).unwrap();
        assert_eq!(eps, 0.0);
        let off = support_offset(&u, &hs, eps, 1e-6).unwrap();
        assert_eq!(off.offset, 0.0);
        let bumped = VectorField::from_fn(g.clone(), 1, |x| {
            vec![hs.eval(x)[0] + if x[1] > 0.1 { 0.01 * x[0].cos() } else { 0.0 }]
        });
        let eps = l1_distance_unit_ball(&bumped, &hs).unwrap();
        assert!(eps > 0.0);
        assert_eq!(support_offset(&bumped, &hs, eps, 1e-6).unwrap().offset, 0.0);
        let shifted = VectorField::from_fn(g, 1, |x| hs.eval(&[x[0], x[1] + 0.1]));
        let eps = l1_distance_unit_ball(&shifted, &hs).unwrap();
        let off = support_offset(&shifted, &hs, eps, 1e-6).unwrap();
        assert!((off.offset - 0.09375).abs() < 1e-12, "{off:?}");
        let small = Grid::cube(2, -0.875, 0.875, h).unwrap();
        assert!(matches!(
            support_offset(&VectorField::zeros(small, 1), &hs, 0.1, 1e-6),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn normals_of_the_half_space_and_a_disc() {
        let h = 1.0 / 64.0;
        let (u, hs) = half_space_field(h, &[0.3, 1.0]);
        let (tp, tg) = default_thresholds(1.0, h);
        let fb = extract(&u, tp, tg).unwrap();
        let nf = normal_field(&fb, &u).unwrap();
        for (k, v) in nf.normals.iter().enumerate() {
            if u.grid().hull_distance(fb.point(k)) < 3.0 * h {
                continue;
            }
            let v = v.as_ref().unwrap();
            let cos: f64 = v.iter().zip(&hs.nu).map(|(a, b)| a * b).sum();
            assert!(cos.min(1.0).acos() < 2.0 * h, "{cos} at {:?}", fb.point(k));
        }
        // radially symmetric exterior profile around a contact disc
        let g = u.grid().clone();
        let disc = VectorField::from_fn(g, 1, |x| {
            let r = norm(x);
            vec![0.5 * (r - 0.3).max(0.0).powi(2)]
        });
        let fb = extract(&disc, tp, tg).unwrap();
        let nf = normal_field(&fb, &disc).unwrap();
        let mut worst: f64 = 0.0;
        for (k, v) in nf.normals.iter().enumerate() {
            let v = v.as_ref().unwrap();
            let x = fb.point(k);
            let cos = (v[0] * x[0] + v[1] * x[1]) / norm(x);
            worst = worst.max(cos.clamp(-1.0, 1.0).acos().to_degrees());
        }
        assert!(worst < 2.0, "{worst}");
    }

    #[test]
    fn holder_exponent_of_a_weierstrass_wiggle() {
        // graph boundary y = 0 with normal angle θ(s) = Σ 2^{−k/2} cos(2^k π s)
        let count = 2048;
        let points: Vec<Vec<f64>> = (0..count).map(|i| vec![i as f64 / count as f64, 0.0]).collect();
        let normals: Vec<Vec<f64>> = points
            .iter()
            .map(|p| {
                let th: f64 = (0..14).map(|k| 0.05 * 2f64.powf(-0.5 * k as f64) * (2f64.powi(k) * PI * p[0]).cos()).sum();
                vec![th.sin(), th.cos()]
            })
            .collect();
        let fit = holder_exponent(&points, &normals, 1.0 / 4096.0, &HolderOptions { max_dist: 0.3, ..Default::default() }).unwrap();
        let beta = fit.beta.unwrap();
        assert!((beta - 0.5).abs() < 0.05, "{beta}");
        let flat: Vec<Vec<f64>> = points.iter().map(|_| vec![0.0, 1.0]).collect();
        let fit = holder_exponent(&points, &flat, 1.0 / 4096.0, &HolderOptions::default()).unwrap();
        assert!(fit.at_ceiling && fit.beta.is_none());
        assert!(holder_exponent(&points[..10], &flat[..10], 1e-3, &HolderOptions::default()).is_err());
        assert!((holder_reference(2, 0.5) - 2.0 / 3.0).abs() < 1e-15);
    }

    use std::f64::consts::PI;
}
