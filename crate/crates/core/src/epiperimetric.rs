//! 2-homogeneous cones near the half-space solutions, their constrained
//! minimizers, and the empirical contraction constant
//! `κ = (H(c,s) − H(v,s))/(H(c,s) − M(h))`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blowup::{project_to_halfspace, standard_rule};
use crate::energy::discrete_energy;
use crate::error::{Error, Result};
use crate::geometry::{sphere_rule, BallQuadrature, UnitBallField};
use crate::model::{dot, norm, Grid, HalfSpaceSolution, Nonlinearity, Potential, RescaledNonlinearity, VectorField};
use crate::solver::{minimize, SolveOptions};
use crate::weiss::{alpha_n, functional_m};

/// Angular perturbation basis: `1, cos kθ, sin kθ` (`k ≤ K`) on the circle,
/// monomials of degree `≤ K` restricted to the 2-sphere.
fn basis_len(n: usize, degree: usize) -> usize {
    match n {
        2 => 2 * degree + 1,
        _ => (degree + 1) * (degree + 2) * (degree + 3) / 6,
    }
}

fn monomials(degree: usize) -> Vec<[i32; 3]> {
    let mut out = vec![];
    for total in 0..=degree as i32 {
        for a in (0..=total).rev() {
            for b in (0..=total - a).rev() {
                out.push([a, b, total - a - b]);
            }
        }
    }
    out
}

/// Values and tangential gradients (flat `n` per basis function) at a unit
/// direction `w`.
fn basis_eval(n: usize, degree: usize, w: &[f64], values: &mut Vec<f64>, tangents: &mut Vec<f64>) {
    values.clear();
    tangents.clear();
    if n == 2 {
        let th = w[1].atan2(w[0]);
        let t = [-th.sin(), th.cos()];
        values.push(1.0);
        tangents.extend_from_slice(&[0.0, 0.0]);
        for k in 1..=degree {
            let kf = k as f64;
            let (s, c) = (kf * th).sin_cos();
            values.push(c);
            tangents.extend_from_slice(&[-kf * s * t[0], -kf * s * t[1]]);
            values.push(s);
            tangents.extend_from_slice(&[kf * c * t[0], kf * c * t[1]]);
        }
        return;
    }
    let pow = |x: f64, e: i32| if e == 0 { 1.0 } else { x.powi(e) };
    for [a, b, c] in monomials(degree) {
        let v = pow(w[0], a) * pow(w[1], b) * pow(w[2], c);
        let g = [
            if a > 0 { a as f64 * pow(w[0], a - 1) * pow(w[1], b) * pow(w[2], c) } else { 0.0 },
            if b > 0 { b as f64 * pow(w[0], a) * pow(w[1], b - 1) * pow(w[2], c) } else { 0.0 },
            if c > 0 { c as f64 * pow(w[0], a) * pow(w[1], b) * pow(w[2], c - 1) } else { 0.0 },
        ];
        let radial = dot(&g, w);
        values.push(v);
        tangents.extend((0..3).map(|i| g[i] - radial * w[i]));
    }
}

/// Trace `c = h + δ·w` on `∂B₁` of a 2-homogeneous cone, with `w` a
/// combination of angular harmonics of unit `W^{1,2}(∂B₁)` norm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeTrace {
    pub base: HalfSpaceSolution,
    pub delta: f64,
    pub degree: usize,
    /// Row-major `basis × m`.
    pub coefficients: Vec<f64>,
    /// `‖c − h‖_{W^{1,2}(∂B₁)}`.
    pub w12_distance: f64,
    /// `‖c − h‖_{L∞(∂B₁)}` on a dense sample.
    pub linf_distance: f64,
}

impl ConeTrace {
    /// The unperturbed trace of `h`.
    pub fn half_space(base: &HalfSpaceSolution) -> Self {
        Self {
            base: base.clone(),
            delta: 0.0,
            degree: 0,
            coefficients: vec![0.0; base.components()],
            w12_distance: 0.0,
            linf_distance: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn components(&self) -> usize {
        self.base.components()
    }

    /// Perturbation `δ·w(ω)` and its tangential gradient (row-major `m × n`).
    fn perturbation(&self, omega: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (n, m) = (self.dim(), self.components());
        let mut val = vec![0.0; m];
        let mut tan = vec![0.0; m * n];
        if self.delta == 0.0 {
            return (val, tan);
        }
        let (mut bv, mut bt) = (vec![], vec![]);
        basis_eval(n, self.degree, omega, &mut bv, &mut bt);
        for (b, phi) in bv.iter().enumerate() {
            for q in 0..m {
                let c = self.delta * self.coefficients[b * m + q];
                if c == 0.0 {
                    continue;
                }
                val[q] += c * phi;
                for a in 0..n {
                    tan[q * n + a] += c * bt[b * n + a];
                }
            }
        }
        (val, tan)
    }

    /// `c(x) = |x|²c(x/|x|)` and its Jacobian.
    pub fn extension(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let mut val = self.base.eval(x);
        let mut jac = self.base.gradient(x);
        let rho = norm(x);
        if rho == 0.0 || self.delta == 0.0 {
            return (val, jac);
        }
        let omega: Vec<f64> = x.iter().map(|v| v / rho).collect();
        let (pv, pt) = self.perturbation(&omega);
        for q in 0..val.len() {
            val[q] += rho * rho * pv[q];
            for a in 0..n {
                jac[q * n + a] += 2.0 * rho * pv[q] * omega[a] + rho * pt[q * n + a];
            }
        }
        (val, jac)
    }

    /// Trace samples at the nodes of `rule`, `m` per node.
    pub fn samples(&self, directions: &[f64]) -> Vec<f64> {
        directions.chunks(self.dim()).flat_map(|w| self.extension(w).0).collect()
    }
}

fn dense_sphere(n: usize) -> (Vec<f64>, Vec<f64>) {
    sphere_rule(n, if n == 2 { 512 } else { 128 })
}

/// `(‖a − b‖_{W^{1,2}(∂B₁)}, ‖a − b‖_{L∞(∂B₁)})` for two 2-homogeneous maps
/// given by their extensions.
fn sphere_distances(
    n: usize,
    a: impl Fn(&[f64]) -> (Vec<f64>, Vec<f64>),
    b: impl Fn(&[f64]) -> (Vec<f64>, Vec<f64>),
) -> (f64, f64) {
    let (dirs, weights) = dense_sphere(n);
    let (mut w12, mut linf) = (0.0, 0.0f64);
    for (k, w) in dirs.chunks(n).enumerate() {
        let (va, ja) = a(w);
        let (vb, jb) = b(w);
        let m = va.len();
        let mut s = 0.0;
        for q in 0..m {
            let d = va[q] - vb[q];
            s += d * d;
            // tangential part of the Jacobian difference
            let row: Vec<f64> = (0..n).map(|i| ja[q * n + i] - jb[q * n + i]).collect();
            let radial = dot(&row, w);
            s += row.iter().zip(w).map(|(r, wi)| (r - radial * wi).powi(2)).sum::<f64>();
        }
        w12 += weights[k] * s;
        let diff: f64 = va.iter().zip(&vb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        linf = linf.max(diff);
    }
    (w12.sqrt(), linf)
}

/// `c = h + δw` with `w` drawn from the harmonics of degree `≤ K` on a
/// random nonempty subset of the components, normalized to unit
/// `W^{1,2}(∂B₁)` norm.
pub fn sample_cone_near_halfspace(base: &HalfSpaceSolution, delta: f64, degree: usize, seed: u64) -> Result<ConeTrace> {
    let (n, m) = (base.dim(), base.components());
    if !(2..=3).contains(&n) {
        return Err(Error::Input(format!("cones are sampled for n = 2, 3, got {n}")));
    }
    if !(delta >= 0.0) || !delta.is_finite() || degree == 0 {
        return Err(Error::Input("need δ ≥ 0 and K ≥ 1".into()));
    }
    if delta == 0.0 {
        return Ok(ConeTrace::half_space(base));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut active: Vec<bool> = (0..m).map(|_| rng.gen_bool(0.5)).collect();
    if !active.iter().any(|&a| a) {
        active[rng.gen_range(0..m)] = true;
    }
    let len = basis_len(n, degree);
    let mut coefficients = vec![0.0; len * m];
    for b in 0..len {
        for q in 0..m {
            let c: f64 = rng.gen_range(-1.0..1.0);
            if active[q] {
                coefficients[b * m + q] = c;
            }
        }
    }
    let mut trace = ConeTrace {
        base: base.clone(),
        delta: 1.0,
        degree,
        coefficients,
        w12_distance: 0.0,
        linf_distance: 0.0,
    };
    let zero = |_: &[f64]| (vec![0.0; m], vec![0.0; m * n]);
    let (raw, _) = sphere_distances(n, |w| trace.perturbation(w), zero);
    if !(raw > 0.0) {
        return Err(Error::Numeric("sampled perturbation vanished".into()));
    }
    trace.coefficients.iter_mut().for_each(|c| *c /= raw);
    trace.delta = delta;
    let (w12, linf) = sphere_distances(n, |w| trace.perturbation(w), zero);
    trace.w12_distance = w12;
    trace.linf_distance = linf;
    Ok(trace)
}

/// Samples of the cone on a polar unit-ball rule.
pub fn cone_from_trace(trace: &ConeTrace, quad: BallQuadrature) -> UnitBallField {
    let m = trace.components();
    UnitBallField::from_fn(quad, m, |x| Ok(trace.extension(x))).expect("cone sampling is infallible")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpiOptions {
    /// Spacing of the Cartesian grid covering `B₁`.
    pub spacing: f64,
    /// `κ` is left undefined when `H(c) − M(h)` is at most this.
    pub eps_den: f64,
    pub solver: SolveOptions,
}

impl Default for EpiOptions {
    fn default() -> Self {
        Self { spacing: 1.0 / 32.0, eps_den: 1e-8, solver: SolveOptions::default() }
    }
}

/// Grid `[−1−2h, 1+2h]ⁿ` with every node outside the open unit ball pinned.
fn ball_grid(n: usize, h: f64) -> Result<(Grid, Vec<bool>)> {
    let grid = Grid::cube(n, -1.0 - 2.0 * h, 1.0 + 2.0 * h, h)?;
    let mut x = vec![0.0; n];
    let mask = (0..grid.len())
        .map(|i| {
            grid.coords_into(i, &mut x);
            dot(&x, &x) >= 1.0 || grid.on_hull(i)
        })
        .collect();
    Ok((grid, mask))
}

fn sample_on(grid: &Grid, mask: &[bool], m: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<VectorField> {
    let field = VectorField::from_fn(grid.clone(), m, f);
    VectorField::from_parts(grid.clone(), m, field.values().to_vec(), mask.to_vec())
}

fn sphere_mass(n: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    let (dirs, weights) = dense_sphere(n);
    dirs.chunks(n).zip(&weights).map(|(w, wt)| wt * f(w).iter().map(|v| v * v).sum::<f64>()).sum()
}

/// Discrete `H(w, s)`: `E_h` with the potential `F_s` over the edges and
/// nodes touching the free nodes (those inside `B₁`), minus `2∫_{∂B₁}|w|²`
/// from the exact trace.
fn discrete_h<P: Potential>(field: &VectorField, potential: &P, trace_mass: f64) -> Result<f64> {
    Ok(discrete_energy(field, potential)? - 2.0 * trace_mass)
}

/// The competitor `v`: the discrete minimizer of `H(·, s)` with the
/// exterior pinned to the 2-homogeneous extension of `c`, together with
/// the pinned cone itself.
pub fn competitor<P: Potential>(
    trace: &ConeTrace,
    potential: &P,
    s: f64,
    opts: &EpiOptions,
) -> Result<(VectorField, VectorField)> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Input(format!("s must lie in (0, 1], got {s}")));
    }
    let (n, m) = (trace.dim(), trace.components());
    let (grid, mask) = ball_grid(n, opts.spacing)?;
    let cone = sample_on(&grid, &mask, m, |x| trace.extension(x).0)?;
    let fs = RescaledNonlinearity::new(potential, s)?;
    let (v, _) = minimize(&cone, &fs, &opts.solver)?;
    if discrete_energy(&v, &fs)? > discrete_energy(&cone, &fs)? {
        return Ok((cone.clone(), cone));
    }
    Ok((v, cone))
}

#[derive(Debug, Clone, Serialize)]
pub struct EpiResult {
    pub s: f64,
    pub h_c: f64,
    pub h_v: f64,
    pub m_h: f64,
    /// `(H(c) − H(v))/(H(c) − M(h*))` when the denominator exceeds `ε_den`.
    pub kappa_best: Option<f64>,
    pub undefined_reason: Option<String>,
    pub numerator: f64,
    pub denominator: f64,
    /// Distances from `c` to the projection `h*`.
    pub delta_w12: f64,
    pub delta_linf: f64,
    pub projection: HalfSpaceSolution,
    /// Continuous `M(c)` on the polar rule.
    pub m_cone: f64,
}

/// Contraction constant of the competitor for one cone.
pub fn kappa_estimate<P: Potential>(trace: &ConeTrace, potential: &P, s: f64, opts: &EpiOptions) -> Result<EpiResult> {
    let (n, m) = (trace.dim(), trace.components());
    let f0 = potential.f0();
    let (v, cone) = competitor(trace, potential, s, opts)?;
    let fs = RescaledNonlinearity::new(potential, s)?;
    let c_mass = sphere_mass(n, |w| trace.extension(w).0);
    let h_c = discrete_h(&cone, &fs, c_mass)?;
    let h_v = discrete_h(&v, &fs, c_mass)?;
    let polar = cone_from_trace(trace, standard_rule(n)?);
    let projection = if trace.delta == 0.0 {
        trace.base.clone()
    } else {
        project_to_halfspace(&polar, f0)?.half_space()?
    };
    let linear = Nonlinearity::linear(f0)?;
    let (grid, mask) = ball_grid(n, opts.spacing)?;
    let hfield = sample_on(&grid, &mask, m, |x| projection.eval(x))?;
    let m_h = discrete_h(&hfield, &linear, sphere_mass(n, |w| projection.eval(w)))?;
    let (delta_w12, delta_linf) =
        sphere_distances(n, |w| trace.extension(w), |w| (projection.eval(w), projection.gradient(w)));
    let numerator = h_c - h_v;
    let denominator = h_c - m_h;
    let (kappa_best, undefined_reason) = if denominator > opts.eps_den {
        (Some(numerator / denominator), None)
    } else {
        (None, Some(format!("H(c) − M(h*) = {denominator:.3e} is not above {:.1e}", opts.eps_den)))
    };
    Ok(EpiResult {
        s,
        h_c,
        h_v,
        m_h,
        kappa_best,
        undefined_reason,
        numerator,
        denominator,
        delta_w12,
        delta_linf,
        projection,
        m_cone: functional_m(&polar, f0),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub delta: f64,
    pub s: f64,
    pub seed: u64,
    pub result: Option<EpiResult>,
    pub error: Option<String>,
    /// `H(v) > H(c)`.
    pub not_contracting: bool,
    /// `M(c) < α_n/2 − tol`.
    pub below_floor: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    pub min_kappa: Option<f64>,
    pub argmin: Option<usize>,
    pub min_m_cone: Option<f64>,
    pub alpha_half: f64,
}

impl ScanTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta,s,seed,H_c,H_v,M_h,kappa_best,flags\n");
        for row in &self.rows {
            let mut flags = vec![];
            if row.error.is_some() {
                flags.push("error");
            }
            if row.not_contracting {
                flags.push("not-contracting");
            }
            if row.below_floor {
                flags.push("below-floor");
            }
            let (hc, hv, mh, k) = match &row.result {
                Some(r) => (
                    r.h_c.to_string(),
                    r.h_v.to_string(),
                    r.m_h.to_string(),
                    r.kappa_best.map(|k| k.to_string()).unwrap_or_else(|| "undefined".into()),
                ),
                None => (String::new(), String::new(), String::new(), String::new()),
            };
            out.push_str(&format!("{},{},{},{hc},{hv},{mh},{k},{}\n", row.delta, row.s, row.seed, flags.join("|")));
        }
        out
    }
}

/// Scan parameters: every `(δ, s, seed)` combination around one half-space.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSpec {
    pub deltas: Vec<f64>,
    pub s_values: Vec<f64>,
    pub degree: usize,
    pub seeds: Vec<u64>,
    /// Tolerance on the `M(c) ≥ α_n/2` floor.
    pub floor_tol: f64,
}

impl Default for ScanSpec {
    fn default() -> Self {
        Self {
            deltas: vec![0.01, 0.05],
            s_values: vec![1e-3, 1e-2],
            degree: 3,
            seeds: vec![1, 2, 3, 4, 5],
            floor_tol: 1e-3,
        }
    }
}

pub fn batch_scan<P: Potential>(base: &HalfSpaceSolution, potential: &P, spec: &ScanSpec, opts: &EpiOptions) -> ScanTable {
    let mut params = vec![];
    for &delta in &spec.deltas {
        for &s in &spec.s_values {
            for &seed in &spec.seeds {
                params.push((delta, s, seed));
            }
        }
    }
    let alpha_half = alpha_n(base.dim(), potential.f0()) / 2.0;
    let rows: Vec<ScanRow> = params
        .par_iter()
        .map(|&(delta, s, seed)| {
            let run = sample_cone_near_halfspace(base, delta, spec.degree, seed)
                .and_then(|c| kappa_estimate(&c, potential, s, opts));
            match run {
                Ok(r) => ScanRow {
                    delta,
                    s,
                    seed,
                    not_contracting: r.h_v > r.h_c,
                    below_floor: r.m_cone < alpha_half - spec.floor_tol,
                    result: Some(r),
                    error: None,
                },
                Err(e) => ScanRow {
                    delta,
                    s,
                    seed,
                    result: None,
                    error: Some(e.to_string()),
                    not_contracting: false,
                    below_floor: false,
                },
            }
        })
        .collect();
    let mut min_kappa: Option<f64> = None;
    let mut argmin = None;
    let mut min_m_cone: Option<f64> = None;
    for (i, row) in rows.iter().enumerate() {
        if let Some(r) = &row.result {
            if let Some(k) = r.kappa_best {
                if min_kappa.is_none_or(|b| k < b) {
                    min_kappa = Some(k);
                    argmin = Some(i);
                }
            }
            min_m_cone = Some(min_m_cone.map_or(r.m_cone, |b| b.min(r.m_cone)));
        }
    }
    ScanTable { rows, min_kappa, argmin, min_m_cone, alpha_half }
}

/// `(H(c) − H(v))/(H(c) − M(h))` from the three energies.
pub fn contraction_ratio(h_c: f64, h_v: f64, m_h: f64, eps_den: f64) -> Option<f64> {
    let den = h_c - m_h;
    (den > eps_den).then(|| (h_c - h_v) / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base2() -> HalfSpaceSolution {
        HalfSpaceSolution::axis(2, 1, 2, 1.0)
    }

    #[test]
    fn half_space_trace_extends_to_half_space() {
        let hs = HalfSpaceSolution::new(&[0.6, 0.8], &[1.0, 0.0], 1.0).unwrap();
        let t = ConeTrace::half_space(&hs);
        let f = cone_from_trace(&t, standard_rule(2).unwrap());
        let exact = UnitBallField::from_half_space(standard_rule(2).unwrap(), &hs);
        assert_eq!(f.values, exact.values);
        let zero = sample_cone_near_halfspace(&hs, 0.0, 3, 7).unwrap();
        assert_eq!(zero.coefficients, vec![0.0; 2]);
    }

    #[test]
    fn extension_is_two_homogeneous_with_consistent_jacobian() {
        let t = sample_cone_near_halfspace(&base2(), 0.3, 3, 11).unwrap();
        let x = [0.3, -0.2];
        let (v, j) = t.extension(&x);
        let (v2, _) = t.extension(&[0.6, -0.4]);
        for q in 0..2 {
            assert!((v2[q] - 4.0 * v[q]).abs() < 1e-12);
        }
        let eps = 1e-6;
        for a in 0..2 {
            let mut xp = x;
            xp[a] += eps;
            let mut xm = x;
            xm[a] -= eps;
            let (vp, _) = t.extension(&xp);
            let (vm, _) = t.extension(&xm);
            for q in 0..2 {
                let fd = (vp[q] - vm[q]) / (2.0 * eps);
                assert!((fd - j[q * 2 + a]).abs() < 1e-7, "q={q} a={a}");
            }
        }
    }

    #[test]
    fn monomial_jacobian_in_three_dimensions() {
        let hs = HalfSpaceSolution::axis(3, 2, 1, 1.0);
        let t = sample_cone_near_halfspace(&hs, 0.2, 3, 5).unwrap();
        let x = [0.2, 0.1, -0.3];
        let (_, j) = t.extension(&x);
        let eps = 1e-6;
        for a in 0..3 {
            let mut xp = x;
            xp[a] += eps;
            let mut xm = x;
            xm[a] -= eps;
            let fd = (t.extension(&xp).0[0] - t.extension(&xm).0[0]) / (2.0 * eps);
            assert!((fd - j[a]).abs() < 1e-7);
        }
        assert!((t.w12_distance - 0.2).abs() < 1e-12);
    }

    #[test]
    fn sampled_norms_hit_the_target() {
        let a = sample_cone_near_halfspace(&base2(), 0.05, 3, 1).unwrap();
        let b = sample_cone_near_halfspace(&base2(), 0.05, 3, 2).unwrap();
        assert!((a.w12_distance - 0.05).abs() < 1e-12 && (b.w12_distance - 0.05).abs() < 1e-12);
        assert_ne!(a.coefficients, b.coefficients);
        let again = sample_cone_near_halfspace(&base2(), 0.05, 3, 1).unwrap();
        assert_eq!(a.coefficients, again.coefficients);
    }

    #[test]
    fn cos_squared_trace_spot_values() {
        let hs = HalfSpaceSolution::axis(2, 0, 1, 1.0);
        // cos²θ = (1 + cos 2θ)/2 on the unit circle
        let t = ConeTrace {
            base: hs,
            delta: 1.0,
            degree: 2,
            coefficients: vec![0.5, 0.0, 0.0, 0.5, 0.0],
            w12_distance: 0.0,
            linf_distance: 0.0,
        };
        for (x, y) in [(0.5, 0.0), (-0.3, 0.4), (0.0, -0.7)] {
            let v = t.extension(&[x, y]).0[0];
            let expected = x * x + 0.5 * f64::max(x, 0.0).powi(2);
            assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
        }
    }

    #[test]
    fn half_space_cone_has_no_contraction() {
        let nl = Nonlinearity::linear(1.0).unwrap();
        let t = ConeTrace::half_space(&base2());
        let r = kappa_estimate(&t, &nl, 1e-2, &EpiOptions::default()).unwrap();
        assert!(r.kappa_best.is_none(), "{r:?}");
        assert!((r.h_c - r.h_v).abs() < 1e-9);
        assert!((r.h_c - r.m_h).abs() < 1e-12);
    }

    #[test]
    fn perturbed_cone_contracts() {
        let nl = Nonlinearity::linear(1.0).unwrap();
        let t = sample_cone_near_halfspace(&base2(), 0.05, 3, 3).unwrap();
        let r = kappa_estimate(&t, &nl, 1e-2, &EpiOptions::default()).unwrap();
        assert!(r.h_v < r.h_c);
        assert!(r.kappa_best.unwrap() > 0.0, "{r:?}");
    }

    #[test]
    fn zero_trace_gives_zero_competitor() {
        let nl = Nonlinearity::linear(1.0).unwrap();
        let t = ConeTrace::half_space(&HalfSpaceSolution { f0: 0.0, ..base2() });
        let (v, _) = competitor(&t, &nl, 1e-2, &EpiOptions::default()).unwrap();
        assert!(v.values().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn ratio_arithmetic() {
        let ratio = contraction_ratio(1.0, 0.6, 0.2, 1e-8).unwrap();
        assert!((ratio - 0.5).abs() < 1e-15);
        assert!(contraction_ratio(1.0, 1.0, 1.0, 1e-8).is_none());
    }

    #[test]
    fn linear_h_is_independent_of_s() {
        let nl = Nonlinearity::linear(1.0).unwrap();
        let t = sample_cone_near_halfspace(&base2(), 0.05, 3, 9).unwrap();
        let (_, cone) = competitor(&t, &nl, 0.5, &EpiOptions::default()).unwrap();
        let mass = sphere_mass(2, |w| t.extension(w).0);
        let a = discrete_h(&cone, &RescaledNonlinearity::new(&nl, 1e-3).unwrap(), mass).unwrap();
        let b = discrete_h(&cone, &RescaledNonlinearity::new(&nl, 1.0).unwrap(), mass).unwrap();
        assert!((a - b).abs() < 1e-10);
        let sat = Nonlinearity::exp_saturating(1.0, 2.0).unwrap();
        let lo = discrete_h(&cone, &RescaledNonlinearity::new(&sat, 0.1).unwrap(), mass).unwrap();
        let hi = discrete_h(&cone, &RescaledNonlinearity::new(&sat, 0.5).unwrap(), mass).unwrap();
        assert!(lo <= hi);
    }
}
