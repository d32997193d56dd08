//! Point evaluation of grid fields (multilinear values, interpolated
//! centered-difference gradients) and deterministic ball/sphere quadrature.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Grid, HalfSpaceSolution, VectorField};

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; count];
    let mut weights = vec![0.0; count];
    let nf = count as f64;
    for i in 0..count.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(count, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(count, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[count - 1 - i] = x;
        weights[i] = w;
        weights[count - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Multilinear interpolation cell: base node and fractional offsets.
fn locate(grid: &Grid, x: &[f64]) -> Result<([usize; 3], [f64; 3])> {
    let h = grid.spacing();
    let mut base = [0usize; 3];
    let mut frac = [0.0f64; 3];
    for a in 0..grid.dim() {
        let t = (x[a] - grid.origin()[a]) / h;
        let cells = (grid.dims()[a] - 1) as f64;
        if !(t >= -1e-9 && t <= cells + 1e-9) {
            return Err(Error::Domain(format!(
                "point {x:?} lies outside the grid hull along axis {a}"
            )));
        }
        let t = t.clamp(0.0, cells);
        let i = (t.floor() as usize).min(grid.dims()[a] - 2);
        base[a] = i;
        frac[a] = t - i as f64;
    }
    Ok((base, frac))
}

/// Visit the corners of the cell containing `x` with their multilinear weights.
fn for_each_corner(grid: &Grid, x: &[f64], mut visit: impl FnMut(usize, f64)) -> Result<()> {
    let n = grid.dim();
    let (base, frac) = locate(grid, x)?;
    let st = grid.strides();
    for corner in 0..(1usize << n) {
        let mut w = 1.0;
        let mut idx = 0;
        for a in 0..n {
            let bit = (corner >> a) & 1;
            w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            idx += (base[a] + bit) * st[a];
        }
        if w != 0.0 {
            visit(idx, w);
        }
    }
    Ok(())
}

/// Derivative along one grid line from the samples at offsets `−3..=3`
/// (samples beyond the hull are `None`).
///
/// Centered differences, except where the centered stencil straddles a jump
/// of the second derivative (the free-boundary kink of a `C^{1,1}` field) and
/// neither neighbouring stencil agrees with it: there the second-order
/// one-sided stencil on the smooth side is used.
fn line_derivative(v: [Option<f64>; 7], h: f64) -> f64 {
    let u0 = v[3].expect("center sample");
    let backward = || Some((3.0 * u0 - 4.0 * v[2]? + v[1]?) / (2.0 * h));
    let forward = || Some((-3.0 * u0 + 4.0 * v[4]? - v[5]?) / (2.0 * h));
    let (um, up) = match (v[2], v[4]) {
        (Some(um), Some(up)) => (um, up),
        (None, _) => return forward().expect("grid has at least 3 nodes per axis"),
        (_, None) => return backward().expect("grid has at least 3 nodes per axis"),
    };
    let centered = (up - um) / (2.0 * h);
    let second = |k: usize| Some(v[k - 1]? - 2.0 * v[k]? + v[k + 1]?);
    let k0 = up - 2.0 * u0 + um;
    let (km, kp) = (second(2), second(4));
    let (kmm, kpp) = (second(1), second(5));
    let scale = [Some(k0), km, kp, kmm, kpp].iter().flatten().fold(0.0f64, |s, k| s.max(k.abs()));
    let tol = 0.1 * scale + 1e-14 * (u0.abs() + um.abs() + up.abs());
    let close = |a: Option<f64>, b: Option<f64>| matches!((a, b), (Some(a), Some(b)) if (a - b).abs() <= tol);
    if close(km, Some(k0)) || close(kp, Some(k0)) {
        return centered;
    }
    let smooth_back = close(kmm, km);
    let smooth_front = close(kpp, kp);
    match (smooth_back, smooth_front) {
        (true, false) => backward().unwrap_or(centered),
        (false, true) => forward().unwrap_or(centered),
        (true, true) => match (backward(), forward()) {
            (Some(b), Some(f)) => 0.5 * (b + f),
            _ => centered,
        },
        (false, false) => centered,
    }
}

/// Point sampler with nodal gradients precomputed once (see
/// [`line_derivative`]), second-order one-sided on the hull.
pub struct Sampler<'a> {
    u: &'a VectorField,
    grads: Vec<f64>,
}

impl<'a> Sampler<'a> {
    pub fn new(u: &'a VectorField) -> Self {
        let grid = u.grid();
        let (n, m) = (grid.dim(), u.components());
        let h = grid.spacing();
        let st = grid.strides();
        let dims = grid.dims();
        let mut grads = vec![0.0; grid.len() * m * n];
        grads.par_chunks_mut(m * n).enumerate().for_each(|(i, out)| {
            let mi = grid.multi_index(i);
            for a in 0..n {
                let s = st[a] as isize;
                let pos = mi[a] as isize;
                for q in 0..m {
                    let mut v = [None; 7];
                    for (k, slot) in v.iter_mut().enumerate() {
                        let off = k as isize - 3;
                        let p = pos + off;
                        if p >= 0 && p < dims[a] as isize {
                            *slot = Some(u.node((i as isize + off * s) as usize)[q]);
                        }
                    }
                    out[q * n + a] = line_derivative(v, h);
                }
            }
        });
        Self { u, grads }
    }

    pub fn field(&self) -> &VectorField {
        self.u
    }

    /// Multilinear value plus half the multilinear blend of the corner
    /// Taylor corrections `∇u_c·(x − x_c)`. With exact nodal gradients this
    /// reproduces every quadratic, so quadrature on the interpolant of a
    /// 2-homogeneous field is accurate well below the `h²/8` multilinear error.
    pub fn value_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let grid = self.u.grid();
        let (n, m) = (grid.dim(), self.u.components());
        let vals = self.u.values();
        let h = grid.spacing();
        let (base, frac) = locate(grid, x)?;
        let st = grid.strides();
        out[..m].fill(0.0);
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = 0;
            let mut offset = [0.0f64; 3];
            for a in 0..n {
                let bit = (corner >> a) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                idx += (base[a] + bit) * st[a];
                offset[a] = (frac[a] - bit as f64) * h;
            }
            if w == 0.0 {
                continue;
            }
            for q in 0..m {
                let mut v = vals[idx * m + q];
                if !self.grads.is_empty() {
                    let g = &self.grads[(idx * m + q) * n..(idx * m + q + 1) * n];
                    v += 0.5 * (0..n).map(|a| g[a] * offset[a]).sum::<f64>();
                }
                out[q] += w * v;
            }
        }
        Ok(())
    }

    /// Interpolated Jacobian, row-major `m × n`. Valid anywhere in the hull.
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let width = self.u.components() * self.u.grid().dim();
        let grads = &self.grads;
        out[..width].fill(0.0);
        for_each_corner(self.u.grid(), x, |idx, w| {
            let src = &grads[idx * width..(idx + 1) * width];
            for k in 0..width {
                out[k] += w * src[k];
            }
        })
    }

    pub fn nodal_gradient(&self, idx: usize) -> &[f64] {
        let width = self.u.components() * self.u.grid().dim();
        &self.grads[idx * width..(idx + 1) * width]
    }

    pub fn value(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.u.components()];
        self.value_into(x, &mut out)?;
        Ok(out)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.u.components() * self.u.grid().dim()];
        self.gradient_into(x, &mut out)?;
        Ok(out)
    }
}

/// Multilinear interpolation of nodal values.
pub fn interpolate(u: &VectorField, x: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; u.components()];
    Sampler { u, grads: vec![] }.value_into(x, &mut out)?;
    Ok(out)
}

/// Centered-difference nodal gradients, multilinearly interpolated at `x`.
/// `x` must be at least one spacing away from the hull.
pub fn gradient_at(u: &VectorField, x: &[f64]) -> Result<Vec<f64>> {
    let grid = u.grid();
    if grid.hull_distance(x) < grid.spacing() * (1.0 - 1e-9) {
        return Err(Error::Domain(format!(
            "gradient requested within one spacing of the hull at {x:?}"
        )));
    }
    Sampler::new(u).gradient(x)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureOrders {
    pub radial: Option<usize>,
    pub angular: Option<usize>,
}

impl QuadratureOrders {
    pub fn fixed(radial: usize, angular: usize) -> Self {
        Self { radial: Some(radial), angular: Some(angular) }
    }
}

/// Product rule on `B_r(x⁰)` (Gauss–Legendre in the radius, angular rule on
/// the sphere) and the matching rule on `∂B_r(x⁰)`.
///
/// Angular rules: `n = 2` uniform trapezoid on `[0, 2π)`; `n = 3` Gauss in
/// `cos θ` on the two hemispheres times uniform in `φ`; `n = 1` the two
/// endpoints with counting measure.
#[derive(Debug, Clone, PartialEq)]
pub struct BallQuadrature {
    pub n: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    pub radial_count: usize,
    pub angular_count: usize,
    /// Volume nodes, flat `n` per node.
    pub vol_points: Vec<f64>,
    pub vol_weights: Vec<f64>,
    /// Unit directions of the volume nodes and their radial coordinate.
    pub vol_dirs: Vec<f64>,
    pub vol_rho: Vec<f64>,
    pub surf_points: Vec<f64>,
    pub surf_weights: Vec<f64>,
    /// Outward unit normals on the sphere.
    pub surf_normals: Vec<f64>,
}

/// Unit directions and weights of the angular rule.
pub fn sphere_rule(n: usize, angular: usize) -> (Vec<f64>, Vec<f64>) {
    match n {
        1 => (vec![-1.0, 1.0], vec![1.0, 1.0]),
        2 => {
            let dirs = (0..angular)
                .flat_map(|j| {
                    let t = 2.0 * PI * j as f64 / angular as f64;
                    [t.cos(), t.sin()]
                })
                .collect();
            (dirs, vec![2.0 * PI / angular as f64; angular])
        }
        _ => {
            let n_phi = angular.max(4);
            let per_half = (n_phi / 4).max(2);
            let (gx, gw) = gauss_legendre(per_half);
            let mut cos_nodes = vec![];
            let mut cos_weights = vec![];
            for (lo, hi) in [(-1.0, 0.0), (0.0, 1.0)] {
                for (x, w) in gx.iter().zip(&gw) {
                    cos_nodes.push(0.5 * (lo + hi) + 0.5 * (hi - lo) * x);
                    cos_weights.push(0.5 * (hi - lo) * w);
                }
            }
            let mut dirs = vec![];
            let mut weights = vec![];
            for (c, wc) in cos_nodes.iter().zip(&cos_weights) {
                let s = (1.0 - c * c).max(0.0).sqrt();
                for j in 0..n_phi {
                    let p = 2.0 * PI * j as f64 / n_phi as f64;
                    dirs.extend_from_slice(&[s * p.cos(), s * p.sin(), *c]);
                    weights.push(wc * 2.0 * PI / n_phi as f64);
                }
            }
            (dirs, weights)
        }
    }
}

pub fn default_orders(n: usize, r: f64, h: f64) -> (usize, usize) {
    let radial = 32usize.max((4.0 * r / h).ceil() as usize);
    let angular = match n {
        1 => 2,
        2 => 128usize.max((2.0 * PI * r / h).ceil() as usize),
        _ => 64,
    };
    (radial, angular)
}

impl BallQuadrature {
    pub fn new(n: usize, center: &[f64], radius: f64, radial: usize, angular: usize) -> Result<Self> {
        if !(radius > 0.0) || center.len() != n || !(1..=3).contains(&n) {
            return Err(Error::Input("ball quadrature needs r > 0 and a center in R^n".into()));
        }
        if radial == 0 || (n >= 2 && angular < 4) {
            return Err(Error::Input("quadrature orders too small".into()));
        }
        let (gx, gw) = gauss_legendre(radial);
        let (dirs, dw) = sphere_rule(n, angular);
        let angular_count = dw.len();
        let mut q = Self {
            n,
            center: center.to_vec(),
            radius,
            radial_count: radial,
            angular_count,
            vol_points: Vec::with_capacity(radial * angular_count * n),
            vol_weights: Vec::with_capacity(radial * angular_count),
            vol_dirs: Vec::with_capacity(radial * angular_count * n),
            vol_rho: Vec::with_capacity(radial * angular_count),
            surf_points: Vec::with_capacity(angular_count * n),
            surf_weights: Vec::with_capacity(angular_count),
            surf_normals: dirs.clone(),
        };
        for (x, w) in gx.iter().zip(&gw) {
            let rho = 0.5 * radius * (1.0 + x);
            let wr = 0.5 * radius * w * rho.powi(n as i32 - 1);
            for j in 0..angular_count {
                let d = &dirs[j * n..(j + 1) * n];
                for a in 0..n {
                    q.vol_points.push(center[a] + rho * d[a]);
                }
                q.vol_dirs.extend_from_slice(d);
                q.vol_rho.push(rho);
                q.vol_weights.push(wr * dw[j]);
            }
        }
        let area_scale = radius.powi(n as i32 - 1);
        for j in 0..angular_count {
            let d = &dirs[j * n..(j + 1) * n];
            for a in 0..n {
                q.surf_points.push(center[a] + radius * d[a]);
            }
            q.surf_weights.push(area_scale * dw[j]);
        }
        Ok(q)
    }

    /// Polar rule on the unit ball about the origin.
    pub fn unit(n: usize, radial: usize, angular: usize) -> Result<Self> {
        Self::new(n, &vec![0.0; n], 1.0, radial, angular)
    }

    pub fn vol_len(&self) -> usize {
        self.vol_weights.len()
    }

    pub fn surf_len(&self) -> usize {
        self.surf_weights.len()
    }

    pub fn vol_point(&self, k: usize) -> &[f64] {
        &self.vol_points[k * self.n..(k + 1) * self.n]
    }

    pub fn surf_point(&self, k: usize) -> &[f64] {
        &self.surf_points[k * self.n..(k + 1) * self.n]
    }

    pub fn surf_normal(&self, k: usize) -> &[f64] {
        &self.surf_normals[k * self.n..(k + 1) * self.n]
    }

    pub fn integrate_volume(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        (0..self.vol_len()).map(|k| self.vol_weights[k] * f(self.vol_point(k))).sum()
    }

    pub fn integrate_surface(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        (0..self.surf_len()).map(|k| self.surf_weights[k] * f(self.surf_point(k))).sum()
    }
}

/// Quadrature on `B_r(x⁰)` inside `grid`; requires `B_{r+2h}(x⁰)` in the hull.
pub fn ball_quadrature(grid: &Grid, center: &[f64], r: f64, orders: QuadratureOrders) -> Result<BallQuadrature> {
    let h = grid.spacing();
    let margin = grid.hull_distance(center);
    if center.len() != grid.dim() || margin < r + 2.0 * h - 1e-12 {
        return Err(Error::Domain(format!(
            "ball B_{r}({center:?}) needs hull margin {:.6} but only {:.6} is available",
            r + 2.0 * h,
            margin
        )));
    }
    let (dr, da) = default_orders(grid.dim(), r, h);
    let (nr, na) = (orders.radial.unwrap_or(dr), orders.angular.unwrap_or(da));
    if nr < dr || na < da {
        return Err(Error::Input(format!(
            "quadrature orders ({nr}, {na}) below the defaults ({dr}, {da}) for r = {r}, h = {h}"
        )));
    }
    BallQuadrature::new(grid.dim(), center, r, nr, na)
}

/// `|B₁|` in dimension `n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => {
            // Γ-function recursion |B_n| = 2π/n |B_{n−2}|
            2.0 * PI / n as f64 * unit_ball_volume(n - 2)
        }
    }
}

/// `H^{n−1}(∂B₁) = n|B₁|`.
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// Values and Jacobians of a field on the polar unit-ball rule, plus its
/// values on the unit sphere.
#[derive(Debug, Clone)]
pub struct UnitBallField {
    pub quad: BallQuadrature,
    pub m: usize,
    /// `m` per volume node.
    pub values: Vec<f64>,
    /// Row-major `m × n` per volume node.
    pub grads: Vec<f64>,
    /// `m` per sphere node.
    pub surface: Vec<f64>,
}

impl UnitBallField {
    /// Sample `f(y) -> (value, jacobian)` on the rule.
    pub fn from_fn(
        quad: BallQuadrature,
        m: usize,
        mut f: impl FnMut(&[f64]) -> Result<(Vec<f64>, Vec<f64>)>,
    ) -> Result<Self> {
        let n = quad.n;
        let mut values = Vec::with_capacity(quad.vol_len() * m);
        let mut grads = Vec::with_capacity(quad.vol_len() * m * n);
        for k in 0..quad.vol_len() {
            let (v, g) = f(quad.vol_point(k))?;
            values.extend_from_slice(&v[..m]);
            grads.extend_from_slice(&g[..m * n]);
        }
        let mut surface = Vec::with_capacity(quad.surf_len() * m);
        for k in 0..quad.surf_len() {
            let (v, _) = f(quad.surf_point(k))?;
            surface.extend_from_slice(&v[..m]);
        }
        Ok(Self { quad, m, values, grads, surface })
    }

    pub fn from_half_space(quad: BallQuadrature, hs: &HalfSpaceSolution) -> Self {
        let m = hs.components();
        Self::from_fn(quad, m, |y| Ok((hs.eval(y), hs.gradient(y))))
            .expect("half-space sampling is infallible")
    }

    pub fn zeros(quad: BallQuadrature, m: usize) -> Self {
        let n = quad.n;
        Self {
            values: vec![0.0; quad.vol_len() * m],
            grads: vec![0.0; quad.vol_len() * m * n],
            surface: vec![0.0; quad.surf_len() * m],
            quad,
            m,
        }
    }

    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.m..(k + 1) * self.m]
    }

    pub fn grad(&self, k: usize) -> &[f64] {
        let w = self.m * self.quad.n;
        &self.grads[k * w..(k + 1) * w]
    }

    pub fn surface_value(&self, k: usize) -> &[f64] {
        &self.surface[k * self.m..(k + 1) * self.m]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out.grads.iter_mut().for_each(|v| *v *= factor);
        out.surface.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// `∫_{∂B₁} |v − w|` for two fields on the same rule.
    pub fn sphere_l1_distance(&self, other: &UnitBallField) -> f64 {
        (0..self.quad.surf_len())
            .map(|k| {
                let d: f64 = self
                    .surface_value(k)
                    .iter()
                    .zip(other.surface_value(k))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                self.quad.surf_weights[k] * d
            })
            .sum()
    }
}
