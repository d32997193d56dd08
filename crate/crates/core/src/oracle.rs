//! Reference solutions: closed-form 1-D and radial solutions for constant
//! `f`, and refined reference solves for general nonlinearities.

use serde::Serialize;

use crate::energy::prox_in_place;
use crate::error::{Error, Result};
use crate::model::{Grid, Potential, VectorField};
use crate::solver::{minimize, zero_interior, SolveOptions, SolveStats};

/// Minimiser of `∫ u′² + 2λ|u|` on `[a, b]` with `u(a) = p`, `u(b) = q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contact1D {
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub q: f64,
    /// Contact interval `[x1, x2]`; meaningless when `contact` is false.
    pub x1: f64,
    pub x2: f64,
    /// False when the data are too large for a contact set: the solution is
    /// then the positive parabola `u″ = λ` through the boundary values.
    pub contact: bool,
}

impl Contact1D {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        vec![self.value(x[0])]
    }

    pub fn value(&self, x: f64) -> f64 {
        let l = self.lambda;
        if self.contact {
            0.5 * l * ((self.x1 - x).max(0.0).powi(2) + (x - self.x2).max(0.0).powi(2))
        } else {
            let len = self.b - self.a;
            self.p + (self.q - self.p) * (x - self.a) / len + 0.5 * l * (x - self.a) * (x - self.b)
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let l = self.lambda;
        if self.contact {
            -l * (self.x1 - x).max(0.0) + l * (x - self.x2).max(0.0)
        } else {
            let len = self.b - self.a;
            (self.q - self.p) / len + 0.5 * l * (2.0 * x - self.a - self.b)
        }
    }

    /// `u″` away from the contact endpoints.
    pub fn second_derivative(&self, x: f64) -> f64 {
        if !self.contact || x < self.x1 || x > self.x2 {
            self.lambda
        } else {
            0.0
        }
    }
}

/// Closed-form 1-D solution with constant `f ≡ λ`.
pub fn exact_linear_1d(lambda: f64, a: f64, b: f64, p: f64, q: f64) -> Result<Contact1D> {
    if !(p >= 0.0 && q >= 0.0) {
        return Err(Error::Input(format!("boundary data must be nonnegative, got p={p}, q={q}")));
    }
    if !(lambda > 0.0 && b > a) {
        return Err(Error::Input("need λ > 0 and a < b".into()));
    }
    let x1 = a + (2.0 * p / lambda).sqrt();
    let x2 = b - (2.0 * q / lambda).sqrt();
    Ok(Contact1D { lambda, a, b, p, q, x1, x2, contact: x1 <= x2 })
}

/// A densely sampled reference profile.
#[derive(Debug, Clone, Serialize)]
pub struct ReferenceProfile {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub spacing: f64,
    pub stats: SolveStats,
}

impl ReferenceProfile {
    /// Piecewise-linear evaluation, clamped to the sampled range.
    pub fn value(&self, x: f64) -> f64 {
        let t = ((x - self.x[0]) / self.spacing).clamp(0.0, (self.x.len() - 1) as f64);
        let i = (t.floor() as usize).min(self.x.len() - 2);
        let f = t - i as f64;
        (1.0 - f) * self.u[i] + f * self.u[i + 1]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,u\n");
        for (x, u) in self.x.iter().zip(&self.u) {
            out.push_str(&format!("{x},{u}\n"));
        }
        out
    }
}

/// Solve the 1-D problem on `[a, b]` at spacing `h/refinement` with the
/// production scheme and tolerances tightened 100×.
#[allow(clippy::too_many_arguments)]
pub fn reference_solve_1d<P: Potential>(
    potential: &P,
    a: f64,
    b: f64,
    p: f64,
    q: f64,
    h: f64,
    refinement: usize,
    opts: &SolveOptions,
) -> Result<ReferenceProfile> {
    if refinement < 4 {
        return Err(Error::Input(format!("refinement must be at least 4, got {refinement}")));
    }
    if !(b > a && h > 0.0) {
        return Err(Error::Input("need a < b and h > 0".into()));
    }
    let h_ref = h / refinement as f64;
    let cells = ((b - a) / h_ref).round() as usize;
    if ((b - a) - cells as f64 * h_ref).abs() > 1e-9 * (b - a) {
        return Err(Error::Input("interval length must be a multiple of the reference spacing".into()));
    }
    let grid = Grid::new(vec![cells + 1], vec![a], h_ref)?;
    let data = VectorField::from_fn(grid.clone(), 1, |x| {
        vec![if (x[0] - a).abs() < 0.5 * h_ref { p } else if (x[0] - b).abs() < 0.5 * h_ref { q } else { 0.0 }]
    });
    let (u, stats) = minimize(&zero_interior(&data), potential, &opts.tightened(100.0))?;
    Ok(ReferenceProfile {
        x: (0..grid.len()).map(|i| grid.coords(i)[0]).collect(),
        u: u.values().to_vec(),
        spacing: h_ref,
        stats,
    })
}

/// Closed-form radial solution `U(|x|)` of `ΔU = λ` outside a contact ball
/// `B_{R0}`, on `B_R` with `U(R) = b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialExact {
    pub lambda: f64,
    pub n: usize,
    pub radius: f64,
    pub boundary: f64,
    /// Zero when the data are large enough that `U > 0` everywhere.
    pub contact_radius: f64,
    /// `U(0)` when there is no contact set.
    pub center_value: f64,
}

fn radial_shape(n: usize, r: f64, r0: f64) -> f64 {
    if r <= r0 {
        return 0.0;
    }
    match n {
        1 => 0.5 * (r - r0).powi(2),
        2 => 0.25 * (r * r - r0 * r0) - 0.5 * r0 * r0 * (r / r0).ln(),
        _ => {
            let nf = n as f64;
            r * r / (2.0 * nf) + r0.powi(n as i32) / (nf * (nf - 2.0) * r.powi(n as i32 - 2))
                - r0 * r0 / (2.0 * (nf - 2.0))
        }
    }
}

fn radial_shape_derivative(n: usize, r: f64, r0: f64) -> f64 {
    if r <= r0 {
        return 0.0;
    }
    // U′ = (r/n)(1 − (r0/r)^n)
    r / n as f64 * (1.0 - (r0 / r).powi(n as i32))
}

impl RadialExact {
    pub fn value(&self, r: f64) -> f64 {
        if self.contact_radius > 0.0 {
            self.lambda * radial_shape(self.n, r, self.contact_radius)
        } else {
            self.center_value + self.lambda * r * r / (2.0 * self.n as f64)
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        if self.contact_radius > 0.0 {
            self.lambda * radial_shape_derivative(self.n, r, self.contact_radius)
        } else {
            self.lambda * r / self.n as f64
        }
    }
}

/// Radial solution with constant `f ≡ λ`; the contact radius solves
/// `U(R) = b` by bisection.
pub fn exact_radial_linear(lambda: f64, n: usize, radius: f64, boundary: f64) -> Result<RadialExact> {
    if !(lambda > 0.0 && radius > 0.0 && boundary >= 0.0) || n == 0 {
        return Err(Error::Input("need λ > 0, R > 0, b ≥ 0 and n ≥ 1".into()));
    }
    let free = lambda * radius * radius / (2.0 * n as f64);
    if boundary >= free {
        return Ok(RadialExact {
            lambda,
            n,
            radius,
            boundary,
            contact_radius: 0.0,
            center_value: boundary - free,
        });
    }
    let (mut lo, mut hi) = (0.0, radius);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = if mid == 0.0 { free } else { lambda * radial_shape(n, radius, mid) };
        if v > boundary {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RadialExact {
        lambda,
        n,
        radius,
        boundary,
        contact_radius: 0.5 * (lo + hi),
        center_value: 0.0,
    })
}

/// Radial reference profile `u(x) = U(|x|)·e`.
#[derive(Debug, Clone, Serialize)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub e: Vec<f64>,
    pub spacing: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl RadialProfile {
    pub fn magnitude(&self, r: f64) -> f64 {
        let t = (r / self.spacing).clamp(0.0, (self.r.len() - 1) as f64);
        let i = (t.floor() as usize).min(self.r.len() - 2);
        let f = t - i as f64;
        (1.0 - f) * self.u[i] + f * self.u[i + 1]
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let s = self.magnitude(r);
        self.e.iter().map(|c| s * c).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,U\n");
        for (r, u) in self.r.iter().zip(&self.u) {
            out.push_str(&format!("{r},{u}\n"));
        }
        out
    }
}

/// Radially symmetric minimiser on `B_R ⊂ ℝⁿ` with `|u| = b` on `∂B_R`,
/// from a weighted 1-D forward-backward solve in `r` (weight `r^{n−1}`,
/// diagonal metric) with `cells` intervals.
pub fn reference_radial<P: Potential>(
    potential: &P,
    n: usize,
    radius: f64,
    boundary: f64,
    e: &[f64],
    cells: usize,
) -> Result<RadialProfile> {
    if !(boundary >= 0.0) {
        return Err(Error::Input(format!("boundary magnitude must be nonnegative, got {boundary}")));
    }
    if !(radius > 0.0) || n == 0 || cells < 8 {
        return Err(Error::Input("need R > 0, n ≥ 1 and at least 8 cells".into()));
    }
    let ne = e.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(ne > 0.0) {
        return Err(Error::Input("direction e must be nonzero".into()));
    }
    let e: Vec<f64> = e.iter().map(|v| v / ne).collect();
    let d = radius / cells as f64;
    let k = n as i32 - 1;
    let r: Vec<f64> = (0..=cells).map(|i| i as f64 * d).collect();
    // edge weights r_{i+1/2}^{n−1}; node weights ∫ r^{n−1} over the dual cell
    let edge: Vec<f64> = (0..cells).map(|i| ((i as f64 + 0.5) * d).powi(k)).collect();
    let node: Vec<f64> = (0..=cells)
        .map(|i| {
            let lo = ((i as f64 - 0.5) * d).max(0.0);
            let hi = ((i as f64 + 0.5) * d).min(radius);
            (hi.powi(n as i32) - lo.powi(n as i32)) / n as f64
        })
        .collect();
    let metric: Vec<f64> = (0..cells)
        .map(|i| {
            let left = if i > 0 { edge[i - 1] } else { 0.0 };
            4.0 * (left + edge[i]) / d
        })
        .collect();
    let grad = |u: &[f64], g: &mut [f64]| {
        for i in 0..cells {
            let left = if i > 0 { edge[i - 1] * (u[i] - u[i - 1]) } else { 0.0 };
            g[i] = 2.0 * (left - edge[i] * (u[i + 1] - u[i])) / d;
        }
    };
    let step = |from: &[f64], g: &mut [f64], out: &mut [f64]| -> Result<()> {
        grad(from, g);
        for i in 0..cells {
            let mut w = [from[i] - g[i] / metric[i]];
            prox_in_place(&mut w, node[i] / metric[i], potential)?;
            out[i] = w[0];
        }
        out[cells] = boundary;
        Ok(())
    };

    let mut x = vec![0.0; cells + 1];
    x[cells] = boundary;
    let mut prev = x.clone();
    let mut y = x.clone();
    let mut next = x.clone();
    let mut g = vec![0.0; cells + 1];
    let mut t = 1.0f64;
    let tol = 1e-8 * d * d * boundary.max(1.0);
    let max_iters = 400 * cells + 10_000;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iters {
        iterations = it;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        for i in 0..=cells {
            y[i] = x[i] + beta * (x[i] - prev[i]);
        }
        step(&y, &mut g, &mut next)?;
        // gradient-based restart: energy comparisons are at round-off here
        let uphill: f64 = (0..=cells).map(|i| (y[i] - next[i]) * (next[i] - x[i])).sum();
        if uphill > 0.0 {
            step(&x, &mut g, &mut next)?;
            t = 1.0;
        } else {
            t = t_next;
        }
        let fp = next.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        std::mem::swap(&mut prev, &mut x);
        std::mem::swap(&mut x, &mut next);
        if fp <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric(format!("radial reference did not converge in {iterations} iterations")));
    }
    Ok(RadialProfile { r, u: x.iter().map(|v| v.abs()).collect(), e, spacing: d, iterations, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Nonlinearity;

    #[test]
    fn one_dimensional_examples() {
        let c = exact_linear_1d(1.0, 0.0, 1.0, 0.125, 0.0).unwrap();
        assert!(c.contact && (c.x1 - 0.5).abs() < 1e-15 && c.x2 == 1.0);
        for x in [0.0, 0.2, 0.5, 0.8, 1.0] {
            assert!((c.value(x) - (0.5 - x).max(0.0).powi(2) / 2.0).abs() < 1e-15);
        }
        let z = exact_linear_1d(1.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        assert!(z.contact && z.x1 == 0.0 && z.x2 == 1.0 && z.value(0.3) == 0.0);
        let g = exact_linear_1d(2.0, 0.0, 1.0, 0.25, 0.25).unwrap();
        assert!((g.x1 - 0.5).abs() < 1e-15 && (g.x2 - 0.5).abs() < 1e-15 && g.contact);
        assert!(exact_linear_1d(1.0, 0.0, 1.0, -0.1, 0.0).is_err());
        let big = exact_linear_1d(1.0, 0.0, 1.0, 1.0, 1.0).unwrap();
        assert!(!big.contact);
        assert!((big.value(0.0) - 1.0).abs() < 1e-15 && (big.value(1.0) - 1.0).abs() < 1e-15);
        assert!(big.value(0.5) > 0.0);
    }

    #[test]
    fn closed_form_satisfies_the_equation() {
        let c = exact_linear_1d(1.7, -0.3, 1.1, 0.2, 0.05).unwrap();
        let eps = 1e-4;
        for i in 1..200 {
            let x = -0.3 + 1.4 * i as f64 / 200.0;
            if (x - c.x1).abs() < 2.0 * eps || (x - c.x2).abs() < 2.0 * eps {
                continue;
            }
            let d2 = (c.value(x + eps) - 2.0 * c.value(x) + c.value(x - eps)) / (eps * eps);
            assert!((d2 - c.second_derivative(x)).abs() < 1e-5);
            let d1 = (c.value(x + eps) - c.value(x - eps)) / (2.0 * eps);
            assert!((d1 - c.derivative(x)).abs() < 1e-6);
        }
        for x in [c.x1, c.x2] {
            assert!(c.value(x).abs() < 1e-15 && c.derivative(x).abs() < 1e-15);
        }
    }

    #[test]
    fn refined_reference_matches_closed_form() {
        let nl = Nonlinearity::linear(1.0).unwrap();
        let c = exact_linear_1d(1.0, 0.0, 1.0, 0.125, 0.0).unwrap();
        let prof = reference_solve_1d(&nl, 0.0, 1.0, 0.125, 0.0, 1.0 / 32.0, 4, &SolveOptions::default()).unwrap();
        let worst = prof.x.iter().zip(&prof.u).fold(0.0f64, |m, (x, u)| m.max((u - c.value(*x)).abs()));
        assert!(worst <= 10.0 * prof.spacing.powi(2), "{worst}");
        let zero = reference_solve_1d(&nl, 0.0, 1.0, 0.0, 0.0, 1.0 / 16.0, 4, &SolveOptions::default()).unwrap();
        assert!(zero.u.iter().all(|&v| v == 0.0));
        assert!(reference_solve_1d(&nl, 0.0, 1.0, 0.1, 0.0, 1.0 / 16.0, 2, &SolveOptions::default()).is_err());
    }

    #[test]
    fn nonlinear_reference_is_reproducible() {
        let nl = Nonlinearity::exp_saturating(1.0, 2.0).unwrap();
        let opts = SolveOptions::default();
        let a = reference_solve_1d(&nl, 0.0, 1.0, 0.2, 0.0, 1.0 / 16.0, 4, &opts).unwrap();
        let b = reference_solve_1d(&nl, 0.0, 1.0, 0.2, 0.0, 1.0 / 16.0, 4, &opts).unwrap();
        assert_eq!(a.u, b.u);
        assert!(a.u.contains(&0.0));
    }

    #[test]
    fn radial_closed_forms_solve_the_radial_equation() {
        for n in 1..=3 {
            let ex = exact_radial_linear(1.3, n, 1.0, 0.05).unwrap();
            assert!(ex.contact_radius > 0.0);
            assert!((ex.value(1.0) - 0.05).abs() < 1e-12);
            let eps = 1e-4;
            for i in 1..40 {
                let r = ex.contact_radius + (1.0 - ex.contact_radius) * i as f64 / 40.0;
                let d2 = (ex.value(r + eps) - 2.0 * ex.value(r) + ex.value(r - eps)) / (eps * eps);
                let d1 = (ex.value(r + eps) - ex.value(r - eps)) / (2.0 * eps);
                assert!((d2 + (n as f64 - 1.0) * d1 / r - 1.3).abs() < 1e-5, "n={n} r={r}");
                assert!((d1 - ex.derivative(r)).abs() < 1e-7);
            }
        }
        let free = exact_radial_linear(1.0, 2, 1.0, 1.0).unwrap();
        assert_eq!(free.contact_radius, 0.0);
        assert!((free.value(0.5) - (1.0 + (0.25 - 1.0) / 4.0)).abs() < 1e-15);
    }

    #[test]
    fn radial_reference_matches_closed_forms() {
        let nl = Nonlinearity::linear(1.0).unwrap();
        let zero = reference_radial(&nl, 2, 1.0, 0.0, &[1.0], 64).unwrap();
        assert!(zero.u.iter().all(|&v| v == 0.0));
        for (n, b) in [(2, 1.0), (2, 0.05), (3, 0.04)] {
            let ex = exact_radial_linear(1.0, n, 1.0, b).unwrap();
            let prof = reference_radial(&nl, n, 1.0, b, &[1.0, 0.0], 512).unwrap();
            let worst = prof.r.iter().zip(&prof.u).fold(0.0f64, |m, (r, u)| m.max((u - ex.value(*r)).abs()));
            assert!(worst < 10.0 * prof.spacing.powi(2), "n={n} b={b}: {worst}");
            if b < 0.1 {
                assert!(prof.u[0] == 0.0);
            }
        }
    }
}
