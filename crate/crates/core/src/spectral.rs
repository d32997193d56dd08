//! Axisymmetric eigenproblem on a spherical cap for `L = −Δ′ + q`,
//! `q(θ) = 2/cos²θ`, by cell-centered finite volumes and Sturm bisection.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Potential term of the cap operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapPotential {
    /// `q = 2/cos²θ`.
    Singular,
    /// `q ≡ c`.
    Constant(f64),
}

impl CapPotential {
    fn eval(self, theta: f64) -> f64 {
        match self {
            CapPotential::Singular => 2.0 / theta.cos().powi(2),
            CapPotential::Constant(c) => c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapProblem {
    pub n: usize,
    pub theta_cap: f64,
    /// Cells in `θ`.
    pub cells: usize,
    /// Divide by `cos²θ` before discretizing (singular potential only).
    pub ground_state: bool,
    pub potential: CapPotential,
}

impl CapProblem {
    pub fn new(n: usize, theta_cap: f64, cells: usize) -> Self {
        Self { n, theta_cap, cells, ground_state: true, potential: CapPotential::Singular }
    }

    pub fn direct(self) -> Self {
        Self { ground_state: false, ..self }
    }

    pub fn with_potential(self, potential: CapPotential) -> Self {
        Self { potential, ground_state: false, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Input(format!("cap problems need n ≥ 2, got {}", self.n)));
        }
        if !(self.theta_cap > 0.0 && self.theta_cap <= FRAC_PI_2 * (1.0 + 1e-15)) {
            return Err(Error::Input(format!("θ_cap must lie in (0, π/2], got {}", self.theta_cap)));
        }
        if self.cells < 64 {
            return Err(Error::Input(format!("need at least 64 cells, got {}", self.cells)));
        }
        if self.ground_state && self.potential != CapPotential::Singular {
            return Err(Error::Input("the ground-state transform needs the singular potential".into()));
        }
        Ok(())
    }

    fn spacing(&self) -> f64 {
        self.theta_cap / self.cells as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let d = self.spacing();
        (0..self.cells).map(|i| (i as f64 + 0.5) * d).collect()
    }

    fn rho(&self, theta: f64) -> f64 {
        theta.sin().powi(self.n as i32 - 2)
    }

    /// Symmetric tridiagonal `(diag, off)` of the problem and the diagonal
    /// mass whose square root links its eigenvectors to `w`. Eigenvalues
    /// are shifted by `2n` when the ground-state transform is used.
    fn assemble(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (mcells, d) = (self.cells, self.spacing());
        let weight = |t: f64| {
            let r = self.rho(t);
            if self.ground_state {
                r * t.cos().powi(4)
            } else {
                r
            }
        };
        let faces: Vec<f64> = (0..=mcells).map(|j| weight(j as f64 * d)).collect();
        let nodes = self.nodes();
        let mass: Vec<f64> = nodes.iter().map(|&t| weight(t)).collect();
        let mut a_diag = vec![0.0; mcells];
        let mut a_off = vec![0.0; mcells.saturating_sub(1)];
        for i in 0..mcells {
            // the face at θ = 0 carries no flux
            let left = if i == 0 { 0.0 } else { faces[i] };
            let right = if i + 1 == mcells { 2.0 * faces[mcells] } else { faces[i + 1] };
            a_diag[i] = (left + right) / (d * d);
            if !self.ground_state {
                a_diag[i] += mass[i] * self.potential.eval(nodes[i]);
            }
            if i + 1 < mcells {
                a_off[i] = -faces[i + 1] / (d * d);
            }
        }
        let diag: Vec<f64> = (0..mcells).map(|i| a_diag[i] / mass[i]).collect();
        let off: Vec<f64> = (0..mcells - 1).map(|i| a_off[i] / (mass[i] * mass[i + 1]).sqrt()).collect();
        (diag, off, mass)
    }
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if q == 0.0 { f64::EPSILON * (off[i - 1].abs() + 1.0) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// `k`-th smallest eigenvalue (0-based) by bisection on the Sturm count.
fn bisect_eigenvalue(diag: &[f64], off: &[f64], k: usize) -> f64 {
    let len = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..len {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < len { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solve `(T − σ)x = b` by the Thomas algorithm.
fn tridiagonal_solve(diag: &[f64], off: &[f64], sigma: f64, b: &[f64]) -> Vec<f64> {
    let len = diag.len();
    let mut c = vec![0.0; len];
    let mut d = vec![0.0; len];
    let guard = |v: f64| if v.abs() < 1e-300 { 1e-300 } else { v };
    let mut piv = guard(diag[0] - sigma);
    c[0] = if len > 1 { off[0] / piv } else { 0.0 };
    d[0] = b[0] / piv;
    for i in 1..len {
        piv = guard(diag[i] - sigma - off[i - 1] * c[i - 1]);
        c[i] = if i + 1 < len { off[i] / piv } else { 0.0 };
        d[i] = (b[i] - off[i - 1] * d[i - 1]) / piv;
    }
    for i in (0..len - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

fn inverse_iteration(diag: &[f64], off: &[f64], lambda: f64) -> Vec<f64> {
    let scale = diag.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let sigma = lambda - 1e-10 * scale;
    let mut x = vec![1.0; diag.len()];
    for _ in 0..4 {
        x = tridiagonal_solve(diag, off, sigma, &x);
        let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= nrm);
    }
    x
}

/// Eigenpairs at one resolution.
#[derive(Debug, Clone, Serialize)]
pub struct CapSpectrum {
    pub cells: usize,
    pub lambdas: Vec<f64>,
    pub theta: Vec<f64>,
    /// First eigenfunction `v` at the nodes, unit `ρ`-weighted norm, positive.
    pub eigenfunction: Vec<f64>,
}

/// Smallest `k` eigenvalues of the cap problem at its own resolution.
pub fn cap_spectrum(p: &CapProblem, k: usize) -> Result<CapSpectrum> {
    p.validate()?;
    if k == 0 || k > p.cells / 4 {
        return Err(Error::Input(format!("k = {k} is outside 1..={} for {} cells", p.cells / 4, p.cells)));
    }
    let (diag, off, mass) = p.assemble();
    let shift = if p.ground_state { 2.0 * p.n as f64 } else { 0.0 };
    let raw: Vec<f64> = (0..k).map(|j| bisect_eigenvalue(&diag, &off, j)).collect();
    let y = inverse_iteration(&diag, &off, raw[0]);
    let theta = p.nodes();
    // y = √mass·w; back to v = φw (or v = w) and normalize in the ρ inner product
    let mut v: Vec<f64> = (0..p.cells)
        .map(|i| {
            let w = y[i] / mass[i].sqrt();
            if p.ground_state {
                w * theta[i].cos().powi(2)
            } else {
                w
            }
        })
        .collect();
    let nrm = theta.iter().zip(&v).map(|(t, x)| p.rho(*t) * x * x).sum::<f64>().sqrt();
    let sign = if v.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    v.iter_mut().for_each(|x| *x *= sign / nrm);
    Ok(CapSpectrum { cells: p.cells, lambdas: raw.iter().map(|l| l + shift).collect(), theta, eigenfunction: v })
}

#[derive(Debug, Clone, Serialize)]
pub struct CapEigen {
    pub problem: CapProblem,
    /// Extrapolated `(4λ(2M) − λ(M))/3`.
    pub lambdas: Vec<f64>,
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    pub theta: Vec<f64>,
    /// First eigenfunction on the fine grid.
    pub eigenfunction: Vec<f64>,
    /// `ρ`-weighted correlation of the eigenfunction with `cos²θ`.
    pub correlation: f64,
}

/// Eigenvalues at `M` and `2M` cells with Richardson extrapolation.
pub fn cap_eigen(p: &CapProblem, k: usize) -> Result<CapEigen> {
    let coarse = cap_spectrum(p, k)?;
    let fine_problem = CapProblem { cells: 2 * p.cells, ..*p };
    let fine = cap_spectrum(&fine_problem, k)?;
    let lambdas = coarse.lambdas.iter().zip(&fine.lambdas).map(|(c, f)| (4.0 * f - c) / 3.0).collect();
    let rho = |t: f64| t.sin().powi(p.n as i32 - 2);
    let (mut vg, mut gg, mut vv) = (0.0, 0.0, 0.0);
    for (t, v) in fine.theta.iter().zip(&fine.eigenfunction) {
        let g = t.cos().powi(2);
        let r = rho(*t);
        vg += r * v * g;
        gg += r * g * g;
        vv += r * v * v;
    }
    Ok(CapEigen {
        problem: *p,
        lambdas,
        coarse: coarse.lambdas,
        fine: fine.lambdas,
        theta: fine.theta,
        eigenfunction: fine.eigenfunction,
        correlation: vg / (gg * vv).sqrt(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftBoundReport {
    pub k: usize,
    pub lambda_l: f64,
    pub lambda_laplace: f64,
    pub q0: f64,
    /// `λ_k(L) − q₀ − λ_k(−Δ′)`.
    pub margin: f64,
    pub holds: bool,
}

/// Compare `λ_k(L)` with `q₀ + λ_k(−Δ′)`, `q₀ = min q = 2`, on the same
/// (untransformed) discretization.
pub fn shift_bound_check(p: &CapProblem, k: usize, tol: f64) -> Result<ShiftBoundReport> {
    let base = CapProblem { ground_state: false, ..*p };
    let lambda_l = cap_eigen(&base, k)?.lambdas[k - 1];
    let lambda_laplace = cap_eigen(&base.with_potential(CapPotential::Constant(0.0)), k)?.lambdas[k - 1];
    let q0 = match p.potential {
        CapPotential::Singular => 2.0,
        CapPotential::Constant(c) => c,
    };
    let margin = lambda_l - q0 - lambda_laplace;
    Ok(ShiftBoundReport { k, lambda_l, lambda_laplace, q0, margin, holds: margin >= -tol })
}

#[derive(Debug, Clone, Serialize)]
pub struct CapLadder {
    pub theta_caps: Vec<f64>,
    pub lambda_1: Vec<f64>,
    pub strictly_decreasing: bool,
}

/// `λ₁` over increasing cap angles.
pub fn cap_monotonicity(n: usize, theta_caps: &[f64], cells: usize) -> Result<CapLadder> {
    let lambda_1: Vec<f64> = theta_caps
        .iter()
        .map(|&t| cap_eigen(&CapProblem::new(n, t, cells), 1).map(|e| e.lambdas[0]))
        .collect::<Result<_>>()?;
    let strictly_decreasing =
        theta_caps.windows(2).all(|w| w[1] > w[0]) && lambda_1.windows(2).all(|w| w[1] < w[0]);
    Ok(CapLadder { theta_caps: theta_caps.to_vec(), lambda_1, strictly_decreasing })
}

pub fn spectrum_csv(rows: &[CapEigen]) -> String {
    let k = rows.iter().map(|r| r.lambdas.len()).max().unwrap_or(0);
    let mut out = String::from("theta_cap,M");
    for j in 1..=k {
        out.push_str(&format!(",lambda_{j}"));
    }
    out.push_str(",margin\n");
    for r in rows {
        out.push_str(&format!("{},{}", r.problem.theta_cap, r.problem.cells));
        for l in &r.lambdas {
            out.push_str(&format!(",{l}"));
        }
        out.push_str(&format!(",{}\n", r.lambdas[0] - 2.0 * r.problem.n as f64));
    }
    out
}
