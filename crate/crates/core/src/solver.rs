//! Forward-backward splitting for the discrete energy: a gradient step on the
//! Dirichlet part followed by the exact nodewise prox of `hⁿF(|·|)`, with
//! optional momentum and function-value restart.

use std::collections::VecDeque;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{lipschitz_bound, prox_in_place, DiscreteEnergy, Stencil, CHUNK};
use crate::error::{Error, Result};
use crate::model::{norm, Potential, VectorField};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveOptions {
    /// Gradient step; `None` means `1/L`.
    pub step: Option<f64>,
    pub acceleration: bool,
    /// Fixed-point tolerance, multiplied by `h²`.
    pub tol_fp: f64,
    /// Relative energy-decrease tolerance.
    pub tol_energy: f64,
    pub max_iters: usize,
    /// Record the energy every this many iterations.
    pub trace_every: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            step: None,
            acceleration: true,
            tol_fp: 1e-8,
            tol_energy: 1e-12,
            max_iters: 200_000,
            trace_every: 100,
        }
    }
}

impl SolveOptions {
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            tol_fp: self.tol_fp / factor,
            tol_energy: self.tol_energy / factor,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    FixedPoint,
    EnergyStall,
    MaxIterations,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub final_energy: f64,
    /// `(iteration, energy)` pairs, subsampled.
    pub energy_trace: Vec<(usize, f64)>,
    pub fixed_point_residual: f64,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub restarts: usize,
    /// Wall time is kept out of serialized artifacts so that they stay
    /// byte-identical across runs.
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// Minimise `E_h` over fields agreeing with `data` on its masked nodes,
/// starting from `data` itself.
pub fn minimize<P: Potential>(
    data: &VectorField,
    potential: P,
    opts: &SolveOptions,
) -> Result<(VectorField, SolveStats)> {
    if !data.is_finite() {
        return Err(Error::Input("boundary data contains non-finite values".into()));
    }
    if !(opts.tol_fp > 0.0 && opts.tol_energy > 0.0) {
        return Err(Error::Input("solver tolerances must be positive".into()));
    }
    let started = Instant::now();
    let grid = data.grid().clone();
    let energy = DiscreteEnergy::new(&grid, potential);
    let lip = lipschitz_bound(&grid);
    let step = opts.step.unwrap_or(1.0 / lip);
    if !(step > 0.0 && step <= 1.0 / lip * (1.0 + 1e-12)) {
        return Err(Error::Input(format!("step must lie in (0, 1/L], L = {lip}")));
    }
    let h = grid.spacing();
    let m = data.components();
    let mask = data.mask().to_vec();
    let prox_tau = step * energy.cell_weight();
    let fp_tol = opts.tol_fp * h * h;

    let mut x = data.values().to_vec();
    let mut x_prev = x.clone();
    let mut y = x.clone();
    let mut next = x.clone();
    let mut grad = vec![0.0; x.len()];
    let mut e_x = energy.eval_raw(m, &x, &mask);
    if !e_x.is_finite() {
        return Err(Error::Numeric("initial energy is not finite".into()));
    }
    let mut trace = vec![(0usize, e_x)];
    let mut t = 1.0f64;
    let mut restarts = 0;
    let mut fp = f64::INFINITY;
    let mut reason = StopReason::MaxIterations;
    let mut iterations = 0;
    let mut recent: VecDeque<f64> = VecDeque::with_capacity(STALL_WINDOW + 1);
    recent.push_back(e_x);

    for k in 1..=opts.max_iters {
        iterations = k;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let accelerated = opts.acceleration && k > 1 && t > 1.0;
        if accelerated {
            let beta = (t - 1.0) / t_next;
            y.par_iter_mut()
                .zip(x.par_iter().zip(x_prev.par_iter()))
                .for_each(|(yi, (xi, pi))| *yi = xi + beta * (xi - pi));
            restore_masked(&mut y, &x, &mask, m);
            fb_step(&energy, m, &mask, &y, &mut grad, &mut next, step, prox_tau)?;
        } else {
            fb_step(&energy, m, &mask, &x, &mut grad, &mut next, step, prox_tau)?;
        }
        let mut e_next = energy.eval_raw(m, &next, &mask);
        if accelerated && e_next > e_x {
            // momentum overshot: fall back to a plain step from x
            restarts += 1;
            fb_step(&energy, m, &mask, &x, &mut grad, &mut next, step, prox_tau)?;
            e_next = energy.eval_raw(m, &next, &mask);
            t = 1.0;
        } else {
            t = if opts.acceleration { t_next } else { 1.0 };
        }
        if !e_next.is_finite() {
            return Err(Error::Numeric(format!("energy became non-finite at iteration {k}")));
        }
        fp = max_abs_diff(&next, &x);
        std::mem::swap(&mut x_prev, &mut x);
        std::mem::swap(&mut x, &mut next);
        e_x = e_next;
        if opts.trace_every > 0 && k % opts.trace_every == 0 {
            trace.push((k, e_x));
        }
        if fp <= fp_tol {
            reason = StopReason::FixedPoint;
            break;
        }
        recent.push_back(e_x);
        if recent.len() > STALL_WINDOW {
            let old = recent.pop_front().unwrap_or(e_x);
            let rel_decrease = (old - e_x) / e_x.abs().max(f64::MIN_POSITIVE);
            if rel_decrease >= 0.0 && rel_decrease < opts.tol_energy {
                reason = StopReason::EnergyStall;
                break;
            }
        }
    }
    if trace.last().map(|p| p.0) != Some(iterations) {
        trace.push((iterations, e_x));
    }
    let field = VectorField::from_parts(grid, m, x, mask)?;
    let stats = SolveStats {
        iterations,
        final_energy: e_x,
        energy_trace: trace,
        fixed_point_residual: fp,
        converged: reason != StopReason::MaxIterations,
        stop_reason: reason,
        restarts,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    Ok((field, stats))
}

/// The relative energy decrease is measured across this many iterations,
/// so a single short plain step after a momentum restart cannot end the run.
const STALL_WINDOW: usize = 50;

#[allow(clippy::too_many_arguments)]
fn fb_step<P: Potential>(
    energy: &DiscreteEnergy<'_, P>,
    m: usize,
    mask: &[bool],
    from: &[f64],
    grad: &mut [f64],
    out: &mut [f64],
    step: f64,
    prox_tau: f64,
) -> Result<()> {
    energy.dirichlet_gradient_raw(m, from, mask, grad);
    let potential = &energy.potential;
    out.par_chunks_mut(CHUNK * m)
        .enumerate()
        .map(|(c, chunk)| -> Result<()> {
            let base = c * CHUNK;
            for (k, node) in chunk.chunks_mut(m).enumerate() {
                let i = base + k;
                let src = &from[i * m..(i + 1) * m];
                if mask[i] {
                    node.copy_from_slice(src);
                    continue;
                }
                let g = &grad[i * m..(i + 1) * m];
                for q in 0..m {
                    node[q] = src[q] - step * g[q];
                }
                prox_in_place(node, prox_tau, potential)?;
            }
            Ok(())
        })
        .collect::<Result<Vec<()>>>()?;
    Ok(())
}

fn restore_masked(y: &mut [f64], x: &[f64], mask: &[bool], m: usize) {
    for (i, &pinned) in mask.iter().enumerate() {
        if pinned {
            y[i * m..(i + 1) * m].copy_from_slice(&x[i * m..(i + 1) * m]);
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(ca, cb)| ca.iter().zip(cb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max)
}

/// Copy of `data` with every unmasked node set to zero.
pub fn zero_interior(data: &VectorField) -> VectorField {
    let mut out = data.clone();
    let m = out.components();
    let mask = out.mask().to_vec();
    for (i, &pinned) in mask.iter().enumerate() {
        if !pinned {
            out.values_mut()[i * m..(i + 1) * m].fill(0.0);
        }
    }
    out
}

/// Extend the Dirichlet data inward: every unmasked node receives the value
/// of its graph-nearest masked node (ties broken by visit order).
pub fn interpolate_boundary(data: &VectorField) -> VectorField {
    let mut out = data.clone();
    let stencil = Stencil::new(out.grid());
    let len = out.grid().len();
    let mut seen: Vec<bool> = out.mask().to_vec();
    let mut queue: VecDeque<usize> = (0..len).filter(|&i| seen[i]).collect();
    while let Some(i) = queue.pop_front() {
        let mut fresh = vec![];
        stencil.for_each_neighbor(i, |j| {
            if !seen[j] {
                seen[j] = true;
                fresh.push(j);
            }
        });
        for j in fresh {
            let src: Vec<f64> = out.node(i).to_vec();
            out.node_mut(j).copy_from_slice(&src);
            queue.push_back(j);
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub runs: usize,
    pub max_gap: f64,
    pub energies: Vec<f64>,
    pub all_converged: bool,
}

/// Solve from `u₀ = 0`, from the inward-extended data, and from `seeds − 2`
/// random starts; report the largest pairwise sup-norm gap.
pub fn uniqueness_audit<P: Potential>(
    data: &VectorField,
    potential: P,
    opts: &SolveOptions,
    seeds: usize,
    rng_seed: u64,
) -> Result<UniquenessReport> {
    if seeds < 2 {
        return Err(Error::Input("uniqueness audit needs at least two starts".into()));
    }
    let amplitude = data.values().iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let mut starts = vec![zero_interior(data), interpolate_boundary(data)];
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for _ in 2..seeds {
        let mut s = data.clone();
        let m = s.components();
        let mask = s.mask().to_vec();
        for (i, &pinned) in mask.iter().enumerate() {
            if !pinned {
                for q in 0..m {
                    s.values_mut()[i * m + q] = rng.gen_range(-amplitude..amplitude);
                }
            }
        }
        starts.push(s);
    }
    let mut solutions = vec![];
    let mut energies = vec![];
    let mut all_converged = true;
    for s in &starts {
        let (u, stats) = minimize(s, &potential, opts)?;
        all_converged &= stats.converged;
        energies.push(stats.final_energy);
        solutions.push(u);
    }
    let mut max_gap: f64 = 0.0;
    for i in 0..solutions.len() {
        for j in i + 1..solutions.len() {
            max_gap = max_gap.max(solutions[i].max_abs_diff(&solutions[j]));
        }
    }
    Ok(UniquenessReport { runs: solutions.len(), max_gap, energies, all_converged })
}

/// Discrete Euler–Lagrange residual per node. On `{|u| > θ}` it is
/// `|Δ_h u − f(|u|)u/|u||`; elsewhere the distance of `Δ_h u` to the ball of
/// radius `f(0)`. Masked nodes and nodes without a full stencil report 0.
pub fn el_residual<P: Potential>(u: &VectorField, potential: P, theta_pos: f64) -> Result<Vec<f64>> {
    if !(theta_pos > 0.0) {
        return Err(Error::Input("positivity threshold must be positive".into()));
    }
    let grid = u.grid();
    let stencil = Stencil::new(grid);
    let m = u.components();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let f0 = potential.f0();
    let mut out = vec![0.0; grid.len()];
    let mut lap = vec![0.0; m];
    for (i, r) in out.iter_mut().enumerate() {
        if u.mask()[i] || !stencil.is_full(i) {
            continue;
        }
        let ui = u.node(i);
        lap.fill(0.0);
        stencil.for_each_neighbor(i, |j| {
            for q in 0..m {
                lap[q] += (u.node(j)[q] - ui[q]) * inv_h2;
            }
        });
        let mag = norm(ui);
        *r = if mag > theta_pos {
            let f = potential.f(mag);
            let diff: Vec<f64> = lap.iter().zip(ui).map(|(l, v)| l - f * v / mag).collect();
            norm(&diff)
        } else {
            (norm(&lap) - f0).max(0.0)
        };
    }
    Ok(out)
}
