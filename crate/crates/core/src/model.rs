//! Domain types: the convex nonlinearity `F`, uniform grids, vector fields
//! with Dirichlet masks, and the half-space solutions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A convex profile `F: [0, ∞) → ℝ` with its first two derivatives.
///
/// Everything that consumes the nonlinearity (energy, prox, solver, Weiss
/// functionals) is written against this trait so that the rescaled family
/// `F_s` can be used wherever `F` is.
pub trait Potential: Send + Sync {
    fn value(&self, s: f64) -> f64;
    fn slope(&self, s: f64) -> f64;
    fn curvature(&self, s: f64) -> f64;

    /// `f(s) = F'(s)/2`, the right-hand side coefficient of the system.
    fn f(&self, s: f64) -> f64 {
        0.5 * self.slope(s)
    }

    fn f0(&self) -> f64 {
        self.f(0.0)
    }
}

impl<P: Potential + ?Sized> Potential for &P {
    fn value(&self, s: f64) -> f64 {
        (**self).value(s)
    }
    fn slope(&self, s: f64) -> f64 {
        (**self).slope(s)
    }
    fn curvature(&self, s: f64) -> f64 {
        (**self).curvature(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyTag {
    Linear,
    AffineQuadratic,
    ExpSaturating,
    Table,
}

impl FamilyTag {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "linear" => Ok(Self::Linear),
            "affine-quadratic" => Ok(Self::AffineQuadratic),
            "exp-saturating" => Ok(Self::ExpSaturating),
            "table" | "custom-table" => Ok(Self::Table),
            other => Err(Error::Input(format!("unknown nonlinearity family `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::AffineQuadratic => "affine-quadratic",
            Self::ExpSaturating => "exp-saturating",
            Self::Table => "table",
        }
    }
}

/// Monotone cubic (Fritsch–Carlson) interpolant of tabulated `F'` samples.
/// `F` is the exact antiderivative of the interpolant, so `F(0) = 0` and
/// `F'' ≥ 0` hold by construction.
#[derive(Debug, Clone)]
pub struct SlopeTable {
    s: Vec<f64>,
    g: Vec<f64>,
    m: Vec<f64>,
    // F at each knot
    cum: Vec<f64>,
}

impl SlopeTable {
    pub fn new(s: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if s.len() != g.len() || s.len() < 2 {
            return Err(Error::Input("table needs at least two (s, F') pairs".into()));
        }
        if s[0] != 0.0 {
            return Err(Error::Input("table must start at s = 0".into()));
        }
        if s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input("table abscissae must be strictly increasing".into()));
        }
        if g.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Validation(
                "table F' samples must be nondecreasing (F'' >= 0)".into(),
            ));
        }
        if g.iter().chain(s.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Input("table contains non-finite values".into()));
        }
        let k = s.len();
        let d: Vec<f64> = (0..k - 1).map(|i| (g[i + 1] - g[i]) / (s[i + 1] - s[i])).collect();
        let mut m = vec![0.0; k];
        m[0] = d[0];
        m[k - 1] = d[k - 2];
        for i in 1..k - 1 {
            m[i] = if d[i - 1] * d[i] > 0.0 { 0.5 * (d[i - 1] + d[i]) } else { 0.0 };
        }
        for i in 0..k - 1 {
            if d[i] == 0.0 {
                m[i] = 0.0;
                m[i + 1] = 0.0;
                continue;
            }
            let a = m[i] / d[i];
            let b = m[i + 1] / d[i];
            let r2 = a * a + b * b;
            if r2 > 9.0 {
                let t = 3.0 / r2.sqrt();
                m[i] = t * a * d[i];
                m[i + 1] = t * b * d[i];
            }
        }
        let mut cum = vec![0.0; k];
        for i in 0..k - 1 {
            let dx = s[i + 1] - s[i];
            cum[i + 1] = cum[i]
                + dx * (0.5 * g[i] + dx * m[i] / 12.0 + 0.5 * g[i + 1] - dx * m[i + 1] / 12.0);
        }
        Ok(Self { s, g, m, cum })
    }

    fn locate(&self, x: f64) -> usize {
        match self.s.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.s.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.s.len() - 2),
        }
    }

    fn value(&self, x: f64) -> f64 {
        let last = self.s.len() - 1;
        if x >= self.s[last] {
            return self.cum[last] + self.g[last] * (x - self.s[last]);
        }
        let i = self.locate(x);
        let dx = self.s[i + 1] - self.s[i];
        let t = (x - self.s[i]) / dx;
        let (t2, t3, t4) = (t * t, t * t * t, t * t * t * t);
        let h00 = t - t3 + 0.5 * t4;
        let h10 = 0.5 * t2 - 2.0 * t3 / 3.0 + 0.25 * t4;
        let h01 = t3 - 0.5 * t4;
        let h11 = -t3 / 3.0 + 0.25 * t4;
        self.cum[i]
            + dx * (h00 * self.g[i] + h10 * dx * self.m[i] + h01 * self.g[i + 1]
                + h11 * dx * self.m[i + 1])
    }

    fn slope(&self, x: f64) -> f64 {
        let last = self.s.len() - 1;
        if x >= self.s[last] {
            return self.g[last];
        }
        let i = self.locate(x);
        let dx = self.s[i + 1] - self.s[i];
        let t = (x - self.s[i]) / dx;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.g[i]
            + (t3 - 2.0 * t2 + t) * dx * self.m[i]
            + (-2.0 * t3 + 3.0 * t2) * self.g[i + 1]
            + (t3 - t2) * dx * self.m[i + 1]
    }

    fn curvature(&self, x: f64) -> f64 {
        let last = self.s.len() - 1;
        if x >= self.s[last] {
            return 0.0;
        }
        let i = self.locate(x);
        let dx = self.s[i + 1] - self.s[i];
        let t = (x - self.s[i]) / dx;
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * self.g[i]
            + (3.0 * t2 - 4.0 * t + 1.0) * dx * self.m[i]
            + (-6.0 * t2 + 6.0 * t) * self.g[i + 1]
            + (3.0 * t2 - 2.0 * t) * dx * self.m[i + 1])
            / dx
    }
}

#[derive(Debug, Clone)]
enum Family {
    /// `F(s) = 2λs`
    Linear { lambda: f64 },
    /// `F(s) = 2as + bs²`
    AffineQuadratic { a: f64, b: f64 },
    /// `F(s) = 2C s − (C − c)(1 − e^{−2s})`, so `f` rises from `c` to `C`.
    ExpSaturating { low: f64, high: f64 },
    Table(SlopeTable),
}

/// Declared structural constants: `c₀ ≤ f ≤ C₀`, `0 ≤ F'' ≤ C₀` on `[0, s_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub c0: f64,
    pub c_upper: f64,
    pub s_max: f64,
}

#[derive(Debug, Clone)]
pub struct Nonlinearity {
    family: Family,
    tag: FamilyTag,
    bounds: Bounds,
}

impl Potential for Nonlinearity {
    fn value(&self, s: f64) -> f64 {
        match &self.family {
            Family::Linear { lambda } => 2.0 * lambda * s,
            Family::AffineQuadratic { a, b } => 2.0 * a * s + b * s * s,
            Family::ExpSaturating { low, high } => {
                2.0 * high * s + (high - low) * (-2.0 * s).exp_m1()
            }
            Family::Table(t) => t.value(s),
        }
    }

    fn slope(&self, s: f64) -> f64 {
        match &self.family {
            Family::Linear { lambda } => 2.0 * lambda,
            Family::AffineQuadratic { a, b } => 2.0 * a + 2.0 * b * s,
            Family::ExpSaturating { low, high } => 2.0 * high - 2.0 * (high - low) * (-2.0 * s).exp(),
            Family::Table(t) => t.slope(s),
        }
    }

    fn curvature(&self, s: f64) -> f64 {
        match &self.family {
            Family::Linear { .. } => 0.0,
            Family::AffineQuadratic { b, .. } => 2.0 * b,
            Family::ExpSaturating { low, high } => 4.0 * (high - low) * (-2.0 * s).exp(),
            Family::Table(t) => t.curvature(s),
        }
    }
}

const DEFAULT_S_MAX: f64 = 10.0;
const DEFAULT_VALIDATION_SAMPLES: usize = 2001;

/// Build a nonlinearity from a family tag and its parameter list.
///
/// Parameters per family: linear `[λ]`; affine-quadratic `[a, b]`;
/// exp-saturating `[c, C]` (`f(0) = c`, `f(∞) = C`); table
/// `[s₀, F'₀, s₁, F'₁, …]` with `s₀ = 0`.
///
/// When `declared` is `None` the tightest bounds on `[0, s_max]` are derived
/// from the family. Either way the result is validated and the first violated
/// bound is named in the error.
pub fn make_nonlinearity(
    family: FamilyTag,
    params: &[f64],
    declared: Option<Bounds>,
) -> Result<Nonlinearity> {
    let s_max = declared.map_or(DEFAULT_S_MAX, |b| b.s_max);
    let nl = Nonlinearity::unvalidated(family, params, declared, s_max)?;
    let report = validate_nonlinearity(&nl, s_max, DEFAULT_VALIDATION_SAMPLES);
    match report.first_failure() {
        None => Ok(nl),
        Some(check) => Err(Error::Validation(format!(
            "{} nonlinearity violates `{}` on [0, {}] (worst value {:.6e})",
            family.name(),
            check.name,
            s_max,
            check.worst
        ))),
    }
}

impl Nonlinearity {
    /// `F(s) = 2λs` with exact bounds `c₀ = C₀ = λ`.
    pub fn linear(lambda: f64) -> Result<Self> {
        make_nonlinearity(FamilyTag::Linear, &[lambda], None)
    }

    pub fn exp_saturating(low: f64, high: f64) -> Result<Self> {
        make_nonlinearity(FamilyTag::ExpSaturating, &[low, high], None)
    }

    pub fn affine_quadratic(a: f64, b: f64, s_max: f64) -> Result<Self> {
        let derived = Self::unvalidated(FamilyTag::AffineQuadratic, &[a, b], None, s_max)?;
        make_nonlinearity(FamilyTag::AffineQuadratic, &[a, b], Some(derived.bounds))
    }

    /// Construct without checking the structural bounds. Parameter shape
    /// (count, sign, finiteness) is still checked.
    pub fn unvalidated(
        family: FamilyTag,
        params: &[f64],
        declared: Option<Bounds>,
        s_max: f64,
    ) -> Result<Self> {
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Input("non-finite nonlinearity parameter".into()));
        }
        if !(s_max > 0.0) {
            return Err(Error::Input("s_max must be positive".into()));
        }
        let expect = |k: usize| -> Result<()> {
            if params.len() != k {
                Err(Error::Input(format!(
                    "{} family takes {k} parameter(s), got {}",
                    family.name(),
                    params.len()
                )))
            } else {
                Ok(())
            }
        };
        let (fam, derived) = match family {
            FamilyTag::Linear => {
                expect(1)?;
                let lambda = params[0];
                if lambda <= 0.0 {
                    return Err(Error::Input("linear family needs λ > 0".into()));
                }
                (Family::Linear { lambda }, Bounds { c0: lambda, c_upper: lambda, s_max })
            }
            FamilyTag::AffineQuadratic => {
                expect(2)?;
                let (a, b) = (params[0], params[1]);
                if a <= 0.0 || b < 0.0 {
                    return Err(Error::Input("affine-quadratic family needs a > 0, b >= 0".into()));
                }
                let upper = (a + b * s_max).max(2.0 * b);
                (Family::AffineQuadratic { a, b }, Bounds { c0: a, c_upper: upper, s_max })
            }
            FamilyTag::ExpSaturating => {
                expect(2)?;
                let (low, high) = (params[0], params[1]);
                if !(low > 0.0 && low <= high) {
                    return Err(Error::Input("exp-saturating family needs 0 < c <= C".into()));
                }
                // F''(0) = 4(C − c) may exceed the saturation level C; the
                // derived upper bound covers both f and F''.
                let upper = high.max(4.0 * (high - low));
                (Family::ExpSaturating { low, high }, Bounds { c0: low, c_upper: upper, s_max })
            }
            FamilyTag::Table => {
                if params.len() < 4 || !params.len().is_multiple_of(2) {
                    return Err(Error::Input(
                        "table family takes an even number (>= 4) of parameters".into(),
                    ));
                }
                let s: Vec<f64> = params.iter().step_by(2).copied().collect();
                let g: Vec<f64> = params.iter().skip(1).step_by(2).copied().collect();
                let table = SlopeTable::new(s, g)?;
                let mut lo = f64::INFINITY;
                let mut hi: f64 = 0.0;
                for i in 0..=DEFAULT_VALIDATION_SAMPLES {
                    let x = s_max * i as f64 / DEFAULT_VALIDATION_SAMPLES as f64;
                    let f = 0.5 * table.slope(x);
                    lo = lo.min(f);
                    hi = hi.max(f).max(table.curvature(x));
                }
                (Family::Table(table), Bounds { c0: lo, c_upper: hi, s_max })
            }
        };
        let bounds = declared.unwrap_or(derived);
        if !(bounds.c0 > 0.0 && bounds.c_upper >= bounds.c0) {
            return Err(Error::Validation("bounds need 0 < c0 <= C0".into()));
        }
        Ok(Self { family: fam, tag: family, bounds })
    }

    pub fn tag(&self) -> FamilyTag {
        self.tag
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.family, Family::Linear { .. })
    }

    pub fn rescaled(&self, s: f64) -> Result<RescaledNonlinearity<&Self>> {
        RescaledNonlinearity::new(self, s)
    }
}

/// `F_s(t) = F(s²t)/s²`, `f_s(t) = f(s²t)`; `s = 0` is the limit `2f(0)t`.
#[derive(Debug, Clone)]
pub struct RescaledNonlinearity<P> {
    base: P,
    s2: f64,
}

impl<P: Potential> RescaledNonlinearity<P> {
    pub fn new(base: P, s: f64) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::Input("rescaling parameter must be finite and >= 0".into()));
        }
        Ok(Self { base, s2: s * s })
    }

    pub fn scale(&self) -> f64 {
        self.s2.sqrt()
    }
}

impl<P: Potential> Potential for RescaledNonlinearity<P> {
    fn value(&self, t: f64) -> f64 {
        if self.s2 == 0.0 {
            self.base.slope(0.0) * t
        } else {
            self.base.value(self.s2 * t) / self.s2
        }
    }
    fn slope(&self, t: f64) -> f64 {
        self.base.slope(self.s2 * t)
    }
    fn curvature(&self, t: f64) -> f64 {
        self.s2 * self.base.curvature(self.s2 * t)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Most adverse sampled quantity for this check.
    pub worst: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub s_max: f64,
    pub samples: usize,
    pub min_f: f64,
    pub max_f: f64,
    pub min_curvature: f64,
    pub max_curvature: f64,
    pub checks: Vec<BoundCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Sample `f` and `F''` on a uniform grid of `[0, s_max]` and check the
/// structural bounds plus the convexity sandwich `2f(0)s ≤ F(s) ≤ 2f(s)s`.
pub fn validate_nonlinearity(nl: &Nonlinearity, s_max: f64, samples: usize) -> ValidationReport {
    let samples = samples.max(2);
    let Bounds { c0, c_upper, .. } = nl.bounds;
    let f0 = nl.f0();
    let (mut min_f, mut max_f) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_c, mut max_c) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut sandwich_low: f64 = 0.0;
    let mut sandwich_high: f64 = 0.0;
    for i in 0..samples {
        let s = s_max * i as f64 / (samples - 1) as f64;
        let f = nl.f(s);
        let c = nl.curvature(s);
        min_f = min_f.min(f);
        max_f = max_f.max(f);
        min_c = min_c.min(c);
        max_c = max_c.max(c);
        let big_f = nl.value(s);
        let tol = 1e-12 * (1.0 + big_f.abs());
        // positive values mean violation
        sandwich_low = sandwich_low.max(2.0 * f0 * s - big_f - tol);
        sandwich_high = sandwich_high.max(big_f - 2.0 * f * s - tol);
    }
    let rel = |x: f64| 1e-12 * (1.0 + x.abs());
    let f_at_zero = nl.value(0.0);
    let checks = vec![
        BoundCheck { name: "F(0) = 0", passed: f_at_zero.abs() <= 1e-14, worst: f_at_zero },
        BoundCheck { name: "f >= c0", passed: min_f >= c0 - rel(c0), worst: min_f },
        BoundCheck { name: "f <= C0", passed: max_f <= c_upper + rel(c_upper), worst: max_f },
        BoundCheck { name: "F'' >= 0", passed: min_c >= -1e-12, worst: min_c },
        BoundCheck { name: "F'' <= C0", passed: max_c <= c_upper + rel(c_upper), worst: max_c },
        BoundCheck { name: "2f(0)s <= F(s)", passed: sandwich_low <= 0.0, worst: sandwich_low },
        BoundCheck { name: "F(s) <= 2f(s)s", passed: sandwich_high <= 0.0, worst: sandwich_high },
    ];
    ValidationReport {
        s_max,
        samples,
        min_f,
        max_f,
        min_curvature: min_c,
        max_curvature: max_c,
        checks,
    }
}

/// Uniform isotropic grid in dimension 1, 2 or 3. Node multi-indices are
/// linearised lexicographically with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    dims: Vec<usize>,
    origin: Vec<f64>,
    h: f64,
}

impl Grid {
    pub fn new(dims: Vec<usize>, origin: Vec<f64>, h: f64) -> Result<Self> {
        let n = dims.len();
        if !(1..=3).contains(&n) {
            return Err(Error::Input(format!("grid dimension must be 1, 2 or 3, got {n}")));
        }
        if origin.len() != n {
            return Err(Error::Input("origin length must match dimension".into()));
        }
        if dims.iter().any(|&d| d < 3) {
            return Err(Error::Input("each axis needs at least 3 nodes".into()));
        }
        if !(h > 0.0) || !h.is_finite() || origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::Input("spacing must be positive and finite".into()));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&total| total.checked_mul(8).is_some())
            .ok_or_else(|| Error::Input("grid too large to address".into()))?;
        Ok(Self { n, dims, origin, h })
    }

    /// Cube `[lo, hi]ⁿ` with spacing `h`; `(hi − lo)/h` must be an integer.
    pub fn cube(n: usize, lo: f64, hi: f64, h: f64) -> Result<Self> {
        let cells = (hi - lo) / h;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-9 * cells.max(1.0) {
            return Err(Error::Input(format!(
                "extent {} is not a whole number of cells of size {h}",
                hi - lo
            )));
        }
        Self::new(vec![rounded as usize + 1; n], vec![lo; n], h)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn strides(&self) -> [usize; 3] {
        let mut st = [0usize; 3];
        let mut acc = 1;
        for a in (0..self.n).rev() {
            st[a] = acc;
            acc *= self.dims[a];
        }
        st
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.origin[axis] + self.h * (self.dims[axis] - 1) as f64
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        let mut rem = idx;
        for a in (0..self.n).rev() {
            out[a] = rem % self.dims[a];
            rem /= self.dims[a];
        }
        out
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        let st = self.strides();
        (0..self.n).map(|a| multi[a] * st[a]).sum()
    }

    pub fn coords_into(&self, idx: usize, out: &mut [f64]) {
        let mi = self.multi_index(idx);
        for a in 0..self.n {
            out[a] = self.origin[a] + self.h * mi[a] as f64;
        }
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.coords_into(idx, &mut out);
        out
    }

    pub fn on_hull(&self, idx: usize) -> bool {
        let mi = self.multi_index(idx);
        (0..self.n).any(|a| mi[a] == 0 || mi[a] + 1 == self.dims[a])
    }

    /// Euclidean distance from `x` to the nearest hull face (negative outside).
    pub fn hull_distance(&self, x: &[f64]) -> f64 {
        (0..self.n)
            .map(|a| (x[a] - self.origin[a]).min(self.upper(a) - x[a]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `u: nodes → ℝᵐ` with a Dirichlet mask. Masked nodes carry the boundary
/// data `g` in `values`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    m: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl VectorField {
    pub fn zeros(grid: Grid, m: usize) -> Self {
        let len = grid.len();
        let mask = (0..len).map(|i| grid.on_hull(i)).collect();
        Self { grid, m, values: vec![0.0; len * m], mask }
    }

    /// Sample `f` at every node; the mask is the grid hull.
    pub fn from_fn(grid: Grid, m: usize, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Self {
        let mut field = Self::zeros(grid, m);
        let mut x = vec![0.0; field.grid.dim()];
        for i in 0..field.grid.len() {
            field.grid.coords_into(i, &mut x);
            let v = f(&x);
            field.values[i * m..(i + 1) * m].copy_from_slice(&v[..m]);
        }
        field
    }

    pub fn from_parts(grid: Grid, m: usize, values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if m == 0 {
            return Err(Error::Input("codomain dimension must be >= 1".into()));
        }
        if values.len() != grid.len() * m || mask.len() != grid.len() {
            return Err(Error::Input("field payload does not match grid".into()));
        }
        Ok(Self { grid, m, values, mask })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn set_mask(&mut self, mask: Vec<bool>) -> Result<()> {
        if mask.len() != self.grid.len() {
            return Err(Error::Input("mask length does not match grid".into()));
        }
        self.mask = mask;
        Ok(())
    }

    pub fn node(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.m..(idx + 1) * self.m]
    }

    pub fn node_mut(&mut self, idx: usize) -> &mut [f64] {
        &mut self.values[idx * self.m..(idx + 1) * self.m]
    }

    pub fn norm_at(&self, idx: usize) -> f64 {
        norm(self.node(idx))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &VectorField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `f(0)·max(x·ν, 0)²/2 · e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpaceSolution {
    pub nu: Vec<f64>,
    pub e: Vec<f64>,
    pub f0: f64,
}

impl HalfSpaceSolution {
    /// Normalises `nu` and `e`; both must be nonzero.
    pub fn new(nu: &[f64], e: &[f64], f0: f64) -> Result<Self> {
        let (nn, ne) = (norm(nu), norm(e));
        if !(nn > 0.0 && ne > 0.0) || !nn.is_finite() || !ne.is_finite() {
            return Err(Error::Input("half-space directions must be nonzero".into()));
        }
        if !(f0 > 0.0) {
            return Err(Error::Input("half-space amplitude f(0) must be positive".into()));
        }
        Ok(Self {
            nu: nu.iter().map(|v| v / nn).collect(),
            e: e.iter().map(|v| v / ne).collect(),
            f0,
        })
    }

    /// Axis-aligned solution `ν = e_axis`, `e = e¹`.
    pub fn axis(n: usize, axis: usize, m: usize, f0: f64) -> Self {
        let mut nu = vec![0.0; n];
        nu[axis] = 1.0;
        let mut e = vec![0.0; m];
        e[0] = 1.0;
        Self { nu, e, f0 }
    }

    pub fn dim(&self) -> usize {
        self.nu.len()
    }

    pub fn components(&self) -> usize {
        self.e.len()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let t = dot(x, &self.nu).max(0.0);
        let a = 0.5 * self.f0 * t * t;
        self.e.iter().map(|c| a * c).collect()
    }

    /// Jacobian, row-major `m × n`: `f(0)·max(x·ν,0)·e ⊗ ν`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let t = dot(x, &self.nu).max(0.0);
        let mut out = Vec::with_capacity(self.e.len() * self.nu.len());
        for c in &self.e {
            for v in &self.nu {
                out.push(self.f0 * t * c * v);
            }
        }
        out
    }
}

pub fn half_space_eval(h: &HalfSpaceSolution, x: &[f64]) -> Vec<f64> {
    h.eval(x)
}
