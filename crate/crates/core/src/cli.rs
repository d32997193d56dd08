//! Configuration, field persistence and the command drivers behind the
//! `fbreg` binary.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::blowup::{
    decay_ladder, decay_measurement, homogeneity_defect, project_to_halfspace, rescale_on, standard_rule,
    DecayOptions, DecayReference,
};
use crate::epiperimetric::{batch_scan, EpiOptions, ScanSpec};
use crate::error::{Error, Result};
use crate::freeboundary::{
    audit_ladder, default_thresholds, extract, growth_audit, holder_exponent, holder_reference, nondegeneracy_audit,
    normal_field, BoundaryClass, HolderOptions,
};
use crate::geometry::Sampler;
use crate::model::{
    make_nonlinearity, Bounds, FamilyTag, Grid, HalfSpaceSolution, Nonlinearity, Potential, VectorField,
};
use crate::oracle::{exact_linear_1d, exact_radial_linear, reference_radial, reference_solve_1d, RadialExact};
use crate::solver::{minimize, SolveOptions};
use crate::spectral::{cap_eigen, cap_monotonicity, shift_bound_check, spectrum_csv, CapProblem};
use crate::weiss::{alpha_n, domain_variation_residual, functional_m, monotonicity_audit, AuditOptions, Bump};

const MAGIC: &[u8; 4] = b"VFB1";
const VERSION: u32 = 1;

/// Write `u` in the `VFB1` layout: magic, `u32` version, `u32 n`, `u32 m`,
/// `u64` dims, `f64` origin, `f64` spacing, then the values with the last
/// axis fastest and the component innermost. Little-endian throughout.
pub fn write_field(out: &mut impl Write, u: &VectorField) -> Result<()> {
    let grid = u.grid();
    let mut buf = Vec::with_capacity(32 + 8 * u.values().len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(u.components() as u32).to_le_bytes());
    for &d in grid.dims() {
        buf.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for &o in grid.origin() {
        buf.extend_from_slice(&o.to_le_bytes());
    }
    buf.extend_from_slice(&grid.spacing().to_le_bytes());
    for v in u.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.at + N;
        if end > self.bytes.len() {
            return Err(Error::Format(format!("truncated field file at byte {}", self.at)));
        }
        let mut out = [0u8; N];
        out.copy_from_slice(&self.bytes[self.at..end]);
        self.at = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

/// Read a `VFB1` field; the mask is the grid hull.
pub fn read_field(input: &mut impl Read) -> Result<VectorField> {
    let mut bytes = vec![];
    input.read_to_end(&mut bytes)?;
    let mut c = Cursor { bytes: &bytes, at: 0 };
    if &c.take::<4>()? != MAGIC {
        return Err(Error::Format("bad magic bytes, expected VFB1".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = c.u32()? as usize;
    let m = c.u32()? as usize;
    if !(1..=3).contains(&n) || m == 0 {
        return Err(Error::Format(format!("unsupported shape n={n}, m={m}")));
    }
    let dims: Vec<usize> = (0..n).map(|_| c.u64().map(|d| d as usize)).collect::<Result<_>>()?;
    let origin: Vec<f64> = (0..n).map(|_| c.f64()).collect::<Result<_>>()?;
    let spacing = c.f64()?;
    let grid = Grid::new(dims, origin, spacing)?;
    let count = grid.len() * m;
    if bytes.len() - c.at != 8 * count {
        return Err(Error::Format(format!(
            "payload holds {} bytes, expected {}",
            bytes.len() - c.at,
            8 * count
        )));
    }
    let values: Vec<f64> = (0..count).map(|_| c.f64()).collect::<Result<_>>()?;
    let mask = (0..grid.len()).map(|i| grid.on_hull(i)).collect();
    VectorField::from_parts(grid, m, values, mask)
}

pub fn save_field(path: &Path, u: &VectorField) -> Result<()> {
    let mut f = fs::File::create(path)?;
    write_field(&mut f, u)
}

pub fn load_field(path: &Path) -> Result<VectorField> {
    let mut f = fs::File::open(path)
        .map_err(|e| Error::Input(format!("cannot open field file {}: {e}", path.display())))?;
    read_field(&mut f)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub dim: usize,
    pub lower: f64,
    pub upper: f64,
    pub spacing: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { dim: 2, lower: -1.0, upper: 1.0, spacing: 1.0 / 64.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonlinearityConfig {
    /// `linear`, `affine-quadratic`, `exp-saturating` or `table`.
    pub family: String,
    pub params: Vec<f64>,
    /// Declared bounds; derived from the family when absent.
    pub c0: Option<f64>,
    pub c_upper: Option<f64>,
    pub s_max: Option<f64>,
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        Self { family: "linear".into(), params: vec![1.0], c0: None, c_upper: None, s_max: None }
    }
}

impl NonlinearityConfig {
    pub fn build(&self) -> Result<Nonlinearity> {
        let tag = FamilyTag::parse(&self.family)?;
        let declared = match (self.c0, self.c_upper) {
            (Some(c0), Some(c_upper)) => Some(Bounds { c0, c_upper, s_max: self.s_max.unwrap_or(10.0) }),
            (None, None) => None,
            _ => return Err(Error::Config("declare both c0 and c_upper or neither".into())),
        };
        make_nonlinearity(tag, &self.params, declared)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundaryConfig {
    /// `half-space`, `constant`, `radial` or `file`.
    pub kind: String,
    /// Half-space normal and target direction; `e` also orients radial data.
    pub nu: Vec<f64>,
    pub e: Vec<f64>,
    /// Value for `constant` data.
    pub value: Vec<f64>,
    /// Radial data: center, outer radius `R` and `|u| = b` on `∂B_R`.
    pub center: Vec<f64>,
    pub radius: f64,
    pub boundary: f64,
    /// Linear family only: prescribe the contact radius instead of `(R, b)`.
    pub contact_radius: Option<f64>,
    /// Intervals of the radial reference solve (nonlinear families).
    pub reference_cells: usize,
    pub path: Option<String>,
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        Self {
            kind: "half-space".into(),
            nu: vec![0.0, 1.0],
            e: vec![1.0],
            value: vec![0.0],
            center: vec![0.0, 0.0],
            radius: 1.5,
            boundary: 0.6,
            contact_radius: None,
            reference_cells: 3000,
            path: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VariationConfig {
    /// Support radius of the bump deformation.
    pub radius: f64,
    /// `dilation` or `translation`.
    pub kind: String,
    pub direction: Vec<f64>,
}

impl Default for VariationConfig {
    fn default() -> Self {
        Self { radius: 0.25, kind: "dilation".into(), direction: vec![1.0, 0.0] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditConfig {
    /// Audit centers; empty means pick degenerate free-boundary points.
    pub points: Vec<Vec<f64>>,
    pub auto_points: usize,
    /// Smallest radius in cells.
    pub r_min_cells: f64,
    /// Largest radius; defaults to the hull margin less `2h`.
    pub r_max: Option<f64>,
    pub ratio: f64,
    /// Regular-point tolerance on the density.
    pub tau: f64,
    pub theta_pos: Option<f64>,
    pub theta_grad: Option<f64>,
    /// Contraction constant used for the Hölder reference exponent.
    pub kappa: Option<f64>,
    pub weiss: AuditOptions,
    pub holder: HolderOptions,
    pub variation: VariationConfig,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            points: vec![],
            auto_points: 3,
            r_min_cells: 8.0,
            r_max: None,
            ratio: 2f64.powf(0.25),
            tau: 0.05,
            theta_pos: None,
            theta_grad: None,
            kappa: None,
            weiss: AuditOptions::default(),
            holder: HolderOptions::default(),
            variation: VariationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpiConfig {
    /// Normal axis and codomain size of the base half-space.
    pub axis: usize,
    pub components: usize,
    pub deltas: Vec<f64>,
    pub s_values: Vec<f64>,
    pub degree: usize,
    pub seeds: Vec<u64>,
    pub floor_tol: f64,
    pub spacing: f64,
    pub eps_den: f64,
}

impl Default for EpiConfig {
    fn default() -> Self {
        let scan = ScanSpec::default();
        let opts = EpiOptions::default();
        Self {
            axis: 1,
            components: 2,
            deltas: scan.deltas,
            s_values: scan.s_values,
            degree: scan.degree,
            seeds: scan.seeds,
            floor_tol: scan.floor_tol,
            spacing: opts.spacing,
            eps_den: opts.eps_den,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralConfig {
    pub dims: Vec<usize>,
    pub theta_caps: Vec<f64>,
    pub cells: usize,
    pub k: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            dims: vec![2, 3],
            theta_caps: vec![PI / 6.0, PI / 4.0, PI / 3.0, 5.0 * PI / 12.0, FRAC_PI_2],
            cells: 256,
            k: 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    /// `linear-1d`, `reference-1d` or `radial`.
    pub kind: String,
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub q: f64,
    /// Grid spacing under test and the reference refinement factor.
    pub spacing: f64,
    pub refinement: usize,
    /// Samples of closed-form profiles.
    pub samples: usize,
    pub dim: usize,
    pub radius: f64,
    pub boundary: f64,
    pub cells: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            kind: "linear-1d".into(),
            a: 0.0,
            b: 1.0,
            p: 0.125,
            q: 0.0,
            spacing: 1.0 / 64.0,
            refinement: 4,
            samples: 257,
            dim: 2,
            radius: 1.0,
            boundary: 0.1,
            cells: 2000,
        }
    }
}

/// Everything a run reads from its TOML file. Unknown keys are rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub nonlinearity: NonlinearityConfig,
    pub boundary: BoundaryConfig,
    pub solver: SolveOptions,
    pub audit: AuditConfig,
    pub epi: EpiConfig,
    pub spectral: SpectralConfig,
    pub oracle: OracleConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn defaults_toml() -> String {
        toml::to_string(&Self::default()).expect("default config serializes")
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = &self.grid;
        Grid::cube(g.dim, g.lower, g.upper, g.spacing)
    }

    /// Dirichlet data on the grid hull; interior values are the initial guess.
    pub fn boundary_data(&self, nl: &Nonlinearity) -> Result<VectorField> {
        let grid = self.grid()?;
        let n = grid.dim();
        let b = &self.boundary;
        let lambda = nl.f0();
        match b.kind.as_str() {
            "half-space" => {
                let hs = HalfSpaceSolution::new(&b.nu, &b.e, lambda)?;
                if hs.dim() != n {
                    return Err(Error::Config(format!("boundary.nu has {} entries, grid dim is {n}", hs.dim())));
                }
                Ok(VectorField::from_fn(grid, hs.components(), |x| hs.eval(x)))
            }
            "constant" => Ok(VectorField::from_fn(grid, b.value.len(), |_| b.value.clone())),
            "radial" => {
                if b.center.len() != n {
                    return Err(Error::Config(format!("boundary.center has {} entries, grid dim is {n}", b.center.len())));
                }
                let ne = crate::model::norm(&b.e);
                if !(ne > 0.0) {
                    return Err(Error::Config("boundary.e must be nonzero".into()));
                }
                let e: Vec<f64> = b.e.iter().map(|v| v / ne).collect();
                let radius_of = |x: &[f64]| crate::model::norm(&x.iter().zip(&b.center).map(|(a, c)| a - c).collect::<Vec<_>>());
                let profile: Box<dyn Fn(f64) -> f64> = if nl.is_linear() {
                    let exact = match b.contact_radius {
                        Some(r0) => RadialExact {
                            lambda,
                            n,
                            radius: b.radius,
                            boundary: b.boundary,
                            contact_radius: r0,
                            center_value: 0.0,
                        },
                        None => exact_radial_linear(lambda, n, b.radius, b.boundary)?,
                    };
                    Box::new(move |r| exact.value(r))
                } else {
                    if b.contact_radius.is_some() {
                        return Err(Error::Config("contact_radius applies to the linear family only".into()));
                    }
                    let prof = reference_radial(nl, n, b.radius, b.boundary, &[1.0], b.reference_cells)?;
                    Box::new(move |r| prof.magnitude(r))
                };
                Ok(VectorField::from_fn(grid, e.len(), |x| {
                    let u = profile(radius_of(x));
                    e.iter().map(|c| c * u).collect()
                }))
            }
            "file" => {
                let path = b.path.as_ref().ok_or_else(|| Error::Config("boundary.path is required for file data".into()))?;
                load_field(Path::new(path))
            }
            other => Err(Error::Config(format!("unknown boundary kind `{other}`"))),
        }
    }
}

/// `audit` subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditKind {
    Weiss,
    Nondeg,
    Growth,
    Variation,
    Holder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Audit(AuditKind),
    Blowup,
    Decay,
    EpiScan,
    Spectral,
    Oracle,
    Report,
}

/// One command with its inputs.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    /// Field to audit; `<out>/field.vfb` when absent.
    pub field: Option<PathBuf>,
    pub seed: u64,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

/// Run one command; returns the paths written.
pub fn run(inv: &Invocation) -> Result<Vec<PathBuf>> {
    let config = match &inv.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    fs::create_dir_all(&inv.out)?;
    let out = |name: &str| inv.out.join(name);
    let field_path = inv.field.clone().unwrap_or_else(|| out("field.vfb"));
    match inv.command {
        Command::Solve => {
            let nl = config.nonlinearity.build()?;
            let data = config.boundary_data(&nl)?;
            let (u, stats) = minimize(&data, &nl, &config.solver)?;
            save_field(&out("field.vfb"), &u)?;
            write_json(&out("solve_stats.json"), &stats)?;
            Ok(vec![out("field.vfb"), out("solve_stats.json")])
        }
        Command::Audit(kind) => {
            let nl = config.nonlinearity.build()?;
            let u = load_field(&field_path)?;
            run_audit(kind, &config, &nl, &u, &inv.out)
        }
        Command::Blowup => {
            let nl = config.nonlinearity.build()?;
            let u = load_field(&field_path)?;
            let value = blowup_summary(&config, &nl, &u)?;
            write_json(&out("blowup.json"), &value)?;
            Ok(vec![out("blowup.json")])
        }
        Command::Decay => {
            let nl = config.nonlinearity.build()?;
            let u = load_field(&field_path)?;
            let x0 = audit_points(&config, &nl, &u)?.into_iter().next().ok_or_else(no_points)?;
            let h = u.grid().spacing();
            let r_max = config.audit.r_max.unwrap_or(u.grid().hull_distance(&x0) - 2.0 * h);
            let radii = decay_ladder(config.audit.r_min_cells * h, r_max)?;
            let opts = DecayOptions {
                tau: config.audit.tau,
                theta_grad: config.audit.theta_grad,
                audit: config.audit.weiss,
                ..DecayOptions::default()
            };
            let report = decay_measurement(&u, &nl, &x0, &radii, &DecayReference::Projection, &opts)?;
            write_json(&out("decay.json"), &report)?;
            Ok(vec![out("decay.json")])
        }
        Command::EpiScan => {
            let nl = config.nonlinearity.build()?;
            let e = &config.epi;
            let base = HalfSpaceSolution::axis(config.grid.dim, e.axis, e.components, nl.f0());
            if e.axis >= config.grid.dim {
                return Err(Error::Config(format!("epi.axis {} is not below grid.dim", e.axis)));
            }
            let spec = ScanSpec {
                deltas: e.deltas.clone(),
                s_values: e.s_values.clone(),
                degree: e.degree,
                seeds: e.seeds.iter().map(|s| s.wrapping_add(inv.seed)).collect(),
                floor_tol: e.floor_tol,
            };
            let opts = EpiOptions { spacing: e.spacing, eps_den: e.eps_den, solver: config.solver.clone() };
            let table = batch_scan(&base, &nl, &spec, &opts);
            write_text(&out("epi_scan.csv"), &table.to_csv())?;
            write_json(&out("epi_scan.json"), &table)?;
            Ok(vec![out("epi_scan.csv"), out("epi_scan.json")])
        }
        Command::Spectral => {
            let s = &config.spectral;
            let mut rows = vec![];
            let mut checks = vec![];
            for &n in &s.dims {
                for &t in &s.theta_caps {
                    rows.push(cap_eigen(&CapProblem::new(n, t, s.cells), s.k)?);
                }
                let shift = shift_bound_check(&CapProblem::new(n, FRAC_PI_2, s.cells), 1, 1e-6)?;
                let ladder = cap_monotonicity(n, &s.theta_caps, s.cells)?;
                checks.push(json!({ "n": n, "shift_bound": shift, "ladder": ladder }));
            }
            write_text(&out("spectral.csv"), &spectrum_csv(&rows))?;
            write_json(&out("spectral.json"), &json!({ "rows": rows, "checks": checks }))?;
            Ok(vec![out("spectral.csv"), out("spectral.json")])
        }
        Command::Oracle => {
            let text = oracle_csv(&config)?;
            write_text(&out("oracle.csv"), &text)?;
            Ok(vec![out("oracle.csv")])
        }
        Command::Report => {
            let summary = report(&inv.out)?;
            write_json(&out("summary.json"), &summary)?;
            Ok(vec![out("summary.json")])
        }
    }
}

fn no_points() -> Error {
    Error::InsufficientData("no audit points available".into())
}

/// Configured points, or the `auto_points` degenerate free-boundary points
/// deepest inside the grid, kept at least `0.1` apart.
pub fn audit_points(config: &RunConfig, nl: &Nonlinearity, u: &VectorField) -> Result<Vec<Vec<f64>>> {
    if !config.audit.points.is_empty() {
        return Ok(config.audit.points.clone());
    }
    let grid = u.grid();
    let (tp, tg) = default_thresholds(nl.f0(), grid.spacing());
    let fb = extract(
        u,
        config.audit.theta_pos.unwrap_or(tp),
        config.audit.theta_grad.unwrap_or(tg),
    )?;
    let mut candidates: Vec<(f64, usize)> = (0..fb.len())
        .filter(|&k| fb.class[k] == BoundaryClass::Degenerate)
        .map(|k| (grid.hull_distance(fb.point(k)), k))
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut chosen: Vec<Vec<f64>> = vec![];
    for (_, k) in candidates {
        let p = fb.point(k);
        let far = chosen
            .iter()
            .all(|q| crate::model::norm(&q.iter().zip(p).map(|(a, b)| a - b).collect::<Vec<_>>()) >= 0.1);
        if far {
            chosen.push(p.to_vec());
        }
        if chosen.len() == config.audit.auto_points {
            break;
        }
    }
    if chosen.is_empty() {
        return Err(no_points());
    }
    Ok(chosen)
}

fn ladder_for(config: &RunConfig, u: &VectorField, x0: &[f64]) -> Result<Vec<f64>> {
    let h = u.grid().spacing();
    let r_max = config.audit.r_max.unwrap_or(u.grid().hull_distance(x0) - 2.0 * h);
    crate::weiss::geometric_ladder(config.audit.r_min_cells * h, r_max, config.audit.ratio)
}

fn run_audit(kind: AuditKind, config: &RunConfig, nl: &Nonlinearity, u: &VectorField, dir: &Path) -> Result<Vec<PathBuf>> {
    let h = u.grid().spacing();
    let f0 = nl.f0();
    let (tp, tg) = default_thresholds(f0, h);
    let a = &config.audit;
    match kind {
        AuditKind::Weiss => {
            let mut csv = String::from("point,r,W,dW/dr,T1,T2\n");
            let mut reports = vec![];
            for (k, x0) in audit_points(config, nl, u)?.iter().enumerate() {
                let radii = ladder_for(config, u, x0)?;
                let rep = monotonicity_audit(u, nl, x0, &radii, &a.weiss)?;
                for line in rep.to_csv().lines().skip(1) {
                    csv.push_str(&format!("{k},{line}\n"));
                }
                reports.push(rep);
            }
            write_text(&dir.join("weiss.csv"), &csv)?;
            write_json(&dir.join("weiss.json"), &json!({ "alpha_n": alpha_n(u.grid().dim(), f0), "reports": reports }))?;
            Ok(vec![dir.join("weiss.csv"), dir.join("weiss.json")])
        }
        AuditKind::Nondeg => {
            let mut csv = String::from("point,r,sup,bound,margin,slack,flagged\n");
            let mut reports = vec![];
            for (k, x0) in audit_points(config, nl, u)?.iter().enumerate() {
                let radii: Vec<f64> =
                    ladder_for(config, u, x0)?.into_iter().filter(|&r| r >= 10.0 * h * (1.0 - 1e-12)).collect();
                let rep = nondegeneracy_audit(u, x0, &radii, f0, a.theta_pos)?;
                for line in rep.to_csv().lines().skip(1) {
                    csv.push_str(&format!("{k},{line}\n"));
                }
                reports.push(rep);
            }
            write_text(&dir.join("nondeg.csv"), &csv)?;
            write_json(&dir.join("nondeg.json"), &reports)?;
            Ok(vec![dir.join("nondeg.csv"), dir.join("nondeg.json")])
        }
        AuditKind::Growth => {
            let mut csv = String::from("point,r,sup_u,sup_grad\n");
            let mut reports = vec![];
            for (k, x0) in audit_points(config, nl, u)?.iter().enumerate() {
                let r_max = a.r_max.unwrap_or(u.grid().hull_distance(x0) - 2.0 * h);
                let rep = growth_audit(u, x0, &audit_ladder(10.0 * h, r_max)?, a.theta_grad.unwrap_or(tg))?;
                for line in rep.to_csv().lines().skip(1) {
                    csv.push_str(&format!("{k},{line}\n"));
                }
                reports.push(rep);
            }
            write_text(&dir.join("growth.csv"), &csv)?;
            write_json(&dir.join("growth.json"), &reports)?;
            Ok(vec![dir.join("growth.csv"), dir.join("growth.json")])
        }
        AuditKind::Variation => {
            let mut csv = String::from("point,radius,residual\n");
            let v = &a.variation;
            for (k, x0) in audit_points(config, nl, u)?.iter().enumerate() {
                let bump = match v.kind.as_str() {
                    "dilation" => Bump::dilation(x0, v.radius),
                    "translation" => Bump::translation(x0, v.radius, &v.direction),
                    other => return Err(Error::Config(format!("unknown variation kind `{other}`"))),
                };
                let res = domain_variation_residual(u, nl, &bump)?;
                csv.push_str(&format!("{k},{},{res}\n", v.radius));
            }
            write_text(&dir.join("variation.csv"), &csv)?;
            Ok(vec![dir.join("variation.csv")])
        }
        AuditKind::Holder => {
            let fb = extract(u, a.theta_pos.unwrap_or(tp), a.theta_grad.unwrap_or(tg))?;
            let nf = normal_field(&fb, u)?;
            let mut csv = String::from("point,normal\n");
            let (mut pts, mut nrm) = (vec![], vec![]);
            for k in 0..fb.len() {
                if let Some(nv) = &nf.normals[k] {
                    let p = fb.point(k).to_vec();
                    csv.push_str(&format!("{},{}\n", join(&p, " "), join(nv, " ")));
                    pts.push(p);
                    nrm.push(nv.clone());
                }
            }
            let fit = holder_exponent(&pts, &nrm, h, &a.holder)?;
            let reference = a.kappa.map(|k| holder_reference(u.grid().dim(), k));
            write_text(&dir.join("holder.csv"), &csv)?;
            write_json(&dir.join("holder.json"), &json!({ "fit": fit, "reference_beta": reference, "skipped": nf.skipped }))?;
            Ok(vec![dir.join("holder.csv"), dir.join("holder.json")])
        }
    }
}

fn join(v: &[f64], sep: &str) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

fn blowup_summary(config: &RunConfig, nl: &Nonlinearity, u: &VectorField) -> Result<Value> {
    let h = u.grid().spacing();
    let n = u.grid().dim();
    let sampler = Sampler::new(u);
    let mut points = vec![];
    for x0 in audit_points(config, nl, u)? {
        let r_max = config.audit.r_max.unwrap_or(u.grid().hull_distance(&x0) - 2.0 * h);
        let radii = decay_ladder(config.audit.r_min_cells * h, r_max)?;
        let mut rows = vec![];
        let mut previous: Option<crate::blowup::BlowupField> = None;
        for &r in &radii {
            let b = rescale_on(&sampler, &x0, r, standard_rule(n)?)?;
            let proj = project_to_halfspace(&b.field, nl.f0()).ok();
            rows.push(json!({
                "r": r,
                "homogeneity_defect": homogeneity_defect(&b.field)?,
                "m": functional_m(&b.field, nl.f0()),
                "projection": proj,
                "cauchy_distance": previous.as_ref().map(|p| p.field.sphere_l1_distance(&b.field)),
            }));
            previous = Some(b);
        }
        points.push(json!({ "center": x0, "rows": rows }));
    }
    Ok(json!({ "alpha_n": alpha_n(n, nl.f0()), "points": points }))
}

fn oracle_csv(config: &RunConfig) -> Result<String> {
    let o = &config.oracle;
    let nl = config.nonlinearity.build()?;
    match o.kind.as_str() {
        "linear-1d" => {
            let c = exact_linear_1d(nl.f0(), o.a, o.b, o.p, o.q)?;
            let mut out = String::from("x,u\n");
            for i in 0..o.samples.max(2) {
                let x = o.a + (o.b - o.a) * i as f64 / (o.samples.max(2) - 1) as f64;
                out.push_str(&format!("{x},{}\n", c.value(x)));
            }
            Ok(out)
        }
        "reference-1d" => Ok(reference_solve_1d(&nl, o.a, o.b, o.p, o.q, o.spacing, o.refinement, &config.solver)?.to_csv()),
        "radial" => Ok(reference_radial(&nl, o.dim, o.radius, o.boundary, &[1.0], o.cells)?.to_csv()),
        other => Err(Error::Config(format!("unknown oracle kind `{other}`"))),
    }
}

fn load_json(path: &Path) -> Result<Option<Value>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map(Some).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn check(name: &str, passed: bool, detail: Value) -> Value {
    json!({ "check": name, "passed": passed, "detail": detail })
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default()
}

/// Collect the artifacts present in `dir` into pass/fail checks.
pub fn report(dir: &Path) -> Result<Value> {
    let mut checks = vec![];
    if let Some(v) = load_json(&dir.join("solve_stats.json"))? {
        checks.push(check("solver-converged", v["converged"].as_bool() == Some(true), v["stop_reason"].clone()));
    }
    if let Some(v) = load_json(&dir.join("weiss.json"))? {
        let reports = v["reports"].as_array().cloned().unwrap_or_default();
        let monotone = reports.iter().all(|r| r["violations"].as_array().is_some_and(|a| a.is_empty()));
        let terms = reports
            .iter()
            .all(|r| floats(&r["t1"]).iter().chain(floats(&r["t2"]).iter()).all(|t| *t >= -1e-10));
        checks.push(check("weiss-monotonicity", monotone && terms, json!({ "points": reports.len() })));
        let alpha = v["alpha_n"].as_f64().unwrap_or(f64::NAN);
        let densities: Vec<f64> = reports.iter().filter_map(|r| r["fit"]["w0"].as_f64()).collect();
        let regular = densities.iter().all(|w| ((w - alpha / 2.0) / (alpha / 2.0)).abs() <= 0.05);
        checks.push(check("regular-density", regular && !densities.is_empty(), json!(densities)));
    }
    if let Some(v) = load_json(&dir.join("nondeg.json"))? {
        let ok = v.as_array().is_some_and(|a| {
            a.iter().all(|r| r["rows"].as_array().is_some_and(|rows| {
                rows.iter().all(|row| row["flagged"].as_bool() == Some(false))
            }))
        });
        checks.push(check("nondegeneracy", ok, Value::Null));
    }
    if let Some(v) = load_json(&dir.join("growth.json"))? {
        let ok = v.as_array().is_some_and(|a| {
            a.iter().all(|r| {
                let ue = r["u_exponent"].as_f64().unwrap_or(f64::NAN);
                let ge = r["grad_exponent"].as_f64().unwrap_or(f64::NAN);
                (1.85..=2.15).contains(&ue) && (0.85..=1.15).contains(&ge)
            })
        });
        checks.push(check("quadratic-growth", ok, Value::Null));
    }
    if let Some(v) = load_json(&dir.join("decay.json"))? {
        let fit = &v["fit"];
        let (ag, al, cons) = (fit["alpha_g"].as_f64(), fit["alpha_l"].as_f64(), fit["consistency"].as_f64());
        let ok = matches!((ag, al, cons), (Some(g), Some(l), Some(c)) if g > 0.0 && l > 0.0 && c <= 0.3);
        checks.push(check("decay-consistency", ok, fit.clone()));
    }
    if let Some(v) = load_json(&dir.join("epi_scan.json"))? {
        let rows = v["rows"].as_array().cloned().unwrap_or_default();
        let ok = rows.iter().all(|r| {
            let res = &r["result"];
            if res.is_null() {
                return false;
            }
            let contracts = res["h_v"].as_f64() <= res["h_c"].as_f64();
            let kappa = res["kappa_best"].as_f64().is_none_or(|k| k >= 0.01);
            contracts && kappa
        });
        checks.push(check("epiperimetric-contraction", ok, json!({ "min_kappa": v["min_kappa"] })));
    }
    if let Some(v) = load_json(&dir.join("spectral.json"))? {
        let rows = v["rows"].as_array().cloned().unwrap_or_default();
        let half = rows.iter().filter(|r| (r["problem"]["theta_cap"].as_f64().unwrap_or(0.0) - FRAC_PI_2).abs() < 1e-12);
        let mut ok = true;
        for r in half {
            let n = r["problem"]["n"].as_f64().unwrap_or(0.0);
            let l1 = floats(&r["lambdas"]).first().copied().unwrap_or(f64::NAN);
            ok &= (l1 - 2.0 * n).abs() <= 1e-3 && r["correlation"].as_f64().unwrap_or(0.0) >= 0.999;
        }
        for c in v["checks"].as_array().cloned().unwrap_or_default() {
            ok &= c["ladder"]["strictly_decreasing"].as_bool() == Some(true);
            ok &= c["shift_bound"]["holds"].as_bool() == Some(true);
        }
        checks.push(check("cap-eigenproblem", ok, Value::Null));
    }
    let passed = checks.iter().all(|c| c["passed"].as_bool() == Some(true));
    Ok(json!({ "checks": checks, "passed": passed }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip_is_bit_exact() {
        let grid = Grid::new(vec![5, 7], vec![-0.5, 0.25], 0.125).unwrap();
        let u = VectorField::from_fn(grid, 2, |x| vec![x[0].sin() / 3.0, x[1].exp() * 1e-300]);
        let mut bytes = vec![];
        write_field(&mut bytes, &u).unwrap();
        assert_eq!(&bytes[..4], b"VFB1");
        assert_eq!(bytes.len(), 4 + 12 + 16 + 16 + 8 + 8 * 70);
        let back = read_field(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, u);
        let mut again = vec![];
        write_field(&mut again, &back).unwrap();
        assert_eq!(bytes, again);
        assert!(read_field(&mut &bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn config_rejects_unknown_keys_with_a_line() {
        let err = RunConfig::parse("[grid]\ndim = 2\nspacin = 0.1\n").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let cfg = RunConfig::parse(&RunConfig::defaults_toml()).unwrap();
        assert_eq!(cfg.grid.dim, 2);
    }
}
