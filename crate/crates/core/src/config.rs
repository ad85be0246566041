//! Run configuration in TOML.
//!
//! ```toml
//! seed = 7
//! out_dir = "out"
//!
//! [grid]
//! nx = 65
//! ny = 65
//! domain = [-1.0, 1.0, -1.0, 1.0]
//!
//! [boundary]
//! data = "shear(0.3)"
//!
//! [solver]
//! beta_schedule = "0.5:2.0:0.25"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::Surface;
use crate::grid::{GraphPatch, GridSpec};
use crate::io::read_mesh;
use crate::solver::{harmonic_extension, ContinuationSchedule, LinearSolver, SolverConfig};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    grid: Option<RawGrid>,
    boundary: RawBoundary,
    solver: Option<RawSolver>,
    diagnostics: Option<RawDiagnostics>,
    rescale: Option<RawRescale>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    nx: Option<i64>,
    ny: Option<i64>,
    domain: Option<[f64; 4]>,
    origin: Option<[f64; 2]>,
    hx: Option<f64>,
    hy: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBoundary {
    data: Option<String>,
    mesh: Option<PathBuf>,
    init: Option<Initialization>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawSchedule {
    Range(String),
    List(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    beta: Option<f64>,
    beta_schedule: Option<RawSchedule>,
    adaptive: Option<bool>,
    min_step: Option<f64>,
    tol_residual: Option<f64>,
    max_newton_iters: Option<i64>,
    damping: Option<f64>,
    max_backtracks: Option<i64>,
    jacobian_fd_eps: Option<f64>,
    cos_floor: Option<f64>,
    linear_solver: Option<LinearSolver>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiagnostics {
    q: Option<f64>,
    center: Option<[f64; 4]>,
    radii: Option<Vec<f64>>,
    tol_quad: Option<f64>,
    epsilons: Option<Vec<f64>>,
    concentration_radius: Option<f64>,
    bump_widths: Option<Vec<f64>>,
    sobolev_bound: Option<f64>,
    r0: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRescale {
    center: Option<[usize; 2]>,
    window: Option<f64>,
    nodes: Option<i64>,
}

/// Interior initialization before solving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Initialization {
    /// Componentwise discrete harmonic extension of the boundary values.
    Harmonic,
    /// Interior taken from the data itself (family values or mesh file).
    Data,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BoundarySource {
    Family(String),
    Mesh(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsConfig {
    pub q: f64,
    /// Ambient center for balls; `None` means the image of the central node.
    pub center: Option<[f64; 4]>,
    pub radii: Vec<f64>,
    pub tol_quad: f64,
    pub epsilons: Vec<f64>,
    pub concentration_radius: f64,
    pub bump_widths: Vec<f64>,
    pub sobolev_bound: f64,
    pub r0: Vec<f64>,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            q: 5.0,
            center: None,
            radii: vec![0.1, 0.2, 0.3],
            tol_quad: 0.05,
            epsilons: vec![0.01, 0.1, 1.0],
            concentration_radius: 0.1,
            bump_widths: vec![0.1, 0.2],
            sobolev_bound: 10.0,
            r0: vec![0.1, 0.2, 0.3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RescaleConfig {
    /// Node to rescale about; `None` picks the maximum of `|A|`.
    pub center: Option<(usize, usize)>,
    /// Half-width of the output window in rescaled coordinates.
    pub window: f64,
    pub nodes: usize,
}

impl Default for RescaleConfig {
    fn default() -> Self {
        Self { center: None, window: 0.5, nodes: 33 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// `None` when the grid comes from a mesh file.
    pub grid: Option<GridSpec>,
    pub boundary: BoundarySource,
    pub init: Initialization,
    /// First value is the single-solve `β`.
    pub beta_values: Vec<f64>,
    pub schedule: ContinuationSchedule,
    pub solver: SolverConfig,
    pub diagnostics: DiagnosticsConfig,
    pub rescale: RescaleConfig,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn range(key: &str, message: impl Into<String>) -> Error {
    Error::Range { key: key.into(), message: message.into() }
}

/// Expand `"start:stop:step"`; the end point is included when it lies on the lattice.
pub fn expand_schedule(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| range("beta_schedule", format!("`{spec}` is not start:stop:step"))))
        .collect::<Result<_>>()?;
    let [a, b, step] = nums[..] else {
        return Err(range("beta_schedule", format!("`{spec}` is not start:stop:step")));
    };
    if !(step > 0.0 && step.is_finite() && a.is_finite() && b.is_finite() && b >= a) {
        return Err(range("beta_schedule", format!("`{spec}` needs step > 0 and stop >= start")));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize;
    if count > 1_000_000 {
        return Err(range("beta_schedule", "too many steps"));
    }
    Ok((0..=count).map(|k| a + k as f64 * step).collect())
}

fn positive_count(key: &str, v: Option<i64>, default: usize, min: usize) -> Result<usize> {
    match v {
        None => Ok(default),
        Some(n) if n >= min as i64 => Ok(n as usize),
        Some(n) => Err(range(key, format!("must be >= {min}, got {n}"))),
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(range(key, format!("must be positive, got {v}")))
    }
}

/// Parse a configuration; relative mesh paths resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(1, |s| line_of(text, s.start));
        let msg = e.message().to_string();
        match msg.strip_prefix("unknown field `") {
            Some(rest) => Error::UnknownKey { line, key: rest.split('`').next().unwrap_or("").to_string() },
            None => Error::Parse { line, message: msg },
        }
    })?;

    let boundary = match (&raw.boundary.data, &raw.boundary.mesh) {
        (Some(d), None) => {
            Surface::parse(d)?;
            BoundarySource::Family(d.clone())
        }
        (None, Some(m)) => BoundarySource::Mesh(base_dir.join(m)),
        _ => return Err(range("boundary", "give exactly one of `data` or `mesh`")),
    };

    let grid = match (&raw.grid, &boundary) {
        (Some(g), _) => {
            let nx = positive_count("grid.nx", g.nx, 65, 3)?;
            let ny = positive_count("grid.ny", g.ny, 65, 3)?;
            if let Some(h) = g.hx {
                positive("grid.hx", h)?;
            }
            if let Some(h) = g.hy {
                positive("grid.hy", h)?;
            }
            let spec = match (g.domain, g.origin, g.hx, g.hy) {
                (Some(d), None, None, None) => {
                    if !(d[1] > d[0] && d[3] > d[2]) {
                        return Err(range("grid.domain", "expected [xmin, xmax, ymin, ymax] with max > min"));
                    }
                    GridSpec::rect(nx, ny, (d[0], d[1]), (d[2], d[3]))
                }
                (None, Some(o), Some(hx), Some(hy)) => GridSpec::new(nx, ny, hx, hy, (o[0], o[1])),
                (None, None, None, None) => GridSpec::square(nx, -1.0, 1.0).and_then(|s| s.with_nodes(nx, ny)),
                _ => return Err(range("grid", "give either `domain` or all of `origin`, `hx`, `hy`")),
            };
            Some(spec.map_err(|e| range("grid", e.to_string()))?)
        }
        (None, BoundarySource::Family(_)) => Some(GridSpec::square(65, -1.0, 1.0)?),
        (None, BoundarySource::Mesh(_)) => None,
    };

    let rs = raw.solver.unwrap_or(RawSolver {
        beta: None,
        beta_schedule: None,
        adaptive: None,
        min_step: None,
        tol_residual: None,
        max_newton_iters: None,
        damping: None,
        max_backtracks: None,
        jacobian_fd_eps: None,
        cos_floor: None,
        linear_solver: None,
    });
    let beta_values = match (&rs.beta_schedule, rs.beta) {
        (Some(RawSchedule::Range(s)), _) => expand_schedule(s)?,
        (Some(RawSchedule::List(v)), _) => v.clone(),
        (None, Some(b)) => vec![b],
        (None, None) => vec![1.0],
    };
    let defaults = SolverConfig::default();
    let solver = SolverConfig {
        beta: rs.beta.unwrap_or(beta_values.first().copied().unwrap_or(1.0)),
        tol_residual: rs.tol_residual.unwrap_or(defaults.tol_residual),
        max_newton_iters: positive_count("solver.max_newton_iters", rs.max_newton_iters, defaults.max_newton_iters, 1)?,
        damping: rs.damping.unwrap_or(defaults.damping),
        max_backtracks: positive_count("solver.max_backtracks", rs.max_backtracks, defaults.max_backtracks, 1)?,
        jacobian_fd_eps: rs.jacobian_fd_eps.unwrap_or(defaults.jacobian_fd_eps),
        cos_floor: rs.cos_floor.unwrap_or(defaults.cos_floor),
        linear_solver: rs.linear_solver.unwrap_or(defaults.linear_solver),
    };
    solver.validate()?;

    let dd = DiagnosticsConfig::default();
    let diagnostics = match raw.diagnostics {
        None => dd,
        Some(d) => DiagnosticsConfig {
            q: d.q.unwrap_or(dd.q),
            center: d.center,
            radii: d.radii.unwrap_or(dd.radii),
            tol_quad: d.tol_quad.unwrap_or(dd.tol_quad),
            epsilons: d.epsilons.unwrap_or(dd.epsilons),
            concentration_radius: d.concentration_radius.unwrap_or(dd.concentration_radius),
            bump_widths: d.bump_widths.unwrap_or(dd.bump_widths),
            sobolev_bound: d.sobolev_bound.unwrap_or(dd.sobolev_bound),
            r0: d.r0.unwrap_or(dd.r0),
        },
    };
    positive("diagnostics.q", diagnostics.q)?;
    positive("diagnostics.tol_quad", diagnostics.tol_quad)?;
    positive("diagnostics.concentration_radius", diagnostics.concentration_radius)?;
    positive("diagnostics.sobolev_bound", diagnostics.sobolev_bound)?;
    for (key, list) in [
        ("diagnostics.radii", &diagnostics.radii),
        ("diagnostics.bump_widths", &diagnostics.bump_widths),
        ("diagnostics.r0", &diagnostics.r0),
    ] {
        for v in list {
            positive(key, *v)?;
        }
    }
    if diagnostics.radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(range("diagnostics.radii", "must be strictly ascending"));
    }
    if diagnostics.epsilons.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(range("diagnostics.epsilons", "must be finite and >= 0"));
    }

    let rd = RescaleConfig::default();
    let rescale = match raw.rescale {
        None => rd,
        Some(r) => RescaleConfig {
            center: r.center.map(|c| (c[0], c[1])),
            window: positive("rescale.window", r.window.unwrap_or(rd.window))?,
            nodes: positive_count("rescale.nodes", r.nodes, rd.nodes, 3)?,
        },
    };

    let schedule = ContinuationSchedule {
        beta_values: beta_values.clone(),
        adaptive: rs.adaptive.unwrap_or(true),
        min_step: positive("solver.min_step", rs.min_step.unwrap_or(1e-4))?,
        q: diagnostics.q,
    };
    schedule.validate()?;

    Ok(RunConfig {
        seed: raw.seed.unwrap_or(0),
        out_dir: raw.out_dir.unwrap_or_else(|| PathBuf::from("out")),
        grid,
        boundary,
        init: raw.boundary.init.unwrap_or(Initialization::Harmonic),
        beta_values,
        schedule,
        solver,
        diagnostics,
        rescale,
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

impl RunConfig {
    /// Override the node counts, keeping the domain.
    pub fn override_grid(&mut self, nx: usize, ny: usize) -> Result<()> {
        let grid = self
            .grid
            .ok_or_else(|| Error::InvalidArgument("--grid cannot resample a mesh-file surface".into()))?;
        self.grid = Some(grid.with_nodes(nx, ny)?);
        Ok(())
    }

    /// The surface exactly as specified: family values at every node, or the mesh file.
    pub fn surface_patch(&self) -> Result<GraphPatch> {
        match &self.boundary {
            BoundarySource::Family(spec) => {
                Surface::parse(spec)?.patch(self.grid.expect("family sources always carry a grid"))
            }
            BoundarySource::Mesh(path) => read_mesh(path),
        }
    }

    /// Starting patch for a solve: boundary data with the configured interior.
    pub fn initial_patch(&self) -> Result<GraphPatch> {
        let data = self.surface_patch()?;
        match self.init {
            Initialization::Data => Ok(data),
            Initialization::Harmonic => harmonic_extension(&data),
            Initialization::Zero => {
                let mut p = data;
                let n = 2 * p.grid().interior_count();
                p.set_interior_unknowns(&vec![0.0; n]);
                Ok(p)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        parse_config(text, Path::new("."))
    }

    #[test]
    fn minimal_config_gets_documented_defaults() {
        let c = parse("[grid]\nnx = 17\nny = 17\n[boundary]\ndata = \"affine(0.1,0,0,0)\"\n[solver]\nbeta = 1.0\n").unwrap();
        assert_eq!(c.solver, SolverConfig { beta: 1.0, ..SolverConfig::default() });
        assert_eq!(c.solver.tol_residual, 1e-10);
        assert_eq!(c.solver.max_newton_iters, 50);
        assert_eq!(c.solver.cos_floor, 1e-3);
        assert_eq!(c.schedule.min_step, 1e-4);
        assert_eq!(c.diagnostics, DiagnosticsConfig::default());
        assert_eq!(c.init, Initialization::Harmonic);
        let g = c.grid.unwrap();
        assert_eq!((g.nx, g.origin), (17, (-1.0, -1.0)));
    }

    #[test]
    fn schedule_expansion() {
        let v = expand_schedule("0.5:2.0:0.25").unwrap();
        assert_eq!(v, vec![0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]);
        assert_eq!(expand_schedule("0:1:0.1").unwrap().len(), 11);
        assert!(expand_schedule("1:0:0.1").is_err());
        assert!(expand_schedule("1:2").is_err());
    }

    #[test]
    fn negative_hx_is_a_range_error() {
        let text = "[grid]\nnx = 9\nny = 9\norigin = [0.0, 0.0]\nhx = -0.1\nhy = 0.1\n[boundary]\ndata = \"shear(0.3)\"\n";
        assert!(matches!(parse(text), Err(Error::Range { .. })));
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = "seed = 1\n[boundary]\ndata = \"shear(0.3)\"\n[solver]\nbeta = 1\nbogus = 3\n";
        match parse(text) {
            Err(Error::UnknownKey { line, key }) => assert_eq!((line, key.as_str()), (6, "bogus")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_line() {
        match parse("seed = 1\n[boundary\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_family_and_conflicting_sources() {
        assert!(parse("[boundary]\ndata = \"nope(1)\"\n").is_err());
        assert!(matches!(parse("[boundary]\ndata = \"shear(1)\"\nmesh = \"m.csv\"\n"), Err(Error::Range { .. })));
        assert!(matches!(parse("[boundary]\n"), Err(Error::Range { .. })));
    }

    #[test]
    fn invalid_solver_values() {
        let base = "[boundary]\ndata = \"shear(0.3)\"\n[solver]\n";
        assert!(matches!(parse(&format!("{base}damping = 1.5\n")), Err(Error::Range { .. })));
        assert!(matches!(parse(&format!("{base}cos_floor = 1.0\n")), Err(Error::Range { .. })));
        assert!(matches!(parse(&format!("{base}beta_schedule = []\n")), Err(Error::Range { .. })));
        assert!(matches!(parse(&format!("{base}linear_solver = \"qr\"\n")), Err(Error::Parse { .. })));
    }
}
