//! Damped Newton for the discrete Euler-Lagrange system under Dirichlet data, and
//! continuation of solutions along a `β` schedule.
//!
//! Unknowns are the interior heights, interleaved `(f, g)` per node in row-major order;
//! equations are the residual components `(r₃, r₄)` in the same order. The residual at
//! a node depends on heights within grid distance 2 (a 13-point diamond), so the
//! Jacobian is banded and is assembled by finite differences over a 5×5 coloring.

use rayon::prelude::*;

use crate::diagnostics::{diagnostics_record, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::geometry::surface_fields;
use crate::grid::{GraphPatch, GridSpec};
use crate::linalg::{dense_solve, largest_singular_value, smallest_singular_value, BandMatrix};
use crate::residual::{exact_residual, residual_unchecked};
use crate::Surface;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearSolver {
    Banded,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolverConfig {
    pub beta: f64,
    /// Sup-norm stopping tolerance on the residual.
    pub tol_residual: f64,
    pub max_newton_iters: usize,
    /// Step shrink factor during backtracking.
    pub damping: f64,
    pub max_backtracks: usize,
    /// Relative step of the finite-difference Jacobian columns.
    pub jacobian_fd_eps: f64,
    /// Smallest admissible `cos α` anywhere on the patch.
    pub cos_floor: f64,
    pub linear_solver: LinearSolver,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            tol_residual: 1e-10,
            max_newton_iters: 50,
            damping: 0.5,
            max_backtracks: 30,
            jacobian_fd_eps: 1e-7,
            cos_floor: 1e-3,
            linear_solver: LinearSolver::Banded,
        }
    }
}

impl SolverConfig {
    pub fn with_beta(beta: f64) -> Self {
        Self { beta, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let range = |key: &str, message: String| Err(Error::Range { key: key.into(), message });
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return range("beta", format!("must be finite and >= 0, got {}", self.beta));
        }
        if !(self.tol_residual > 0.0 && self.tol_residual.is_finite()) {
            return range("tol_residual", format!("must be positive, got {}", self.tol_residual));
        }
        if self.max_newton_iters == 0 {
            return range("max_newton_iters", "must be positive".into());
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return range("damping", format!("must lie in (0, 1), got {}", self.damping));
        }
        if self.max_backtracks == 0 {
            return range("max_backtracks", "must be positive".into());
        }
        if !(self.jacobian_fd_eps > 0.0 && self.jacobian_fd_eps < 1.0) {
            return range("jacobian_fd_eps", format!("must lie in (0, 1), got {}", self.jacobian_fd_eps));
        }
        if !(self.cos_floor > 0.0 && self.cos_floor < 1.0) {
            return range("cos_floor", format!("must lie in (0, 1), got {}", self.cos_floor));
        }
        Ok(())
    }
}

/// One line of the Newton log: `iter,res_sup,res_l2,min_cos_alpha`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct IterationLog {
    pub iter: usize,
    pub res_sup: f64,
    pub res_l2: f64,
    pub min_cos_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual_sup: f64,
    pub residual_l2: f64,
    pub min_cos_trajectory: Vec<f64>,
    pub log: Vec<IterationLog>,
    pub converged: bool,
    pub failure: Option<String>,
}

/// Outcome of a Newton run; `error` is set when the run stopped without converging.
#[derive(Debug)]
pub struct NewtonRun {
    pub patch: GraphPatch,
    pub report: SolveReport,
    pub error: Option<Error>,
}

impl NewtonRun {
    pub fn into_result(self) -> Result<(GraphPatch, SolveReport)> {
        match self.error {
            Some(e) => Err(e),
            None => Ok((self.patch, self.report)),
        }
    }
}

struct Evaluation {
    residual: Vec<f64>,
    sup: f64,
    l2: f64,
    min_cos: f64,
}

struct Problem<'a> {
    base: &'a GraphPatch,
    beta: f64,
    forcing: Option<&'a [f64]>,
}

impl Problem<'_> {
    fn patch_with(&self, u: &[f64]) -> GraphPatch {
        let mut p = self.base.clone();
        p.set_interior_unknowns(u);
        p
    }

    fn eval(&self, u: &[f64]) -> Evaluation {
        let p = self.patch_with(u);
        let fields = surface_fields(&p);
        let rf = residual_unchecked(&fields, self.beta);
        let mut residual = rf.interleaved();
        let (sup, l2) = match self.forcing {
            None => (rf.sup_norm, rf.l2_norm),
            Some(forcing) => {
                residual.iter_mut().zip(forcing).for_each(|(r, f)| *r -= f);
                let grid = p.grid();
                let mut l2 = 0.0;
                for (n, (i, j)) in grid.interior_nodes().enumerate() {
                    let w = fields.node(i, j).weight;
                    l2 += w * (residual[2 * n].powi(2) + residual[2 * n + 1].powi(2));
                }
                (residual.iter().fold(0.0f64, |m, v| m.max(v.abs())), l2.sqrt())
            }
        };
        Evaluation { residual, sup, l2, min_cos: fields.min_cos_alpha() }
    }

    fn jacobian(&self, u: &[f64], r0: &[f64], eps: f64) -> BandMatrix {
        let grid = *self.base.grid();
        let m = grid.nx - 2;
        let band = 4 * m + 1;
        let n = u.len();
        let jobs: Vec<(usize, usize, usize)> =
            (0..5).flat_map(|ci| (0..5).flat_map(move |cj| (0..2).map(move |c| (ci, cj, c)))).collect();
        let columns: Vec<Vec<(usize, usize, f64)>> = jobs
            .par_iter()
            .map(|&(ci, cj, comp)| {
                let nodes: Vec<(usize, usize)> =
                    grid.interior_nodes().filter(|&(i, j)| i % 5 == ci && j % 5 == cj).collect();
                if nodes.is_empty() {
                    return Vec::new();
                }
                let mut up = u.to_vec();
                let mut steps = Vec::with_capacity(nodes.len());
                for &(i, j) in &nodes {
                    let k = 2 * grid.interior_index(i, j) + comp;
                    let h = eps * u[k].abs().max(1.0);
                    up[k] += h;
                    steps.push(up[k] - u[k]);
                }
                let r1 = self.eval(&up).residual;
                let mut entries = Vec::new();
                for (&(i, j), &h) in nodes.iter().zip(&steps) {
                    let col = 2 * grid.interior_index(i, j) + comp;
                    for (qi, qj) in diamond(&grid, i, j) {
                        let q = grid.interior_index(qi, qj);
                        for rc in 0..2 {
                            let row = 2 * q + rc;
                            entries.push((row, col, (r1[row] - r0[row]) / h));
                        }
                    }
                }
                entries
            })
            .collect();
        let mut jac = BandMatrix::zeros(n, band, band);
        for (row, col, v) in columns.into_iter().flatten() {
            jac.set(row, col, v);
        }
        jac
    }
}

/// Interior nodes within grid distance 2 of `(i, j)`.
fn diamond(grid: &GridSpec, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
    (-2isize..=2).flat_map(move |dj| {
        (-2isize..=2).filter_map(move |di| {
            if di.abs() + dj.abs() > 2 {
                return None;
            }
            let (qi, qj) = (i as isize + di, j as isize + dj);
            if qi < 1 || qj < 1 || qi > grid.nx as isize - 2 || qj > grid.ny as isize - 2 {
                return None;
            }
            Some((qi as usize, qj as usize))
        })
    })
}

fn linear_solve(config: &SolverConfig, jac: &BandMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    match config.linear_solver {
        LinearSolver::Banded => Ok(jac.lu()?.solve(rhs)),
        LinearSolver::Dense => dense_solve(jac, rhs),
    }
}

/// Solve `residual = 0` for the interior of `patch`, starting from its current interior.
pub fn newton_solve(patch: &GraphPatch, config: &SolverConfig) -> Result<(GraphPatch, SolveReport)> {
    newton_run(patch, config, None)?.into_result()
}

/// Solve `residual = forcing`, with `forcing` interleaved like the unknowns.
pub fn newton_solve_forced(
    patch: &GraphPatch,
    config: &SolverConfig,
    forcing: &[f64],
) -> Result<(GraphPatch, SolveReport)> {
    newton_run(patch, config, Some(forcing))?.into_result()
}

/// Newton iteration that always hands back its last iterate and log.
/// Only invalid input returns `Err`; solver failures land in [`NewtonRun::error`].
pub fn newton_run(patch: &GraphPatch, config: &SolverConfig, forcing: Option<&[f64]>) -> Result<NewtonRun> {
    config.validate()?;
    let n = 2 * patch.grid().interior_count();
    if let Some(f) = forcing {
        if f.len() != n {
            return Err(Error::InvalidArgument(format!("forcing has length {}, expected {n}", f.len())));
        }
    }
    let problem = Problem { base: patch, beta: config.beta, forcing };
    let mut u = patch.interior_unknowns();
    let mut current = problem.eval(&u);
    let mut report = SolveReport {
        iterations: 0,
        residual_sup: current.sup,
        residual_l2: current.l2,
        min_cos_trajectory: vec![current.min_cos],
        log: Vec::new(),
        converged: false,
        failure: None,
    };
    let finish = |u: &[f64], report: SolveReport, error: Option<Error>| NewtonRun {
        patch: problem.patch_with(u),
        report,
        error,
    };

    if !(current.min_cos >= config.cos_floor) {
        let err = Error::CosFloorViolated { min_cos: current.min_cos, floor: config.cos_floor };
        report.failure = Some(err.to_string());
        return Ok(finish(&u, report, Some(err)));
    }

    for iter in 0..=config.max_newton_iters {
        report.log.push(IterationLog {
            iter,
            res_sup: current.sup,
            res_l2: current.l2,
            min_cos_alpha: current.min_cos,
        });
        report.iterations = iter;
        report.residual_sup = current.sup;
        report.residual_l2 = current.l2;
        if current.sup <= config.tol_residual {
            report.converged = true;
            return Ok(finish(&u, report, None));
        }
        if iter == config.max_newton_iters {
            break;
        }

        let jac = problem.jacobian(&u, &current.residual, config.jacobian_fd_eps);
        let rhs: Vec<f64> = current.residual.iter().map(|r| -r).collect();
        let step = match linear_solve(config, &jac, &rhs) {
            Ok(s) => s,
            Err(e) => {
                report.failure = Some(e.to_string());
                return Ok(finish(&u, report, Some(e)));
            }
        };

        let mut t = 1.0;
        let mut accepted = None;
        let mut floor_hit: Option<f64> = None;
        for _ in 0..config.max_backtracks {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(a, d)| a + t * d).collect();
            let ev = problem.eval(&trial);
            if !(ev.min_cos >= config.cos_floor) {
                floor_hit = Some(floor_hit.map_or(ev.min_cos, |m: f64| m.max(ev.min_cos)));
            } else if ev.sup < current.sup {
                accepted = Some((trial, ev));
                break;
            }
            t *= config.damping;
        }
        match accepted {
            Some((trial, ev)) => {
                u = trial;
                current = ev;
                report.min_cos_trajectory.push(current.min_cos);
            }
            None => {
                let err = match floor_hit {
                    Some(min_cos) => Error::CosFloorViolated { min_cos, floor: config.cos_floor },
                    None => Error::Stalled { residual: current.sup },
                };
                report.failure = Some(err.to_string());
                return Ok(finish(&u, report, Some(err)));
            }
        }
    }
    let err = Error::MaxItersExceeded { iters: config.max_newton_iters, residual: current.sup };
    report.failure = Some(err.to_string());
    Ok(finish(&u, report, Some(err)))
}

/// Componentwise discrete harmonic extension of the boundary data (5-point Laplacian).
pub fn harmonic_extension(patch: &GraphPatch) -> Result<GraphPatch> {
    let grid = *patch.grid();
    let m = grid.nx - 2;
    let n = grid.interior_count();
    let (ax, ay) = (1.0 / (grid.hx * grid.hx), 1.0 / (grid.hy * grid.hy));
    let mut lap = BandMatrix::zeros(n, m, m);
    let mut rhs_f = vec![0.0; n];
    let mut rhs_g = vec![0.0; n];
    for (i, j) in grid.interior_nodes() {
        let r = grid.interior_index(i, j);
        lap.set(r, r, -2.0 * (ax + ay));
        for (di, dj, w) in [(-1isize, 0isize, ax), (1, 0, ax), (0, -1, ay), (0, 1, ay)] {
            let (qi, qj) = ((i as isize + di) as usize, (j as isize + dj) as usize);
            if grid.is_boundary(qi, qj) {
                let (f, g) = patch.at(qi, qj);
                rhs_f[r] -= w * f;
                rhs_g[r] -= w * g;
            } else {
                lap.set(r, grid.interior_index(qi, qj), w);
            }
        }
    }
    let lu = lap.lu()?;
    let (f, g) = (lu.solve(&rhs_f), lu.solve(&rhs_g));
    let u: Vec<f64> = f.iter().zip(&g).flat_map(|(a, b)| [*a, *b]).collect();
    let mut out = patch.clone();
    out.set_interior_unknowns(&u);
    Ok(out)
}

/// Exact residual of a surface family at every interior node, interleaved.
pub fn manufactured_forcing(surface: &Surface, grid: &GridSpec, beta: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * grid.interior_count());
    for (i, j) in grid.interior_nodes() {
        let (a, b) = exact_residual(&surface.jet(grid.x(i), grid.y(j))?, beta);
        out.push(a);
        out.push(b);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ContinuationSchedule {
    pub beta_values: Vec<f64>,
    pub adaptive: bool,
    /// Smallest `β` step tried when halving after a failure.
    pub min_step: f64,
    /// Exponent of the `∫ cos^{-q}α` mass recorded at each step.
    pub q: f64,
}

impl ContinuationSchedule {
    pub fn new(beta_values: Vec<f64>) -> Self {
        Self { beta_values, adaptive: true, min_step: 1e-4, q: 5.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta_values.is_empty() {
            return Err(Error::Range { key: "beta_schedule".into(), message: "must be nonempty".into() });
        }
        if let Some(b) = self.beta_values.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(Error::Range { key: "beta_schedule".into(), message: format!("entry {b} is not >= 0") });
        }
        if !(self.min_step > 0.0) {
            return Err(Error::Range { key: "min_step".into(), message: "must be positive".into() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ContinuationStep {
    pub beta: f64,
    pub patch: GraphPatch,
    pub diagnostics: DiagnosticsRecord,
    pub report: SolveReport,
}

/// Continuation that keeps the steps completed before a failure.
#[derive(Debug)]
pub struct ContinuationRun {
    pub steps: Vec<ContinuationStep>,
    pub error: Option<Error>,
}

pub fn continuation_run(
    patch: &GraphPatch,
    schedule: &ContinuationSchedule,
    config: &SolverConfig,
) -> Result<Vec<ContinuationStep>> {
    let run = continuation_run_partial(patch, schedule, config)?;
    match run.error {
        Some(e) => Err(e),
        None => Ok(run.steps),
    }
}

pub fn continuation_run_partial(
    patch: &GraphPatch,
    schedule: &ContinuationSchedule,
    config: &SolverConfig,
) -> Result<ContinuationRun> {
    schedule.validate()?;
    config.validate()?;
    let mut steps: Vec<ContinuationStep> = Vec::new();
    let record = |beta: f64, p: GraphPatch, report: SolveReport| -> Result<ContinuationStep> {
        let diagnostics = diagnostics_record(&surface_fields(&p), beta, schedule.q)?;
        Ok(ContinuationStep { beta, patch: p, diagnostics, report })
    };

    let first = schedule.beta_values[0];
    let run = newton_run(patch, &SolverConfig { beta: first, ..*config }, None)?;
    if let Some(e) = run.error {
        return Ok(ContinuationRun { steps, error: Some(e) });
    }
    steps.push(record(first, run.patch, run.report)?);

    for &target in &schedule.beta_values[1..] {
        let last = steps.last().expect("first step recorded");
        let (mut beta, mut current) = (last.beta, last.patch.clone());
        let mut step = target - beta;
        loop {
            let trial_beta = if (target - beta).abs() <= step.abs() { target } else { beta + step };
            let run = newton_run(&current, &SolverConfig { beta: trial_beta, ..*config }, None)?;
            match run.error {
                None if trial_beta == target => {
                    steps.push(record(target, run.patch, run.report)?);
                    break;
                }
                None => {
                    beta = trial_beta;
                    current = run.patch;
                }
                Some(e) => {
                    if !schedule.adaptive {
                        return Ok(ContinuationRun { steps, error: Some(e) });
                    }
                    step *= 0.5;
                    if step.abs() < schedule.min_step {
                        let error = Error::StepUnderflow { last_beta: beta, min_step: schedule.min_step };
                        return Ok(ContinuationRun { steps, error: Some(error) });
                    }
                }
            }
        }
    }
    Ok(ContinuationRun { steps, error: None })
}

/// Singular-value picture of the Newton Jacobian at a patch.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Spectrum {
    pub smallest_singular_value: f64,
    pub largest_singular_value: f64,
    pub condition: f64,
}

pub fn linearization_spectrum(patch: &GraphPatch, config: &SolverConfig) -> Result<Spectrum> {
    config.validate()?;
    let fields = surface_fields(patch);
    fields.check_symplectic()?;
    let problem = Problem { base: patch, beta: config.beta, forcing: None };
    let u = patch.interior_unknowns();
    let r0 = problem.eval(&u).residual;
    let jac = problem.jacobian(&u, &r0, config.jacobian_fd_eps);
    let largest = largest_singular_value(&jac, 2000);
    let smallest = match jac.lu() {
        Ok(lu) => smallest_singular_value(&lu, jac.n(), 2000),
        Err(_) => 0.0,
    };
    let condition = if smallest > 0.0 { largest / smallest } else { f64::INFINITY };
    Ok(Spectrum { smallest_singular_value: smallest, largest_singular_value: largest, condition })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> GridSpec {
        GridSpec::square(n, -1.0, 1.0).unwrap()
    }

    #[test]
    fn affine_boundary_from_zero_interior() {
        let exact = Surface::parse("affine(0.05,-0.08,0.03,0.06)").unwrap().patch(grid(9)).unwrap();
        let mut start = exact.clone();
        start.set_interior_unknowns(&vec![0.0; 2 * 49]);
        let (sol, rep) = newton_solve(&start, &SolverConfig::with_beta(1.0)).unwrap();
        assert!(rep.converged && rep.iterations <= 5, "{rep:?}");
        assert!(rep.residual_sup <= 1e-10);
        assert!(sol.boundary_intact());
        let err = sol.f().iter().zip(exact.f()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn harmonic_extension_reproduces_linear_data() {
        let exact = Surface::parse("affine(0.5,0.1,-0.2,0.3)").unwrap().patch(grid(7)).unwrap();
        let mut start = exact.clone();
        start.set_interior_unknowns(&vec![1.0; 50]);
        let h = harmonic_extension(&start).unwrap();
        for (a, b) in h.f().iter().zip(exact.f()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn initial_floor_violation_is_reported() {
        let p = Surface::parse("shear(3)").unwrap().patch(grid(7)).unwrap();
        let cfg = SolverConfig { cos_floor: 0.5, ..SolverConfig::with_beta(1.0) };
        assert!(matches!(newton_solve(&p, &cfg), Err(Error::CosFloorViolated { .. })));
    }

    #[test]
    fn rejects_bad_config() {
        let p = Surface::parse("shear(0.1)").unwrap().patch(grid(5)).unwrap();
        let cfg = SolverConfig { damping: 1.5, ..SolverConfig::default() };
        assert!(matches!(newton_solve(&p, &cfg), Err(Error::Range { .. })));
    }

    #[test]
    fn degenerate_schedule_is_idempotent() {
        let p = Surface::parse("shear(0.2)+bump(0.1,0.5)").unwrap().patch(grid(11)).unwrap();
        let init = harmonic_extension(&p).unwrap();
        let steps = continuation_run(&init, &ContinuationSchedule::new(vec![1.0, 1.0]), &SolverConfig::default())
            .unwrap();
        assert_eq!(steps.len(), 2);
        assert_eq!(steps[0].patch, steps[1].patch);
        assert_eq!(steps[1].report.iterations, 0);
    }

    #[test]
    fn empty_schedule_is_rejected() {
        let p = Surface::parse("shear(0.2)").unwrap().patch(grid(5)).unwrap();
        let err = continuation_run(&p, &ContinuationSchedule::new(vec![]), &SolverConfig::default());
        assert!(matches!(err, Err(Error::Range { .. })));
    }

    #[test]
    fn diamond_stays_interior() {
        let g = grid(6);
        let all: Vec<_> = diamond(&g, 1, 1).collect();
        assert!(all.iter().all(|&(i, j)| !g.is_boundary(i, j)));
        assert_eq!(diamond(&g, 2, 2).count(), 11);
        assert_eq!(diamond(&grid(7), 3, 3).count(), 13);
    }
}
