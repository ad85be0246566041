//! Command-line front end: `betacrit <command> --config run.toml`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{load_config, RunConfig};
use crate::diagnostics::{
    ball_stats, concentration_map, diagnostics_record, gauss_bonnet_check, monotonicity_check, moser_report,
    pointwise_h_bound_check, small_energy_scan, sobolev_ratio, standard_bumps, CSV_HEADER,
};
use crate::error::{Error, Result};
use crate::geometry::{surface_fields, SurfaceFields, Vec4};
use crate::grid::GraphPatch;
use crate::io::{csv_table, mesh_dump, write_atomic, Cell, FieldDump};
use crate::rescale::{holomorphy_deficit, rescale_to_graph, RescaleSpec};
use crate::residual::{ealpha_residual, energy_stationarity_test, residual_field};
use crate::solver::{continuation_run_partial, newton_run, SolveReport};
use crate::GridSpec;

#[derive(Debug, Parser)]
#[command(name = "betacrit", version, about = "Numerical lab for beta-symplectic critical graph surfaces in C^2")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed, overriding `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid node counts `NX,NY`, overriding `[grid]`.
    #[arg(long, global = true, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Solve the Euler-Lagrange system at one beta.
    Solve,
    /// Continue solutions along the beta schedule.
    Continue,
    /// Evaluate all diagnostics on the configured surface.
    Diagnose,
    /// Blow up at the curvature maximum and report the holomorphy deficit.
    Rescale,
    /// Ball statistics and the monotonicity slack.
    Monotonicity,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Continue => "continue",
            Command::Diagnose => "diagnose",
            Command::Rescale => "rescale",
            Command::Monotonicity => "monotonicity",
        }
    }
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected NX,NY")?;
    let nx = a.trim().parse::<usize>().map_err(|e| e.to_string())?;
    let ny = b.trim().parse::<usize>().map_err(|e| e.to_string())?;
    Ok((nx, ny))
}

#[derive(Debug, Serialize)]
struct Stage {
    name: String,
    status: String,
}

#[derive(Debug, Serialize)]
struct OutputEntry {
    file: String,
    bytes: usize,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a RunConfig,
    stages: Vec<Stage>,
    outputs: Vec<OutputEntry>,
    wall_clock_seconds: f64,
}

/// Artifacts collected in memory and written only once a command has finished.
#[derive(Default)]
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
    stages: Vec<Stage>,
}

impl Outputs {
    fn add(&mut self, name: &str, text: String) {
        self.files.push((name.to_string(), text.into_bytes()));
    }

    fn stage(&mut self, name: &str, status: impl Into<String>) {
        self.stages.push(Stage { name: name.to_string(), status: status.into() });
    }

    fn commit(self, dir: &Path, command: Command, config: &RunConfig, start: Instant) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut outputs = Vec::new();
        for (name, bytes) in &self.files {
            write_atomic(&dir.join(name), bytes)?;
            outputs.push(OutputEntry { file: name.clone(), bytes: bytes.len(), sha256: format!("{:x}", Sha256::digest(bytes)) });
        }
        let manifest = Manifest {
            tool: "betacrit",
            version: env!("CARGO_PKG_VERSION"),
            command: command.name(),
            config,
            stages: self.stages,
            outputs,
            wall_clock_seconds: start.elapsed().as_secs_f64(),
        };
        let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        write_atomic(&dir.join("manifest.json"), format!("{json}\n").as_bytes())
    }
}

/// Parse arguments, run, and return the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_contract() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let start = Instant::now();
    let path = cli.config.as_ref().ok_or_else(|| Error::InvalidArgument("--config is required".into()))?;
    let mut config = load_config(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    if let Some((nx, ny)) = cli.grid {
        config.override_grid(nx, ny)?;
    }
    let mut out = Outputs::default();
    let result = match cli.command {
        Command::Solve => solve(&config, &mut out),
        Command::Continue => continuation(&config, &mut out),
        Command::Diagnose => diagnose(&config, &mut out),
        Command::Rescale => rescale(&config, &mut out),
        Command::Monotonicity => monotonicity(&config, &mut out),
    };
    match result {
        Ok(()) => out.commit(&config.out_dir, cli.command, &config, start),
        // partial continuation records are deliberate artifacts
        Err(e) if !out.files.is_empty() => {
            out.stage("error", e.to_string());
            out.commit(&config.out_dir, cli.command, &config, start)?;
            Err(e)
        }
        Err(e) => Err(e),
    }
}

fn log_table(report: &SolveReport) -> String {
    csv_table(
        "iter,res_sup,res_l2,min_cos_alpha",
        report.log.iter().map(|l| vec![Cell::U(l.iter), Cell::F(l.res_sup), Cell::F(l.res_l2), Cell::F(l.min_cos_alpha)]),
    )
}

fn diagnostics_table(rows: &[crate::diagnostics::DiagnosticsRecord]) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for r in rows {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

fn solve(config: &RunConfig, out: &mut Outputs) -> Result<()> {
    let init = config.initial_patch()?;
    let beta = config.solver.beta;
    let run = newton_run(&init, &config.solver, None)?;
    for l in &run.report.log {
        println!("{},{:.6e},{:.6e},{:.6}", l.iter, l.res_sup, l.res_l2, l.min_cos_alpha);
    }
    if let Some(e) = run.error {
        return Err(e);
    }
    let fields = surface_fields(&run.patch);
    let record = diagnostics_record(&fields, beta, config.diagnostics.q)?;
    out.stage("solve", format!("converged in {} iterations", run.report.iterations));
    out.add("solution.csv", mesh_dump(&run.patch));
    out.add("solve_log.csv", log_table(&run.report));
    let r = &run.report;
    out.add(
        "solve_report.csv",
        csv_table(
            "beta,iterations,residual_sup,residual_l2,min_cos_alpha,converged,failure",
            [vec![
                Cell::F(beta),
                Cell::U(r.iterations),
                Cell::F(r.residual_sup),
                Cell::F(r.residual_l2),
                Cell::F(fields.min_cos_alpha()),
                Cell::B(r.converged),
                Cell::S(r.failure.clone().unwrap_or_default()),
            ]],
        ),
    );
    out.add("diagnostics.csv", diagnostics_table(&[record]));
    out.add("fields.csv", field_dump(&fields, beta)?);
    Ok(())
}

fn field_dump(fields: &SurfaceFields, beta: f64) -> Result<String> {
    let res = residual_field(fields, beta)?;
    let ealpha = ealpha_residual(fields, beta)?;
    let hb = pointwise_h_bound_check(fields, beta)?;
    let nodal = |f: &dyn Fn(&crate::NodeGeometry) -> f64| fields.nodes().iter().map(f).collect::<Vec<f64>>();
    let mut d = FieldDump::new(*fields.grid());
    d.nodal("cos_alpha", &nodal(&|n| n.kahler.cos_alpha))
        .nodal("norm_A2", &nodal(&|n| n.ext.norm_a2))
        .nodal("norm_H2", &nodal(&|n| n.ext.norm_h2()))
        .nodal("gauss", &nodal(&|n| n.ext.gauss))
        .interior("residual_3", &res.r3)
        .interior("residual_4", &res.r4)
        .interior("ealpha", &ealpha.values)
        .interior("h_bound", &hb.values);
    Ok(d.finish())
}

fn continuation(config: &RunConfig, out: &mut Outputs) -> Result<()> {
    let init = config.initial_patch()?;
    let run = continuation_run_partial(&init, &config.schedule, &config.solver)?;
    let records: Vec<_> = run.steps.iter().map(|s| s.diagnostics).collect();
    for s in &run.steps {
        println!("beta={} iterations={} residual={:.3e} min_cos_alpha={:.6}", s.beta, s.report.iterations, s.report.residual_sup, s.diagnostics.min_cos_alpha);
    }
    if let Some(last) = run.steps.last() {
        out.stage("continuation", format!("{} of {} beta values", run.steps.len(), config.schedule.beta_values.len()));
        out.add("continuation.csv", diagnostics_table(&records));
        out.add(
            "solves.csv",
            csv_table(
                "beta,iterations,residual_sup,residual_l2,converged",
                run.steps.iter().map(|s| {
                    vec![
                        Cell::F(s.beta),
                        Cell::U(s.report.iterations),
                        Cell::F(s.report.residual_sup),
                        Cell::F(s.report.residual_l2),
                        Cell::B(s.report.converged),
                    ]
                }),
            ),
        );
        let moser: Vec<Vec<Cell>> = run
            .steps
            .iter()
            .map(|s| {
                let m = moser_report(&surface_fields(&s.patch), config.diagnostics.q)?;
                Ok(vec![Cell::F(s.beta), Cell::F(m.sup_inv_cos), Cell::F(m.lq_mass), Cell::F(m.ratio)])
            })
            .collect::<Result<_>>()?;
        out.add("moser.csv", csv_table("beta,sup_inv_cos,lq_mass,ratio", moser));
        out.add("solution.csv", mesh_dump(&last.patch));
    }
    match run.error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn central_center(fields: &SurfaceFields, config: &RunConfig) -> Vec4 {
    match config.diagnostics.center {
        Some(c) => Vec4::new(c[0], c[1], c[2], c[3]),
        None => {
            let g = fields.grid();
            *fields.position(g.nx / 2, g.ny / 2)
        }
    }
}

fn diagnose(config: &RunConfig, out: &mut Outputs) -> Result<()> {
    let patch = config.surface_patch()?;
    let fields = surface_fields(&patch);
    let d = &config.diagnostics;
    let beta = config.solver.beta;
    let record = diagnostics_record(&fields, beta, d.q)?;
    out.add("diagnostics.csv", diagnostics_table(&[record]));
    out.add("fields.csv", field_dump(&fields, beta)?);

    let mut flagged = Vec::new();
    let mut summary = Vec::new();
    for &eps in &d.epsilons {
        let rep = concentration_map(&fields, d.concentration_radius, eps)?;
        summary.push(vec![Cell::F(eps), Cell::F(rep.radius), Cell::U(rep.flagged.len())]);
        for (i, j, m) in rep.flagged {
            flagged.push(vec![Cell::F(eps), Cell::U(i), Cell::U(j), Cell::F(m)]);
        }
    }
    out.add("concentration.csv", csv_table("epsilon,radius,flagged", summary));
    out.add("concentration_nodes.csv", csv_table("epsilon,i,j,mass", flagged));

    let bumps = standard_bumps(fields.grid(), &d.bump_widths);
    let sob = sobolev_ratio(&fields, &bumps, d.sobolev_bound)?;
    out.add(
        "sobolev.csv",
        csv_table(
            "center_x,center_y,width,ratio",
            bumps.iter().zip(&sob.ratios).map(|(b, r)| {
                vec![Cell::F(b.center.0), Cell::F(b.center.1), Cell::F(b.width), Cell::F(r.unwrap_or(f64::NAN))]
            }),
        ),
    );

    let center = central_center(&fields, config);
    let small: Vec<Vec<Cell>> = d
        .r0
        .iter()
        .map(|&r0| match small_energy_scan(&fields, center, r0) {
            Ok(s) => vec![Cell::F(r0), Cell::F(s.energy), Cell::F(s.sigma_sup), Cell::S("ok".into())],
            Err(Error::BallEscapesPatch { .. }) => {
                vec![Cell::F(r0), Cell::F(f64::NAN), Cell::F(f64::NAN), Cell::S("ball_escapes_patch".into())]
            }
            Err(e) => vec![Cell::F(r0), Cell::F(f64::NAN), Cell::F(f64::NAN), Cell::S(e.to_string())],
        })
        .collect();
    out.add("small_energy.csv", csv_table("r0,energy,sigma_sup,status", small));

    let moser = moser_report(&fields, d.q)?;
    let hb = pointwise_h_bound_check(&fields, beta)?;
    let (k_int, k_ext) = gauss_bonnet_check(&fields);
    let stationarity = energy_stationarity_test(&patch, beta, config.seed)?;
    let checks = [
        ("residual_sup", residual_field(&fields, beta)?.sup_norm),
        ("ealpha_sup", record.ealpha_residual_sup),
        ("h_bound_sup", hb.sup_discrepancy),
        ("gauss_res_sup", record.gauss_residual_sup),
        ("integral_K_brioschi", k_int),
        ("integral_K_gauss_equation", k_ext),
        ("holomorphy_deficit", holomorphy_deficit(&fields)),
        ("sobolev_sup_ratio", sob.sup_ratio),
        ("sobolev_bound", sob.bound),
        ("moser_sup_inv_cos", moser.sup_inv_cos),
        ("moser_lq_mass", moser.lq_mass),
        ("moser_ratio", moser.ratio),
        ("energy_derivative", stationarity),
    ];
    out.add("checks.csv", csv_table("name,value", checks.iter().map(|(k, v)| vec![Cell::S(k.to_string()), Cell::F(*v)])));
    println!("{CSV_HEADER}\n{}", record.csv_row());
    if !sob.within_bound {
        eprintln!("warning: Sobolev ratio {} exceeds bound {}", sob.sup_ratio, sob.bound);
    }
    if hb.warning {
        eprintln!("warning: input residual {:.3e} is large; criticality identities are not expected to hold", hb.input_residual);
    }
    out.stage("diagnose", "ok");
    Ok(())
}

fn rescale(config: &RunConfig, out: &mut Outputs) -> Result<()> {
    let patch = config.surface_patch()?;
    let fields = surface_fields(&patch);
    let rc = &config.rescale;
    let grid = GridSpec::square(rc.nodes, -rc.window, rc.window)?;
    let spec = match rc.center {
        Some(c) => RescaleSpec::at_node(&fields, c, grid)?,
        None => RescaleSpec::at_max_curvature(&fields, grid)?,
    };
    let res = rescale_to_graph(&patch, &spec)?;
    let after = surface_fields(&res.patch);
    let (before_def, after_def) = (holomorphy_deficit(&fields), holomorphy_deficit(&after));
    let c = (grid.nx / 2, grid.ny / 2);
    let frame = if res.unitary { "unitary" } else { "orthogonal" };
    if !res.unitary {
        eprintln!("warning: NonSymplecticCenter (cos alpha = {:.6e}); holomorphy comparison disabled", res.center_cos_alpha);
    }
    println!("deficit_before={before_def:.6e} deficit_after={after_def:.6e} lambda={:.6e} frame={frame}", spec.lambda);
    out.add("rescaled.csv", mesh_dump(&res.patch));
    out.add(
        "rescale_report.csv",
        csv_table(
            "center_i,center_j,lambda,frame,center_cos_alpha,deficit_before,deficit_after,center_A2_after",
            [vec![
                Cell::U(spec.center.0),
                Cell::U(spec.center.1),
                Cell::F(spec.lambda),
                Cell::S(frame.into()),
                Cell::F(res.center_cos_alpha),
                Cell::F(before_def),
                Cell::F(after_def),
                Cell::F(after.node(c.0, c.1).ext.norm_a2),
            ]],
        ),
    );
    out.stage("rescale", frame);
    Ok(())
}

fn monotonicity(config: &RunConfig, out: &mut Outputs) -> Result<()> {
    let patch: GraphPatch = config.surface_patch()?;
    let fields = surface_fields(&patch);
    fields.check_symplectic()?;
    let center = central_center(&fields, config);
    let stats = ball_stats(&fields, center, &config.diagnostics.radii)?;
    let report = monotonicity_check(&stats, config.diagnostics.tol_quad)?;
    out.add(
        "ball_stats.csv",
        csv_table(
            "radius,area_in_ball,ratio,annulus_term,h_term,h2_in_ball",
            stats.iter().map(|s| {
                vec![
                    Cell::F(s.radius),
                    Cell::F(s.area_in_ball),
                    Cell::F(s.ratio),
                    Cell::F(s.annulus_term),
                    Cell::F(s.h_term),
                    Cell::F(s.h2_in_ball),
                ]
            }),
        ),
    );
    out.add(
        "monotonicity.csv",
        csv_table(
            "s1,s2,annulus_term,h_term,slack,relative_slack,monotonicity_holds,doubling_lhs,doubling_rhs,doubling_holds",
            report.pairs.iter().map(|p| {
                vec![
                    Cell::F(p.s1),
                    Cell::F(p.s2),
                    Cell::F(p.annulus_term),
                    Cell::F(p.h_term),
                    Cell::F(p.slack),
                    Cell::F(p.relative_slack),
                    Cell::B(p.monotonicity_holds),
                    Cell::F(p.doubling_lhs),
                    Cell::F(p.doubling_rhs),
                    Cell::B(p.doubling_holds),
                ]
            }),
        ),
    );
    println!("pairs={} holds={} min_relative_slack={:.3e}", report.pairs.len(), report.holds(), report.min_relative_slack());
    out.stage("monotonicity", if report.holds() { "holds" } else { "violated" });
    Ok(())
}
