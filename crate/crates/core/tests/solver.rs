use betacrit::solver::*;
use betacrit::{energy_stationarity_test, residual_field, surface_fields, GraphPatch, GridSpec, Surface};

fn patch(spec: &str, n: usize) -> GraphPatch {
    Surface::parse(spec).unwrap().patch(GridSpec::square(n, -1.0, 1.0).unwrap()).unwrap()
}

fn max_diff(a: &GraphPatch, b: &GraphPatch) -> f64 {
    a.f().iter().zip(b.f()).chain(a.g().iter().zip(b.g())).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn affine_continuation_is_the_same_plane_at_every_beta() {
    let data = patch("affine(0.2,-0.1,0.3,0.25)", 17);
    let betas: Vec<f64> = (0..=8).map(|k| 0.25 * k as f64).collect();
    let steps = continuation_run(&harmonic_extension(&data).unwrap(), &ContinuationSchedule::new(betas.clone()), &SolverConfig::default()).unwrap();
    assert_eq!(steps.iter().map(|s| s.beta).collect::<Vec<_>>(), betas);
    for s in &steps {
        assert!(max_diff(&s.patch, &data) < 1e-12, "beta {}", s.beta);
    }
}

#[test]
fn z2_continuation_stays_holomorphic() {
    let data = patch("holomorphic_z2(0.5)", 65);
    let steps = continuation_run(&harmonic_extension(&data).unwrap(), &ContinuationSchedule::new(vec![0.5, 1.0, 2.0]), &SolverConfig::default()).unwrap();
    for s in &steps {
        assert!(s.diagnostics.min_cos_alpha >= 0.99, "beta {}: {}", s.beta, s.diagnostics.min_cos_alpha);
    }
}

#[test]
fn shear_data_continuation_gives_finite_records() {
    let data = patch("shear(0.3)", 33);
    let run = continuation_run_partial(&harmonic_extension(&data).unwrap(), &ContinuationSchedule::new(vec![0.5, 1.0, 1.5, 2.0]), &SolverConfig::default()).unwrap();
    assert!(run.error.is_none());
    assert!(run.steps.iter().all(|s| s.diagnostics.values().iter().all(|v| v.is_finite())));
}

#[test]
fn z2_solve_from_harmonic_start_matches_the_holomorphic_graph() {
    let data = patch("holomorphic_z2(1)", 33);
    let (sol, rep) = newton_solve(&harmonic_extension(&data).unwrap(), &SolverConfig::with_beta(1.0)).unwrap();
    assert!(rep.converged);
    assert!(max_diff(&sol, &data) < 1e-12);
}

#[test]
fn banded_and_dense_agree() {
    let init = harmonic_extension(&patch("shear(0.3)+bump(0.3,1)", 13)).unwrap();
    let banded = newton_solve(&init, &SolverConfig::with_beta(1.0)).unwrap().0;
    let dense = newton_solve(&init, &SolverConfig { linear_solver: LinearSolver::Dense, ..SolverConfig::with_beta(1.0) }).unwrap().0;
    assert!(max_diff(&banded, &dense) < 1e-10);
}

#[test]
fn solutions_respect_the_mirror_symmetry() {
    let grid = GridSpec::rect(17, 21, (-1.0, 1.0), (-0.8, 1.2)).unwrap();
    let data = Surface::parse("shear(0.3)+bump(0.3,1)+holomorphic_z3(0.1)").unwrap().patch(grid).unwrap();
    let init = harmonic_extension(&data).unwrap();
    let config = SolverConfig::with_beta(1.0);
    let a = newton_solve(&init, &config).unwrap().0;
    let b = newton_solve(&init.mirrored().unwrap(), &config).unwrap().0.mirrored().unwrap();
    assert!(max_diff(&a, &b) < 1e-12);
}

#[test]
fn boundary_rows_are_untouched() {
    let data = patch("shear(0.3)+bump(0.3,1)", 17);
    let (sol, _) = newton_solve(&harmonic_extension(&data).unwrap(), &SolverConfig::with_beta(1.5)).unwrap();
    for &(k, f, g) in data.boundary() {
        assert_eq!((sol.f()[k], sol.g()[k]), (f, g));
    }
}

#[test]
fn stationarity_probe() {
    // exactly critical plane
    let plane = patch("affine(0.2,-0.1,0.3,0.25)", 33);
    let d = energy_stationarity_test(&plane, 1.0, 5).unwrap();
    assert!(d <= 1e-9 * 4.0, "{d}");

    // solved patches: small and shrinking like h²
    let mut prev = f64::INFINITY;
    let mut last = 0.0;
    for n in [17, 33, 65] {
        let init = harmonic_extension(&patch("shear(0.3)+bump(0.3,1)", n)).unwrap();
        let sol = newton_solve(&init, &SolverConfig::with_beta(1.0)).unwrap().0;
        let d = energy_stationarity_test(&sol, 1.0, 5).unwrap();
        assert!(d < prev / 3.0, "n={n}: {d} vs {prev}");
        prev = d;
        last = d;
    }

    // off-critical data sits far from stationarity
    let off = energy_stationarity_test(&patch("bump(0.5,0.4)", 65), 1.0, 5).unwrap();
    assert!(off > 100.0 * last, "{off} vs {last}");
}

#[test]
fn linearization_is_elliptic_and_scales_like_h2() {
    let config = SolverConfig::with_beta(1.0);
    let mut ratios = Vec::new();
    for n in [9, 17, 33] {
        let s = linearization_spectrum(&patch("affine(0.2,0.1,-0.3,0.2)", n), &config).unwrap();
        assert!(s.smallest_singular_value > 0.0);
        ratios.push(s.smallest_singular_value / s.largest_singular_value);
    }
    for w in ratios.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.7..=2.3).contains(&order), "{ratios:?}");
    }
}

#[test]
fn initial_iterate_off_floor_is_rejected() {
    let bad = patch("affine(2,0,0,-1)", 9);
    assert!(matches!(newton_solve(&bad, &SolverConfig::default()), Err(betacrit::Error::CosFloorViolated { .. })));
}

#[test]
fn residual_ignores_ambient_translation() {
    let p = patch("shear(0.5)+bump(0.3,0.4)+holomorphic_z3(0.2)", 33);
    let shifted = GraphPatch::from_arrays(*p.grid(), p.f().iter().map(|v| v + 3.7).collect(), p.g().iter().map(|v| v - 1.3).collect()).unwrap();
    let (a, b) = (residual_field(&surface_fields(&p), 1.0).unwrap(), residual_field(&surface_fields(&shifted), 1.0).unwrap());
    let d = a.r3.iter().zip(&b.r3).chain(a.r4.iter().zip(&b.r4)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(d <= 1e-12, "{d}");
}
