use betacrit::rescale::*;
use betacrit::{surface_fields, GridSpec, Surface};

#[test]
fn hemisphere_apex_rescales_to_unit_curvature() {
    let p = Surface::parse("hemisphere(1)").unwrap().patch(GridSpec::square(33, -0.5, 0.5).unwrap()).unwrap();
    let f = surface_fields(&p);
    let out = GridSpec::square(33, -0.5, 0.5).unwrap();
    let spec = RescaleSpec::at_node(&f, (16, 16), out).unwrap();
    let r = rescale_to_graph(&p, &spec).unwrap();
    let a2 = surface_fields(&r.patch).node(16, 16).ext.norm_a2;
    assert!((a2 - 1.0).abs() < 0.02, "{a2}");
}

#[test]
fn max_curvature_node_matches_a_brute_force_scan() {
    let p = Surface::parse("bump(0.4,0.3)").unwrap().patch(GridSpec::square(33, -1.0, 1.0).unwrap()).unwrap();
    let f = surface_fields(&p);
    let (i, j, lambda) = find_max_a(&f);
    let g = f.grid();
    let mut best = (0.0, 0, 0);
    for jj in 1..g.ny - 1 {
        for ii in 1..g.nx - 1 {
            let a = f.node(ii, jj).ext.norm_a2.sqrt();
            if a > best.0 {
                best = (a, ii, jj);
            }
        }
    }
    assert_eq!((i, j), (best.1, best.2));
    assert_eq!(lambda, best.0);
}

#[test]
fn z2_stays_holomorphic_after_rescaling() {
    for n in [33, 65] {
        let p = Surface::parse("holomorphic_z2(1)").unwrap().patch(GridSpec::square(n, -1.0, 1.0).unwrap()).unwrap();
        let f = surface_fields(&p);
        assert!(holomorphy_deficit(&f) <= 1e-12);
        let spec = RescaleSpec::at_max_curvature(&f, GridSpec::square(17, -0.5, 0.5).unwrap()).unwrap();
        let r = rescale_to_graph(&p, &spec).unwrap();
        assert!(r.unitary);
        assert!(holomorphy_deficit(&surface_fields(&r.patch)) <= 1e-10);
    }
}

#[test]
fn unitary_rescale_preserves_the_centre_angle() {
    let mut prev = f64::INFINITY;
    for n in [33, 65] {
        let p = Surface::parse("shear(0.5)+bump(0.3,0.4)").unwrap().patch(GridSpec::square(n, -1.0, 1.0).unwrap()).unwrap();
        let f = surface_fields(&p);
        let spec = RescaleSpec::at_max_curvature(&f, GridSpec::square(n, -0.5, 0.5).unwrap()).unwrap();
        let r = rescale_to_graph(&p, &spec).unwrap();
        assert!(r.unitary);
        let before = f.node(spec.center.0, spec.center.1).kahler.cos_alpha;
        let after = surface_fields(&r.patch).node(n / 2, n / 2).kahler.cos_alpha;
        let d = (before - after).abs();
        assert!(d < prev / 3.0 || d < 1e-10, "n={n}: {d}");
        prev = d;
    }
}

#[test]
fn deficit_is_scale_invariant() {
    let p = Surface::parse("shear(0.5)+bump(0.3,0.4)").unwrap().patch(GridSpec::square(33, -1.0, 1.0).unwrap()).unwrap();
    let a = holomorphy_deficit(&surface_fields(&p));
    let b = holomorphy_deficit(&surface_fields(&p.scaled(2.0).unwrap()));
    assert!((a - b).abs() < 1e-12);
}
