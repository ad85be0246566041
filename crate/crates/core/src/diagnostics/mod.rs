//! Scalars and inequalities tracked along a family of critical surfaces.

mod ball;

pub use ball::{ball_stats, monotonicity_check, BallStat, MonotonicityPair, MonotonicityReport};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{SurfaceFields, Vec4};
use crate::grid::GridSpec;
use crate::residual::{
    ealpha_residual, energy_report, jet_cos_gradient, residual_unchecked, EALPHA_RESIDUAL_WARN,
};

pub const CSV_HEADER: &str = "beta,min_cos_alpha,lq_mass,total_A2,total_H2,sup_A,area,l_beta,gauss_res,ealpha_res";

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DiagnosticsRecord {
    pub beta: f64,
    pub min_cos_alpha: f64,
    /// `∫ cos^{-q}α dμ`.
    pub lq_mass: f64,
    pub total_a2: f64,
    pub total_h2: f64,
    pub sup_a: f64,
    pub area: f64,
    pub l_beta: f64,
    /// Sup of `|K_brioschi − ½(|H|² − |A|²)|` over nodes two or more away from the boundary.
    pub gauss_residual_sup: f64,
    pub ealpha_residual_sup: f64,
}

impl DiagnosticsRecord {
    pub fn values(&self) -> [f64; 10] {
        [
            self.beta,
            self.min_cos_alpha,
            self.lq_mass,
            self.total_a2,
            self.total_h2,
            self.sup_a,
            self.area,
            self.l_beta,
            self.gauss_residual_sup,
            self.ealpha_residual_sup,
        ]
    }

    /// One CSV row matching [`CSV_HEADER`], 17 significant digits per value.
    pub fn csv_row(&self) -> String {
        self.values().iter().map(|v| format_f64(*v)).collect::<Vec<_>>().join(",")
    }
}

/// Round-trip decimal formatting used in every CSV artifact.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn diagnostics_record(fields: &SurfaceFields, beta: f64, q: f64) -> Result<DiagnosticsRecord> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::InvalidArgument(format!("q must be positive, got {q}")));
    }
    let energy = energy_report(fields, beta, q)?;
    let (mut total_a2, mut total_h2, mut sup_a) = (0.0, 0.0, 0.0f64);
    for n in fields.nodes() {
        total_a2 += n.weight * n.ext.norm_a2;
        total_h2 += n.weight * n.ext.norm_h2();
        sup_a = sup_a.max(n.norm_a());
    }
    Ok(DiagnosticsRecord {
        beta,
        min_cos_alpha: energy.min_cos_alpha,
        lq_mass: energy.lq_mass,
        total_a2,
        total_h2,
        sup_a,
        area: energy.area,
        l_beta: energy.l_beta,
        gauss_residual_sup: gauss_residual_sup(fields),
        ealpha_residual_sup: ealpha_residual(fields, beta)?.sup_norm,
    })
}

fn deep_nodes(grid: &GridSpec) -> impl Iterator<Item = (usize, usize)> + '_ {
    grid.interior_nodes().filter(|&(i, j)| grid.depth(i, j) >= 2)
}

/// Sup over nodes with depth ≥ 2 of the intrinsic/extrinsic curvature mismatch; 0 if none.
pub fn gauss_residual_sup(fields: &SurfaceFields) -> f64 {
    deep_nodes(fields.grid())
        .map(|(i, j)| {
            let k = fields.brioschi(i, j).expect("deep node");
            (k - fields.node(i, j).ext.gauss).abs()
        })
        .fold(0.0, f64::max)
}

/// `(∫K_brioschi, ∫½(|H|² − |A|²))` over nodes with depth ≥ 2.
pub fn gauss_bonnet_check(fields: &SurfaceFields) -> (f64, f64) {
    let mut out = (0.0, 0.0);
    for (i, j) in deep_nodes(fields.grid()) {
        let n = fields.node(i, j);
        out.0 += n.weight * fields.brioschi(i, j).expect("deep node");
        out.1 += n.weight * n.ext.gauss;
    }
    out
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HBoundReport {
    #[serde(skip)]
    grid: GridSpec,
    /// `|H| − β sinα |∇cosα| / cos²α` per interior node, row-major.
    pub values: Vec<f64>,
    /// Sup over interior nodes of the absolute discrepancy.
    pub sup_discrepancy: f64,
    pub input_residual: f64,
    pub warning: bool,
}

/// On a critical surface `|H| = β (sin²α / cos²α) |∇α|`; reports the worst nodal mismatch.
pub fn pointwise_h_bound_check(fields: &SurfaceFields, beta: f64) -> Result<HBoundReport> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be finite and >= 0, got {beta}")));
    }
    fields.check_symplectic()?;
    let grid = *fields.grid();
    let input_residual = residual_unchecked(fields, beta).sup_norm;
    let mut sup = 0.0f64;
    let mut values = Vec::with_capacity(grid.interior_count());
    for (i, j) in grid.interior_nodes() {
        let n = fields.node(i, j);
        // differentiated through the jet, not from the nodal cosα field the residual uses
        let dcos = jet_cos_gradient(&n.jet);
        let grad = n.fund.inner_dual(dcos, dcos).max(0.0).sqrt();
        let c = n.kahler.cos_alpha;
        let rhs = beta * n.kahler.sin2_alpha.max(0.0).sqrt() * grad / (c * c);
        let v = n.ext.norm_h2().sqrt() - rhs;
        sup = sup.max(v.abs());
        values.push(v);
    }
    Ok(HBoundReport { grid, values, sup_discrepancy: sup, input_residual, warning: input_residual > EALPHA_RESIDUAL_WARN })
}

impl HBoundReport {
    pub fn sup_in_window(&self, fraction: f64) -> f64 {
        self.grid
            .interior_nodes()
            .filter(|&(i, j)| self.grid.in_central_window(i, j, fraction))
            .map(|(i, j)| self.values[self.grid.interior_index(i, j)].abs())
            .fold(0.0, f64::max)
    }
}

/// Radial test function `h = (1 − ρ²/w²)²` on the parameter plane.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TestBump {
    pub center: (f64, f64),
    pub width: f64,
}

impl TestBump {
    /// Value and parameter gradient.
    pub fn eval(&self, x: f64, y: f64) -> (f64, (f64, f64)) {
        let (dx, dy) = (x - self.center.0, y - self.center.1);
        let t = (dx * dx + dy * dy) / (self.width * self.width);
        if t >= 1.0 {
            return (0.0, (0.0, 0.0));
        }
        let s = 1.0 - t;
        let k = -4.0 * s / (self.width * self.width);
        (s * s, (k * dx, k * dy))
    }

    fn fits(&self, grid: &GridSpec) -> bool {
        let (cx, cy) = self.center;
        cx - self.width > grid.origin.0
            && cx + self.width < grid.x_max()
            && cy - self.width > grid.origin.1
            && cy + self.width < grid.y_max()
    }
}

/// Bumps centered on a 3×3 lattice at quarter points of the domain, one per width,
/// keeping only those supported strictly inside.
pub fn standard_bumps(grid: &GridSpec, widths: &[f64]) -> Vec<TestBump> {
    let (lx, ly) = (grid.x_max() - grid.origin.0, grid.y_max() - grid.origin.1);
    let mut out = Vec::new();
    for &w in widths {
        for b in 1..4 {
            for a in 1..4 {
                let center = (grid.origin.0 + lx * a as f64 / 4.0, grid.origin.1 + ly * b as f64 / 4.0);
                let bump = TestBump { center, width: w * lx.min(ly) };
                if bump.fits(grid) {
                    out.push(bump);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SobolevReport {
    /// `(∫h²)^{1/2} / ∫(|∇h| + |H|h)` per test function; `None` for vanishing ones.
    pub ratios: Vec<Option<f64>>,
    pub sup_ratio: f64,
    pub bound: f64,
    pub within_bound: bool,
}

pub fn sobolev_ratio(fields: &SurfaceFields, bumps: &[TestBump], bound: f64) -> Result<SobolevReport> {
    let grid = *fields.grid();
    let ratios: Vec<Option<f64>> = bumps
        .iter()
        .map(|b| {
            let (mut l2, mut l1) = (0.0, 0.0);
            for k in 0..grid.len() {
                let (i, j) = grid.coords(k);
                let (h, dh) = b.eval(grid.x(i), grid.y(j));
                if h == 0.0 && dh == (0.0, 0.0) {
                    continue;
                }
                let n = &fields.nodes()[k];
                let grad = n.fund.inner_dual(dh, dh).max(0.0).sqrt();
                l2 += n.weight * h * h;
                l1 += n.weight * (grad + n.ext.norm_h2().sqrt() * h);
            }
            (l2 > 0.0 && l1 > 0.0).then(|| l2.sqrt() / l1)
        })
        .collect();
    let sup_ratio = ratios.iter().flatten().fold(0.0f64, |m, v| m.max(*v));
    if !sup_ratio.is_finite() {
        return Err(Error::InvalidArgument("non-finite Sobolev ratio".into()));
    }
    Ok(SobolevReport { ratios, sup_ratio, bound, within_bound: sup_ratio <= bound })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConcentrationReport {
    pub epsilon: f64,
    pub radius: f64,
    /// Local mass `ν` at every node, row-major.
    pub masses: Vec<f64>,
    /// Nodes with `ν ≥ ε`, row-major, with their masses.
    pub flagged: Vec<(usize, usize, f64)>,
}

/// `ν(x) = Σ w·|A|²` over nodes within extrinsic distance `r` of `F(x)`.
pub fn local_masses(fields: &SurfaceFields, r: f64) -> Result<Vec<f64>> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    let pos = fields.positions();
    let dens: Vec<f64> = fields.nodes().iter().map(|n| n.weight * n.ext.norm_a2).collect();
    let r2 = r * r;
    Ok(pos
        .par_iter()
        .map(|p| pos.iter().zip(&dens).filter(|(q, _)| (*q - p).norm_squared() < r2).map(|(_, d)| d).sum())
        .collect())
}

pub fn concentration_map(fields: &SurfaceFields, r: f64, epsilon: f64) -> Result<ConcentrationReport> {
    let masses = local_masses(fields, r)?;
    let grid = fields.grid();
    let flagged = masses
        .iter()
        .enumerate()
        .filter(|(_, m)| **m >= epsilon)
        .map(|(k, m)| {
            let (i, j) = grid.coords(k);
            (i, j, *m)
        })
        .collect();
    Ok(ConcentrationReport { epsilon, radius: r, masses, flagged })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MoserReport {
    pub sup_inv_cos: f64,
    pub lq_mass: f64,
    /// `sup(1/cosα) / lq_mass^{1/q}`.
    pub ratio: f64,
}

pub fn moser_report(fields: &SurfaceFields, q: f64) -> Result<MoserReport> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::InvalidArgument(format!("q must be positive, got {q}")));
    }
    let e = energy_report(fields, 0.0, q)?;
    let sup_inv_cos = 1.0 / e.min_cos_alpha;
    Ok(MoserReport { sup_inv_cos, lq_mass: e.lq_mass, ratio: sup_inv_cos / e.lq_mass.powf(1.0 / q) })
}

/// Distance from `c` to the image of the patch boundary (piecewise linear).
pub(crate) fn boundary_distance(fields: &SurfaceFields, c: &Vec4) -> f64 {
    let grid = fields.grid();
    let (nx, ny) = (grid.nx, grid.ny);
    let mut ring: Vec<(usize, usize)> = (0..nx).map(|i| (i, 0)).collect();
    ring.extend((1..ny).map(|j| (nx - 1, j)));
    ring.extend((0..nx - 1).rev().map(|i| (i, ny - 1)));
    ring.extend((1..ny - 1).rev().map(|j| (0, j)));
    ring.push((0, 0));
    ring.windows(2)
        .map(|w| {
            let (a, b) = (fields.position(w[0].0, w[0].1), fields.position(w[1].0, w[1].1));
            let d = b - a;
            let t = if d.norm_squared() > 0.0 { ((c - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0) } else { 0.0 };
            (a + d * t - c).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SmallEnergy {
    /// `∫_{B_{r₀}} |A|²` by node indicator.
    pub energy: f64,
    /// `sup_{0<σ≤r₀} σ² sup_{B_{r₀−σ}} |A|²`.
    pub sigma_sup: f64,
}

pub fn small_energy_scan(fields: &SurfaceFields, center: Vec4, r0: f64) -> Result<SmallEnergy> {
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(Error::InvalidArgument(format!("r0 must be positive, got {r0}")));
    }
    if boundary_distance(fields, &center) < r0 {
        return Err(Error::BallEscapesPatch { radius: r0 });
    }
    let mut out = SmallEnergy { energy: 0.0, sigma_sup: 0.0 };
    for (p, n) in fields.positions().iter().zip(fields.nodes()) {
        let d = (p - center).norm();
        if d < r0 {
            out.energy += n.weight * n.ext.norm_a2;
            // node lies in B_{r₀−σ} for every σ < r₀ − d
            out.sigma_sup = out.sigma_sup.max((r0 - d).powi(2) * n.ext.norm_a2);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{surface_fields, GridSpec, Surface};

    fn fields(spec: &str, n: usize, lo: f64, hi: f64) -> SurfaceFields {
        let p = Surface::parse(spec).unwrap().patch(GridSpec::square(n, lo, hi).unwrap()).unwrap();
        surface_fields(&p)
    }

    #[test]
    fn flat_unit_square_record() {
        let r = diagnostics_record(&fields("affine(0,0,0,0)", 9, 0.0, 1.0), 1.0, 5.0).unwrap();
        assert_eq!((r.total_a2, r.total_h2, r.min_cos_alpha), (0.0, 0.0, 1.0));
        assert!((r.lq_mass - 1.0).abs() < 1e-14 && (r.area - 1.0).abs() < 1e-14);
    }

    #[test]
    fn shear_lq_mass_closed_form() {
        let r = diagnostics_record(&fields("shear(1)", 9, 0.0, 1.0), 1.0, 5.0).unwrap();
        // √det = √2 and 1/cos⁵ = (√2)⁵
        assert!((r.lq_mass - 8.0).abs() < 1e-12, "{}", r.lq_mass);
    }

    #[test]
    fn csv_row_has_ten_round_trip_fields() {
        let r = diagnostics_record(&fields("holomorphic_z2(1)", 9, -1.0, 1.0), 2.0, 5.0).unwrap();
        let row = r.csv_row();
        let parsed: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(parsed, r.values().to_vec());
        assert_eq!(CSV_HEADER.split(',').count(), 10);
    }

    #[test]
    fn h_bound_vanishes_on_plane_and_holomorphic() {
        for spec in ["affine(0.3,0.1,-0.2,0.5)", "holomorphic_z2(1)"] {
            let rep = pointwise_h_bound_check(&fields(spec, 9, -1.0, 1.0), 1.0).unwrap();
            assert!(rep.sup_discrepancy < 1e-11, "{spec}: {rep:?}");
        }
    }

    #[test]
    fn concentration_flat_is_empty() {
        let rep = concentration_map(&fields("shear(0.5)", 9, -1.0, 1.0), 0.3, 1e-12).unwrap();
        assert!(rep.flagged.is_empty());
    }

    #[test]
    fn moser_on_shear() {
        let m = moser_report(&fields("shear(1)", 9, 0.0, 1.0), 5.0).unwrap();
        assert!((m.sup_inv_cos - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn small_energy_flat_and_escape() {
        let f = fields("affine(0,0,0,0)", 17, -1.0, 1.0);
        let s = small_energy_scan(&f, Vec4::zeros(), 0.5).unwrap();
        assert_eq!((s.energy, s.sigma_sup), (0.0, 0.0));
        assert!(matches!(small_energy_scan(&f, Vec4::zeros(), 1.5), Err(Error::BallEscapesPatch { .. })));
    }

    #[test]
    fn boundary_distance_of_unit_square() {
        let f = fields("affine(0,0,0,0)", 5, -1.0, 1.0);
        let d = boundary_distance(&f, &Vec4::new(0.25, 0.0, 0.0, 0.0));
        assert!((d - 0.75).abs() < 1e-14);
    }
}
