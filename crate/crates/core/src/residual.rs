//! Euler-Lagrange residual of `L_β = ∫ cos^{-β}α dμ`, the Kähler-angle identity on
//! critical surfaces, and the discrete energies.
//!
//! The residual is the normal vector `cos³α·H − β·(J(J∇cosα)^⊤)^⊥`, reported by its
//! components along the Gram-Schmidt normal frame `(n₃, n₄)` at each interior node.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{apply_j, gradient_of, surface_fields, NodeGeometry, SurfaceFields, Vec4};
use crate::grid::{GraphPatch, GridSpec};
use crate::Jet;

/// Below this `sin²α` the point is treated as holomorphic and `|∇α|² := 0`.
pub const HOLOMORPHIC_SIN2: f64 = 1e-14;

/// Per-interior-node residual components, row-major over interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualField {
    grid: GridSpec,
    pub r3: Vec<f64>,
    pub r4: Vec<f64>,
    /// `max |r_α|` over nodes and components.
    pub sup_norm: f64,
    /// `(Σ w (r₃² + r₄²))^{1/2}` with node area weights.
    pub l2_norm: f64,
}

impl ResidualField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn at(&self, i: usize, j: usize) -> (f64, f64) {
        let n = self.grid.interior_index(i, j);
        (self.r3[n], self.r4[n])
    }

    /// Interleaved `(r₃, r₄)` per interior node, matching the solver's unknown ordering.
    pub fn interleaved(&self) -> Vec<f64> {
        self.r3.iter().zip(&self.r4).flat_map(|(a, b)| [*a, *b]).collect()
    }
}

/// Residual vector at a single node given the gradient `(∂x cosα, ∂y cosα)`.
pub(crate) fn node_residual(node: &NodeGeometry, dcos: (f64, f64), beta: f64) -> (f64, f64) {
    let fund = &node.fund;
    let ext = &node.ext;
    let c1 = fund.gi11 * dcos.0 + fund.gi12 * dcos.1;
    let c2 = fund.gi12 * dcos.0 + fund.gi22 * dcos.1;
    let grad = ext.e1 * c1 + ext.e2 * c2;
    let jt = ext.tangent_projection(fund, &apply_j(&grad));
    let w = apply_j(&jt);
    let cos = node.kahler.cos_alpha;
    let v: Vec4 = ext.mean_curvature * (cos * cos * cos) - w * beta;
    (v.dot(&ext.n3), v.dot(&ext.n4))
}

pub fn residual_field(fields: &SurfaceFields, beta: f64) -> Result<ResidualField> {
    check_beta(beta)?;
    fields.check_symplectic()?;
    Ok(residual_unchecked(fields, beta))
}

pub(crate) fn residual_unchecked(fields: &SurfaceFields, beta: f64) -> ResidualField {
    let grid = *fields.grid();
    let cos = fields.cos_alpha_field();
    let n = grid.interior_count();
    let (mut r3, mut r4) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut sup, mut l2) = (0.0f64, 0.0);
    for (i, j) in grid.interior_nodes() {
        let node = fields.node(i, j);
        let (a, b) = node_residual(node, gradient_of(&grid, &cos, i, j), beta);
        sup = sup.max(a.abs()).max(b.abs());
        l2 += node.weight * (a * a + b * b);
        r3.push(a);
        r4.push(b);
    }
    ResidualField { grid, r3, r4, sup_norm: sup, l2_norm: l2.sqrt() }
}

/// `(∂x cosα, ∂y cosα)` by the chain rule through the 2-jet.
pub(crate) fn jet_cos_gradient(jet: &Jet) -> (f64, f64) {
    let (a, b, c) = (jet.a(), jet.b(), jet.c());
    let det = a * a + b * b + c * c;
    let sd = det.sqrt();
    // ∂(a, b, c)/∂(f_x, f_y, g_x, g_y)
    let da = [0.0, 1.0, 1.0, 0.0];
    let db = [1.0, 0.0, 0.0, -1.0];
    let dc = [jet.g_y, -jet.g_x, -jet.f_y, jet.f_x];
    let dcos_dp: [f64; 4] = std::array::from_fn(|k| {
        let ddet = 2.0 * (a * da[k] + b * db[k] + c * dc[k]);
        dc[k] / sd - c * ddet / (2.0 * det * sd)
    });
    let px = [jet.f_xx, jet.f_xy, jet.g_xx, jet.g_xy];
    let py = [jet.f_xy, jet.f_yy, jet.g_xy, jet.g_yy];
    ((0..4).map(|k| dcos_dp[k] * px[k]).sum(), (0..4).map(|k| dcos_dp[k] * py[k]).sum())
}

/// Residual evaluated directly from an exact 2-jet, differentiating `cosα` by the
/// chain rule instead of from a nodal field. Used for manufactured forcing.
pub fn exact_residual(jet: &Jet, beta: f64) -> (f64, f64) {
    let (dx, dy) = jet_cos_gradient(jet);
    let grid = GridSpec::new(3, 3, 1.0, 1.0, (0.0, 0.0)).expect("unit grid");
    let node = NodeGeometry::at(*jet, &grid, 1, 1);
    node_residual(&node, (dx, dy), beta)
}

/// Integrated energies of a patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub l_beta: f64,
    pub lq_mass: f64,
    pub area: f64,
    pub min_cos_alpha: f64,
}

pub fn energy_report(fields: &SurfaceFields, beta: f64, q: f64) -> Result<EnergyReport> {
    fields.check_symplectic()?;
    let mut rep = EnergyReport { l_beta: 0.0, lq_mass: 0.0, area: 0.0, min_cos_alpha: f64::INFINITY };
    for n in fields.nodes() {
        let c = n.kahler.cos_alpha;
        rep.l_beta += n.weight / c.powf(beta);
        rep.lq_mass += n.weight / c.powf(q);
        rep.area += n.weight;
        rep.min_cos_alpha = rep.min_cos_alpha.min(c);
    }
    Ok(rep)
}

/// `|∇α|²` from the gradient of `cosα`, with the holomorphic-point convention.
#[inline]
pub(crate) fn grad_alpha_sq(node: &NodeGeometry, dcos: (f64, f64)) -> f64 {
    let s2 = node.kahler.sin2_alpha;
    if s2 < HOLOMORPHIC_SIN2 {
        0.0
    } else {
        node.fund.inner_dual(dcos, dcos) / s2
    }
}

/// Laplace-Beltrami of a nodal field in divergence form, `det^{-1/2} ∂ᵢ(√det g^{ij} ∂ⱼu)`,
/// with fluxes on cell faces. Defined at interior nodes.
pub(crate) fn laplace_beltrami(fields: &SurfaceFields, u: &[f64], i: usize, j: usize) -> f64 {
    let grid = fields.grid();
    let (hx, hy) = (grid.hx, grid.hy);
    let at = |di: isize, dj: isize| grid.index((i as isize + di) as usize, (j as isize + dj) as usize);
    let coef = |k: usize| {
        let f = &fields.nodes()[k].fund;
        let s = f.det.sqrt();
        (s * f.gi11, s * f.gi12, s * f.gi22)
    };
    let uy_at = |di: isize| (u[at(di, 1)] - u[at(di, -1)]) / (2.0 * hy);
    let ux_at = |dj: isize| (u[at(1, dj)] - u[at(-1, dj)]) / (2.0 * hx);

    let face_x = |s: isize| {
        // face between (i, j) and (i + s, j)
        let (a0, b0, _) = coef(at(0, 0));
        let (a1, b1, _) = coef(at(s, 0));
        let ux = (u[at(s, 0)] - u[at(0, 0)]) / hx * s as f64;
        let uy = 0.5 * (uy_at(0) + uy_at(s));
        0.5 * (a0 + a1) * ux + 0.5 * (b0 + b1) * uy
    };
    let face_y = |s: isize| {
        let (_, b0, c0) = coef(at(0, 0));
        let (_, b1, c1) = coef(at(0, s));
        let uy = (u[at(0, s)] - u[at(0, 0)]) / hy * s as f64;
        let ux = 0.5 * (ux_at(0) + ux_at(s));
        0.5 * (b0 + b1) * ux + 0.5 * (c0 + c1) * uy
    };
    let div = (face_x(1) - face_x(-1)) / hx + (face_y(1) - face_y(-1)) / hy;
    div / fields.nodes()[at(0, 0)].fund.det.sqrt()
}

/// Pointwise defect of the Kähler-angle equation on interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EalphaField {
    grid: GridSpec,
    pub values: Vec<f64>,
    pub sup_norm: f64,
    pub l2_norm: f64,
    /// Euler-Lagrange residual sup-norm of the input.
    pub input_residual: f64,
    /// Set when `input_residual` exceeds the threshold: the identity is not expected to hold.
    pub warning: bool,
}

impl EalphaField {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.interior_index(i, j)]
    }

    /// Sup-norm over interior nodes inside the central window (see [`GridSpec::in_central_window`]).
    pub fn sup_in_window(&self, fraction: f64) -> f64 {
        self.grid
            .interior_nodes()
            .filter(|&(i, j)| self.grid.in_central_window(i, j, fraction))
            .map(|(i, j)| self.at(i, j).abs())
            .fold(0.0, f64::max)
    }
}

/// Default residual threshold above which the Kähler-angle identity is flagged.
pub const EALPHA_RESIDUAL_WARN: f64 = 1e-6;

pub fn ealpha_residual(fields: &SurfaceFields, beta: f64) -> Result<EalphaField> {
    check_beta(beta)?;
    fields.check_symplectic()?;
    let grid = *fields.grid();
    let cos = fields.cos_alpha_field();
    let inv_cos: Vec<f64> = cos.iter().map(|c| 1.0 / c).collect();
    let input_residual = residual_unchecked(fields, beta).sup_norm;
    let mut values = Vec::with_capacity(grid.interior_count());
    let (mut sup, mut l2) = (0.0f64, 0.0);
    for (i, j) in grid.interior_nodes() {
        let node = fields.node(i, j);
        let c = node.kahler.cos_alpha.min(1.0);
        let s2 = node.kahler.sin2_alpha;
        let ga2 = grad_alpha_sq(node, gradient_of(&grid, &cos, i, j));
        let lap = laplace_beltrami(fields, &inv_cos, i, j);
        let v = lap - 2.0 * ga2 / (c * (c * c + beta * s2));
        sup = sup.max(v.abs());
        l2 += node.weight * v * v;
        values.push(v);
    }
    Ok(EalphaField {
        grid,
        values,
        sup_norm: sup,
        l2_norm: l2.sqrt(),
        input_residual,
        warning: input_residual > EALPHA_RESIDUAL_WARN,
    })
}

/// Smooth bump supported strictly inside the patch, drawn from `seed`.
/// Returns the `(f, g)` perturbation arrays.
pub fn stationarity_bump(grid: &GridSpec, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x0, x1) = (grid.origin.0, grid.x_max());
    let (y0, y1) = (grid.origin.1, grid.y_max());
    let (lx, ly) = (x1 - x0, y1 - y0);
    let cx = x0 + lx * rng.gen_range(0.35..0.65);
    let cy = y0 + ly * rng.gen_range(0.35..0.65);
    let radius = lx.min(ly) * rng.gen_range(0.2..0.3);
    let af: f64 = rng.gen_range(-1.0..1.0);
    let ag: f64 = rng.gen_range(-1.0..1.0);
    let mut pf = vec![0.0; grid.len()];
    let mut pg = vec![0.0; grid.len()];
    for (i, j) in grid.interior_nodes() {
        let r2 = ((grid.x(i) - cx).powi(2) + (grid.y(j) - cy).powi(2)) / (radius * radius);
        if r2 < 1.0 {
            let b = (1.0 - r2).powi(3);
            let k = grid.index(i, j);
            pf[k] = af * b;
            pg[k] = ag * b;
        }
    }
    (pf, pg)
}

/// `|d/dt L_β(F + tφ)|` at `t = 0` by a centered difference along a random bump.
pub fn energy_stationarity_test(patch: &GraphPatch, beta: f64, seed: u64) -> Result<f64> {
    check_beta(beta)?;
    let grid = *patch.grid();
    let (pf, pg) = stationarity_bump(&grid, seed);
    let scale = (grid.x_max() - grid.origin.0).max(grid.y_max() - grid.origin.1);
    let t = 1e-5 * scale;
    let energy = |s: f64| -> Result<f64> {
        let f: Vec<f64> = patch.f().iter().zip(&pf).map(|(a, b)| a + s * b).collect();
        let g: Vec<f64> = patch.g().iter().zip(&pg).map(|(a, b)| a + s * b).collect();
        let p = GraphPatch::from_arrays(grid, f, g)?;
        Ok(energy_report(&surface_fields(&p), beta, 1.0)?.l_beta)
    };
    Ok(((energy(t)? - energy(-t)?) / (2.0 * t)).abs())
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("beta must be finite and >= 0, got {beta}")))
    }
}
