//! Pointwise differential geometry of a discrete graph surface in flat `C²`.
//!
//! Ambient coordinates are `(x, y, u₃, u₄)` with the Euclidean metric and the
//! complex structure `J∂x = ∂y`, `J∂₃ = ∂₄`, so `ω = dx∧dy + du₃∧du₄` and a graph
//! `F = (x, y, f, g)` has `ω(∂xF, ∂yF) = c = 1 + f_x g_y − f_y g_x`.
//!
//! Derivatives use second-order central stencils in the interior and second-order
//! one-sided stencils on the boundary ring, so every jet is exact on quadratics.

use nalgebra::{Matrix2, Vector4};

use crate::error::{Error, Result};
use crate::grid::{GraphPatch, GridSpec};

pub type Vec4 = Vector4<f64>;

/// Apply the ambient complex structure.
#[inline]
pub fn apply_j(v: &Vec4) -> Vec4 {
    Vec4::new(-v[1], v[0], -v[3], v[2])
}

/// Heights and their first and second partial derivatives at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub f: f64,
    pub g: f64,
    pub f_x: f64,
    pub f_y: f64,
    pub g_x: f64,
    pub g_y: f64,
    pub f_xx: f64,
    pub f_xy: f64,
    pub f_yy: f64,
    pub g_xx: f64,
    pub g_xy: f64,
    pub g_yy: f64,
}

impl Jet {
    /// `f_y + g_x`; vanishes together with `b` exactly when `f + ig` is holomorphic.
    #[inline]
    pub fn a(&self) -> f64 {
        self.f_y + self.g_x
    }

    #[inline]
    pub fn b(&self) -> f64 {
        self.f_x - self.g_y
    }

    /// `ω(∂xF, ∂yF)`, equal to `√det g · cos α`.
    #[inline]
    pub fn c(&self) -> f64 {
        1.0 + self.f_x * self.g_y - self.f_y * self.g_x
    }

    pub fn is_finite(&self) -> bool {
        [
            self.f, self.g, self.f_x, self.f_y, self.g_x, self.g_y, self.f_xx, self.f_xy, self.f_yy,
            self.g_xx, self.g_xy, self.g_yy,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    /// Tangent vectors `∂xF`, `∂yF`.
    #[inline]
    pub fn tangents(&self) -> (Vec4, Vec4) {
        (
            Vec4::new(1.0, 0.0, self.f_x, self.g_x),
            Vec4::new(0.0, 1.0, self.f_y, self.g_y),
        )
    }

    /// Second partials `∂xxF`, `∂xyF`, `∂yyF`.
    #[inline]
    pub fn second_partials(&self) -> [Vec4; 3] {
        [
            Vec4::new(0.0, 0.0, self.f_xx, self.g_xx),
            Vec4::new(0.0, 0.0, self.f_xy, self.g_xy),
            Vec4::new(0.0, 0.0, self.f_yy, self.g_yy),
        ]
    }
}

/// Induced metric, its determinant and inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstFundamental {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    pub det: f64,
    pub gi11: f64,
    pub gi12: f64,
    pub gi22: f64,
}

impl FirstFundamental {
    #[inline]
    pub fn inverse(&self) -> Matrix2<f64> {
        Matrix2::new(self.gi11, self.gi12, self.gi12, self.gi22)
    }

    #[inline]
    pub fn metric(&self) -> Matrix2<f64> {
        Matrix2::new(self.g11, self.g12, self.g12, self.g22)
    }

    /// `g^{ij} u_i v_j` for covectors `u`, `v`.
    #[inline]
    pub fn inner_dual(&self, u: (f64, f64), v: (f64, f64)) -> f64 {
        self.gi11 * u.0 * v.0 + self.gi12 * (u.0 * v.1 + u.1 * v.0) + self.gi22 * u.1 * v.1
    }
}

pub fn first_fundamental(jet: &Jet) -> FirstFundamental {
    let g11 = 1.0 + jet.f_x * jet.f_x + jet.g_x * jet.g_x;
    let g22 = 1.0 + jet.f_y * jet.f_y + jet.g_y * jet.g_y;
    let g12 = jet.f_x * jet.f_y + jet.g_x * jet.g_y;
    let det = g11 * g22 - g12 * g12;
    let (a, b, c) = (jet.a(), jet.b(), jet.c());
    debug_assert!(
        (det - (a * a + b * b + c * c)).abs() <= 1e-10 * det.max(1.0),
        "det identity broken: {det} vs {}",
        a * a + b * b + c * c
    );
    FirstFundamental {
        g11,
        g12,
        g22,
        det,
        gi11: g22 / det,
        gi12: -g12 / det,
        gi22: g11 / det,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KahlerData {
    pub cos_alpha: f64,
    pub sin2_alpha: f64,
}

impl KahlerData {
    #[inline]
    pub fn is_symplectic(&self) -> bool {
        self.cos_alpha > 0.0
    }
}

pub fn kahler_angle(jet: &Jet, fund: &FirstFundamental) -> KahlerData {
    let (a, b) = (jet.a(), jet.b());
    KahlerData {
        cos_alpha: jet.c() / fund.det.sqrt(),
        sin2_alpha: (a * a + b * b) / fund.det,
    }
}

/// Frames, second fundamental form and curvatures at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtrinsicData {
    pub e1: Vec4,
    pub e2: Vec4,
    pub n3: Vec4,
    pub n4: Vec4,
    pub h3_11: f64,
    pub h3_12: f64,
    pub h3_22: f64,
    pub h4_11: f64,
    pub h4_12: f64,
    pub h4_22: f64,
    /// Mean curvature vector `g^{ij}(∂ᵢ∂ⱼF)^⊥`.
    pub mean_curvature: Vec4,
    /// `|A|²`.
    pub norm_a2: f64,
    /// Gauss curvature from the Gauss equation in flat ambient space.
    pub gauss: f64,
}

impl ExtrinsicData {
    #[inline]
    pub fn norm_h2(&self) -> f64 {
        self.mean_curvature.norm_squared()
    }

    pub fn tangent_projection(&self, fund: &FirstFundamental, v: &Vec4) -> Vec4 {
        let (p1, p2) = (v.dot(&self.e1), v.dot(&self.e2));
        let c1 = fund.gi11 * p1 + fund.gi12 * p2;
        let c2 = fund.gi12 * p1 + fund.gi22 * p2;
        self.e1 * c1 + self.e2 * c2
    }

    pub fn normal_projection(&self, v: &Vec4) -> Vec4 {
        self.n3 * v.dot(&self.n3) + self.n4 * v.dot(&self.n4)
    }
}

pub fn extrinsic_data(jet: &Jet, fund: &FirstFundamental) -> ExtrinsicData {
    assert!(fund.det >= 1.0 - 1e-12, "graph metric must have det >= 1");
    let (e1, e2) = jet.tangents();
    let project = |v: &Vec4| {
        let (p1, p2) = (v.dot(&e1), v.dot(&e2));
        e1 * (fund.gi11 * p1 + fund.gi12 * p2) + e2 * (fund.gi12 * p1 + fund.gi22 * p2)
    };
    let ax3 = Vec4::new(0.0, 0.0, 1.0, 0.0);
    let ax4 = Vec4::new(0.0, 0.0, 0.0, 1.0);
    let n3 = (ax3 - project(&ax3)).normalize();
    let w4 = ax4 - project(&ax4);
    let n4 = (w4 - n3 * w4.dot(&n3)).normalize();

    let [fxx, fxy, fyy] = jet.second_partials();
    let h3 = (fxx.dot(&n3), fxy.dot(&n3), fyy.dot(&n3));
    let h4 = (fxx.dot(&n4), fxy.dot(&n4), fyy.dot(&n4));

    let trace = |h: (f64, f64, f64)| fund.gi11 * h.0 + 2.0 * fund.gi12 * h.1 + fund.gi22 * h.2;
    let norm2 = |h: (f64, f64, f64)| {
        // |h|² = tr((g⁻¹h)²)
        let gi = fund.inverse();
        let hm = Matrix2::new(h.0, h.1, h.1, h.2);
        let m = gi * hm;
        (m * m).trace()
    };
    let mean_curvature = n3 * trace(h3) + n4 * trace(h4);
    let norm_a2 = norm2(h3) + norm2(h4);
    let gauss = 0.5 * (mean_curvature.norm_squared() - norm_a2);

    ExtrinsicData {
        e1,
        e2,
        n3,
        n4,
        h3_11: h3.0,
        h3_12: h3.1,
        h3_22: h3.2,
        h4_11: h4.0,
        h4_12: h4.1,
        h4_22: h4.2,
        mean_curvature,
        norm_a2,
        gauss,
    }
}

/// Finite-difference weights along one axis at position `k` of `n` nodes.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stencil {
    pub offsets: [isize; 4],
    pub weights: [f64; 4],
    pub len: usize,
}

impl Stencil {
    pub(crate) fn first(k: usize, n: usize, h: f64) -> Stencil {
        let s = 1.0 / (2.0 * h);
        if k == 0 {
            Stencil { offsets: [0, 1, 2, 0], weights: [-3.0 * s, 4.0 * s, -s, 0.0], len: 3 }
        } else if k + 1 == n {
            Stencil { offsets: [0, -1, -2, 0], weights: [3.0 * s, -4.0 * s, s, 0.0], len: 3 }
        } else {
            Stencil { offsets: [-1, 1, 0, 0], weights: [-s, s, 0.0, 0.0], len: 2 }
        }
    }

    pub(crate) fn second(k: usize, n: usize, h: f64) -> Stencil {
        let s = 1.0 / (h * h);
        let interior = k > 0 && k + 1 < n;
        if interior {
            return Stencil { offsets: [-1, 0, 1, 0], weights: [s, -2.0 * s, s, 0.0], len: 3 };
        }
        let dir: isize = if k == 0 { 1 } else { -1 };
        if n >= 4 {
            Stencil {
                offsets: [0, dir, 2 * dir, 3 * dir],
                weights: [2.0 * s, -5.0 * s, 4.0 * s, -s],
                len: 4,
            }
        } else {
            Stencil { offsets: [0, dir, 2 * dir, 0], weights: [s, -2.0 * s, s, 0.0], len: 3 }
        }
    }

    #[inline]
    pub(crate) fn iter(&self) -> impl Iterator<Item = (isize, f64)> + '_ {
        self.offsets[..self.len].iter().copied().zip(self.weights[..self.len].iter().copied())
    }
}

/// Differentiate a nodal scalar field: returns `(∂x, ∂y)` at `(i, j)`.
pub(crate) fn gradient_of(grid: &GridSpec, field: &[f64], i: usize, j: usize) -> (f64, f64) {
    let sx = Stencil::first(i, grid.nx, grid.hx);
    let sy = Stencil::first(j, grid.ny, grid.hy);
    let dx = sx.iter().map(|(o, w)| w * field[grid.index((i as isize + o) as usize, j)]).sum();
    let dy = sy.iter().map(|(o, w)| w * field[grid.index(i, (j as isize + o) as usize)]).sum();
    (dx, dy)
}

/// Second partials `(∂xx, ∂xy, ∂yy)` of a nodal scalar field at `(i, j)`.
pub(crate) fn hessian_of(grid: &GridSpec, field: &[f64], i: usize, j: usize) -> (f64, f64, f64) {
    let at = |di: isize, dj: isize| field[grid.index((i as isize + di) as usize, (j as isize + dj) as usize)];
    let xx = Stencil::second(i, grid.nx, grid.hx).iter().map(|(o, w)| w * at(o, 0)).sum();
    let yy = Stencil::second(j, grid.ny, grid.hy).iter().map(|(o, w)| w * at(0, o)).sum();
    let sx = Stencil::first(i, grid.nx, grid.hx);
    let sy = Stencil::first(j, grid.ny, grid.hy);
    let mut xy = 0.0;
    for (ox, wx) in sx.iter() {
        for (oy, wy) in sy.iter() {
            xy += wx * wy * at(ox, oy);
        }
    }
    (xx, xy, yy)
}

pub fn compute_jet(patch: &GraphPatch, i: usize, j: usize) -> Result<Jet> {
    let grid = patch.grid();
    grid.check(i, j)?;
    Ok(jet_unchecked(grid, patch.f(), patch.g(), i, j))
}

pub(crate) fn jet_unchecked(grid: &GridSpec, f: &[f64], g: &[f64], i: usize, j: usize) -> Jet {
    let k = grid.index(i, j);
    let (f_x, f_y) = gradient_of(grid, f, i, j);
    let (g_x, g_y) = gradient_of(grid, g, i, j);
    let (f_xx, f_xy, f_yy) = hessian_of(grid, f, i, j);
    let (g_xx, g_xy, g_yy) = hessian_of(grid, g, i, j);
    Jet { f: f[k], g: g[k], f_x, f_y, g_x, g_y, f_xx, f_xy, f_yy, g_xx, g_xy, g_yy }
}

/// All pointwise geometry at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeGeometry {
    pub jet: Jet,
    pub fund: FirstFundamental,
    pub kahler: KahlerData,
    pub ext: ExtrinsicData,
    /// Quadrature weight `√det · hx · hy`, halved on edges and quartered at corners.
    pub weight: f64,
}

impl NodeGeometry {
    pub fn at(jet: Jet, grid: &GridSpec, i: usize, j: usize) -> Self {
        let fund = first_fundamental(&jet);
        let kahler = kahler_angle(&jet, &fund);
        let ext = extrinsic_data(&jet, &fund);
        let weight = fund.det.sqrt() * grid.hx * grid.hy * grid.trapezoid_factor(i, j);
        NodeGeometry { jet, fund, kahler, ext, weight }
    }

    #[inline]
    pub fn norm_a(&self) -> f64 {
        self.ext.norm_a2.sqrt()
    }
}

/// Geometry of every node of a patch.
#[derive(Debug, Clone)]
pub struct SurfaceFields {
    grid: GridSpec,
    positions: Vec<Vec4>,
    nodes: Vec<NodeGeometry>,
}

pub fn surface_fields(patch: &GraphPatch) -> SurfaceFields {
    let grid = *patch.grid();
    let nodes: Vec<NodeGeometry> = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.coords(k);
            NodeGeometry::at(jet_unchecked(&grid, patch.f(), patch.g(), i, j), &grid, i, j)
        })
        .collect();
    let positions = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.coords(k);
            Vec4::from(patch.position(i, j))
        })
        .collect();
    SurfaceFields { grid, positions, nodes }
}

impl SurfaceFields {
    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> &NodeGeometry {
        &self.nodes[self.grid.index(i, j)]
    }

    #[inline]
    pub fn nodes(&self) -> &[NodeGeometry] {
        &self.nodes
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize) -> &Vec4 {
        &self.positions[self.grid.index(i, j)]
    }

    #[inline]
    pub fn positions(&self) -> &[Vec4] {
        &self.positions
    }

    pub fn area(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    pub fn cos_alpha_field(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.kahler.cos_alpha).collect()
    }

    pub fn min_cos_alpha(&self) -> f64 {
        self.nodes.iter().map(|n| n.kahler.cos_alpha).fold(f64::INFINITY, f64::min)
    }

    /// First node (row-major) whose Kähler angle leaves the symplectic class.
    pub fn check_symplectic(&self) -> Result<()> {
        match self.nodes.iter().position(|n| !(n.kahler.cos_alpha > 0.0)) {
            Some(k) => {
                let (i, j) = self.grid.coords(k);
                Err(Error::NonSymplectic { i, j, cos_alpha: self.nodes[k].kahler.cos_alpha })
            }
            None => Ok(()),
        }
    }

    /// Intrinsic curvature from the metric field alone (Brioschi formula).
    pub fn brioschi(&self, i: usize, j: usize) -> Result<f64> {
        self.grid.check(i, j)?;
        if self.grid.depth(i, j) < 2 {
            return Err(Error::NodeTooCloseToBoundary { i, j });
        }
        let metric = |di: isize, dj: isize| {
            let n = self.node((i as isize + di) as usize, (j as isize + dj) as usize);
            (n.fund.g11, n.fund.g12, n.fund.g22)
        };
        Ok(brioschi_from(metric, self.grid.hx, self.grid.hy))
    }
}

/// Brioschi formula from central differences of a metric sampled on a 3×3 block.
fn brioschi_from(metric: impl Fn(isize, isize) -> (f64, f64, f64), hx: f64, hy: f64) -> f64 {
    let e = |di, dj| metric(di, dj).0;
    let f = |di, dj| metric(di, dj).1;
    let g = |di, dj| metric(di, dj).2;
    let (e0, f0, g0) = metric(0, 0);

    let dx = |q: &dyn Fn(isize, isize) -> f64| (q(1, 0) - q(-1, 0)) / (2.0 * hx);
    let dy = |q: &dyn Fn(isize, isize) -> f64| (q(0, 1) - q(0, -1)) / (2.0 * hy);
    let dxx = |q: &dyn Fn(isize, isize) -> f64| (q(1, 0) - 2.0 * q(0, 0) + q(-1, 0)) / (hx * hx);
    let dyy = |q: &dyn Fn(isize, isize) -> f64| (q(0, 1) - 2.0 * q(0, 0) + q(0, -1)) / (hy * hy);
    let dxy = |q: &dyn Fn(isize, isize) -> f64| {
        (q(1, 1) - q(1, -1) - q(-1, 1) + q(-1, -1)) / (4.0 * hx * hy)
    };

    let (e_u, e_v, e_vv) = (dx(&e), dy(&e), dyy(&e));
    let (f_u, f_v, f_uv) = (dx(&f), dy(&f), dxy(&f));
    let (g_u, g_v, g_uu) = (dx(&g), dy(&g), dxx(&g));

    let m1 = nalgebra::Matrix3::new(
        -0.5 * e_vv + f_uv - 0.5 * g_uu,
        0.5 * e_u,
        f_u - 0.5 * e_v,
        f_v - 0.5 * g_u,
        e0,
        f0,
        0.5 * g_v,
        f0,
        g0,
    );
    let m2 = nalgebra::Matrix3::new(0.0, 0.5 * e_v, 0.5 * g_u, 0.5 * e_v, e0, f0, 0.5 * g_u, f0, g0);
    let det = e0 * g0 - f0 * f0;
    (m1.determinant() - m2.determinant()) / (det * det)
}

/// Intrinsic Gauss curvature at `(i, j)` computed from the patch directly.
pub fn brioschi_curvature(patch: &GraphPatch, i: usize, j: usize) -> Result<f64> {
    let grid = patch.grid();
    grid.check(i, j)?;
    if grid.depth(i, j) < 2 {
        return Err(Error::NodeTooCloseToBoundary { i, j });
    }
    let metric = |di: isize, dj: isize| {
        let jet = jet_unchecked(grid, patch.f(), patch.g(), (i as isize + di) as usize, (j as isize + dj) as usize);
        let m = first_fundamental(&jet);
        (m.g11, m.g12, m.g22)
    };
    Ok(brioschi_from(metric, grid.hx, grid.hy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn patch(n: usize, lo: f64, hi: f64, h: impl FnMut(f64, f64) -> (f64, f64)) -> GraphPatch {
        GraphPatch::from_fn(GridSpec::square(n, lo, hi).unwrap(), h).unwrap()
    }

    #[test]
    fn flat_plane_jet_is_zero() {
        let p = patch(5, 0.0, 1.0, |_, _| (0.0, 0.0));
        let jet = compute_jet(&p, 2, 2).unwrap();
        assert_eq!(jet, Jet::default());
        assert_eq!((jet.a(), jet.b(), jet.c()), (0.0, 0.0, 1.0));
    }

    #[test]
    fn quadratic_jet_is_exact_at_origin() {
        // unit grid with the origin at node (2, 2)
        let p = patch(5, -2.0, 2.0, |x, y| (x * x - y * y, 2.0 * x * y));
        let jet = compute_jet(&p, 2, 2).unwrap();
        assert!((jet.f_xx - 2.0).abs() < 1e-14);
        assert!((jet.f_yy + 2.0).abs() < 1e-14);
        assert!((jet.g_xy - 2.0).abs() < 1e-14);
        for v in [jet.f_x, jet.f_y, jet.g_x, jet.g_y, jet.f_xy, jet.g_xx, jet.g_yy] {
            assert!(v.abs() < 1e-14, "{v}");
        }
    }

    #[test]
    fn one_sided_stencils_are_exact_on_quadratics() {
        let p = patch(6, -1.0, 1.0, |x, y| (0.3 * x * x - 0.7 * x * y + y, y * y - x));
        for (i, j) in [(0, 0), (5, 0), (0, 5), (5, 5), (0, 3), (3, 5)] {
            let (x, y) = (p.grid().x(i), p.grid().y(j));
            let jet = compute_jet(&p, i, j).unwrap();
            assert!((jet.f_x - (0.6 * x - 0.7 * y)).abs() < 1e-12);
            assert!((jet.f_y - (-0.7 * x + 1.0)).abs() < 1e-12);
            assert!((jet.f_xx - 0.6).abs() < 1e-11);
            assert!((jet.f_xy + 0.7).abs() < 1e-11);
            assert!((jet.g_yy - 2.0).abs() < 1e-11);
            assert!((jet.g_x + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_node_is_rejected() {
        let p = patch(4, 0.0, 1.0, |_, _| (0.0, 0.0));
        assert!(matches!(compute_jet(&p, 4, 0), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn shear_metric_and_angle() {
        let p = patch(5, 0.0, 1.0, |_, y| (y, 0.0));
        let jet = compute_jet(&p, 1, 3).unwrap();
        assert!((jet.f_y - 1.0).abs() < 1e-14);
        assert_eq!((jet.a(), jet.b()), (jet.f_y, 0.0));
        let m = first_fundamental(&jet);
        assert!((m.g11 - 1.0).abs() < 1e-14 && m.g12.abs() < 1e-14 && (m.g22 - 2.0).abs() < 1e-14);
        assert!((m.det - 2.0).abs() < 1e-14);
        let k = kahler_angle(&jet, &m);
        assert!((k.cos_alpha - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn det_identity_at_saddle_point() {
        let p = patch(5, -1.0, 1.0, |x, y| (x * x - y * y, 2.0 * x * y));
        // node (4, 2) is (1, 0): f_x = 2, g_y = 2
        let jet = compute_jet(&p, 4, 2).unwrap();
        let m = first_fundamental(&jet);
        let alt = jet.a().powi(2) + jet.b().powi(2) + jet.c().powi(2);
        assert!((m.det - alt).abs() < 1e-14 * m.det);
        let inv = m.inverse() * m.metric();
        assert!((inv - Matrix2::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn holomorphic_curvatures_at_origin() {
        let p = patch(5, -2.0, 2.0, |x, y| (x * x - y * y, 2.0 * x * y));
        let jet = compute_jet(&p, 2, 2).unwrap();
        let m = first_fundamental(&jet);
        let e = extrinsic_data(&jet, &m);
        assert!(e.mean_curvature.norm() < 1e-14);
        assert!((e.norm_a2 - 16.0).abs() < 1e-12);
        assert!((e.gauss + 8.0).abs() < 1e-12);
        assert_eq!(kahler_angle(&jet, &m).cos_alpha, 1.0);
    }

    #[test]
    fn sphere_apex_curvatures() {
        let r: f64 = 2.0;
        let jet = Jet { f: r, f_xx: -1.0 / r, f_yy: -1.0 / r, ..Default::default() };
        let m = first_fundamental(&jet);
        let e = extrinsic_data(&jet, &m);
        assert!((e.mean_curvature - Vec4::new(0.0, 0.0, -2.0 / r, 0.0)).norm() < 1e-15);
        assert!((e.norm_a2 - 2.0 / (r * r)).abs() < 1e-15);
        assert!((e.gauss - 1.0 / (r * r)).abs() < 1e-15);
    }

    #[test]
    fn frame_is_orthonormal() {
        let jet = Jet { f_x: 0.7, f_y: -1.3, g_x: 2.1, g_y: 0.4, f_xx: 1.0, g_xy: -0.5, ..Default::default() };
        let m = first_fundamental(&jet);
        let e = extrinsic_data(&jet, &m);
        let t1 = e.e1.normalize();
        let t2 = (e.e2 - t1 * e.e2.dot(&t1)).normalize();
        let frame = [t1, t2, e.n3, e.n4];
        for (p, u) in frame.iter().enumerate() {
            for (q, v) in frame.iter().enumerate() {
                let want = if p == q { 1.0 } else { 0.0 };
                assert!((u.dot(v) - want).abs() < 1e-10);
            }
        }
        assert!(e.norm_h2() <= 2.0 * e.norm_a2 + 1e-12);
    }

    #[test]
    fn plane_area_and_shear_area() {
        let flat = surface_fields(&patch(11, 0.0, 1.0, |_, _| (0.0, 0.0)));
        assert!((flat.area() - 1.0).abs() < 1e-12);
        let shear = surface_fields(&patch(11, 0.0, 1.0, |_, y| (y, 0.0)));
        assert!((shear.area() - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn brioschi_needs_two_node_margin() {
        let p = patch(7, 0.0, 1.0, |_, _| (0.0, 0.0));
        assert!(matches!(brioschi_curvature(&p, 1, 3), Err(Error::NodeTooCloseToBoundary { .. })));
        assert_eq!(brioschi_curvature(&p, 3, 3).unwrap(), 0.0);
    }
}
