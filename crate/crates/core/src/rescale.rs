//! Blow-up at the curvature maximum: `Σ̃ = λ U (Σ − F(x₀))`, resampled as a graph over
//! the first two coordinates.
//!
//! `U` is unitary when the tangent plane at the center is symplectic. It sends `e₁` to
//! `∂x` and the tangent plane to the span of `∂x` and `cosα ∂y + sinα ∂₃`, which is the
//! canonical plane of Kähler angle `α`. A complex tangent plane thus lands on the
//! `(x, y)`-plane. When `cosα ≤ 0` at the center, an orthogonal rotation onto the
//! `(x, y)`-plane is used and holomorphy comparisons are flagged as meaningless.

use nalgebra::{Matrix2, Matrix4, Vector2};

use crate::error::{Error, Result};
use crate::geometry::{apply_j, surface_fields, Jet, SurfaceFields, Vec4};
use crate::grid::{GraphPatch, GridSpec};

/// Interior node of largest `|A|`; ties go to the smallest `(i, j)`.
pub fn find_max_a(fields: &SurfaceFields) -> (usize, usize, f64) {
    let grid = fields.grid();
    let mut best = (1, 1, fields.node(1, 1).norm_a());
    for (i, j) in grid.interior_nodes() {
        let v = fields.node(i, j).norm_a();
        if v > best.2 || (v == best.2 && (i, j) < (best.0, best.1)) {
            best = (i, j, v);
        }
    }
    best
}

/// `sup sin²α = sup (a² + b²)/det g` over all nodes.
pub fn holomorphy_deficit(fields: &SurfaceFields) -> f64 {
    fields.nodes().iter().map(|n| n.kahler.sin2_alpha).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaleSpec {
    pub center: (usize, usize),
    /// Scale factor, `|A|` at the center.
    pub lambda: f64,
    /// Orthonormal tangent frame at the center.
    pub frame: [Vec4; 2],
    pub output: GridSpec,
}

impl RescaleSpec {
    /// Centered at the node of largest `|A|`.
    pub fn at_max_curvature(fields: &SurfaceFields, output: GridSpec) -> Result<Self> {
        let (i, j, _) = find_max_a(fields);
        Self::at_node(fields, (i, j), output)
    }

    pub fn at_node(fields: &SurfaceFields, center: (usize, usize), output: GridSpec) -> Result<Self> {
        fields.grid().check(center.0, center.1)?;
        let n = fields.node(center.0, center.1);
        let e1 = n.ext.e1.normalize();
        let e2 = orthonormalize(n.ext.e2, &[e1]).ok_or_else(|| Error::DegenerateRescale("tangents are parallel".into()))?;
        let g = fields.grid();
        let extent = (g.x_max() - g.origin.0).max(g.y_max() - g.origin.1);
        // curvature radius beyond 1e8 patch widths is roundoff on a flat patch
        let lambda = if n.norm_a() * extent <= 1e-8 { 0.0 } else { n.norm_a() };
        let spec = RescaleSpec { center, lambda, frame: [e1, e2], output };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::DegenerateRescale(format!("lambda = {} (flat at the center)", self.lambda)));
        }
        let [e1, e2] = self.frame;
        let off = [(e1.norm() - 1.0).abs(), (e2.norm() - 1.0).abs(), e1.dot(&e2).abs()];
        if off.iter().any(|v| !(*v <= 1e-10)) {
            return Err(Error::DegenerateRescale("tangent frame is not orthonormal".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rescaled {
    pub patch: GraphPatch,
    /// Ambient rotation applied before scaling.
    pub rotation: Matrix4<f64>,
    /// False when the center was not symplectic and an orthogonal rotation was used.
    pub unitary: bool,
    pub center_cos_alpha: f64,
}

/// Gram-Schmidt of `v` against an orthonormal list; `None` if `v` lies in their span.
fn orthonormalize(v: Vec4, against: &[Vec4]) -> Option<Vec4> {
    let mut w = v;
    for a in against {
        w -= *a * a.dot(&w);
    }
    let n = w.norm();
    (n > 1e-8).then(|| w / n)
}

fn complete(against: &[Vec4]) -> Vec4 {
    (0..4)
        .filter_map(|k| orthonormalize(Vec4::ith(k, 1.0), against))
        .next()
        .expect("R⁴ has room")
}

/// Rotation whose rows are the preimages of the coordinate axes, and whether it is unitary.
pub fn tangent_rotation(frame: &[Vec4; 2]) -> (Matrix4<f64>, bool, f64) {
    let [e1, e2] = *frame;
    let je1 = apply_j(&e1);
    let cos = je1.dot(&e2);
    let rows = if cos > 0.0 {
        let w = orthonormalize(e2, &[e1, je1]).unwrap_or_else(|| complete(&[e1, je1]));
        [e1, je1, w, apply_j(&w)]
    } else {
        let n3 = complete(&[e1, e2]);
        let n4 = complete(&[e1, e2, n3]);
        [e1, e2, n3, n4]
    };
    (Matrix4::from_rows(&rows.map(|r| r.transpose())), cos > 0.0, cos)
}

/// Cubic Hermite basis on `[0, 1]`: values and first derivatives of `(h00, h10, h01, h11)`.
fn hermite(t: f64) -> ([f64; 4], [f64; 4]) {
    let (t2, t3) = (t * t, t * t * t);
    (
        [2.0 * t3 - 3.0 * t2 + 1.0, t3 - 2.0 * t2 + t, -2.0 * t3 + 3.0 * t2, t3 - t2],
        [6.0 * t2 - 6.0 * t, 3.0 * t2 - 4.0 * t + 1.0, -6.0 * t2 + 6.0 * t, 3.0 * t2 - 2.0 * t],
    )
}

/// Bicubic Hermite interpolant of `(f, g)` built from nodal jets.
struct Interpolant<'a> {
    grid: GridSpec,
    jets: Vec<&'a Jet>,
}

impl<'a> Interpolant<'a> {
    fn new(fields: &'a SurfaceFields) -> Self {
        Self { grid: *fields.grid(), jets: fields.nodes().iter().map(|n| &n.jet).collect() }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        let g = &self.grid;
        x >= g.origin.0 && x <= g.x_max() && y >= g.origin.1 && y <= g.y_max()
    }

    /// `F` and its two parameter derivatives at `(x, y)`; the point must lie in the domain.
    fn eval(&self, x: f64, y: f64) -> (Vec4, Vec4, Vec4) {
        let g = &self.grid;
        let (hx, hy) = (g.hx, g.hy);
        let ci = (((x - g.origin.0) / hx).floor() as usize).min(g.nx - 2);
        let cj = (((y - g.origin.1) / hy).floor() as usize).min(g.ny - 2);
        let t = (x - g.x(ci)) / hx;
        let s = (y - g.y(cj)) / hy;
        let (bt, dbt) = hermite(t);
        let (bs, dbs) = hermite(s);
        let (mut v, mut vx, mut vy) = ([0.0; 2], [0.0; 2], [0.0; 2]);
        for (a, b) in [(0usize, 0usize), (1, 0), (0, 1), (1, 1)] {
            let jet = self.jets[g.index(ci + a, cj + b)];
            // value / d/dx / d/dy / d²/dxdy weights of this corner
            let (p0, p1) = (bt[2 * a], bt[2 * a + 1] * hx);
            let (q0, q1) = (bs[2 * b], bs[2 * b + 1] * hy);
            let (dp0, dp1) = (dbt[2 * a] / hx, dbt[2 * a + 1]);
            let (dq0, dq1) = (dbs[2 * b] / hy, dbs[2 * b + 1]);
            let comps = [[jet.f, jet.f_x, jet.f_y, jet.f_xy], [jet.g, jet.g_x, jet.g_y, jet.g_xy]];
            for (m, c) in comps.iter().enumerate() {
                v[m] += c[0] * p0 * q0 + c[1] * p1 * q0 + c[2] * p0 * q1 + c[3] * p1 * q1;
                vx[m] += c[0] * dp0 * q0 + c[1] * dp1 * q0 + c[2] * dp0 * q1 + c[3] * dp1 * q1;
                vy[m] += c[0] * p0 * dq0 + c[1] * p1 * dq0 + c[2] * p0 * dq1 + c[3] * p1 * dq1;
            }
        }
        (
            Vec4::new(x, y, v[0], v[1]),
            Vec4::new(1.0, 0.0, vx[0], vx[1]),
            Vec4::new(0.0, 1.0, vy[0], vy[1]),
        )
    }
}

/// Rescale about `spec.center` and resample on `spec.output`, whose coordinates are
/// the rescaled, rotated ambient coordinates.
pub fn rescale_to_graph(patch: &GraphPatch, spec: &RescaleSpec) -> Result<Rescaled> {
    spec.validate()?;
    let fields = surface_fields(patch);
    let (rot, unitary, center_cos_alpha) = tangent_rotation(&spec.frame);
    let (ci, cj) = spec.center;
    let x0 = (patch.grid().x(ci), patch.grid().y(cj));
    let origin = *fields.position(ci, cj);
    let lambda = spec.lambda;
    let interp = Interpolant::new(&fields);

    let map = |x: f64, y: f64| {
        let (p, px, py) = interp.eval(x, y);
        (rot * (p - origin) * lambda, rot * px * lambda, rot * py * lambda)
    };
    let (_, px0, py0) = map(x0.0, x0.1);
    let lin = Matrix2::new(px0[0], py0[0], px0[1], py0[1]);
    let lin_inv = lin.try_inverse().ok_or(Error::InterpolationDegenerate)?;
    let orientation = lin.determinant().signum();

    let out = spec.output;
    let mut f = vec![0.0; out.len()];
    let mut g = vec![0.0; out.len()];
    for j in 0..out.ny {
        for i in 0..out.nx {
            let target = Vector2::new(out.x(i), out.y(j));
            let mut uv = Vector2::new(x0.0, x0.1) + lin_inv * target;
            let mut done = false;
            for _ in 0..60 {
                if !interp.contains(uv[0], uv[1]) {
                    return Err(Error::WindowEscapesPatch);
                }
                let (p, px, py) = map(uv[0], uv[1]);
                let jac = Matrix2::new(px[0], py[0], px[1], py[1]);
                if !(jac.determinant() * orientation > 0.0) {
                    return Err(Error::InterpolationDegenerate);
                }
                let r = Vector2::new(p[0], p[1]) - target;
                if r.norm() <= 1e-13 * (1.0 + target.norm()) {
                    let k = out.index(i, j);
                    f[k] = p[2];
                    g[k] = p[3];
                    done = true;
                    break;
                }
                uv -= jac.try_inverse().ok_or(Error::InterpolationDegenerate)? * r;
            }
            if !done {
                return Err(Error::InterpolationDegenerate);
            }
        }
    }
    Ok(Rescaled { patch: GraphPatch::from_arrays(out, f, g)?, rotation: rot, unitary, center_cos_alpha })
}
