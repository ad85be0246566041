//! Extrinsic-ball quantities of the monotonicity formula in flat ambient space.
//!
//! The surface is taken piecewise linear over the grid (two triangles per cell). Each
//! triangle is clipped exactly against the ball, which in the triangle's plane is a disk,
//! and nodal integrands are interpolated linearly at the centroid of the clipped piece.

use rayon::prelude::*;

use super::boundary_distance;
use crate::error::{Error, Result};
use crate::geometry::{SurfaceFields, Vec4};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BallStat {
    pub center: [f64; 4],
    pub radius: f64,
    pub area_in_ball: f64,
    /// `Area(B_s ∩ Σ) / s²`.
    pub ratio: f64,
    /// `∫ |∇⊥r|²/r²` over the annulus from the previous radius (or 0) to this one.
    pub annulus_term: f64,
    /// `∫ s⁻³/2 ∫_{B_s} H(r²) dμ ds` over the same radius interval.
    pub h_term: f64,
    /// `∫_{B_s} |H|²`.
    pub h2_in_ball: f64,
    /// `∫_{B_s} |∇⊥r|²/r²`.
    pub cumulative_annulus: f64,
    /// `½(∫_{B_s} ⟨H, X−c⟩/r² − s⁻² ∫_{B_s} ⟨H, X−c⟩)`; differences give `h_term`.
    pub cumulative_h: f64,
}

const N_INTEGRANDS: usize = 4;

/// Nodal integrands: `|∇⊥r|²/r²`, `⟨H, X−c⟩`, `⟨H, X−c⟩/r²`, `|H|²`.
fn integrands(fields: &SurfaceFields, c: &Vec4) -> Vec<[f64; N_INTEGRANDS]> {
    fields
        .positions()
        .iter()
        .zip(fields.nodes())
        .map(|(p, n)| {
            let v = p - c;
            let r2 = v.norm_squared();
            let h = n.ext.mean_curvature;
            let phi = h.dot(&v);
            if r2 <= f64::EPSILON * f64::EPSILON {
                // removable at the center; the cell it sits in has area O(h²)
                return [0.0, 0.0, 0.0, h.norm_squared()];
            }
            let perp = n.ext.normal_projection(&v).norm_squared();
            [perp / (r2 * r2), phi, phi / r2, h.norm_squared()]
        })
        .collect()
}

#[inline]
fn cross(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

/// Signed area and first moments of `disk(0, ρ) ∩ triangle(0, a, b)`.
fn wedge(a: (f64, f64), b: (f64, f64), rho2: f64) -> (f64, f64, f64) {
    let d = (b.0 - a.0, b.1 - a.1);
    let qa = d.0 * d.0 + d.1 * d.1;
    if qa == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let qb = 2.0 * (a.0 * d.0 + a.1 * d.1);
    let qc = a.0 * a.0 + a.1 * a.1 - rho2;
    let mut ts = vec![0.0];
    let disc = qb * qb - 4.0 * qa * qc;
    if disc > 0.0 {
        let sq = disc.sqrt();
        for t in [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)] {
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    ts.push(1.0);
    let rho = rho2.sqrt();
    let mut out = (0.0, 0.0, 0.0);
    for w in ts.windows(2) {
        let p = (a.0 + w[0] * d.0, a.1 + w[0] * d.1);
        let q = (a.0 + w[1] * d.0, a.1 + w[1] * d.1);
        let m = (0.5 * (p.0 + q.0), 0.5 * (p.1 + q.1));
        if m.0 * m.0 + m.1 * m.1 <= rho2 {
            let area = 0.5 * cross(p, q);
            out.0 += area;
            out.1 += area * (p.0 + q.0) / 3.0;
            out.2 += area * (p.1 + q.1) / 3.0;
        } else {
            let t1 = p.1.atan2(p.0);
            let dt = cross(p, q).atan2(p.0 * q.0 + p.1 * q.1);
            let k = rho * rho2 / 3.0;
            out.0 += 0.5 * rho2 * dt;
            out.1 += k * ((t1 + dt).sin() - t1.sin());
            out.2 += k * (t1.cos() - (t1 + dt).cos());
        }
    }
    out
}

/// Area of `triangle ∩ B_s(c)` and barycentric coordinates of its centroid.
fn clip_triangle(p: [&Vec4; 3], c: &Vec4, s: f64) -> Option<(f64, [f64; 3])> {
    let u = p[1] - p[0];
    let l1 = u.norm();
    if l1 == 0.0 {
        return None;
    }
    let e1 = u / l1;
    let w = p[2] - p[0];
    let w1 = w.dot(&e1);
    let perp = w - e1 * w1;
    let w2 = perp.norm();
    if w2 == 0.0 {
        return None;
    }
    let e2 = perp / w2;
    let q = c - p[0];
    let (q1, q2) = (q.dot(&e1), q.dot(&e2));
    let d2 = (q.norm_squared() - q1 * q1 - q2 * q2).max(0.0);
    let rho2 = s * s - d2;
    if rho2 <= 0.0 {
        return None;
    }
    let a = [(-q1, -q2), (l1 - q1, -q2), (w1 - q1, w2 - q2)];
    let full = 0.5 * l1 * w2;
    let (area, mx, my) = if a.iter().all(|v| v.0 * v.0 + v.1 * v.1 <= rho2) {
        (full, full * (a[0].0 + a[1].0 + a[2].0) / 3.0, full * (a[0].1 + a[1].1 + a[2].1) / 3.0)
    } else {
        let mut acc = (0.0, 0.0, 0.0);
        for k in 0..3 {
            let (da, dx, dy) = wedge(a[k], a[(k + 1) % 3], rho2);
            acc = (acc.0 + da, acc.1 + dx, acc.2 + dy);
        }
        acc
    };
    if area <= 0.0 {
        return None;
    }
    // centroid in the frame with origin p[0]: solve for barycentric weights
    let (gx, gy) = (mx / area + q1, my / area + q2);
    let l2 = gy / w2;
    let l1b = (gx - l2 * w1) / l1;
    Some((area.min(full), [1.0 - l1b - l2, l1b, l2]))
}

/// Area and integrals of the nodal integrands over `B_s(c) ∩ Σ`.
fn ball_integrals(fields: &SurfaceFields, vals: &[[f64; N_INTEGRANDS]], c: &Vec4, s: f64) -> [f64; 5] {
    let grid = fields.grid();
    let cells: Vec<(usize, usize)> =
        (0..grid.ny - 1).flat_map(|j| (0..grid.nx - 1).map(move |i| (i, j))).collect();
    let per_cell: Vec<[f64; 5]> = cells
        .par_iter()
        .map(|&(i, j)| {
            let k00 = grid.index(i, j);
            let k10 = grid.index(i + 1, j);
            let k11 = grid.index(i + 1, j + 1);
            let k01 = grid.index(i, j + 1);
            let pos = fields.positions();
            let mut acc = [0.0; 5];
            for tri in [[k00, k10, k11], [k00, k11, k01]] {
                if let Some((area, bary)) = clip_triangle([&pos[tri[0]], &pos[tri[1]], &pos[tri[2]]], c, s) {
                    acc[0] += area;
                    for m in 0..N_INTEGRANDS {
                        let v: f64 = (0..3).map(|t| bary[t] * vals[tri[t]][m]).sum();
                        acc[m + 1] += area * v;
                    }
                }
            }
            acc
        })
        .collect();
    // fixed summation order keeps results independent of thread scheduling
    per_cell.iter().fold([0.0; 5], |mut a, v| {
        for m in 0..5 {
            a[m] += v[m];
        }
        a
    })
}

/// Ball statistics for ascending radii about an ambient center.
pub fn ball_stats(fields: &SurfaceFields, center: Vec4, radii: &[f64]) -> Result<Vec<BallStat>> {
    if radii.is_empty() {
        return Err(Error::InvalidArgument("no radii given".into()));
    }
    if radii.iter().any(|s| !(s.is_finite() && *s > 0.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("radii must be positive and strictly ascending".into()));
    }
    let s_max = *radii.last().expect("nonempty");
    if boundary_distance(fields, &center) < s_max {
        return Err(Error::BallEscapesPatch { radius: s_max });
    }
    let vals = integrands(fields, &center);
    let mut out: Vec<BallStat> = Vec::with_capacity(radii.len());
    for &s in radii {
        let [area, p, q, w, h2] = ball_integrals(fields, &vals, &center, s);
        let g = 0.5 * (w - q / (s * s));
        let (p0, g0) = out.last().map_or((0.0, 0.0), |b| (b.cumulative_annulus, b.cumulative_h));
        out.push(BallStat {
            center: [center[0], center[1], center[2], center[3]],
            radius: s,
            area_in_ball: area,
            ratio: area / (s * s),
            annulus_term: p - p0,
            h_term: g - g0,
            h2_in_ball: h2,
            cumulative_annulus: p,
            cumulative_h: g,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MonotonicityPair {
    pub s1: f64,
    pub s2: f64,
    pub annulus_term: f64,
    pub h_term: f64,
    /// `ratio(s₂) − ratio(s₁) − annulus_term − h_term`.
    pub slack: f64,
    pub relative_slack: f64,
    pub monotonicity_holds: bool,
    /// `ratio(s₁) + annulus_term`.
    pub doubling_lhs: f64,
    /// `2(ratio(s₂) + ∫_{B_{s₂}}|H|²)`.
    pub doubling_rhs: f64,
    pub doubling_holds: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MonotonicityReport {
    pub tol_quad: f64,
    pub pairs: Vec<MonotonicityPair>,
}

impl MonotonicityReport {
    pub fn holds(&self) -> bool {
        self.pairs.iter().all(|p| p.monotonicity_holds && p.doubling_holds)
    }

    pub fn min_relative_slack(&self) -> f64 {
        self.pairs.iter().map(|p| p.relative_slack).fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_slack(&self) -> f64 {
        self.pairs.iter().map(|p| p.slack.abs()).fold(0.0, f64::max)
    }
}

/// Slack of the monotonicity identity for every radius pair; a pair passes when
/// `slack ≥ −tol_quad · ratio(s₂)`.
pub fn monotonicity_check(stats: &[BallStat], tol_quad: f64) -> Result<MonotonicityReport> {
    if stats.len() < 2 {
        return Err(Error::InvalidArgument("monotonicity needs at least two radii".into()));
    }
    if stats.windows(2).any(|w| w[0].center != w[1].center || w[1].radius <= w[0].radius) {
        return Err(Error::InvalidArgument("stats must share a center and ascend in radius".into()));
    }
    let mut pairs = Vec::new();
    for (k, a) in stats.iter().enumerate() {
        for b in &stats[k + 1..] {
            let annulus = b.cumulative_annulus - a.cumulative_annulus;
            let h_term = b.cumulative_h - a.cumulative_h;
            let slack = b.ratio - a.ratio - annulus - h_term;
            let lhs = a.ratio + annulus;
            let rhs = 2.0 * (b.ratio + b.h2_in_ball);
            pairs.push(MonotonicityPair {
                s1: a.radius,
                s2: b.radius,
                annulus_term: annulus,
                h_term,
                slack,
                relative_slack: slack / b.ratio,
                monotonicity_holds: slack >= -tol_quad * b.ratio,
                doubling_lhs: lhs,
                doubling_rhs: rhs,
                doubling_holds: lhs <= rhs,
            });
        }
    }
    Ok(MonotonicityReport { tol_quad, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{surface_fields, GridSpec, Surface};
    use std::f64::consts::PI;

    fn fields(spec: &str, n: usize) -> SurfaceFields {
        let p = Surface::parse(spec).unwrap().patch(GridSpec::square(n, -1.0, 1.0).unwrap()).unwrap();
        surface_fields(&p)
    }

    #[test]
    fn wedge_of_full_disk_quadrants() {
        // square [-2,2]² around a unit disk, as four wedges
        let c = [(2.0, -2.0), (2.0, 2.0), (-2.0, 2.0), (-2.0, -2.0)];
        let mut area = 0.0;
        for k in 0..4 {
            area += wedge(c[k], c[(k + 1) % 4], 1.0).0;
        }
        assert!((area - PI).abs() < 1e-14);
    }

    #[test]
    fn clipped_half_triangle() {
        // right triangle with the hypotenuse far outside: quarter disk of radius 1
        let o = Vec4::zeros();
        let a = Vec4::new(5.0, 0.0, 0.0, 0.0);
        let b = Vec4::new(0.0, 5.0, 0.0, 0.0);
        let (area, bary) = clip_triangle([&o, &a, &b], &o, 1.0).unwrap();
        assert!((area - PI / 4.0).abs() < 1e-14);
        // centroid of a quarter disk sits at 4/(3π) on each axis
        let g = 4.0 / (3.0 * PI);
        assert!((bary[1] * 5.0 - g).abs() < 1e-14 && (bary[2] * 5.0 - g).abs() < 1e-14);
    }

    #[test]
    fn plane_ratio_is_pi() {
        for spec in ["affine(0,0,0,0)", "shear(1)", "affine(0.3,0.2,-0.5,0.1)"] {
            let f = fields(spec, 17);
            let stats = ball_stats(&f, Vec4::zeros(), &[0.2, 0.35, 0.5]).unwrap();
            for s in &stats {
                assert!((s.ratio - PI).abs() < 1e-12, "{spec}: {}", s.ratio);
                assert!(s.annulus_term.abs() < 1e-12 && s.h_term.abs() < 1e-12);
            }
            let rep = monotonicity_check(&stats, 0.05).unwrap();
            assert!(rep.holds() && rep.max_abs_slack() < 1e-12);
        }
    }

    #[test]
    fn area_is_nondecreasing() {
        let f = fields("holomorphic_z2(0.5)", 33);
        let stats = ball_stats(&f, Vec4::zeros(), &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!(stats.windows(2).all(|w| w[1].area_in_ball >= w[0].area_in_ball));
        assert!(stats.iter().all(|s| s.annulus_term >= 0.0));
    }

    #[test]
    fn rejects_bad_radii_and_escape() {
        let f = fields("affine(0,0,0,0)", 9);
        assert!(ball_stats(&f, Vec4::zeros(), &[0.3, 0.2]).is_err());
        assert!(matches!(ball_stats(&f, Vec4::zeros(), &[0.5, 1.2]), Err(Error::BallEscapesPatch { .. })));
        let one = ball_stats(&f, Vec4::zeros(), &[0.5]).unwrap();
        assert!(monotonicity_check(&one, 0.05).is_err());
    }
}
