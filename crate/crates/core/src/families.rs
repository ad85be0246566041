//! Named analytic surface families used as boundary data and test surfaces.
//!
//! A family string is one or more terms joined by `+`, e.g. `shear(0.3)+bump(0.1,0.5)`.
//! Each family supplies exact 2-jets, which the manufactured-solution machinery needs.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::Jet;
use crate::grid::{GraphPatch, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `f = p x + q y`, `g = r x + s y`.
    Affine { p: f64, q: f64, r: f64, s: f64 },
    /// `f + i g = scale · (x + i y)²`.
    HolomorphicZ2 { scale: f64 },
    /// `f + i g = scale · (x + i y)³`.
    HolomorphicZ3 { scale: f64 },
    /// Upper hemisphere of radius `radius` in the `(x, y, u₃)` space.
    Hemisphere { radius: f64 },
    /// Gaussian bump in `f`.
    Bump { amplitude: f64, width: f64 },
    /// `f = slope · y`.
    Shear { slope: f64 },
    /// `f = A sin πx sin πy`, `g = A x y (1 − x)(1 − y)`.
    Manufactured { amplitude: f64 },
}

impl Family {
    pub fn jet(&self, x: f64, y: f64) -> Result<Jet> {
        Ok(match *self {
            Family::Affine { p, q, r, s } => Jet {
                f: p * x + q * y,
                g: r * x + s * y,
                f_x: p,
                f_y: q,
                g_x: r,
                g_y: s,
                ..Default::default()
            },
            Family::HolomorphicZ2 { scale: k } => Jet {
                f: k * (x * x - y * y),
                g: 2.0 * k * x * y,
                f_x: 2.0 * k * x,
                f_y: -2.0 * k * y,
                g_x: 2.0 * k * y,
                g_y: 2.0 * k * x,
                f_xx: 2.0 * k,
                f_yy: -2.0 * k,
                g_xy: 2.0 * k,
                ..Default::default()
            },
            Family::HolomorphicZ3 { scale: k } => Jet {
                f: k * (x * x * x - 3.0 * x * y * y),
                g: k * (3.0 * x * x * y - y * y * y),
                f_x: 3.0 * k * (x * x - y * y),
                f_y: -6.0 * k * x * y,
                g_x: 6.0 * k * x * y,
                g_y: 3.0 * k * (x * x - y * y),
                f_xx: 6.0 * k * x,
                f_xy: -6.0 * k * y,
                f_yy: -6.0 * k * x,
                g_xx: 6.0 * k * y,
                g_xy: 6.0 * k * x,
                g_yy: -6.0 * k * y,
            },
            Family::Hemisphere { radius } => {
                let s2 = radius * radius - x * x - y * y;
                if !(s2 > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "point ({x}, {y}) lies outside hemisphere({radius})"
                    )));
                }
                let s = s2.sqrt();
                let s3 = s2 * s;
                Jet {
                    f: s,
                    f_x: -x / s,
                    f_y: -y / s,
                    f_xx: -(radius * radius - y * y) / s3,
                    f_xy: -x * y / s3,
                    f_yy: -(radius * radius - x * x) / s3,
                    ..Default::default()
                }
            }
            Family::Bump { amplitude, width } => {
                let w2 = width * width;
                let v = amplitude * (-(x * x + y * y) / w2).exp();
                Jet {
                    f: v,
                    f_x: -2.0 * x / w2 * v,
                    f_y: -2.0 * y / w2 * v,
                    f_xx: (4.0 * x * x / (w2 * w2) - 2.0 / w2) * v,
                    f_xy: 4.0 * x * y / (w2 * w2) * v,
                    f_yy: (4.0 * y * y / (w2 * w2) - 2.0 / w2) * v,
                    ..Default::default()
                }
            }
            Family::Shear { slope } => Jet { f: slope * y, f_y: slope, ..Default::default() },
            Family::Manufactured { amplitude: a } => {
                let (sx, cx) = (PI * x).sin_cos();
                let (sy, cy) = (PI * y).sin_cos();
                let (px, py) = (x * (1.0 - x), y * (1.0 - y));
                let (dpx, dpy) = (1.0 - 2.0 * x, 1.0 - 2.0 * y);
                Jet {
                    f: a * sx * sy,
                    g: a * px * py,
                    f_x: a * PI * cx * sy,
                    f_y: a * PI * sx * cy,
                    g_x: a * dpx * py,
                    g_y: a * px * dpy,
                    f_xx: -a * PI * PI * sx * sy,
                    f_xy: a * PI * PI * cx * cy,
                    f_yy: -a * PI * PI * sx * sy,
                    g_xx: -2.0 * a * py,
                    g_xy: a * dpx * dpy,
                    g_yy: -2.0 * a * px,
                }
            }
        })
    }

    fn parse_term(term: &str) -> Result<Family> {
        let term = term.trim();
        let bad = |msg: String| Error::InvalidArgument(format!("surface family `{term}`: {msg}"));
        let open = term.find('(').ok_or_else(|| bad("expected name(args)".into()))?;
        if !term.ends_with(')') {
            return Err(bad("missing `)`".into()));
        }
        let name = term[..open].trim();
        let inner = &term[open + 1..term.len() - 1];
        let args: Vec<f64> = if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner
                .split(',')
                .map(|a| a.trim().parse::<f64>().map_err(|e| bad(format!("argument `{a}`: {e}"))))
                .collect::<Result<_>>()?
        };
        if args.iter().any(|a| !a.is_finite()) {
            return Err(bad("arguments must be finite".into()));
        }
        let want = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(bad(format!("expected {n} arguments, got {}", args.len())))
            }
        };
        let fam = match name {
            "affine" => {
                want(4)?;
                Family::Affine { p: args[0], q: args[1], r: args[2], s: args[3] }
            }
            "holomorphic_z2" => {
                want(1)?;
                Family::HolomorphicZ2 { scale: args[0] }
            }
            "holomorphic_z3" => {
                want(1)?;
                Family::HolomorphicZ3 { scale: args[0] }
            }
            "hemisphere" => {
                want(1)?;
                if args[0] <= 0.0 {
                    return Err(bad("radius must be positive".into()));
                }
                Family::Hemisphere { radius: args[0] }
            }
            "bump" => {
                want(2)?;
                if args[1] <= 0.0 {
                    return Err(bad("width must be positive".into()));
                }
                Family::Bump { amplitude: args[0], width: args[1] }
            }
            "shear" => {
                want(1)?;
                Family::Shear { slope: args[0] }
            }
            "manufactured" => {
                want(1)?;
                Family::Manufactured { amplitude: args[0] }
            }
            other => return Err(bad(format!("unknown family `{other}`"))),
        };
        Ok(fam)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Affine { p, q, r, s } => write!(out, "affine({p},{q},{r},{s})"),
            Family::HolomorphicZ2 { scale } => write!(out, "holomorphic_z2({scale})"),
            Family::HolomorphicZ3 { scale } => write!(out, "holomorphic_z3({scale})"),
            Family::Hemisphere { radius } => write!(out, "hemisphere({radius})"),
            Family::Bump { amplitude, width } => write!(out, "bump({amplitude},{width})"),
            Family::Shear { slope } => write!(out, "shear({slope})"),
            Family::Manufactured { amplitude } => write!(out, "manufactured({amplitude})"),
        }
    }
}

/// Sum of one or more families.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    terms: Vec<Family>,
}

impl Surface {
    pub fn parse(spec: &str) -> Result<Surface> {
        let terms = spec
            .split('+')
            .filter(|t| !t.trim().is_empty())
            .map(Family::parse_term)
            .collect::<Result<Vec<_>>>()?;
        if terms.is_empty() {
            return Err(Error::InvalidArgument("empty surface family".into()));
        }
        Ok(Surface { terms })
    }

    pub fn single(family: Family) -> Surface {
        Surface { terms: vec![family] }
    }

    pub fn terms(&self) -> &[Family] {
        &self.terms
    }

    pub fn jet(&self, x: f64, y: f64) -> Result<Jet> {
        let mut acc = Jet::default();
        for t in &self.terms {
            let j = t.jet(x, y)?;
            acc.f += j.f;
            acc.g += j.g;
            acc.f_x += j.f_x;
            acc.f_y += j.f_y;
            acc.g_x += j.g_x;
            acc.g_y += j.g_y;
            acc.f_xx += j.f_xx;
            acc.f_xy += j.f_xy;
            acc.f_yy += j.f_yy;
            acc.g_xx += j.g_xx;
            acc.g_xy += j.g_xy;
            acc.g_yy += j.g_yy;
        }
        Ok(acc)
    }

    /// Sample the surface at every node of `grid`.
    pub fn patch(&self, grid: GridSpec) -> Result<GraphPatch> {
        let mut f = vec![0.0; grid.len()];
        let mut g = vec![0.0; grid.len()];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let k = grid.index(i, j);
                let jet = self.jet(grid.x(i), grid.y(j))?;
                f[k] = jet.f;
                g[k] = jet.g;
            }
        }
        GraphPatch::from_arrays(grid, f, g)
    }
}

impl fmt::Display for Surface {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, t) in self.terms.iter().enumerate() {
            if n > 0 {
                out.write_str("+")?;
            }
            write!(out, "{t}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sums_and_round_trips() {
        let s = Surface::parse("shear(0.3) + bump(0.1, 0.5)").unwrap();
        assert_eq!(s.terms().len(), 2);
        assert_eq!(Surface::parse(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn rejects_malformed_terms() {
        for bad in ["", "shear", "shear(1,2)", "nope(1)", "bump(1,-1)", "hemisphere(0)", "shear(x)"] {
            assert!(Surface::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn analytic_jets_match_finite_differences() {
        let fams = [
            "affine(0.1,-0.2,0.3,0.4)",
            "holomorphic_z2(0.7)",
            "holomorphic_z3(0.5)",
            "hemisphere(2)",
            "bump(0.3,0.6)",
            "manufactured(0.1)",
        ];
        let h = 1e-4;
        for spec in fams {
            let s = Surface::parse(spec).unwrap();
            let (x, y) = (0.31, -0.17);
            let j = s.jet(x, y).unwrap();
            let jx = (s.jet(x + h, y).unwrap(), s.jet(x - h, y).unwrap());
            let jy = (s.jet(x, y + h).unwrap(), s.jet(x, y - h).unwrap());
            let d = |a: f64, b: f64| (a - b) / (2.0 * h);
            let close = |a: f64, b: f64| (a - b).abs() < 1e-6 * (1.0 + b.abs());
            assert!(close(d(jx.0.f, jx.1.f), j.f_x), "{spec} f_x");
            assert!(close(d(jy.0.f, jy.1.f), j.f_y), "{spec} f_y");
            assert!(close(d(jx.0.g, jx.1.g), j.g_x), "{spec} g_x");
            assert!(close(d(jy.0.g, jy.1.g), j.g_y), "{spec} g_y");
            assert!(close(d(jx.0.f_x, jx.1.f_x), j.f_xx), "{spec} f_xx");
            assert!(close(d(jy.0.f_x, jy.1.f_x), j.f_xy), "{spec} f_xy");
            assert!(close(d(jy.0.f_y, jy.1.f_y), j.f_yy), "{spec} f_yy");
            assert!(close(d(jx.0.g_x, jx.1.g_x), j.g_xx), "{spec} g_xx");
            assert!(close(d(jy.0.g_x, jy.1.g_x), j.g_xy), "{spec} g_xy");
            assert!(close(d(jy.0.g_y, jy.1.g_y), j.g_yy), "{spec} g_yy");
        }
    }

    #[test]
    fn hemisphere_outside_disk_is_an_error() {
        let s = Surface::parse("hemisphere(1)").unwrap();
        assert!(s.jet(0.8, 0.8).is_err());
    }
}
