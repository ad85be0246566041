//! Rectangular parameter grids and graph patches `(x, y) ↦ (x, y, f, g)`.

use crate::error::{Error, Result};

/// Uniform node grid over a rectangle in the `(x, y)` parameter plane.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub origin: (f64, f64),
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, hx: f64, hy: f64, origin: (f64, f64)) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3x3 nodes, got {nx}x{ny}")));
        }
        if !(hx.is_finite() && hy.is_finite() && hx > 0.0 && hy > 0.0) {
            return Err(Error::InvalidGrid(format!("spacings must be positive, got ({hx}, {hy})")));
        }
        if !(origin.0.is_finite() && origin.1.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self { nx, ny, hx, hy, origin })
    }

    /// `n × n` nodes spanning `[lo, hi]²`.
    pub fn square(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::rect(n, n, (lo, hi), (lo, hi))
    }

    pub fn rect(nx: usize, ny: usize, xr: (f64, f64), yr: (f64, f64)) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!("need at least 3x3 nodes, got {nx}x{ny}")));
        }
        let hx = (xr.1 - xr.0) / (nx - 1) as f64;
        let hy = (yr.1 - yr.0) / (ny - 1) as f64;
        Self::new(nx, ny, hx, hy, (xr.0, yr.0))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major node index: rows run along `y`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.origin.0 + i as f64 * self.hx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.origin.1 + j as f64 * self.hy
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn y_max(&self) -> f64 {
        self.y(self.ny - 1)
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    pub fn check(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.nx || j >= self.ny {
            return Err(Error::IndexOutOfRange { i, j, nx: self.nx, ny: self.ny });
        }
        Ok(())
    }

    /// Distance (in nodes) from `(i, j)` to the nearest boundary row or column.
    #[inline]
    pub fn depth(&self, i: usize, j: usize) -> usize {
        i.min(j).min(self.nx - 1 - i).min(self.ny - 1 - j)
    }

    /// Trapezoid weight factor: 1 inside, ½ on edges, ¼ at corners.
    #[inline]
    pub fn trapezoid_factor(&self, i: usize, j: usize) -> f64 {
        let ex = if i == 0 || i + 1 == self.nx { 0.5 } else { 1.0 };
        let ey = if j == 0 || j + 1 == self.ny { 0.5 } else { 1.0 };
        ex * ey
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.ny - 1).flat_map(move |j| (1..self.nx - 1).map(move |i| (i, j)))
    }

    pub fn interior_count(&self) -> usize {
        (self.nx - 2) * (self.ny - 2)
    }

    /// Position of node `(i, j)` among the interior nodes, row-major.
    #[inline]
    pub fn interior_index(&self, i: usize, j: usize) -> usize {
        (j - 1) * (self.nx - 2) + (i - 1)
    }

    /// Whether node `(i, j)` lies in the concentric sub-rectangle scaled by `fraction`.
    pub fn in_central_window(&self, i: usize, j: usize, fraction: f64) -> bool {
        let (cx, cy) = (0.5 * (self.origin.0 + self.x_max()), 0.5 * (self.origin.1 + self.y_max()));
        let (hx, hy) = (0.5 * fraction * (self.x_max() - self.origin.0), 0.5 * fraction * (self.y_max() - self.origin.1));
        let tol = 1e-9 * (self.hx + self.hy);
        (self.x(i) - cx).abs() <= hx + tol && (self.y(j) - cy).abs() <= hy + tol
    }

    /// Same rectangle, refined to `n` nodes per side.
    pub fn with_nodes(&self, nx: usize, ny: usize) -> Result<Self> {
        Self::rect(nx, ny, (self.origin.0, self.x_max()), (self.origin.1, self.y_max()))
    }
}

/// Graph surface over a [`GridSpec`] with frozen Dirichlet data on the boundary ring.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphPatch {
    grid: GridSpec,
    f: Vec<f64>,
    g: Vec<f64>,
    boundary: Vec<(usize, f64, f64)>,
}

impl GraphPatch {
    pub fn from_arrays(grid: GridSpec, f: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if f.len() != grid.len() || g.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "array lengths ({}, {}) do not match grid size {}",
                f.len(),
                g.len(),
                grid.len()
            )));
        }
        if let Some(k) = f.iter().chain(g.iter()).position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite height at flat index {k}")));
        }
        let mut boundary = Vec::with_capacity(2 * (grid.nx + grid.ny));
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if grid.is_boundary(i, j) {
                    let k = grid.index(i, j);
                    boundary.push((k, f[k], g[k]));
                }
            }
        }
        Ok(Self { grid, f, g, boundary })
    }

    pub fn from_fn(grid: GridSpec, mut height: impl FnMut(f64, f64) -> (f64, f64)) -> Result<Self> {
        let mut f = vec![0.0; grid.len()];
        let mut g = vec![0.0; grid.len()];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let k = grid.index(i, j);
                (f[k], g[k]) = height(grid.x(i), grid.y(j));
            }
        }
        Self::from_arrays(grid, f, g)
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn f(&self) -> &[f64] {
        &self.f
    }

    #[inline]
    pub fn g(&self) -> &[f64] {
        &self.g
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> (f64, f64) {
        let k = self.grid.index(i, j);
        (self.f[k], self.g[k])
    }

    /// Ambient position `(x, y, f, g)` of a node.
    pub fn position(&self, i: usize, j: usize) -> [f64; 4] {
        let (f, g) = self.at(i, j);
        [self.grid.x(i), self.grid.y(j), f, g]
    }

    /// Dirichlet data as `(flat index, f, g)` triples.
    pub fn boundary(&self) -> &[(usize, f64, f64)] {
        &self.boundary
    }

    /// Interior unknowns interleaved `(f, g)` per node, row-major.
    pub fn interior_unknowns(&self) -> Vec<f64> {
        let mut u = Vec::with_capacity(2 * self.grid.interior_count());
        for (i, j) in self.grid.interior_nodes() {
            let k = self.grid.index(i, j);
            u.push(self.f[k]);
            u.push(self.g[k]);
        }
        u
    }

    /// Overwrite the interior; the boundary ring is never touched.
    pub fn set_interior_unknowns(&mut self, u: &[f64]) {
        assert_eq!(u.len(), 2 * self.grid.interior_count(), "interior unknown count");
        let grid = self.grid;
        for (n, (i, j)) in grid.interior_nodes().enumerate() {
            let k = grid.index(i, j);
            self.f[k] = u[2 * n];
            self.g[k] = u[2 * n + 1];
        }
    }

    pub fn with_interior_from(&self, other: &GraphPatch) -> Result<GraphPatch> {
        if other.grid != self.grid {
            return Err(Error::InvalidArgument("grid mismatch".into()));
        }
        let mut out = self.clone();
        out.set_interior_unknowns(&other.interior_unknowns());
        Ok(out)
    }

    /// True when the boundary ring still holds the data frozen at construction.
    pub fn boundary_intact(&self) -> bool {
        self.boundary.iter().all(|&(k, f, g)| self.f[k] == f && self.g[k] == g)
    }

    /// Apply `F ↦ λF`: heights and grid both scale.
    pub fn scaled(&self, lambda: f64) -> Result<GraphPatch> {
        let grid = GridSpec::new(
            self.grid.nx,
            self.grid.ny,
            lambda * self.grid.hx,
            lambda * self.grid.hy,
            (lambda * self.grid.origin.0, lambda * self.grid.origin.1),
        )?;
        let f = self.f.iter().map(|v| lambda * v).collect();
        let g = self.g.iter().map(|v| lambda * v).collect();
        GraphPatch::from_arrays(grid, f, g)
    }

    /// Reflection `(x, y, f, g) ↦ (y, x, g, f)`. It swaps the two complex lines, so it
    /// reverses `ω`, but it keeps `c` and hence the Kähler angle and the residual norms.
    pub fn mirrored(&self) -> Result<GraphPatch> {
        let gr = self.grid;
        let grid = GridSpec::new(gr.ny, gr.nx, gr.hy, gr.hx, (gr.origin.1, gr.origin.0))?;
        let mut f = vec![0.0; gr.len()];
        let mut g = vec![0.0; gr.len()];
        for j in 0..gr.ny {
            for i in 0..gr.nx {
                let src = gr.index(i, j);
                let dst = grid.index(j, i);
                f[dst] = self.g[src];
                g[dst] = self.f[src];
            }
        }
        GraphPatch::from_arrays(grid, f, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_degenerate_grids() {
        assert!(GridSpec::new(2, 5, 0.1, 0.1, (0.0, 0.0)).is_err());
        assert!(GridSpec::new(5, 5, -0.1, 0.1, (0.0, 0.0)).is_err());
        assert!(GridSpec::new(5, 5, 0.1, f64::NAN, (0.0, 0.0)).is_err());
    }

    #[test]
    fn interior_roundtrip_keeps_boundary() {
        let grid = GridSpec::square(6, 0.0, 1.0).unwrap();
        let mut p = GraphPatch::from_fn(grid, |x, y| (x + y, x * y)).unwrap();
        let mut u = p.interior_unknowns();
        u.iter_mut().for_each(|v| *v += 1.0);
        p.set_interior_unknowns(&u);
        assert!(p.boundary_intact());
        assert_eq!(p.interior_unknowns(), u);
    }

    #[test]
    fn rejects_nonfinite_heights() {
        let grid = GridSpec::square(4, 0.0, 1.0).unwrap();
        let mut f = vec![0.0; 16];
        f[5] = f64::INFINITY;
        assert!(GraphPatch::from_arrays(grid, f, vec![0.0; 16]).is_err());
    }

    #[test]
    fn mirror_twice_is_identity() {
        let grid = GridSpec::rect(5, 7, (0.0, 1.0), (-1.0, 2.0)).unwrap();
        let p = GraphPatch::from_fn(grid, |x, y| (x * x + y, x - y)).unwrap();
        assert_eq!(p.mirrored().unwrap().mirrored().unwrap(), p);
    }
}
