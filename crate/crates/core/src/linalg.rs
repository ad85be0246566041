//! Banded matrices and a partial-pivoting banded LU, plus the singular-value
//! estimates the linearization report needs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Square matrix with `kl` sub- and `ku` super-diagonals, stored by row windows.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![0.0; n * (kl + ku + 1)] }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn in_band(&self, r: usize, c: usize) -> bool {
        c + self.kl >= r && c <= r + self.ku
    }

    #[inline]
    fn slot(&self, r: usize, c: usize) -> usize {
        r * (self.kl + self.ku + 1) + (c + self.kl - r)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        if self.in_band(r, c) {
            self.data[self.slot(r, c)]
        } else {
            0.0
        }
    }

    /// Panics when `(r, c)` falls outside the band.
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        assert!(self.in_band(r, c), "({r}, {c}) outside band ({}, {})", self.kl, self.ku);
        let s = self.slot(r, c);
        self.data[s] = v;
    }

    fn cols(&self, r: usize) -> std::ops::Range<usize> {
        r.saturating_sub(self.kl)..(r + self.ku + 1).min(self.n)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|r| self.cols(r).map(|c| self.get(r, c) * x[c]).sum()).collect()
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for r in 0..self.n {
            for c in self.cols(r) {
                y[c] += self.get(r, c) * x[r];
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |r, c| self.get(r, c))
    }

    pub fn lu(&self) -> Result<BandLu> {
        BandLu::factor(self)
    }
}

/// `PA = LU` in band storage; `U` gains `kl` extra super-diagonals from pivoting.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    /// Row window width `2·kl + ku + 1`; row `r` stores columns `r − kl ..`.
    width: usize,
    ku_fill: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandLu {
    fn factor(a: &BandMatrix) -> Result<Self> {
        let (n, kl, ku) = (a.n, a.kl, a.ku);
        let ku_fill = kl + ku;
        let width = kl + ku_fill + 1;
        let mut lu = BandLu { n, kl, width, ku_fill, data: vec![0.0; n * width], pivots: vec![0; n] };
        for r in 0..n {
            for c in a.cols(r) {
                let s = lu.slot(r, c);
                lu.data[s] = a.get(r, c);
            }
        }
        let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = lu.at(k, k).abs();
            for r in k + 1..=last {
                let v = lu.at(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= scale * 1e-18 {
                return Err(Error::SingularJacobian { column: k });
            }
            lu.pivots[k] = p;
            let cmax = (k + ku_fill).min(n - 1);
            if p != k {
                for c in k..=cmax {
                    let (s1, s2) = (lu.slot(k, c), lu.slot(p, c));
                    lu.data.swap(s1, s2);
                }
            }
            let piv = lu.at(k, k);
            let span = cmax - k;
            for r in k + 1..=last {
                let s = lu.slot(r, k);
                let l = lu.data[s] / piv;
                lu.data[s] = l;
                if l != 0.0 {
                    // rows are contiguous in c and row r lies after row k
                    let (sr, sk) = (lu.slot(r, k + 1), lu.slot(k, k + 1));
                    let (head, tail) = lu.data.split_at_mut(sr);
                    let pivot_row = &head[sk..sk + span];
                    for (t, p) in tail[..span].iter_mut().zip(pivot_row) {
                        *t -= l * p;
                    }
                }
            }
        }
        Ok(lu)
    }

    #[inline]
    fn slot(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= r && c <= r + self.ku_fill);
        r * self.width + (c + self.kl - r)
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[self.slot(r, c)]
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.pivots[k]);
            let xk = x[k];
            for r in k + 1..=(k + self.kl).min(n - 1) {
                x[r] -= self.at(r, k) * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for c in k + 1..=(k + self.ku_fill).min(n - 1) {
                s -= self.at(k, c) * x[c];
            }
            x[k] = s / self.at(k, k);
        }
        x
    }

    /// Solve `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut z = b.to_vec();
        for k in 0..n {
            let mut s = z[k];
            for c in k.saturating_sub(self.ku_fill)..k {
                s -= self.at(c, k) * z[c];
            }
            z[k] = s / self.at(k, k);
        }
        for k in (0..n).rev() {
            let mut s = 0.0;
            for r in k + 1..=(k + self.kl).min(n - 1) {
                s += self.at(r, k) * z[r];
            }
            z[k] -= s;
            z.swap(k, self.pivots[k]);
        }
        z
    }
}

/// Dense fallback through nalgebra's LU.
pub fn dense_solve(a: &BandMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let lu = a.to_dense().lu();
    lu.solve(&DVector::from_column_slice(b))
        .map(|x| x.as_slice().to_vec())
        .ok_or(Error::SingularJacobian { column: 0 })
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn start_vector(n: usize) -> Vec<f64> {
    // deterministic, not orthogonal to smooth modes
    let mut v: Vec<f64> = (0..n).map(|k| 1.0 + 0.5 * ((k as f64) * 0.618_033_988_75).fract()).collect();
    normalize(&mut v);
    v
}

/// Largest singular value by power iteration on `AᵀA`.
pub fn largest_singular_value(a: &BandMatrix, iters: usize) -> f64 {
    let mut v = start_vector(a.n());
    let mut sigma = 0.0;
    for _ in 0..iters {
        let mut w = a.matvec_transpose(&a.matvec(&v));
        let lam = normalize(&mut w);
        let next = lam.sqrt();
        v = w;
        if (next - sigma).abs() <= 1e-12 * next {
            return next;
        }
        sigma = next;
    }
    sigma
}

/// Smallest singular value by inverse iteration on `(AᵀA)⁻¹`, reusing one LU.
pub fn smallest_singular_value(lu: &BandLu, n: usize, iters: usize) -> f64 {
    let mut v = start_vector(n);
    let mut sigma = f64::INFINITY;
    for _ in 0..iters {
        let mut w = lu.solve(&lu.solve_transpose(&v));
        let lam = normalize(&mut w);
        let next = 1.0 / lam.sqrt();
        v = w;
        if (next - sigma).abs() <= 1e-12 * next {
            return next;
        }
        sigma = next;
    }
    sigma
}
