//! Uniform periodic grid on [-L, L) with centered second-order differences.
//!
//! The point x = L is identified with x = -L, so a grid with `N` cells has
//! `N` distinct nodes `x_n = n dx - L`, `n = 0..N`.

use crate::error::{KdvError, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct SpatialGrid {
    pub half_width: f64,
    pub cells: usize,
    pub dx: f64,
    pub x: Vec<f64>,
}

impl SpatialGrid {
    pub fn new(half_width: f64, cells: usize) -> Result<Self> {
        if !(half_width > 0.0) || cells < 8 {
            return Err(KdvError::Domain(format!(
                "grid needs L > 0 and N >= 8 (got L = {half_width}, N = {cells})"
            )));
        }
        let dx = 2.0 * half_width / cells as f64;
        let x = (0..cells).map(|n| n as f64 * dx - half_width).collect();
        Ok(SpatialGrid { half_width, cells, dx, x })
    }

    pub fn len(&self) -> usize {
        self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells == 0
    }

    /// Map any coordinate into the fundamental period [-L, L).
    #[inline]
    pub fn wrap(&self, y: f64) -> f64 {
        let p = 2.0 * self.half_width;
        (y + self.half_width).rem_euclid(p) - self.half_width
    }

    /// Centered first difference.
    pub fn d1<S: Scalar>(&self, v: &[S]) -> Vec<S> {
        let n = v.len();
        let h = 0.5 / self.dx;
        (0..n)
            .map(|i| (v[(i + 1) % n] - v[(i + n - 1) % n]) * h)
            .collect()
    }

    /// Centered second difference.
    pub fn d2<S: Scalar>(&self, v: &[S]) -> Vec<S> {
        let n = v.len();
        let h = 1.0 / (self.dx * self.dx);
        (0..n)
            .map(|i| (v[(i + 1) % n] - v[i] * 2.0 + v[(i + n - 1) % n]) * h)
            .collect()
    }

    /// Five-point centered third difference.
    pub fn d3<S: Scalar>(&self, v: &[S]) -> Vec<S> {
        let n = v.len();
        let h = 0.5 / (self.dx * self.dx * self.dx);
        (0..n)
            .map(|i| {
                let p1 = v[(i + 1) % n];
                let p2 = v[(i + 2) % n];
                let m1 = v[(i + n - 1) % n];
                let m2 = v[(i + n - 2) % n];
                (p2 - p1 * 2.0 + m1 * 2.0 - m2) * h
            })
            .collect()
    }

    /// In-place `out = D1 v` for the hot loops.
    pub fn d1_into(&self, v: &[f64], out: &mut [f64]) {
        let n = v.len();
        let h = 0.5 / self.dx;
        out[0] = (v[1] - v[n - 1]) * h;
        for i in 1..n - 1 {
            out[i] = (v[i + 1] - v[i - 1]) * h;
        }
        out[n - 1] = (v[0] - v[n - 2]) * h;
    }

    pub fn d2_into(&self, v: &[f64], out: &mut [f64]) {
        let n = v.len();
        let h = 1.0 / (self.dx * self.dx);
        out[0] = (v[1] - 2.0 * v[0] + v[n - 1]) * h;
        for i in 1..n - 1 {
            out[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) * h;
        }
        out[n - 1] = (v[0] - 2.0 * v[n - 1] + v[n - 2]) * h;
    }

    pub fn d3_into(&self, v: &[f64], out: &mut [f64]) {
        let n = v.len();
        let h = 0.5 / (self.dx * self.dx * self.dx);
        for i in 0..n {
            let p1 = v[(i + 1) % n];
            let p2 = v[(i + 2) % n];
            let m1 = v[(i + n - 1) % n];
            let m2 = v[(i + n - 2) % n];
            out[i] = (p2 - 2.0 * p1 + 2.0 * m1 - m2) * h;
        }
    }

    /// Trapezoid quadrature of `a·b`, which under periodicity is the
    /// dx-weighted dot product.
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>() * self.dx
    }

    /// Quadrature of a generic vector against a real weight.
    pub fn dot_w<S: Scalar>(&self, a: &[S], w: &[f64]) -> S {
        let mut acc = S::zero();
        for (p, &q) in a.iter().zip(w) {
            acc += *p * q;
        }
        acc * self.dx
    }

    /// Quadrature of a product of two generic vectors.
    pub fn dot_s<S: Scalar>(&self, a: &[S], b: &[S]) -> S {
        let mut acc = S::zero();
        for (p, q) in a.iter().zip(b) {
            acc += *p * *q;
        }
        acc * self.dx
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        self.dot(v, v).sqrt()
    }

    /// Norm in L²(e^{2ax}dx) restricted to the grid points inside `window`.
    pub fn weighted_norm(&self, v: &[f64], a: f64, window: (f64, f64)) -> Result<f64> {
        let (lo, hi) = window;
        let l = self.half_width;
        if lo > hi || lo < -l - 1e-12 || hi > l + 1e-12 {
            return Err(KdvError::Domain(format!(
                "window [{lo}, {hi}] is not inside [-{l}, {l}]"
            )));
        }
        let s: f64 = self
            .x
            .iter()
            .zip(v)
            .filter(|(x, _)| **x >= lo && **x <= hi)
            .map(|(x, u)| (2.0 * a * x).exp() * u * u)
            .sum();
        Ok((s * self.dx).sqrt())
    }
}
