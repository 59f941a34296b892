//! Direct solver for periodic banded systems.
//!
//! The matrix is split into its non-periodic band `B` and the few wrap-around
//! corner entries, handled by a Woodbury correction. `B` is factored without
//! pivoting: every system solved here is `I + h M` with a positive-definite
//! symmetric part up to O(h) terms, for which unpivoted LU is stable.

use crate::error::{KdvError, Result};

#[derive(Clone, Debug)]
pub struct CyclicBanded {
    n: usize,
    p: usize,
    // band rows of the LU factors of B, entry (i, j) at lu[i * w + (j + p - i)]
    lu: Vec<f64>,
    // B⁻¹ e_r for every corner row r
    z: Vec<Vec<f64>>,
    // corner rows: (row, [(col, value)])
    corners: Vec<(usize, Vec<(usize, f64)>)>,
    // inverse of the capacitance matrix, row-major
    cap_inv: Vec<f64>,
}

impl CyclicBanded {
    /// `row(i)` returns the 2p+1 coefficients of row i at offsets −p..=p, wrapped periodically.
    pub fn new(n: usize, p: usize, row: impl Fn(usize) -> Vec<f64>) -> Result<Self> {
        if n < 2 * p + 2 {
            return Err(KdvError::Solver(format!("system of size {n} too small for half-band {p}")));
        }
        let w = 2 * p + 1;
        let mut lu = vec![0.0; n * w];
        let mut corners: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
        for i in 0..n {
            let r = row(i);
            debug_assert_eq!(r.len(), w);
            let mut extra = Vec::new();
            for (k, &val) in r.iter().enumerate() {
                let j = i as isize + k as isize - p as isize;
                if j < 0 || j >= n as isize {
                    if val != 0.0 {
                        extra.push((j.rem_euclid(n as isize) as usize, val));
                    }
                } else {
                    lu[i * w + k] += val;
                }
            }
            if !extra.is_empty() {
                corners.push((i, extra));
            }
        }
        let scale = lu.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        for k in 0..n {
            let piv = lu[k * w + p];
            if !(piv.abs() > 1e-13 * scale) {
                return Err(KdvError::Solver(format!("zero pivot at row {k}")));
            }
            for i in k + 1..(k + p + 1).min(n) {
                let l = lu[i * w + (k + p - i)] / piv;
                lu[i * w + (k + p - i)] = l;
                for j in k + 1..(k + p + 1).min(n) {
                    lu[i * w + (j + p - i)] -= l * lu[k * w + (j + p - k)];
                }
            }
        }
        let mut s = CyclicBanded { n, p, lu, z: Vec::new(), corners, cap_inv: Vec::new() };
        let m = s.corners.len();
        let mut z = Vec::with_capacity(m);
        for (r, _) in &s.corners {
            let mut e = vec![0.0; n];
            e[*r] = 1.0;
            s.band_solve(&mut e);
            z.push(e);
        }
        // capacitance C = I + V^T Z where row s of V^T is corner row s
        let mut cap = vec![0.0; m * m];
        for (a, (_, entries)) in s.corners.iter().enumerate() {
            for (b, zb) in z.iter().enumerate() {
                let dotv: f64 = entries.iter().map(|(j, v)| v * zb[*j]).sum();
                cap[a * m + b] = dotv + if a == b { 1.0 } else { 0.0 };
            }
        }
        s.cap_inv = invert_dense(&cap, m)?;
        s.z = z;
        Ok(s)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn band_solve(&self, x: &mut [f64]) {
        let (n, p) = (self.n, self.p);
        let w = 2 * p + 1;
        for i in 0..n {
            let mut s = x[i];
            for j in i.saturating_sub(p)..i {
                s -= self.lu[i * w + (j + p - i)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..(i + p + 1).min(n) {
                s -= self.lu[i * w + (j + p - i)] * x[j];
            }
            x[i] = s / self.lu[i * w + p];
        }
    }

    /// Solve A x = b in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        self.band_solve(x);
        let m = self.corners.len();
        if m == 0 {
            return;
        }
        let rhs: Vec<f64> = self
            .corners
            .iter()
            .map(|(_, e)| e.iter().map(|(j, v)| v * x[*j]).sum())
            .collect();
        for a in 0..m {
            let t: f64 = (0..m).map(|b| self.cap_inv[a * m + b] * rhs[b]).sum();
            for (xi, zi) in x.iter_mut().zip(&self.z[a]) {
                *xi -= t * zi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Gauss–Jordan with partial pivoting for the small capacitance matrix.
fn invert_dense(a: &[f64], m: usize) -> Result<Vec<f64>> {
    let mut a = a.to_vec();
    let mut inv = vec![0.0; m * m];
    for i in 0..m {
        inv[i * m + i] = 1.0;
    }
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&r, &s| a[r * m + col].abs().total_cmp(&a[s * m + col].abs()))
            .unwrap();
        if a[piv * m + col].abs() < 1e-300 {
            return Err(KdvError::Solver("singular capacitance matrix".into()));
        }
        for k in 0..m {
            a.swap(col * m + k, piv * m + k);
            inv.swap(col * m + k, piv * m + k);
        }
        let d = a[col * m + col];
        for k in 0..m {
            a[col * m + k] /= d;
            inv[col * m + k] /= d;
        }
        for r in 0..m {
            if r != col {
                let f = a[r * m + col];
                if f != 0.0 {
                    for k in 0..m {
                        a[r * m + k] -= f * a[col * m + k];
                        inv[r * m + k] -= f * inv[col * m + k];
                    }
                }
            }
        }
    }
    Ok(inv)
}
