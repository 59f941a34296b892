//! Fitted soliton parameters and phase shifts of original-frame solutions.

use crate::error::{KdvError, Result};
use crate::grid::SpatialGrid;
use crate::soliton::profile_jet;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseFit {
    pub c_fit: f64,
    pub xi_fit: f64,
    pub residual: [f64; 2],
    pub iterations: usize,
}

const MAX_ITER: usize = 50;
const REL_TOL: f64 = 1e-10;

/// Residuals (⟨u(·+ξ) − φ_c, ζ_c⟩, ⟨u(·+ξ) − φ_c, φ_c⟩) and their Jacobian in (c, ξ).
///
/// Rather than translating u we translate the analytic profiles: on the
/// periodic grid ∫u(y+ξ)f(y)dy = ∫u(y)f(y−ξ)dy, and the profiles can be
/// evaluated exactly at y − ξ.
fn residual_and_jacobian(grid: &SpatialGrid, u: &[f64], c: f64, xi: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let mut f = [0.0; 2];
    let mut j = [[0.0; 2]; 2];
    for (n, &y) in grid.x.iter().enumerate() {
        let p = profile_jet(c, grid.wrap(y - xi));
        let r = u[n] - p.phi;
        f[0] += r * p.zeta;
        f[1] += r * p.phi;
        j[0][0] += -p.phi_c * p.zeta + r * p.zeta_c;
        j[0][1] += p.phi_x * p.zeta - r * p.phi_c;
        j[1][0] += -p.phi_c * p.phi + r * p.phi_c;
        j[1][1] += p.phi_x * p.phi - r * p.phi_x;
    }
    let dx = grid.dx;
    (
        [f[0] * dx, f[1] * dx],
        [[j[0][0] * dx, j[0][1] * dx], [j[1][0] * dx, j[1][1] * dx]],
    )
}

/// Solve the two orthogonality conditions for (c_fit, ξ_fit) by damped Newton.
pub fn fit_phase(grid: &SpatialGrid, u: &[f64], guess: (f64, f64)) -> Result<PhaseFit> {
    let (mut c, mut xi) = guess;
    if !(c > 0.0) {
        return Err(KdvError::Domain(format!("initial amplitude guess must be positive, got {c}")));
    }
    let tol = REL_TOL * grid.norm(u).max(f64::MIN_POSITIVE);
    let (mut f, mut jac) = residual_and_jacobian(grid, u, c, xi);
    for it in 0..=MAX_ITER {
        let res = f[0].abs().max(f[1].abs());
        if res <= tol {
            return Ok(PhaseFit { c_fit: c, xi_fit: xi, residual: f, iterations: it });
        }
        if it == MAX_ITER {
            break;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dc = (jac[1][1] * f[0] - jac[0][1] * f[1]) / det;
        let dxi = (-jac[1][0] * f[0] + jac[0][0] * f[1]) / det;
        let mut lambda = 1.0;
        loop {
            let cn = c - lambda * dc;
            let xn = xi - lambda * dxi;
            if cn > 0.0 {
                let (fn_, jn) = residual_and_jacobian(grid, u, cn, xn);
                let rn = fn_[0].abs().max(fn_[1].abs());
                if rn < res || lambda < 1e-3 {
                    c = cn;
                    xi = xn;
                    f = fn_;
                    jac = jn;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(KdvError::NoConvergence { iterations: it, residual: res });
            }
        }
    }
    Err(KdvError::NoConvergence { iterations: MAX_ITER, residual: f[0].abs().max(f[1].abs()) })
}

/// Initial guess at t = 0: (c*, location of the grid maximum).
pub fn initial_guess(grid: &SpatialGrid, u: &[f64], c_star: f64) -> (f64, f64) {
    let i = u
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    (c_star, grid.x[i])
}

/// Ω(t_j) = ξ(t_j) − ∫₀^{t_j} c ds with the trapezoid rule.
pub fn phase_shift(xi: &[f64], c: &[f64], dt: f64) -> Result<Vec<f64>> {
    if xi.len() != c.len() {
        return Err(KdvError::Domain(format!("series lengths differ ({} vs {})", xi.len(), c.len())));
    }
    let mut out = Vec::with_capacity(xi.len());
    let mut integral = 0.0;
    for j in 0..xi.len() {
        if j > 0 {
            integral += 0.5 * dt * (c[j] + c[j - 1]);
        }
        out.push(xi[j] - integral);
    }
    Ok(out)
}
