//! The soliton family φ_c, its c-derivative primitive ζ_c, and the frozen-frame
//! context that holds every v-independent quantity on a grid.

use crate::error::{KdvError, Result};
use crate::grid::SpatialGrid;

fn check_amplitude(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(KdvError::Domain(format!("amplitude must be positive, got {c}")))
    }
}

#[inline]
fn sech2(z: f64) -> f64 {
    let ch = z.cosh();
    1.0 / (ch * ch)
}

/// φ_c(x) = (3c/2) sech²(√c x / 2).
pub fn soliton_profile(c: f64, x: f64) -> Result<f64> {
    check_amplitude(c)?;
    Ok(1.5 * c * sech2(0.5 * c.sqrt() * x))
}

/// ζ_c(x) = ∫_{-∞}^x ∂_cφ_c, closed form (3/(2√c))(1 + tanh z) + (3x/4) sech² z.
pub fn zeta_profile(c: f64, x: f64) -> Result<f64> {
    check_amplitude(c)?;
    let z = 0.5 * c.sqrt() * x;
    Ok(1.5 / c.sqrt() * (1.0 + z.tanh()) + 0.75 * x * sech2(z))
}

/// Pointwise values of φ, ∂ₓφ, ∂_cφ, ζ, ∂_cζ at one location.
#[derive(Clone, Copy, Debug)]
pub struct ProfileJet {
    pub phi: f64,
    pub phi_x: f64,
    pub phi_c: f64,
    pub zeta: f64,
    pub zeta_c: f64,
}

/// All profile derivatives needed by the phase fit, from shared transcendental calls.
pub fn profile_jet(c: f64, x: f64) -> ProfileJet {
    let rc = c.sqrt();
    let z = 0.5 * rc * x;
    let s = sech2(z);
    let t = z.tanh();
    ProfileJet {
        phi: 1.5 * c * s,
        phi_x: -1.5 * c * rc * s * t,
        phi_c: 1.5 * s - 0.75 * rc * x * s * t,
        zeta: 1.5 / rc * (1.0 + t) + 0.75 * x * s,
        zeta_c: -0.75 / (c * rc) * (1.0 + t) + 0.375 * x / c * s - 0.375 * x * x / rc * s * t,
    }
}

/// Default weighted-norm window [−L, min(20, max(L − 20, L/3))].
///
/// Everything behind the soliton counts. Ahead of it the window stops well
/// short of the seam, since e^{2ax} turns grid-scale content there (wrapped
/// radiation, discrete modes with reversed group velocity) into O(1) noise.
/// For L = 50 this is the usual [−50, 20].
pub fn default_window(half_width: f64) -> (f64, f64) {
    let l = half_width;
    (-l, 20.0f64.min((l - 20.0).max(l / 3.0)))
}

/// Frozen-frame substrate: profiles, their discrete derivative combinations and
/// the weighted-norm settings.
#[derive(Clone, Debug)]
pub struct SolitonContext {
    pub grid: SpatialGrid,
    pub c_star: f64,
    pub phi: Vec<f64>,
    pub zeta: Vec<f64>,
    pub dphi_dc: Vec<f64>,
    pub weight_a: f64,
    pub norm_window: (f64, f64),
    /// D1 φ
    pub d1phi: Vec<f64>,
    /// D2 φ
    pub d2phi: Vec<f64>,
    /// (x D1 + 2) φ
    pub gphi: Vec<f64>,
    /// (½x² D2 + 2x D1 + 1) φ
    pub q2phi: Vec<f64>,
    /// (x D2 + 2 D1) φ
    pub q3phi: Vec<f64>,
    /// x²/2, used by the generic building blocks
    pub half_x2: Vec<f64>,
}

impl SolitonContext {
    pub fn new(grid: SpatialGrid, c_star: f64, weight_a: f64, norm_window: (f64, f64)) -> Result<Self> {
        check_amplitude(c_star)?;
        if !(weight_a > 0.0 && weight_a < c_star.sqrt()) {
            return Err(KdvError::Domain(format!(
                "weight exponent must satisfy 0 < a < sqrt(c*) (a = {weight_a}, c* = {c_star})"
            )));
        }
        let l = grid.half_width;
        if norm_window.0 > norm_window.1 || norm_window.0 < -l || norm_window.1 > l {
            return Err(KdvError::Domain(format!(
                "norm window [{}, {}] not inside [-{l}, {l}]",
                norm_window.0, norm_window.1
            )));
        }
        let jets: Vec<ProfileJet> = grid.x.iter().map(|&x| profile_jet(c_star, x)).collect();
        let phi: Vec<f64> = jets.iter().map(|j| j.phi).collect();
        let zeta = jets.iter().map(|j| j.zeta).collect();
        let dphi_dc = jets.iter().map(|j| j.phi_c).collect();
        let d1phi = grid.d1(&phi);
        let d2phi = grid.d2(&phi);
        let x = &grid.x;
        let n = grid.len();
        let gphi = (0..n).map(|i| x[i] * d1phi[i] + 2.0 * phi[i]).collect();
        let q2phi = (0..n)
            .map(|i| 0.5 * x[i] * x[i] * d2phi[i] + 2.0 * x[i] * d1phi[i] + phi[i])
            .collect();
        let q3phi = (0..n).map(|i| x[i] * d2phi[i] + 2.0 * d1phi[i]).collect();
        let half_x2 = x.iter().map(|x| 0.5 * x * x).collect();
        Ok(SolitonContext {
            grid,
            c_star,
            phi,
            zeta,
            dphi_dc,
            weight_a,
            norm_window,
            d1phi,
            d2phi,
            gphi,
            q2phi,
            q3phi,
            half_x2,
        })
    }

    /// Context with [`default_window`].
    pub fn with_defaults(grid: SpatialGrid, c_star: f64, weight_a: f64) -> Result<Self> {
        let w = default_window(grid.half_width);
        Self::new(grid, c_star, weight_a, w)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn weighted_norm(&self, v: &[f64]) -> f64 {
        self.grid
            .weighted_norm(v, self.weight_a, self.norm_window)
            .expect("window validated at construction")
    }

    /// Discrete frozen-frame operator L₀ v = −D₃v + c*D₁v − 2D₁(φ v).
    pub fn apply_l0(&self, v: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let pv: Vec<f64> = self.phi.iter().zip(v).map(|(p, v)| p * v).collect();
        let d3 = g.d3(v);
        let d1 = g.d1(v);
        let d1p = g.d1(&pv);
        (0..v.len())
            .map(|i| -d3[i] + self.c_star * d1[i] - 2.0 * d1p[i])
            .collect()
    }

    /// Row `i` of L₀ as coefficients at offsets −2..=2 (periodic).
    pub fn l0_row(&self, i: usize) -> [f64; 5] {
        let n = self.len();
        let dx = self.grid.dx;
        let h3 = 0.5 / (dx * dx * dx);
        let h1 = 0.5 / dx;
        let pp = self.phi[(i + 1) % n];
        let pm = self.phi[(i + n - 1) % n];
        // −D3 has stencil (1/2, −1, 0, 1, −1/2)/dx³ at offsets (−2..2)
        [
            h3,
            -2.0 * h3 - self.c_star * h1 + 2.0 * h1 * pm,
            0.0,
            2.0 * h3 + self.c_star * h1 - 2.0 * h1 * pp,
            -h3,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trapz(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = 0.5 * (f(a) + f(b));
        for i in 1..n {
            s += f(a + i as f64 * h);
        }
        s * h
    }

    #[test]
    fn profile_values_at_origin() {
        assert_eq!(soliton_profile(1.0, 0.0).unwrap(), 1.5);
        assert_eq!(soliton_profile(4.0, 0.0).unwrap(), 6.0);
        assert!(soliton_profile(0.0, 1.0).is_err());
        assert!(zeta_profile(-1.0, 1.0).is_err());
    }

    #[test]
    fn scaling_law_within_family() {
        for &c in &[0.3, 1.0, 2.5, 7.0] {
            for &x in &[-3.0, -0.4, 0.0, 1.3, 6.0] {
                let lhs = soliton_profile(c, x).unwrap();
                let rhs = c * soliton_profile(1.0, c.sqrt() * x).unwrap();
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zeta_closed_form_matches_quadrature_of_dc_phi() {
        for &c in &[1.0, 3.0] {
            for k in 0..=12 {
                let x = -30.0 + 5.0 * k as f64;
                let q = trapz(|s| profile_jet(c, s).phi_c, -40.0, x, 400_000);
                let z = zeta_profile(c, x).unwrap();
                assert!((q - z).abs() < 1e-7, "c={c} x={x}: {q} vs {z}");
            }
        }
        let q = trapz(|s| profile_jet(1.0, s).phi_c, -40.0, 0.0, 200_000);
        assert!((q - 1.5).abs() < 1e-8);
    }

    #[test]
    fn zeta_limits() {
        for &c in &[1.0, 3.0] {
            assert!(zeta_profile(c, -40.0).unwrap().abs() < 1e-6);
            assert!((zeta_profile(c, 40.0).unwrap() - 3.0 / c.sqrt()).abs() < 1e-6);
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let h = 1e-5;
        for &c in &[0.8, 3.0] {
            for &x in &[-2.0, -0.3, 0.7, 3.1] {
                let j = profile_jet(c, x);
                let fx = |c: f64, x: f64| soliton_profile(c, x).unwrap();
                let zx = |c: f64, x: f64| zeta_profile(c, x).unwrap();
                assert!((j.phi_x - (fx(c, x + h) - fx(c, x - h)) / (2.0 * h)).abs() < 1e-7);
                assert!((j.phi_c - (fx(c + h, x) - fx(c - h, x)) / (2.0 * h)).abs() < 1e-7);
                assert!((j.zeta_c - (zx(c + h, x) - zx(c - h, x)) / (2.0 * h)).abs() < 1e-7);
                assert!((j.phi_c - (zx(c, x + h) - zx(c, x - h)) / (2.0 * h)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn context_invariants() {
        let g = SpatialGrid::new(40.0, 2048).unwrap();
        let ctx = SolitonContext::with_defaults(g, 3.0, 0.5).unwrap();
        assert!(ctx.phi.iter().all(|p| *p > 0.0));
        assert!(ctx.zeta[0] < 1e-6);
        assert!((ctx.zeta[ctx.len() - 1] - 3.0 / 3f64.sqrt()).abs() < 1e-6);
        for (i, x) in ctx.grid.x.iter().enumerate() {
            assert_eq!(ctx.phi[i], soliton_profile(3.0, *x).unwrap());
        }
        let g = SpatialGrid::new(40.0, 256).unwrap();
        assert!(SolitonContext::with_defaults(g.clone(), 3.0, 2.0).is_err());
        assert!(SolitonContext::new(g, 3.0, 0.5, (-50.0, 0.0)).is_err());
    }

    #[test]
    fn l0_rows_reproduce_operator() {
        let g = SpatialGrid::new(10.0, 64).unwrap();
        let ctx = SolitonContext::with_defaults(g, 1.3, 0.4).unwrap();
        let v: Vec<f64> = ctx.grid.x.iter().map(|x| (0.8 * x).sin() * (-0.05 * x * x).exp()).collect();
        let lv = ctx.apply_l0(&v);
        let n = ctx.len();
        for i in 0..n {
            let r = ctx.l0_row(i);
            let s: f64 = (0..5).map(|k| r[k] * v[(i + n + k - 2) % n]).sum();
            assert!((s - lv[i]).abs() < 1e-9 * (1.0 + lv[i].abs()));
        }
    }
}
