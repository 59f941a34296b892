//! Crank–Nicolson propagator for dv = h(t) L₀ v dt + sources, shared by the
//! frozen-frame solver and the auxiliary linear SPDEs of the approximations.

use crate::banded::CyclicBanded;
use crate::error::Result;
use crate::soliton::SolitonContext;

/// Optional absorbing layer at the left edge of the periodic domain.
///
/// Radiation leaves the soliton to the left and, on a periodic grid, would
/// re-enter from the right. The layer damps it with rate
/// `strength·((x₀ − x)/width)²` on `[−L, x₀)`, `x₀ = −L + width`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sponge {
    pub width: f64,
    pub strength: f64,
}

impl Sponge {
    /// Default for frozen-frame runs. Fast discrete radiation crosses the
    /// domain several times per unit time, and whatever re-enters on the right
    /// is amplified by e^{2ax} in the weighted norm, so the layer is strong.
    pub const FROZEN_DEFAULT: Sponge = Sponge { width: 10.0, strength: 500.0 };

    pub fn profile(&self, x: &[f64], half_width: f64) -> Vec<f64> {
        let x0 = -half_width + self.width;
        x.iter()
            .map(|&x| if x < x0 { self.strength * ((x0 - x) / self.width).powi(2) } else { 0.0 })
            .collect()
    }
}

/// Rank-two repair of the discrete L₀ so that its adjoint keeps the two
/// continuum identities L₀*φ = 0 and L₀*ζ = φ exactly. Without it the grid
/// operator leaks O(dx²) mass into the projections on φ and ζ, and the
/// non-periodic tail of ζ turns anything that reaches the seam into leakage.
struct AdjointRepair {
    r: [Vec<f64>; 2],
    p: [Vec<f64>; 2],
}

impl AdjointRepair {
    fn new(ctx: &SolitonContext, rows: &[[f64; 5]]) -> Self {
        let g = &ctx.grid;
        let n = ctx.len();
        // Lᵀw from the row stencils: (Lᵀw)_j = Σ_i L_ij w_i with i = j − k + 2
        let lt = |w: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (i, r) in rows.iter().enumerate() {
                for (k, &a) in r.iter().enumerate() {
                    out[(i + n + k - 2) % n] += a * w[i];
                }
            }
            out
        };
        let r1 = lt(&ctx.phi);
        let r2: Vec<f64> = lt(&ctx.zeta).iter().zip(&ctx.phi).map(|(a, b)| a - b).collect();
        // p_i in span{D₁φ, ∂_cφ} with ⟨p_i, φ⟩ = δ_i1 and ⟨p_i, ζ⟩ = δ_i2
        let t = [&ctx.d1phi, &ctx.dphi_dc];
        let m = [[g.dot(t[0], &ctx.phi), g.dot(t[1], &ctx.phi)], [g.dot(t[0], &ctx.zeta), g.dot(t[1], &ctx.zeta)]];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
        let comb = |a: f64, b: f64| -> Vec<f64> { (0..n).map(|i| a * t[0][i] + b * t[1][i]).collect() };
        let p1 = comb(inv[0][0], inv[1][0]);
        let p2 = comb(inv[0][1], inv[1][1]);
        AdjointRepair { r: [r1, r2], p: [p1, p2] }
    }

    /// out += scale · (−p₁⟨r₁, v⟩ − p₂⟨r₂, v⟩)
    fn add(&self, dx: f64, v: &[f64], scale: f64, out: &mut [f64]) {
        for k in 0..2 {
            let s: f64 = self.r[k].iter().zip(v).map(|(a, b)| a * b).sum::<f64>() * dx;
            let f = scale * s;
            for (o, p) in out.iter_mut().zip(&self.p[k]) {
                *o -= f * p;
            }
        }
    }
}

pub struct Propagator {
    rows: Vec<[f64; 5]>,
    repair: AdjointRepair,
    dx: f64,
    damping: Vec<f64>,
    cached: Option<(f64, CyclicBanded)>,
    rhs: Vec<f64>,
}

impl Propagator {
    pub fn new(ctx: &SolitonContext, sponge: Option<Sponge>) -> Self {
        let n = ctx.len();
        let rows: Vec<[f64; 5]> = (0..n).map(|i| ctx.l0_row(i)).collect();
        let repair = AdjointRepair::new(ctx, &rows);
        let damping = match sponge {
            Some(s) => s.profile(&ctx.grid.x, ctx.grid.half_width),
            None => vec![0.0; n],
        };
        Propagator { rows, repair, dx: ctx.grid.dx, damping, cached: None, rhs: vec![0.0; n] }
    }

    /// The repaired operator L̃₀ v, whose adjoint satisfies L̃₀ᵀφ = 0 and L̃₀ᵀζ = φ.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        self.apply_l0(v, out);
        self.repair.add(self.dx, v, 1.0, out);
    }

    /// L₀ v using the cached stencil rows.
    pub fn apply_l0(&self, v: &[f64], out: &mut [f64]) {
        let n = v.len();
        for i in 0..n {
            let r = &self.rows[i];
            out[i] = r[0] * v[(i + n - 2) % n] + r[1] * v[(i + n - 1) % n] + r[3] * v[(i + 1) % n] + r[4] * v[(i + 2) % n];
        }
    }

    fn factor(&mut self, h: f64, dt: f64) -> Result<()> {
        if let Some((hc, _)) = &self.cached {
            if *hc == h {
                return Ok(());
            }
        }
        let rows = &self.rows;
        let damping = &self.damping;
        let lu = CyclicBanded::new(rows.len(), 2, |i| {
            let r = rows[i];
            vec![-h * r[0], -h * r[1], 1.0 + 0.5 * dt * damping[i], -h * r[3], -h * r[4]]
        })?;
        self.cached = Some((h, lu));
        Ok(())
    }

    /// One step: v ← (I − ½Δt s L₀ + ½Δt κ)⁻¹[(I + ½Δt s L₀ − ½Δt κ)v + Δt s C v + source],
    /// with `s` the time-rescaling factor (α⁻³ for the modulation system) and
    /// C the low-rank adjoint repair, which is treated explicitly.
    pub fn step(&mut self, scale: f64, dt: f64, v: &mut [f64], source: &[f64]) -> Result<()> {
        let h = 0.5 * dt * scale;
        self.factor(h, dt)?;
        let mut rhs = std::mem::take(&mut self.rhs);
        self.apply_l0(v, &mut rhs);
        for i in 0..v.len() {
            rhs[i] = v[i] + h * rhs[i] - 0.5 * dt * self.damping[i] * v[i] + source[i];
        }
        self.repair.add(self.dx, v, 2.0 * h, &mut rhs);
        self.cached.as_ref().unwrap().1.solve_in_place(&mut rhs);
        v.copy_from_slice(&rhs);
        self.rhs = rhs;
        Ok(())
    }
}
