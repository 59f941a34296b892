//! Modulation functionals of the frozen-frame system.
//!
//! Everything here is generic over [`Scalar`], so the same code evaluated on
//! jet-valued perturbations `v = εu` returns the Taylor coefficients of each
//! functional in `u`. Those are the random coefficients of the approximations.

use crate::error::{KdvError, Result};
use crate::kmatrix::{k_zero, Mat2};
use crate::noise::NoiseIncrement;
use crate::scalar::{Jet2, Scalar};
use crate::soliton::SolitonContext;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Example {
    /// Scalar multiplicative noise σ u dβ.
    Scalar,
    /// Space-time white multiplicative noise σ u dW.
    White,
}

/// The profile combinations of w = φ + v that the functionals are built from.
#[derive(Clone, Debug)]
pub struct Blocks<S> {
    /// φ + v
    pub w: Vec<S>,
    /// D1 v
    pub dv: Vec<S>,
    /// D1 (φ + v)
    pub dw: Vec<S>,
    /// D2 (φ + v)
    pub d2w: Vec<S>,
    /// (x D1 + 2)(φ + v)
    pub g: Vec<S>,
    /// (½x² D2 + 2x D1 + 1)(φ + v)
    pub q2: Vec<S>,
    /// (x D2 + 2 D1)(φ + v)
    pub q3: Vec<S>,
}

pub fn blocks<S: Scalar>(ctx: &SolitonContext, v: &[S]) -> Blocks<S> {
    let gr = &ctx.grid;
    let x = &gr.x;
    let dv = gr.d1(v);
    let d2v = gr.d2(v);
    let n = v.len();
    let f = S::from_f64;
    let mut w = Vec::with_capacity(n);
    let mut dw = Vec::with_capacity(n);
    let mut d2w = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    let mut q2 = Vec::with_capacity(n);
    let mut q3 = Vec::with_capacity(n);
    for i in 0..n {
        w.push(f(ctx.phi[i]) + v[i]);
        dw.push(f(ctx.d1phi[i]) + dv[i]);
        d2w.push(f(ctx.d2phi[i]) + d2v[i]);
        g.push(f(ctx.gphi[i]) + dv[i] * x[i] + v[i] * 2.0);
        q2.push(f(ctx.q2phi[i]) + d2v[i] * ctx.half_x2[i] + dv[i] * (2.0 * x[i]) + v[i]);
        q3.push(f(ctx.q3phi[i]) + d2v[i] * x[i] + dv[i] * 2.0);
    }
    Blocks { w, dv, dw, d2w, g, q2, q3 }
}

/// The pair (⟨f, φ⟩, ⟨f, ζ⟩).
pub fn project<S: Scalar>(ctx: &SolitonContext, f: &[S]) -> (S, S) {
    (ctx.grid.dot_w(f, &ctx.phi), ctx.grid.dot_w(f, &ctx.zeta))
}

/// Martingale components: numbers for scalar noise, grid functions for white noise.
#[derive(Clone, Debug)]
pub enum Martingale<S> {
    Scalar { gamma: S, mu: S },
    Field { gamma: Vec<S>, mu: Vec<S>, d_gamma: Vec<S>, d_mu: Vec<S> },
}

impl<S: Scalar> Martingale<S> {
    /// (‖γ‖², ‖μ‖², ⟨γ, μ⟩) in the noise's Hilbert space.
    pub fn gram(&self, ctx: &SolitonContext) -> (S, S, S) {
        match self {
            Martingale::Scalar { gamma, mu } => (*gamma * *gamma, *mu * *mu, *gamma * *mu),
            Martingale::Field { gamma, mu, .. } => {
                let g = &ctx.grid;
                (g.dot_s(gamma, gamma), g.dot_s(mu, mu), g.dot_s(gamma, mu))
            }
        }
    }

    /// (⟨h, γ⟩, ⟨h, μ⟩) for an increment of the matching kind.
    pub fn pair(&self, ctx: &SolitonContext, inc: &NoiseIncrement) -> (S, S) {
        match (self, inc) {
            (Martingale::Scalar { gamma, mu }, NoiseIncrement::Scalar { dw, .. }) => (*gamma * *dw, *mu * *dw),
            (Martingale::Field { gamma, mu, .. }, NoiseIncrement::Field { dw, .. }) => {
                (ctx.grid.dot_w(gamma, dw), ctx.grid.dot_w(mu, dw))
            }
            _ => panic!("noise increment kind does not match the example"),
        }
    }
}

/// All functionals at one perturbation, plus the pieces needed to assemble fields.
#[derive(Clone, Debug)]
pub struct ModulationFunctionals<S> {
    pub k: Mat2<S>,
    pub kinv: Mat2<S>,
    pub martingale: Martingale<S>,
    pub gamma_d0: S,
    pub mu_d0: S,
    pub gamma_d: S,
    pub mu_d: S,
    pub blocks: Blocks<S>,
    /// N(v) = −2 v D1 v
    pub nonlinearity: Vec<S>,
    /// R₁ + … + R₅
    pub r15: Vec<S>,
}

/// Evaluate every modulation functional at `v`.
///
/// Fails when |det K(v)| drops below a tenth of |det K(0)|.
pub fn evaluate<S: Scalar>(ctx: &SolitonContext, v: &[S], example: Example) -> Result<ModulationFunctionals<S>> {
    let gr = &ctx.grid;
    let b = blocks(ctx, v);
    let (k11, k21) = project(ctx, &b.g);
    let k12 = gr.dot_w(&b.dv, &ctx.phi);
    let k22 = gr.dot_w(&b.dw, &ctx.zeta);
    let k = Mat2::new(k11, k12, k21, k22);
    let det = k.det().value();
    let threshold = 0.1 * k_zero(ctx).det().abs();
    if !(det.abs() >= threshold) {
        return Err(KdvError::SingularK { det, threshold });
    }
    let kinv = k.inverse();
    let n = v.len();

    let martingale = match example {
        Example::Scalar => {
            let (gamma, mu) = kinv.apply(project(ctx, &b.w));
            Martingale::Scalar { gamma, mu }
        }
        Example::White => {
            let mut gamma = Vec::with_capacity(n);
            let mut mu = Vec::with_capacity(n);
            for i in 0..n {
                let wp = b.w[i] * ctx.phi[i];
                let wz = b.w[i] * ctx.zeta[i];
                gamma.push(kinv.a * wp + kinv.b * wz);
                mu.push(kinv.c * wp + kinv.d * wz);
            }
            let d_gamma = gr.d1(&gamma);
            let d_mu = gr.d1(&mu);
            Martingale::Field { gamma, mu, d_gamma, d_mu }
        }
    };

    let nonlinearity: Vec<S> = (0..n).map(|i| -(v[i] * b.dv[i]) * 2.0).collect();
    let (gamma_d0, mu_d0) = kinv.apply(project(ctx, &nonlinearity));

    let (gg, mm, gm) = martingale.gram(ctx);
    let half_mm = mm * 0.5;
    let mut r15 = Vec::with_capacity(n);
    match &martingale {
        Martingale::Scalar { gamma, mu } => {
            for i in 0..n {
                r15.push(
                    half_mm * b.d2w[i] + gg * b.q2[i] + gm * b.q3[i] - *gamma * b.g[i] - *mu * b.dw[i],
                );
            }
        }
        Martingale::Field { gamma, mu, d_gamma, d_mu } => {
            let x = &gr.x;
            for i in 0..n {
                let r4 = -(b.g[i] * gamma[i]) - b.w[i] * d_gamma[i] * x[i];
                let r5 = -(b.dw[i] * mu[i]) - b.w[i] * d_mu[i];
                r15.push(half_mm * b.d2w[i] + gg * b.q2[i] + gm * b.q3[i] + r4 + r5);
            }
        }
    }
    let (pg, pz) = project(ctx, &r15);
    let (gd, md) = kinv.apply((pg, pz));

    Ok(ModulationFunctionals {
        k,
        kinv,
        martingale,
        gamma_d0,
        mu_d0,
        gamma_d: -gd,
        mu_d: -md,
        blocks: b,
        nonlinearity,
        r15,
    })
}

impl<S: Scalar> ModulationFunctionals<S> {
    /// R₀ = −γ̄_d⁰ g − μ̄_d⁰ ∂w.
    pub fn r0(&self) -> Vec<S> {
        let b = &self.blocks;
        (0..b.w.len()).map(|i| -(self.gamma_d0 * b.g[i]) - self.mu_d0 * b.dw[i]).collect()
    }

    /// R₁ + … + R₆, the σ² drift before its example-dependent α factor.
    pub fn sigma2_terms(&self) -> Vec<S> {
        let b = &self.blocks;
        (0..b.w.len())
            .map(|i| self.r15[i] + self.gamma_d * b.g[i] + self.mu_d * b.dw[i])
            .collect()
    }

    /// The full drift α⁻³[N + R₀] + σ² f(α) ΣRᵢ with f = 1 (scalar) or α⁻¹ (white).
    pub fn drift_field(&self, alpha: f64, sigma: f64, example: Example) -> Vec<S> {
        let a3 = alpha.powi(-3);
        let s2 = sigma * sigma * sigma2_alpha_factor(alpha, example);
        let r0 = self.r0();
        let rs = self.sigma2_terms();
        (0..r0.len())
            .map(|i| (self.nonlinearity[i] + r0[i]) * a3 + rs[i] * s2)
            .collect()
    }

    /// S(v)[h]: the martingale operator applied to one increment.
    pub fn martingale_field(&self, ctx: &SolitonContext, inc: &NoiseIncrement) -> Vec<S> {
        let b = &self.blocks;
        let (pg, pm) = self.martingale.pair(ctx, inc);
        match inc {
            NoiseIncrement::Scalar { dw, .. } => (0..b.w.len())
                .map(|i| b.w[i] * *dw - pg * b.g[i] - pm * b.dw[i])
                .collect(),
            NoiseIncrement::Field { dw, .. } => (0..b.w.len())
                .map(|i| b.w[i] * dw[i] - pg * b.g[i] - pm * b.dw[i])
                .collect(),
        }
    }
}

/// α factor in front of the σ² drift sum in the v equation.
pub fn sigma2_alpha_factor(alpha: f64, example: Example) -> f64 {
    match example {
        Example::Scalar => 1.0,
        Example::White => 1.0 / alpha,
    }
}

/// Scalar projections of the f64 functionals, as used by the α and ξ equations.
pub fn martingale_components(ctx: &SolitonContext, v: &[f64], example: Example) -> Result<Martingale<f64>> {
    Ok(evaluate(ctx, v, example)?.martingale)
}

pub fn drift_components_0(ctx: &SolitonContext, v: &[f64]) -> Result<(f64, f64)> {
    let f = evaluate(ctx, v, Example::Scalar)?;
    Ok((f.gamma_d0, f.mu_d0))
}

pub fn drift_components_sigma2(ctx: &SolitonContext, v: &[f64], example: Example) -> Result<(f64, f64)> {
    let f = evaluate(ctx, v, example)?;
    Ok((f.gamma_d, f.mu_d))
}

/// Jet evaluation at v = ε u. The `a1` and `a2` parts of each jet are the first
/// and second Taylor terms [f]^(1)(u), [f]^(2)(u).
pub fn taylor_functionals(ctx: &SolitonContext, u: &[f64], example: Example) -> Result<ModulationFunctionals<Jet2>> {
    evaluate(ctx, &Jet2::direction(u), example)
}

/// Jet evaluation along two directions at once: v = ε u₁ + ε² u₂.
///
/// The coefficient of ε² then holds [f]^(1)(u₂) + [f]^(2)(u₁), which is the
/// combination the second-order coefficients need.
pub fn taylor_functionals_two(
    ctx: &SolitonContext,
    u1: &[f64],
    u2: &[f64],
    example: Example,
) -> Result<ModulationFunctionals<Jet2>> {
    let v: Vec<Jet2> = u1.iter().zip(u2).map(|(&a, &b)| Jet2::new(0.0, a, b)).collect();
    evaluate(ctx, &v, example)
}

/// [S]^(1)(u)[h], the part of the martingale operator linear in the perturbation.
pub fn linearized_martingale(ctx: &SolitonContext, u: &[f64], inc: &NoiseIncrement, example: Example) -> Result<Vec<f64>> {
    let f = taylor_functionals(ctx, u, example)?;
    Ok(f.martingale_field(ctx, inc).iter().map(|j| j.a1).collect())
}

/// [R₀]^(2)(u); N(u) itself is exactly quadratic.
pub fn r0_quadratic(ctx: &SolitonContext, u: &[f64], example: Example) -> Result<Vec<f64>> {
    let f = taylor_functionals(ctx, u, example)?;
    Ok(f.r0().iter().map(|j| j.a2).collect())
}
