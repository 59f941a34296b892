//! Semi-implicit integrator for the frozen-frame modulation system (v, α, ξ).

use crate::error::{KdvError, Result};
use crate::modulation::{evaluate, Example, Martingale, ModulationFunctionals};
use crate::noise::NoiseIncrement;
use crate::propagator::{Propagator, Sponge};
use crate::soliton::SolitonContext;

/// Frozen-frame state. The phase shift Ω = ξ − ∫c is carried alongside ξ so
/// that it does not lose digits to the large ∫c part.
#[derive(Clone, Debug, PartialEq)]
pub struct ModulationState {
    pub v: Vec<f64>,
    pub alpha: f64,
    pub xi: f64,
    pub omega: f64,
    pub t: f64,
    pub step: usize,
}

impl ModulationState {
    /// The unperturbed soliton: v = 0, α = 1, ξ = 0.
    pub fn at_rest(n: usize) -> Self {
        ModulationState { v: vec![0.0; n], alpha: 1.0, xi: 0.0, omega: 0.0, t: 0.0, step: 0 }
    }
}

/// c = c* α⁻².
pub fn velocity(c_star: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(KdvError::FrameCollapse { alpha, step: 0, t: f64::NAN });
    }
    Ok(c_star / (alpha * alpha))
}

#[derive(Clone, Copy, Debug)]
pub struct FrozenConfig {
    pub example: Example,
    pub sigma: f64,
    pub dt: f64,
    /// Paths with α below this are declared collapsed.
    pub collapse_threshold: f64,
    pub sponge: Option<Sponge>,
}

impl FrozenConfig {
    pub fn new(example: Example, sigma: f64, dt: f64) -> Self {
        FrozenConfig { example, sigma, dt, collapse_threshold: 1e-3, sponge: Some(Sponge::FROZEN_DEFAULT) }
    }
}

/// The σ-dependent increments of α and Ω over one step, given functionals at the old state.
pub fn modulation_increments(
    ctx: &SolitonContext,
    f: &ModulationFunctionals<f64>,
    alpha: f64,
    cfg: &FrozenConfig,
    inc: &NoiseIncrement,
) -> (f64, f64) {
    let dt = cfg.dt;
    let s = cfg.sigma;
    let a2 = alpha.powi(-2);
    let (pg, pm) = f.martingale.pair(ctx, inc);
    match f.martingale {
        Martingale::Scalar { .. } => (
            (-a2 * f.gamma_d0 + s * s * alpha * f.gamma_d) * dt - s * alpha * pg,
            (-a2 * f.mu_d0 + s * s * alpha * f.mu_d) * dt - s * alpha * pm,
        ),
        Martingale::Field { .. } => {
            let r = alpha.sqrt();
            (
                (-a2 * f.gamma_d0 + s * s * f.gamma_d) * dt - s * r * pg,
                (-a2 * f.mu_d0 + s * s * f.mu_d) * dt - s * r * pm,
            )
        }
    }
}

pub struct FrozenSolver<'a> {
    pub ctx: &'a SolitonContext,
    pub cfg: FrozenConfig,
    prop: Propagator,
    source: Vec<f64>,
}

impl<'a> FrozenSolver<'a> {
    pub fn new(ctx: &'a SolitonContext, cfg: FrozenConfig) -> Self {
        FrozenSolver { ctx, cfg, prop: Propagator::new(ctx, cfg.sponge), source: vec![0.0; ctx.len()] }
    }

    /// Advance one step with `inc`. For white noise the increment must already be
    /// in the frozen frame (the statistically white W̃).
    ///
    /// The linear part is Crank–Nicolson with the current α⁻³; the nonlinearity,
    /// the correction drifts and the noise are explicit.
    pub fn step(&mut self, st: &mut ModulationState, inc: &NoiseIncrement) -> Result<()> {
        let cfg = self.cfg;
        let ex = cfg.example;
        let f = evaluate(self.ctx, &st.v, ex)?;
        let drift = f.drift_field(st.alpha, cfg.sigma, ex);
        let noise = f.martingale_field(self.ctx, inc);
        let noise_scale = cfg.sigma
            * match ex {
                Example::Scalar => 1.0,
                Example::White => st.alpha.powf(-0.5),
            };
        for i in 0..self.source.len() {
            self.source[i] = cfg.dt * drift[i] + noise_scale * noise[i];
        }
        let (da, dom) = modulation_increments(self.ctx, &f, st.alpha, &cfg, inc);
        let scale = st.alpha.powi(-3);
        self.prop.step(scale, cfg.dt, &mut st.v, &self.source)?;
        let c = self.ctx.c_star / (st.alpha * st.alpha);
        st.xi += c * cfg.dt + dom;
        st.omega += dom;
        st.alpha += da;
        st.t += cfg.dt;
        st.step += 1;
        if !st.v.iter().all(|x| x.is_finite()) || !st.alpha.is_finite() {
            return Err(KdvError::BlowUp { step: st.step, t: st.t });
        }
        if st.alpha < cfg.collapse_threshold {
            return Err(KdvError::FrameCollapse { alpha: st.alpha, step: st.step, t: st.t });
        }
        Ok(())
    }

    pub fn velocity(&self, st: &ModulationState) -> Result<f64> {
        velocity(self.ctx.c_star, st.alpha)
    }
}
