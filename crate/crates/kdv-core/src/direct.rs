//! Original-frame scheme: semi-implicit dispersion, two-step Adams–Bashforth
//! nonlinearity, Euler–Maruyama multiplicative noise.

use crate::banded::CyclicBanded;
use crate::error::{KdvError, Result};
use crate::grid::SpatialGrid;
use crate::noise::{NoiseIncrement, NoiseStream};
use crate::propagator::Sponge;

#[derive(Clone, Debug, PartialEq)]
pub struct DirectState {
    pub u: Vec<f64>,
    pub u_prev: Vec<f64>,
    pub t: f64,
    pub step_index: usize,
}

impl DirectState {
    pub fn new(u0: Vec<f64>) -> Self {
        DirectState { u_prev: u0.clone(), u: u0, t: 0.0, step_index: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct SchemeConfig {
    pub dt: f64,
    pub t_end: f64,
    pub sigma: f64,
    pub grid: SpatialGrid,
    pub sponge: Option<Sponge>,
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) || !(self.sigma >= 0.0) {
            return Err(KdvError::Domain(format!(
                "need dt > 0, t_end >= 0, sigma >= 0 (got {}, {}, {})",
                self.dt, self.t_end, self.sigma
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// The scheme with its factorized implicit operator, reusable across paths.
pub struct DirectSolver {
    pub cfg: SchemeConfig,
    lu: CyclicBanded,
    damping: Vec<f64>,
}

fn noise_term(u: &[f64], inc: &NoiseIncrement, i: usize) -> f64 {
    match inc {
        NoiseIncrement::Scalar { dw, .. } => u[i] * dw,
        NoiseIncrement::Field { dw, .. } => u[i] * dw[i],
    }
}

impl DirectSolver {
    pub fn new(cfg: SchemeConfig) -> Result<Self> {
        cfg.validate()?;
        let g = &cfg.grid;
        let h = 0.5 * cfg.dt * 0.5 / (g.dx * g.dx * g.dx);
        let damping = match cfg.sponge {
            Some(s) => s.profile(&g.x, g.half_width),
            None => vec![0.0; g.len()],
        };
        // D3 stencil (−½, 1, 0, −1, ½)/dx³
        let lu = CyclicBanded::new(g.len(), 2, |i| {
            vec![-h, 2.0 * h, 1.0 + 0.5 * cfg.dt * damping[i], -2.0 * h, h]
        })?;
        Ok(DirectSolver { cfg, lu, damping })
    }

    fn check(&self, st: &DirectState) -> Result<()> {
        if st.u.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(KdvError::BlowUp { step: st.step_index, t: st.t })
        }
    }

    /// U¹ = U⁰ − Δt(D₃U⁰ + 2U⁰ D₁U⁰) + σ U⁰ ΔW.
    pub fn init_step(&self, st: &mut DirectState, inc: &NoiseIncrement) -> Result<()> {
        if st.step_index != 0 {
            return Err(KdvError::Domain("init_step called after the first step".into()));
        }
        let g = &self.cfg.grid;
        let dt = self.cfg.dt;
        let d3 = g.d3(&st.u);
        let d1 = g.d1(&st.u);
        let next: Vec<f64> = (0..st.u.len())
            .map(|i| {
                st.u[i] - dt * (d3[i] + 2.0 * st.u[i] * d1[i]) + self.cfg.sigma * noise_term(&st.u, inc, i)
                    - dt * self.damping[i] * st.u[i]
            })
            .collect();
        st.u_prev = std::mem::replace(&mut st.u, next);
        st.t += dt;
        st.step_index += 1;
        self.check(st)
    }

    /// One semi-implicit step for j ≥ 1.
    pub fn step(&self, st: &mut DirectState, inc: &NoiseIncrement) -> Result<()> {
        if st.step_index == 0 {
            return self.init_step(st, inc);
        }
        let g = &self.cfg.grid;
        let dt = self.cfg.dt;
        let d3 = g.d3(&st.u);
        let d1 = g.d1(&st.u);
        let d1p = g.d1(&st.u_prev);
        let mut rhs: Vec<f64> = (0..st.u.len())
            .map(|i| {
                st.u[i] - 0.5 * dt * d3[i] + self.cfg.sigma * noise_term(&st.u, inc, i) - 3.0 * dt * st.u[i] * d1[i]
                    + dt * st.u_prev[i] * d1p[i]
                    - 0.5 * dt * self.damping[i] * st.u[i]
            })
            .collect();
        self.lu.solve_in_place(&mut rhs);
        st.u_prev = std::mem::replace(&mut st.u, rhs);
        st.t += dt;
        st.step_index += 1;
        self.check(st)
    }

    /// Integrate to `t_end`, calling `observe(step, t, u)` at step 0 and every
    /// `stride` steps after it (and at the final step).
    pub fn run_path(
        &self,
        u0: Vec<f64>,
        noise: &mut NoiseStream,
        stride: usize,
        mut observe: impl FnMut(usize, f64, &[f64]) -> Result<()>,
    ) -> Result<DirectState> {
        let stride = stride.max(1);
        let steps = self.cfg.steps();
        let mut st = DirectState::new(u0);
        observe(0, 0.0, &st.u)?;
        for j in 1..=steps {
            let inc = noise.sample(self.cfg.dt);
            self.step(&mut st, &inc)?;
            if j % stride == 0 || j == steps {
                observe(j, st.t, &st.u)?;
            }
        }
        Ok(st)
    }
}
