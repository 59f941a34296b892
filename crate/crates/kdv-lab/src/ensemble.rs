//! Monte Carlo orchestration: one independent noise stream per path index,
//! paths run in parallel and are merged in index order.

use std::time::Instant;

use kdv_core::approx::{ApproxConfig, ApproxEngine, ApproxState, ConstantsTable};
use kdv_core::direct::{DirectSolver, SchemeConfig};
use kdv_core::frozen::{FrozenConfig, FrozenSolver, ModulationState};
use kdv_core::grid::SpatialGrid;
use kdv_core::noise::{NoiseKind, NoiseSpec, NoiseStream};
use kdv_core::phase_fit::fit_phase;
use kdv_core::soliton::{soliton_profile, SolitonContext};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Mode, NoiseChoice, RunConfig};
use crate::error::{LabError, Result};
use crate::stats::{EnsembleSummary, SeriesAccumulator};

/// Paths per parallel batch. Batches are merged in order, so the summary does
/// not depend on the number of worker threads.
const CHUNK: u64 = 64;

/// Share of paths that may be excluded before the run is aborted.
pub const EXCLUSION_CAP: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct PathOutput {
    pub index: u64,
    /// `rows[j][k]`: observable k at record time j.
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Exclusion {
    pub index: u64,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct EnsembleOutcome {
    pub config: RunConfig,
    pub summary: EnsembleSummary,
    pub excluded: Vec<Exclusion>,
    /// Per-path series, kept only on request.
    pub paths: Option<Vec<PathOutput>>,
    pub wall_seconds: f64,
}

pub fn record_steps(cfg: &RunConfig) -> Vec<usize> {
    let steps = cfg.steps();
    (0..=steps).filter(|j| j % cfg.record_stride == 0 || *j == steps).collect()
}

pub fn record_times(cfg: &RunConfig) -> Vec<f64> {
    record_steps(cfg).iter().map(|&j| j as f64 * cfg.dt).collect()
}

fn frozen_names() -> Vec<String> {
    ["c", "alpha", "xi", "omega", "v_norm_a", "sup_v_norm_a", "v_l2"].iter().map(|s| s.to_string()).collect()
}

fn approx_names(cfg: &RunConfig) -> Vec<String> {
    let mut v = vec!["c0", "alpha0", "omega0"];
    if cfg.order >= 1 {
        v.extend(["c1", "v1_norm_a"]);
    }
    if cfg.order >= 2 {
        v.extend(["c2", "v2_norm_a"]);
        if cfg.with_omega2 {
            v.push("omega2");
        }
    }
    v.iter().map(|s| s.to_string()).collect()
}

fn error_names(cfg: &RunConfig) -> Vec<String> {
    let mut v = Vec::new();
    for k in 0..=cfg.order {
        v.push(format!("err_c{k}"));
        v.push(format!("sup_err_c{k}"));
    }
    v.push("err_omega0".into());
    if cfg.order >= 2 && cfg.with_omega2 {
        v.push("err_omega2".into());
    }
    if cfg.order >= 1 {
        v.push("sup_err_v1".into());
    }
    if cfg.order >= 2 {
        v.push("sup_err_v2".into());
    }
    v
}

/// Column names of the per-path series for the configured mode.
pub fn observable_names(cfg: &RunConfig) -> Vec<String> {
    match cfg.mode {
        Mode::Direct => ["c_fit", "xi_fit", "omega_fit", "norm", "norm_sq"].iter().map(|s| s.to_string()).collect(),
        Mode::Frozen => frozen_names(),
        Mode::Approx => approx_names(cfg),
        Mode::Ensemble | Mode::FitOrder => {
            let mut v = frozen_names();
            v.extend(approx_names(cfg));
            v.extend(error_names(cfg));
            v
        }
    }
}

/// √(Σ e^{2ax} f² dx) over the window, with the weights tabulated once.
pub struct WeightedNorm {
    w: Vec<f64>,
    dx: f64,
}

impl WeightedNorm {
    pub fn new(grid: &SpatialGrid, a: f64, window: (f64, f64)) -> Self {
        let w = grid
            .x
            .iter()
            .map(|&x| if x >= window.0 && x <= window.1 { (2.0 * a * x).exp() } else { 0.0 })
            .collect();
        WeightedNorm { w, dx: grid.dx }
    }

    pub fn of(&self, f: impl Fn(usize) -> f64) -> f64 {
        (self.w.iter().enumerate().map(|(i, w)| w * f(i).powi(2)).sum::<f64>() * self.dx).sqrt()
    }
}

/// Everything a path needs that does not depend on the path.
pub struct Setup {
    cfg: RunConfig,
    ctx: SolitonContext,
    table: ConstantsTable,
    /// Constants the approximations run on. In ensemble mode these are the
    /// grid values, so that c − c_k compares against the discrete frozen
    /// solver rather than picking up its O(dx²) bias at order σ.
    engine_table: ConstantsTable,
    direct: Option<DirectSolver>,
    norm: WeightedNorm,
}

impl Setup {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = SpatialGrid::new(cfg.half_width, cfg.cells)?;
        let ctx = SolitonContext::new(grid.clone(), cfg.c_star, cfg.weight_a, cfg.window())?;
        let table = ConstantsTable::computed(cfg.c_star)?;
        let engine_table = match cfg.mode {
            Mode::Ensemble | Mode::FitOrder => ConstantsTable::on_grid(&grid, cfg.c_star)?,
            _ => table,
        };
        let direct = match cfg.mode {
            Mode::Direct => Some(DirectSolver::new(SchemeConfig {
                dt: cfg.dt,
                t_end: cfg.t_end,
                sigma: cfg.sigma,
                grid: grid.clone(),
                sponge: None,
            })?),
            _ => None,
        };
        let norm = WeightedNorm::new(&grid, cfg.weight_a, cfg.window());
        Ok(Setup { cfg: cfg.clone(), ctx, table, engine_table, direct, norm })
    }

    pub fn table(&self) -> &ConstantsTable {
        &self.table
    }

    fn noise(&self, index: u64) -> kdv_core::Result<NoiseStream> {
        let kind = match self.cfg.example {
            NoiseChoice::Scalar => NoiseKind::Scalar,
            NoiseChoice::White => NoiseKind::WhiteSpaceTime,
        };
        Ok(NoiseStream::new(NoiseSpec::new(kind, self.cfg.seed, index)?, &self.ctx.grid))
    }

    /// Run path `index` and return its recorded series.
    pub fn run_path(&self, index: u64) -> kdv_core::Result<Vec<Vec<f64>>> {
        match self.cfg.mode {
            Mode::Direct => self.direct_path(index),
            _ => self.frame_path(index),
        }
    }

    fn direct_path(&self, index: u64) -> kdv_core::Result<Vec<Vec<f64>>> {
        let cfg = &self.cfg;
        let solver = self.direct.as_ref().expect("direct mode builds the solver");
        let grid = &self.ctx.grid;
        let u0 = grid.x.iter().map(|&x| soliton_profile(cfg.c_star, x)).collect::<kdv_core::Result<Vec<_>>>()?;
        let mut noise = self.noise(index)?;
        let mut rows = Vec::new();
        let mut guess = (cfg.c_star, 0.0);
        let mut last: Option<(f64, f64)> = None;
        let mut integral = 0.0;
        solver.run_path(u0, &mut noise, cfg.record_stride, |_, t, u| {
            let f = fit_phase(grid, u, guess)?;
            guess = (f.c_fit, f.xi_fit);
            if let Some((t0, c0)) = last {
                integral += 0.5 * (t - t0) * (c0 + f.c_fit);
            }
            last = Some((t, f.c_fit));
            let n2 = grid.dot(u, u);
            rows.push(vec![f.c_fit, f.xi_fit, f.xi_fit - integral, n2.sqrt(), n2]);
            Ok(())
        })?;
        Ok(rows)
    }

    fn frame_path(&self, index: u64) -> kdv_core::Result<Vec<Vec<f64>>> {
        let cfg = &self.cfg;
        let ex = cfg.example.example();
        let ctx = &self.ctx;
        let s = cfg.sigma;
        let frozen = matches!(cfg.mode, Mode::Frozen | Mode::Ensemble | Mode::FitOrder);
        let approx = !matches!(cfg.mode, Mode::Frozen);
        let mut fr = frozen.then(|| FrozenSolver::new(ctx, FrozenConfig::new(ex, s, cfg.dt)));
        let mut fs = ModulationState::at_rest(ctx.len());
        let mut ap = if approx {
            let mut acfg = ApproxConfig::new(ex, s, cfg.dt, cfg.order)?;
            acfg.phase = cfg.with_omega2;
            acfg.euler_alpha = frozen;
            Some(ApproxEngine::new(ctx, acfg, self.engine_table)?)
        } else {
            None
        };
        let mut st = ap.as_ref().map(|a| a.initial_state());
        let mut noise = self.noise(index)?;
        let mut sups = Sups::default();
        let steps = cfg.steps();
        let mut rows = Vec::new();
        let mut record = |fs: &ModulationState, st: Option<&ApproxState>, sups: &Sups| {
            let mut row = Vec::new();
            if frozen {
                row.extend([
                    ctx.c_star / (fs.alpha * fs.alpha),
                    fs.alpha,
                    fs.xi,
                    fs.omega,
                    self.norm.of(|i| fs.v[i]),
                    sups.v,
                    ctx.grid.norm(&fs.v),
                ]);
            }
            if let Some(a) = st {
                row.extend([a.c(ctx.c_star, 0), a.alpha0, a.omega0]);
                if cfg.order >= 1 {
                    row.extend([a.c(ctx.c_star, 1), self.norm.of(|i| s * a.v1_a0[i])]);
                }
                if cfg.order >= 2 {
                    row.extend([a.c(ctx.c_star, 2), self.norm.of(|i| s * a.v1_a1[i] + s * s * a.v2_a1[i])]);
                    if cfg.with_omega2 {
                        row.push(a.omega2);
                    }
                }
                if frozen {
                    let c = ctx.c_star / (fs.alpha * fs.alpha);
                    for k in 0..=cfg.order {
                        row.push(c - a.c(ctx.c_star, k));
                        row.push(sups.c[k]);
                    }
                    row.push(fs.omega - a.omega0);
                    if cfg.order >= 2 && cfg.with_omega2 {
                        row.push(fs.omega - a.omega2);
                    }
                    if cfg.order >= 1 {
                        row.push(sups.v1);
                    }
                    if cfg.order >= 2 {
                        row.push(sups.v2);
                    }
                }
            }
            rows.push(row);
        };
        record(&fs, st.as_ref(), &sups);
        for j in 1..=steps {
            let inc = noise.sample(cfg.dt);
            if let Some(f) = fr.as_mut() {
                f.step(&mut fs, &inc)?;
            }
            if let (Some(a), Some(x)) = (ap.as_mut(), st.as_mut()) {
                a.step(x, &inc)?;
            }
            if frozen {
                sups.v = sups.v.max(self.norm.of(|i| fs.v[i]));
                if let Some(a) = st.as_ref() {
                    let c = ctx.c_star / (fs.alpha * fs.alpha);
                    for k in 0..=cfg.order {
                        sups.c[k] = sups.c[k].max((c - a.c(ctx.c_star, k)).abs());
                    }
                    if cfg.order >= 1 {
                        sups.v1 = sups.v1.max(self.norm.of(|i| fs.v[i] - s * a.v1_a0[i]));
                    }
                    if cfg.order >= 2 {
                        sups.v2 = sups.v2.max(self.norm.of(|i| fs.v[i] - s * a.v1_a1[i] - s * s * a.v2_a1[i]));
                    }
                }
            }
            if j % cfg.record_stride == 0 || j == steps {
                record(&fs, st.as_ref(), &sups);
            }
        }
        Ok(rows)
    }
}

#[derive(Default)]
struct Sups {
    v: f64,
    c: [f64; 3],
    v1: f64,
    v2: f64,
}

/// Run `cfg.paths` paths and summarize them.
pub fn run_ensemble(cfg: &RunConfig, keep_paths: bool) -> Result<EnsembleOutcome> {
    if cfg.mode == Mode::FitOrder {
        return Err(LabError::Config("fit-order runs one ensemble per sigma; call it through the CLI".into()));
    }
    let start = Instant::now();
    let setup = Setup::new(cfg)?;
    let mut acc = SeriesAccumulator::new(record_times(cfg), observable_names(cfg));
    let mut excluded = Vec::new();
    let mut kept = keep_paths.then(Vec::new);
    let mut first = 0;
    while first < cfg.paths {
        let end = (first + CHUNK).min(cfg.paths);
        let batch: Vec<(u64, kdv_core::Result<Vec<Vec<f64>>>)> =
            (first..end).into_par_iter().map(|i| (i, setup.run_path(i))).collect();
        for (index, r) in batch {
            match r {
                Ok(rows) => {
                    acc.push_path(&rows);
                    if let Some(k) = kept.as_mut() {
                        k.push(PathOutput { index, rows });
                    }
                }
                Err(e) => excluded.push(Exclusion { index, reason: e.to_string() }),
            }
        }
        if excluded.len() as f64 > EXCLUSION_CAP * cfg.paths as f64 {
            return Err(LabError::TooManyExclusions {
                excluded: excluded.len(),
                paths: cfg.paths,
                first: excluded[0].reason.clone(),
            });
        }
        first = end;
    }
    Ok(EnsembleOutcome {
        config: cfg.clone(),
        summary: acc.summary(cfg.paths, excluded.len()),
        excluded,
        paths: kept,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: Mode) -> RunConfig {
        RunConfig {
            mode,
            cells: 128,
            half_width: 20.0,
            dt: 2e-3,
            t_end: 0.1,
            paths: 3,
            record_stride: 10,
            ..RunConfig::default()
        }
    }

    #[test]
    fn record_grid_includes_final_step() {
        let cfg = RunConfig { t_end: 0.105, dt: 1e-3, record_stride: 50, ..RunConfig::default() };
        assert_eq!(record_steps(&cfg), vec![0, 50, 100, 105]);
    }

    #[test]
    fn single_noiseless_path_is_the_summary() {
        let cfg = RunConfig { paths: 1, sigma: 0.0, ..small(Mode::Frozen) };
        let out = run_ensemble(&cfg, true).unwrap();
        let rows = &out.paths.as_ref().unwrap()[0].rows;
        for (k, name) in out.summary.names.iter().enumerate() {
            for (j, m) in out.summary.get(name).unwrap().iter().enumerate() {
                assert_eq!(m.mean, rows[j][k]);
                assert_eq!(m.var, 0.0);
            }
        }
        let c = out.summary.last("c").unwrap();
        assert!((c.mean - 3.0).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_summary() {
        let cfg = small(Mode::Ensemble);
        let a = run_ensemble(&cfg, false).unwrap();
        let b = run_ensemble(&cfg, false).unwrap();
        assert_eq!(a.summary, b.summary);
        let other = RunConfig { seed: 2, ..cfg };
        assert_ne!(run_ensemble(&other, false).unwrap().summary, a.summary);
    }

    #[test]
    fn row_width_matches_names() {
        for mode in [Mode::Direct, Mode::Frozen, Mode::Approx, Mode::Ensemble] {
            for order in 0..=2 {
                let cfg = RunConfig { order, paths: 1, t_end: 0.02, ..small(mode) };
                let out = run_ensemble(&cfg, true).unwrap();
                let rows = &out.paths.unwrap()[0].rows;
                assert_eq!(rows.len(), out.summary.times.len());
                assert!(rows.iter().all(|r| r.len() == out.summary.names.len()), "{mode:?} order {order}");
            }
        }
    }

    #[test]
    fn exclusions_above_cap_abort() {
        // an absurd σ makes every frame collapse
        let cfg = RunConfig { sigma: 40.0, paths: 4, ..small(Mode::Frozen) };
        assert!(matches!(run_ensemble(&cfg, false), Err(LabError::TooManyExclusions { .. })));
    }
}
