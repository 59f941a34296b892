use kdv_core::approx::{alpha0_scalar_exact, ApproxConfig, ApproxEngine, ConstantsTable};
use kdv_core::direct::{DirectSolver, DirectState, SchemeConfig};
use kdv_core::frozen::{FrozenConfig, FrozenSolver, ModulationState};
use kdv_core::grid::SpatialGrid;
use kdv_core::modulation::Example;
use kdv_core::noise::{NoiseKind, NoiseSpec, NoiseStream};
use kdv_core::phase_fit::{fit_phase, phase_shift};
use kdv_core::soliton::{soliton_profile, SolitonContext};

fn soliton(grid: &SpatialGrid, c: f64) -> Vec<f64> {
    grid.x.iter().map(|&x| soliton_profile(c, x).unwrap()).collect()
}

/// Fitted (c, xi, Omega) of a noiseless soliton sampled every 0.1 up to t = 1.
fn clean_track(cells: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let grid = SpatialGrid::new(30.0, cells).unwrap();
    let dt = 5e-4;
    let solver = DirectSolver::new(SchemeConfig { dt, t_end: 1.0, sigma: 0.0, grid: grid.clone(), sponge: None }).unwrap();
    let mut noise = NoiseStream::new(NoiseSpec::new(NoiseKind::Scalar, 1, 0).unwrap(), &grid);
    let (mut cs, mut lag) = (Vec::new(), Vec::new());
    let mut xs = Vec::new();
    let mut guess = (3.0, 0.0);
    solver
        .run_path(soliton(&grid, 3.0), &mut noise, 200, |_, t, u| {
            let f = fit_phase(&grid, u, guess)?;
            guess = (f.c_fit, f.xi_fit);
            cs.push(f.c_fit);
            xs.push(f.xi_fit);
            lag.push(f.xi_fit - 3.0 * t);
            Ok(())
        })
        .unwrap();
    let om = phase_shift(&xs, &cs, 200.0 * dt).unwrap();
    (cs, lag, om)
}

#[test]
fn fit_tracks_a_noiseless_soliton() {
    let (c1, lag1, om1) = clean_track(512);
    let (c2, lag2, om2) = clean_track(1024);
    assert!(c1.iter().all(|c| (c - 3.0).abs() < 1e-4), "{c1:?}");
    assert!(c2.iter().all(|c| (c - 3.0).abs() < 1e-5), "{c2:?}");
    // centred differences slow the discrete soliton by O(dx^2), so the
    // position lag and the phase shift must both shrink fourfold per refinement
    let (l1, l2) = (lag1.last().unwrap().abs(), lag2.last().unwrap().abs());
    assert!(l1 < 0.02, "lag {l1}");
    assert!((l1 / l2 - 4.0).abs() < 0.3, "lags {l1:.3e} {l2:.3e}");
    let (o1, o2) = (om1.last().unwrap().abs(), om2.last().unwrap().abs());
    assert!((o1 / o2 - 4.0).abs() < 0.3, "phase shifts {o1:.3e} {o2:.3e}");
}

#[test]
fn frozen_frame_follows_the_direct_solution() {
    let (sigma, dt, steps, every) = (0.1, 2e-4, 2500, 100);
    let grid = SpatialGrid::new(30.0, 512).unwrap();
    let solver = DirectSolver::new(SchemeConfig { dt, t_end: 0.5, sigma, grid: grid.clone(), sponge: None }).unwrap();
    let ctx = SolitonContext::with_defaults(grid.clone(), 3.0, 0.5).unwrap();
    let mut fr = FrozenSolver::new(&ctx, FrozenConfig::new(Example::Scalar, sigma, dt));
    let mut fs = ModulationState::at_rest(ctx.len());
    let mut ds = DirectState::new(soliton(&grid, 3.0));
    let mut noise = NoiseStream::new(NoiseSpec::new(NoiseKind::Scalar, 3, 7).unwrap(), &grid);
    let mut guess = (3.0, 0.0);
    let mut worst = 0.0f64;
    for j in 1..=steps {
        let inc = noise.sample(dt);
        solver.step(&mut ds, &inc).unwrap();
        fr.step(&mut fs, &inc).unwrap();
        if j % every == 0 {
            let f = fit_phase(&grid, &ds.u, guess).unwrap();
            guess = (f.c_fit, f.xi_fit);
            let c = fr.velocity(&fs).unwrap();
            worst = worst.max((f.c_fit - c).abs() / c);
            assert!((f.xi_fit - fs.xi).abs() < 0.02, "xi {} vs {}", f.xi_fit, fs.xi);
        }
    }
    assert!(worst < 5e-3, "max relative c deviation {worst}");
}

fn hierarchy(sigma: f64, order: usize, euler: bool, seed: u64) -> Vec<(f64, f64, f64)> {
    let ctx = SolitonContext::with_defaults(SpatialGrid::new(30.0, 256).unwrap(), 3.0, 1.0).unwrap();
    let dt = 2e-3;
    let mut cfg = ApproxConfig::new(Example::Scalar, sigma, dt, order).unwrap();
    cfg.phase = false;
    cfg.euler_alpha = euler;
    let table = ConstantsTable::closed_form(3.0);
    let mut eng = ApproxEngine::new(&ctx, cfg, table).unwrap();
    let mut st = eng.initial_state();
    let mut noise = NoiseStream::new(NoiseSpec::new(NoiseKind::Scalar, seed, 0).unwrap(), &ctx.grid);
    let mut beta = 0.0;
    let mut out = Vec::new();
    for _ in 0..500 {
        let inc = noise.sample(dt);
        beta += inc.scalar().unwrap();
        eng.step(&mut st, &inc).unwrap();
        out.push((beta, st.alpha0, st.alpha1));
    }
    out
}

#[test]
fn order_zero_amplitude_is_the_exact_gbm() {
    let table = ConstantsTable::closed_form(3.0);
    let sigma = 0.3;
    for (j, (beta, a0, _)) in hierarchy(sigma, 0, false, 9).into_iter().enumerate() {
        let t = (j + 1) as f64 * 2e-3;
        let want = alpha0_scalar_exact(&table, sigma, t, beta);
        assert!((a0 - want).abs() < 1e-12 * want, "t={t}: {a0} vs {want}");
    }
}

#[test]
fn euler_and_log_euler_amplitudes_differ_at_second_order_in_sigma() {
    let gap = |sigma: f64| -> f64 {
        let a = hierarchy(sigma, 1, false, 4);
        let b = hierarchy(sigma, 1, true, 4);
        a.iter().zip(&b).map(|(p, q)| (p.2 - q.2).abs()).fold(0.0, f64::max)
    };
    let (g1, g2) = (gap(0.1), gap(0.05));
    let slope = (g1 / g2).log2();
    assert!(slope > 1.8 && slope < 2.3, "gaps {g1:.3e} {g2:.3e}");
    assert!(g1 < 5e-3, "{g1}");
}
