//! Driving noise: seeded per-path streams, the frame transform of a white-noise
//! realization, and the Gaussian convolution covariances.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{KdvError, Result};
use crate::grid::SpatialGrid;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseKind {
    /// One Brownian motion multiplying the whole field.
    Scalar,
    /// Space-time white noise, one independent Gaussian per cell.
    WhiteSpaceTime,
    /// White noise smoothed by the Gaussian kernel with the given correlation length.
    ColoredGaussian { correlation_len: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub seed: u64,
    pub stream_id: u64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, seed: u64, stream_id: u64) -> Result<Self> {
        if let NoiseKind::ColoredGaussian { correlation_len } = kind {
            if !(correlation_len > 0.0) {
                return Err(KdvError::Domain(format!("correlation length must be positive, got {correlation_len}")));
            }
        }
        Ok(NoiseSpec { kind, seed, stream_id })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NoiseIncrement {
    Scalar { dw: f64, dt: f64 },
    Field { dw: Vec<f64>, dt: f64 },
}

impl NoiseIncrement {
    pub fn dt(&self) -> f64 {
        match self {
            NoiseIncrement::Scalar { dt, .. } | NoiseIncrement::Field { dt, .. } => *dt,
        }
    }

    pub fn scalar(&self) -> Option<f64> {
        match self {
            NoiseIncrement::Scalar { dw, .. } => Some(*dw),
            _ => None,
        }
    }

    pub fn field(&self) -> Option<&[f64]> {
        match self {
            NoiseIncrement::Field { dw, .. } => Some(dw),
            _ => None,
        }
    }
}

/// A reproducible source of increments for one path.
///
/// ChaCha8 keyed by the run seed, with the path index as the ChaCha stream
/// number, so paths never share random numbers and can run in any order.
pub struct NoiseStream {
    spec: NoiseSpec,
    rng: ChaCha8Rng,
    cells: usize,
    dx: f64,
    smoother: Option<Convolver>,
    half_kernel: Option<Vec<Complex64>>,
}

impl NoiseStream {
    pub fn new(spec: NoiseSpec, grid: &SpatialGrid) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(spec.stream_id);
        let (smoother, half_kernel) = match spec.kind {
            NoiseKind::ColoredGaussian { correlation_len } => {
                let conv = Convolver::new(grid);
                let k = conv.kernel_spectrum(|x| half_kernel(x, 1.0, correlation_len));
                (Some(conv), Some(k))
            }
            _ => (None, None),
        };
        NoiseStream { spec, rng, cells: grid.len(), dx: grid.dx, smoother, half_kernel }
    }

    pub fn spec(&self) -> &NoiseSpec {
        &self.spec
    }

    fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Draw the increment over a step of length `dt`.
    pub fn sample(&mut self, dt: f64) -> NoiseIncrement {
        match self.spec.kind {
            NoiseKind::Scalar => NoiseIncrement::Scalar { dw: dt.sqrt() * self.normal(), dt },
            NoiseKind::WhiteSpaceTime => {
                let sd = (dt / self.dx).sqrt();
                let dw = (0..self.cells).map(|_| sd * self.normal()).collect();
                NoiseIncrement::Field { dw, dt }
            }
            NoiseKind::ColoredGaussian { .. } => {
                let sd = (dt / self.dx).sqrt();
                let white: Vec<f64> = (0..self.cells).map(|_| sd * self.normal()).collect();
                let conv = self.smoother.as_ref().expect("colored stream has a convolver");
                let dw = conv.apply(&white, self.half_kernel.as_ref().unwrap());
                NoiseIncrement::Field { dw, dt }
            }
        }
    }
}

/// Free-function form of [`NoiseStream::sample`].
pub fn sample_increment(stream: &mut NoiseStream, dt: f64) -> NoiseIncrement {
    stream.sample(dt)
}

/// Express a white-noise increment in the frame scaled by `alpha` and shifted by `xi`.
///
/// Scalar increments pass through unchanged. Field increments are treated as
/// piecewise constant on the cells; each output cell receives α^{-1/2} times the
/// average of the input over its image [αa + ξ, αb + ξ). This keeps the output
/// white with per-cell variance dt/dx whenever the image cells are unions of input
/// cells, which linear interpolation does not do.
pub fn rescale_noise(inc: &NoiseIncrement, alpha: f64, xi: f64, grid: &SpatialGrid) -> Result<NoiseIncrement> {
    if !(alpha > 0.0) {
        return Err(KdvError::Domain(format!("rescaling needs alpha > 0, got {alpha}")));
    }
    match inc {
        NoiseIncrement::Scalar { .. } => Ok(inc.clone()),
        NoiseIncrement::Field { dw, dt } => {
            let n = grid.len();
            let dx = grid.dx;
            let l = grid.half_width;
            let mut cum = Vec::with_capacity(n + 1);
            cum.push(0.0);
            for w in dw {
                cum.push(cum.last().unwrap() + w * dx);
            }
            let period_mass = cum[n];
            let big_f = |y: f64| {
                let s = (y + l) / (2.0 * l);
                let k = s.floor();
                let r = (s - k) * n as f64;
                let m = (r.floor() as usize).min(n - 1);
                k * period_mass + cum[m] + (r - m as f64) * dx * dw[m]
            };
            let pre = alpha.powf(-0.5) / dx;
            let out = grid
                .x
                .iter()
                .map(|&a| pre * (big_f(alpha * (a + dx) + xi) - big_f(alpha * a + xi)))
                .collect();
            Ok(NoiseIncrement::Field { dw: out, dt: *dt })
        }
    }
}

/// Gaussian kernel q(x) = (1/(2ζ)) e^{−πx²/(4ζ²)}, unit mass.
pub fn gaussian_kernel(x: f64, correlation_len: f64) -> f64 {
    let z = correlation_len;
    (-std::f64::consts::PI * x * x / (4.0 * z * z)).exp() / (2.0 * z)
}

/// Kernel of (Q_α)^{1/2}: α q_{1/2}(αx) with q_{1/2}(x) = (1/(ζ√2)) e^{−πx²/(2ζ²)}.
pub fn half_kernel(x: f64, alpha: f64, correlation_len: f64) -> f64 {
    let z = correlation_len;
    let y = alpha * x;
    alpha * (-std::f64::consts::PI * y * y / (2.0 * z * z)).exp() / (z * std::f64::consts::SQRT_2)
}

/// Periodic convolution on a grid by FFT.
pub struct Convolver {
    n: usize,
    dx: f64,
    dist: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Convolver {
    pub fn new(grid: &SpatialGrid) -> Self {
        let n = grid.len();
        let mut planner = FftPlanner::new();
        let dist = (0..n)
            .map(|j| if j <= n / 2 { j as f64 * grid.dx } else { (j as f64 - n as f64) * grid.dx })
            .collect();
        Convolver { n, dx: grid.dx, dist, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    /// Spectrum of the periodized kernel, already scaled by dx/N.
    pub fn kernel_spectrum(&self, kernel: impl Fn(f64) -> f64) -> Vec<Complex64> {
        let mut k: Vec<Complex64> = self.dist.iter().map(|&d| Complex64::new(kernel(d), 0.0)).collect();
        self.fwd.process(&mut k);
        let s = self.dx / self.n as f64;
        k.iter().map(|c| c * s).collect()
    }

    pub fn apply(&self, f: &[f64], spectrum: &[Complex64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(spectrum) {
            *b *= k;
        }
        self.inv.process(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }
}

/// Q_α f = α q(α·) ∗ f with the Gaussian kernel.
pub fn apply_q_alpha(f: &[f64], alpha: f64, correlation_len: f64, grid: &SpatialGrid) -> Result<Vec<f64>> {
    check_positive(alpha, correlation_len)?;
    let conv = Convolver::new(grid);
    let k = conv.kernel_spectrum(|x| alpha * gaussian_kernel(alpha * x, correlation_len));
    Ok(conv.apply(f, &k))
}

/// (Q_α)^{1/2} f.
pub fn apply_q_alpha_half(f: &[f64], alpha: f64, correlation_len: f64, grid: &SpatialGrid) -> Result<Vec<f64>> {
    check_positive(alpha, correlation_len)?;
    let conv = Convolver::new(grid);
    let k = conv.kernel_spectrum(|x| half_kernel(x, alpha, correlation_len));
    Ok(conv.apply(f, &k))
}

fn check_positive(alpha: f64, correlation_len: f64) -> Result<()> {
    if !(alpha > 0.0 && correlation_len > 0.0) {
        return Err(KdvError::Domain(format!(
            "need alpha > 0 and correlation length > 0 (got {alpha}, {correlation_len})"
        )));
    }
    Ok(())
}

/// T_{α,ξ} f (x) = f(αx + ξ) on grid data, by periodic four-point Lagrange interpolation.
pub fn transform(f: &[f64], alpha: f64, xi: f64, grid: &SpatialGrid) -> Vec<f64> {
    grid.x.iter().map(|&x| interpolate(f, alpha * x + xi, grid)).collect()
}

/// Cubic Lagrange interpolation of periodic grid data at `y`.
pub fn interpolate(f: &[f64], y: f64, grid: &SpatialGrid) -> f64 {
    let n = f.len() as isize;
    let r = (grid.wrap(y) + grid.half_width) / grid.dx;
    let m = r.floor();
    let s = r - m;
    let m = m as isize;
    let at = |k: isize| f[(m + k).rem_euclid(n) as usize];
    let w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let w1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let w2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let w3 = (s + 1.0) * s * (s - 1.0) / 6.0;
    w0 * at(-1) + w1 * at(0) + w2 * at(1) + w3 * at(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> SpatialGrid {
        SpatialGrid::new(20.0, 512).unwrap()
    }

    fn stream(kind: NoiseKind, seed: u64, id: u64, g: &SpatialGrid) -> NoiseStream {
        NoiseStream::new(NoiseSpec::new(kind, seed, id).unwrap(), g)
    }

    fn bump(g: &SpatialGrid, c: f64, w: f64) -> Vec<f64> {
        g.x.iter().map(|x| (-(x - c) * (x - c) / (w * w)).exp()).collect()
    }

    #[test]
    fn zero_step_is_zero() {
        let g = grid();
        let mut s = stream(NoiseKind::WhiteSpaceTime, 1, 0, &g);
        assert!(s.sample(0.0).field().unwrap().iter().all(|w| *w == 0.0));
        let mut s = stream(NoiseKind::Scalar, 1, 0, &g);
        assert_eq!(s.sample(0.0).scalar(), Some(0.0));
    }

    #[test]
    fn scalar_variance() {
        let g = grid();
        let mut s = stream(NoiseKind::Scalar, 7, 3, &g);
        let dt = 1e-3;
        let n = 100_000;
        let var = (0..n).map(|_| s.sample(dt).scalar().unwrap().powi(2)).sum::<f64>() / n as f64;
        assert!(var > 0.95e-3 && var < 1.05e-3, "{var}");
    }

    #[test]
    fn white_cell_variance() {
        let g = grid();
        let mut s = stream(NoiseKind::WhiteSpaceTime, 9, 0, &g);
        let dt = 1e-2;
        let draws = 400;
        let mut acc = 0.0;
        for _ in 0..draws {
            acc += s.sample(dt).field().unwrap().iter().map(|w| w * w).sum::<f64>();
        }
        let var = acc / (draws * g.len()) as f64;
        let want = dt / g.dx;
        assert!((var / want - 1.0).abs() < 0.02, "{var} vs {want}");
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let g = grid();
        let a: Vec<_> = {
            let mut s = stream(NoiseKind::WhiteSpaceTime, 5, 2, &g);
            (0..3).map(|_| s.sample(1e-3)).collect()
        };
        let b: Vec<_> = {
            let mut s = stream(NoiseKind::WhiteSpaceTime, 5, 2, &g);
            (0..3).map(|_| s.sample(1e-3)).collect()
        };
        assert_eq!(a, b);
        let mut s = stream(NoiseKind::WhiteSpaceTime, 5, 3, &g);
        assert_ne!(a[0], s.sample(1e-3));
    }

    #[test]
    fn colored_covariance_matches_kernel() {
        let g = SpatialGrid::new(10.0, 128).unwrap();
        let zeta = 0.8;
        let mut s = stream(NoiseKind::ColoredGaussian { correlation_len: zeta }, 11, 0, &g);
        let dt = 1.0;
        let draws = 10_000;
        let lags = [0usize, 3, 6, 10];
        let mut sums = vec![0.0; lags.len()];
        let mut sq = vec![0.0; lags.len()];
        let n = g.len();
        for _ in 0..draws {
            let inc = s.sample(dt);
            let w = inc.field().unwrap();
            for (k, &lag) in lags.iter().enumerate() {
                // average over positions to shrink the Monte Carlo error
                let p: f64 = (0..n).map(|i| w[i] * w[(i + lag) % n]).sum::<f64>() / n as f64;
                sums[k] += p;
                sq[k] += p * p;
            }
        }
        for (k, &lag) in lags.iter().enumerate() {
            let m = sums[k] / draws as f64;
            let se = ((sq[k] / draws as f64 - m * m) / draws as f64).sqrt();
            let want = gaussian_kernel(lag as f64 * g.dx, zeta) * dt;
            // quadrature of the half kernel adds a small deterministic bias
            assert!((m - want).abs() < 4.0 * se + 1e-3 * want.abs(), "lag {lag}: {m} vs {want} (se {se})");
        }
    }

    #[test]
    fn rescale_identity_and_scalar() {
        let g = grid();
        let mut s = stream(NoiseKind::WhiteSpaceTime, 1, 0, &g);
        let inc = s.sample(1e-3);
        let out = rescale_noise(&inc, 1.0, 0.0, &g).unwrap();
        for (a, b) in out.field().unwrap().iter().zip(inc.field().unwrap()) {
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
        }
        let sc = NoiseIncrement::Scalar { dw: 0.3, dt: 1e-3 };
        assert_eq!(rescale_noise(&sc, 2.5, -3.0, &g).unwrap(), sc);
        assert!(rescale_noise(&sc, 0.0, 0.0, &g).is_err());
    }

    #[test]
    fn rescale_by_two_keeps_cell_variance() {
        let g = grid();
        let mut s = stream(NoiseKind::WhiteSpaceTime, 2, 0, &g);
        let dt = 1e-3;
        let draws = 200;
        let mut acc = 0.0;
        for _ in 0..draws {
            let out = rescale_noise(&s.sample(dt), 2.0, 0.0, &g).unwrap();
            acc += out.field().unwrap().iter().map(|w| w * w).sum::<f64>();
        }
        let var = acc / (draws * g.len()) as f64;
        assert!((var / (dt / g.dx) - 1.0).abs() < 0.05, "{}", var / (dt / g.dx));
    }

    #[test]
    fn rescaled_white_noise_isometry() {
        let g = SpatialGrid::new(20.0, 256).unwrap();
        let w1 = bump(&g, 0.0, 2.0);
        let w2: Vec<f64> = g.x.iter().map(|x| x * (-x * x / 8.0).exp()).collect();
        let w2: Vec<f64> = w2.iter().zip(&w1).map(|(a, b)| a + 0.5 * b).collect();
        let mut s = stream(NoiseKind::WhiteSpaceTime, 4, 0, &g);
        let dt = 1.0;
        let n = 100_000;
        let (mut s12, mut s11, mut s22, mut m1, mut m2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let mut prods = Vec::with_capacity(n);
        for _ in 0..n {
            let out = rescale_noise(&s.sample(dt), 2.0, 0.7, &g).unwrap();
            let f = out.field().unwrap();
            let a = g.dot(f, &w1);
            let b = g.dot(f, &w2);
            s12 += a * b;
            s11 += a * a;
            s22 += b * b;
            m1 += a;
            m2 += b;
            prods.push(a * b);
        }
        let nf = n as f64;
        let cov = s12 / nf - (m1 / nf) * (m2 / nf);
        let pm = s12 / nf;
        let se = (prods.iter().map(|p| (p - pm) * (p - pm)).sum::<f64>() / nf / nf).sqrt();
        // the conservative remap integrates the test functions over cells, a small smoothing bias
        let want = dt * g.dot(&w1, &w2);
        assert!((cov - want).abs() < 3.0 * se + 2e-3 * want.abs(), "{cov} vs {want} se {se}");
        assert!(s11 > 0.0 && s22 > 0.0);
    }

    #[test]
    fn q_alpha_preserves_mass_and_constants() {
        let g = grid();
        let out = apply_q_alpha(&vec![1.0; g.len()], 1.3, 0.7, &g).unwrap();
        assert!(out.iter().all(|v| (v - 1.0).abs() < 1e-10));
        assert!(apply_q_alpha(&out, 0.0, 1.0, &g).is_err());
    }

    #[test]
    fn q_alpha_rescales_correlation_length() {
        let g = grid();
        let f: Vec<f64> = g.x.iter().map(|x| (0.3 * x).sin() + bump(&g, 2.0, 1.0)[0] + (-x * x).exp()).collect();
        let a = apply_q_alpha(&f, 2.0, 0.9, &g).unwrap();
        let b = apply_q_alpha(&f, 1.0, 0.45, &g).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn half_operator_squares_to_q() {
        let g = grid();
        let f = bump(&g, 1.0, 1.5);
        let h = apply_q_alpha_half(&apply_q_alpha_half(&f, 1.7, 0.6, &g).unwrap(), 1.7, 0.6, &g).unwrap();
        let q = apply_q_alpha(&f, 1.7, 0.6, &g).unwrap();
        for (p, r) in h.iter().zip(&q) {
            assert!((p - r).abs() < 1e-8);
        }
    }

    #[test]
    fn transform_intertwines_convolution() {
        let g = SpatialGrid::new(20.0, 2048).unwrap();
        let f = bump(&g, 0.5, 1.2);
        let (alpha, xi, beta, zeta) = (1.4, 0.8, 1.1, 0.7);
        let lhs = transform(&apply_q_alpha(&f, beta, zeta, &g).unwrap(), alpha, xi, &g);
        let rhs = apply_q_alpha(&transform(&f, alpha, xi, &g), beta * alpha, zeta, &g).unwrap();
        let err = lhs.iter().zip(&rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-6, "{err}");
    }

    proptest! {
        #[test]
        fn transform_adjoint(alpha in 0.6f64..1.6, xi in -2.0f64..2.0, c1 in -3.0f64..3.0, c2 in -3.0f64..3.0, w in 0.8f64..2.0) {
            let g = SpatialGrid::new(20.0, 2048).unwrap();
            let f = bump(&g, c1, w);
            let h: Vec<f64> = g.x.iter().map(|x| (x - c2) * (-(x - c2) * (x - c2) / 4.0).exp()).collect();
            let lhs = g.dot(&transform(&f, alpha, xi, &g), &h);
            let back: Vec<f64> = transform(&h, 1.0 / alpha, -xi / alpha, &g).iter().map(|v| v / alpha).collect();
            let rhs = g.dot(&f, &back);
            let scale = g.norm(&f) * g.norm(&h);
            prop_assert!((lhs - rhs).abs() < 1e-5 * scale, "{} vs {}", lhs, rhs);
        }

        #[test]
        fn interpolation_is_exact_on_nodes(i in 0usize..512, k in -3i64..3) {
            let g = grid();
            let f = bump(&g, 0.3, 2.0);
            let y = g.x[i] + k as f64 * 2.0 * g.half_width;
            prop_assert!((interpolate(&f, y, &g) - f[i]).abs() < 1e-12);
        }
    }
}
