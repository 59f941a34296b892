//! Least-squares fit of error ≈ k σ^β in log-log coordinates.

use kdv_core::KdvError;

use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderFit {
    pub beta: f64,
    pub k: f64,
    /// Root-mean-square residual of log error.
    pub residual: f64,
}

/// Fit log e = log k + β log σ over `(σ, e)` pairs.
pub fn fit_order(points: &[(f64, f64)]) -> Result<OrderFit> {
    if points.len() < 3 {
        return Err(KdvError::Domain(format!("need at least 3 points, got {}", points.len())).into());
    }
    if let Some(p) = points.iter().find(|(s, e)| !(*s > 0.0 && *e > 0.0 && s.is_finite() && e.is_finite())) {
        return Err(LabError::Core(KdvError::Domain(format!(
            "sigma and error must be positive and finite, got ({}, {})",
            p.0, p.1
        ))));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(KdvError::Domain("sigma values must not all coincide".into()).into());
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let beta = sxy / sxx;
    let logk = my - beta * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - logk - beta * x).powi(2)).sum();
    Ok(OrderFit { beta, k: logk.exp(), residual: (ss / n).sqrt() })
}

/// Least squares for y ≈ a + b log t; returns (a, b, ‖residual‖/‖y‖).
pub fn fit_log_growth(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 3 || points.iter().any(|(t, _)| !(*t > 0.0)) {
        return Err(KdvError::Domain("need at least 3 points with t > 0".into()).into());
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(points).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let res: f64 = xs.iter().zip(points).map(|(x, p)| (p.1 - a - b * x).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = points.iter().map(|p| p.1 * p.1).sum::<f64>().sqrt();
    Ok((a, b, res / norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [0.05, 0.075, 0.1, 0.125].iter().map(|&s: &f64| (s, 2.0 * s.powi(3))).collect();
        let f = fit_order(&pts).unwrap();
        assert!((f.beta - 3.0).abs() < 1e-12);
        assert!((f.k - 2.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn noisy_power_law_stays_near_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let sig: Vec<f64> = (0..8).map(|i| 0.05 + 0.02 * i as f64).collect();
        for _ in 0..500 {
            let pts: Vec<(f64, f64)> = sig
                .iter()
                .map(|&s| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (s, 2.0 * s.powi(3) * (1.0 + 0.05 * z))
                })
                .collect();
            let f = fit_order(&pts).unwrap();
            assert!(f.beta > 2.8 && f.beta < 3.2, "{f:?}");
        }
    }

    #[test]
    fn rejects_bad_points() {
        assert!(fit_order(&[(0.1, 1.0), (0.2, 2.0)]).is_err());
        assert!(fit_order(&[(0.1, 1.0), (0.2, 0.0), (0.3, 1.0)]).is_err());
        assert!(fit_order(&[(0.1, 1.0), (-0.2, 1.0), (0.3, 1.0)]).is_err());
        assert!(fit_order(&[(0.1, 1.0), (0.1, 2.0), (0.1, 1.0)]).is_err());
    }

    #[test]
    fn log_growth_exact() {
        let pts: Vec<(f64, f64)> = [2.0, 5.0, 10.0].iter().map(|&t: &f64| (t, 0.3 + 0.1 * t.ln())).collect();
        let (a, b, r) = fit_log_growth(&pts).unwrap();
        assert!((a - 0.3).abs() < 1e-12 && (b - 0.1).abs() < 1e-12 && r < 1e-12);
        assert!(fit_log_growth(&pts[..2]).is_err());
    }
}
