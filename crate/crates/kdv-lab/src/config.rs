//! Run configuration, the key=value config file, and flag overrides.
//!
//! File keys are the long flag names without the dashes (`t-end = 2`), and
//! underscores are accepted in place of hyphens. Flags given on the command
//! line are applied after the file and therefore win.

use std::path::PathBuf;

use kdv_core::modulation::Example;
use kdv_core::soliton::default_window;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Direct,
    Frozen,
    Approx,
    Ensemble,
    FitOrder,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Mode> {
        match s {
            "direct" => Ok(Mode::Direct),
            "frozen" => Ok(Mode::Frozen),
            "approx" => Ok(Mode::Approx),
            "ensemble" => Ok(Mode::Ensemble),
            "fit-order" => Ok(Mode::FitOrder),
            _ => Err(LabError::Config(format!("unknown mode '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseChoice {
    Scalar,
    White,
}

impl NoiseChoice {
    pub fn example(self) -> Example {
        match self {
            NoiseChoice::Scalar => Example::Scalar,
            NoiseChoice::White => Example::White,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub example: NoiseChoice,
    pub sigma: f64,
    pub c_star: f64,
    pub half_width: f64,
    pub cells: usize,
    pub dt: f64,
    pub t_end: f64,
    pub paths: u64,
    pub seed: u64,
    pub record_stride: usize,
    /// Weighted-norm window; `None` means the core's default for this L.
    pub norm_window: Option<(f64, f64)>,
    pub weight_a: f64,
    pub output_dir: Option<PathBuf>,
    /// Highest approximation order (approx and ensemble modes).
    pub order: usize,
    /// Carry Ω₂ at order 2. Costs two more auxiliary fields per path.
    pub with_omega2: bool,
    pub write_paths: bool,
    /// σ values swept by fit-order.
    pub sigmas: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Frozen,
            example: NoiseChoice::Scalar,
            sigma: 0.1,
            c_star: 3.0,
            half_width: 30.0,
            cells: 256,
            dt: 2e-3,
            t_end: 2.0,
            paths: 200,
            seed: 1,
            record_stride: 50,
            norm_window: None,
            weight_a: 0.5,
            output_dir: None,
            order: 2,
            with_omega2: true,
            write_paths: false,
            sigmas: vec![0.05, 0.075, 0.1, 0.125],
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| LabError::Config(format!("bad value for {key}: '{v}'")))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|p| num(key, p)).collect()
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(LabError::Config(format!("bad value for {key}: '{v}' (expected true/false)"))),
    }
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| LabError::Config(format!("line {}: expected key = value, got '{raw}'", i + 1)))?;
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.replace('_', "-").as_str() {
            "mode" => self.mode = Mode::parse(value.trim())?,
            "example" => {
                self.example = match value.trim() {
                    "scalar" => NoiseChoice::Scalar,
                    "white" => NoiseChoice::White,
                    other => return Err(LabError::Config(format!("unknown example '{other}'"))),
                }
            }
            "sigma" => self.sigma = num(key, value)?,
            "cstar" | "c-star" => self.c_star = num(key, value)?,
            "domain-halfwidth" => self.half_width = num(key, value)?,
            "cells" => self.cells = num(key, value)?,
            "dt" => self.dt = num(key, value)?,
            "t-end" => self.t_end = num(key, value)?,
            "paths" => self.paths = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "stride" => self.record_stride = num(key, value)?,
            "weight-a" => self.weight_a = num(key, value)?,
            "window" => {
                let w = list(key, value)?;
                if w.len() != 2 {
                    return Err(LabError::Config(format!("window needs LO,HI, got '{value}'")));
                }
                self.norm_window = Some((w[0], w[1]));
            }
            "out" => self.output_dir = Some(PathBuf::from(value.trim())),
            "order" => self.order = num(key, value)?,
            "with-omega2" => self.with_omega2 = flag(key, value)?,
            "write-paths" => self.write_paths = flag(key, value)?,
            "sigmas" => self.sigmas = list(key, value)?,
            other => return Err(LabError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Defaults, then `file` pairs, then `overrides`.
    pub fn layered(mode: Mode, file: Option<&str>, overrides: &[(String, String)]) -> Result<RunConfig> {
        let mut cfg = RunConfig { mode, ..RunConfig::default() };
        if let Some(text) = file {
            for (k, v) in parse_pairs(text)? {
                cfg.set(&k, &v)?;
            }
        }
        // the subcommand decides the mode even if the file names another
        cfg.mode = mode;
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn window(&self) -> (f64, f64) {
        self.norm_window.unwrap_or_else(|| default_window(self.half_width))
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LabError::Config(m));
        if self.paths < 1 {
            return bad("paths must be at least 1".into());
        }
        if self.record_stride < 1 {
            return bad("stride must be at least 1".into());
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be >= 0, got {}", self.sigma));
        }
        for (name, v) in [
            ("cstar", self.c_star),
            ("domain-halfwidth", self.half_width),
            ("dt", self.dt),
            ("weight-a", self.weight_a),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.t_end >= 0.0) {
            return bad(format!("t-end must be >= 0, got {}", self.t_end));
        }
        if self.cells < 8 {
            return bad(format!("cells must be at least 8, got {}", self.cells));
        }
        if self.order > 2 {
            return bad(format!("order must be 0, 1 or 2, got {}", self.order));
        }
        let (lo, hi) = self.window();
        if lo > hi || lo < -self.half_width || hi > self.half_width {
            return bad(format!("window [{lo}, {hi}] not inside the domain"));
        }
        if self.mode == Mode::FitOrder && (self.sigmas.len() < 3 || self.sigmas.iter().any(|s| !(*s > 0.0))) {
            return bad("fit-order needs at least three positive sigmas".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let file = "# desk run\nsigma = 0.2\nt_end=1.5 # short\nwindow = -30, 10\nexample = white\n";
        let cfg = RunConfig::layered(Mode::Frozen, Some(file), &[("sigma".into(), "0.25".into())]).unwrap();
        assert_eq!(cfg.sigma, 0.25);
        assert_eq!(cfg.t_end, 1.5);
        assert_eq!(cfg.window(), (-30.0, 10.0));
        assert_eq!(cfg.example, NoiseChoice::White);
        assert_eq!(cfg.mode, Mode::Frozen);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_pairs("sigma 0.2").is_err());
        assert!(RunConfig::layered(Mode::Frozen, Some("paths = 0"), &[]).is_err());
        assert!(RunConfig::layered(Mode::Frozen, Some("stride = 0"), &[]).is_err());
        assert!(RunConfig::layered(Mode::Frozen, Some("bogus = 1"), &[]).is_err());
        assert!(RunConfig::layered(Mode::Frozen, Some("window = 1"), &[]).is_err());
        assert!(RunConfig::layered(Mode::Frozen, Some("dt = -1"), &[]).is_err());
        assert!(RunConfig::layered(Mode::FitOrder, Some("sigmas = 0.1,0.2"), &[]).is_err());
    }

    #[test]
    fn default_window_is_clipped() {
        let cfg = RunConfig { half_width: 50.0, ..RunConfig::default() };
        assert_eq!(cfg.window(), (-50.0, 20.0));
        assert_eq!(RunConfig::default().window(), (-30.0, 10.0));
    }
}
