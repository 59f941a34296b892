//! The on-disk contract: summary.csv, theory.csv, paths/NNN.csv, manifest.json.

use std::fs;
use std::path::Path;

use kdv_core::approx::{theoretical_stats, ConstantsTable};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::ensemble::{EnsembleOutcome, Exclusion};
use crate::error::Result;

const SOURCES: &[&str] = &[
    include_str!("../../kdv-core/src/approx.rs"),
    include_str!("../../kdv-core/src/banded.rs"),
    include_str!("../../kdv-core/src/direct.rs"),
    include_str!("../../kdv-core/src/error.rs"),
    include_str!("../../kdv-core/src/frozen.rs"),
    include_str!("../../kdv-core/src/grid.rs"),
    include_str!("../../kdv-core/src/kmatrix.rs"),
    include_str!("../../kdv-core/src/lib.rs"),
    include_str!("../../kdv-core/src/modulation.rs"),
    include_str!("../../kdv-core/src/noise.rs"),
    include_str!("../../kdv-core/src/phase_fit.rs"),
    include_str!("../../kdv-core/src/propagator.rs"),
    include_str!("../../kdv-core/src/scalar.rs"),
    include_str!("../../kdv-core/src/soliton.rs"),
    include_str!("config.rs"),
    include_str!("ensemble.rs"),
    include_str!("error.rs"),
    include_str!("fit.rs"),
    include_str!("lib.rs"),
    include_str!("output.rs"),
    include_str!("stats.rs"),
];

/// Short content hash of the sources this binary was built from, in the
/// spirit of an abbreviated commit id.
pub fn build_id() -> String {
    let mut h = Sha256::new();
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    for s in SOURCES {
        h.update(s.as_bytes());
    }
    h.finalize().iter().take(6).map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    t: f64,
    observable: &'a str,
    mean: f64,
    var: f64,
    se: f64,
    n: u64,
}

#[derive(Serialize)]
struct TheoryRow<'a> {
    t: f64,
    statistic: &'a str,
    value: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a RunConfig,
    seed: u64,
    build_id: String,
    paths: u64,
    included: u64,
    excluded: &'a [Exclusion],
    observables: &'a [String],
    wall_seconds: f64,
}

pub fn write_summary(path: &Path, out: &EnsembleOutcome) -> Result<()> {
    let s = &out.summary;
    let mut w = csv::Writer::from_path(path)?;
    for (j, &t) in s.times.iter().enumerate() {
        for (k, name) in s.names.iter().enumerate() {
            let m = s.series[k][j];
            w.serialize(SummaryRow { t, observable: name, mean: m.mean, var: m.var, se: m.se, n: m.n })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Closed-form order-0 curves at the record times.
pub fn write_theory(path: &Path, cfg: &RunConfig, table: &ConstantsTable, times: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for &t in times {
        let th = theoretical_stats(cfg.example.example(), cfg.sigma, table, t);
        for (statistic, value) in [
            ("mean_alpha0", th.mean_alpha0),
            ("mean_c0", th.mean_c0),
            ("var_c0", th.var_c0),
            ("mean_omega0", th.mean_omega0),
            ("var_omega0", th.var_omega0),
        ] {
            w.serialize(TheoryRow { t, statistic, value })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_paths(dir: &Path, out: &EnsembleOutcome) -> Result<()> {
    let Some(paths) = &out.paths else { return Ok(()) };
    fs::create_dir_all(dir)?;
    let width = out.config.paths.saturating_sub(1).to_string().len().max(3);
    for p in paths {
        let mut w = csv::Writer::from_path(dir.join(format!("{:0width$}.csv", p.index)))?;
        let mut header = vec!["t".to_string()];
        header.extend(out.summary.names.iter().cloned());
        w.write_record(&header)?;
        for (t, row) in out.summary.times.iter().zip(&p.rows) {
            let mut rec = vec![t.to_string()];
            rec.extend(row.iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Write every artifact of `out` into `dir`.
pub fn write_all(dir: &Path, out: &EnsembleOutcome, table: &ConstantsTable) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_summary(&dir.join("summary.csv"), out)?;
    write_theory(&dir.join("theory.csv"), &out.config, table, &out.summary.times)?;
    write_paths(&dir.join("paths"), out)?;
    let m = Manifest {
        config: &out.config,
        seed: out.config.seed,
        build_id: build_id(),
        paths: out.config.paths,
        included: out.config.paths - out.excluded.len() as u64,
        excluded: &out.excluded,
        observables: &out.summary.names,
        wall_seconds: out.wall_seconds,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&m)?)?;
    Ok(())
}
