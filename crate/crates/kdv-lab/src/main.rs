use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kdv_core::approx::ConstantsTable;
use kdv_lab::config::{Mode, RunConfig};
use kdv_lab::ensemble::run_ensemble;
use kdv_lab::fit::{fit_order, OrderFit};
use kdv_lab::output::write_all;
use kdv_lab::{LabError, Result};

#[derive(Parser)]
#[command(name = "kdv-lab", version, about = "Stochastic KdV soliton laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Original-frame simulation with fitted amplitude and phase.
    Direct(RunArgs),
    /// Frozen-frame modulation system.
    Frozen(RunArgs),
    /// Order-0/1/2 approximations alone.
    Approx(RunArgs),
    /// Frozen frame and approximations on shared noise, with their differences.
    Ensemble(RunArgs),
    /// Fit error ≈ kσ^β, from a CSV of (sigma, error) or by running one ensemble per sigma.
    FitOrder(FitArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ExampleArg {
    Scalar,
    White,
}

#[derive(Args)]
struct RunArgs {
    /// key=value file with the same keys as the flags; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    example: Option<ExampleArg>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    cstar: Option<f64>,
    #[arg(long)]
    domain_halfwidth: Option<f64>,
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    paths: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Record every this many steps.
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    weight_a: Option<f64>,
    /// Weighted-norm window as LO,HI.
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Highest approximation order (0, 1 or 2).
    #[arg(long)]
    order: Option<usize>,
    /// Skip Ω₂ at order 2.
    #[arg(long)]
    no_omega2: bool,
    /// Also write paths/NNN.csv.
    #[arg(long)]
    write_paths: bool,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated sigmas to sweep.
    #[arg(long)]
    sigmas: Option<String>,
    /// CSV with columns sigma,error; skips the simulations.
    #[arg(long)]
    data: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut v: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, x: Option<String>| {
            if let Some(x) = x {
                v.push((k.to_string(), x));
            }
        };
        put("example", self.example.map(|e| match e {
            ExampleArg::Scalar => "scalar".to_string(),
            ExampleArg::White => "white".to_string(),
        }));
        put("sigma", self.sigma.map(|x| x.to_string()));
        put("cstar", self.cstar.map(|x| x.to_string()));
        put("domain-halfwidth", self.domain_halfwidth.map(|x| x.to_string()));
        put("cells", self.cells.map(|x| x.to_string()));
        put("dt", self.dt.map(|x| x.to_string()));
        put("t-end", self.t_end.map(|x| x.to_string()));
        put("paths", self.paths.map(|x| x.to_string()));
        put("seed", self.seed.map(|x| x.to_string()));
        put("stride", self.stride.map(|x| x.to_string()));
        put("weight-a", self.weight_a.map(|x| x.to_string()));
        put("window", self.window.clone());
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("order", self.order.map(|x| x.to_string()));
        if self.no_omega2 {
            put("with-omega2", Some("false".into()));
        }
        if self.write_paths {
            put("write-paths", Some("true".into()));
        }
        v
    }

    fn config(&self, mode: Mode, extra: Vec<(String, String)>) -> Result<RunConfig> {
        let file = match &self.config {
            Some(p) => Some(std::fs::read_to_string(p)?),
            None => None,
        };
        let mut ov = self.overrides();
        ov.extend(extra);
        RunConfig::layered(mode, file.as_deref(), &ov)
    }
}

fn default_out(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from(format!("kdv-lab-{name}")))
}

fn run_one(cfg: &RunConfig, dir: &Path) -> Result<kdv_lab::ensemble::EnsembleOutcome> {
    eprintln!(
        "{:?}: {:?} noise, sigma {}, {} paths, {} steps",
        cfg.mode,
        cfg.example,
        cfg.sigma,
        cfg.paths,
        cfg.steps()
    );
    let out = run_ensemble(cfg, cfg.write_paths)?;
    let table = ConstantsTable::computed(cfg.c_star)?;
    write_all(dir, &out, &table)?;
    eprintln!(
        "{} paths kept, {} excluded, {:.1} s, artifacts in {}",
        cfg.paths - out.excluded.len() as u64,
        out.excluded.len(),
        out.wall_seconds,
        dir.display()
    );
    Ok(out)
}

fn print_final(out: &kdv_lab::ensemble::EnsembleOutcome) {
    let s = &out.summary;
    let t = s.times.last().copied().unwrap_or(0.0);
    println!("t = {t}");
    println!("{:<14} {:>14} {:>14} {:>12}", "observable", "mean", "var", "se");
    for name in &s.names {
        let m = s.last(name).expect("name from the summary");
        println!("{name:<14} {:>14.6e} {:>14.6e} {:>12.3e}", m.mean, m.var, m.se);
    }
}

fn read_points(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut pts = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let get = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|x| x.trim().parse().ok())
                .ok_or_else(|| LabError::Config(format!("bad row in {}: {:?}", path.display(), rec)))
        };
        pts.push((get(0)?, get(1)?));
    }
    Ok(pts)
}

fn print_fit(label: &str, f: &OrderFit) {
    println!("{label}: beta = {:.4}, k = {:.4e}, rms log residual = {:.3e}", f.beta, f.k, f.residual);
}

fn fit_command(args: &FitArgs) -> Result<()> {
    if let Some(data) = &args.data {
        let f = fit_order(&read_points(data)?)?;
        print_fit("fit", &f);
        return Ok(());
    }
    let mut extra = Vec::new();
    if let Some(s) = &args.sigmas {
        extra.push(("sigmas".to_string(), s.clone()));
    }
    let cfg = args.run.config(Mode::FitOrder, extra)?;
    let root = default_out(&cfg, "fit-order");
    let mut c2 = Vec::new();
    let mut v1 = Vec::new();
    for &sigma in &cfg.sigmas {
        let run = RunConfig { mode: Mode::Ensemble, sigma, order: 2, ..cfg.clone() };
        let out = run_one(&run, &root.join(format!("sigma_{sigma}")))?;
        let m = |n: &str| out.summary.last(n).map(|m| m.mean).unwrap_or(f64::NAN);
        c2.push((sigma, m("sup_err_c2")));
        v1.push((sigma, m("sup_err_v1")));
    }
    let mut w = csv::Writer::from_path(root.join("fit.csv"))?;
    w.write_record(["observable", "beta", "k", "residual"])?;
    for (label, pts) in [("sup_err_c2", &c2), ("sup_err_v1", &v1)] {
        let f = fit_order(pts)?;
        print_fit(label, &f);
        w.write_record([label.to_string(), f.beta.to_string(), f.k.to_string(), f.residual.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::FitOrder(a) => fit_command(a),
        Command::Direct(a) | Command::Frozen(a) | Command::Approx(a) | Command::Ensemble(a) => {
            let (mode, name) = match &cli.command {
                Command::Direct(_) => (Mode::Direct, "direct"),
                Command::Frozen(_) => (Mode::Frozen, "frozen"),
                Command::Approx(_) => (Mode::Approx, "approx"),
                _ => (Mode::Ensemble, "ensemble"),
            };
            a.config(mode, Vec::new()).and_then(|cfg| {
                let out = run_one(&cfg, &default_out(&cfg, name))?;
                print_final(&out);
                Ok(())
            })
        }
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
