//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{error, info};

use crate::config::{RunConfig, Scenario};
use crate::error::{Error, Result};
use crate::scatter::wave_operator;
use crate::solver::picard_solve;
use crate::trajectory::Trajectory;
use crate::verify::{
    check_b_limit, check_continuity_modulus, check_data_continuity, check_sobolev_ratios,
    fit_log_corrected_rate, odd_direction, DecayOptions,
};
use crate::{csvfmt, par, snapshot};

/// Environment fallback for `--jobs`.
pub const JOBS_ENV: &str = "WS_SCATTER_JOBS";

#[derive(Debug, Parser)]
#[command(name = "ws-scatter", version, about = "Modified wave operator for the Wave-Schrodinger system")]
pub struct Cli {
    /// Worker threads (default: WS_SCATTER_JOBS, else all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the amplitude trajectory from v0.
    Evolve {
        /// Config file; defaults apply when absent (n=32, L=16, rho=1.25, T=0.5, nu_max=1e4).
        #[arg(long)]
        config: Option<PathBuf>,
        /// `builtin:gaussian:amp,width`, `builtin:plane-wave-packet:amp,k_index,width`,
        /// `builtin:two-bump:amp,width,separation`, or a snapshot path.
        #[arg(long)]
        v0: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write one snapshot per mesh node.
        #[arg(long)]
        snapshots: bool,
    },
    /// Build u(t) and the modified profile w(t) from an asymptotic datum u0.
    WaveOperator {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        u0: Option<String>,
        /// Physical sample times, comma separated.
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        snapshots: bool,
    },
    /// Run estimate checks; exit code 0 iff every check passes.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit Q(t) = C t^theta (1 + |ln t|)^p to a two-column CSV with header.
    Rates {
        input: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    BLimit,
    Continuity,
    Sobolev,
    DataContinuity,
    All,
}

fn load(config: &Option<PathBuf>) -> Result<RunConfig> {
    match config {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn out_dir(cfg: &RunConfig, out: &Option<PathBuf>) -> Result<PathBuf> {
    let dir = out.clone().unwrap_or_else(|| cfg.run.out_dir.clone());
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn jobs(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(JOBS_ENV) {
        Ok(s) => s.trim().parse::<usize>().map(Some).map_err(|_| Error::ConfigValue {
            key: JOBS_ENV.into(),
            msg: format!("expected a positive integer, got `{s}`"),
        }),
        Err(_) => Ok(None),
    }
}

fn write_trajectory(traj: &Trajectory, dir: &Path, rho: f64, snapshots: bool) -> Result<()> {
    traj.write_manifest(&dir.join("trajectory.csv"), rho)?;
    snapshot::save(&dir.join("final.wsfld"), traj.last())?;
    if snapshots {
        traj.write_snapshots(&dir.join("nodes"), "v")?;
    }
    Ok(())
}

fn evolve(cfg: &RunConfig, v0: Option<String>, out: &Option<PathBuf>, snapshots: bool) -> Result<bool> {
    let grid = cfg.grid()?;
    let scfg = cfg.solver_config()?;
    let v0 = Scenario::parse(v0.as_deref().unwrap_or(&cfg.scenario.v0))?.build(&grid)?;
    let dir = out_dir(cfg, out)?;
    let sol = picard_solve(&v0, &scfg)?;
    write_trajectory(&sol.trajectory, &dir, scfg.rho, snapshots || cfg.run.snapshots)?;
    sol.report.write_csv(&dir.join("picard.csv"))?;
    info!("evolve: {} Picard iterations, residual {:.3e}", sol.report.iterations, sol.report.residual);
    Ok(sol.report.converged)
}

fn run_wave_operator(
    cfg: &RunConfig,
    u0: Option<String>,
    times: Option<Vec<f64>>,
    out: &Option<PathBuf>,
    snapshots: bool,
) -> Result<bool> {
    let grid = cfg.grid()?;
    let scfg = cfg.solver_config()?;
    let u0 = Scenario::parse(u0.as_deref().unwrap_or(&cfg.scenario.u0))?.build(&grid)?;
    let times = times.unwrap_or_else(|| cfg.run.times.clone());
    let dir = out_dir(cfg, out)?;
    let res = wave_operator(&u0, &scfg, &times)?;
    res.write_csv(&dir.join("wave_operator.csv"))?;
    res.solution.report.write_csv(&dir.join("picard.csv"))?;
    if snapshots || cfg.run.snapshots {
        for s in &res.samples {
            snapshot::save(&dir.join(format!("u_t{}.wsfld", s.t_phys)), &s.u)?;
            snapshot::save(&dir.join(format!("w_t{}.wsfld", s.t_phys)), &s.w)?;
        }
    }
    Ok(res.solution.report.converged)
}

fn write_summary(path: &Path, rows: &[(&str, bool)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["check", "pass"])?;
    for (name, pass) in rows {
        w.write_record([*name, if *pass { "PASS" } else { "FAIL" }])?;
    }
    w.flush()?;
    Ok(())
}

fn verify(cfg: &RunConfig, suite: Suite, seed: Option<u64>, out: &Option<PathBuf>) -> Result<bool> {
    let grid = cfg.grid()?;
    let scfg = cfg.solver_config()?;
    let seed = seed.unwrap_or(cfg.run.seed);
    let dir = out_dir(cfg, out)?;
    let v0 = Scenario::parse(&cfg.scenario.v0)?.build(&grid)?;
    let opts = DecayOptions { decades: cfg.run.decades, samples: cfg.run.samples };
    let wants = |s: Suite| suite == Suite::All || suite == s;
    let mut summary: Vec<(&str, bool)> = Vec::new();

    if wants(Suite::BLimit) || wants(Suite::Continuity) {
        let sol = picard_solve(&v0, &scfg)?;
        sol.report.write_csv(&dir.join("picard.csv"))?;
        if wants(Suite::BLimit) {
            let r = check_b_limit(&sol, &scfg, &opts)?;
            r.write_csv(&dir.join("b_limit.csv"))?;
            summary.push(("b-limit", r.pass));
        }
        if wants(Suite::Continuity) {
            let r = check_continuity_modulus(&sol.trajectory, &scfg, &opts)?;
            r.write_csv(&dir.join("continuity.csv"))?;
            summary.push(("continuity", r.pass));
        }
    }
    if wants(Suite::Sobolev) {
        let r = check_sobolev_ratios(
            cfg.grid.box_length,
            &cfg.run.sobolev_sizes,
            cfg.run.sobolev_trials,
            seed,
            scfg.rho,
        )?;
        r.write_csv(&dir.join("sobolev.csv"))?;
        summary.push(("sobolev", r.pass));
    }
    if wants(Suite::DataContinuity) {
        let lambda = (scfg.rho + 1.0) / 2.0;
        let dir_field = odd_direction(&grid, cfg.scenario.perturbation_width, lambda)?;
        let r = check_data_continuity(&v0, &dir_field, &scfg, &cfg.run.deltas, true)?;
        r.write_csv(&dir.join("data_continuity.csv"))?;
        summary.push(("data-continuity", r.pass));
    }
    write_summary(&dir.join("summary.csv"), &summary)?;
    for (name, pass) in &summary {
        println!("{name}: {}", if *pass { "PASS" } else { "FAIL" });
    }
    Ok(summary.iter().all(|(_, p)| *p))
}

fn rates(input: &Path) -> Result<bool> {
    let mut rdr = csv::Reader::from_path(input)?;
    let mut samples = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::InvalidArgument(format!("row {}: column {} is not a number", i + 1, k + 1)))
        };
        samples.push((parse(0)?, parse(1)?));
    }
    let fit = fit_log_corrected_rate(&samples)?;
    println!("theta,log_power,residual");
    println!("{},{},{}", csvfmt(fit.theta), csvfmt(fit.log_power), csvfmt(fit.residual));
    Ok(true)
}

/// Runs a parsed command line; `Ok(false)` means a check failed.
pub fn run(cli: Cli) -> Result<bool> {
    if let Some(j) = jobs(cli.jobs)? {
        par::init_workers(j);
    }
    match cli.command {
        Command::Evolve { config, v0, out, snapshots } => evolve(&load(&config)?, v0, &out, snapshots),
        Command::WaveOperator { config, u0, times, out, snapshots } => {
            run_wave_operator(&load(&config)?, u0, times, &out, snapshots)
        }
        Command::Verify { suite, seed, config, out } => verify(&load(&config)?, suite, seed, &out),
        Command::Rates { input } => rates(&input),
    }
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
