//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! The Picard-based criteria use a 16^3 grid with a lighter nu rule so the
//! whole target fits a single core; all tolerances are the nominal ones.

mod common;

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use num_complex::Complex64;
use ws_scatter::bgauge::compute_b_static;
use ws_scatter::config::RunConfig;
use ws_scatter::norms::{lebesgue, sobolev};
use ws_scatter::random::{random_field, rng};
use ws_scatter::scatter::{wave_operator, DEFAULT_TIMES};
use ws_scatter::solver::{linearized_solve, midpoint_b, picard_solve, PicardSolution};
use ws_scatter::spectral::{dilate, free_propagate, omega_pow, wave_kernel};
use ws_scatter::verify::{
    check_b_limit, check_b_limit_against, check_continuity_modulus, check_data_continuity,
    monotone_with_ripple, odd_direction, DecayOptions, DEFAULT_DELTAS, LINEARITY_FACTOR,
    RATE_FRACTION, RIPPLE,
};
use ws_scatter::{
    BOperator, Field, NuQuadrature, PhaseGauge, Representation, Role, SolverConfig, SpectralGrid,
    Trajectory,
};

const SPECTRAL_TOL: f64 = 1e-12;
const DILATION_TOL: f64 = 0.01;
const CONSTANT_B_TOL: f64 = 1e-6;
const B_ORACLE_TOL: f64 = 1e-5;
const L2_DRIFT_TOL: f64 = 1e-10;
const DENSE_TOL: f64 = 1e-6;
const MAX_PICARD_RATIO: f64 = 0.5;
const MAX_PICARD_ITER: usize = 8;
const THETA: f64 = 0.1;
const RHO: f64 = 1.25;

/// 16^3 scenario for the Picard-based criteria.
const SCENARIO: &str = "\
[grid]
n_points = 16
box_length = 12.0

[solver]
rho = 1.25
theta = 0.1
T = 0.5

[mesh]
s_span = 12.0
n_steps = 240

[quadrature]
nu_max = 1000.0
n_nodes = 193

[scenario]
v0 = \"builtin:gaussian:0.0705,1.0\"
u0 = \"builtin:gaussian:0.07,1.0\"
";

/// 8^3 configuration for the determinism runs.
const TINY: &str = "\
[grid]
n_points = 8
box_length = 8.0

[mesh]
s_span = 6.0
n_steps = 40

[quadrature]
nu_max = 100.0
n_nodes = 129

[run]
sobolev_sizes = [8, 12]
sobolev_trials = 3
samples = 6
";

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn run(
    id: usize,
    name: &'static str,
    budget: Duration,
    f: impl FnOnce() -> (bool, String),
) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = f();
    let elapsed = start.elapsed();
    let pass = ok && elapsed <= budget;
    let line = format!(
        "{} criterion {id:>2} {name}: {detail} [{:.1} s of {} s]",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    println!("{line}");
    Outcome { id, name, pass, detail, elapsed }
}

fn rel(a: &Field, b: &Field) -> f64 {
    a.sub(b).l2_norm() / b.l2_norm()
}

fn spectral_identities() -> (bool, String) {
    let g = SpectralGrid::new(16, 9.0).unwrap();
    let modes = [1, -3, 2];
    let p = Field::plane_wave(&g, modes);
    let k = g.fundamental() * ((1 + 9 + 4) as f64).sqrt();
    let mut worst: f64 = 0.0;
    for sigma in [0.5, 1.0, 2.0] {
        let want = p.scale(k.powf(sigma).into());
        worst = worst.max(rel(&omega_pow(&p, sigma).unwrap(), &want));
    }
    for t in [0.3, -1.7] {
        let want = p.scale(Complex64::from_polar(1.0, -0.5 * t * k * k));
        worst = worst.max(rel(&free_propagate(&p, t).unwrap(), &want));
    }
    for tau in [0.5, 2.0] {
        let want = p.scale(((k * tau).sin() / k).into());
        worst = worst.max(rel(&wave_kernel(&p, tau).unwrap(), &want));
    }
    let f = random_field(&g, &mut rng(3), RHO);
    let planch = (f.fourier().l2_norm() - f.l2_norm()).abs() / f.l2_norm();
    let group = rel(
        &free_propagate(&free_propagate(&f, 0.7).unwrap(), 1.1).unwrap(),
        &free_propagate(&f, 1.8).unwrap(),
    );
    let inverse = rel(&free_propagate(&free_propagate(&f, 0.7).unwrap(), -0.7).unwrap(), &f);
    let worst = worst.max(planch).max(group).max(inverse);
    (worst <= SPECTRAL_TOL, format!("max relative error {worst:.2e} (tol {SPECTRAL_TOL:.0e})"))
}

fn dilation_identity() -> (bool, String) {
    // Fractional powers of a Gaussian decay algebraically; the box must hold
    // the dilated tails.
    let g = SpectralGrid::new(64, 48.0).unwrap();
    let f = Field::gaussian(&g, 1.0, 1.2);
    let lp = |h: &Field, alpha: f64, r: f64| lebesgue(&omega_pow(h, alpha).unwrap(), r);
    let mut worst: f64 = 0.0;
    for nu in [1.5, 2.0, 4.0] {
        let d = dilate(&f, nu).unwrap();
        for (alpha, r) in [(1.0, 2.0), (0.5, 2.0), (1.0, 4.0)] {
            let ratio = lp(&d, alpha, r) / lp(&f, alpha, r);
            let want = nu.powf(-alpha + 3.0 / r);
            worst = worst.max((ratio / want - 1.0).abs());
        }
    }
    (worst <= DILATION_TOL, format!("max relative deviation {worst:.2e} (tol {DILATION_TOL})"))
}

fn constant_source() -> (bool, String) {
    let g = SpectralGrid::new(16, 12.0).unwrap();
    let c: f64 = 1.3;
    let b = compute_b_static(&Field::constant(&g, c.into()), &NuQuadrature::default()).unwrap();
    let want = 0.5 * c * c;
    let err = b.values().iter().map(|v| (v.re - want).abs()).fold(0.0, f64::max) / want;
    (err <= CONSTANT_B_TOL, format!("max relative deviation from c^2/2: {err:.2e} (tol {CONSTANT_B_TOL:.0e})"))
}

fn b_oracle() -> (bool, String) {
    let g = SpectralGrid::new(24, 12.0).unwrap();
    let (amp, width) = (0.3, 1.5);
    let oracle = common::b_oracle_gaussian(&g, amp, width);
    let b = compute_b_static(&Field::gaussian(&g, amp, width), &NuQuadrature::default()).unwrap();
    let err = rel(&b, &oracle);
    (err <= B_ORACLE_TOL, format!("relative L2 distance {err:.2e} (tol {B_ORACLE_TOL:.0e})"))
}

fn l2_conservation() -> (bool, String) {
    let g = SpectralGrid::new(24, 12.0).unwrap();
    let cfg = SolverConfig::new(RHO, 0.5).unwrap();
    let v0 = Field::gaussian(&g, 0.0705, 1.0);
    let gauge = PhaseGauge::new(&compute_b_static(&v0, &cfg.quad).unwrap()).unwrap();
    let traj = Trajectory::constant(cfg.mesh, &v0, Role::Amplitude);
    let w0 = random_field(&g, &mut rng(21), RHO);
    let out = linearized_solve(&traj, &gauge, &w0, &cfg).unwrap();
    let n0 = w0.l2_norm();
    let drift = out
        .fields()
        .iter()
        .map(|f| (f.l2_norm() - n0).abs() / n0)
        .fold(0.0, f64::max);
    (
        drift <= L2_DRIFT_TOL,
        format!("{} steps on 24^3, max relative drift {drift:.2e} (tol {L2_DRIFT_TOL:.0e})", cfg.mesh.n_steps()),
    )
}

fn dense_oracle() -> (bool, String) {
    let g = SpectralGrid::new(8, 8.0).unwrap();
    let mut cfg = SolverConfig::new(RHO, 0.5).unwrap().with_mesh(6.0, 24).unwrap();
    cfg.quad = NuQuadrature::new(100.0, 129, true).unwrap();
    let sol = picard_solve(&Field::gaussian(&g, 0.4, 1.0), &cfg).unwrap();
    let w0 = random_field(&g, &mut rng(11), RHO);
    let got = linearized_solve(&sol.trajectory, &sol.gauge, &w0, &cfg).unwrap();
    let bop = BOperator::new(&g, &cfg.quad).unwrap();
    let b = midpoint_b(&bop, &sol.trajectory, &sol.gauge).unwrap();
    let mut v = DVector::from_column_slice(w0.physical().values());
    let ds = cfg.mesh.step();
    for (j, bj) in b.iter().enumerate() {
        let l = common::dense_l(&g, bj, sol.gauge.b0(), cfg.mesh.s_mid(j).exp());
        v = (l * Complex64::new(0.0, -ds)).exp() * v;
    }
    let want = Field::new(&g, v.as_slice().to_vec(), Representation::Physical).unwrap();
    let err = rel(got.last(), &want);
    (err <= DENSE_TOL, format!("relative L2 distance at T {err:.2e} (tol {DENSE_TOL:.0e})"))
}

struct Scenario {
    grid: Arc<SpectralGrid>,
    cfg: SolverConfig,
    run: RunConfig,
    v0: Field,
}

fn scenario() -> Scenario {
    let run = RunConfig::parse(SCENARIO).unwrap();
    let grid = run.grid().unwrap();
    let cfg = run.solver_config().unwrap();
    let v0 = ws_scatter::config::Scenario::parse(&run.scenario.v0)
        .unwrap()
        .build(&grid)
        .unwrap();
    Scenario { grid, cfg, run, v0 }
}

fn contraction(sc: &Scenario, sol: &PicardSolution) -> (bool, String) {
    let r = &sol.report;
    let ok = r.converged
        && r.iterations <= MAX_PICARD_ITER
        && r.ratios.iter().all(|&q| q <= MAX_PICARD_RATIO);
    (
        ok,
        format!(
            "||v0; H^rho|| = {:.4}, {} iterations, ratios {:?} (max {MAX_PICARD_RATIO}, at most {MAX_PICARD_ITER} iterations)",
            sobolev(&sc.v0, sc.cfg.rho),
            r.iterations,
            r.ratios.iter().map(|q| format!("{q:.2e}")).collect::<Vec<_>>()
        ),
    )
}

fn b_limit(sc: &Scenario, sol: &PicardSolution) -> (bool, String) {
    let opts = DecayOptions { decades: 2.0, samples: 9 };
    let r = check_b_limit(sol, &sc.cfg, &opts).unwrap();
    // A fixed non-constant offset of the reference must be detected.
    let bump = Field::gaussian(&sc.grid, 1e-4, 1.5);
    let offset = sol.gauge.b0().add(&bump);
    let control = check_b_limit_against(&sol.trajectory, &sol.gauge, &offset, &sc.cfg, &opts).unwrap();
    let theta_hat = r.fit.as_ref().map_or(f64::NAN, |f| f.theta);
    let ok = r.pass && theta_hat >= RATE_FRACTION * THETA && r.monotone && !control.pass;
    (
        ok,
        format!(
            "fitted exponent {theta_hat:.3} (need >= {:.3}), monotone {}, offset reference rejected {}",
            RATE_FRACTION * THETA,
            r.monotone,
            !control.pass
        ),
    )
}

fn continuity(sc: &Scenario, sol: &PicardSolution) -> (bool, String) {
    let r = check_continuity_modulus(&sol.trajectory, &sc.cfg, &DecayOptions::default()).unwrap();
    let want = RATE_FRACTION * sc.cfg.rho_prime / 2.0;
    let theta_hat = r.fit.as_ref().map_or(f64::NAN, |f| f.theta);
    (r.pass && theta_hat >= want, format!("fitted exponent {theta_hat:.3} (need >= {want:.3})"))
}

fn wave_operator_convergence(sc: &Scenario) -> (bool, String) {
    let u0 = ws_scatter::config::Scenario::parse(&sc.run.scenario.u0)
        .unwrap()
        .build(&sc.grid)
        .unwrap();
    let res = wave_operator(&u0, &sc.cfg, &DEFAULT_TIMES).unwrap();
    let errors: Vec<f64> = res.samples.iter().map(|s| s.fh_error).collect();
    let decreasing = monotone_with_ripple(&errors, RIPPLE) && errors.last() < errors.first();
    let growth = |t: f64| (1.0 + t.ln().abs()).powi(2);
    let first = &res.samples[0];
    let a1 = first.profile_norm / growth(first.t_phys);
    let bounded = res
        .samples
        .iter()
        .all(|s| s.profile_norm <= a1 * growth(s.t_phys) * (1.0 + 1e-12));
    (
        decreasing && bounded,
        format!(
            "FH^rho errors {:?} at t = {:?}, ripple <= {RIPPLE}: {decreasing}; growth bound with a1 = {a1:.4}: {bounded}",
            errors.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>(),
            DEFAULT_TIMES
        ),
    )
}

fn data_continuity(sc: &Scenario) -> (bool, String) {
    let lambda = (sc.cfg.rho + 1.0) / 2.0;
    let dir = odd_direction(&sc.grid, 1.0, lambda).unwrap();
    let r = check_data_continuity(&sc.v0, &dir, &sc.cfg, &DEFAULT_DELTAS, true).unwrap();
    let responses: Vec<String> = r.rows.iter().map(|row| format!("{:.4}", row.2)).collect();
    let flip = r.flipped.unwrap_or(f64::NAN);
    (
        r.pass && r.spread <= LINEARITY_FACTOR,
        format!(
            "responses {responses:?} for deltas {DEFAULT_DELTAS:?}, spread {:.4} (max {LINEARITY_FACTOR}), sign-flip distance {flip:.4e} vs {:.4e}",
            r.spread, r.rows[0].1
        ),
    )
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn determinism() -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, TINY).unwrap();
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_ws-scatter"))
            .args(["verify", "--suite", "all", "--seed", "7", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        if !status.status.success() {
            return (false, format!("verify exited with {:?}", status.status.code()));
        }
        runs.push(csv_files(&out));
    }
    let names: Vec<&str> = runs[0].iter().map(|(n, _)| n.as_str()).collect();
    let same = runs[0] == runs[1] && names.len() >= 6;
    (same, format!("{} CSV files byte-identical across runs: {same} ({names:?})", names.len()))
}

fn main() {
    let min = |m: u64| Duration::from_secs(60 * m);
    let mut outcomes = vec![
        run(1, "spectral identities", Duration::from_secs(10), spectral_identities),
        run(2, "dilation norm identity", Duration::from_secs(30), dilation_identity),
        run(3, "static B of a constant", Duration::from_secs(30), constant_source),
        run(4, "B oracle agreement", min(2), b_oracle),
        run(5, "L2 conservation", min(5), l2_conservation),
        run(6, "dense oracle equivalence", min(5), dense_oracle),
    ];

    let sc = scenario();
    let mut solution = None;
    outcomes.push(run(7, "Picard contraction", min(15), || {
        let sol = picard_solve(&sc.v0, &sc.cfg).unwrap();
        let out = contraction(&sc, &sol);
        solution = Some(sol);
        out
    }));
    let sol = solution.expect("Picard solve");
    outcomes.push(run(8, "B-limit rate", min(15), || b_limit(&sc, &sol)));
    outcomes.push(run(9, "continuity modulus", min(15), || continuity(&sc, &sol)));
    outcomes.push(run(10, "wave-operator convergence", min(20), || wave_operator_convergence(&sc)));
    outcomes.push(run(11, "data continuity", min(30), || data_continuity(&sc)));
    outcomes.push(run(12, "determinism", min(5), determinism));

    assert_eq!(outcomes.len(), 12);
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.pass)
        .map(|o| format!("{} {} ({}; {:.1} s)", o.id, o.name, o.detail, o.elapsed.as_secs_f64()))
        .collect();
    println!("acceptance: {} of 12 criteria pass", 12 - failed.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:#?}");
        std::process::exit(1);
    }
}
