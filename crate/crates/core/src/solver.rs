//! Log-time unitary stepping of the linearized equation and the Picard
//! fixed point for the nonlinear amplitude equation.
//!
//! In `s = ln t` the linearized equation reads `i dv'/ds = L(v(e^s)) v'`.
//! One step applies `exp(-i ds L_mid)` by its Taylor series, with `L_mid`
//! built from `B` at the step midpoint.

use std::path::Path;
use std::sync::Arc;

use log::{debug, info, warn};
use num_complex::Complex64;

use crate::bgauge::{BOperator, LOperator, NuQuadrature, PhaseGauge};
use crate::csvfmt;
use crate::error::{Error, Result};
use crate::field::{Field, Representation};
use crate::norms::{sobolev, DEFAULT_EPS_PM};
use crate::trajectory::{LogTimeMesh, Role, Trajectory, DEFAULT_STEPS, DEFAULT_S_SPAN};

/// Relative L2 drift tolerated in a single step.
pub const STEP_DRIFT_TOL: f64 = 1e-12;
/// Series terms tried before a step is declared too large.
pub const MAX_SERIES_TERMS: usize = 60;

pub const DEFAULT_RHO: f64 = 1.25;
pub const DEFAULT_T: f64 = 0.5;
pub const DEFAULT_PICARD_TOL: f64 = 1e-9;
pub const DEFAULT_PICARD_MAX_ITER: usize = 30;
pub const DEFAULT_EXPM_TOL: f64 = 1e-15;

/// `min((rho - 1) / 2, 1/8)`.
pub fn default_theta(rho: f64) -> f64 {
    ((rho - 1.0) / 2.0).min(0.125)
}

/// Analytic and discretization parameters of a solve.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub rho: f64,
    pub rho_prime: f64,
    pub theta: f64,
    pub eps_pm: f64,
    pub t_final: f64,
    pub mesh: LogTimeMesh,
    pub quad: NuQuadrature,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub expm_tol: f64,
}

impl SolverConfig {
    /// Defaults for the given `rho` and `T`; the mesh ends at `T`.
    pub fn new(rho: f64, t_final: f64) -> Result<Self> {
        let cfg = Self {
            rho,
            rho_prime: rho,
            theta: default_theta(rho),
            eps_pm: DEFAULT_EPS_PM,
            t_final,
            mesh: LogTimeMesh::ending_at(t_final, DEFAULT_S_SPAN, DEFAULT_STEPS)?,
            quad: NuQuadrature::default(),
            picard_tol: DEFAULT_PICARD_TOL,
            picard_max_iter: DEFAULT_PICARD_MAX_ITER,
            expm_tol: DEFAULT_EXPM_TOL,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Replaces the mesh by one ending at `T` with the given span and steps.
    pub fn with_mesh(mut self, span: f64, n_steps: usize) -> Result<Self> {
        self.mesh = LogTimeMesh::ending_at(self.t_final, span, n_steps)?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::ConfigValue { key: key.into(), msg });
        if !(self.rho > 1.0 && self.rho < 1.5) {
            return bad("rho", format!("rho must lie in (1, 3/2), got {}", self.rho));
        }
        if !(self.rho_prime > 1.0 && self.rho_prime < 1.5) {
            return bad("rho_prime", format!("rho_prime must lie in (1, 3/2), got {}", self.rho_prime));
        }
        let cap = 0.5f64.min(self.rho - 1.0);
        if !(self.theta > 0.0 && self.theta < cap) {
            return bad(
                "theta",
                format!("theta must lie in (0, min(1/2, rho - 1)) = (0, {cap}), got {}", self.theta),
            );
        }
        if !(self.eps_pm > 0.0 && self.eps_pm.is_finite()) {
            return bad("eps_pm", format!("eps_pm must be > 0, got {}", self.eps_pm));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad("T", format!("T must be > 0, got {}", self.t_final));
        }
        if (self.mesh.s_max() - self.t_final.ln()).abs() > 1e-12 * (1.0 + self.t_final.ln().abs()) {
            return bad("mesh", "mesh must end at ln T".into());
        }
        if !(self.picard_tol > 0.0) {
            return bad("picard_tol", format!("picard_tol must be > 0, got {}", self.picard_tol));
        }
        if self.picard_max_iter == 0 {
            return bad("picard_max_iter", "picard_max_iter must be >= 1".into());
        }
        if !(self.expm_tol > 0.0 && self.expm_tol < 1e-6) {
            return bad("expm_tol", format!("expm_tol must lie in (0, 1e-6), got {}", self.expm_tol));
        }
        Ok(())
    }

    /// `R = 2 ||v0; H^rho||`.
    pub fn radius(&self, v0: &Field) -> f64 {
        2.0 * sobolev(v0, self.rho)
    }

    /// `T^theta R^2 (1 + R^2 (1 + |ln T|))^8` with unit constant.
    pub fn smallness_lhs(&self, v0: &Field) -> f64 {
        let r = self.radius(v0);
        let t = self.t_final;
        t.powf(self.theta) * r * r * (1.0 + r * r * (1.0 + t.ln().abs())).powi(8)
    }
}

/// Times `exp(s_mid(j))` of the step midpoints.
pub fn midpoint_times(mesh: &LogTimeMesh) -> Vec<f64> {
    (0..mesh.n_steps()).map(|j| mesh.s_mid(j).exp()).collect()
}

/// Which `B` the operator at each step midpoint uses.
#[derive(Clone, Copy)]
pub enum MidpointB<'a> {
    /// One field per step.
    PerStep(&'a [Field]),
    /// The same field at every step.
    Uniform(&'a Field),
}

impl MidpointB<'_> {
    fn at(&self, j: usize) -> &Field {
        match self {
            MidpointB::PerStep(b) => &b[j],
            MidpointB::Uniform(b) => b,
        }
    }
}

/// Starting iterate of the Picard loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Seed {
    /// `B(u_c)` replaced by `B0`.
    Static,
    /// `B(u_c)` replaced by zero.
    ZeroB,
}

fn raw_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(-i ds L) v` by Taylor series, stopped once a term falls below
/// `tol * |v|`.
pub(crate) fn exp_step(
    op: &LOperator<'_>,
    v: &[Complex64],
    ds: f64,
    tol: f64,
    step: usize,
) -> Result<Vec<Complex64>> {
    let nv = raw_norm(v);
    let mut sum = v.to_vec();
    if nv == 0.0 {
        return Ok(sum);
    }
    let mut term = v.to_vec();
    for k in 1..=MAX_SERIES_TERMS {
        let c = Complex64::new(0.0, -ds / k as f64);
        term = op.apply_raw(&term);
        for (t, s) in term.iter_mut().zip(sum.iter_mut()) {
            *t *= c;
            *s += *t;
        }
        let tn = raw_norm(&term);
        if !tn.is_finite() {
            break;
        }
        if tn <= tol * nv {
            return Ok(sum);
        }
    }
    Err(Error::SeriesDivergence {
        step,
        terms: MAX_SERIES_TERMS,
        tol,
    })
}

/// Steps `v0p` from `s_min` to `s_max` with the supplied midpoint fields.
pub fn propagate(
    b_mid: MidpointB<'_>,
    gauge: &PhaseGauge,
    v0p: &Field,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    let mesh = cfg.mesh;
    if let MidpointB::PerStep(b) = b_mid {
        if b.len() != mesh.n_steps() {
            return Err(Error::InvalidArgument(format!(
                "expected {} midpoint fields, got {}",
                mesh.n_steps(),
                b.len()
            )));
        }
    }
    if !v0p.same_grid(gauge.b0()) {
        return Err(Error::GridMismatch);
    }
    let grid = Arc::clone(v0p.grid());
    let ds = mesh.step();
    let mut fields = Vec::with_capacity(mesh.n_nodes());
    let start = v0p.physical();
    let n0 = start.l2_norm();
    let mut cur = start.values().to_vec();
    fields.push(start);
    for j in 0..mesh.n_steps() {
        let op = LOperator::new(gauge, b_mid.at(j), mesh.s_mid(j).exp())?;
        let next = exp_step(&op, &cur, ds, cfg.expm_tol, j)?;
        let (a, b) = (raw_norm(&cur), raw_norm(&next));
        if a > 0.0 {
            let drift = (b - a).abs() / a;
            if drift > STEP_DRIFT_TOL {
                return Err(Error::Unitarity { step: j, drift });
            }
        }
        cur = next;
        fields.push(Field::new(&grid, cur.clone(), Representation::Physical)?);
    }
    let traj = Trajectory::new(mesh, fields, Role::Linearized)?;
    debug!(
        "linearized solve: {} steps, final relative L2 drift {:.3e}",
        mesh.n_steps(),
        if n0 > 0.0 { (traj.last().l2_norm() - n0).abs() / n0 } else { 0.0 }
    );
    Ok(traj)
}

/// `B(u_c, t)` at every step midpoint for the dressed trajectory.
pub fn midpoint_b(
    bop: &BOperator,
    v_traj: &Trajectory,
    gauge: &PhaseGauge,
) -> Result<Vec<Field>> {
    bop.compute_along(v_traj, gauge, &midpoint_times(v_traj.mesh()))
}

fn check_mesh(v_traj: &Trajectory, cfg: &SolverConfig) -> Result<()> {
    if *v_traj.mesh() != cfg.mesh {
        return Err(Error::InvalidArgument("trajectory is not on the configured mesh".into()));
    }
    Ok(())
}

/// Solves the linearized equation driven by `v_traj` from `v'(s_min) = v0p`.
pub fn linearized_solve(
    v_traj: &Trajectory,
    gauge: &PhaseGauge,
    v0p: &Field,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_mesh(v_traj, cfg)?;
    let bop = BOperator::new(v_traj.grid(), &cfg.quad)?;
    let b = midpoint_b(&bop, v_traj, gauge)?;
    propagate(MidpointB::PerStep(&b), gauge, v0p, cfg)
}

/// Outcome of the Picard loop.
#[derive(Clone, Debug, Default)]
pub struct PicardReport {
    /// `d_k = sup_t ||v^(k+1) - v^(k)||_{H^rho}`.
    pub distances: Vec<f64>,
    /// `d_{k+1} / d_k`.
    pub ratios: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub smallness_lhs: f64,
}

impl PicardReport {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }

    /// CSV with columns `iter,d_k,ratio`; the first ratio is empty.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["iter", "d_k", "ratio"])?;
        for (k, d) in self.distances.iter().enumerate() {
            let ratio = if k == 0 { String::new() } else { csvfmt(self.ratios[k - 1]) };
            w.write_record([k.to_string(), csvfmt(*d), ratio])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Converged amplitude trajectory together with its gauge.
#[derive(Clone, Debug)]
pub struct PicardSolution {
    pub trajectory: Trajectory,
    pub gauge: PhaseGauge,
    pub report: PicardReport,
}

/// Fixed point of `v -> v'` starting from the static seed.
pub fn picard_solve(v0: &Field, cfg: &SolverConfig) -> Result<PicardSolution> {
    picard_solve_seeded(v0, cfg, Seed::Static)
}

pub fn picard_solve_seeded(v0: &Field, cfg: &SolverConfig, seed: Seed) -> Result<PicardSolution> {
    cfg.validate()?;
    let grid = v0.grid();
    let bop = BOperator::new(grid, &cfg.quad)?;
    let b0 = bop.compute_static(v0)?;
    let gauge = PhaseGauge::new(&b0)?;
    let mut report = PicardReport {
        smallness_lhs: cfg.smallness_lhs(v0),
        ..Default::default()
    };
    if report.smallness_lhs > 0.5 {
        warn!(
            "smallness condition not met with unit constant: lhs {:.3e} > 1/2",
            report.smallness_lhs
        );
    }
    if v0.max_abs() == 0.0 {
        report.converged = true;
        let traj = Trajectory::constant(cfg.mesh, v0, Role::Amplitude);
        return Ok(PicardSolution { trajectory: traj, gauge, report });
    }

    let zero = Field::zeros(grid);
    let mut cur = match seed {
        Seed::Static => propagate(MidpointB::Uniform(gauge.b0()), &gauge, v0, cfg)?,
        Seed::ZeroB => propagate(MidpointB::Uniform(&zero), &gauge, v0, cfg)?,
    };
    let mut run_of_growth = 0;
    for k in 0..cfg.picard_max_iter {
        let b = midpoint_b(&bop, &cur, &gauge)?;
        let next = propagate(MidpointB::PerStep(&b), &gauge, v0, cfg)?;
        let d = next.sup_distance(&cur, cfg.rho);
        if let Some(&prev) = report.distances.last() {
            let ratio = if prev > 0.0 { d / prev } else { 0.0 };
            report.ratios.push(ratio);
            run_of_growth = if ratio >= 1.0 { run_of_growth + 1 } else { 0 };
        }
        report.distances.push(d);
        report.iterations = k + 1;
        info!("picard iteration {}: d = {:.3e}", k + 1, d);
        cur = next;
        if run_of_growth >= 2 {
            return Err(Error::NonContraction(Box::new(report)));
        }
        if d < cfg.picard_tol {
            report.converged = true;
            break;
        }
    }
    if !report.converged {
        warn!("Picard loop stopped after {} iterations without convergence", report.iterations);
    }
    report.residual = fixed_point_residual(&cur, &gauge, cfg)?;
    let trajectory = Trajectory::new(cfg.mesh, cur.fields().to_vec(), Role::Amplitude)?;
    Ok(PicardSolution { trajectory, gauge, report })
}

/// `sup_j ||v_{j+1} - exp(-i ds L_mid) v_j||_2 / ||v_0||_2` with a freshly
/// built `B`.
pub fn fixed_point_residual(v_traj: &Trajectory, gauge: &PhaseGauge, cfg: &SolverConfig) -> Result<f64> {
    check_mesh(v_traj, cfg)?;
    let n0 = v_traj.initial().l2_norm();
    if n0 == 0.0 && v_traj.fields().iter().all(|f| f.max_abs() == 0.0) {
        return Ok(0.0);
    }
    let bop = BOperator::new(v_traj.grid(), &cfg.quad)?;
    let b = midpoint_b(&bop, v_traj, gauge)?;
    let mesh = cfg.mesh;
    let scale = v_traj.grid().cell_volume().sqrt();
    let mut worst: f64 = 0.0;
    for j in 0..mesh.n_steps() {
        let op = LOperator::new(gauge, &b[j], mesh.s_mid(j).exp())?;
        let stepped = exp_step(&op, v_traj.field(j).values(), mesh.step(), cfg.expm_tol, j)?;
        let diff: f64 = stepped
            .iter()
            .zip(v_traj.field(j + 1).values())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(diff * scale);
    }
    Ok(if n0 > 0.0 { worst / n0 } else { worst })
}
