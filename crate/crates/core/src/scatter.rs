//! Wave-operator pipeline: asymptotic datum `u0` at infinite time to the
//! solution `u(t)` for large `t`, through the inverted problem on `(0, T]`.
//!
//! Physical time `t` and inverted time `t_c = 1/t` are linked by
//! `u~(t) = conj(F u~_c(t_c))` with `u~ = U(-t) u` and `u~_c = U(-t_c) u_c`.
//! The grid transform `F` is [`fourier_datum`].

use std::path::Path;

use crate::csvfmt;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::norms::sobolev;
use crate::par;
use crate::solver::{picard_solve, PicardSolution, SolverConfig};
use crate::spectral::{fourier_datum, free_propagate, inverse_fourier_datum};

/// Default physical sample times.
pub const DEFAULT_TIMES: [f64; 5] = [2.0, 5.0, 10.0, 20.0, 50.0];

/// `v0 = conj(F u0)`.
pub fn asymptotic_to_v0(u0: &Field) -> Field {
    fourier_datum(u0).conj()
}

/// Inverse of [`asymptotic_to_v0`].
pub fn v0_to_asymptotic(v0: &Field) -> Field {
    fourier_datum(v0).conj()
}

/// `||F^-1 f||_{H^rho}`.
pub fn fh_norm(f: &Field, rho: f64) -> f64 {
    sobolev(&inverse_fourier_datum(f), rho)
}

fn check_covered(sol: &PicardSolution, t_c: f64) -> Result<()> {
    let mesh = sol.trajectory.mesh();
    let lo = mesh.t_min() * (1.0 - 1e-12);
    if !(t_c >= lo) {
        return Err(Error::TimeOutOfRange { t: t_c, t_max: mesh.t_max() });
    }
    mesh.locate(t_c).map(|_| ())
}

/// `u~_c(t_c) = exp(-i phi(t_c)) v(t_c)`.
fn profile_c(sol: &PicardSolution, t_c: f64) -> Result<Field> {
    check_covered(sol, t_c)?;
    let v = sol.trajectory.sample(t_c)?;
    sol.gauge.unphase(&v, t_c)
}

/// `u~(1/t_c) = conj(F u~_c(t_c))`.
pub fn free_profile(sol: &PicardSolution, t_c: f64) -> Result<Field> {
    Ok(fourier_datum(&profile_c(sol, t_c)?).conj())
}

/// `u(t_phys) = U(t_phys) u~(t_phys)` with `t_phys = 1/t_c`.
pub fn reconstruct_u(sol: &PicardSolution, t_c: f64) -> Result<Field> {
    free_propagate(&free_profile(sol, t_c)?, 1.0 / t_c)
}

/// Recovers `u_c(t_c)` from `u(1/t_c)`.
pub fn invert_u(u: &Field, t_c: f64) -> Result<Field> {
    if !(t_c > 0.0 && t_c.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_c must be > 0, got {t_c}")));
    }
    let tilde = free_propagate(u, -1.0 / t_c)?;
    let profile_c = inverse_fourier_datum(&tilde.conj());
    free_propagate(&profile_c, t_c)
}

/// `w(t) = F^-1 exp(-i phi(1/t)) F u~(t)`.
pub fn modified_profile_w(sol: &PicardSolution, t_phys: f64) -> Result<Field> {
    if !(t_phys > 0.0 && t_phys.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_phys must be > 0, got {t_phys}")));
    }
    let t_c = 1.0 / t_phys;
    let u = reconstruct_u(sol, t_c)?;
    let tilde = free_propagate(&u, -t_phys)?;
    let inner = sol.gauge.unphase(&fourier_datum(&tilde), t_c)?;
    Ok(inverse_fourier_datum(&inner))
}

/// One physical sample time.
#[derive(Clone, Debug)]
pub struct ScatterSample {
    pub t_phys: f64,
    pub u: Field,
    pub w: Field,
    /// `||w - u0||_{FH^rho}`.
    pub fh_error: f64,
    /// `||u~; FH^rho||`.
    pub profile_norm: f64,
    pub l2_norm: f64,
}

#[derive(Clone, Debug)]
pub struct ScatterResult {
    pub u0: Field,
    pub solution: PicardSolution,
    /// In the order of the requested times.
    pub samples: Vec<ScatterSample>,
}

impl ScatterResult {
    /// CSV with columns `t_phys,FHrho_error,L2_norm`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t_phys", "FHrho_error", "L2_norm"])?;
        for s in &self.samples {
            w.write_record([csvfmt(s.t_phys), csvfmt(s.fh_error), csvfmt(s.l2_norm)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Solves the inverted problem for `v0 = conj(F u0)` and samples `u`, `w`
/// at the physical `times`.
pub fn wave_operator(u0: &Field, cfg: &SolverConfig, times: &[f64]) -> Result<ScatterResult> {
    let v0 = asymptotic_to_v0(u0);
    let solution = picard_solve(&v0, cfg)?;
    let samples = par::try_map_range(times.len(), |i| {
        let t_phys = times[i];
        if !(t_phys > 0.0 && t_phys.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_phys must be > 0, got {t_phys}")));
        }
        let u = reconstruct_u(&solution, 1.0 / t_phys)?;
        let w = modified_profile_w(&solution, t_phys)?;
        let tilde = free_propagate(&u, -t_phys)?;
        Ok(ScatterSample {
            t_phys,
            fh_error: fh_norm(&w.sub(u0), cfg.rho),
            profile_norm: fh_norm(&tilde, cfg.rho),
            l2_norm: u.l2_norm(),
            u,
            w,
        })
    })?;
    Ok(ScatterResult {
        u0: u0.clone(),
        solution,
        samples,
    })
}
