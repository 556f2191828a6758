//! Rate fits and the measurable estimate checks.

use std::path::Path;
use std::sync::Arc;

use log::info;
use nalgebra::{DMatrix, DVector};

use crate::bgauge::{BOperator, PhaseGauge};
use crate::csvfmt;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::SpectralGrid;
use crate::norms::{norm, sobolev, NormSpec};
use crate::par;
use crate::random::{band_limited_field, default_band, rng};
use crate::solver::{picard_solve, PicardSolution, SolverConfig};
use crate::trajectory::Trajectory;

/// Fraction of the predicted exponent a fit must reach.
pub const RATE_FRACTION: f64 = 0.75;
/// Tolerated relative increase between consecutive samples of a decaying quantity.
pub const RIPPLE: f64 = 0.10;
/// Allowed spread of the response ratio in the data-continuity check.
pub const LINEARITY_FACTOR: f64 = 3.0;
/// Allowed growth of the maximal inequality ratio under grid refinement.
pub const RATIO_GROWTH: f64 = 1.2;
pub const MIN_SAMPLES: usize = 5;
pub const MIN_DECADES: f64 = 1.5;

/// `ln Q = c + theta ln t + p ln(1 + |ln t|)` fitted by least squares.
#[derive(Clone, Debug)]
pub struct RateFit {
    pub samples: Vec<(f64, f64)>,
    pub theta: f64,
    pub log_power: f64,
    pub log_prefactor: f64,
    /// Root-mean-square residual in `ln Q`.
    pub residual: f64,
}

pub fn fit_log_corrected_rate(samples: &[(f64, f64)]) -> Result<RateFit> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    for &(t, q) in samples {
        if !(t > 0.0 && t.is_finite() && q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rate fit needs positive finite samples, got ({t}, {q})"
            )));
        }
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &(t, _)| (lo.min(t), hi.max(t)));
    let decades = (hi / lo).log10();
    if decades < MIN_DECADES {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs samples spanning {MIN_DECADES} decades, got {decades:.3}"
        )));
    }
    let m = samples.len();
    let x = DMatrix::from_fn(m, 3, |i, j| {
        let lt = samples[i].0.ln();
        match j {
            0 => 1.0,
            1 => lt,
            _ => (1.0 + lt.abs()).ln(),
        }
    });
    let y = DVector::from_iterator(m, samples.iter().map(|&(_, q)| q.ln()));
    let coef = x
        .clone()
        .svd(true, true)
        .solve(&y, 1e-13)
        .map_err(|e| Error::InvalidArgument(format!("rate fit failed: {e}")))?;
    let r = &x * &coef - &y;
    let theta = coef[1];
    if !theta.is_finite() {
        return Err(Error::InvalidArgument("rate fit produced a non-finite exponent".into()));
    }
    Ok(RateFit {
        samples: samples.to_vec(),
        theta,
        log_power: coef[2],
        log_prefactor: coef[0],
        residual: (r.norm_squared() / m as f64).sqrt(),
    })
}

/// `count` times from `t_hi` down to `t_hi 10^-decades`, log-spaced.
pub fn log_spaced(t_hi: f64, decades: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| t_hi * 10f64.powf(-decades * i as f64 / (count - 1) as f64))
        .collect()
}

/// True if no value exceeds its predecessor by more than `ripple`.
pub fn monotone_with_ripple(values: &[f64], ripple: f64) -> bool {
    values.windows(2).all(|w| w[1] <= (1.0 + ripple) * w[0])
}

/// Sampling of a decay check.
#[derive(Clone, Debug)]
pub struct DecayOptions {
    pub decades: f64,
    pub samples: usize,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self { decades: 2.0, samples: 9 }
    }
}

#[derive(Clone, Debug)]
pub struct BLimitRow {
    pub t: f64,
    pub beta: f64,
    pub norm: f64,
}

#[derive(Clone, Debug)]
pub struct BLimitReport {
    pub theta: f64,
    /// `2 sigma - 1/2 - 2 theta`.
    pub beta: f64,
    pub extra_betas: Vec<f64>,
    /// Ordered by decreasing `t`, one block per exponent.
    pub rows: Vec<BLimitRow>,
    pub fit: Option<RateFit>,
    pub monotone: bool,
    pub pass: bool,
}

impl BLimitReport {
    pub fn norms_at(&self, beta: f64) -> Vec<f64> {
        self.rows.iter().filter(|r| r.beta == beta).map(|r| r.norm).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "beta", "norm_Hdot_beta_of_Bdiff"])?;
        for r in &self.rows {
            w.write_record([csvfmt(r.t), csvfmt(r.beta), csvfmt(r.norm)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Decay of `||B(t) - reference||` in `Hdot^beta` from precomputed `B(t)`.
///
/// `times` must be decreasing.
pub fn b_limit_report(
    times: &[f64],
    b: &[Field],
    reference: &Field,
    sigma: f64,
    theta: f64,
    extra_betas: &[f64],
) -> Result<BLimitReport> {
    let beta = 2.0 * sigma - 0.5 - 2.0 * theta;
    let mut betas = vec![beta];
    betas.extend(extra_betas.iter().copied().filter(|&x| x != beta));
    let diffs: Vec<Field> = b.iter().map(|f| f.sub(reference)).collect();
    let mut rows = Vec::new();
    let mut monotone = true;
    for &bt in &betas {
        let norms = diffs
            .iter()
            .map(|d| norm(d, NormSpec::Homogeneous { sigma: bt }))
            .collect::<Result<Vec<_>>>()?;
        monotone &= monotone_with_ripple(&norms, RIPPLE);
        rows.extend(times.iter().zip(&norms).map(|(&t, &n)| BLimitRow { t, beta: bt, norm: n }));
    }
    let main: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.beta == beta)
        .map(|r| (r.t, r.norm))
        .collect();
    let (fit, pass) = if main.iter().all(|&(_, q)| q == 0.0) {
        (None, true)
    } else {
        match fit_log_corrected_rate(&main) {
            Ok(fit) => {
                let ok = fit.theta >= RATE_FRACTION * theta && monotone;
                (Some(fit), ok)
            }
            Err(_) => (None, false),
        }
    };
    Ok(BLimitReport {
        theta,
        beta,
        extra_betas: betas[1..].to_vec(),
        rows,
        fit,
        monotone,
        pass,
    })
}

/// Exponents whose decay is checked alongside the main one.
pub const EXTRA_BETAS: [f64; 2] = [0.75, 1.0];

/// Measures `B(u_c, t) -> reference` along a solved trajectory.
pub fn check_b_limit_against(
    traj: &Trajectory,
    gauge: &PhaseGauge,
    reference: &Field,
    cfg: &SolverConfig,
    opts: &DecayOptions,
) -> Result<BLimitReport> {
    let times = log_spaced(cfg.t_final, opts.decades, opts.samples);
    let bop = BOperator::new(traj.grid(), &cfg.quad)?;
    let b = bop.compute_along(traj, gauge, &times)?;
    let report = b_limit_report(&times, &b, reference, cfg.rho, cfg.theta, &EXTRA_BETAS)?;
    info!(
        "b-limit: beta {:.3}, fitted exponent {:?}, pass {}",
        report.beta,
        report.fit.as_ref().map(|f| f.theta),
        report.pass
    );
    Ok(report)
}

/// [`check_b_limit_against`] with the gauge's own `B0`.
pub fn check_b_limit(sol: &PicardSolution, cfg: &SolverConfig, opts: &DecayOptions) -> Result<BLimitReport> {
    check_b_limit_against(&sol.trajectory, &sol.gauge, sol.gauge.b0(), cfg, opts)
}

#[derive(Clone, Debug)]
pub struct ContinuityReport {
    pub threshold: f64,
    /// `(t, ||v(t) - v0||_2)`, decreasing `t`.
    pub rows: Vec<(f64, f64)>,
    pub fit: Option<RateFit>,
    pub pass: bool,
}

impl ContinuityReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "norm_L2_of_vdiff"])?;
        for &(t, q) in &self.rows {
            w.write_record([csvfmt(t), csvfmt(q)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fits `||v(t) - v0||_2` against `t`; passes iff the exponent reaches
/// `0.75 rho' / 2`.
pub fn check_continuity_modulus(
    traj: &Trajectory,
    cfg: &SolverConfig,
    opts: &DecayOptions,
) -> Result<ContinuityReport> {
    let times = log_spaced(cfg.t_final, opts.decades, opts.samples);
    let v0 = traj.initial();
    let rows = times
        .iter()
        .map(|&t| Ok((t, traj.sample(t)?.sub(v0).l2_norm())))
        .collect::<Result<Vec<_>>>()?;
    let threshold = RATE_FRACTION * cfg.rho_prime / 2.0;
    let (fit, pass) = if rows.iter().all(|&(_, q)| q == 0.0) {
        (None, true)
    } else {
        match fit_log_corrected_rate(&rows) {
            Ok(fit) => {
                let ok = fit.theta >= threshold;
                (Some(fit), ok)
            }
            Err(_) => (None, false),
        }
    };
    info!(
        "continuity: fitted exponent {:?}, threshold {threshold:.3}, pass {pass}",
        fit.as_ref().map(|f| f.theta)
    );
    Ok(ContinuityReport { threshold, rows, fit, pass })
}

#[derive(Clone, Debug)]
pub struct SobolevRow {
    pub n: usize,
    pub trial: usize,
    /// `||omega^{1/2}(uv)||_2 / (||omega u||_2 ||omega v||_2)`.
    pub product_ratio: f64,
    /// `||fu; Hdot^1|| / (||f; M^{1.2}|| ||u; Hdot^1||)`.
    pub multiplier_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct SobolevReport {
    pub rows: Vec<SobolevRow>,
    /// `(n, max product ratio, max multiplier ratio)` per grid.
    pub maxima: Vec<(usize, f64, f64)>,
    pub pass: bool,
}

impl SobolevReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["n", "trial", "product_ratio", "multiplier_ratio"])?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.trial.to_string(),
                csvfmt(r.product_ratio),
                csvfmt(r.multiplier_ratio),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Product estimate with `sigma = 1/2`, `sigma_1 = sigma_2 = 1`, `r = 2`.
pub fn product_ratio(u: &Field, v: &Field) -> Result<f64> {
    let lhs = norm(&u.mul(v), NormSpec::Homogeneous { sigma: 0.5 })?;
    let ru = norm(u, NormSpec::Homogeneous { sigma: 1.0 })?;
    let rv = norm(v, NormSpec::Homogeneous { sigma: 1.0 })?;
    Ok(ratio(lhs, ru * rv))
}

/// Multiplier estimate with `sigma = 1.2`, `sigma' = 1`.
pub fn multiplier_ratio(f: &Field, u: &Field) -> Result<f64> {
    let lhs = norm(&f.mul(u), NormSpec::Homogeneous { sigma: 1.0 })?;
    let mf = norm(f, NormSpec::Multiplier { sigma: 1.2 })?;
    let ru = norm(u, NormSpec::Homogeneous { sigma: 1.0 })?;
    Ok(ratio(lhs, mf * ru))
}

/// Inequality ratios over random band-limited pairs on grids of equal box
/// length; the band is that of the coarsest grid so every grid sees the
/// same fields.
pub fn check_sobolev_ratios(
    box_length: f64,
    sizes: &[usize],
    trials: usize,
    seed: u64,
    rho: f64,
) -> Result<SobolevReport> {
    let coarsest = *sizes
        .iter()
        .min()
        .ok_or_else(|| Error::InvalidArgument("no grid sizes given".into()))?;
    let band = default_band(coarsest);
    let mut rows = Vec::new();
    let mut maxima = Vec::new();
    for &n in sizes {
        let grid: Arc<SpectralGrid> = SpectralGrid::new(n, box_length)?;
        let mut r = rng(seed);
        let pairs: Vec<(Field, Field)> = (0..trials)
            .map(|_| {
                let u = band_limited_field(&grid, &mut r, band, rho);
                let v = band_limited_field(&grid, &mut r, band, rho);
                (u, v)
            })
            .collect();
        let grid_rows = par::try_map_range(trials, |i| {
            let (u, v) = &pairs[i];
            Ok::<_, Error>(SobolevRow {
                n,
                trial: i,
                product_ratio: product_ratio(u, v)?,
                multiplier_ratio: multiplier_ratio(u, v)?,
            })
        })?;
        let m23 = grid_rows.iter().map(|r| r.product_ratio).fold(0.0, f64::max);
        let m26 = grid_rows.iter().map(|r| r.multiplier_ratio).fold(0.0, f64::max);
        maxima.push((n, m23, m26));
        rows.extend(grid_rows);
    }
    let finite = rows
        .iter()
        .all(|r| r.product_ratio.is_finite() && r.multiplier_ratio.is_finite());
    let stable = maxima.windows(2).all(|w| {
        w[1].1 <= RATIO_GROWTH * w[0].1 && w[1].2 <= RATIO_GROWTH * w[0].2
    });
    info!("sobolev ratios: maxima {maxima:?}");
    Ok(SobolevReport {
        rows,
        maxima,
        pass: finite && stable,
    })
}

/// `x_1 exp(-|x|^2 / 2 width^2)`, made exactly odd on the grid and scaled
/// to unit `H^lambda` norm.
pub fn odd_direction(grid: &Arc<SpectralGrid>, width: f64, lambda: f64) -> Result<Field> {
    let n = grid.n_points();
    let f = Field::from_fn(grid, |[x, y, z]| {
        (x * (-(x * x + y * y + z * z) / (2.0 * width * width)).exp()).into()
    })?;
    let refl = |i: usize| (n - i) % n;
    let vals = f.values();
    let odd: Vec<f64> = (0..grid.len())
        .map(|idx| {
            let (ix, iy, iz) = (idx % n, (idx / n) % n, idx / (n * n));
            let r = refl(ix) + n * (refl(iy) + n * refl(iz));
            0.5 * (vals[idx].re - vals[r].re)
        })
        .collect();
    let odd = Field::from_real(grid, &odd)?;
    let s = sobolev(&odd, lambda);
    if s == 0.0 {
        return Err(Error::InvalidArgument("perturbation direction vanishes on this grid".into()));
    }
    Ok(odd.scale((1.0 / s).into()))
}

#[derive(Clone, Debug)]
pub struct DataContinuityReport {
    pub lambda: f64,
    /// `(delta, sup_t ||v_delta - v||_{H^lambda}, distance / delta)`.
    pub rows: Vec<(f64, f64, f64)>,
    /// Distance for `-delta` at the first delta.
    pub flipped: Option<f64>,
    /// Largest over smallest response.
    pub spread: f64,
    pub pass: bool,
}

impl DataContinuityReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["delta", "sup_Hlambda_distance", "response"])?;
        for &(d, dist, resp) in &self.rows {
            w.write_record([csvfmt(d), csvfmt(dist), csvfmt(resp)])?;
        }
        if let (Some(flip), Some(&(d, _, _))) = (self.flipped, self.rows.first()) {
            w.write_record([csvfmt(-d), csvfmt(flip), csvfmt(flip / d)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Default perturbation sizes.
pub const DEFAULT_DELTAS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Solves for `v0 + delta e` and compares with the solution for `v0` in
/// `L^inf H^lambda`, `lambda = (rho + 1) / 2`; `direction` should have unit
/// `H^lambda` norm. With `flip` the first delta is also run with the
/// opposite sign.
pub fn check_data_continuity(
    v0: &Field,
    direction: &Field,
    cfg: &SolverConfig,
    deltas: &[f64],
    flip: bool,
) -> Result<DataContinuityReport> {
    let lambda = (cfg.rho + 1.0) / 2.0;
    let base = picard_solve(v0, cfg)?;
    let mut signed: Vec<f64> = deltas.to_vec();
    if flip && !deltas.is_empty() {
        signed.push(-deltas[0]);
    }
    let distances = par::try_map_range(signed.len(), |i| {
        let d = signed[i];
        if d == 0.0 {
            return Ok(0.0);
        }
        let sol = picard_solve(&v0.axpy(d.into(), direction), cfg)?;
        Ok::<_, Error>(base.trajectory.sup_distance(&sol.trajectory, lambda))
    })?;
    let rows: Vec<(f64, f64, f64)> = deltas
        .iter()
        .zip(&distances)
        .map(|(&d, &dist)| (d, dist, if d == 0.0 { 0.0 } else { dist / d.abs() }))
        .collect();
    let flipped = if flip && !deltas.is_empty() { distances.last().copied() } else { None };
    let responses: Vec<f64> = rows.iter().filter(|r| r.0 != 0.0).map(|r| r.2).collect();
    let (lo, hi) = responses
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    let spread = if responses.is_empty() { 1.0 } else { hi / lo };
    let pass = responses.iter().all(|r| r.is_finite() && *r > 0.0) && spread <= LINEARITY_FACTOR;
    info!("data continuity: responses {responses:?}, spread {spread:.3}, pass {pass}");
    Ok(DataContinuityReport {
        lambda,
        rows,
        flipped,
        spread,
        pass,
    })
}
