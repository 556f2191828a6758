//! Lebesgue and Sobolev-type norms on the periodic grid.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::spectral::{bracket_pow, omega_pow};

/// Default `epsilon` of the `sigma +- 0` norms.
pub const DEFAULT_EPS_PM: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormSpec {
    /// `||f||_r`, `r = f64::INFINITY` for the max norm.
    Lebesgue { r: f64 },
    /// `||omega^sigma f||_2`.
    Homogeneous { sigma: f64 },
    /// `||<omega>^sigma f||_2`.
    Sobolev { sigma: f64 },
    /// `||f||_inf + ||omega^sigma f||_{3/sigma}`, `0 <= sigma < 3/2`.
    Multiplier { sigma: f64 },
    /// Geometric mean of the homogeneous norms at `sigma + eps` and `sigma - eps`.
    HomogeneousPm { sigma: f64, eps: f64 },
}

impl NormSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NormSpec::Lebesgue { r } if !(r >= 1.0) => {
                Err(Error::Norm(format!("L^r needs r in [1, inf], got {r}")))
            }
            NormSpec::Homogeneous { sigma } | NormSpec::Sobolev { sigma } if !sigma.is_finite() => {
                Err(Error::Norm(format!("sigma must be finite, got {sigma}")))
            }
            NormSpec::Multiplier { sigma } if !(0.0..1.5).contains(&sigma) => {
                Err(Error::Norm(format!("M^sigma needs 0 <= sigma < 3/2, got {sigma}")))
            }
            NormSpec::HomogeneousPm { sigma, eps } if !(eps > 0.0 && sigma.is_finite()) => {
                Err(Error::Norm(format!(
                    "sigma +- 0 norm needs eps > 0 and finite sigma, got sigma={sigma}, eps={eps}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Riemann-sum `L^r` norm of physical samples.
pub fn lebesgue(f: &Field, r: f64) -> f64 {
    let p = f.physical();
    if r.is_infinite() {
        return p.max_abs();
    }
    let dv = f.grid().cell_volume();
    if r == 2.0 {
        return p.l2_norm();
    }
    (dv * p.values().iter().map(|v| v.norm().powf(r)).sum::<f64>()).powf(1.0 / r)
}

pub fn norm(f: &Field, spec: NormSpec) -> Result<f64> {
    spec.validate()?;
    Ok(match spec {
        NormSpec::Lebesgue { r } => lebesgue(f, r),
        NormSpec::Homogeneous { sigma } => omega_pow(f, sigma)?.l2_norm(),
        NormSpec::Sobolev { sigma } => bracket_pow(f, sigma).l2_norm(),
        NormSpec::Multiplier { sigma } => {
            let r = if sigma == 0.0 { f64::INFINITY } else { 3.0 / sigma };
            lebesgue(f, f64::INFINITY) + lebesgue(&omega_pow(f, sigma)?, r)
        }
        NormSpec::HomogeneousPm { sigma, eps } => {
            let hi = omega_pow(f, sigma + eps)?.l2_norm();
            let lo = omega_pow(f, sigma - eps)?.l2_norm();
            (hi * lo).sqrt()
        }
    })
}

/// Shorthand for the inhomogeneous `H^sigma` norm, which never fails.
pub fn sobolev(f: &Field, sigma: f64) -> f64 {
    bracket_pow(f, sigma).l2_norm()
}
