//! Seeded band-limited random fields.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use crate::field::{Field, Representation};
use crate::grid::SpectralGrid;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Largest retained mode index on an `n`-point axis: the top third of the
/// spectrum is dropped.
pub fn default_band(n: usize) -> usize {
    (n / 3).min(n / 2 - 1)
}

/// Complex Gaussian coefficients with envelope `<k>^(-rho - 2)` on the modes
/// `|m_i| <= band`. The draw order depends only on `band`, so the same seed
/// gives the same continuous field, up to a constant factor, on every grid of
/// equal box length.
pub fn band_limited_field<R: Rng>(
    grid: &Arc<SpectralGrid>,
    rng: &mut R,
    band: usize,
    rho: f64,
) -> Field {
    let n = grid.n_points();
    assert!(band < n / 2, "band {band} exceeds the grid Nyquist index");
    let k0 = grid.fundamental();
    let b = band as i64;
    let mut v = vec![Complex64::default(); grid.len()];
    let slot = |m: i64| m.rem_euclid(n as i64) as usize;
    for mz in -b..=b {
        for my in -b..=b {
            for mx in -b..=b {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let k2 = k0 * k0 * (mx * mx + my * my + mz * mz) as f64;
                let env = (1.0 + k2).powf(-0.5 * (rho + 2.0));
                v[slot(mx) + n * (slot(my) + n * slot(mz))] = Complex64::new(re, im) * env;
            }
        }
    }
    Field::new(grid, v, Representation::Fourier)
        .expect("finite coefficients")
        .physical()
}

/// [`band_limited_field`] with the grid's own band.
pub fn random_field<R: Rng>(grid: &Arc<SpectralGrid>, rng: &mut R, rho: f64) -> Field {
    band_limited_field(grid, rng, default_band(grid.n_points()), rho)
}
