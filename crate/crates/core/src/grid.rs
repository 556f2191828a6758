//! Periodic 3D computational box and its wavenumber lattice.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Periodic box `[-L/2, L/2)^3` sampled on `n^3` points, x fastest.
///
/// The grid owns its FFT plans; fields share it through an `Arc`.
pub struct SpectralGrid {
    n: usize,
    box_length: f64,
    spacing: f64,
    /// Integer shell `m_x^2 + m_y^2 + m_z^2` of every lattice point, FFT order.
    shells: Vec<u32>,
    negated: Vec<u32>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("n", &self.n)
            .field("box_length", &self.box_length)
            .finish()
    }
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.box_length == other.box_length
    }
}

impl SpectralGrid {
    pub fn new(n_points: usize, box_length: f64) -> Result<Arc<Self>> {
        if n_points < 8 || n_points % 2 != 0 {
            return Err(Error::Grid(format!(
                "n_points must be even and >= 8, got {n_points}"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::Grid(format!(
                "box_length must be positive and finite, got {box_length}"
            )));
        }
        let n = n_points;
        let spacing = box_length / n as f64;
        let index = |i: usize| -> i64 {
            if i < n / 2 {
                i as i64
            } else {
                i as i64 - n as i64
            }
        };
        let mut shells = Vec::with_capacity(n * n * n);
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let (a, b, c) = (index(ix), index(iy), index(iz));
                    shells.push((a * a + b * b + c * c) as u32);
                }
            }
        }
        let neg = |i: usize| (n - i) % n;
        let mut negated = Vec::with_capacity(n * n * n);
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    negated.push((neg(ix) + n * (neg(iy) + n * neg(iz))) as u32);
                }
            }
        }
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            n,
            box_length,
            spacing,
            shells,
            negated,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }))
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of samples `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }

    /// Physical coordinate of sample `i` along one axis.
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.box_length + i as f64 * self.spacing
    }

    /// Physical position of the flat index `idx`.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        [
            self.coord(idx % n),
            self.coord((idx / n) % n),
            self.coord(idx / (n * n)),
        ]
    }

    /// Squared distance from the origin of the flat index `idx`.
    pub fn radius_squared(&self, idx: usize) -> f64 {
        let p = self.position(idx);
        p[0] * p[0] + p[1] * p[1] + p[2] * p[2]
    }

    /// Signed lattice index of FFT slot `i` along one axis, in `-n/2..n/2`.
    pub fn mode_index(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Wavenumber of FFT slot `i` along one axis.
    pub fn wavenumber(&self, i: usize) -> f64 {
        self.fundamental() * self.mode_index(i) as f64
    }

    /// Lattice spacing `2 pi / L` in Fourier space.
    pub fn fundamental(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    /// Wavevector of FFT-ordered flat index `idx`.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        [
            self.wavenumber(idx % n),
            self.wavenumber((idx / n) % n),
            self.wavenumber(idx / (n * n)),
        ]
    }

    /// Shell of every Fourier slot; `|k| = (2 pi / L) sqrt(shell)`.
    pub fn shells(&self) -> &[u32] {
        &self.shells
    }

    pub fn n_shells(&self) -> usize {
        3 * (self.n / 2) * (self.n / 2) + 1
    }

    /// `|k|` on shell `m`.
    pub fn shell_radius(&self, m: usize) -> f64 {
        self.fundamental() * (m as f64).sqrt()
    }

    /// Tabulates a radial function of `|k|` once per shell.
    pub fn shell_table<T, F: Fn(f64) -> T>(&self, f: F) -> Vec<T> {
        (0..self.n_shells()).map(|m| f(self.shell_radius(m))).collect()
    }

    /// Unitary forward DFT (`1/sqrt(N)` normalisation) in place.
    pub fn fft_forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Unitary inverse DFT in place.
    pub fn fft_inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len(), "buffer does not match grid");
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        let mut rotated = vec![Complex64::default(); data.len()];
        // FFT along the fastest axis, then rotate [a][b][c] -> [c][a][b];
        // three passes transform every axis and restore the layout.
        for _ in 0..3 {
            plan.process_with_scratch(data, &mut scratch);
            rotate(self.n, data, &mut rotated);
            data.copy_from_slice(&rotated);
        }
        let scale = 1.0 / (self.len() as f64).sqrt();
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Flat index of `-k` for every FFT slot.
    pub fn negated_indices(&self) -> &[u32] {
        &self.negated
    }
}

/// `out[c][a][b] = data[a][b][c]` for an `n^3` cube.
pub(crate) fn rotate<T: Copy>(n: usize, data: &[T], out: &mut [T]) {
    let plane = n * n;
    for (a, src) in data.chunks_exact(plane).enumerate() {
        for c in 0..n {
            let dst = &mut out[c * plane + a * n..c * plane + (a + 1) * n];
            for (b, d) in dst.iter_mut().enumerate() {
                *d = src[b * n + c];
            }
        }
    }
}
