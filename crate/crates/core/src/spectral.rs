//! Fourier-diagonal operators, the dilation `f(x) -> f(x / nu)`, the
//! multiplication gauge `exp(i |x|^2 / 2t)` and the grid Fourier datum map.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, ArrayViewMut2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{check_finite, Field, Representation};
use crate::grid::SpectralGrid;

/// Zero-mode mass below which negative powers of omega are accepted.
pub const ZERO_MODE_TOL: f64 = 1e-10;

/// Multiplies the Fourier coefficients by a per-shell table; returns the
/// result in the representation of `f`.
pub(crate) fn apply_shell_multiplier<T>(f: &Field, table: &[T]) -> Field
where
    T: Copy + Into<Complex64>,
{
    let grid = Arc::clone(f.grid());
    let repr = f.repr();
    let mut v = f.fourier().into_values();
    for (c, &s) in v.iter_mut().zip(grid.shells()) {
        *c *= table[s as usize].into();
    }
    Field::from_parts(&grid, v, Representation::Fourier).into_repr(repr)
}

/// `omega^sigma f` with `omega = (-Delta)^{1/2}`, i.e. the multiplier `|k|^sigma`.
///
/// For `sigma > 0` the zero mode is annihilated, for `sigma = 0` it is kept.
/// Negative powers require a vanishing zero mode.
pub fn omega_pow(f: &Field, sigma: f64) -> Result<Field> {
    if !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be finite, got {sigma}")));
    }
    check_finite(f.values(), "omega_pow input")?;
    if sigma == 0.0 {
        return Ok(f.clone());
    }
    if sigma < 0.0 {
        let mass = f.mean().norm() * f.grid().volume();
        if mass > ZERO_MODE_TOL {
            return Err(Error::ZeroMode { mass });
        }
    }
    let table = f
        .grid()
        .shell_table(|k| if k == 0.0 { 0.0 } else { k.powf(sigma) });
    Ok(apply_shell_multiplier(f, &table))
}

/// `<omega>^sigma f`, the multiplier `(1 + |k|^2)^{sigma/2}`.
pub fn bracket_pow(f: &Field, sigma: f64) -> Field {
    let table = f.grid().shell_table(|k| (1.0 + k * k).powf(0.5 * sigma));
    apply_shell_multiplier(f, &table)
}

/// Free Schrodinger group `U(t) = exp(i (t/2) Delta)`: multiplier `exp(-i t |k|^2 / 2)`.
pub fn free_propagate(f: &Field, t: f64) -> Result<Field> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be finite, got {t}")));
    }
    check_finite(f.values(), "free_propagate input")?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    Ok(apply_shell_multiplier(f, &propagator_table(f.grid(), t)))
}

pub(crate) fn propagator_table(grid: &SpectralGrid, t: f64) -> Vec<Complex64> {
    grid.shell_table(|k| Complex64::from_polar(1.0, -0.5 * t * k * k))
}

/// `sin(omega tau) / omega`, with the value `tau` on the zero mode.
pub fn wave_kernel(f: &Field, tau: f64) -> Result<Field> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "wave kernel time must be finite and >= 0, got {tau}"
        )));
    }
    check_finite(f.values(), "wave_kernel input")?;
    Ok(apply_shell_multiplier(f, &wave_kernel_table(f.grid(), tau)))
}

pub(crate) fn wave_kernel_table(grid: &SpectralGrid, tau: f64) -> Vec<f64> {
    grid.shell_table(|k| if k == 0.0 { tau } else { (k * tau).sin() / k })
}

/// Pointwise multiplication by `exp(i |x|^2 / 2t)`.
pub fn gauge_multiply(f: &Field, t: f64) -> Result<Field> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidArgument(format!("gauge time must be > 0, got {t}")));
    }
    check_finite(f.values(), "gauge_multiply input")?;
    let grid = Arc::clone(f.grid());
    let p = f.physical();
    let v = p
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v * Complex64::from_polar(1.0, grid.radius_squared(i) / (2.0 * t)))
        .collect();
    Ok(Field::from_parts(&grid, v, Representation::Physical).into_repr(f.repr()))
}

/// `f(x / nu)` for `nu >= 1`, evaluated from the periodic trigonometric
/// interpolant of the samples.
pub fn dilate(f: &Field, nu: f64) -> Result<Field> {
    let d = Dilation::new(f.grid(), nu)?;
    check_finite(f.values(), "dilate input")?;
    Ok(d.apply(f))
}

/// Separable band-limited resampling `x -> x / nu`.
///
/// The 1D interpolation matrix is real (Nyquist mode taken as a cosine), so
/// real fields stay real and the 3D operator is three small GEMMs.
#[derive(Clone, Debug)]
pub struct Dilation {
    grid: Arc<SpectralGrid>,
    nu: f64,
    /// `matrix[(j, l)]`: weight of source sample `l` at target `x_j / nu`, transposed
    /// for right multiplication.
    matrix_t: Array2<f64>,
}

impl Dilation {
    pub fn new(grid: &Arc<SpectralGrid>, nu: f64) -> Result<Self> {
        if !(nu.is_finite() && nu >= 1.0) {
            return Err(Error::InvalidArgument(format!("dilation factor must be >= 1, got {nu}")));
        }
        let n = grid.n_points();
        let half = n / 2;
        let k0 = grid.fundamental();
        let mut matrix_t = Array2::<f64>::zeros((n, n));
        let weight = |target: f64, l: usize| {
            let d = target - grid.coord(l);
            let mut s = 1.0 + (half as f64 * k0 * d).cos();
            for m in 1..half {
                s += 2.0 * (m as f64 * k0 * d).cos();
            }
            s / n as f64
        };
        for j in 0..n {
            let target = grid.coord(j) / nu;
            for l in 0..n {
                matrix_t[(l, j)] = if j == 0 && nu != 1.0 {
                    // The sample at -L/2 also stands for +L/2; averaging both
                    // targets keeps the operator parity symmetric.
                    0.5 * (weight(target, l) + weight(-target, l))
                } else {
                    weight(target, l)
                };
            }
        }
        Ok(Self {
            grid: Arc::clone(grid),
            nu,
            matrix_t,
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Dilates real samples (physical space, x fastest).
    pub fn apply_real(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; values.len()];
        let mut work = vec![0.0; values.len()];
        self.apply_real_into(values, &mut out, &mut work);
        out
    }

    /// Allocation-free form of [`Dilation::apply_real`]; `work` is scratch.
    pub fn apply_real_into(&self, values: &[f64], out: &mut [f64], work: &mut [f64]) {
        let n = self.grid.n_points();
        let len = n * n * n;
        assert!(values.len() == len && out.len() == len && work.len() == len);
        if self.nu == 1.0 {
            out.copy_from_slice(values);
            return;
        }
        // `mt[l * n + j]` is the weight of source `l` at target `j`.
        let mt = self.matrix_t.as_slice().expect("standard layout");
        // x: rows of length n are contiguous.
        {
            let src = ArrayView2::from_shape((n * n, n), values).expect("shape");
            let mut dst = ArrayViewMut2::from_shape((n * n, n), &mut *work).expect("shape");
            general_mat_mul(1.0, &src, &self.matrix_t, 0.0, &mut dst);
        }
        // y: combine rows inside each z-plane.
        for (src, dst) in work.chunks_exact(n * n).zip(out.chunks_exact_mut(n * n)) {
            dst.fill(0.0);
            for (y, row) in src.chunks_exact(n).enumerate() {
                for (yt, d) in dst.chunks_exact_mut(n).enumerate() {
                    axpy(mt[y * n + yt], row, d);
                }
            }
        }
        // z: combine whole planes.
        {
            let src = ArrayView2::from_shape((n, n * n), &*out).expect("shape");
            let mut dst = ArrayViewMut2::from_shape((n, n * n), &mut *work).expect("shape");
            general_mat_mul(1.0, &self.matrix_t.t(), &src, 0.0, &mut dst);
        }
        out.copy_from_slice(work);
    }

    pub fn apply(&self, f: &Field) -> Field {
        if self.nu == 1.0 {
            return f.clone();
        }
        let p = f.physical();
        let re: Vec<f64> = p.values().iter().map(|v| v.re).collect();
        let im: Vec<f64> = p.values().iter().map(|v| v.im).collect();
        let re = self.apply_real(&re);
        let im = if im.iter().any(|&x| x != 0.0) {
            self.apply_real(&im)
        } else {
            vec![0.0; re.len()]
        };
        let v = re
            .into_iter()
            .zip(im)
            .map(|(a, b)| Complex64::new(a, b))
            .collect();
        Field::from_parts(&self.grid, v, Representation::Physical).into_repr(f.repr())
    }
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += a * x;
    }
}

/// Centered unitary DFT read back as a field on the same grid: the value at
/// position index `m` is the coefficient of wavevector index `m - n/2`.
///
/// This is the grid stand-in for the continuous Fourier transform acting on
/// asymptotic data; it satisfies `F conj(F g) = conj(g)` exactly.
pub fn fourier_datum(f: &Field) -> Field {
    centered_dft(f, false)
}

/// Inverse of [`fourier_datum`].
pub fn inverse_fourier_datum(f: &Field) -> Field {
    centered_dft(f, true)
}

fn centered_dft(f: &Field, inverse: bool) -> Field {
    let grid = Arc::clone(f.grid());
    let n = grid.n_points();
    let parity = |idx: usize| -> f64 {
        let s = idx % n + (idx / n) % n + idx / (n * n);
        if s % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    };
    // Per axis the centered kernel is exp(-i pi n/2) (-1)^(m+j) exp(-2 pi i m j / n).
    let sign = if inverse { 1.0 } else { -1.0 };
    let global = Complex64::from_polar(1.0, sign * PI * 1.5 * n as f64);
    let mut v: Vec<Complex64> = f
        .physical()
        .values()
        .iter()
        .enumerate()
        .map(|(i, c)| c * parity(i))
        .collect();
    if inverse {
        grid.fft_inverse(&mut v);
    } else {
        grid.fft_forward(&mut v);
    }
    for (i, c) in v.iter_mut().enumerate() {
        *c *= global * parity(i);
    }
    Field::from_parts(&grid, v, Representation::Physical)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn omega_pow_identity_and_unit_eigenvalue() {
        let g = SpectralGrid::new(8, 2.0 * PI).unwrap();
        let f = Field::gaussian(&g, 1.0, 0.7);
        let same = omega_pow(&f, 0.0).unwrap();
        assert_eq!(same.values(), f.values());
        let pw = Field::plane_wave(&g, [1, 0, 0]);
        let out = omega_pow(&pw, 1.0).unwrap();
        assert!(out.sub(&pw).max_abs() < 1e-12);
    }

    #[test]
    fn omega_pow_negative_needs_zero_mean() {
        let g = SpectralGrid::new(8, 4.0).unwrap();
        let f = Field::constant(&g, c(1.0));
        match omega_pow(&f, -0.5) {
            Err(Error::ZeroMode { mass }) => assert!((mass - 64.0).abs() < 1e-9),
            other => panic!("unexpected {other:?}"),
        }
        let pw = Field::plane_wave(&g, [0, 1, 0]);
        assert!(omega_pow(&pw, -0.5).is_ok());
    }

    #[test]
    fn omega_squared_of_gaussian_is_minus_laplacian() {
        let g = SpectralGrid::new(32, 16.0).unwrap();
        let f = Field::gaussian(&g, 1.0, 1.0);
        let out = omega_pow(&f, 2.0).unwrap();
        let expect = Field::from_fn(&g, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            c((3.0 - r2) * (-0.5 * r2).exp())
        })
        .unwrap();
        assert!(out.sub(&expect).max_abs() < 1e-6);
    }

    #[test]
    fn wave_kernel_limits() {
        let g = SpectralGrid::new(8, 2.0 * PI).unwrap();
        let k = Field::constant(&g, c(3.0));
        let out = wave_kernel(&k, 0.75).unwrap();
        assert!(out.sub(&k.scale(c(0.75))).max_abs() < 1e-12);
        let pw = Field::plane_wave(&g, [0, 0, 1]);
        let out = wave_kernel(&pw, PI / 2.0).unwrap();
        assert!(out.sub(&pw).max_abs() < 1e-12);
        assert!(wave_kernel(&pw, -1.0).is_err());
    }

    #[test]
    fn gauge_multiply_is_unimodular() {
        let g = SpectralGrid::new(8, 3.0).unwrap();
        let f = Field::gaussian(&g, 1.3, 0.8);
        let out = gauge_multiply(&f, 0.3).unwrap();
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
        let one = gauge_multiply(&Field::constant(&g, c(1.0)), 1.0).unwrap();
        for (i, v) in one.values().iter().enumerate() {
            let want = Complex64::from_polar(1.0, g.radius_squared(i) / 2.0);
            assert!((v - want).norm() < 1e-14);
        }
        let far = gauge_multiply(&f, 1e16).unwrap();
        assert!(far.sub(&f).max_abs() < 1e-14);
        assert!(gauge_multiply(&f, 0.0).is_err());
    }

    #[test]
    fn dilation_of_gaussian() {
        let g = SpectralGrid::new(32, 16.0).unwrap();
        let f = Field::gaussian(&g, 1.0, 1.0);
        assert_eq!(dilate(&f, 1.0).unwrap().values(), f.values());
        let out = dilate(&f, 2.0).unwrap();
        let expect = Field::gaussian(&g, 1.0, 2.0);
        assert!(out.sub(&expect).max_abs() < 1e-8, "{}", out.sub(&expect).max_abs());
        assert!(dilate(&f, 0.5).is_err());
    }

    #[test]
    fn fourier_datum_conjugation_identity() {
        for n in [8, 10] {
            let g = SpectralGrid::new(n, 5.0).unwrap();
            let f = Field::from_fn(&g, |x| Complex64::new(x[0].sin() + 0.2, x[1] * x[2])).unwrap();
            let back = fourier_datum(&fourier_datum(&f).conj());
            assert!(back.sub(&f.conj()).max_abs() < 1e-12);
            let rt = inverse_fourier_datum(&fourier_datum(&f));
            assert!(rt.sub(&f).max_abs() < 1e-12);
        }
    }
}
