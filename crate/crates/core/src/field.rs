//! Complex scalar fields sampled on a [`SpectralGrid`].

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Physical,
    Fourier,
}

impl Representation {
    fn name(self) -> &'static str {
        match self {
            Representation::Physical => "physical",
            Representation::Fourier => "Fourier",
        }
    }
}

/// Grid samples in physical space, or unitary DFT coefficients in FFT order.
///
/// Values are immutable once built; every operation returns a new field.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<SpectralGrid>,
    values: Vec<Complex64>,
    repr: Representation,
}

pub(crate) fn check_finite(values: &[Complex64], context: &'static str) -> Result<()> {
    match values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        Some(index) => Err(Error::NonFinite { context, index }),
        None => Ok(()),
    }
}

impl Field {
    pub fn new(
        grid: &Arc<SpectralGrid>,
        values: Vec<Complex64>,
        repr: Representation,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        check_finite(&values, "field values")?;
        Ok(Self {
            grid: Arc::clone(grid),
            values,
            repr,
        })
    }

    pub(crate) fn from_parts(
        grid: &Arc<SpectralGrid>,
        values: Vec<Complex64>,
        repr: Representation,
    ) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: Arc::clone(grid),
            values,
            repr,
        }
    }

    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        Self::from_parts(
            grid,
            vec![Complex64::default(); grid.len()],
            Representation::Physical,
        )
    }

    pub fn constant(grid: &Arc<SpectralGrid>, c: Complex64) -> Self {
        Self::from_parts(grid, vec![c; grid.len()], Representation::Physical)
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn<F: Fn([f64; 3]) -> Complex64>(grid: &Arc<SpectralGrid>, f: F) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        Self::new(grid, values, Representation::Physical)
    }

    /// Real field from real samples.
    pub fn from_real(grid: &Arc<SpectralGrid>, values: &[f64]) -> Result<Self> {
        Self::new(
            grid,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            Representation::Physical,
        )
    }

    /// `exp(i k.x)` with `k = (2 pi / L) * modes`.
    pub fn plane_wave(grid: &Arc<SpectralGrid>, modes: [i64; 3]) -> Self {
        let k0 = grid.fundamental();
        let k = modes.map(|m| m as f64 * k0);
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.position(i);
                Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1] + k[2] * x[2])
            })
            .collect();
        Self::from_parts(grid, values, Representation::Physical)
    }

    /// Centered Gaussian `amp * exp(-|x|^2 / (2 width^2))`.
    pub fn gaussian(grid: &Arc<SpectralGrid>, amp: f64, width: f64) -> Self {
        let values = (0..grid.len())
            .map(|i| Complex64::new(amp * (-grid.radius_squared(i) / (2.0 * width * width)).exp(), 0.0))
            .collect();
        Self::from_parts(grid, values, Representation::Physical)
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn repr(&self) -> Representation {
        self.repr
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn to_fourier(&self) -> Result<Field> {
        self.expect_repr(Representation::Physical)?;
        check_finite(&self.values, "to_fourier input")?;
        Ok(self.fourier())
    }

    pub fn from_fourier(&self) -> Result<Field> {
        self.expect_repr(Representation::Fourier)?;
        check_finite(&self.values, "from_fourier input")?;
        Ok(self.physical())
    }

    fn expect_repr(&self, expected: Representation) -> Result<()> {
        if self.repr == expected {
            Ok(())
        } else {
            Err(Error::Representation {
                expected: expected.name(),
                found: self.repr.name(),
            })
        }
    }

    /// This field in Fourier representation (no-op if already there).
    pub fn fourier(&self) -> Field {
        match self.repr {
            Representation::Fourier => self.clone(),
            Representation::Physical => {
                let mut v = self.values.clone();
                self.grid.fft_forward(&mut v);
                Self::from_parts(&self.grid, v, Representation::Fourier)
            }
        }
    }

    /// This field in physical representation (no-op if already there).
    pub fn physical(&self) -> Field {
        match self.repr {
            Representation::Physical => self.clone(),
            Representation::Fourier => {
                let mut v = self.values.clone();
                self.grid.fft_inverse(&mut v);
                Self::from_parts(&self.grid, v, Representation::Physical)
            }
        }
    }

    pub(crate) fn into_repr(self, repr: Representation) -> Field {
        if self.repr == repr {
            return self;
        }
        let Field { grid, mut values, .. } = self;
        match repr {
            Representation::Fourier => grid.fft_forward(&mut values),
            Representation::Physical => grid.fft_inverse(&mut values),
        }
        Field { grid, values, repr }
    }

    /// `sqrt(dx^3 sum |f|^2)`; the same in either representation.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_volume() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// `dx^3 sum conj(self) other`, both in the same representation.
    pub fn inner(&self, other: &Field) -> Complex64 {
        self.assert_compatible(other);
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        s * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest imaginary part in physical space.
    pub fn max_imag(&self) -> f64 {
        self.physical()
            .values
            .iter()
            .map(|v| v.im.abs())
            .fold(0.0, f64::max)
    }

    /// Spatial mean (the k = 0 coefficient scaled back to a value).
    pub fn mean(&self) -> Complex64 {
        match self.repr {
            Representation::Physical => {
                self.values.iter().sum::<Complex64>() / self.values.len() as f64
            }
            Representation::Fourier => self.values[0] / (self.values.len() as f64).sqrt(),
        }
    }

    /// Pointwise `|f|^2` in physical space.
    pub fn modulus_squared(&self) -> Vec<f64> {
        self.physical().values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn real_part(&self) -> Field {
        let v = self.physical().values.iter().map(|v| Complex64::new(v.re, 0.0)).collect();
        Self::from_parts(&self.grid, v, Representation::Physical)
    }

    pub fn conj(&self) -> Field {
        let v = self.physical().values.iter().map(|v| v.conj()).collect();
        Self::from_parts(&self.grid, v, Representation::Physical)
    }

    pub fn scale(&self, c: Complex64) -> Field {
        let v = self.values.iter().map(|v| v * c).collect();
        Self::from_parts(&self.grid, v, self.repr)
    }

    /// `self + a * other`, in the representation of `self`.
    pub fn axpy(&self, a: Complex64, other: &Field) -> Field {
        assert!(self.same_grid(other), "fields live on different grids");
        let other = if other.repr == self.repr {
            std::borrow::Cow::Borrowed(other)
        } else {
            std::borrow::Cow::Owned(other.clone().into_repr(self.repr))
        };
        let v = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x + a * y)
            .collect();
        Self::from_parts(&self.grid, v, self.repr)
    }

    pub fn add(&self, other: &Field) -> Field {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// Pointwise product in physical space.
    pub fn mul(&self, other: &Field) -> Field {
        assert!(self.same_grid(other), "fields live on different grids");
        let a = self.physical();
        let b = other.physical();
        let v = a.values.iter().zip(&b.values).map(|(x, y)| x * y).collect();
        Self::from_parts(&self.grid, v, Representation::Physical)
    }

    fn assert_compatible(&self, other: &Field) {
        assert!(self.same_grid(other), "fields live on different grids");
        assert_eq!(self.repr, other.repr, "fields in different representations");
    }
}
