//! Independent oracles shared by the integration targets.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use ws_scatter::{Field, SpectralGrid};

/// 8-point Gauss-Legendre rule on [-1, 1].
const GL_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_W: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Gauss-Legendre nodes and weights on `[a, b]` split into `panels` panels.
pub fn gauss_legendre(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(8 * panels);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in GL_X.iter().zip(GL_W) {
            out.push((mid - 0.5 * h * x, 0.5 * h * w));
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

/// Node coordinates of one axis.
fn axis(grid: &SpectralGrid) -> Vec<f64> {
    (0..grid.n_points()).map(|i| grid.coord(i)).collect()
}

/// Signed wavenumbers of one axis.
fn wavenumbers(grid: &SpectralGrid) -> Vec<f64> {
    (0..grid.n_points()).map(|i| grid.wavenumber(i)).collect()
}

/// Static field of `u = amp exp(-|x|^2 / 2 width^2)` on the periodic box,
/// evaluated without the library's dilation, FFT or nu rule:
/// exact samples of the dilated density, direct 1D cosine sums, Gauss-Legendre
/// panels in `nu` (uniform up to `nu_split`, logarithmic up to `nu_far`) and
/// the zero-mode tail beyond `nu_far`.
pub fn b_oracle_gaussian(grid: &Arc<SpectralGrid>, amp: f64, width: f64) -> Field {
    let n = grid.n_points();
    let xs = axis(grid);
    let ks = wavenumbers(grid);
    let a2 = amp * amp;
    let nu_split: f64 = 200.0;
    let nu_far: f64 = 1e6;
    let mut nodes = gauss_legendre(1.0, nu_split, 2000);
    for (y, w) in gauss_legendre(nu_split.ln(), nu_far.ln(), 400) {
        nodes.push((y.exp(), w * y.exp()));
    }
    let cos_kx: Vec<f64> = (0..n * n)
        .map(|i| (ks[i / n] * xs[i % n]).cos())
        .collect();
    let k2 = |m: [usize; 3]| ks[m[0]].powi(2) + ks[m[1]].powi(2) + ks[m[2]].powi(2);
    let mut spec = vec![0.0; n * n * n];
    let mut line = vec![0.0; n];
    let mut zero_at_far = 0.0;
    for &(nu, w) in &nodes {
        // DFT of exp(-x^2 / nu^2 width^2) along one axis; the density is its cube.
        for (m, l) in line.iter_mut().enumerate() {
            *l = (0..n)
                .map(|j| (-(xs[j] / (nu * width)).powi(2)).exp() * cos_kx[m * n + j])
                .sum();
        }
        let c = w / (nu * nu * nu);
        for mz in 0..n {
            for my in 0..n {
                let yz = line[my] * line[mz];
                for mx in 0..n {
                    let k = k2([mx, my, mz]).sqrt();
                    let kern = if k == 0.0 { nu - 1.0 } else { (k * (nu - 1.0)).sin() / k };
                    spec[mx + n * (my + n * mz)] += c * kern * line[mx] * yz;
                }
            }
        }
        zero_at_far = line[0].powi(3);
    }
    // int_{nu_far}^inf (nu - 1) nu^-3 dnu on the frozen zero mode.
    spec[0] += zero_at_far * (1.0 / nu_far - 0.5 / (nu_far * nu_far));
    // Inverse cosine sums, one axis at a time.
    let mut cur = spec;
    for _ in 0..3 {
        let mut next = vec![0.0; n * n * n];
        for a in 0..n * n {
            for j in 0..n {
                let s: f64 = (0..n).map(|m| cos_kx[m * n + j] * cur[m + n * a]).sum();
                // Rotate so the next axis is fastest.
                next[a + n * n * j] = s;
            }
        }
        cur = next;
    }
    let scale = a2 / (n * n * n) as f64;
    let values: Vec<f64> = cur.iter().map(|v| v * scale).collect();
    Field::from_real(grid, &values).expect("finite oracle")
}

/// Closed form of `U(t) g` for `g = exp(-|x|^2 / 2 w^2)` on R^3 with
/// `U(t) = exp(i t Delta / 2)`.
pub fn free_gaussian(grid: &Arc<SpectralGrid>, width: f64, t: f64) -> Field {
    let s = Complex64::new(width * width, t);
    let pref = (Complex64::new(width * width, 0.0) / s).powf(1.5);
    Field::from_fn(grid, |[x, y, z]| {
        let r2 = x * x + y * y + z * z;
        pref * (-Complex64::new(r2, 0.0) / (2.0 * s)).exp()
    })
    .expect("finite")
}

/// Dense `exp(i t Delta / 2)` on the grid, assembled from the 1D lattice sums
/// `(1/n) sum_m exp(i k_m (x_j - x_l) - i t k_m^2 / 2)` as a Kronecker cube.
pub fn dense_free_propagator(grid: &SpectralGrid, t: f64) -> DMatrix<Complex64> {
    let n = grid.n_points();
    let xs = axis(grid);
    let ks = wavenumbers(grid);
    let g1 = DMatrix::<Complex64>::from_fn(n, n, |j, l| {
        ks.iter()
            .map(|&k| Complex64::from_polar(1.0, k * (xs[j] - xs[l]) - 0.5 * t * k * k))
            .sum::<Complex64>()
            / n as f64
    });
    // Flat index x + n (y + n z): z is the slowest factor.
    g1.kronecker(&g1).kronecker(&g1)
}

/// Dense `-(E^* G^* diag(B) G E) + diag(B0)` with `G = U(t)` and
/// `E = diag(exp(i ln(t) B0))`.
pub fn dense_l(grid: &SpectralGrid, b: &Field, b0: &Field, t: f64) -> DMatrix<Complex64> {
    let len = grid.len();
    let g = dense_free_propagator(grid, t);
    let b = b.physical();
    let b0 = b0.physical();
    let e = DMatrix::<Complex64>::from_diagonal(&nalgebra::DVector::from_iterator(
        len,
        b0.values().iter().map(|v| Complex64::from_polar(1.0, t.ln() * v.re)),
    ));
    let db = DMatrix::<Complex64>::from_diagonal(&nalgebra::DVector::from_iterator(
        len,
        b.values().iter().map(|v| Complex64::new(v.re, 0.0)),
    ));
    let db0 = DMatrix::<Complex64>::from_diagonal(&nalgebra::DVector::from_iterator(
        len,
        b0.values().iter().map(|v| Complex64::new(v.re, 0.0)),
    ));
    let ge = &g * &e;
    -(ge.adjoint() * db * ge) + db0
}

/// `int_0^inf r^2 exp(-r^2 / w^2) ...` style radial integrals by panels on
/// `[0, r_max]`.
pub fn radial_integral(f: impl Fn(f64) -> f64, r_max: f64, panels: usize) -> f64 {
    gauss_legendre(0.0, r_max, panels).into_iter().map(|(r, w)| w * f(r)).sum()
}
