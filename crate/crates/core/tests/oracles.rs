mod common;

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use ws_scatter::bgauge::compute_b_static;
use ws_scatter::norms::sobolev;
use ws_scatter::random::{random_field, rng};
use ws_scatter::solver::{linearized_solve, midpoint_b, picard_solve};
use ws_scatter::spectral::{free_propagate, wave_kernel};
use ws_scatter::{BOperator, Field, NuQuadrature, Representation, SolverConfig, SpectralGrid};

#[test]
fn free_gaussian_matches_closed_form() {
    let g = SpectralGrid::new(48, 24.0).unwrap();
    let u = Field::gaussian(&g, 1.0, 1.0);
    for t in [0.5, 1.0, -1.0] {
        let got = free_propagate(&u, t).unwrap();
        let want = common::free_gaussian(&g, 1.0, t);
        let err = got.sub(&want).l2_norm() / want.l2_norm();
        assert!(err <= 1e-8, "t = {t}: {err:e}");
    }
}

/// `(1 / 2 pi^2 r) int_0^inf F(k) m(k) k sin(k r) dk` for a radial symbol `F m`.
fn radial_inverse(f_hat: impl Fn(f64) -> f64, r: f64, k_max: f64) -> f64 {
    if r == 0.0 {
        return common::radial_integral(|k| f_hat(k) * k * k, k_max, 400) / (2.0 * PI * PI);
    }
    common::radial_integral(|k| f_hat(k) * k * (k * r).sin(), k_max, 400) / (2.0 * PI * PI * r)
}

#[test]
fn wave_kernel_of_gaussian_matches_radial_oracle() {
    let g = SpectralGrid::new(32, 20.0).unwrap();
    let w: f64 = 1.2;
    let tau = 1.0;
    let u = Field::gaussian(&g, 1.0, w);
    let got = wave_kernel(&u, tau).unwrap();
    let g_hat = |k: f64| (2.0 * PI).powf(1.5) * w.powi(3) * (-0.5 * k * k * w * w).exp();
    let symbol = |k: f64| if k == 0.0 { tau } else { (k * tau).sin() / k };
    let mut cache: HashMap<u64, f64> = HashMap::new();
    let values: Vec<f64> = (0..g.len())
        .map(|i| {
            let r = g.radius_squared(i).sqrt();
            *cache
                .entry(r.to_bits())
                .or_insert_with(|| radial_inverse(|k| g_hat(k) * symbol(k), r, 12.0 / w))
        })
        .collect();
    let want = Field::from_real(&g, &values).unwrap();
    let err = got.sub(&want).l2_norm() / want.l2_norm();
    assert!(err <= 1e-6, "{err:e}");
}

#[test]
fn gaussian_h1_norm_matches_radial_oracle() {
    let g = SpectralGrid::new(32, 20.0).unwrap();
    let w: f64 = 1.1;
    let u = Field::gaussian(&g, 1.0, w);
    let g_hat2 = |k: f64| (2.0 * PI).powi(3) * w.powi(6) * (-k * k * w * w).exp();
    let want = (4.0 * PI / (2.0 * PI).powi(3)
        * common::radial_integral(|k| k * k * (1.0 + k * k) * g_hat2(k), 12.0 / w, 200))
    .sqrt();
    let got = sobolev(&u, 1.0);
    assert!((got - want).abs() <= 1e-8 * want, "{got} vs {want}");
}

#[test]
fn b_static_matches_independent_oracle() {
    let g = SpectralGrid::new(16, 12.0).unwrap();
    let (amp, width) = (0.3, 1.5);
    let oracle = common::b_oracle_gaussian(&g, amp, width);
    let b = compute_b_static(&Field::gaussian(&g, amp, width), &NuQuadrature::default()).unwrap();
    let rel = b.sub(&oracle).l2_norm() / oracle.l2_norm();
    assert!(rel <= 1e-5, "{rel:e}");
}

#[test]
fn linearized_solve_matches_dense_exponential() {
    let g = SpectralGrid::new(8, 8.0).unwrap();
    let mut cfg = SolverConfig::new(1.25, 0.5).unwrap().with_mesh(3.0, 6).unwrap();
    cfg.quad = NuQuadrature::new(100.0, 129, true).unwrap();
    let sol = picard_solve(&Field::gaussian(&g, 0.4, 1.0), &cfg).unwrap();
    let w0 = random_field(&g, &mut rng(11), 1.25);
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
    let err = got.last().sub(&want).l2_norm() / want.l2_norm();
    assert!(err <= 1e-6, "{err:e}");
}
