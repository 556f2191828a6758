//! The nonlocal field `B(u_c, t)`, its static limit `B(v0)`, the logarithmic
//! gauge phase and the operator `L(v)` driving the amplitude equation.
//!
//! `B(u, t) = int_1^inf dnu nu^-3 omega^-1 sin(omega (nu - 1)) D0(nu) |u(t/nu)|^2`

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{check_finite, Field, Representation};
use crate::grid::SpectralGrid;
use crate::par;
use crate::spectral::{propagator_table, Dilation};
use crate::trajectory::{LogTimeMesh, Trajectory};

/// Relative tolerance of the `sum w nu^-2` self-test.
pub const SELF_TEST_TOL: f64 = 1e-8;
/// Allowed imaginary residue of `B`, relative to its max norm.
pub const REALNESS_TOL: f64 = 1e-12;

/// Composite Simpson rule in `y = ln nu` on `[0, ln nu_max]`; weights are
/// expressed in the `dnu` measure.
#[derive(Clone, Debug, PartialEq)]
pub struct NuQuadrature {
    nu_max: f64,
    tail: bool,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl NuQuadrature {
    pub const DEFAULT_NU_MAX: f64 = 1e4;
    pub const DEFAULT_NODES: usize = 257;

    pub fn new(nu_max: f64, n_nodes: usize, tail: bool) -> Result<Self> {
        if !(nu_max.is_finite() && nu_max > 1.0) {
            return Err(Error::InvalidArgument(format!("nu_max must exceed 1, got {nu_max}")));
        }
        if n_nodes < 3 || n_nodes % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "Simpson rule needs an odd node count >= 3, got {n_nodes}"
            )));
        }
        let h = nu_max.ln() / (n_nodes - 1) as f64;
        let mut nodes = Vec::with_capacity(n_nodes);
        let mut weights = Vec::with_capacity(n_nodes);
        for i in 0..n_nodes {
            let nu = if i == n_nodes - 1 { nu_max } else { (i as f64 * h).exp() };
            let c = if i == 0 || i == n_nodes - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            nodes.push(nu);
            weights.push(c * h / 3.0 * nu);
        }
        let q = Self { nu_max, tail, nodes, weights };
        let rel_err = q.self_test_error();
        if rel_err > SELF_TEST_TOL {
            return Err(Error::Quadrature { rel_err });
        }
        Ok(q)
    }

    /// Relative error of the rule on `int_1^nu_max nu^-2 dnu`.
    pub fn self_test_error(&self) -> f64 {
        let exact = 1.0 - 1.0 / self.nu_max;
        let got: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(nu, w)| w / (nu * nu))
            .sum();
        ((got - exact) / exact).abs()
    }

    pub fn nu_max(&self) -> f64 {
        self.nu_max
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn tail(&self) -> bool {
        self.tail
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `int_{nu_max}^inf (nu^-2 - nu^-3) dnu`.
    pub fn tail_factor(&self) -> f64 {
        1.0 / self.nu_max - 0.5 / (self.nu_max * self.nu_max)
    }
}

impl Default for NuQuadrature {
    fn default() -> Self {
        Self::new(Self::DEFAULT_NU_MAX, Self::DEFAULT_NODES, true).expect("default quadrature")
    }
}

/// Static field `B0 = B(v0)` and the phase `phi(t) = -(ln t) B0`.
#[derive(Clone, Debug)]
pub struct PhaseGauge {
    b0: Field,
}

impl PhaseGauge {
    /// Wraps a real field; rejects imaginary parts above `1e-12` (relative).
    pub fn new(b0: &Field) -> Result<Self> {
        let p = b0.physical();
        let scale = p.max_abs().max(1.0);
        if p.max_imag() > REALNESS_TOL * scale {
            return Err(Error::InvalidArgument(format!(
                "gauge field must be real, max imaginary part {:.3e}",
                p.max_imag()
            )));
        }
        Ok(Self { b0: p.real_part() })
    }

    pub fn zero(grid: &Arc<SpectralGrid>) -> Self {
        Self { b0: Field::zeros(grid) }
    }

    pub fn b0(&self) -> &Field {
        &self.b0
    }

    pub fn is_zero(&self) -> bool {
        self.b0.values().iter().all(|v| v.re == 0.0)
    }

    /// `phi(t) = -(ln t) B0`.
    pub fn phi_at(&self, t: f64) -> Result<Field> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("phase time must be > 0, got {t}")));
        }
        Ok(self.b0.scale(Complex64::new(-t.ln(), 0.0)))
    }

    /// Pointwise `exp(-i phi(t)) = exp(i ln(t) B0)`.
    pub(crate) fn unphase_factors(&self, t: f64) -> Vec<Complex64> {
        let lt = t.ln();
        self.b0
            .values()
            .iter()
            .map(|b| Complex64::from_polar(1.0, lt * b.re))
            .collect()
    }

    /// `exp(-i phi(t)) f`.
    pub fn unphase(&self, f: &Field, t: f64) -> Result<Field> {
        self.phi_at(t)?;
        Ok(self.multiply(f, &self.unphase_factors(t), false))
    }

    /// `exp(+i phi(t)) f`.
    pub fn phase(&self, f: &Field, t: f64) -> Result<Field> {
        self.phi_at(t)?;
        Ok(self.multiply(f, &self.unphase_factors(t), true))
    }

    fn multiply(&self, f: &Field, factors: &[Complex64], conj: bool) -> Field {
        let p = f.physical();
        let v = p
            .values()
            .iter()
            .zip(factors)
            .map(|(x, e)| if conj { x * e.conj() } else { x * e })
            .collect();
        Field::from_parts(f.grid(), v, Representation::Physical)
    }
}

/// Supplies the real density `|u_c(tau)|^2` on the grid.
pub trait DensitySource: Sync {
    fn density(&self, tau: f64) -> Result<Vec<f64>>;
}

/// Time-independent source.
pub struct StaticDensity(pub Vec<f64>);

impl StaticDensity {
    pub fn of(v0: &Field) -> Self {
        Self(v0.modulus_squared())
    }
}

impl DensitySource for StaticDensity {
    fn density(&self, _tau: f64) -> Result<Vec<f64>> {
        Ok(self.0.clone())
    }
}

/// `|U(tau) exp(-i phi(tau)) v(tau)|^2` for a trajectory `v`.
pub struct DressedDensity<'a> {
    traj: &'a Trajectory,
    gauge: &'a PhaseGauge,
}

impl<'a> DressedDensity<'a> {
    pub fn new(traj: &'a Trajectory, gauge: &'a PhaseGauge) -> Self {
        Self { traj, gauge }
    }
}

impl DensitySource for DressedDensity<'_> {
    fn density(&self, tau: f64) -> Result<Vec<f64>> {
        let (j, a) = self.traj.locate(tau)?;
        let grid = self.traj.grid();
        let lo = self.traj.field(j).values();
        let phase = self.gauge.unphase_factors(tau);
        let mut buf: Vec<Complex64> = if a == 0.0 {
            lo.iter().zip(&phase).map(|(v, e)| v * e).collect()
        } else {
            let hi = self.traj.field(j + 1).values();
            lo.iter()
                .zip(hi)
                .zip(&phase)
                .map(|((x, y), e)| (x * (1.0 - a) + y * a) * e)
                .collect()
        };
        grid.fft_forward(&mut buf);
        let prop = propagator_table(grid, tau);
        for (c, &s) in buf.iter_mut().zip(grid.shells()) {
            *c *= prop[s as usize];
        }
        grid.fft_inverse(&mut buf);
        Ok(buf.iter().map(|c| c.norm_sqr()).collect())
    }
}

/// Node-wise `|u_c|^2` of a dressed trajectory, interpolated linearly in
/// `s = ln t` between mesh nodes and frozen below the mesh.
pub struct NodeDensity {
    traj_mesh: LogTimeMesh,
    densities: Vec<Vec<f64>>,
}

impl NodeDensity {
    pub fn new(traj: &Trajectory, gauge: &PhaseGauge) -> Result<Self> {
        let exact = DressedDensity::new(traj, gauge);
        let mesh = *traj.mesh();
        let densities = par::try_map_range(mesh.n_nodes(), |j| exact.density(mesh.t(j)))?;
        Ok(Self {
            traj_mesh: mesh,
            densities,
        })
    }

    pub fn at_node(&self, j: usize) -> &[f64] {
        &self.densities[j]
    }
}

impl DensitySource for NodeDensity {
    fn density(&self, tau: f64) -> Result<Vec<f64>> {
        let (j, a) = self.traj_mesh.locate(tau)?;
        let lo = &self.densities[j];
        if a == 0.0 {
            return Ok(lo.clone());
        }
        let hi = &self.densities[j + 1];
        Ok(lo.iter().zip(hi).map(|(x, y)| x * (1.0 - a) + y * a).collect())
    }
}

struct BNode {
    nu: f64,
    dilation: Dilation,
    /// `w nu^-3 sin(|k| (nu - 1)) / |k|` per shell.
    kernel: Vec<f64>,
}

/// Precomputed quadrature of the `B` integral on one grid.
pub struct BOperator {
    grid: Arc<SpectralGrid>,
    quad: NuQuadrature,
    nodes: Vec<BNode>,
}

impl BOperator {
    pub fn new(grid: &Arc<SpectralGrid>, quad: &NuQuadrature) -> Result<Self> {
        let nodes = quad
            .nodes()
            .iter()
            .zip(quad.weights())
            .map(|(&nu, &w)| {
                let tau = nu - 1.0;
                let c = w / (nu * nu * nu);
                Ok(BNode {
                    nu,
                    dilation: Dilation::new(grid, nu)?,
                    kernel: grid.shell_table(|k| if k == 0.0 { c * tau } else { c * (k * tau).sin() / k }),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: Arc::clone(grid),
            quad: quad.clone(),
            nodes,
        })
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn quadrature(&self) -> &NuQuadrature {
        &self.quad
    }

    /// `B(u_c, t)` for the density supplied by `source`.
    pub fn compute<S: DensitySource + ?Sized>(&self, source: &S, t: f64) -> Result<Field> {
        let (field, _) = self.compute_with_residue(source, t)?;
        Ok(field)
    }

    /// As [`compute`](Self::compute), also returning the relative imaginary
    /// residue removed by the final real projection.
    pub fn compute_with_residue<S: DensitySource + ?Sized>(
        &self,
        source: &S,
        t: f64,
    ) -> Result<(Field, f64)> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("B time must be > 0, got {t}")));
        }
        let grid = &self.grid;
        let len = grid.len();
        let shells = grid.shells();
        let negated = grid.negated_indices();
        let mut acc = vec![Complex64::default(); len];
        let mut buf = vec![Complex64::default(); len];
        let mut dil = [vec![0.0; len], vec![0.0; len]];
        let mut work = vec![0.0; len];
        let mut tail_mean = 0.0;
        // Two real integrands share one complex FFT.
        for pair in self.nodes.chunks(2) {
            for (node, out) in pair.iter().zip(dil.iter_mut()) {
                let rho = source.density(t / node.nu)?;
                node.dilation.apply_real_into(&rho, out, &mut work);
                if node.nu == self.quad.nu_max() {
                    tail_mean = out.iter().sum::<f64>() / len as f64;
                }
            }
            let second = pair.len() == 2;
            for ((b, &x), &y) in buf.iter_mut().zip(&dil[0]).zip(&dil[1]) {
                *b = Complex64::new(x, if second { y } else { 0.0 });
            }
            grid.fft_forward(&mut buf);
            let ka = &pair[0].kernel;
            if second {
                let kb = &pair[1].kernel;
                for (i, a) in acc.iter_mut().enumerate() {
                    let z = buf[i];
                    let zn = buf[negated[i] as usize].conj();
                    let s = shells[i] as usize;
                    // D_a = (z + zn) / 2, D_b = (z - zn) / 2i.
                    let da = (z + zn) * 0.5;
                    let db = (z - zn) * Complex64::new(0.0, -0.5);
                    *a += da * ka[s] + db * kb[s];
                }
            } else {
                for ((a, b), &s) in acc.iter_mut().zip(&buf).zip(shells) {
                    *a += b * ka[s as usize];
                }
            }
        }
        if self.quad.tail() {
            acc[0] += tail_mean * self.quad.tail_factor() * (grid.len() as f64).sqrt();
        }
        grid.fft_inverse(&mut acc);
        check_finite(&acc, "B field")?;
        let max = acc.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
        let imag = acc.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        let residue = if max > 0.0 { imag / max } else { imag };
        if residue > REALNESS_TOL {
            return Err(Error::InvalidArgument(format!(
                "B field is not real: relative imaginary part {residue:.3e}"
            )));
        }
        let values = acc.into_iter().map(|c| Complex64::new(c.re, 0.0)).collect();
        Ok((Field::from_parts(grid, values, Representation::Physical), residue))
    }

    /// `B(v0)`: the same integral with the time-independent source `|v0|^2`.
    pub fn compute_static(&self, v0: &Field) -> Result<Field> {
        self.compute(&StaticDensity::of(v0), 1.0)
    }

    /// `B(u_c, t)` at each of `times`, in parallel.
    pub fn compute_along(
        &self,
        traj: &Trajectory,
        gauge: &PhaseGauge,
        times: &[f64],
    ) -> Result<Vec<Field>> {
        let source = NodeDensity::new(traj, gauge)?;
        self.compute_along_source(&source, times)
    }

    /// `B` at each of `times` for an arbitrary source, in parallel.
    pub fn compute_along_source<S: DensitySource + ?Sized>(
        &self,
        source: &S,
        times: &[f64],
    ) -> Result<Vec<Field>> {
        par::try_map_range(times.len(), |i| self.compute(source, times[i]))
    }
}

/// One-shot `B(u_c, t)`.
pub fn compute_b<S: DensitySource + ?Sized>(
    grid: &Arc<SpectralGrid>,
    source: &S,
    t: f64,
    quad: &NuQuadrature,
) -> Result<Field> {
    BOperator::new(grid, quad)?.compute(source, t)
}

/// One-shot `B(v0)`.
pub fn compute_b_static(v0: &Field, quad: &NuQuadrature) -> Result<Field> {
    BOperator::new(v0.grid(), quad)?.compute_static(v0)
}

/// `L(v) = -(U_phi^* B U_phi - B0)` at time `t` for a given `B(u_c, t)`.
///
/// `B` and `B0` are real, so the operator is self-adjoint.
pub struct LOperator<'a> {
    grid: Arc<SpectralGrid>,
    b: &'a Field,
    b0: &'a Field,
    unphase: Vec<Complex64>,
    prop: Vec<Complex64>,
}

impl<'a> LOperator<'a> {
    pub fn new(gauge: &'a PhaseGauge, b: &'a Field, t: f64) -> Result<Self> {
        gauge.phi_at(t)?;
        if !b.same_grid(gauge.b0()) {
            return Err(Error::GridMismatch);
        }
        let grid = Arc::clone(b.grid());
        let prop = propagator_table(&grid, t);
        Ok(Self {
            unphase: gauge.unphase_factors(t),
            prop,
            b,
            b0: gauge.b0(),
            grid,
        })
    }

    /// Applies the operator to physical samples.
    pub fn apply_raw(&self, w: &[Complex64]) -> Vec<Complex64> {
        let shells = self.grid.shells();
        let mut x: Vec<Complex64> = w.iter().zip(&self.unphase).map(|(a, e)| a * e).collect();
        self.grid.fft_forward(&mut x);
        for (c, &s) in x.iter_mut().zip(shells) {
            *c *= self.prop[s as usize];
        }
        self.grid.fft_inverse(&mut x);
        for (c, b) in x.iter_mut().zip(self.b.values()) {
            *c *= b.re;
        }
        self.grid.fft_forward(&mut x);
        for (c, &s) in x.iter_mut().zip(shells) {
            *c *= self.prop[s as usize].conj();
        }
        self.grid.fft_inverse(&mut x);
        x.iter()
            .zip(&self.unphase)
            .zip(w)
            .zip(self.b0.values())
            .map(|(((c, e), wv), b0)| -(c * e.conj()) + wv * b0.re)
            .collect()
    }

    pub fn apply(&self, w: &Field) -> Field {
        let p = w.physical();
        Field::from_parts(&self.grid, self.apply_raw(p.values()), Representation::Physical)
    }
}

/// `L(v) w` at time `t`, with `B(u_c, t)` built from the dressed trajectory.
pub fn apply_l(
    v_traj: &Trajectory,
    gauge: &PhaseGauge,
    t: f64,
    w: &Field,
    bop: &BOperator,
) -> Result<Field> {
    let b = bop.compute(&DressedDensity::new(v_traj, gauge), t)?;
    Ok(LOperator::new(gauge, &b, t)?.apply(w))
}
