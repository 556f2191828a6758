//! Fields on a logarithmic time mesh `s = ln t` covering `(0, T]`.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::bgauge::PhaseGauge;
use crate::error::{Error, Result};
use crate::field::{check_finite, Field};
use crate::grid::SpectralGrid;
use crate::norms::sobolev;
use crate::snapshot;
use crate::spectral::free_propagate;

/// Uniform nodes `s_j = s_min + j ds`, `j = 0..=n_steps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogTimeMesh {
    s_min: f64,
    s_max: f64,
    n_steps: usize,
}

/// Span of the default mesh in `s`.
pub const DEFAULT_S_SPAN: f64 = 12.0;
/// Default number of steps (40 per unit of `s`).
pub const DEFAULT_STEPS: usize = 480;

impl LogTimeMesh {
    pub fn new(s_min: f64, s_max: f64, n_steps: usize) -> Result<Self> {
        if !(s_min.is_finite() && s_max.is_finite() && s_min < s_max) {
            return Err(Error::InvalidArgument(format!(
                "log-time mesh needs s_min < s_max, got [{s_min}, {s_max}]"
            )));
        }
        if n_steps < 2 {
            return Err(Error::InvalidArgument(format!(
                "log-time mesh needs at least 2 steps, got {n_steps}"
            )));
        }
        Ok(Self { s_min, s_max, n_steps })
    }

    /// Mesh ending at `t_final` spanning `span` units of `ln t`.
    pub fn ending_at(t_final: f64, span: f64, n_steps: usize) -> Result<Self> {
        if !(t_final > 0.0) {
            return Err(Error::InvalidArgument(format!("T must be > 0, got {t_final}")));
        }
        let s_max = t_final.ln();
        Self::new(s_max - span, s_max, n_steps)
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn step(&self) -> f64 {
        (self.s_max - self.s_min) / self.n_steps as f64
    }

    pub fn s(&self, j: usize) -> f64 {
        if j == self.n_steps {
            self.s_max
        } else {
            self.s_min + j as f64 * self.step()
        }
    }

    pub fn t(&self, j: usize) -> f64 {
        self.s(j).exp()
    }

    /// `s` halfway between nodes `j` and `j + 1`.
    pub fn s_mid(&self, j: usize) -> f64 {
        self.s_min + (j as f64 + 0.5) * self.step()
    }

    pub fn t_max(&self) -> f64 {
        self.s_max.exp()
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        let t_max = self.t_max();
        if !(t > 0.0 && t <= t_max * (1.0 + T_SLACK)) {
            return Err(Error::TimeOutOfRange { t, t_max });
        }
        Ok(())
    }

    /// Bracketing node and weight of the upper node; below the mesh the
    /// first node is returned.
    pub fn locate(&self, t: f64) -> Result<(usize, f64)> {
        self.check_time(t)?;
        let s = t.ln();
        if s <= self.s_min {
            return Ok((0, 0.0));
        }
        let x = (s - self.s_min) / self.step();
        let j = (x.floor() as usize).min(self.n_steps - 1);
        let a = (x - j as f64).clamp(0.0, 1.0);
        Ok(if a < SNAP {
            (j, 0.0)
        } else if a > 1.0 - SNAP {
            (j + 1, 0.0)
        } else {
            (j, a)
        })
    }

    pub fn t_min(&self) -> f64 {
        self.s_min.exp()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(|j| self.s(j))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// Amplitude `v` of the nonlinear problem.
    Amplitude,
    /// Solution `v'` of the partially linearized problem.
    Linearized,
    /// Transformed Schrodinger field `u_c`.
    Transformed,
}

/// One field per mesh node, all on the same grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    mesh: LogTimeMesh,
    fields: Vec<Field>,
    role: Role,
}

/// Relative slack when comparing a query time against the mesh end.
const T_SLACK: f64 = 1e-12;
/// Interpolation weights closer than this to 0 or 1 snap to the node.
const SNAP: f64 = 1e-12;

impl Trajectory {
    pub fn new(mesh: LogTimeMesh, fields: Vec<Field>, role: Role) -> Result<Self> {
        if fields.len() != mesh.n_nodes() {
            return Err(Error::InvalidArgument(format!(
                "trajectory needs {} fields, got {}",
                mesh.n_nodes(),
                fields.len()
            )));
        }
        let first = &fields[0];
        for f in &fields {
            if !f.same_grid(first) {
                return Err(Error::GridMismatch);
            }
            check_finite(f.values(), "trajectory field")?;
        }
        let fields = fields.into_iter().map(|f| f.physical()).collect();
        Ok(Self { mesh, fields, role })
    }

    /// Trajectory equal to `f` at every node.
    pub fn constant(mesh: LogTimeMesh, f: &Field, role: Role) -> Self {
        let f = f.physical();
        Self {
            mesh,
            fields: vec![f; mesh.n_nodes()],
            role,
        }
    }

    pub fn mesh(&self) -> &LogTimeMesh {
        &self.mesh
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn field(&self, j: usize) -> &Field {
        &self.fields[j]
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.fields[0].grid()
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn initial(&self) -> &Field {
        &self.fields[0]
    }

    pub fn last(&self) -> &Field {
        &self.fields[self.mesh.n_steps]
    }


    pub(crate) fn locate(&self, t: f64) -> Result<(usize, f64)> {
        self.mesh.locate(t)
    }

    /// Linear interpolation in `s`; frozen at the first node below the mesh.
    pub fn sample(&self, t: f64) -> Result<Field> {
        let (j, a) = self.locate(t)?;
        if a == 0.0 {
            return Ok(self.fields[j].clone());
        }
        let lo = &self.fields[j];
        let hi = &self.fields[j + 1];
        Ok(lo.axpy(Complex64::new(a, 0.0), &hi.sub(lo)))
    }

    /// `u_c(t) = U(t) exp(-i phi(t)) v(t)`.
    pub fn dress(&self, gauge: &PhaseGauge, t: f64) -> Result<Field> {
        let v = self.sample(t)?;
        free_propagate(&gauge.unphase(&v, t)?, t)
    }

    /// Supremum over nodes of `||self - other||` in `H^sigma`.
    pub fn sup_distance(&self, other: &Trajectory, sigma: f64) -> f64 {
        self.fields
            .iter()
            .zip(&other.fields)
            .map(|(a, b)| sobolev(&a.sub(b), sigma))
            .fold(0.0, f64::max)
    }

    /// CSV manifest `node,s,t,l2_norm,h_rho_norm`.
    pub fn write_manifest(&self, path: &Path, rho: f64) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["node", "s", "t", "l2_norm", "h_rho_norm"])?;
        for (j, f) in self.fields.iter().enumerate() {
            w.write_record([
                j.to_string(),
                crate::csvfmt(self.mesh.s(j)),
                crate::csvfmt(self.mesh.t(j)),
                crate::csvfmt(f.l2_norm()),
                crate::csvfmt(sobolev(f, rho)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One `WSFLD1` snapshot per node, `<prefix>_<node>.wsfld`.
    pub fn write_snapshots(&self, dir: &Path, prefix: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (j, f) in self.fields.iter().enumerate() {
            snapshot::save(&dir.join(format!("{prefix}_{j:05}.wsfld")), f)?;
        }
        Ok(())
    }
}
