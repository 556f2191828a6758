//! Run configuration: `key = value` lines under bracketed sections (TOML).
//! Every key is optional; absent keys take the documented defaults.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::bgauge::NuQuadrature;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::SpectralGrid;
use crate::snapshot;
use crate::solver::{
    default_theta, SolverConfig, DEFAULT_EXPM_TOL, DEFAULT_PICARD_MAX_ITER, DEFAULT_PICARD_TOL,
    DEFAULT_RHO, DEFAULT_T,
};
use crate::trajectory::{LogTimeMesh, DEFAULT_STEPS, DEFAULT_S_SPAN};
use crate::{norms, scatter, verify};

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n_points: usize,
    pub box_length: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n_points: 32, box_length: 16.0 }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub rho: Option<f64>,
    pub rho_prime: Option<f64>,
    pub theta: Option<f64>,
    pub eps_pm: Option<f64>,
    #[serde(rename = "T")]
    pub t_final: Option<f64>,
    pub picard_tol: Option<f64>,
    pub picard_max_iter: Option<usize>,
    pub expm_tol: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSection {
    /// Length of the mesh in `ln t`; it ends at `ln T`.
    pub s_span: f64,
    pub n_steps: usize,
}

impl Default for MeshSection {
    fn default() -> Self {
        Self { s_span: DEFAULT_S_SPAN, n_steps: DEFAULT_STEPS }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSection {
    pub nu_max: f64,
    pub n_nodes: usize,
    pub tail: bool,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        Self {
            nu_max: NuQuadrature::DEFAULT_NU_MAX,
            n_nodes: NuQuadrature::DEFAULT_NODES,
            tail: true,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    /// Amplitude datum: `builtin:<name>:<params>` or a snapshot path.
    pub v0: String,
    /// Asymptotic datum for the wave operator.
    pub u0: String,
    /// Width of the odd perturbation direction.
    pub perturbation_width: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            v0: "builtin:gaussian:0.07,1.0".into(),
            u0: "builtin:gaussian:0.07,1.0".into(),
            perturbation_width: 1.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub snapshots: bool,
    /// Physical sample times of the wave operator.
    pub times: Vec<f64>,
    pub decades: f64,
    pub samples: usize,
    pub sobolev_sizes: Vec<usize>,
    pub sobolev_trials: usize,
    pub deltas: Vec<f64>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            seed: 0,
            snapshots: false,
            times: scatter::DEFAULT_TIMES.to_vec(),
            decades: 2.0,
            samples: 9,
            sobolev_sizes: vec![16, 24, 32],
            sobolev_trials: 20,
            deltas: verify::DEFAULT_DELTAS.to_vec(),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub solver: SolverSection,
    pub mesh: MeshSection,
    pub quadrature: QuadratureSection,
    pub scenario: ScenarioSection,
    pub run: RunSection,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::ConfigParse {
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            msg: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.solver_config()?;
        let bad = |key: &str, msg: &str| Err(Error::ConfigValue { key: key.into(), msg: msg.into() });
        if self.run.times.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return bad("times", "physical times must be > 0");
        }
        if !(self.run.decades > 0.0) || self.run.samples < verify::MIN_SAMPLES {
            return bad("samples", "decay checks need decades > 0 and at least 5 samples");
        }
        if self.run.sobolev_sizes.is_empty() || self.run.sobolev_trials == 0 {
            return bad("sobolev_sizes", "need at least one grid size and one trial");
        }
        if self.run.deltas.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return bad("deltas", "perturbation sizes must be > 0");
        }
        if !(self.scenario.perturbation_width > 0.0) {
            return bad("perturbation_width", "must be > 0");
        }
        Scenario::parse(&self.scenario.v0)?;
        Scenario::parse(&self.scenario.u0)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<SpectralGrid>> {
        SpectralGrid::new(self.grid.n_points, self.grid.box_length).map_err(|e| Error::ConfigValue {
            key: "grid".into(),
            msg: e.to_string(),
        })
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let rho = s.rho.unwrap_or(DEFAULT_RHO);
        let t_final = s.t_final.unwrap_or(DEFAULT_T);
        let value_err = |key: &str| {
            let key = key.to_string();
            move |e: Error| Error::ConfigValue { key: key.clone(), msg: e.to_string() }
        };
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::ConfigValue { key: "T".into(), msg: format!("T must be > 0, got {t_final}") });
        }
        let cfg = SolverConfig {
            rho,
            rho_prime: s.rho_prime.unwrap_or(rho),
            theta: s.theta.unwrap_or_else(|| default_theta(rho)),
            eps_pm: s.eps_pm.unwrap_or(norms::DEFAULT_EPS_PM),
            t_final,
            mesh: LogTimeMesh::ending_at(t_final, self.mesh.s_span, self.mesh.n_steps)
                .map_err(value_err("mesh"))?,
            quad: NuQuadrature::new(self.quadrature.nu_max, self.quadrature.n_nodes, self.quadrature.tail)
                .map_err(value_err("quadrature"))?,
            picard_tol: s.picard_tol.unwrap_or(DEFAULT_PICARD_TOL),
            picard_max_iter: s.picard_max_iter.unwrap_or(DEFAULT_PICARD_MAX_ITER),
            expm_tol: s.expm_tol.unwrap_or(DEFAULT_EXPM_TOL),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Initial or asymptotic datum.
#[derive(Clone, Debug, PartialEq)]
pub enum Scenario {
    /// `amp exp(-|x|^2 / 2 width^2)`.
    Gaussian { amp: f64, width: f64 },
    /// Gaussian envelope times `exp(i k x_1)` with `k = k_index 2 pi / L`.
    PlaneWavePacket { amp: f64, k_index: i64, width: f64 },
    /// Bumps of amplitude `amp` and `amp / 2` at `x_1 = +-separation / 2`.
    TwoBump { amp: f64, width: f64, separation: f64 },
    Snapshot(PathBuf),
}

impl Scenario {
    pub fn parse(spec: &str) -> Result<Self> {
        let Some(rest) = spec.strip_prefix("builtin:") else {
            return Ok(Scenario::Snapshot(PathBuf::from(spec)));
        };
        let bad = |msg: String| Error::ConfigValue { key: "scenario".into(), msg };
        let (name, params) = rest.split_once(':').unwrap_or((rest, ""));
        let nums = params
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("bad parameter in `{spec}`: {e}")))?;
        let need = |k: usize| {
            if nums.len() == k && nums.iter().all(|x| x.is_finite()) {
                Ok(())
            } else {
                Err(bad(format!("`{name}` takes {k} finite parameters, got `{params}`")))
            }
        };
        let s = match name {
            "gaussian" => {
                need(2)?;
                Scenario::Gaussian { amp: nums[0], width: nums[1] }
            }
            "plane-wave-packet" => {
                need(3)?;
                if nums[1].fract() != 0.0 {
                    return Err(bad(format!("k_index must be an integer, got {}", nums[1])));
                }
                Scenario::PlaneWavePacket { amp: nums[0], k_index: nums[1] as i64, width: nums[2] }
            }
            "two-bump" => {
                need(3)?;
                Scenario::TwoBump { amp: nums[0], width: nums[1], separation: nums[2] }
            }
            other => return Err(bad(format!("unknown builtin scenario `{other}`"))),
        };
        match s {
            Scenario::Gaussian { width, .. }
            | Scenario::PlaneWavePacket { width, .. }
            | Scenario::TwoBump { width, .. }
                if !(width > 0.0) =>
            {
                Err(bad(format!("width must be > 0, got {width}")))
            }
            s => Ok(s),
        }
    }

    pub fn build(&self, grid: &Arc<SpectralGrid>) -> Result<Field> {
        let bump = |x: f64, y: f64, z: f64, w: f64| (-(x * x + y * y + z * z) / (2.0 * w * w)).exp();
        match *self {
            Scenario::Gaussian { amp, width } => Ok(Field::gaussian(grid, amp, width)),
            Scenario::PlaneWavePacket { amp, k_index, width } => {
                let k = k_index as f64 * grid.fundamental();
                Field::from_fn(grid, |[x, y, z]| {
                    num_complex::Complex64::from_polar(amp * bump(x, y, z, width), k * x)
                })
            }
            Scenario::TwoBump { amp, width, separation } => {
                let h = separation / 2.0;
                Field::from_fn(grid, |[x, y, z]| {
                    (amp * bump(x - h, y, z, width) + 0.5 * amp * bump(x + h, y, z, width)).into()
                })
            }
            Scenario::Snapshot(ref path) => {
                let f = snapshot::load(path)?;
                if f.grid().n_points() != grid.n_points()
                    || (f.grid().box_length() - grid.box_length()).abs() > 1e-12 * grid.box_length()
                {
                    return Err(Error::Snapshot {
                        path: path.clone(),
                        msg: "snapshot grid does not match the configured grid".into(),
                    });
                }
                Field::new(grid, f.into_values(), crate::field::Representation::Physical)
            }
        }
    }
}
