//! Spectral simulator for the pseudoconformally inverted Wave-Schrodinger
//! system with vanishing asymptotic wave data.
//!
//! The pipeline runs on a periodic box standing in for R^3:
//! [`spectral`] supplies the Fourier-diagonal operators, [`bgauge`] the
//! nonlocal field `B` and the logarithmic phase, [`solver`] the log-time
//! unitary stepping and the Picard fixed point, [`scatter`] the wave-operator
//! reconstruction, and [`verify`] the rate and estimate checks.

pub mod bgauge;
pub mod cli;
pub mod config;
pub mod error;
pub mod field;
pub mod grid;
pub mod norms;
pub mod par;
pub mod random;
pub mod scatter;
pub mod snapshot;
pub mod solver;
pub mod spectral;
pub mod trajectory;
pub mod verify;

pub use bgauge::{BOperator, NuQuadrature, PhaseGauge};
pub use error::{Error, Result};
pub use field::{Field, Representation};
pub use grid::SpectralGrid;
pub use norms::NormSpec;
pub use solver::{PicardReport, PicardSolution, SolverConfig};
pub use trajectory::{LogTimeMesh, Role, Trajectory};

/// Full-precision scientific notation used in every CSV artifact.
pub fn csvfmt(x: f64) -> String {
    format!("{x:.17e}")
}
