//! Domain types: polynomials, grids, profiles, configurations and reports.

mod config;
mod grid;
mod polynomial;
mod profile;
mod report;

pub use config::{preset, validate_config, EpsTarget, KernelVariant, Preset, SolveConfig, PRESET_NAMES};
pub(crate) use grid::{normalize, radial_moment_weights};
pub use grid::{AxisymmetricGrid, Grid, GridSpec, RadialGrid, TailedIntegral};
pub use polynomial::QuadraticPolynomial;
pub use profile::{x_norm, Profile};
pub use report::{round_sig, to_report_json, write_trace_csv, SolutionReport, TraceRow};

/// `P(x)`; see [`QuadraticPolynomial::evaluate`].
pub fn evaluate_polynomial(poly: &QuadraticPolynomial, point: [f64; 3]) -> f64 {
    poly.evaluate(point)
}
