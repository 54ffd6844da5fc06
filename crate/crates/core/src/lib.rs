//! Defect-based a posteriori forward-error bounds for linear time-varying
//! initial value problems `x' = A(t)·x + q(t)`.
//!
//! A discrete solution (from the built-in Dormand–Prince or RK4 solvers, or
//! from an external table) is lifted to a C¹ piecewise cubic Hermite curve
//! `x̃`. Its residual `δ = x̃' − A·x̃ − q` is sampled per step and fed, in the
//! eigenframe of `A(t₀)`, into an exponential envelope `B(t)` that bounds
//! `‖x*(t) − x̃(t)‖∞`.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common `f64` choice.
//!
//! ```
//! use odecert::bound::{bound_report, compute_hmax, spectral_frame, BoundMode};
//! use odecert::{catalog, integrate_dp45, linspace, profile, HermiteSpline, IntegratorConfig};
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let p = catalog::<f64>("variant-stable")?;
//! let traj = integrate_dp45(&p, &IntegratorConfig::with_tolerance(1e-6))?;
//! let spline = HermiteSpline::fit(&traj);
//! let frame = spectral_frame(&p)?;
//! let h_max = compute_hmax(&p, &frame, 1024);
//! let prof = profile(&spline, &p, Some(&frame.eig), 32);
//! let grid = linspace(p.t0(), p.tm(), 512);
//! let report = bound_report(BoundMode::Stepwise, &frame, h_max, &prof, traj.nodes(), &grid)?;
//! assert!(report.mu < 0.0);
//! # Ok(())
//! # }
//! ```

pub mod bound;
pub mod integrator;
pub mod interpolant;
pub mod linalg;
pub mod model;
pub mod report;
pub mod residual;
pub mod scalar;

pub use bound::{
    bound_envelope_global, bound_envelope_stepwise, bound_report, compute_hmax, forward_error_oracle, spectral_frame,
    BoundError, BoundMode, BoundReport, DeltaMax, SpectralFrame,
};
pub use integrator::{
    integrate_dp45, integrate_rk4_fixed, read_trajectory_csv, trajectory_from_table, write_trajectory_csv,
    DerivSource, IntegrateError, IntegratorConfig, TableRow, Trajectory,
};
pub use interpolant::{Curve, ExprCurve, HermiteSpline, InterpError};
pub use linalg::{real_eigen, EigenDecomposition, LinalgError, Matrix, Vector};
pub use model::{catalog, parse_expr, parse_problem, CoeffExpr, LinearOdeProblem, ModelError};
pub use report::{
    render_curves, run_scenario, Certificate, OutputFormat, ProblemSource, ScenarioConfig, ScenarioError,
};
pub use residual::{profile, profile_on_mesh, residual_at, ResidualProfile, StepResidual};
pub use scalar::{linspace, Scalar};

pub type Vector64 = Vector<f64>;
pub type Matrix64 = Matrix<f64>;
pub type Problem64 = LinearOdeProblem<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type Spline64 = HermiteSpline<f64>;
pub type Frame64 = SpectralFrame<f64>;
pub type Vector32 = Vector<f32>;
pub type Matrix32 = Matrix<f32>;
pub type Problem32 = LinearOdeProblem<f32>;
pub type Spline32 = HermiteSpline<f32>;
