//! A posteriori forward-error envelope for linear problems.
//!
//! With `A₀ = A(t₀) = P·Σ·P⁻¹` (real, diagonalizable), the transformed error
//! `y = P⁻¹Δx` obeys `y' = Σy + P⁻¹(A(t) − A₀)P·y − P⁻¹δ`. Bounding the
//! perturbation entries by `h_max` and the forcing entries by `δ_max` gives
//! the comparison equation `φ' = μφ + δ_max` with `μ = λ₁ + n·h_max`, hence
//!
//! ```text
//! ‖Δx(t)‖∞ ≤ ‖P‖∞ · δ_max · (e^{μ(t−t₀)} − 1) / μ.
//! ```
//!
//! The stepwise variant solves the same comparison equation piecewise with
//! one `δ_k` per mesh interval.

use serde::Serialize;
use thiserror::Error;

use crate::integrator::{dp45, IntegrateError, IntegratorConfig};
use crate::interpolant::HermiteSpline;
use crate::linalg::{real_eigen, EigenDecomposition, LinalgError, Matrix, Vector, DEFAULT_COMPLEX_TOL};
use crate::model::LinearOdeProblem;
use crate::residual::ResidualProfile;
use crate::scalar::{linspace, Scalar};

pub const DEFAULT_HMAX_GRID: usize = 1024;
/// `|μ|` at or below this uses the `μ → 0` limit.
pub const MU_ZERO: f64 = 1e-12;
/// Tolerance used by [`oracle_config`].
pub const ORACLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error("grid point {t:e} lies outside [{t0:e}, {tm:e}]")]
    GridOutsideDomain { t: f64, t0: f64, tm: f64 },
    #[error("residual profile has {found} steps but the mesh has {expected} intervals")]
    ProfileMismatch { expected: usize, found: usize },
    #[error("residual profile carries no eigen-coordinate maxima")]
    MissingTransformed,
}

/// Eigenframe of `A₀ = A(t₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFrame<T> {
    pub a0: Matrix<T>,
    pub eig: EigenDecomposition<T>,
    pub norm_p: T,
    pub n: usize,
}

impl<T: Scalar> SpectralFrame<T> {
    pub fn lambda1(&self) -> T {
        self.eig.lambda_max()
    }

    /// `μ = λ₁ + n·h_max`
    pub fn growth_exponent(&self, h_max: T) -> T {
        self.lambda1() + T::from_usize_lossy(self.n) * h_max
    }
}

/// Fails with `ComplexSpectrum` or `DefectiveMatrix` when the method does
/// not apply.
pub fn spectral_frame<T: Scalar>(problem: &LinearOdeProblem<T>) -> Result<SpectralFrame<T>, BoundError> {
    let a0 = problem.eval_a(problem.t0());
    let eig = real_eigen(&a0, T::lit(DEFAULT_COMPLEX_TOL))?;
    let norm_p = eig.p.inf_norm();
    Ok(SpectralFrame { n: a0.rows(), a0, eig, norm_p })
}

/// `max |(P⁻¹(A(t) − A₀)P)_{ij}|` over `grid_points` equispaced times.
pub fn compute_hmax<T: Scalar>(problem: &LinearOdeProblem<T>, frame: &SpectralFrame<T>, grid_points: usize) -> T {
    assert!(grid_points >= 2, "h_max grid needs at least 2 points");
    if problem.is_time_invariant() {
        return T::zero();
    }
    linspace(problem.t0(), problem.tm(), grid_points)
        .into_iter()
        .map(|t| {
            let d = problem.eval_a(t).sub_mat(&frame.a0);
            frame.eig.p_inv.matmul(&d).matmul(&frame.eig.p).max_abs()
        })
        .fold(T::zero(), T::max)
}

/// `(e^{μs} − 1)/μ`, or `s` when `|μ| ≤ MU_ZERO`.
fn growth<T: Scalar>(mu: T, s: T) -> T {
    if mu.abs() <= T::lit(MU_ZERO) {
        s
    } else {
        (mu * s).exp_m1() / mu
    }
}

pub fn bound_envelope_global<T: Scalar>(frame: &SpectralFrame<T>, h_max: T, delta_max: T, t: T, t0: T) -> T {
    let mu = frame.growth_exponent(h_max);
    frame.norm_p * delta_max * growth(mu, t - t0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMode {
    Global,
    Stepwise,
}

impl std::str::FromStr for BoundMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "global" => Ok(BoundMode::Global),
            "stepwise" => Ok(BoundMode::Stepwise),
            other => Err(format!("unknown bound mode '{other}' (expected global or stepwise)")),
        }
    }
}

impl std::fmt::Display for BoundMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundMode::Global => "global",
            BoundMode::Stepwise => "stepwise",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeltaMax<T> {
    Global(T),
    PerStep(Vec<T>),
}

impl<T: Scalar> DeltaMax<T> {
    pub fn max(&self) -> T {
        match self {
            DeltaMax::Global(d) => *d,
            DeltaMax::PerStep(v) => v.iter().copied().fold(T::zero(), T::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport<T> {
    pub mu: T,
    pub h_max: T,
    pub norm_p: T,
    pub delta: DeltaMax<T>,
    pub grid: Vec<T>,
    pub envelope: Vec<T>,
    pub mode: BoundMode,
    /// `h_max` and `δ_max` come from sampling, not from exact maximization.
    pub sampled: bool,
}

impl<T: Scalar> BoundReport<T> {
    pub fn max_bound(&self) -> T {
        self.envelope.iter().copied().fold(T::zero(), T::max)
    }
}

fn check_grid<T: Scalar>(grid: &[T], t0: T, tm: T) -> Result<(), BoundError> {
    let slack = T::lit(1e-12) * (tm - t0);
    match grid.iter().find(|&&t| !(t >= t0 - slack && t <= tm + slack)) {
        Some(&t) => Err(BoundError::GridOutsideDomain { t: t.to_f64_lossy(), t0: t0.to_f64_lossy(), tm: tm.to_f64_lossy() }),
        None => Ok(()),
    }
}

fn transformed(profile: &ResidualProfile<impl Scalar>) -> bool {
    profile.global_max_transformed.is_some()
}

/// Closed-form envelope with the global `δ_max` of `profile` on `grid`.
pub fn bound_report_global<T: Scalar>(
    frame: &SpectralFrame<T>,
    h_max: T,
    profile: &ResidualProfile<T>,
    domain: (T, T),
    grid: &[T],
) -> Result<BoundReport<T>, BoundError> {
    if !transformed(profile) {
        return Err(BoundError::MissingTransformed);
    }
    let (t0, tm) = domain;
    check_grid(grid, t0, tm)?;
    let d = profile.global_max_transformed.unwrap_or_else(T::zero);
    let envelope = grid.iter().map(|&t| bound_envelope_global(frame, h_max, d, t.max(t0), t0)).collect();
    Ok(BoundReport {
        mu: frame.growth_exponent(h_max),
        h_max,
        norm_p: frame.norm_p,
        delta: DeltaMax::Global(d),
        grid: grid.to_vec(),
        envelope,
        mode: BoundMode::Global,
        sampled: true,
    })
}

/// Piecewise solution of `φ' = μφ + δ_k` on the intervals of `mesh`.
///
/// `profile` must have been taken on `mesh` with an eigenframe.
pub fn bound_envelope_stepwise<T: Scalar>(
    frame: &SpectralFrame<T>,
    h_max: T,
    profile: &ResidualProfile<T>,
    mesh: &[T],
    grid: &[T],
) -> Result<BoundReport<T>, BoundError> {
    let deltas = profile.transformed_per_step().ok_or(BoundError::MissingTransformed)?;
    if deltas.len() + 1 != mesh.len() {
        return Err(BoundError::ProfileMismatch { expected: mesh.len().saturating_sub(1), found: deltas.len() });
    }
    let (t0, tm) = (mesh[0], mesh[mesh.len() - 1]);
    check_grid(grid, t0, tm)?;
    let mu = frame.growth_exponent(h_max);

    // φ at the nodes
    let mut phi = Vec::with_capacity(mesh.len());
    phi.push(T::zero());
    for (k, d) in deltas.iter().enumerate() {
        let h = mesh[k + 1] - mesh[k];
        let prev = phi[k];
        phi.push(advance(mu, prev, *d, h));
    }

    let envelope = grid
        .iter()
        .map(|&t| {
            let t = t.max(t0).min(tm);
            // interval k spans [mesh[k], mesh[k+1]]
            let k = mesh.partition_point(|&m| m < t).saturating_sub(1).min(deltas.len() - 1);
            frame.norm_p * advance(mu, phi[k], deltas[k], t - mesh[k])
        })
        .collect();
    Ok(BoundReport {
        mu,
        h_max,
        norm_p: frame.norm_p,
        delta: DeltaMax::PerStep(deltas),
        grid: grid.to_vec(),
        envelope,
        mode: BoundMode::Stepwise,
        sampled: true,
    })
}

/// `φ(s) = φ₀·e^{μs} + δ·(e^{μs} − 1)/μ`
fn advance<T: Scalar>(mu: T, phi0: T, delta: T, s: T) -> T {
    let carry = if mu.abs() <= T::lit(MU_ZERO) { phi0 } else { phi0 * (mu * s).exp() };
    carry + delta * growth(mu, s)
}

pub fn bound_report<T: Scalar>(
    mode: BoundMode,
    frame: &SpectralFrame<T>,
    h_max: T,
    profile: &ResidualProfile<T>,
    mesh: &[T],
    grid: &[T],
) -> Result<BoundReport<T>, BoundError> {
    match mode {
        BoundMode::Global => bound_report_global(frame, h_max, profile, (mesh[0], mesh[mesh.len() - 1]), grid),
        BoundMode::Stepwise => bound_envelope_stepwise(frame, h_max, profile, mesh, grid),
    }
}

/// `rtol = atol = 1e-10`
pub fn oracle_config<T: Scalar>() -> IntegratorConfig<T> {
    IntegratorConfig::with_tolerance(T::lit(ORACLE_TOL))
}

/// Integrates `Δx' = A(t)·Δx − δ(t)`, `Δx(t₀) = 0`, returning `Δx` at the
/// spline's breakpoints.
///
/// The forcing is only piecewise smooth, so each spline interval is a
/// separate integration seeded with the previous end value.
pub fn forward_error_oracle<T: Scalar>(
    problem: &LinearOdeProblem<T>,
    spline: &HermiteSpline<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<(Vec<T>, Vec<Vector<T>>), BoundError> {
    let mesh = spline.breakpoints();
    let mut out = Vec::with_capacity(mesh.len());
    let mut dx = Vector::zeros(problem.dim());
    out.push(dx.clone());
    for i in 0..spline.intervals() {
        let rhs = |t: T, y: &Vector<T>| {
            let x = spline.eval_piece(i, t);
            let delta = &spline.eval_piece_deriv(i, t) - &problem.eval_f(t, &x);
            &problem.eval_a(t).mul_vec(y) - &delta
        };
        let (_, values, _) = dp45(rhs, mesh[i], mesh[i + 1], dx, cfg)?;
        dx = values.last().cloned().unwrap_or_else(|| Vector::zeros(problem.dim()));
        out.push(dx.clone());
    }
    Ok((mesh.to_vec(), out))
}
