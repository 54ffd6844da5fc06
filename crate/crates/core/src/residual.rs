//! Residual (defect) `δ(t) = x̃'(t) − A(t)·x̃(t) − q(t)` of an interpolated
//! solution, and its sampled per-step maxima.

use crate::interpolant::{Curve, HermiteSpline, InterpError};
use crate::linalg::{EigenDecomposition, Vector};
use crate::model::LinearOdeProblem;
use crate::scalar::Scalar;

pub const DEFAULT_SAMPLES_PER_STEP: usize = 32;

pub fn residual_at<T: Scalar, C: Curve<T> + ?Sized>(
    curve: &C,
    problem: &LinearOdeProblem<T>,
    t: T,
) -> Result<Vector<T>, InterpError> {
    let x = curve.value(t)?;
    let dx = curve.derivative(t)?;
    Ok(&dx - &problem.eval_f(t, &x))
}

/// Sampled residual maxima on one mesh interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResidual<T> {
    /// `max ‖δ(t)‖∞`
    pub original: T,
    /// `max_j |(P⁻¹δ(t))_j|`, when an eigenframe was supplied.
    pub transformed: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualProfile<T> {
    pub per_step: Vec<StepResidual<T>>,
    pub samples_per_step: usize,
    pub global_max_original: T,
    pub global_max_transformed: Option<T>,
}

impl<T: Scalar> ResidualProfile<T> {
    /// Per-step `δ_k` in eigen coordinates, if available.
    pub fn transformed_per_step(&self) -> Option<Vec<T>> {
        self.per_step.iter().map(|s| s.transformed).collect()
    }
}

/// Profile over the spline's own mesh.
pub fn profile<T: Scalar>(
    spline: &HermiteSpline<T>,
    problem: &LinearOdeProblem<T>,
    frame: Option<&EigenDecomposition<T>>,
    samples_per_step: usize,
) -> ResidualProfile<T> {
    profile_on_mesh(spline, spline.breakpoints(), problem, frame, samples_per_step)
}

/// Samples `δ` at `samples_per_step + 1` equispaced points (both endpoints
/// included) on every interval of `mesh`.
///
/// Sample `k` of an interval is `t_{i-1} + h·(k/samples_per_step)`, so
/// multiplying `samples_per_step` by an integer only adds points.
pub fn profile_on_mesh<T: Scalar, C: Curve<T> + ?Sized>(
    curve: &C,
    mesh: &[T],
    problem: &LinearOdeProblem<T>,
    frame: Option<&EigenDecomposition<T>>,
    samples_per_step: usize,
) -> ResidualProfile<T> {
    assert!(samples_per_step >= 3, "need at least 3 samples per step");
    assert!(mesh.len() >= 2, "mesh needs at least one interval");
    let ns = T::from_usize_lossy(samples_per_step);
    let per_step: Vec<StepResidual<T>> = mesh
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let h = b - a;
            let mut orig = T::zero();
            let mut trans = frame.map(|_| T::zero());
            for k in 0..=samples_per_step {
                let t = if k == samples_per_step { b } else { a + h * (T::from_usize_lossy(k) / ns) };
                let delta = residual_at(curve, problem, t).expect("samples lie inside the mesh");
                orig = orig.max(delta.inf_norm());
                if let (Some(f), Some(m)) = (frame, trans.as_mut()) {
                    *m = m.max(f.p_inv.mul_vec(&delta).inf_norm());
                }
            }
            StepResidual { original: orig, transformed: trans }
        })
        .collect();
    let global_max_original = per_step.iter().map(|s| s.original).fold(T::zero(), T::max);
    let global_max_transformed =
        frame.map(|_| per_step.iter().filter_map(|s| s.transformed).fold(T::zero(), T::max));
    ResidualProfile { per_step, samples_per_step, global_max_original, global_max_transformed }
}
