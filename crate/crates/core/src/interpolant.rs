//! Piecewise cubic Hermite interpolation of node values and derivatives.
//!
//! On `[t_{i-1}, t_i]` with `s = t − t_{i-1}` and `h = t_i − t_{i-1}` each
//! component is `c0 + c1·s + c2·s² + c3·s³` where
//!
//! ```text
//! c0 = x_{i-1}
//! c1 = x'_{i-1}
//! c2 = 3(x_i − x_{i-1})/h² − (x'_i + 2x'_{i-1})/h
//! c3 = (x'_i + x'_{i-1})/h² − 2(x_i − x_{i-1})/h³
//! ```
//!
//! The result is the unique C¹ piecewise cubic matching both values and
//! derivatives at every node.

use thiserror::Error;

use crate::integrator::Trajectory;
use crate::linalg::Vector;
use crate::model::CoeffExpr;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpError {
    #[error("t = {t:e} lies outside the spline domain [{t0:e}, {tm:e}]")]
    OutOfDomain { t: f64, t0: f64, tm: f64 },
}

/// A C¹ curve on a closed interval with value and first derivative.
pub trait Curve<T: Scalar> {
    fn domain(&self) -> (T, T);
    fn value(&self, t: T) -> Result<Vector<T>, InterpError>;
    fn derivative(&self, t: T) -> Result<Vector<T>, InterpError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermiteSpline<T> {
    breaks: Vec<T>,
    /// `coeffs[i][j]` is `(c0, c1, c2, c3)` of component `j` on interval `i`.
    coeffs: Vec<Vec<[T; 4]>>,
}

impl<T: Scalar> HermiteSpline<T> {
    pub fn fit(traj: &Trajectory<T>) -> Self {
        let nodes = traj.nodes();
        let (xs, dxs) = (traj.values(), traj.derivs());
        let three = T::lit(3.0);
        let two = T::lit(2.0);
        let coeffs = (1..nodes.len())
            .map(|i| {
                let h = nodes[i] - nodes[i - 1];
                (0..traj.dim())
                    .map(|j| {
                        let (f0, f1) = (xs[i - 1][j], xs[i][j]);
                        let (d0, d1) = (dxs[i - 1][j], dxs[i][j]);
                        let df = f1 - f0;
                        let c2 = three * df / (h * h) - (d1 + two * d0) / h;
                        let c3 = (d1 + d0) / (h * h) - two * df / (h * h * h);
                        [f0, d0, c2, c3]
                    })
                    .collect()
            })
            .collect();
        HermiteSpline { breaks: nodes.to_vec(), coeffs }
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breaks
    }

    pub fn intervals(&self) -> usize {
        self.coeffs.len()
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].len()
    }

    /// Local coefficients `(c0, c1, c2, c3)` of `component` on interval `i` (0-based).
    pub fn coefficients(&self, interval: usize, component: usize) -> [T; 4] {
        self.coeffs[interval][component]
    }

    /// Interval owning `t`: the right one at a shared knot, the last one at `tm`.
    pub fn locate(&self, t: T) -> Result<usize, InterpError> {
        let (t0, tm) = (self.breaks[0], self.breaks[self.breaks.len() - 1]);
        let slack = T::lit(1e-12) * (tm - t0);
        if !(t >= t0 - slack && t <= tm + slack) {
            return Err(InterpError::OutOfDomain { t: t.to_f64_lossy(), t0: t0.to_f64_lossy(), tm: tm.to_f64_lossy() });
        }
        let k = self.breaks.partition_point(|&b| b <= t);
        Ok(k.saturating_sub(1).min(self.intervals() - 1))
    }

    /// Evaluates the cubic of interval `i` at `t`, without domain checks.
    pub fn eval_piece(&self, i: usize, t: T) -> Vector<T> {
        let s = t - self.breaks[i];
        self.coeffs[i].iter().map(|c| c[0] + s * (c[1] + s * (c[2] + s * c[3]))).collect()
    }

    pub fn eval_piece_deriv(&self, i: usize, t: T) -> Vector<T> {
        let s = t - self.breaks[i];
        let (two, three) = (T::lit(2.0), T::lit(3.0));
        self.coeffs[i].iter().map(|c| c[1] + s * (two * c[2] + s * three * c[3])).collect()
    }

    pub fn eval(&self, t: T) -> Result<Vector<T>, InterpError> {
        Ok(self.eval_piece(self.locate(t)?, t))
    }

    pub fn eval_deriv(&self, t: T) -> Result<Vector<T>, InterpError> {
        Ok(self.eval_piece_deriv(self.locate(t)?, t))
    }

    /// Largest step `max_i (t_i − t_{i-1})`.
    pub fn max_step(&self) -> T {
        self.breaks.windows(2).map(|w| w[1] - w[0]).fold(T::zero(), T::max)
    }
}

impl<T: Scalar> Curve<T> for HermiteSpline<T> {
    fn domain(&self) -> (T, T) {
        (self.breaks[0], self.breaks[self.breaks.len() - 1])
    }

    fn value(&self, t: T) -> Result<Vector<T>, InterpError> {
        self.eval(t)
    }

    fn derivative(&self, t: T) -> Result<Vector<T>, InterpError> {
        self.eval_deriv(t)
    }
}

/// A curve given by closed-form component expressions on `[t0, tm]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprCurve<T> {
    components: Vec<CoeffExpr<T>>,
    derivs: Vec<CoeffExpr<T>>,
    domain: (T, T),
}

impl<T: Scalar> ExprCurve<T> {
    pub fn new(components: Vec<CoeffExpr<T>>, domain: (T, T)) -> Self {
        let derivs = components.iter().map(CoeffExpr::derivative).collect();
        ExprCurve { components, derivs, domain }
    }

    fn check(&self, t: T) -> Result<(), InterpError> {
        let (t0, tm) = self.domain;
        let slack = T::lit(1e-12) * (tm - t0);
        if t >= t0 - slack && t <= tm + slack {
            Ok(())
        } else {
            Err(InterpError::OutOfDomain { t: t.to_f64_lossy(), t0: t0.to_f64_lossy(), tm: tm.to_f64_lossy() })
        }
    }
}

impl<T: Scalar> Curve<T> for ExprCurve<T> {
    fn domain(&self) -> (T, T) {
        self.domain
    }

    fn value(&self, t: T) -> Result<Vector<T>, InterpError> {
        self.check(t)?;
        Ok(self.components.iter().map(|e| e.eval(t)).collect())
    }

    fn derivative(&self, t: T) -> Result<Vector<T>, InterpError> {
        self.check(t)?;
        Ok(self.derivs.iter().map(|e| e.eval(t)).collect())
    }
}

/// Interpolation error bound `h⁴·max|f⁽⁴⁾| / 384`.
pub fn hermite_error_bound<T: Scalar>(h: T, m4: T) -> T {
    h.powi(4) * m4 / T::lit(384.0)
}
