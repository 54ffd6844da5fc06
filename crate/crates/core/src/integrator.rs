//! Discrete numerical solutions `{t_k, x_k, x'_k}`.
//!
//! Two explicit Runge–Kutta schemes produce the mesh: the Dormand–Prince
//! 5(4) embedded pair with error-per-step control, and classical fixed-step
//! RK4. In both, the stored node derivative is exactly `f(t_k, x_k)`.

// `!(a < b)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::{Read, Write};

use thiserror::Error;

use crate::linalg::Vector;
use crate::model::LinearOdeProblem;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("step size underflow at t = {t:e} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("maximum number of steps ({0}) exceeded")]
    MaxStepsExceeded(usize),
    #[error("non-finite state at t = {t:e}")]
    NonFiniteState { t: f64 },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("time column is not strictly increasing at row {row}")]
    NonMonotoneTime { row: usize },
    #[error("row {row}: expected {expected} values, found {found}")]
    DimensionMismatch { row: usize, expected: usize, found: usize },
    #[error("a trajectory needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("trajectory spans [{first:e}, {last:e}] but the problem interval is [{t0:e}, {tm:e}]")]
    IntervalMismatch { first: f64, last: f64, t0: f64, tm: f64 },
    #[error("trajectory table: {0}")]
    Table(String),
}

/// Where the node derivatives of a [`Trajectory`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivSource {
    /// Produced by one of the integrators as `f(t_k, x_k)`.
    Solver,
    /// Read from an external table.
    Supplied,
    /// Absent from an external table and recomputed as `f(t_k, x_k)`.
    Recomputed,
}

/// Mesh, node values and node derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    nodes: Vec<T>,
    values: Vec<Vector<T>>,
    derivs: Vec<Vector<T>>,
    source: DerivSource,
}

impl<T: Scalar> Trajectory<T> {
    /// Validates ordering, dimensions and the two-interval minimum.
    pub fn new(
        nodes: Vec<T>,
        values: Vec<Vector<T>>,
        derivs: Vec<Vector<T>>,
        source: DerivSource,
    ) -> Result<Self, IntegrateError> {
        if nodes.len() < 3 {
            return Err(IntegrateError::TooFewNodes(nodes.len()));
        }
        if let Some(row) = nodes.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(IntegrateError::NonMonotoneTime { row: row + 1 });
        }
        if values.len() != nodes.len() || derivs.len() != nodes.len() {
            return Err(IntegrateError::DimensionMismatch {
                row: nodes.len().min(values.len()).min(derivs.len()),
                expected: nodes.len(),
                found: values.len().min(derivs.len()),
            });
        }
        let n = values[0].len();
        for (row, (v, d)) in values.iter().zip(&derivs).enumerate() {
            for found in [v.len(), d.len()] {
                if found != n {
                    return Err(IntegrateError::DimensionMismatch { row, expected: n, found });
                }
            }
        }
        Ok(Trajectory { nodes, values, derivs, source })
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn values(&self) -> &[Vector<T>] {
        &self.values
    }

    pub fn derivs(&self) -> &[Vector<T>] {
        &self.derivs
    }

    pub fn deriv_source(&self) -> DerivSource {
        self.source
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    /// Number of intervals `m`.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn steps(&self) -> impl Iterator<Item = T> + '_ {
        self.nodes.windows(2).map(|w| w[1] - w[0])
    }

    pub fn t0(&self) -> T {
        self.nodes[0]
    }

    pub fn tm(&self) -> T {
        self.nodes[self.nodes.len() - 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig<T> {
    pub rtol: T,
    pub atol: T,
    /// Initial step; chosen automatically when `None`.
    pub h_init: Option<T>,
    pub h_max_step: Option<T>,
    pub max_steps: usize,
}

impl<T: Scalar> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self::with_tolerance(T::lit(1e-6))
    }
}

impl<T: Scalar> IntegratorConfig<T> {
    pub fn with_tolerance(tol: T) -> Self {
        IntegratorConfig { rtol: tol, atol: tol, h_init: None, h_max_step: None, max_steps: 1_000_000 }
    }

    fn validate(&self) -> Result<(), IntegrateError> {
        let bad = |m: &str| Err(IntegrateError::InvalidConfig(m.into()));
        if !(self.rtol > T::zero() && self.atol > T::zero()) {
            return bad("rtol and atol must be positive");
        }
        if self.max_steps < 2 {
            return bad("max_steps must be at least 2");
        }
        if matches!(self.h_init, Some(h) if !(h > T::zero())) {
            return bad("h_init must be positive");
        }
        if matches!(self.h_max_step, Some(h) if !(h > T::zero())) {
            return bad("h_max_step must be positive");
        }
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const UNDERFLOW_RATIO: f64 = 1e-14;

/// Solves `problem` with adaptive Dormand–Prince 5(4).
pub fn integrate_dp45<T: Scalar>(
    problem: &LinearOdeProblem<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>, IntegrateError> {
    let (t0, tm) = (problem.t0(), problem.tm());
    // at least two intervals
    let half_span = (tm - t0) * T::lit(0.5);
    let mut cfg = cfg.clone();
    cfg.h_max_step = Some(cfg.h_max_step.map_or(half_span, |h| h.min(half_span)));
    let (nodes, values, derivs) = dp45(|t, x| problem.eval_f(t, x), t0, tm, problem.x0().clone(), &cfg)?;
    Trajectory::new(nodes, values, derivs, DerivSource::Solver)
}

type Path<T> = (Vec<T>, Vec<Vector<T>>, Vec<Vector<T>>);

/// Dormand–Prince 5(4) on an arbitrary right-hand side. Returns accepted
/// nodes with values and `rhs(t_k, x_k)`; the last node is exactly `tm`.
pub(crate) fn dp45<T, F>(rhs: F, t0: T, tm: T, x0: Vector<T>, cfg: &IntegratorConfig<T>) -> Result<Path<T>, IntegrateError>
where
    T: Scalar,
    F: Fn(T, &Vector<T>) -> Vector<T>,
{
    cfg.validate()?;
    let span = tm - t0;
    let h_floor = T::lit(UNDERFLOW_RATIO) * span;
    let h_cap = cfg.h_max_step.unwrap_or(span).min(span);

    let f0 = rhs(t0, &x0);
    if !x0.is_finite() || !f0.is_finite() {
        return Err(IntegrateError::NonFiniteState { t: t0.to_f64_lossy() });
    }
    let mut h = cfg.h_init.unwrap_or_else(|| initial_step(&rhs, t0, &x0, &f0, span, cfg)).min(h_cap);

    let mut nodes = vec![t0];
    let mut values = vec![x0.clone()];
    let mut derivs = vec![f0.clone()];
    let (mut t, mut x, mut k1) = (t0, x0, f0);
    let mut rejected_last = false;
    let mut steps = 0usize;

    while t < tm {
        if steps >= cfg.max_steps {
            return Err(IntegrateError::MaxStepsExceeded(cfg.max_steps));
        }
        steps += 1;

        let mut last = false;
        if t + h * T::lit(1.1) >= tm {
            h = tm - t;
            last = true;
        }
        if h < h_floor {
            return Err(IntegrateError::StepSizeUnderflow { t: t.to_f64_lossy(), h: h.to_f64_lossy() });
        }

        let mut k: Vec<Vector<T>> = Vec::with_capacity(7);
        k.push(k1.clone());
        for s in 1..6 {
            let mut xs = x.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = T::lit(A[s][j]);
                if a != T::zero() {
                    xs = xs.add_scaled(h * a, kj);
                }
            }
            k.push(rhs(t + T::lit(C[s]) * h, &xs));
        }
        let mut x_new = x.clone();
        for (j, kj) in k.iter().enumerate().take(6) {
            let b = T::lit(A[6][j]);
            if b != T::zero() {
                x_new = x_new.add_scaled(h * b, kj);
            }
        }
        let t_new = if last { tm } else { t + h };
        if !(t_new > t) {
            return Err(IntegrateError::StepSizeUnderflow { t: t.to_f64_lossy(), h: h.to_f64_lossy() });
        }
        // FSAL stage, evaluated at the node time that will be stored
        let k7 = rhs(t_new, &x_new);
        k.push(k7);

        let mut err = Vector::zeros(x.len());
        for (j, kj) in k.iter().enumerate() {
            let e = T::lit(E[j]);
            if e != T::zero() {
                err = err.add_scaled(h * e, kj);
            }
        }
        if !x_new.is_finite() || !err.is_finite() {
            return Err(IntegrateError::NonFiniteState { t: t_new.to_f64_lossy() });
        }
        let scale = cfg.atol + cfg.rtol * x.inf_norm().max(x_new.inf_norm());
        let ratio = err.inf_norm() / scale;

        let mut factor = if ratio == T::zero() {
            T::lit(FAC_MAX)
        } else {
            (T::lit(SAFETY) * ratio.powf(T::lit(-0.2))).max(T::lit(FAC_MIN)).min(T::lit(FAC_MAX))
        };

        if ratio <= T::one() {
            t = t_new;
            x = x_new;
            k1 = k.pop().expect("seven stages");
            nodes.push(t);
            values.push(x.clone());
            derivs.push(k1.clone());
            if rejected_last {
                factor = factor.min(T::one());
            }
            rejected_last = false;
        } else {
            rejected_last = true;
        }
        h = (h * factor).min(h_cap);
    }
    Ok((nodes, values, derivs))
}

/// Starting step: `(tm − t0)·10⁻³`, capped by the usual derivative-scaled estimate.
fn initial_step<T, F>(rhs: &F, t0: T, x0: &Vector<T>, f0: &Vector<T>, span: T, cfg: &IntegratorConfig<T>) -> T
where
    T: Scalar,
    F: Fn(T, &Vector<T>) -> Vector<T>,
{
    let sc = cfg.atol + cfg.rtol * x0.inf_norm();
    let d0 = x0.inf_norm() / sc;
    let d1 = f0.inf_norm() / sc;
    let small = T::lit(1e-5);
    let h0 = if d0 < small || d1 < small { T::lit(1e-6) * span } else { T::lit(0.01) * d0 / d1 };
    let h0 = h0.min(span);
    let x1 = x0.add_scaled(h0, f0);
    let f1 = rhs(t0 + h0, &x1);
    let d2 = (&f1 - f0).inf_norm() / sc / h0;
    let dmax = d1.max(d2);
    let h1 = if !(dmax > T::lit(1e-15)) {
        (T::lit(1e-6) * span).max(h0 * T::lit(1e-3))
    } else {
        (T::lit(0.01) / dmax).powf(T::lit(0.2))
    };
    let heuristic = (T::lit(100.0) * h0).min(h1);
    let base = span * T::lit(1e-3);
    if heuristic.is_finite() && heuristic > T::zero() {
        base.min(heuristic)
    } else {
        base
    }
}

/// Classical fixed-step RK4 with uniform step `h`; the last step is clipped to `tm`.
pub fn integrate_rk4_fixed<T: Scalar>(problem: &LinearOdeProblem<T>, h: T) -> Result<Trajectory<T>, IntegrateError> {
    let (t0, tm) = (problem.t0(), problem.tm());
    let span = tm - t0;
    if !(h > T::zero()) {
        return Err(IntegrateError::InvalidConfig("step must be positive".into()));
    }
    let ratio = span / h;
    if ratio < T::lit(2.0) * (T::one() - T::lit(1e-9)) {
        return Err(IntegrateError::InvalidConfig(format!("step {h} gives fewer than two intervals")));
    }
    let rounded = ratio.round();
    let count = if (ratio - rounded).abs() <= T::lit(1e-9) * ratio { rounded } else { ratio.ceil() };
    let count = count.to_usize().ok_or_else(|| IntegrateError::InvalidConfig("too many steps".into()))?;

    let f = |t: T, x: &Vector<T>| problem.eval_f(t, x);
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let mut nodes = Vec::with_capacity(count + 1);
    let mut values = Vec::with_capacity(count + 1);
    let mut derivs = Vec::with_capacity(count + 1);
    let mut x = problem.x0().clone();
    let mut t = t0;
    let mut k1 = f(t, &x);
    nodes.push(t);
    values.push(x.clone());
    derivs.push(k1.clone());
    for step in 1..=count {
        let t_next = if step == count { tm } else { t0 + T::from_usize_lossy(step) * h };
        let hs = t_next - t;
        let k2 = f(t + half * hs, &x.add_scaled(half * hs, &k1));
        let k3 = f(t + half * hs, &x.add_scaled(half * hs, &k2));
        let k4 = f(t_next, &x.add_scaled(hs, &k3));
        let incr = k1.add_scaled(T::lit(2.0), &k2).add_scaled(T::lit(2.0), &k3).add_scaled(T::one(), &k4);
        x = x.add_scaled(hs * sixth, &incr);
        if !x.is_finite() {
            return Err(IntegrateError::NonFiniteState { t: t_next.to_f64_lossy() });
        }
        t = t_next;
        k1 = f(t, &x);
        nodes.push(t);
        values.push(x.clone());
        derivs.push(k1.clone());
    }
    Trajectory::new(nodes, values, derivs, DerivSource::Solver)
}

/// One row of an externally produced solution table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow<T> {
    pub t: T,
    pub x: Vector<T>,
    pub xp: Option<Vector<T>>,
}

/// Wraps external solver output. Missing derivatives are recomputed as `f(t_k, x_k)`.
pub fn trajectory_from_table<T: Scalar>(
    rows: Vec<TableRow<T>>,
    problem: &LinearOdeProblem<T>,
) -> Result<Trajectory<T>, IntegrateError> {
    if rows.len() < 3 {
        return Err(IntegrateError::TooFewNodes(rows.len()));
    }
    let n = problem.dim();
    let with_xp = rows[0].xp.is_some();
    for (row, r) in rows.iter().enumerate() {
        if r.x.len() != n {
            return Err(IntegrateError::DimensionMismatch { row, expected: n, found: r.x.len() });
        }
        match &r.xp {
            Some(xp) if xp.len() != n => {
                return Err(IntegrateError::DimensionMismatch { row, expected: n, found: xp.len() });
            }
            Some(_) if !with_xp => return Err(IntegrateError::DimensionMismatch { row, expected: n, found: 2 * n }),
            None if with_xp => return Err(IntegrateError::DimensionMismatch { row, expected: 2 * n, found: n }),
            _ => {}
        }
        if row > 0 && !(rows[row - 1].t < r.t) {
            return Err(IntegrateError::NonMonotoneTime { row });
        }
    }
    let (first, last) = (rows[0].t, rows[rows.len() - 1].t);
    let tol = T::lit(1e-12) * (problem.tm() - problem.t0());
    if (first - problem.t0()).abs() > tol || (last - problem.tm()).abs() > tol {
        return Err(IntegrateError::IntervalMismatch {
            first: first.to_f64_lossy(),
            last: last.to_f64_lossy(),
            t0: problem.t0().to_f64_lossy(),
            tm: problem.tm().to_f64_lossy(),
        });
    }

    let source = if with_xp { DerivSource::Supplied } else { DerivSource::Recomputed };
    let mut nodes = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    let mut derivs = Vec::with_capacity(rows.len());
    for r in rows {
        let xp = r.xp.unwrap_or_else(|| problem.eval_f(r.t, &r.x));
        nodes.push(r.t);
        values.push(r.x);
        derivs.push(xp);
    }
    Trajectory::new(nodes, values, derivs, source)
}

/// Writes `t,x1..xn,dx1..dxn` with 17 significant digits.
pub fn write_trajectory_csv<T: Scalar, W: Write>(traj: &Trajectory<T>, out: W) -> Result<(), IntegrateError> {
    let n = traj.dim();
    let csv_err = |e: csv::Error| IntegrateError::Table(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|i| format!("dx{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for k in 0..traj.nodes.len() {
        let mut rec = vec![format_num(traj.nodes[k])];
        rec.extend(traj.values[k].iter().map(|&v| format_num(v)));
        rec.extend(traj.derivs[k].iter().map(|&v| format_num(v)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| IntegrateError::Table(e.to_string()))
}

/// Reads a `t,x1..xn[,dx1..dxn]` table and builds a trajectory for `problem`.
pub fn read_trajectory_csv<T: Scalar, R: Read>(
    input: R,
    problem: &LinearOdeProblem<T>,
) -> Result<Trajectory<T>, IntegrateError> {
    let n = problem.dim();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers().map_err(|e| IntegrateError::Table(e.to_string()))?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let plain: Vec<String> = std::iter::once("t".to_string()).chain((1..=n).map(|i| format!("x{i}"))).collect();
    let with_d: Vec<String> = plain.iter().cloned().chain((1..=n).map(|i| format!("dx{i}"))).collect();
    let has_xp = if cols == with_d {
        true
    } else if cols == plain {
        false
    } else {
        return Err(IntegrateError::Table(format!(
            "header must be '{}' or '{}', found '{}'",
            plain.join(","),
            with_d.join(","),
            cols.join(",")
        )));
    };

    let mut rows = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| IntegrateError::Table(e.to_string()))?;
        let vals: Vec<T> = rec
            .iter()
            .map(|s| s.parse::<T>().ok().filter(|v| v.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| IntegrateError::Table(format!("row {}: invalid number", row + 1)))?;
        let expected = if has_xp { 1 + 2 * n } else { 1 + n };
        if vals.len() != expected {
            return Err(IntegrateError::DimensionMismatch { row, expected, found: vals.len() });
        }
        rows.push(TableRow {
            t: vals[0],
            x: Vector::from_vec(vals[1..=n].to_vec()),
            xp: has_xp.then(|| Vector::from_vec(vals[n + 1..].to_vec())),
        });
    }
    trajectory_from_table(rows, problem)
}

pub(crate) fn format_num<T: Scalar>(v: T) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{catalog, CoeffExpr, Coefficient};

    fn zero_problem(c: f64) -> LinearOdeProblem<f64> {
        LinearOdeProblem::new(
            "const",
            vec![CoeffExpr::zero()],
            vec![Coefficient::Expr(CoeffExpr::zero())],
            Vector::from_vec(vec![c]),
            (0.0, 1.0),
            None,
        )
        .unwrap()
    }

    #[test]
    fn dp45_exponential_endpoint() {
        let p = catalog::<f64>("example1").unwrap();
        let tr = integrate_dp45(&p, &IntegratorConfig::with_tolerance(1e-8)).unwrap();
        assert_eq!(tr.tm(), 2.0);
        let x2 = tr.values().last().unwrap()[0];
        assert!((x2 - 2f64.exp()).abs() <= 1e-6, "{x2}");
    }

    #[test]
    fn derivs_are_bitwise_rhs_evaluations() {
        for name in ["example1", "variant-stable", "suspension"] {
            let p = catalog::<f64>(name).unwrap();
            let tr = integrate_dp45(&p, &IntegratorConfig::with_tolerance(1e-6)).unwrap();
            for k in 0..tr.nodes().len() {
                assert_eq!(tr.derivs()[k], p.eval_f(tr.nodes()[k], &tr.values()[k]));
            }
            let tr = integrate_rk4_fixed(&p, (p.tm() - p.t0()) / 37.0).unwrap();
            for k in 0..tr.nodes().len() {
                assert_eq!(tr.derivs()[k], p.eval_f(tr.nodes()[k], &tr.values()[k]));
            }
        }
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let p = zero_problem(0.0);
        let tr = integrate_dp45(&p, &IntegratorConfig::default()).unwrap();
        assert!(tr.intervals() >= 2);
        assert!(tr.values().iter().all(|v| v[0] == 0.0));
        let tr = integrate_rk4_fixed(&zero_problem(2.5), 0.25).unwrap();
        assert_eq!(tr.nodes().len(), 5);
        assert!(tr.values().iter().all(|v| v[0] == 2.5));
    }

    #[test]
    fn dp45_tracks_manufactured_solution() {
        let p = catalog::<f64>("invariant2x2").unwrap();
        let tr = integrate_dp45(&p, &IntegratorConfig::with_tolerance(1e-6)).unwrap();
        let ex = p.exact().unwrap();
        for (t, x) in tr.nodes().iter().zip(tr.values()) {
            // the second component grows like e^{2t}
            assert!((x - &ex.value(*t)).inf_norm() <= 1e-5 * (2.0 * t).exp(), "t={t}");
        }
        assert!(tr.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rk4_single_step_hand_value() {
        let p = catalog::<f64>("example1").unwrap();
        let tr = integrate_rk4_fixed(&p, 1.0).unwrap();
        assert_eq!(tr.nodes(), &[0.0, 1.0, 2.0]);
        let x1 = tr.values()[1][0];
        assert!((x1 - (1.0 + 1.0 + 0.5 + 1.0 / 6.0 + 1.0 / 24.0)).abs() < 1e-15);
        assert!((x1 - std::f64::consts::E).abs() <= 0.02);
    }

    #[test]
    fn rk4_order_four() {
        let p = catalog::<f64>("example1").unwrap();
        let err = |h: f64| {
            let tr = integrate_rk4_fixed(&p, h).unwrap();
            (tr.values().last().unwrap()[0] - 2f64.exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() <= 0.25 * 16.0, "ratio {ratio}");
    }

    #[test]
    fn rk4_clips_last_step() {
        let p = catalog::<f64>("example1").unwrap();
        let tr = integrate_rk4_fixed(&p, 0.3).unwrap();
        assert_eq!(tr.nodes().len(), 8);
        assert_eq!(tr.tm(), 2.0);
        assert!(integrate_rk4_fixed(&p, 1.5).is_err());
    }

    #[test]
    fn config_validation_and_failures() {
        let p = catalog::<f64>("example1").unwrap();
        let mut cfg = IntegratorConfig::with_tolerance(1e-6);
        cfg.rtol = 0.0;
        assert!(matches!(integrate_dp45(&p, &cfg), Err(IntegrateError::InvalidConfig(_))));
        let mut cfg = IntegratorConfig::with_tolerance(1e-12);
        cfg.max_steps = 5;
        assert!(matches!(integrate_dp45(&p, &cfg), Err(IntegrateError::MaxStepsExceeded(5))));
    }

    #[test]
    fn table_ingestion() {
        let p = catalog::<f64>("example1").unwrap();
        let e = std::f64::consts::E;
        let v = |x: f64| Vector::from_vec(vec![x]);
        let rows = vec![
            TableRow { t: 0.0, x: v(1.0), xp: Some(v(1.0)) },
            TableRow { t: 1.0, x: v(e), xp: Some(v(e)) },
            TableRow { t: 2.0, x: v(e * e), xp: Some(v(e * e)) },
        ];
        let tr = trajectory_from_table(rows, &p).unwrap();
        assert_eq!(tr.deriv_source(), DerivSource::Supplied);
        assert_eq!(tr.derivs()[2][0], e * e);

        let rows = vec![
            TableRow { t: 0.0, x: v(1.0), xp: None },
            TableRow { t: 1.0, x: v(e), xp: None },
            TableRow { t: 2.0, x: v(e * e), xp: None },
        ];
        let tr = trajectory_from_table(rows, &p).unwrap();
        assert_eq!(tr.deriv_source(), DerivSource::Recomputed);
        assert_eq!(tr.derivs(), tr.values());

        let rows = vec![
            TableRow { t: 0.0, x: v(1.0), xp: None },
            TableRow { t: 0.0, x: v(1.0), xp: None },
            TableRow { t: 1.0, x: v(e), xp: None },
        ];
        assert!(matches!(trajectory_from_table(rows, &p), Err(IntegrateError::NonMonotoneTime { row: 1 })));

        let rows = vec![
            TableRow { t: 0.0, x: v(1.0), xp: None },
            TableRow { t: 1.0, x: Vector::from_vec(vec![1.0, 2.0]), xp: None },
            TableRow { t: 2.0, x: v(e), xp: None },
        ];
        assert!(matches!(trajectory_from_table(rows, &p), Err(IntegrateError::DimensionMismatch { row: 1, .. })));
    }

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let p = catalog::<f64>("variant-stable").unwrap();
        let tr = integrate_dp45(&p, &IntegratorConfig::with_tolerance(1e-5)).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&tr, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x1,x2,dx1,dx2\n"));
        let back = read_trajectory_csv(buf.as_slice(), &p).unwrap();
        assert_eq!(back.nodes(), tr.nodes());
        assert_eq!(back.values(), tr.values());
        assert_eq!(back.derivs(), tr.derivs());
        assert_eq!(back.deriv_source(), DerivSource::Supplied);

        let plain = "t,x1,x2\n0,0,0\n3,0.5,0.25\n6,1,1\n";
        let back = read_trajectory_csv(plain.as_bytes(), &p).unwrap();
        assert_eq!(back.deriv_source(), DerivSource::Recomputed);
        assert!(read_trajectory_csv("t,y1,y2\n".as_bytes(), &p).is_err());
    }
}
