use thiserror::Error;

use super::expr::{parse_expr, CoeffExpr, ParseError};
use crate::linalg::{Matrix, Vector};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: ParseError },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("product of coefficient terms has no closed form in the term language (row {row}, column {col})")]
    UnrepresentableProduct { row: usize, col: usize },
    #[error("unknown problem '{0}'")]
    UnknownProblem(String),
    #[error("exact solution disagrees with x0 at t0 in component {component} by {gap:e}")]
    InconsistentInitialValue { component: usize, gap: f64 },
}

/// A forcing or matrix entry: either a parsed expression or the manufactured
/// closed form `x*ᵢ'(t) − Σⱼ aᵢⱼ(t)·x*ⱼ(t)` evaluated directly.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient<T> {
    Expr(CoeffExpr<T>),
    Manufactured { row: usize, a_row: Vec<CoeffExpr<T>>, exact: Vec<CoeffExpr<T>>, exact_deriv: CoeffExpr<T> },
}

impl<T: Scalar> Coefficient<T> {
    pub fn eval(&self, t: T) -> T {
        match self {
            Coefficient::Expr(e) => e.eval(t),
            Coefficient::Manufactured { a_row, exact, exact_deriv, .. } => {
                let ax = a_row.iter().zip(exact).fold(T::zero(), |acc, (a, x)| acc + a.eval(t) * x.eval(t));
                exact_deriv.eval(t) - ax
            }
        }
    }

    pub fn as_expr(&self) -> Option<&CoeffExpr<T>> {
        match self {
            Coefficient::Expr(e) => Some(e),
            Coefficient::Manufactured { .. } => None,
        }
    }
}

impl<T: Scalar> From<CoeffExpr<T>> for Coefficient<T> {
    fn from(e: CoeffExpr<T>) -> Self {
        Coefficient::Expr(e)
    }
}

/// Linear IVP `x' = A(t)·x + q(t)`, `x(t0) = x0` on `[t0, tm]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOdeProblem<T> {
    pub name: String,
    n: usize,
    a: Vec<CoeffExpr<T>>,
    q: Vec<Coefficient<T>>,
    x0: Vector<T>,
    t0: T,
    tm: T,
    exact: Option<Vec<CoeffExpr<T>>>,
}

impl<T: Scalar> LinearOdeProblem<T> {
    /// `a` is row-major `n×n`.
    pub fn new(
        name: impl Into<String>,
        a: Vec<CoeffExpr<T>>,
        q: Vec<Coefficient<T>>,
        x0: Vector<T>,
        (t0, tm): (T, T),
        exact: Option<Vec<CoeffExpr<T>>>,
    ) -> Result<Self, ModelError> {
        let n = x0.len();
        if n == 0 {
            return Err(ModelError::Invalid("dimension must be at least 1".into()));
        }
        if a.len() != n * n {
            return Err(ModelError::Invalid(format!("state matrix needs {} entries, got {}", n * n, a.len())));
        }
        if q.len() != n {
            return Err(ModelError::Invalid(format!("forcing needs {n} entries, got {}", q.len())));
        }
        if !(t0.is_finite() && tm.is_finite() && t0 < tm) {
            return Err(ModelError::Invalid(format!("interval [{t0}, {tm}] must satisfy t0 < tm")));
        }
        if !x0.is_finite() {
            return Err(ModelError::Invalid("x0 must be finite".into()));
        }
        if let Some(ex) = &exact {
            if ex.len() != n {
                return Err(ModelError::Invalid(format!("exact solution needs {n} entries, got {}", ex.len())));
            }
            for (i, e) in ex.iter().enumerate() {
                let gap = (e.eval(t0) - x0[i]).abs();
                if gap > T::lit(1e-12) * x0[i].abs().max(T::one()) {
                    return Err(ModelError::InconsistentInitialValue { component: i, gap: gap.to_f64_lossy() });
                }
            }
        }
        Ok(LinearOdeProblem { name: name.into(), n, a, q, x0, t0, tm, exact })
    }

    /// Builds a problem whose forcing is manufactured from a prescribed exact solution.
    pub fn manufactured(
        name: impl Into<String>,
        a: Vec<CoeffExpr<T>>,
        exact: Vec<CoeffExpr<T>>,
        interval: (T, T),
        allow_fallback: bool,
    ) -> Result<Self, ModelError> {
        let n = exact.len();
        if a.len() != n * n {
            return Err(ModelError::Invalid(format!("state matrix needs {} entries, got {}", n * n, a.len())));
        }
        let q = manufacture_q(&a, &exact, allow_fallback)?;
        let x0 = exact.iter().map(|e| e.eval(interval.0)).collect();
        Self::new(name, a, q, x0, interval, Some(exact))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn tm(&self) -> T {
        self.tm
    }

    pub fn x0(&self) -> &Vector<T> {
        &self.x0
    }

    pub fn a_entry(&self, i: usize, j: usize) -> &CoeffExpr<T> {
        &self.a[i * self.n + j]
    }

    pub fn a_entries(&self) -> &[CoeffExpr<T>] {
        &self.a
    }

    pub fn q_entries(&self) -> &[Coefficient<T>] {
        &self.q
    }

    pub fn is_time_invariant(&self) -> bool {
        self.a.iter().all(CoeffExpr::is_constant)
    }

    /// State matrix `A(t)`.
    pub fn eval_a(&self, t: T) -> Matrix<T> {
        Matrix::from_fn(self.n, self.n, |i, j| self.a[i * self.n + j].eval(t))
    }

    pub fn eval_q(&self, t: T) -> Vector<T> {
        self.q.iter().map(|c| c.eval(t)).collect()
    }

    /// Right-hand side `A(t)·x + q(t)`.
    pub fn eval_f(&self, t: T, x: &Vector<T>) -> Vector<T> {
        assert_eq!(x.len(), self.n, "state dimension mismatch");
        let q = self.eval_q(t);
        (0..self.n)
            .map(|i| {
                let row = &self.a[i * self.n..(i + 1) * self.n];
                row.iter().zip(x.iter()).fold(q[i], |acc, (a, &xj)| acc + a.eval(t) * xj)
            })
            .collect()
    }

    pub fn exact(&self) -> Option<ExactSolution<'_, T>> {
        self.exact.as_ref().map(|e| ExactSolution { components: e })
    }

    pub fn exact_exprs(&self) -> Option<&[CoeffExpr<T>]> {
        self.exact.as_deref()
    }
}

/// Known closed-form solution `x*(t)` with its term-wise analytic derivative.
#[derive(Debug, Clone, Copy)]
pub struct ExactSolution<'a, T> {
    components: &'a [CoeffExpr<T>],
}

impl<T: Scalar> ExactSolution<'_, T> {
    pub fn value(&self, t: T) -> Vector<T> {
        self.components.iter().map(|e| e.eval(t)).collect()
    }

    pub fn derivative(&self, t: T) -> Vector<T> {
        self.components.iter().map(|e| e.derivative().eval(t)).collect()
    }
}

/// Forcing `q = x*' − A·x*` that makes `exact` the solution.
///
/// Entries are symbolic when every product `aᵢⱼ·x*ⱼ` stays in the term
/// language. Otherwise the row is evaluated directly from the closed forms
/// if `allow_fallback`, and rejected if not.
pub fn manufacture_q<T: Scalar>(
    a: &[CoeffExpr<T>],
    exact: &[CoeffExpr<T>],
    allow_fallback: bool,
) -> Result<Vec<Coefficient<T>>, ModelError> {
    let n = exact.len();
    assert_eq!(a.len(), n * n, "state matrix must be n×n");
    let mut q = Vec::with_capacity(n);
    for i in 0..n {
        let row = &a[i * n..(i + 1) * n];
        let mut sym = Some(exact[i].derivative());
        let mut failed_col = None;
        for (j, (aij, xj)) in row.iter().zip(exact).enumerate() {
            let Some(acc) = sym.as_ref() else { break };
            match aij.product(xj) {
                Some(prod) => sym = Some(acc.add(&prod.neg())),
                None => {
                    failed_col = Some(j);
                    sym = None;
                }
            }
        }
        match (sym, failed_col) {
            (Some(e), _) => q.push(Coefficient::Expr(e)),
            (None, Some(col)) if !allow_fallback => return Err(ModelError::UnrepresentableProduct { row: i, col }),
            (None, _) => q.push(Coefficient::Manufactured {
                row: i,
                a_row: row.to_vec(),
                exact: exact.to_vec(),
                exact_deriv: exact[i].derivative(),
            }),
        }
    }
    Ok(q)
}

/// Parses the line-oriented problem file format.
///
/// ```text
/// dim 2
/// interval 0 6
/// x0 0 0
/// A 1 1 = -1
/// A 2 2 = 2
/// q 1 = ...
/// exact 1 = cos(3.141592653589793*t) - 1
/// ```
///
/// Indices are 1-based and unlisted entries are zero. When `exact` is given
/// and no `q` line appears, the forcing is manufactured from the exact solution.
pub fn parse_problem<T: Scalar>(name: &str, src: &str) -> Result<LinearOdeProblem<T>, ModelError> {
    let mut dim: Option<usize> = None;
    let mut interval: Option<(T, T)> = None;
    let mut x0: Option<Vec<T>> = None;
    let mut a_lines: Vec<(usize, usize, usize, CoeffExpr<T>)> = Vec::new();
    let mut q_lines: Vec<(usize, usize, CoeffExpr<T>)> = Vec::new();
    let mut exact_lines: Vec<(usize, usize, CoeffExpr<T>)> = Vec::new();

    for (idx, raw) in src.lines().enumerate() {
        let line_no = idx + 1;
        let syntax = |message: String| ModelError::Syntax { line: line_no, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (head, rhs) = match content.split_once('=') {
            Some((h, r)) => (h.trim(), Some(r)),
            None => (content, None),
        };
        let mut words = head.split_whitespace();
        let keyword = words.next().unwrap_or_default();
        let args: Vec<&str> = words.collect();
        let parse_num = |s: &str| -> Result<T, ModelError> {
            s.replace('\u{2212}', "-")
                .parse::<T>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| syntax(format!("invalid number '{s}'")))
        };
        let parse_index = |s: &str| -> Result<usize, ModelError> {
            match s.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(k - 1),
                _ => Err(syntax(format!("invalid 1-based index '{s}'"))),
            }
        };
        let parse_rhs = |r: Option<&str>| -> Result<CoeffExpr<T>, ModelError> {
            let r = r.ok_or_else(|| syntax(format!("'{keyword}' needs '= <expr>'")))?;
            let lead = raw.len() - raw.trim_start().len();
            let offset = raw.find('=').map(|e| e + 1).unwrap_or(lead);
            parse_expr(r).map_err(|mut e| {
                e.offset += offset;
                ModelError::Parse { line: line_no, source: e }
            })
        };

        match keyword {
            "dim" => {
                let [n] = args.as_slice() else { return Err(syntax("expected 'dim n'".into())) };
                let n: usize = n.parse().map_err(|_| syntax(format!("invalid dimension '{n}'")))?;
                if n == 0 {
                    return Err(syntax("dimension must be at least 1".into()));
                }
                dim = Some(n);
            }
            "interval" => {
                let [a, b] = args.as_slice() else { return Err(syntax("expected 'interval t0 tm'".into())) };
                interval = Some((parse_num(a)?, parse_num(b)?));
            }
            "x0" => {
                x0 = Some(args.iter().map(|s| parse_num(s)).collect::<Result<_, _>>()?);
            }
            "A" => {
                let [i, j] = args.as_slice() else { return Err(syntax("expected 'A i j = <expr>'".into())) };
                a_lines.push((line_no, parse_index(i)?, parse_index(j)?, parse_rhs(rhs)?));
            }
            "q" | "exact" => {
                let [i] = args.as_slice() else { return Err(syntax(format!("expected '{keyword} i = <expr>'"))) };
                let entry = (line_no, parse_index(i)?, parse_rhs(rhs)?);
                if keyword == "q" {
                    q_lines.push(entry);
                } else {
                    exact_lines.push(entry);
                }
            }
            other => return Err(syntax(format!("unknown section '{other}'"))),
        }
    }

    let n = dim.ok_or_else(|| ModelError::Invalid("missing 'dim' line".into()))?;
    let interval = interval.ok_or_else(|| ModelError::Invalid("missing 'interval' line".into()))?;
    let out_of_range = |line: usize| ModelError::Syntax { line, message: format!("index out of range for dim {n}") };

    let mut a = vec![CoeffExpr::zero(); n * n];
    for (line, i, j, e) in a_lines {
        if i >= n || j >= n {
            return Err(out_of_range(line));
        }
        a[i * n + j] = e;
    }
    let fill = |lines: Vec<(usize, usize, CoeffExpr<T>)>| -> Result<Vec<CoeffExpr<T>>, ModelError> {
        let mut v = vec![CoeffExpr::zero(); n];
        for (line, i, e) in lines {
            if i >= n {
                return Err(out_of_range(line));
            }
            v[i] = e;
        }
        Ok(v)
    };
    let has_q = !q_lines.is_empty();
    let q = fill(q_lines)?;
    let exact = if exact_lines.is_empty() { None } else { Some(fill(exact_lines)?) };

    let x0 = match x0 {
        Some(v) if v.len() != n => {
            return Err(ModelError::Invalid(format!("x0 has {} entries, dim is {n}", v.len())));
        }
        Some(v) => Vector::from_vec(v),
        None => match &exact {
            Some(ex) => ex.iter().map(|e| e.eval(interval.0)).collect(),
            None => return Err(ModelError::Invalid("missing 'x0' line".into())),
        },
    };

    let q = match (&exact, has_q) {
        (Some(ex), false) => manufacture_q(&a, ex, true)?,
        _ => q.into_iter().map(Coefficient::Expr).collect(),
    };
    LinearOdeProblem::new(name, a, q, x0, interval, exact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn e(s: &str) -> CoeffExpr<f64> {
        parse_expr(s).unwrap()
    }

    #[test]
    fn manufactured_diagonal_matches_hand_derivation() {
        let a = vec![e("-1"), e("0"), e("0"), e("2")];
        let exact = vec![e(&format!("cos({PI}*t) - 1")), e(&format!("sin({PI}*t)"))];
        let q = manufacture_q(&a, &exact, false).unwrap();
        for k in 0..=100 {
            let t = 0.06 * k as f64;
            let q1 = -PI * (PI * t).sin() + (PI * t).cos() - 1.0;
            let q2 = PI * (PI * t).cos() - 2.0 * (PI * t).sin();
            assert!((q[0].eval(t) - q1).abs() < 1e-13);
            assert!((q[1].eval(t) - q2).abs() < 1e-13);
        }
        assert!(q.iter().all(|c| c.as_expr().is_some()));
    }

    #[test]
    fn manufactured_trivial_cases() {
        let q = manufacture_q(&[CoeffExpr::zero()], &[e("3.5")], false).unwrap();
        assert_eq!(q[0].eval(1.7), 0.0);
        let q = manufacture_q(&[e("1")], &[e("t")], false).unwrap();
        for t in [0.0, 0.5, 2.0] {
            assert!((q[0].eval(t) - (1.0 - t)).abs() < 1e-15);
        }
    }

    #[test]
    fn unrepresentable_product_needs_fallback() {
        let a = vec![e("t^2")];
        let exact = vec![e("sin(t)")];
        assert!(matches!(
            manufacture_q(&a, &exact, false),
            Err(ModelError::UnrepresentableProduct { row: 0, col: 0 })
        ));
        let q = manufacture_q(&a, &exact, true).unwrap();
        let t = 0.4_f64;
        assert!((q[0].eval(t) - (t.cos() - t * t * t.sin())).abs() < 1e-15);
    }

    #[test]
    fn eval_f_is_linear_in_state() {
        let a = vec![e("1 + sin(t)"), e("2*t"), e("-3"), e("cos(2*t)")];
        let exact = vec![e("sin(t)"), e("t^2")];
        let p = LinearOdeProblem::manufactured("lin", a, exact, (0.0, 1.0), true).unwrap();
        let x = Vector::from_vec(vec![0.3, -1.2]);
        let y = Vector::from_vec(vec![2.0, 0.7]);
        let (al, be) = (1.7, -0.4);
        for t in [0.0, 0.33, 0.9] {
            let q = p.eval_q(t);
            let lhs = &p.eval_f(t, &x.scale(al).add_scaled(be, &y)) - &q;
            let rhs = (&p.eval_f(t, &x) - &q).scale(al).add_scaled(be, &(&p.eval_f(t, &y) - &q));
            assert!((&lhs - &rhs).inf_norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_problems() {
        let one = || vec![CoeffExpr::constant(1.0)];
        let q = || vec![Coefficient::Expr(CoeffExpr::zero())];
        assert!(LinearOdeProblem::new("x", one(), q(), Vector::from_vec(vec![1.0]), (1.0, 1.0), None).is_err());
        assert!(LinearOdeProblem::new("x", vec![], q(), Vector::from_vec(vec![1.0]), (0.0, 1.0), None).is_err());
        assert!(matches!(
            LinearOdeProblem::new("x", one(), q(), Vector::from_vec(vec![1.0]), (0.0, 1.0), Some(vec![e("2")])),
            Err(ModelError::InconsistentInitialValue { .. })
        ));
    }

    #[test]
    fn parses_problem_file() {
        let src = "\
# time-invariant example
dim 2
interval 0 6
x0 0 0
A 1 1 = -1
A 2 2 = 2
exact 1 = cos(3.141592653589793*t) - 1
exact 2 = sin(3.141592653589793*t)
";
        let p: LinearOdeProblem<f64> = parse_problem("inv", src).unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.eval_a(3.0), Matrix::from_rows(&[[-1.0, 0.0], [0.0, 2.0]]));
        let q0 = p.eval_q(0.0);
        assert!(q0[0].abs() < 1e-15 && (q0[1] - PI).abs() < 1e-15);
        assert!(p.exact().is_some());
        assert!(p.is_time_invariant());
    }

    #[test]
    fn problem_file_errors_carry_line_numbers() {
        let err = parse_problem::<f64>("x", "dim 1\ninterval 0 1\nx0 1\nA 1 1 = 2 *\n").unwrap_err();
        match err {
            ModelError::Parse { line, source } => {
                assert_eq!(line, 4);
                assert_eq!(source.offset, 11);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_problem::<f64>("x", "dim 1\ninterval 0 1\nx0 1\nA 2 1 = 2\n"),
            Err(ModelError::Syntax { line: 4, .. })
        ));
        assert!(matches!(parse_problem::<f64>("x", "dim 1\nx0 1\n"), Err(ModelError::Invalid(_))));
        assert!(matches!(
            parse_problem::<f64>("x", "dim 1\ninterval 0 1\nbogus 3\n"),
            Err(ModelError::Syntax { line: 3, .. })
        ));
    }

    #[test]
    fn explicit_q_lines_are_kept() {
        let src = "dim 1\ninterval 0 2\nx0 1\nA 1 1 = 1\nq 1 = 0.5*t\n";
        let p: LinearOdeProblem<f64> = parse_problem("x", src).unwrap();
        let f = p.eval_f(2.0, &Vector::from_vec(vec![3.0]));
        assert_eq!(f[0], 4.0);
        assert!(p.exact().is_none());
    }
}
