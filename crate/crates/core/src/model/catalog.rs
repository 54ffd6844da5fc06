//! Built-in problems: the scalar exponential and the three worked systems
//! (time-invariant 2×2, time-varying stable 2×2, and the 4×4 suspension).

use super::expr::{CoeffExpr, Term};
use super::problem::{Coefficient, LinearOdeProblem, ModelError};
use crate::linalg::Vector;
use crate::scalar::Scalar;

pub const CATALOG: &[(&str, &str)] = &[
    ("example1", "x' = x, x(0) = 1 on [0, 2]; exact solution e^t"),
    ("invariant2x2", "A = diag(-1, 2), manufactured x* = (cos πt - 1, sin πt) on [0, 6]"),
    ("variant-stable", "A(t) = [[-6 + 0.2 sin 2πt, 0], [1, -5 - 0.1 sin πt]], same x* on [0, 6]"),
    ("suspension", "4x4 adjustable-damping suspension, x* = (0.1 sin πt, 0.1π cos πt, 0.01 sin πt, 0.01π cos πt) on [0, 0.5]"),
];

pub fn catalog_names() -> impl Iterator<Item = &'static str> {
    CATALOG.iter().map(|(n, _)| *n)
}

pub fn catalog<T: Scalar>(name: &str) -> Result<LinearOdeProblem<T>, ModelError> {
    match name {
        "example1" => example1(),
        "invariant2x2" => invariant2x2(),
        "variant-stable" => variant_stable(),
        "suspension" => suspension(),
        other => Err(ModelError::UnknownProblem(other.to_string())),
    }
}

fn k<T: Scalar>(c: f64) -> CoeffExpr<T> {
    if c == 0.0 {
        CoeffExpr::zero()
    } else {
        CoeffExpr::constant(T::lit(c))
    }
}

fn sin<T: Scalar>(c: T, w: T) -> Term<T> {
    Term::Sin { c, w, phase: T::zero() }
}

fn cos<T: Scalar>(c: T, w: T) -> Term<T> {
    Term::Cos { c, w, phase: T::zero() }
}

/// `(cos πt − 1, sin πt)`
fn trig_pair<T: Scalar>() -> Vec<CoeffExpr<T>> {
    let pi = T::PI();
    vec![
        CoeffExpr::from_terms(vec![cos(T::one(), pi), Term::constant(-T::one())]),
        CoeffExpr::from_terms(vec![sin(T::one(), pi)]),
    ]
}

fn example1<T: Scalar>() -> Result<LinearOdeProblem<T>, ModelError> {
    let exact = CoeffExpr::from_terms(vec![Term::Exp { c: T::one(), w: T::one(), phase: T::zero() }]);
    LinearOdeProblem::new(
        "example1",
        vec![k(1.0)],
        vec![Coefficient::Expr(CoeffExpr::zero())],
        Vector::from_vec(vec![T::one()]),
        (T::zero(), T::lit(2.0)),
        Some(vec![exact]),
    )
}

fn invariant2x2<T: Scalar>() -> Result<LinearOdeProblem<T>, ModelError> {
    let a = vec![k(-1.0), k(0.0), k(0.0), k(2.0)];
    LinearOdeProblem::manufactured("invariant2x2", a, trig_pair(), (T::zero(), T::lit(6.0)), false)
}

fn variant_stable<T: Scalar>() -> Result<LinearOdeProblem<T>, ModelError> {
    let pi = T::PI();
    let a11 = CoeffExpr::from_terms(vec![Term::constant(T::lit(-6.0)), sin(T::lit(0.2), pi + pi)]);
    let a22 = CoeffExpr::from_terms(vec![Term::constant(T::lit(-5.0)), sin(T::lit(-0.1), pi)]);
    let a = vec![a11, k(0.0), k(1.0), a22];
    LinearOdeProblem::manufactured("variant-stable", a, trig_pair(), (T::zero(), T::lit(6.0)), false)
}

/// The linearized state matrix, including the
/// `π²t²` damping terms.
fn suspension<T: Scalar>() -> Result<LinearOdeProblem<T>, ModelError> {
    let pi = T::PI();
    let pi2 = pi * pi;
    let c = |v: f64| Term::constant(T::lit(v));
    let t2 = |v: T| Term::Poly { c: v, p: 2 };
    let e = CoeffExpr::from_terms;

    #[rustfmt::skip]
    let a = vec![
        k(0.0), k(1.0), k(0.0), k(0.0),
        k(3.0), e(vec![c(0.8), t2(-pi2 / T::lit(250.0))]), k(-3.0), e(vec![t2(pi2 / T::lit(250.0)), c(-0.8)]),
        k(0.0), k(0.0), k(0.0), k(1.0),
        e(vec![t2(pi2 / T::lit(50.0)), c(-4.0)]), k(15.0), k(35.0), e(vec![c(4.0), t2(-pi2 / T::lit(50.0))]),
    ];
    let exact = vec![
        e(vec![sin(T::lit(0.1), pi)]),
        e(vec![cos(T::lit(0.1) * pi, pi)]),
        e(vec![sin(T::lit(0.01), pi)]),
        e(vec![cos(T::lit(0.01) * pi, pi)]),
    ];
    LinearOdeProblem::manufactured("suspension", a, exact, (T::zero(), T::lit(0.5)), true)
}
