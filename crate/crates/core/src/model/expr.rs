//! Time-dependent coefficient expressions.
//!
//! A [`CoeffExpr`] is a finite sum of terms `c·tᵖ`, `c·sin(ω t + φ)`,
//! `c·cos(ω t + φ)` and `c·exp(ω t + φ)`. The family is closed under
//! differentiation, and products stay inside it except for polynomial
//! times transcendental and exponential times trigonometric.

use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Term<T> {
    /// `c·tᵖ`
    Poly { c: T, p: u32 },
    /// `c·sin(w·t + phase)`
    Sin { c: T, w: T, phase: T },
    /// `c·cos(w·t + phase)`
    Cos { c: T, w: T, phase: T },
    /// `c·exp(w·t + phase)`
    Exp { c: T, w: T, phase: T },
}

impl<T: Scalar> Term<T> {
    pub fn constant(c: T) -> Self {
        Term::Poly { c, p: 0 }
    }

    pub fn coeff(&self) -> T {
        match *self {
            Term::Poly { c, .. } | Term::Sin { c, .. } | Term::Cos { c, .. } | Term::Exp { c, .. } => c,
        }
    }

    pub fn eval(&self, t: T) -> T {
        match *self {
            Term::Poly { c, p } => c * t.powi(p as i32),
            Term::Sin { c, w, phase } => c * (w * t + phase).sin(),
            Term::Cos { c, w, phase } => c * (w * t + phase).cos(),
            Term::Exp { c, w, phase } => c * (w * t + phase).exp(),
        }
    }

    pub fn derivative(&self) -> Option<Self> {
        match *self {
            Term::Poly { p: 0, .. } => None,
            Term::Poly { c, p } => Some(Term::Poly { c: c * T::from_usize_lossy(p as usize), p: p - 1 }),
            Term::Sin { c, w, phase } => Some(Term::Cos { c: c * w, w, phase }),
            Term::Cos { c, w, phase } => Some(Term::Sin { c: -(c * w), w, phase }),
            Term::Exp { c, w, phase } => Some(Term::Exp { c: c * w, w, phase }),
        }
    }

    fn scaled(&self, s: T) -> Self {
        match *self {
            Term::Poly { c, p } => Term::Poly { c: c * s, p },
            Term::Sin { c, w, phase } => Term::Sin { c: c * s, w, phase },
            Term::Cos { c, w, phase } => Term::Cos { c: c * s, w, phase },
            Term::Exp { c, w, phase } => Term::Exp { c: c * s, w, phase },
        }
    }

    /// Product of two terms, or `None` when it leaves the term family.
    pub fn product(&self, other: &Self) -> Option<Vec<Self>> {
        use Term::*;
        let half = T::lit(0.5);
        Some(match (*self, *other) {
            (Poly { c: a, p: pa }, Poly { c: b, p: pb }) => vec![Poly { c: a * b, p: pa + pb }],
            (Poly { c, p: 0 }, t) | (t, Poly { c, p: 0 }) => vec![t.scaled(c)],
            (Poly { .. }, _) | (_, Poly { .. }) => return None,
            (Exp { c: a, w: wa, phase: pa }, Exp { c: b, w: wb, phase: pb }) => {
                vec![Exp { c: a * b, w: wa + wb, phase: pa + pb }]
            }
            (Exp { .. }, _) | (_, Exp { .. }) => return None,
            // sin x sin y = ½[cos(x−y) − cos(x+y)]
            (Sin { c: a, w: wa, phase: pa }, Sin { c: b, w: wb, phase: pb }) => vec![
                Cos { c: half * a * b, w: wa - wb, phase: pa - pb },
                Cos { c: -(half * a * b), w: wa + wb, phase: pa + pb },
            ],
            // cos x cos y = ½[cos(x−y) + cos(x+y)]
            (Cos { c: a, w: wa, phase: pa }, Cos { c: b, w: wb, phase: pb }) => vec![
                Cos { c: half * a * b, w: wa - wb, phase: pa - pb },
                Cos { c: half * a * b, w: wa + wb, phase: pa + pb },
            ],
            // sin x cos y = ½[sin(x+y) + sin(x−y)]
            (Sin { c: a, w: wa, phase: pa }, Cos { c: b, w: wb, phase: pb })
            | (Cos { c: b, w: wb, phase: pb }, Sin { c: a, w: wa, phase: pa }) => vec![
                Sin { c: half * a * b, w: wa + wb, phase: pa + pb },
                Sin { c: half * a * b, w: wa - wb, phase: pa - pb },
            ],
        })
    }
}

/// Sum of [`Term`]s; the empty sum is zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoeffExpr<T> {
    pub terms: Vec<Term<T>>,
}

impl<T: Scalar> CoeffExpr<T> {
    pub fn zero() -> Self {
        CoeffExpr { terms: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        CoeffExpr { terms: vec![Term::constant(c)] }
    }

    pub fn from_terms(terms: Vec<Term<T>>) -> Self {
        CoeffExpr { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeff() == T::zero())
    }

    /// True when no term depends on `t`.
    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| match *t {
            Term::Poly { p, c } => p == 0 || c == T::zero(),
            Term::Sin { c, w, .. } | Term::Cos { c, w, .. } | Term::Exp { c, w, .. } => {
                w == T::zero() || c == T::zero()
            }
        })
    }

    pub fn eval(&self, t: T) -> T {
        self.terms.iter().fold(T::zero(), |acc, term| acc + term.eval(t))
    }

    pub fn derivative(&self) -> Self {
        CoeffExpr { terms: self.terms.iter().filter_map(Term::derivative).collect() }
    }

    pub fn neg(&self) -> Self {
        CoeffExpr { terms: self.terms.iter().map(|t| t.scaled(-T::one())).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        CoeffExpr { terms }
    }

    /// Symbolic product, or `None` when some pair of terms has no closed form here.
    pub fn product(&self, other: &Self) -> Option<Self> {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                if a.coeff() == T::zero() || b.coeff() == T::zero() {
                    continue;
                }
                terms.extend(a.product(b)?);
            }
        }
        Some(CoeffExpr { terms })
    }
}

impl<T: Scalar> fmt::Display for CoeffExpr<T> {
    /// Renders in the problem-file grammar; re-parsing gives the same value.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, term) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            match *term {
                Term::Poly { c, p: 0 } => write!(f, "{c}")?,
                Term::Poly { c, p: 1 } => write!(f, "{c}*t")?,
                Term::Poly { c, p } => write!(f, "{c}*t^{p}")?,
                Term::Sin { c, w, phase } => write!(f, "{c}*sin({w}*t + {phase})")?,
                Term::Cos { c, w, phase } => write!(f, "{c}*cos({w}*t + {phase})")?,
                Term::Exp { c, w, phase } => write!(f, "{c}*exp({w}*t + {phase})")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at byte {offset}: expected {expected}")]
pub struct ParseError {
    pub offset: usize,
    pub expected: String,
}

/// Parses a coefficient expression.
///
/// ```text
/// expr    := ["+"|"-"] term (("+"|"-") term)*
/// term    := factor ("*" factor)*          at most one non-number factor
/// factor  := number | "t" ["^" int] | ("sin"|"cos"|"exp") "(" linear ")"
/// linear  := ["+"|"-"] lterm (("+"|"-") lterm)*
/// lterm   := number ("*" number)* ["*" "t"] | "t"
/// ```
///
/// `−` (U+2212) is accepted as a minus sign and `#` starts a comment.
pub fn parse_expr<T: Scalar>(src: &str) -> Result<CoeffExpr<T>, ParseError> {
    let mut p = Parser { src, pos: 0 };
    let expr = p.expr()?;
    p.skip_ws();
    if p.pos < src.len() {
        return Err(p.error("'+', '-', '*' or end of expression"));
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

enum Factor<T> {
    Number(T),
    Pow(u32),
    Func(FuncKind, T, T),
}

#[derive(Clone, Copy)]
enum FuncKind {
    Sin,
    Cos,
    Exp,
}

impl<'a> Parser<'a> {
    fn error(&self, expected: &str) -> ParseError {
        ParseError { offset: self.pos, expected: expected.to_string() }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        loop {
            let rest = self.rest();
            if rest.starts_with('#') {
                self.pos = self.src.len();
                return;
            }
            match rest.chars().next() {
                Some(c) if c.is_whitespace() => self.pos += c.len_utf8(),
                _ => return,
            }
        }
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    /// Consumes a sign operator, returning `Some(negative)`.
    fn sign(&mut self) -> Option<bool> {
        if self.eat("+") {
            Some(false)
        } else if self.eat("-") || self.eat("\u{2212}") {
            Some(true)
        } else {
            None
        }
    }

    fn number<T: Scalar>(&mut self) -> Option<Result<T, ParseError>> {
        self.skip_ws();
        let bytes = self.rest().as_bytes();
        let mut end = 0;
        let digits = |b: &[u8], mut i: usize| {
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            i
        };
        end = digits(bytes, end);
        if end < bytes.len() && bytes[end] == b'.' {
            end = digits(bytes, end + 1);
        }
        if end == 0 || (end == 1 && bytes[0] == b'.') {
            return None;
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut k = end + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            let after = digits(bytes, k);
            if after > k {
                end = after;
            }
        }
        let text = &self.rest()[..end];
        let start = self.pos;
        self.pos += end;
        Some(
            text.parse::<T>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or(ParseError { offset: start, expected: "finite decimal number".into() }),
        )
    }

    fn expr<T: Scalar>(&mut self) -> Result<CoeffExpr<T>, ParseError> {
        let mut terms = Vec::new();
        let mut neg = self.sign().unwrap_or(false);
        loop {
            let term = self.term::<T>()?;
            terms.push(if neg { term.scaled(-T::one()) } else { term });
            match self.sign() {
                Some(n) => neg = n,
                None => break,
            }
        }
        Ok(CoeffExpr { terms })
    }

    fn term<T: Scalar>(&mut self) -> Result<Term<T>, ParseError> {
        let mut coeff = T::one();
        let mut shape: Option<Factor<T>> = None;
        loop {
            // unary signs inside a term, as in "2*-3" or "+ -0.5*t"
            while let Some(n) = self.sign() {
                if n {
                    coeff = -coeff;
                }
            }
            let start = self.pos;
            match self.factor::<T>()? {
                Factor::Number(v) => coeff *= v,
                f => {
                    if shape.is_some() {
                        self.pos = start;
                        return Err(self.error("at most one of t, t^k, sin, cos, exp per term"));
                    }
                    shape = Some(f);
                }
            }
            if !self.eat("*") {
                break;
            }
        }
        Ok(match shape {
            None => Term::Poly { c: coeff, p: 0 },
            Some(Factor::Pow(p)) => Term::Poly { c: coeff, p },
            Some(Factor::Func(FuncKind::Sin, w, phase)) => Term::Sin { c: coeff, w, phase },
            Some(Factor::Func(FuncKind::Cos, w, phase)) => Term::Cos { c: coeff, w, phase },
            Some(Factor::Func(FuncKind::Exp, w, phase)) => Term::Exp { c: coeff, w, phase },
            Some(Factor::Number(_)) => unreachable!(),
        })
    }

    fn factor<T: Scalar>(&mut self) -> Result<Factor<T>, ParseError> {
        if let Some(n) = self.number::<T>() {
            return n.map(Factor::Number);
        }
        for (name, kind) in [("sin", FuncKind::Sin), ("cos", FuncKind::Cos), ("exp", FuncKind::Exp)] {
            if self.eat(name) {
                if !self.eat("(") {
                    return Err(self.error("'('"));
                }
                let (w, phase) = self.linear::<T>()?;
                if !self.eat(")") {
                    return Err(self.error("')'"));
                }
                return Ok(Factor::Func(kind, w, phase));
            }
        }
        if self.eat("t") {
            if self.eat("^") {
                self.skip_ws();
                let bytes = self.rest().as_bytes();
                let len = bytes.iter().take_while(|b| b.is_ascii_digit()).count();
                if len == 0 {
                    return Err(self.error("nonnegative integer exponent"));
                }
                let p = self.rest()[..len].parse::<u32>().map_err(|_| self.error("exponent below 2^32"))?;
                self.pos += len;
                return Ok(Factor::Pow(p));
            }
            return Ok(Factor::Pow(1));
        }
        Err(self.error("number, 't', 'sin', 'cos' or 'exp'"))
    }

    /// Linear function of t: returns (slope, intercept).
    fn linear<T: Scalar>(&mut self) -> Result<(T, T), ParseError> {
        let (mut w, mut phase) = (T::zero(), T::zero());
        let mut neg = self.sign().unwrap_or(false);
        loop {
            let mut c = if neg { -T::one() } else { T::one() };
            let mut has_t = false;
            loop {
                while let Some(n) = self.sign() {
                    if n {
                        c = -c;
                    }
                }
                if let Some(n) = self.number::<T>() {
                    c *= n?;
                } else if !has_t && self.eat("t") {
                    has_t = true;
                } else {
                    return Err(self.error("number or 't' in function argument"));
                }
                if !self.eat("*") {
                    break;
                }
            }
            if has_t {
                w += c;
            } else {
                phase += c;
            }
            match self.sign() {
                Some(n) => neg = n,
                None => break,
            }
        }
        Ok((w, phase))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn parses_stable_entry() {
        let e: CoeffExpr<f64> = parse_expr("−6 + 0.2*sin(6.283185307179586*t)").unwrap();
        assert_eq!(e.terms.len(), 2);
        assert_eq!(e.eval(0.0), -6.0);
        assert!((e.eval(0.25) - (-5.8)).abs() < 1e-15);
    }

    #[test]
    fn parses_constant() {
        let e: CoeffExpr<f64> = parse_expr("1").unwrap();
        assert_eq!(e, CoeffExpr::constant(1.0));
    }

    #[test]
    fn parses_chained_numeric_coefficients() {
        let e: CoeffExpr<f64> = parse_expr("0.1*3.141592653589793*cos(3.141592653589793*t)").unwrap();
        assert!((e.eval(0.0) - 0.1 * PI).abs() < 1e-16);
    }

    #[test]
    fn parses_powers_exp_and_phases() {
        let e: CoeffExpr<f64> = parse_expr("2*t^3 - t + exp(0.5*t) + cos(2*t - 1) # tail").unwrap();
        let t = 0.7_f64;
        let want = 2.0 * t * t * t - t + (0.5 * t).exp() + (2.0 * t - 1.0).cos();
        assert!((e.eval(t) - want).abs() < 1e-14);
        let e: CoeffExpr<f64> = parse_expr("sin(t)").unwrap();
        assert_eq!(e.terms, vec![Term::Sin { c: 1.0, w: 1.0, phase: 0.0 }]);
    }

    #[test]
    fn reports_offsets() {
        let err = parse_expr::<f64>("1 + * t").unwrap_err();
        assert_eq!(err.offset, 4);
        let err = parse_expr::<f64>("sin(2*t").unwrap_err();
        assert_eq!(err.offset, 7);
        assert!(err.expected.contains(')'));
        let err = parse_expr::<f64>("t*sin(t)").unwrap_err();
        assert_eq!(err.offset, 2);
        assert!(parse_expr::<f64>("").is_err());
        assert!(parse_expr::<f64>("2 3").is_err());
    }

    #[test]
    fn derivative_of_each_kind() {
        let e: CoeffExpr<f64> = parse_expr("3*t^2 + 2*sin(3*t + 1) + cos(t) + 4*exp(2*t) + 7").unwrap();
        let d = e.derivative();
        let t = 0.3_f64;
        let want = 6.0 * t + 6.0 * (3.0 * t + 1.0).cos() - t.sin() + 8.0 * (2.0 * t).exp();
        assert!((d.eval(t) - want).abs() < 1e-13);
    }

    #[test]
    fn products_via_trig_identities() {
        let a: CoeffExpr<f64> = parse_expr("2*sin(3*t + 0.1) - cos(0.5*t) + 4").unwrap();
        let b: CoeffExpr<f64> = parse_expr("cos(t) + 0.5*sin(2*t - 0.3) + 2*t^2").unwrap();
        assert!(a.product(&b).is_none());
        let b: CoeffExpr<f64> = parse_expr("cos(t) + 0.5*sin(2*t - 0.3) + 3").unwrap();
        let ab = a.product(&b).unwrap();
        for k in 0..50 {
            let t = -2.0 + 0.1 * k as f64;
            assert!((ab.eval(t) - a.eval(t) * b.eval(t)).abs() < 1e-13);
        }
        let e: CoeffExpr<f64> = parse_expr("exp(t)").unwrap();
        let s: CoeffExpr<f64> = parse_expr("sin(t)").unwrap();
        assert!(e.product(&s).is_none());
        assert!((e.product(&e).unwrap().eval(1.0) - 2f64.exp()).abs() < 1e-14);
    }

    fn arb_term() -> impl Strategy<Value = Term<f64>> {
        let c = -1e3f64..1e3;
        prop_oneof![
            (c.clone(), 0u32..6).prop_map(|(c, p)| Term::Poly { c, p }),
            (c.clone(), -20f64..20.0, -4f64..4.0).prop_map(|(c, w, phase)| Term::Sin { c, w, phase }),
            (c.clone(), -20f64..20.0, -4f64..4.0).prop_map(|(c, w, phase)| Term::Cos { c, w, phase }),
            (c, -2f64..2.0, -1f64..1.0).prop_map(|(c, w, phase)| Term::Exp { c, w, phase }),
        ]
    }

    proptest! {
        #[test]
        fn render_then_parse_preserves_values(
            terms in prop::collection::vec(arb_term(), 0..6),
            ts in prop::collection::vec(-3f64..3.0, 100),
        ) {
            let e = CoeffExpr::from_terms(terms);
            let back: CoeffExpr<f64> = parse_expr(&e.to_string()).unwrap();
            for t in ts {
                let (a, b) = (e.eval(t), back.eval(t));
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{} vs {} at {}", a, b, t);
            }
        }
    }
}
