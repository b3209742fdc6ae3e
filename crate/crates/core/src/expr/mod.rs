//! Minimal computer-algebra kernel: immutable symbolic trees over exact
//! rationals, symbols, jet derivatives and a small set of special functions.
//!
//! Every public constructor and operation returns expressions in canonical
//! form: rationals in lowest terms, sums and products flattened and sorted,
//! and the whole tree ring-normalized (expanded over a common denominator)
//! together with a fixed rewrite list (`exp(a)*exp(b) -> exp(a+b)`,
//! `ln(exp(x)) -> x`, `W(z)*e^W(z) -> z`, sign normalization of odd/even
//! functions). Two canonical expressions are mathematically equal as ring
//! elements iff they are structurally equal, which is what the zero test
//! relies on.

mod canon;
mod calculus;
mod collect;
mod eval;
mod parse;
mod print;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{BigInt, BigRational, FromPrimitive, One, Zero};
use thiserror::Error;

pub use collect::Monomials;
pub use eval::{eval_with_magnitude, sample_coord};
pub use parse::parse;

/// Exact rational scalar used throughout the kernel.
pub type Q = BigRational;

/// Builds a `Q` from an integer.
pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Builds a `Q` from a numerator/denominator pair.
pub fn q_ratio(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// A jet coordinate: a dependent variable differentiated with respect to a
/// sorted multi-index of independent variables (`u_tx == u_xt`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JetVar {
    pub dep: String,
    /// Sorted list of independent-variable names; length = derivative order.
    pub index: Vec<String>,
}

impl JetVar {
    pub fn new(dep: &str, index: &[&str]) -> Self {
        let mut idx: Vec<String> = index.iter().map(|s| s.to_string()).collect();
        idx.sort();
        JetVar { dep: dep.to_string(), index: idx }
    }

    pub fn order(&self) -> usize {
        self.index.len()
    }

    /// The jet obtained by one more derivative with respect to `var`.
    pub fn extend(&self, var: &str) -> JetVar {
        let mut idx = self.index.clone();
        idx.push(var.to_string());
        idx.sort();
        JetVar { dep: self.dep.clone(), index: idx }
    }
}

impl fmt::Display for JetVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::fmt_jet(self, f)
    }
}

/// Named special functions understood by the kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Exp,
    Ln,
    Erf,
    LambertW,
    Sqrt,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Erf => "erf",
            Func::LambertW => "lambertW",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        match name {
            "exp" => Some(Func::Exp),
            "ln" => Some(Func::Ln),
            "erf" => Some(Func::Erf),
            "lambertW" => Some(Func::LambertW),
            "sqrt" => Some(Func::Sqrt),
            "abs" => Some(Func::Abs),
            _ => None,
        }
    }
}

/// Immutable symbolic expression tree.
///
/// Values obtained from [`parse`], the arithmetic operators or any kernel
/// operation are canonical. The variants are public so pattern matching is
/// possible; code that builds trees by hand should pass them through
/// [`Expr::canon`] before relying on structural equality.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Rational(Q),
    Symbol(String),
    Jet(JetVar),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Power(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// A coordinate that may carry a binding: a plain symbol or a jet variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Coord {
    Sym(String),
    Jet(JetVar),
}

impl Coord {
    pub fn sym(name: &str) -> Coord {
        Coord::Sym(name.to_string())
    }

    /// Parses a coordinate from text, accepting jet shorthand (`u_xx`).
    pub fn parse(text: &str) -> Result<Coord, ParseError> {
        match parse(text)? {
            Expr::Symbol(s) => Ok(Coord::Sym(s)),
            Expr::Jet(j) => Ok(Coord::Jet(j)),
            _ => Err(ParseError { offset: 0, kind: ParseErrorKind::NotACoordinate }),
        }
    }

    pub fn to_expr(&self) -> Expr {
        match self {
            Coord::Sym(s) => Expr::Symbol(s.clone()),
            Coord::Jet(j) => Expr::Jet(j.clone()),
        }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coord::Sym(s) => write!(f, "{s}"),
            Coord::Jet(j) => write!(f, "{j}"),
        }
    }
}

/// A value bound to a coordinate: a symbolic replacement or a float.
#[derive(Clone, Debug)]
pub enum Bound {
    Expr(Expr),
    Num(f64),
}

/// Simultaneous substitution / evaluation environment.
///
/// Keys are unique by construction (map). Numeric bindings must cover every
/// free coordinate when the binding is used for evaluation.
#[derive(Clone, Debug, Default)]
pub struct Binding {
    map: BTreeMap<Coord, Bound>,
}

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, coord: &str, value: Expr) -> Self {
        let c = Coord::parse(coord).expect("binding coordinate");
        self.map.insert(c, Bound::Expr(value));
        self
    }

    pub fn set_num(mut self, coord: &str, value: f64) -> Self {
        let c = Coord::parse(coord).expect("binding coordinate");
        self.map.insert(c, Bound::Num(value));
        self
    }

    pub fn insert(&mut self, coord: Coord, value: Bound) {
        self.map.insert(coord, value);
    }

    pub fn get(&self, coord: &Coord) -> Option<&Bound> {
        self.map.get(coord)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Coord, &Bound)> {
        self.map.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Numeric view of the binding (expression entries are skipped).
    pub fn numeric(&self) -> BTreeMap<Coord, f64> {
        self.map
            .iter()
            .filter_map(|(c, b)| match b {
                Bound::Num(v) => Some((c.clone(), *v)),
                Bound::Expr(_) => None,
            })
            .collect()
    }
}

/// Parse error with the byte offset of the offending token.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("syntax error at offset {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character")]
    UnexpectedChar,
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("expected `{0}`")]
    Expected(char),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("malformed Diff(...) form")]
    BadDiff,
    #[error("number too large")]
    BadNumber,
    #[error("not a coordinate")]
    NotACoordinate,
}

/// Evaluation error.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Error from polynomial coefficient extraction.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum CollectError {
    #[error("expression is not polynomial in `{0}`")]
    NonPolynomial(String),
}

/// Outcome of the zero test.
#[derive(Clone, Debug, PartialEq)]
pub enum ZeroVerdict {
    /// Ring normalization yields the empty sum.
    SymbolicallyZero,
    /// Not symbolically zero, but numerically below threshold at every
    /// sampled point.
    ProbablyZero { max_abs: f64 },
    NonZero { witness_abs: f64 },
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Rational(q_int(n))
    }

    pub fn ratio(num: i64, den: i64) -> Expr {
        Expr::Rational(q_ratio(num, den))
    }

    pub fn sym(name: &str) -> Expr {
        Expr::Symbol(name.to_string())
    }

    pub fn jet(dep: &str, index: &[&str]) -> Expr {
        Expr::Jet(JetVar::new(dep, index))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg)).canon()
    }

    pub fn pow(self, exponent: Expr) -> Expr {
        Expr::Power(Box::new(self), Box::new(exponent)).canon()
    }

    pub fn pow_int(self, k: i64) -> Expr {
        self.pow(Expr::int(k))
    }

    pub fn zero() -> Expr {
        Expr::Rational(Q::zero())
    }

    pub fn one() -> Expr {
        Expr::Rational(Q::one())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Rational(r) if r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Rational(r) if r.is_one())
    }

    pub fn as_rational(&self) -> Option<&Q> {
        match self {
            Expr::Rational(r) => Some(r),
            _ => None,
        }
    }

    /// Ring-normalizes the tree into canonical form.
    pub fn canon(&self) -> Expr {
        canon::canon(self)
    }

    /// Exact symbolic partial derivative with respect to a plain symbol.
    /// Jet variables are treated as independent coordinates.
    pub fn differentiate(&self, var: &str) -> Expr {
        calculus::differentiate_coord(self, &Coord::sym(var))
    }

    /// Partial derivative with respect to an arbitrary coordinate.
    pub fn differentiate_coord(&self, coord: &Coord) -> Expr {
        calculus::differentiate_coord(self, coord)
    }

    /// Simultaneous replacement of bound coordinates, then
    /// re-canonicalization. Numeric bindings are inserted as the exact
    /// rational value of the float.
    pub fn substitute(&self, binding: &Binding) -> Expr {
        calculus::substitute(self, binding)
    }

    /// Writes the expression as a sum of monomials in `vars` with
    /// coefficients free of `vars`.
    pub fn expand_collect(&self, vars: &[Coord]) -> Result<Monomials, CollectError> {
        collect::expand_collect(self, vars)
    }

    /// Double-precision evaluation under the binding.
    pub fn eval(&self, binding: &Binding) -> Result<f64, EvalError> {
        eval::eval(self, binding)
    }

    /// All free coordinates (symbols and jet variables) of the tree,
    /// including those inside function arguments.
    pub fn free_coords(&self) -> BTreeSet<Coord> {
        let mut out = BTreeSet::new();
        self.collect_coords(&mut out);
        out
    }

    fn collect_coords(&self, out: &mut BTreeSet<Coord>) {
        match self {
            Expr::Rational(_) => {}
            Expr::Symbol(s) => {
                out.insert(Coord::Sym(s.clone()));
            }
            Expr::Jet(j) => {
                out.insert(Coord::Jet(j.clone()));
            }
            Expr::Sum(ch) | Expr::Product(ch) => {
                for c in ch {
                    c.collect_coords(out);
                }
            }
            Expr::Power(b, e) => {
                b.collect_coords(out);
                e.collect_coords(out);
            }
            Expr::Call(_, a) => a.collect_coords(out),
        }
    }

    /// Highest jet order appearing anywhere in the tree (0 if none).
    pub fn max_jet_order(&self) -> usize {
        self.free_coords()
            .iter()
            .filter_map(|c| match c {
                Coord::Jet(j) => Some(j.order()),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Zero test: symbolic first, then a randomized numeric fallback at 20
    /// points with magnitude-scaled tolerance.
    pub fn zero_test(&self, seed: u64) -> ZeroVerdict {
        let c = self.canon();
        if c.is_zero() {
            return ZeroVerdict::SymbolicallyZero;
        }
        eval::numeric_zero_probe(&c, seed)
    }

    /// Scales the expression by an exact rational.
    pub fn scale(&self, q: &Q) -> Expr {
        Expr::Product(vec![Expr::Rational(q.clone()), self.clone()]).canon()
    }

    /// Leading rational coefficient of the canonical form (coefficient of
    /// the first rendered term; 1 for a bare atom, 0 for zero).
    pub fn leading_coeff(&self) -> Q {
        fn lead(e: &Expr) -> Q {
            match e {
                Expr::Rational(r) => r.clone(),
                Expr::Sum(ch) => ch.first().map(lead).unwrap_or_else(Q::zero),
                Expr::Product(ch) => match ch.first() {
                    Some(Expr::Rational(r)) => r.clone(),
                    _ => Q::one(),
                },
                _ => Q::one(),
            }
        }
        lead(&self.canon())
    }

    /// Divides by the leading coefficient, so scalar multiples of the same
    /// expression compare equal.
    pub fn monic(&self) -> Expr {
        let c = self.canon();
        let lead = c.leading_coeff();
        if lead.is_zero() || lead.is_one() {
            c
        } else {
            c.scale(&(Q::one() / lead))
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::fmt_expr(self, f)
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Sum(vec![self, rhs]).canon()
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sum(vec![self, -rhs]).canon()
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Product(vec![self, rhs]).canon()
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        let inv = Expr::Power(Box::new(rhs), Box::new(Expr::int(-1)));
        Expr::Product(vec![self, inv]).canon()
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Product(vec![Expr::int(-1), self]).canon()
    }
}

/// Convenience: exact rational from a float (every finite f64 is rational).
pub fn q_from_f64(v: f64) -> Q {
    Q::from_f64(v).expect("finite float")
}

#[cfg(test)]
mod tests;
