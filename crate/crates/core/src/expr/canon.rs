//! Ring normalization.
//!
//! Expressions are rewritten internally as a quotient `num/den` of expanded
//! polynomials over multiplicative *atoms* (symbols, jet variables, function
//! calls, exponentials with collected arguments, symbolic powers and
//! fractional powers of sums). All cancellation happens in exact rational
//! polynomial arithmetic, so an expression is zero iff its numerator is the
//! empty sum.

use std::collections::BTreeMap;

use num::{BigInt, One, Signed, ToPrimitive, Zero};

use super::{Expr, Func, JetVar, Q};

/// Multiplicative base of a monomial factor.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Atom {
    Sym(String),
    Jet(JetVar),
    /// ln, erf, lambertW, abs with canonical argument.
    Call(Func, Expr),
    /// Exponential; the monomial exponent of this atom is always 1.
    Exp(Expr),
    /// base^expo with non-rational (or zero-base) exponent, both canonical.
    Pow(Expr, Expr),
    /// Sum or rational base carrying a fractional exponent in (0, 1).
    Opaque(Expr),
}

impl Atom {
    pub(crate) fn to_expr(&self) -> Expr {
        match self {
            Atom::Sym(s) => Expr::Symbol(s.clone()),
            Atom::Jet(j) => Expr::Jet(j.clone()),
            Atom::Call(f, a) => Expr::Call(*f, Box::new(a.clone())),
            Atom::Exp(a) => Expr::Call(Func::Exp, Box::new(a.clone())),
            Atom::Pow(b, e) => Expr::Power(Box::new(b.clone()), Box::new(e.clone())),
            Atom::Opaque(s) => s.clone(),
        }
    }
}

/// Product of atom powers; sorted, exponents nonzero.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub(crate) struct Monomial(pub(crate) Vec<(Atom, Q)>);

impl Monomial {
    fn one() -> Self {
        Monomial(Vec::new())
    }

    fn is_one(&self) -> bool {
        self.0.is_empty()
    }
}

/// Expanded polynomial: monomial -> nonzero rational coefficient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Poly(pub(crate) BTreeMap<Monomial, Q>);

impl Poly {
    pub(crate) fn zero() -> Self {
        Poly(BTreeMap::new())
    }

    pub(crate) fn one() -> Self {
        Poly::constant(Q::one())
    }

    pub(crate) fn constant(q: Q) -> Self {
        let mut m = BTreeMap::new();
        if !q.is_zero() {
            m.insert(Monomial::one(), q);
        }
        Poly(m)
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn is_one(&self) -> bool {
        self.0.len() == 1
            && self
                .0
                .get(&Monomial::one())
                .map(|c| c.is_one())
                .unwrap_or(false)
    }

    fn insert_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.0.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let s = o.get() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn scale(&self, q: &Q) -> Poly {
        if q.is_zero() {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|(m, c)| (m.clone(), c * q)).collect())
    }
}

/// Quotient of expanded polynomials.
///
/// Invariants after `fix`: `den` is monic with respect to its leading
/// monomial, has no common monomial content, and is either `1` or has at
/// least two terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct RatForm {
    pub(crate) num: Poly,
    pub(crate) den: Poly,
}

impl RatForm {
    pub(crate) fn zero() -> Self {
        RatForm { num: Poly::zero(), den: Poly::one() }
    }

    pub(crate) fn one() -> Self {
        RatForm { num: Poly::one(), den: Poly::one() }
    }

    pub(crate) fn from_q(q: Q) -> Self {
        RatForm { num: Poly::constant(q), den: Poly::one() }
    }

    fn from_atom(a: Atom) -> Self {
        let mut tb = TermBuilder::new();
        tb.push_atom(a, Q::one());
        tb.into_ratform()
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub(crate) fn as_rational(&self) -> Option<Q> {
        if !self.den.is_one() {
            return None;
        }
        if self.num.is_zero() {
            return Some(Q::zero());
        }
        if self.num.0.len() == 1 {
            if let Some(c) = self.num.0.get(&Monomial::one()) {
                return Some(c.clone());
            }
        }
        None
    }
}

fn q_floor_int(q: &Q) -> Option<BigInt> {
    Some(q.floor().to_integer())
}

fn q_pow_bigint(base: &Q, k: &BigInt) -> Option<Q> {
    let ki = k.to_i32()?;
    if base.is_zero() {
        return if ki > 0 { Some(Q::zero()) } else { None };
    }
    Some(num::pow::Pow::pow(base.clone(), ki))
}

/// Builds one monomial from pushed factors, applying the fixed fold rules.
struct TermBuilder {
    coeff: Q,
    atoms: BTreeMap<Atom, Q>,
    /// scaled exponential arguments, combined at finalize time
    exp_args: Vec<(Q, Expr)>,
    /// symbolic powers grouped by base: accumulated scaled exponents
    pow_parts: BTreeMap<Expr, Vec<(Q, Expr)>>,
    /// deferred multiplications `base^q` handled at RatForm level
    pending: Vec<(Expr, Q)>,
    is_zero: bool,
}

impl TermBuilder {
    fn new() -> Self {
        TermBuilder {
            coeff: Q::one(),
            atoms: BTreeMap::new(),
            exp_args: Vec::new(),
            pow_parts: BTreeMap::new(),
            pending: Vec::new(),
            is_zero: false,
        }
    }

    fn push_coeff(&mut self, q: &Q) {
        if q.is_zero() {
            self.is_zero = true;
        } else {
            self.coeff *= q;
        }
    }

    fn push_atom(&mut self, atom: Atom, exp: Q) {
        if exp.is_zero() || self.is_zero {
            return;
        }
        match atom {
            Atom::Exp(a) => self.exp_args.push((exp, a)),
            Atom::Pow(b, e) => self.pow_parts.entry(b).or_default().push((exp, e)),
            other => {
                let slot = self.atoms.entry(other).or_insert_with(Q::zero);
                *slot += exp;
            }
        }
    }

    fn push_monomial(&mut self, m: &Monomial, scale: &Q) {
        for (a, e) in &m.0 {
            self.push_atom(a.clone(), e * scale);
        }
    }

    /// Finalizes folds and returns the (coeff, monomial, pending) triple.
    fn finalize(mut self) -> Option<(Q, Monomial, Vec<(Expr, Q)>)> {
        if self.is_zero {
            return None;
        }

        // symbolic powers: combine exponents per base; rational results are
        // re-dispatched as pending multiplications
        let pow_parts = std::mem::take(&mut self.pow_parts);
        for (base, parts) in pow_parts {
            let combined = sum_scaled(&parts);
            if let Expr::Rational(q) = &combined {
                if !q.is_zero() {
                    self.pending.push((base, q.clone()));
                }
            } else {
                self.atoms.insert(Atom::Pow(base, combined), Q::one());
            }
        }

        // atom-level folds
        let atoms = std::mem::take(&mut self.atoms);
        for (atom, exp) in atoms {
            if exp.is_zero() {
                continue;
            }
            match &atom {
                Atom::Opaque(s) => {
                    let fl = q_floor_int(&exp).expect("floor");
                    let frac = &exp - Q::from_integer(fl.clone());
                    if !fl.is_zero() {
                        if let Expr::Rational(r) = s {
                            match q_pow_bigint(r, &fl) {
                                Some(c) => self.push_coeff(&c),
                                None => self
                                    .pending
                                    .push((s.clone(), Q::from_integer(fl.clone()))),
                            }
                        } else {
                            self.pending.push((s.clone(), Q::from_integer(fl)));
                        }
                    }
                    if !frac.is_zero() {
                        self.atoms.insert(atom.clone(), frac);
                    }
                }
                Atom::Call(Func::Abs, a) if exp.is_integer() => {
                    let e = exp.to_integer();
                    let odd: BigInt = &e % 2u8;
                    let odd = if odd.is_negative() { odd + 2 } else { odd };
                    let even = &e - &odd;
                    if !even.is_zero() {
                        self.pending.push((a.clone(), Q::from_integer(even)));
                    }
                    if !odd.is_zero() {
                        self.atoms.insert(atom.clone(), Q::one());
                    }
                }
                _ => {
                    self.atoms.insert(atom, exp);
                }
            }
        }

        // collected exponential argument
        let exp_args = std::mem::take(&mut self.exp_args);
        let mut exp_arg = if exp_args.is_empty() {
            None
        } else {
            let combined = sum_scaled(&exp_args);
            if combined.is_zero() {
                None
            } else {
                Some(combined)
            }
        };

        // W(z)^k * exp(c*W(z) + rest) -> z^s * W(z)^(k-s) * exp((c-s)W + rest)
        for _ in 0..8 {
            let mut fired = false;
            if let Some(arg) = exp_arg.clone() {
                let targets: Vec<(Atom, Q)> = self
                    .atoms
                    .iter()
                    .filter(|(a, e)| matches!(a, Atom::Call(Func::LambertW, _)) && e.is_integer())
                    .map(|(a, e)| (a.clone(), e.clone()))
                    .collect();
                for (atom, exp) in targets {
                    let w_expr = atom.to_expr();
                    let z = match &atom {
                        Atom::Call(Func::LambertW, z) => z.clone(),
                        _ => unreachable!(),
                    };
                    let c = coeff_of_term(&arg, &w_expr);
                    let k = exp.to_integer();
                    let s: BigInt = if k.is_positive() && c >= Q::one() {
                        k.clone().min(c.floor().to_integer())
                    } else if k.is_negative() && c <= -Q::one() {
                        -((-k.clone()).min((-c).floor().to_integer()))
                    } else {
                        continue;
                    };
                    if s.is_zero() {
                        continue;
                    }
                    let new_exp = &exp - Q::from_integer(s.clone());
                    if new_exp.is_zero() {
                        self.atoms.remove(&atom);
                    } else {
                        self.atoms.insert(atom.clone(), new_exp);
                    }
                    let shift = Expr::Product(vec![
                        Expr::Rational(-Q::from_integer(s.clone())),
                        w_expr.clone(),
                    ]);
                    let next = canon(&Expr::Sum(vec![arg.clone(), shift]));
                    exp_arg = if next.is_zero() { None } else { Some(next) };
                    self.pending.push((z, Q::from_integer(s)));
                    fired = true;
                    break;
                }
            }
            if !fired {
                break;
            }
        }

        let mut parts: Vec<(Atom, Q)> =
            self.atoms.into_iter().filter(|(_, e)| !e.is_zero()).collect();
        if let Some(arg) = exp_arg {
            parts.push((Atom::Exp(arg), Q::one()));
        }
        parts.sort_by(|a, b| a.0.cmp(&b.0));
        Some((self.coeff, Monomial(parts), self.pending))
    }

    fn into_ratform(self) -> RatForm {
        match self.finalize() {
            None => RatForm::zero(),
            Some((c, m, pending)) => {
                let mut poly = Poly::zero();
                poly.insert_term(m, c);
                let mut rf = RatForm { num: poly, den: Poly::one() };
                for (base, q) in pending {
                    let brf = to_ratform(&base);
                    rf = rf_mul(&rf, &rf_pow_q(&brf, &q));
                }
                rf
            }
        }
    }
}

/// Builds `sum_i q_i * e_i` as a canonical expression.
fn sum_scaled(parts: &[(Q, Expr)]) -> Expr {
    let terms: Vec<Expr> = parts
        .iter()
        .map(|(q, e)| Expr::Product(vec![Expr::Rational(q.clone()), e.clone()]))
        .collect();
    canon(&Expr::Sum(terms))
}

/// Rational coefficient of the exact term `target` inside canonical `e`.
fn coeff_of_term(e: &Expr, target: &Expr) -> Q {
    fn term_coeff(term: &Expr, target: &Expr) -> Q {
        if term == target {
            return Q::one();
        }
        if let Expr::Product(ch) = term {
            if ch.len() == 2 {
                if let (Expr::Rational(q), rest) = (&ch[0], &ch[1]) {
                    if rest == target {
                        return q.clone();
                    }
                }
            }
        }
        Q::zero()
    }
    match e {
        Expr::Sum(ch) => ch
            .iter()
            .fold(Q::zero(), |acc, t| acc + term_coeff(t, target)),
        other => term_coeff(other, target),
    }
}

// ---------------------------------------------------------------------------
// polynomial arithmetic
// ---------------------------------------------------------------------------

fn poly_add(a: &Poly, b: &Poly) -> Poly {
    let mut out = a.clone();
    for (m, c) in &b.0 {
        out.insert_term(m.clone(), c.clone());
    }
    out
}

fn poly_neg(a: &Poly) -> Poly {
    Poly(a.0.iter().map(|(m, c)| (m.clone(), -c.clone())).collect())
}

/// Polynomial product; folds may introduce denominators, hence the RatForm
/// return.
fn poly_mul_rf(a: &Poly, b: &Poly) -> RatForm {
    if a.is_zero() || b.is_zero() {
        return RatForm::zero();
    }
    if a.is_one() {
        return RatForm { num: b.clone(), den: Poly::one() };
    }
    if b.is_one() {
        return RatForm { num: a.clone(), den: Poly::one() };
    }
    let mut acc = RatForm::zero();
    for (ma, ca) in &a.0 {
        for (mb, cb) in &b.0 {
            let mut tb = TermBuilder::new();
            tb.push_coeff(&(ca * cb));
            tb.push_monomial(ma, &Q::one());
            tb.push_monomial(mb, &Q::one());
            acc = rf_add(&acc, &tb.into_ratform());
        }
    }
    acc
}

pub(crate) fn rf_add(a: &RatForm, b: &RatForm) -> RatForm {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    if a.den == b.den {
        return fix(poly_add(&a.num, &b.num), a.den.clone());
    }
    let x = poly_mul_rf(&a.num, &b.den);
    let y = poly_mul_rf(&b.num, &a.den);
    let d = poly_mul_rf(&a.den, &b.den);
    rf_div(&rf_add(&x, &y), &d)
}

pub(crate) fn rf_neg(a: &RatForm) -> RatForm {
    RatForm { num: poly_neg(&a.num), den: a.den.clone() }
}

pub(crate) fn rf_sub(a: &RatForm, b: &RatForm) -> RatForm {
    rf_add(a, &rf_neg(b))
}

pub(crate) fn rf_mul(a: &RatForm, b: &RatForm) -> RatForm {
    if a.is_zero() || b.is_zero() {
        return RatForm::zero();
    }
    let n = poly_mul_rf(&a.num, &b.num);
    let d = poly_mul_rf(&a.den, &b.den);
    rf_div(&n, &d)
}

pub(crate) fn rf_div(a: &RatForm, b: &RatForm) -> RatForm {
    if a.is_zero() {
        return RatForm::zero();
    }
    if b.is_zero() {
        // formal division by exact zero: keep an explicit 0^(-1) marker
        let marker = RatForm::from_atom(Atom::Pow(Expr::zero(), Expr::int(-1)));
        return rf_mul(a, &marker);
    }
    let n = poly_mul_rf(&a.num, &b.den);
    let d = poly_mul_rf(&a.den, &b.num);
    if n.den.is_one() && d.den.is_one() {
        fix(n.num, d.num)
    } else {
        rf_div(&n, &d)
    }
}

pub(crate) fn rf_pow_int(a: &RatForm, k: i64) -> RatForm {
    if k == 0 {
        return RatForm::one();
    }
    if k < 0 {
        let inv = rf_div(&RatForm::one(), a);
        return rf_pow_int(&inv, -k);
    }
    let mut result = RatForm::one();
    let mut base = a.clone();
    let mut n = k;
    loop {
        if n & 1 == 1 {
            result = rf_mul(&result, &base);
        }
        n >>= 1;
        if n == 0 {
            break;
        }
        base = rf_mul(&base, &base);
    }
    result
}

pub(crate) fn rf_pow_q(a: &RatForm, q: &Q) -> RatForm {
    if q.is_zero() {
        return RatForm::one();
    }
    if q.is_integer() {
        match q.to_integer().to_i64() {
            Some(k) => return rf_pow_int(a, k),
            None => {
                // unreasonably large exponent: keep opaque
                let base = render(a);
                let mut tb = TermBuilder::new();
                tb.push_atom(Atom::Pow(base, Expr::Rational(q.clone())), Q::one());
                return tb.into_ratform();
            }
        }
    }
    let p = q.numer().clone();
    let r = q.denom().to_u32();
    let r = match r {
        Some(r) if r >= 2 => r,
        _ => {
            let base = render(a);
            let mut tb = TermBuilder::new();
            tb.push_atom(Atom::Pow(base, Expr::Rational(q.clone())), Q::one());
            return tb.into_ratform();
        }
    };
    let root = rf_root(a, r);
    match p.to_i64() {
        Some(k) => rf_pow_int(&root, k),
        None => {
            let base = render(&root);
            let mut tb = TermBuilder::new();
            tb.push_atom(
                Atom::Pow(base, Expr::Rational(Q::from_integer(p))),
                Q::one(),
            );
            tb.into_ratform()
        }
    }
}

fn rf_root(a: &RatForm, r: u32) -> RatForm {
    let n = poly_root(&a.num, r);
    let d = poly_root(&a.den, r);
    rf_div(&n, &d)
}

fn poly_root(p: &Poly, r: u32) -> RatForm {
    if p.is_zero() {
        return RatForm::zero();
    }
    if p.0.len() == 1 {
        let (m, c) = p.0.iter().next().expect("nonempty");
        let mut tb = TermBuilder::new();
        let inv_r = Q::new(BigInt::one(), BigInt::from(r));
        match exact_rational_root(c, r) {
            Some(rc) => tb.push_coeff(&rc),
            None => tb.push_atom(Atom::Opaque(Expr::Rational(c.clone())), inv_r.clone()),
        }
        tb.push_monomial(m, &inv_r);
        tb.into_ratform()
    } else {
        let whole = render_poly_expr(p);
        let mut tb = TermBuilder::new();
        tb.push_atom(Atom::Opaque(whole), Q::new(BigInt::one(), BigInt::from(r)));
        tb.into_ratform()
    }
}

fn exact_rational_root(c: &Q, r: u32) -> Option<Q> {
    if c.is_zero() {
        return Some(Q::zero());
    }
    let negative = c.is_negative();
    if negative && r % 2 == 0 {
        return None;
    }
    let n = c.numer().abs();
    let d = c.denom().clone();
    let rn = n.nth_root(r);
    let rd = d.nth_root(r);
    if num::pow::pow(rn.clone(), r as usize) != n || num::pow::pow(rd.clone(), r as usize) != d {
        return None;
    }
    let root = Q::new(if negative { -rn } else { rn }, rd);
    Some(root)
}

/// Normalizes a raw num/den pair into RatForm invariants.
fn fix(num: Poly, den: Poly) -> RatForm {
    if den.is_zero() {
        let marker = RatForm::from_atom(Atom::Pow(Expr::zero(), Expr::int(-1)));
        return rf_mul(&RatForm { num, den: Poly::one() }, &marker);
    }
    if num.is_zero() {
        return RatForm::zero();
    }
    if den.is_one() {
        return RatForm { num, den };
    }

    // common monomial content of the denominator: per-atom minimum exponent
    // over all monomials, an absent atom counting as exponent 0
    let mut all_atoms: std::collections::BTreeSet<Atom> = std::collections::BTreeSet::new();
    for m in den.0.keys() {
        for (a, _) in &m.0 {
            all_atoms.insert(a.clone());
        }
    }
    let mut content: BTreeMap<Atom, Q> = BTreeMap::new();
    for a in &all_atoms {
        let mut min: Option<Q> = None;
        for m in den.0.keys() {
            let here = m
                .0
                .iter()
                .find(|(b, _)| b == a)
                .map(|(_, e)| e.clone())
                .unwrap_or_else(Q::zero);
            min = Some(match min {
                None => here,
                Some(v) => {
                    if here < v {
                        here
                    } else {
                        v
                    }
                }
            });
        }
        let min = min.expect("den nonempty");
        if !min.is_zero() {
            content.insert(a.clone(), min);
        }
    }

    let (num, den) = if content.is_empty() {
        (num, den)
    } else {
        // divide den by the content, multiply num by its inverse
        let mut new_den = Poly::zero();
        let mut ok = true;
        for (m, c) in &den.0 {
            let mut tb = TermBuilder::new();
            tb.push_coeff(c);
            tb.push_monomial(m, &Q::one());
            for (a, e) in &content {
                tb.push_atom(a.clone(), -e.clone());
            }
            match tb.finalize() {
                Some((cc, mm, pending)) if pending.is_empty() => {
                    new_den.insert_term(mm, cc);
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            let mut tb = TermBuilder::new();
            for (a, e) in &content {
                tb.push_atom(a.clone(), -e.clone());
            }
            let inv_content = tb.into_ratform();
            let num_rf = rf_mul(&RatForm { num, den: Poly::one() }, &inv_content);
            if num_rf.den.is_one() && new_den.0.len() > 1 {
                (num_rf.num, new_den)
            } else {
                // folds reintroduced structure: recompose via division
                return rf_div(&num_rf, &RatForm { num: new_den, den: Poly::one() });
            }
        } else {
            (num, den)
        }
    };

    if den.is_one() {
        return RatForm { num, den };
    }
    if den.0.len() == 1 {
        // a single-monomial denominator folds into the numerator terms
        let (m, c) = den.0.iter().next().expect("nonempty");
        let mut tb = TermBuilder::new();
        tb.push_coeff(&(Q::one() / c));
        tb.push_monomial(m, &-Q::one());
        let inv = tb.into_ratform();
        return rf_mul(&RatForm { num, den: Poly::one() }, &inv);
    }

    // monic denominator: divide by the leading coefficient
    let lead = den
        .0
        .iter()
        .next_back()
        .map(|(_, c)| c.clone())
        .expect("nonempty den");
    if lead.is_one() {
        RatForm { num, den }
    } else {
        let inv = Q::one() / lead;
        RatForm { num: num.scale(&inv), den: den.scale(&inv) }
    }
}

// ---------------------------------------------------------------------------
// expression -> RatForm
// ---------------------------------------------------------------------------

pub(crate) fn to_ratform(e: &Expr) -> RatForm {
    match e {
        Expr::Rational(r) => RatForm::from_q(r.clone()),
        Expr::Symbol(s) if s == "e" => RatForm::from_atom(Atom::Exp(Expr::one())),
        Expr::Symbol(s) => RatForm::from_atom(Atom::Sym(s.clone())),
        Expr::Jet(j) => RatForm::from_atom(Atom::Jet(j.clone())),
        Expr::Sum(ch) => {
            let mut acc = RatForm::zero();
            for c in ch {
                acc = rf_add(&acc, &to_ratform(c));
            }
            acc
        }
        Expr::Product(ch) => {
            let mut acc = RatForm::one();
            for c in ch {
                if acc.is_zero() {
                    return acc;
                }
                acc = rf_mul(&acc, &to_ratform(c));
            }
            acc
        }
        Expr::Power(b, ex) => {
            let rf_e = to_ratform(ex);
            if let Some(q) = rf_e.as_rational() {
                let rf_b = to_ratform(b);
                if rf_b.is_zero() {
                    if q.is_positive() {
                        return RatForm::zero();
                    }
                    if q.is_zero() {
                        return RatForm::one();
                    }
                    return RatForm::from_atom(Atom::Pow(
                        Expr::zero(),
                        Expr::Rational(q),
                    ));
                }
                rf_pow_q(&rf_b, &q)
            } else {
                let e_c = render(&rf_e);
                rf_pow_symbolic(&to_ratform(b), e_c)
            }
        }
        Expr::Call(f, a) => {
            let a_c = render(&to_ratform(a));
            match f {
                Func::Sqrt => rf_pow_q(&to_ratform(&a_c), &Q::new(1.into(), 2.into())),
                Func::Exp => {
                    if a_c.is_zero() {
                        RatForm::one()
                    } else {
                        RatForm::from_atom(Atom::Exp(a_c))
                    }
                }
                Func::Ln => {
                    if a_c.is_one() {
                        return RatForm::zero();
                    }
                    if let Expr::Call(Func::Exp, inner) = &a_c {
                        return to_ratform(inner);
                    }
                    RatForm::from_atom(Atom::Call(Func::Ln, a_c))
                }
                Func::Erf => {
                    if a_c.is_zero() {
                        return RatForm::zero();
                    }
                    if negative_lead(&a_c) {
                        let neg = render(&rf_neg(&to_ratform(&a_c)));
                        rf_neg(&RatForm::from_atom(Atom::Call(Func::Erf, neg)))
                    } else {
                        RatForm::from_atom(Atom::Call(Func::Erf, a_c))
                    }
                }
                Func::LambertW => {
                    if a_c.is_zero() {
                        return RatForm::zero();
                    }
                    RatForm::from_atom(Atom::Call(Func::LambertW, a_c))
                }
                Func::Abs => {
                    if let Expr::Rational(r) = &a_c {
                        return RatForm::from_q(r.abs());
                    }
                    if matches!(&a_c, Expr::Call(Func::Exp, _)) {
                        return to_ratform(&a_c);
                    }
                    if matches!(&a_c, Expr::Call(Func::Abs, _)) {
                        return to_ratform(&a_c);
                    }
                    let arg = if negative_lead(&a_c) {
                        render(&rf_neg(&to_ratform(&a_c)))
                    } else {
                        a_c
                    };
                    RatForm::from_atom(Atom::Call(Func::Abs, arg))
                }
            }
        }
    }
}

fn rf_pow_symbolic(base: &RatForm, expo: Expr) -> RatForm {
    if base.is_zero() {
        return RatForm::from_atom(Atom::Pow(Expr::zero(), expo));
    }
    let b_expr = render(base);
    match &b_expr {
        Expr::Rational(r) if r.is_one() => RatForm::one(),
        Expr::Call(Func::Exp, a) => {
            let arg = canon(&Expr::Product(vec![(**a).clone(), expo]));
            if arg.is_zero() {
                RatForm::one()
            } else {
                RatForm::from_atom(Atom::Exp(arg))
            }
        }
        Expr::Power(b2, e2) => {
            let new_e = canon(&Expr::Product(vec![(**e2).clone(), expo]));
            to_ratform(&Expr::Power(b2.clone(), Box::new(new_e)))
        }
        Expr::Product(ch) => {
            let mut acc = RatForm::one();
            for c in ch {
                let part = rf_pow_symbolic(&to_ratform(c), expo.clone());
                acc = rf_mul(&acc, &part);
            }
            acc
        }
        _ => RatForm::from_atom(Atom::Pow(b_expr, expo)),
    }
}

/// True when the canonical expression's leading coefficient is negative.
fn negative_lead(e: &Expr) -> bool {
    match e {
        Expr::Rational(r) => r.is_negative(),
        Expr::Product(ch) => matches!(ch.first(), Some(Expr::Rational(r)) if r.is_negative()),
        Expr::Sum(ch) => ch.first().map(negative_lead).unwrap_or(false),
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// RatForm -> expression
// ---------------------------------------------------------------------------

pub(crate) fn render(rf: &RatForm) -> Expr {
    if rf.num.is_zero() {
        return Expr::zero();
    }
    let den_factor = if rf.den.is_one() {
        None
    } else {
        Some(Expr::Power(
            Box::new(render_poly_expr(&rf.den)),
            Box::new(Expr::int(-1)),
        ))
    };
    let mut terms: Vec<Expr> = Vec::with_capacity(rf.num.0.len());
    for (m, c) in rf.num.0.iter().rev() {
        terms.push(render_term(c, m, den_factor.clone()));
    }
    if terms.len() == 1 {
        terms.pop().expect("one term")
    } else {
        Expr::Sum(terms)
    }
}

fn render_poly_expr(p: &Poly) -> Expr {
    render(&RatForm { num: p.clone(), den: Poly::one() })
}

fn render_term(c: &Q, m: &Monomial, extra: Option<Expr>) -> Expr {
    let mut factors: Vec<Expr> = Vec::new();
    for (atom, e) in &m.0 {
        let base = atom.to_expr();
        if e.is_one() {
            factors.push(base);
        } else {
            factors.push(Expr::Power(Box::new(base), Box::new(Expr::Rational(e.clone()))));
        }
    }
    if let Some(x) = extra {
        factors.push(x);
    }
    if factors.is_empty() {
        return Expr::Rational(c.clone());
    }
    if !c.is_one() {
        factors.insert(0, Expr::Rational(c.clone()));
    }
    if factors.len() == 1 {
        factors.pop().expect("one factor")
    } else {
        Expr::Product(factors)
    }
}

/// Full canonicalization: ring-normalize and render.
pub(crate) fn canon(e: &Expr) -> Expr {
    render(&to_ratform(e))
}
