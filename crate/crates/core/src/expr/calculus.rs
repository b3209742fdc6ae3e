//! Symbolic differentiation and simultaneous substitution.

use num::One;

use super::{canon, Binding, Bound, Coord, Expr, Func, Q};

pub(super) fn differentiate_coord(e: &Expr, coord: &Coord) -> Expr {
    canon::canon(&d(e, coord))
}

fn d(e: &Expr, c: &Coord) -> Expr {
    match e {
        Expr::Rational(_) => Expr::zero(),
        Expr::Symbol(s) => {
            if matches!(c, Coord::Sym(v) if v == s) {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Expr::Jet(j) => {
            if matches!(c, Coord::Jet(v) if v == j) {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Expr::Sum(ch) => Expr::Sum(ch.iter().map(|x| d(x, c)).collect()),
        Expr::Product(ch) => {
            let mut terms = Vec::with_capacity(ch.len());
            for i in 0..ch.len() {
                let mut factors = ch.clone();
                factors[i] = d(&ch[i], c);
                terms.push(Expr::Product(factors));
            }
            Expr::Sum(terms)
        }
        Expr::Power(b, ex) => match &**ex {
            Expr::Rational(q) => {
                // q * b^(q-1) * b'
                Expr::Product(vec![
                    Expr::Rational(q.clone()),
                    Expr::Power(b.clone(), Box::new(Expr::Rational(q - Q::one()))),
                    d(b, c),
                ])
            }
            other => {
                // b^e * (e' ln b + e b'/b)
                let ln_b = Expr::Call(Func::Ln, b.clone());
                let part1 = Expr::Product(vec![d(other, c), ln_b]);
                let part2 = Expr::Product(vec![
                    other.clone(),
                    d(b, c),
                    Expr::Power(b.clone(), Box::new(Expr::int(-1))),
                ]);
                Expr::Product(vec![e.clone(), Expr::Sum(vec![part1, part2])])
            }
        },
        Expr::Call(Func::Exp, a) => Expr::Product(vec![e.clone(), d(a, c)]),
        Expr::Call(Func::Ln, a) => Expr::Product(vec![
            d(a, c),
            Expr::Power(a.clone(), Box::new(Expr::int(-1))),
        ]),
        Expr::Call(Func::Erf, a) => {
            // (2/sqrt(pi)) exp(-a^2) a'
            let minus_a2 = Expr::Product(vec![Expr::int(-1), (**a).clone(), (**a).clone()]);
            Expr::Product(vec![
                Expr::int(2),
                Expr::Power(Box::new(Expr::sym("pi")), Box::new(Expr::ratio(-1, 2))),
                Expr::Call(Func::Exp, Box::new(minus_a2)),
                d(a, c),
            ])
        }
        Expr::Call(Func::LambertW, a) => {
            // W(a) / (a (1 + W(a))) * a'
            let w = e.clone();
            let denom = Expr::Product(vec![
                (**a).clone(),
                Expr::Sum(vec![Expr::one(), w.clone()]),
            ]);
            Expr::Product(vec![
                w,
                Expr::Power(Box::new(denom), Box::new(Expr::int(-1))),
                d(a, c),
            ])
        }
        Expr::Call(Func::Sqrt, a) => Expr::Product(vec![
            Expr::ratio(1, 2),
            Expr::Power(a.clone(), Box::new(Expr::ratio(-1, 2))),
            d(a, c),
        ]),
        // d|a| = (a/|a|) a', valid away from a = 0
        Expr::Call(Func::Abs, a) => Expr::Product(vec![
            (**a).clone(),
            Expr::Power(Box::new(e.clone()), Box::new(Expr::int(-1))),
            d(a, c),
        ]),
    }
}

pub(super) fn substitute(e: &Expr, binding: &Binding) -> Expr {
    canon::canon(&sub(e, binding))
}

fn sub(e: &Expr, b: &Binding) -> Expr {
    let lookup = |coord: Coord| -> Option<Expr> {
        b.get(&coord).map(|v| match v {
            Bound::Expr(x) => x.clone(),
            Bound::Num(n) => Expr::Rational(super::q_from_f64(*n)),
        })
    };
    match e {
        Expr::Rational(_) => e.clone(),
        Expr::Symbol(s) => lookup(Coord::Sym(s.clone())).unwrap_or_else(|| e.clone()),
        Expr::Jet(j) => lookup(Coord::Jet(j.clone())).unwrap_or_else(|| e.clone()),
        Expr::Sum(ch) => Expr::Sum(ch.iter().map(|x| sub(x, b)).collect()),
        Expr::Product(ch) => Expr::Product(ch.iter().map(|x| sub(x, b)).collect()),
        Expr::Power(base, ex) => Expr::Power(Box::new(sub(base, b)), Box::new(sub(ex, b))),
        Expr::Call(f, a) => Expr::Call(*f, Box::new(sub(a, b))),
    }
}
