//! Deterministic printing in the same grammar the parser accepts.

use std::fmt;

use num::{One, Signed};

use super::{Expr, JetVar, Q};

const PREC_SUM: u8 = 10;
const PREC_PRODUCT: u8 = 20;
const PREC_POWER: u8 = 30;

pub(super) fn fmt_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write_expr(e, f, 0)
}

pub(super) fn fmt_jet(j: &JetVar, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let shorthand = !j.dep.is_empty()
        && !j.dep.contains('_')
        && !j.index.is_empty()
        && j.index
            .iter()
            .all(|v| v.len() == 1 && "xtuvw".contains(v.as_str()));
    if shorthand {
        write!(f, "{}_", j.dep)?;
        for v in &j.index {
            write!(f, "{v}")?;
        }
        return Ok(());
    }
    // explicit form: Diff(dep, var, count, ...)
    write!(f, "Diff({}", j.dep)?;
    let mut i = 0;
    while i < j.index.len() {
        let var = &j.index[i];
        let mut count = 1;
        while i + count < j.index.len() && j.index[i + count] == *var {
            count += 1;
        }
        write!(f, ", {var}, {count}")?;
        i += count;
    }
    write!(f, ")")
}

fn is_negative(e: &Expr) -> bool {
    match e {
        Expr::Rational(r) => r.is_negative(),
        Expr::Product(ch) => matches!(ch.first(), Some(Expr::Rational(r)) if r.is_negative()),
        _ => false,
    }
}

/// Display-only negation of a term known to have a negative lead.
fn negated(e: &Expr) -> Expr {
    match e {
        Expr::Rational(r) => Expr::Rational(-r.clone()),
        Expr::Product(ch) => {
            let mut ch = ch.clone();
            if let Some(Expr::Rational(r)) = ch.first_mut() {
                *r = -r.clone();
                if r.is_one() && ch.len() > 1 {
                    ch.remove(0);
                }
            }
            if ch.len() == 1 {
                ch.pop().expect("one child")
            } else {
                Expr::Product(ch)
            }
        }
        other => other.clone(),
    }
}

fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
    match e {
        Expr::Rational(r) => {
            let needs = prec > PREC_PRODUCT && (r.is_negative() || !r.is_integer());
            if needs {
                write!(f, "({r})")
            } else {
                write!(f, "{r}")
            }
        }
        Expr::Symbol(s) => write!(f, "{s}"),
        Expr::Jet(j) => fmt_jet(j, f),
        Expr::Sum(ch) => {
            let needs = prec > PREC_SUM;
            if needs {
                write!(f, "(")?;
            }
            for (i, c) in ch.iter().enumerate() {
                if i == 0 {
                    write_expr(c, f, PREC_SUM)?;
                } else if is_negative(c) {
                    write!(f, " - ")?;
                    write_expr(&negated(c), f, PREC_SUM + 1)?;
                } else {
                    write!(f, " + ")?;
                    write_expr(c, f, PREC_SUM + 1)?;
                }
            }
            if needs {
                write!(f, ")")?;
            }
            Ok(())
        }
        Expr::Product(ch) => write_product(ch, f, prec),
        Expr::Power(b, ex) => {
            let needs = prec > PREC_POWER;
            if needs {
                write!(f, "(")?;
            }
            write_expr(b, f, PREC_POWER + 1)?;
            write!(f, "^")?;
            match &**ex {
                Expr::Rational(r) if r.is_integer() && !r.is_negative() => {
                    write!(f, "{r}")?;
                }
                other => {
                    write!(f, "(")?;
                    write_expr(other, f, 0)?;
                    write!(f, ")")?;
                }
            }
            if needs {
                write!(f, ")")?;
            }
            Ok(())
        }
        Expr::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(a, f, 0)?;
            write!(f, ")")
        }
    }
}

/// Splits a canonical product into numerator and denominator factors and
/// prints `num/den`.
fn write_product(ch: &[Expr], f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
    let mut coeff = Q::one();
    let mut num: Vec<Expr> = Vec::new();
    let mut den: Vec<Expr> = Vec::new();
    for c in ch {
        match c {
            Expr::Rational(r) => coeff *= r,
            Expr::Power(b, ex) => match &**ex {
                Expr::Rational(q) if q.is_negative() => {
                    let flipped = -q.clone();
                    if flipped.is_one() {
                        den.push((**b).clone());
                    } else {
                        den.push(Expr::Power(b.clone(), Box::new(Expr::Rational(flipped))));
                    }
                }
                _ => num.push(c.clone()),
            },
            other => num.push(other.clone()),
        }
    }

    let num_int = coeff.numer().clone();
    let den_int = coeff.denom().clone();
    let negative = num_int.is_negative();
    let num_abs = num_int.abs();

    let needs = prec > PREC_PRODUCT || (negative && prec > PREC_SUM);
    if needs {
        write!(f, "(")?;
    }
    if negative {
        write!(f, "-")?;
    }

    let mut wrote_num = false;
    if !num_abs.is_one() || num.is_empty() {
        write!(f, "{num_abs}")?;
        wrote_num = true;
    }
    for part in &num {
        if wrote_num {
            write!(f, "*")?;
        }
        write_expr(part, f, PREC_PRODUCT + 1)?;
        wrote_num = true;
    }

    let den_count = den.len() + usize::from(!den_int.is_one());
    if den_count > 0 {
        write!(f, "/")?;
        if den_count > 1 {
            write!(f, "(")?;
        }
        let mut wrote_den = false;
        if !den_int.is_one() {
            write!(f, "{den_int}")?;
            wrote_den = true;
        }
        for part in &den {
            if wrote_den {
                write!(f, "*")?;
            }
            write_expr(part, f, PREC_POWER + 1)?;
            wrote_den = true;
        }
        if den_count > 1 {
            write!(f, ")")?;
        }
    }

    if needs {
        write!(f, ")")?;
    }
    Ok(())
}
