//! Double-precision evaluation and the randomized zero probe.

use num::ToPrimitive;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::special;

use super::{Binding, Bound, Coord, Expr, EvalError, Func, ZeroVerdict};

pub(super) fn eval(e: &Expr, b: &Binding) -> Result<f64, EvalError> {
    let v = ev(e, b)?;
    finite(v)
}

fn finite(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Domain("non-finite value".into()))
    }
}

fn ev(e: &Expr, b: &Binding) -> Result<f64, EvalError> {
    match e {
        Expr::Rational(r) => r
            .to_f64()
            .ok_or_else(|| EvalError::Domain("rational out of f64 range".into())),
        Expr::Symbol(s) => match b.get(&Coord::Sym(s.clone())) {
            Some(Bound::Num(v)) => Ok(*v),
            Some(Bound::Expr(x)) => ev(&x.clone(), b),
            None => match s.as_str() {
                "pi" => Ok(std::f64::consts::PI),
                "e" => Ok(std::f64::consts::E),
                _ => Err(EvalError::UnboundSymbol(s.clone())),
            },
        },
        Expr::Jet(j) => match b.get(&Coord::Jet(j.clone())) {
            Some(Bound::Num(v)) => Ok(*v),
            Some(Bound::Expr(x)) => ev(&x.clone(), b),
            None => Err(EvalError::UnboundSymbol(j.to_string())),
        },
        Expr::Sum(ch) => {
            let mut acc = 0.0;
            for c in ch {
                acc += ev(c, b)?;
            }
            finite(acc)
        }
        Expr::Product(ch) => {
            let mut acc = 1.0;
            for c in ch {
                acc *= ev(c, b)?;
            }
            finite(acc)
        }
        Expr::Power(base, ex) => {
            let vb = ev(base, b)?;
            let vx = ev(ex, b)?;
            if vb == 0.0 && vx == 0.0 {
                return Ok(1.0);
            }
            let r = vb.powf(vx);
            if r.is_finite() {
                Ok(r)
            } else {
                Err(EvalError::Domain(format!("{vb}^{vx} undefined")))
            }
        }
        Expr::Call(f, a) => {
            let va = ev(a, b)?;
            match f {
                Func::Exp => finite(va.exp()),
                Func::Ln => {
                    if va <= 0.0 {
                        Err(EvalError::Domain(format!("ln({va})")))
                    } else {
                        Ok(va.ln())
                    }
                }
                Func::Erf => Ok(special::erf(va)),
                Func::LambertW => special::lambert_w(va),
                Func::Sqrt => {
                    if va < 0.0 {
                        Err(EvalError::Domain(format!("sqrt({va})")))
                    } else {
                        Ok(va.sqrt())
                    }
                }
                Func::Abs => Ok(va.abs()),
            }
        }
    }
}

/// Evaluates `e` and also returns a cancellation magnitude: the sum of the
/// absolute values of the top-level sum terms (or `|value|` otherwise).
pub fn eval_with_magnitude(e: &Expr, b: &Binding) -> Result<(f64, f64), EvalError> {
    match e {
        Expr::Sum(ch) => {
            let mut acc = 0.0;
            let mut mag = 0.0;
            for c in ch {
                let v = ev(c, b)?;
                acc += v;
                mag += v.abs();
            }
            Ok((finite(acc)?, mag))
        }
        other => {
            let v = eval(other, b)?;
            Ok((v, v.abs()))
        }
    }
}

/// Draws a value from [-2, -0.1] U [0.1, 2] ([0.01, 1] for `eps`).
pub fn sample_coord<R: Rng>(rng: &mut R, coord: &Coord) -> f64 {
    if matches!(coord, Coord::Sym(s) if s == "eps") {
        return rng.random_range(0.01..=1.0);
    }
    let mag: f64 = rng.random_range(0.1..=2.0);
    if rng.random_bool(0.5) {
        mag
    } else {
        -mag
    }
}

/// Randomized numeric zero check at 20 points, magnitude-scaled.
pub(super) fn numeric_zero_probe(e: &Expr, seed: u64) -> ZeroVerdict {
    let coords: Vec<Coord> = e.free_coords().into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_abs: f64 = 0.0;
    let mut evaluated = 0usize;
    for _ in 0..20 {
        let mut result = None;
        for _ in 0..10 {
            let mut b = Binding::new();
            for c in &coords {
                let v = sample_coord(&mut rng, c);
                b.insert(c.clone(), Bound::Num(v));
            }
            if let Ok(pair) = eval_with_magnitude(e, &b) {
                result = Some(pair);
                break;
            }
        }
        let Some((v, mag)) = result else { continue };
        evaluated += 1;
        max_abs = max_abs.max(v.abs());
        if v.abs() >= 1e-9 * (1.0 + mag) {
            return ZeroVerdict::NonZero { witness_abs: v.abs() };
        }
    }
    if evaluated == 0 {
        return ZeroVerdict::NonZero { witness_abs: f64::NAN };
    }
    ZeroVerdict::ProbablyZero { max_abs }
}
