//! Double-precision special functions: the error function and the principal
//! branch of the Lambert W function.

use crate::expr::EvalError;

/// 2/sqrt(pi)
const TWO_OVER_SQRT_PI: f64 = 1.128_379_167_095_512_6;

/// Error function, `erf(x) = (2/sqrt(pi)) * integral_0^x exp(-t^2) dt`.
///
/// Maclaurin series below |x| = 2 (no significant cancellation there), the
/// continued fraction for erfc above. Absolute error stays below 1e-14 on
/// [-6, 6]; `erf(-x) == -erf(x)` exactly and the result lies in (-1, 1).
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let mut r = if ax <= 2.0 {
        erf_series(ax)
    } else {
        1.0 - erfc_cf(ax)
    };
    if r >= 1.0 {
        r = 1.0 - f64::EPSILON / 2.0;
    }
    if x < 0.0 {
        -r
    } else {
        r
    }
}

fn erf_series(ax: f64) -> f64 {
    // term_n = (-1)^n ax^(2n+1) / (n! (2n+1))
    let x2 = ax * ax;
    let mut term = ax;
    let mut sum = ax;
    let mut n = 1.0;
    loop {
        term *= -x2 / n * (2.0 * n - 1.0) / (2.0 * n + 1.0);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs().max(1e-30) || n > 200.0 {
            break;
        }
        n += 1.0;
    }
    TWO_OVER_SQRT_PI * sum
}

/// erfc(x) for x >= 2 via the standard continued fraction
/// `erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`
/// evaluated with the modified Lentz algorithm.
fn erfc_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x.max(tiny);
    let mut c = f;
    let mut d = 0.0;
    for n in 1..400 {
        let a = n as f64 / 2.0;
        d = x + a * d;
        if d == 0.0 {
            d = tiny;
        }
        c = x + a / c;
        if c == 0.0 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-x * x).exp() * (TWO_OVER_SQRT_PI / 2.0) / f
}

/// -1/e, the branch point of the principal Lambert W.
pub const LAMBERT_BRANCH_POINT: f64 = -0.36787944117144233;

/// Principal branch of the Lambert W function: `W(z) e^(W(z)) = z`, with
/// `W(z) >= -1` on `z >= -1/e`.
///
/// Series start near the branch point, otherwise a cheap initial guess
/// polished by Halley iteration; the defining identity holds to relative
/// 1e-12 across the domain.
pub fn lambert_w(z: f64) -> Result<f64, EvalError> {
    if z.is_nan() {
        return Err(EvalError::Domain("lambertW(NaN)".into()));
    }
    if z < LAMBERT_BRANCH_POINT {
        return Err(EvalError::Domain(format!(
            "lambertW({z}) below branch point -1/e"
        )));
    }
    if z == 0.0 {
        return Ok(0.0);
    }

    // expansion parameter at the branch point
    let q = (2.0 * (std::f64::consts::E * z + 1.0)).max(0.0);
    let p = q.sqrt();
    let mut w = if z < -0.25 {
        let w0 = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
        if p < 1e-6 {
            return Ok(w0);
        }
        w0
    } else if z < 1.0 {
        z / (1.0 + z)
    } else if z < 3.0 {
        (1.0 + z).ln()
    } else {
        let l1 = z.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - z;
        if f == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if !denom.is_finite() || denom == 0.0 {
            break;
        }
        let step = f / denom;
        w -= step;
        if step.abs() <= 1e-15 * (1.0 + w.abs()) {
            break;
        }
    }
    if w < -1.0 {
        w = -1.0;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::{BigInt, BigRational, FromPrimitive, Signed, ToPrimitive, Zero};

    /// Exact-rational Maclaurin oracle for erf: the alternating series is
    /// summed in BigRational so cancellation is exact, then scaled by
    /// 2/sqrt(pi) in f64.
    pub(crate) fn erf_oracle(x: f64) -> f64 {
        let xq = BigRational::from_f64(x).expect("finite");
        let x2 = &xq * &xq;
        // term_n = term_(n-1) * (-x^2) * (2n-1) / (n (2n+1))
        let mut term = xq.clone();
        let mut sum = xq;
        let bound = BigRational::new(BigInt::from(1), BigInt::from(10u8).pow(30));
        let mut n: i64 = 1;
        loop {
            term = -term
                * &x2
                * BigRational::new(BigInt::from(2 * n - 1), BigInt::from(n * (2 * n + 1)));
            sum += &term;
            if term.abs() < bound || n > 400 {
                break;
            }
            n += 1;
        }
        let s = sum.to_f64().expect("converged sum");
        TWO_OVER_SQRT_PI * s
    }

    #[test]
    fn erf_matches_rational_series_oracle() {
        let mut x = -6.0;
        while x <= 6.0 {
            let want = erf_oracle(x);
            let got = erf(x);
            assert!(
                (got - want).abs() < 1e-12,
                "erf({x}) = {got}, oracle {want}"
            );
            x += 0.125;
        }
    }

    #[test]
    fn erf_basic_values() {
        assert_eq!(erf(0.0), 0.0);
        assert!((erf(1.0) - 0.842700792949715).abs() < 1e-12);
        for &x in &[0.3, 0.7, 1.9, 2.5, 4.0] {
            assert_eq!(erf(-x), -erf(x));
            assert!(erf(x) > -1.0 && erf(x) < 1.0);
        }
        assert!(erf(10.0) < 1.0);
    }

    #[test]
    fn lambert_w_identity() {
        for &z in &[
            LAMBERT_BRANCH_POINT,
            -0.36,
            -0.2,
            -1e-3,
            1e-3,
            0.5,
            1.0,
            std::f64::consts::E,
            10.0,
            1e3,
        ] {
            let w = lambert_w(z).unwrap();
            let back = w * w.exp();
            let tol = 1e-12 * z.abs().max(1e-3);
            assert!(
                (back - z).abs() <= tol,
                "W({z}) = {w}, W e^W = {back}"
            );
            assert!(w >= -1.0);
        }
        assert_eq!(lambert_w(0.0).unwrap(), 0.0);
        assert!((lambert_w(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-14);
        assert!((lambert_w(LAMBERT_BRANCH_POINT).unwrap() + 1.0).abs() < 1e-6);
        assert!(lambert_w(-0.5).is_err());
    }

    #[test]
    fn erf_series_cf_crossover_is_smooth() {
        let lo = erf(2.0 - 1e-9);
        let hi = erf(2.0 + 1e-9);
        assert!((lo - hi).abs() < 1e-12);
    }
}
