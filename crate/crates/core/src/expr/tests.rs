use super::*;

fn p(s: &str) -> Expr {
    parse(s).expect(s)
}

#[test]
fn parse_power_quotient_shape() {
    // x^2/t is the product of x^2 and t^-1
    let e = p("x^2/t");
    assert_eq!(e, p("x^2 * t^-1"));
    match &e {
        Expr::Product(ch) => {
            assert_eq!(ch.len(), 2);
            assert!(matches!(&ch[0], Expr::Power(b, _) if **b == Expr::sym("x")));
            assert!(matches!(&ch[1], Expr::Power(b, _) if **b == Expr::sym("t")));
        }
        other => panic!("expected product, got {other:?}"),
    }
}

#[test]
fn parse_jet_aliases() {
    assert_eq!(p("Diff(u,x,2)"), p("u_xx"));
    assert_eq!(p("u_xt"), p("u_tx"));
    assert_eq!(p("Diff(u,t,1,x,1)"), p("u_tx"));
    assert_eq!(p("Diff(w,t)"), Expr::jet("w", &["t"]));
    // not jet shorthand: suffix letters outside {x,t,u,v,w}
    assert_eq!(p("c_1"), Expr::sym("c_1"));
    assert_eq!(p("my_var"), Expr::sym("my_var"));
}

#[test]
fn parse_error_offset() {
    let err = parse("e*(x").unwrap_err();
    assert_eq!(err.offset, 4);
    let err = parse("foo(x)").unwrap_err();
    assert!(matches!(err.kind, ParseErrorKind::UnknownFunction(ref n) if n == "foo"));
}

#[test]
fn print_parse_round_trip_basics() {
    for s in [
        "x^2/t",
        "u_xx + 2*u_x - 1",
        "exp(x + eps*t)",
        "erf(abs(x)/(2*(eps*t)^(1/2)))",
        "lambertW(exp(-t - 1)/c1)",
        "1/(1 + c1*exp(-a*t))",
        "(1 + c1*exp(-2*t))^(-1/2)",
        "-2/3*x + x^2*t - 1/2",
    ] {
        let e = p(s);
        let printed = e.to_string();
        let reparsed = parse(&printed).unwrap_or_else(|err| {
            panic!("reparse of `{printed}` (from `{s}`): {err}")
        });
        assert_eq!(reparsed, e, "round trip failed for `{s}` -> `{printed}`");
    }
}

#[test]
fn canonical_sorting_and_flattening() {
    assert_eq!(p("x + t + x"), p("2*x + t"));
    assert_eq!(p("x*(x + 1)"), p("x^2 + x"));
    assert_eq!(p("(x + t)^2"), p("x^2 + 2*x*t + t^2"));
    assert_eq!(p("x - x"), Expr::zero());
    assert_eq!(p("x/x"), Expr::one());
}

#[test]
fn fixed_rewrite_rules() {
    // exp(a)*exp(b) -> exp(a+b)
    assert_eq!(p("exp(x)*exp(t)"), p("exp(x + t)"));
    // e is the natural base
    assert_eq!(p("e^x"), p("exp(x)"));
    assert_eq!(p("e*exp(x)"), p("exp(x + 1)"));
    // ln(exp(x)) -> x
    assert_eq!(p("ln(exp(x))"), p("x"));
    // W(z) e^{W(z)} -> z
    assert_eq!(p("lambertW(z)*exp(lambertW(z))"), p("z"));
    assert_eq!(
        p("lambertW(z)^2*exp(2*lambertW(z))"),
        p("z^2")
    );
    // sqrt is a power alias
    assert_eq!(p("sqrt(x)"), p("x^(1/2)"));
    assert_eq!(p("sqrt(x)*sqrt(x)"), p("x"));
    // abs folds on even powers
    assert_eq!(p("abs(x)^2"), p("x^2"));
    assert_eq!(p("abs(-3/2)"), p("3/2"));
    // odd-function sign normalization
    assert_eq!(p("erf(-x) + erf(x)"), Expr::zero());
}

#[test]
fn rational_normalization_cancels() {
    // common denominators expand and cancel
    let e = p("1/(1 + x) + 1/(1 + x) - 2/(1 + x)");
    assert_eq!(e, Expr::zero());
    let e = p("(1 + x)^2*(1 + x)^(-3) - (1 + x)^(-1)");
    assert_eq!(e, Expr::zero());
    // fractional powers of sums share a root atom
    let e = p("(1 + x)^(-1/2) - (1 + x)^(1/2)/(1 + x)");
    assert_eq!(e, Expr::zero());
}

#[test]
fn differentiate_basics() {
    assert_eq!(p("x^2").differentiate("x"), p("2*x"));
    assert_eq!(
        p("erf(x)").differentiate("x"),
        p("2*pi^(-1/2)*exp(-x^2)")
    );
    // d/dx of an unrelated symbol is zero
    assert_eq!(p("t").differentiate("x"), Expr::zero());
    // jets are independent coordinates for the plain partial derivative
    assert_eq!(p("u_x").differentiate("x"), Expr::zero());
}

#[test]
fn differentiate_lambert_w_matches_finite_differences() {
    let dw = p("lambertW(z)").differentiate("z");
    assert_eq!(dw, p("lambertW(z)/(z*(1 + lambertW(z)))"));
    let h = 1e-6;
    for &z in &[0.5_f64, 1.0, 2.0] {
        let sym = dw
            .eval(&Binding::new().set_num("z", z))
            .expect("eval dW");
        let wp = p("lambertW(z)")
            .eval(&Binding::new().set_num("z", z + h))
            .unwrap();
        let wm = p("lambertW(z)")
            .eval(&Binding::new().set_num("z", z - h))
            .unwrap();
        let fd = (wp - wm) / (2.0 * h);
        assert!((sym - fd).abs() < 1e-8, "z={z}: {sym} vs {fd}");
    }
}

#[test]
fn substitute_examples() {
    // manifold-style jet replacement
    let b = Binding::new().set("u_t", p("eps*u_xx"));
    assert_eq!(p("u_t").substitute(&b), p("eps*u_xx"));
    // simultaneous, not sequential
    let b = Binding::new().set("x", p("y + c*t"));
    assert_eq!(p("x - c*t").substitute(&b), p("y"));
    let b = Binding::new().set("v", Expr::one()).set("w", Expr::zero());
    assert_eq!(p("v + eps*w").substitute(&b), Expr::one());
    // swap is simultaneous
    let b = Binding::new().set("x", p("t")).set("t", p("x"));
    assert_eq!(p("x - t").substitute(&b), p("t - x"));
}

#[test]
fn expand_collect_examples() {
    let vars = [Coord::parse("v_x").unwrap(), Coord::parse("w_x").unwrap()];
    let m = p("a*v_x*w_x + v_x").expand_collect(&vars).unwrap();
    assert_eq!(m.coefficient(&[1, 1]), p("a"));
    assert_eq!(m.coefficient(&[1, 0]), Expr::one());
    assert_eq!(m.coefficient(&[0, 0]), Expr::zero());

    // first-order expansion of the logistic reaction
    let expanded = p("(v + eps*w)*(1 - (v + eps*w))");
    let m = expanded
        .expand_collect(&[Coord::sym("eps")])
        .unwrap();
    assert_eq!(m.coefficient_deg(0), p("v - v^2"));
    assert_eq!(m.coefficient_deg(1), p("w - 2*v*w"));
    assert_eq!(m.coefficient_deg(2), p("-w^2"));

    let err = p("exp(v_x)")
        .expand_collect(&[Coord::parse("v_x").unwrap()])
        .unwrap_err();
    assert!(matches!(err, CollectError::NonPolynomial(_)));

    // negative powers are not polynomial either
    assert!(p("1/v_x")
        .expand_collect(&[Coord::parse("v_x").unwrap()])
        .is_err());

    // reconstruction identity
    let e = p("(a + v_x)^3 - t*w_x^2*v_x");
    let m = e.expand_collect(&vars).unwrap();
    assert_eq!((m.reconstruct() - e).canon(), Expr::zero());
}

#[test]
fn eval_examples() {
    assert_eq!(p("erf(0)").eval(&Binding::new()).unwrap(), 0.0);
    let w = p("lambertW(e)").eval(&Binding::new()).unwrap();
    assert!((w - 1.0).abs() < 1e-14);
    let v = p("erf(1)").eval(&Binding::new()).unwrap();
    assert!((v - 0.842700792949715).abs() < 1e-12);

    let err = p("x + y").eval(&Binding::new().set_num("x", 1.0)).unwrap_err();
    assert!(matches!(err, EvalError::UnboundSymbol(ref s) if s == "y"));

    let err = p("ln(x)").eval(&Binding::new().set_num("x", -1.0)).unwrap_err();
    assert!(matches!(err, EvalError::Domain(_)));

    let err = p("lambertW(x)")
        .eval(&Binding::new().set_num("x", -0.5))
        .unwrap_err();
    assert!(matches!(err, EvalError::Domain(_)));
}

#[test]
fn zero_test_verdicts() {
    assert_eq!(
        p("x - x").zero_test(0),
        ZeroVerdict::SymbolicallyZero
    );
    match p("x*t + 1").zero_test(0) {
        ZeroVerdict::NonZero { .. } => {}
        other => panic!("expected NonZero, got {other:?}"),
    }
}

#[test]
fn monic_normalization() {
    assert_eq!(p("2*x + 2*t").monic(), p("x + t"));
    assert_eq!(p("-3*u_x").monic(), p("u_x"));
}
