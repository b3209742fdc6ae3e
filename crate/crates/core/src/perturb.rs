//! Perturbation-order splitting: expand `u = v + eps*w` in a perturbed
//! reaction-diffusion equation and emit the coupled order-0/order-1 system.

use crate::detsys::{DetError, PDESystem};
use crate::expr::{Binding, CollectError, Coord, Expr, JetVar};
use crate::jet::JetSpace;

/// A reaction-diffusion equation `u_t = eps*u_xx + R(u)` with the small
/// parameter multiplying the diffusion term.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbedEquation {
    pub name: String,
    /// reaction term as an expression in the symbol `u`
    pub reaction: Expr,
}

impl PerturbedEquation {
    pub fn new(name: &str, reaction: Expr) -> Self {
        PerturbedEquation { name: name.to_string(), reaction: reaction.canon() }
    }

    /// The full equation as a one-dependent system over `(x, t | u)` with
    /// `eps` as a parameter.
    pub fn full_system(&self) -> Result<PDESystem, DetError> {
        let space = JetSpace::new(&["x", "t"], &["u"], 4)?;
        let rhs = Expr::sym("eps") * Expr::jet("u", &["x", "x"]) + self.reaction.clone();
        let mut params = vec!["eps".to_string()];
        for c in self.reaction.free_coords() {
            if let Coord::Sym(s) = c {
                if s != "u" && s != "pi" && !params.contains(&s) {
                    params.push(s);
                }
            }
        }
        let param_refs: Vec<&str> = params.iter().map(|s| s.as_str()).collect();
        PDESystem::new(
            space,
            vec![(JetVar::new("u", &["t"]), rhs)],
            &param_refs,
        )
    }

    /// Non-`u` symbols of the reaction term.
    pub fn reaction_parameters(&self) -> Vec<String> {
        self.reaction
            .free_coords()
            .into_iter()
            .filter_map(|c| match c {
                Coord::Sym(s) if s != "u" && s != "pi" => Some(s),
                _ => None,
            })
            .collect()
    }
}

/// Splits the equation at first order in `eps`.
///
/// Substituting `u = v + eps*w` and collecting powers of `eps` gives the
/// order-0 equation `v_t = R(v)` and the order-1 equation
/// `w_t = v_xx + R'(v) w` (the `eps*u_xx` term contributes `v_xx` at order
/// one and nothing at order zero). Fails with `NonPolynomial` when `R` is
/// not polynomial in `u`.
pub fn split_order1(eq: &PerturbedEquation) -> Result<PDESystem, DetError> {
    // reaction must be polynomial in u
    eq.reaction
        .expand_collect(&[Coord::sym("u")])
        .map_err(|e| DetError::Collect(e))?;

    let substituted = eq.reaction.substitute(
        &Binding::new().set("u", Expr::sym("v") + Expr::sym("eps") * Expr::sym("w")),
    );
    let by_eps = substituted.expand_collect(&[Coord::sym("eps")])?;

    let order0_reaction = by_eps.coefficient_deg(0);
    let order1_reaction = by_eps.coefficient_deg(1);

    // consistency: the order-0 part is R(v)
    let r_of_v = eq
        .reaction
        .substitute(&Binding::new().set("u", Expr::sym("v")));
    if (order0_reaction.clone() - r_of_v).canon() != Expr::zero() {
        return Err(DetError::Collect(CollectError::NonPolynomial("eps".into())));
    }

    let space = JetSpace::new(&["x", "t"], &["v", "w"], 4)?;
    let eq0 = (JetVar::new("v", &["t"]), order0_reaction);
    let eq1 = (
        JetVar::new("w", &["t"]),
        Expr::jet("v", &["x", "x"]) + order1_reaction,
    );
    let params = eq.reaction_parameters();
    let param_refs: Vec<&str> = params.iter().map(|s| s.as_str()).collect();
    PDESystem::new(space, vec![eq0, eq1], &param_refs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fisher() -> PerturbedEquation {
        PerturbedEquation::new("fisher", parse("a*u*(1 - u)").unwrap())
    }

    fn canon_eq(sys: &PDESystem, dep: &str, rhs: &str) {
        let got = sys.rhs_for(dep).expect(dep).clone();
        let want = parse(rhs).unwrap();
        assert_eq!(got, want, "{dep}: got {got}, want {want}");
    }

    #[test]
    fn fisher_split_matches_derived_form() {
        let sys = split_order1(&fisher()).unwrap();
        canon_eq(&sys, "v", "a*v*(1 - v)");
        canon_eq(&sys, "w", "v_xx + a*w*(1 - 2*v)");
    }

    #[test]
    fn zeldovich_split() {
        let eq = PerturbedEquation::new("zeldovich", parse("u^2*(1 - u)").unwrap());
        let sys = split_order1(&eq).unwrap();
        canon_eq(&sys, "v", "v^2*(1 - v)");
        // printed as w_t - v_xx - 2vw(1-v) + v^2 w = 0, algebraically equal
        canon_eq(&sys, "w", "v_xx + 2*v*w - 3*v^2*w");
    }

    #[test]
    fn nws_split_matches_taylor_oracle() {
        let eq = PerturbedEquation::new("nws", parse("u*(1 - u^2)").unwrap());
        let sys = split_order1(&eq).unwrap();
        canon_eq(&sys, "v", "v*(1 - v^2)");
        canon_eq(&sys, "w", "v_xx + w*(1 - 3*v^2)");
    }

    #[test]
    fn non_polynomial_reaction_is_rejected() {
        let eq = PerturbedEquation::new("bad", parse("exp(u)").unwrap());
        assert!(split_order1(&eq).is_err());
    }

    /// Order-1 reaction equals dR/du at v, times w, for random polynomials.
    #[test]
    fn generic_reaction_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let deg = rng.random_range(0..=5usize);
            let mut terms = Vec::new();
            for k in 0..=deg {
                let num = rng.random_range(-6i64..=6);
                let den = rng.random_range(1i64..=4);
                terms.push(
                    Expr::ratio(num, den) * Expr::sym("u").pow_int(k as i64),
                );
            }
            let reaction = terms
                .into_iter()
                .fold(Expr::zero(), |acc, t| acc + t);
            let eq = PerturbedEquation::new("random", reaction.clone());
            let sys = split_order1(&eq).unwrap();

            let dr = reaction
                .differentiate("u")
                .substitute(&Binding::new().set("u", Expr::sym("v")));
            let want = Expr::jet("v", &["x", "x"]) + dr * Expr::sym("w");
            let got = sys.rhs_for("w").unwrap().clone();
            assert_eq!(got, want.canon());
        }
    }

    /// Plugging u = v + eps*w back into the full equation and subtracting
    /// (order-0) + eps*(order-1) leaves a remainder divisible by eps^2.
    #[test]
    fn resubstitution_leaves_eps2_defect() {
        let eps = Expr::sym("eps");
        for reaction in ["a*u*(1 - u)", "u^2*(1 - u)", "u*(1 - u^2)"] {
            let eq = PerturbedEquation::new("check", parse(reaction).unwrap());
            let sys = split_order1(&eq).unwrap();
            // expand u and its jets
            let expand = Binding::new()
                .set("u", parse("v + eps*w").unwrap())
                .set("u_t", parse("v_t + eps*w_t").unwrap())
                .set("u_xx", parse("v_xx + eps*w_xx").unwrap());
            let full_delta = (Expr::jet("u", &["t"])
                - eps.clone() * Expr::jet("u", &["x", "x"])
                - eq.reaction.clone())
            .substitute(&expand);
            let delta0 = Expr::jet("v", &["t"]) - sys.rhs_for("v").unwrap().clone();
            let delta1 = Expr::jet("w", &["t"]) - sys.rhs_for("w").unwrap().clone();
            let remainder = (full_delta - delta0 - eps.clone() * delta1).canon();
            let m = remainder.expand_collect(&[Coord::sym("eps")]).unwrap();
            assert_eq!(m.coefficient_deg(0), Expr::zero());
            assert_eq!(m.coefficient_deg(1), Expr::zero());
            assert!(m.max_total_degree() >= 2 || remainder.is_zero());
        }
    }
}
