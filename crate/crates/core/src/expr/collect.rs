//! Coefficient extraction: write an expression as a sum of monomials in a
//! chosen set of coordinates.

use std::collections::BTreeMap;

use num::{Signed, ToPrimitive};

use super::canon::{self, Atom, Monomial as CMonomial, Poly, RatForm};
use super::{CollectError, Coord, Expr};

/// Result of [`Expr::expand_collect`]: degree vector over `vars` mapped to a
/// coefficient expression free of `vars`.
#[derive(Clone, Debug)]
pub struct Monomials {
    pub vars: Vec<Coord>,
    pub terms: BTreeMap<Vec<u32>, Expr>,
}

impl Monomials {
    /// Coefficient for a degree vector (zero if absent).
    pub fn coefficient(&self, degrees: &[u32]) -> Expr {
        self.terms
            .get(degrees)
            .cloned()
            .unwrap_or_else(Expr::zero)
    }

    /// Coefficient of the monomial of total degree `deg` in a single
    /// collection variable.
    pub fn coefficient_deg(&self, deg: u32) -> Expr {
        assert_eq!(self.vars.len(), 1, "coefficient_deg needs one variable");
        self.coefficient(&[deg])
    }

    pub fn max_total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|k| k.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Re-assembles `sum coeff * monomial`.
    pub fn reconstruct(&self) -> Expr {
        let mut terms = Vec::new();
        for (degs, coeff) in &self.terms {
            let mut factors = vec![coeff.clone()];
            for (i, d) in degs.iter().enumerate() {
                if *d > 0 {
                    factors.push(Expr::Power(
                        Box::new(self.vars[i].to_expr()),
                        Box::new(Expr::int(*d as i64)),
                    ));
                }
            }
            terms.push(Expr::Product(factors));
        }
        Expr::Sum(terms).canon()
    }
}

fn coord_atom(c: &Coord) -> Atom {
    match c {
        Coord::Sym(s) => Atom::Sym(s.clone()),
        Coord::Jet(j) => Atom::Jet(j.clone()),
    }
}

fn atom_mentions_inside(a: &Atom, coord: &Coord) -> bool {
    let inner: Vec<&Expr> = match a {
        Atom::Sym(_) | Atom::Jet(_) => return false,
        Atom::Call(_, arg) => vec![arg],
        Atom::Exp(arg) => vec![arg],
        Atom::Pow(b, e) => vec![b, e],
        Atom::Opaque(s) => vec![s],
    };
    inner.iter().any(|e| e.free_coords().contains(coord))
}

pub(super) fn expand_collect(e: &Expr, vars: &[Coord]) -> Result<Monomials, CollectError> {
    let rf = canon::to_ratform(e);
    let var_atoms: Vec<Atom> = vars.iter().map(coord_atom).collect();

    let check_compound = |a: &Atom| -> Result<(), CollectError> {
        for (i, v) in vars.iter().enumerate() {
            if *a == var_atoms[i] {
                continue;
            }
            if atom_mentions_inside(a, v) {
                return Err(CollectError::NonPolynomial(v.to_string()));
            }
        }
        Ok(())
    };

    // denominator must be free of the collection variables
    for m in rf.den.0.keys() {
        for (a, _) in &m.0 {
            for (i, v) in vars.iter().enumerate() {
                if *a == var_atoms[i] {
                    return Err(CollectError::NonPolynomial(v.to_string()));
                }
            }
            check_compound(a)?;
        }
    }

    let mut groups: BTreeMap<Vec<u32>, Poly> = BTreeMap::new();
    for (m, c) in &rf.num.0 {
        let mut degrees = vec![0u32; vars.len()];
        let mut rest: Vec<(Atom, super::Q)> = Vec::new();
        for (a, exp) in &m.0 {
            if let Some(i) = var_atoms.iter().position(|v| v == a) {
                if !exp.is_integer() || exp.is_negative() {
                    return Err(CollectError::NonPolynomial(vars[i].to_string()));
                }
                let deg = exp
                    .to_integer()
                    .to_u32()
                    .ok_or_else(|| CollectError::NonPolynomial(vars[i].to_string()))?;
                degrees[i] = deg;
            } else {
                check_compound(a)?;
                rest.push((a.clone(), exp.clone()));
            }
        }
        groups
            .entry(degrees)
            .or_insert_with(Poly::zero)
            .0
            .insert(CMonomial(rest), c.clone());
    }

    let terms = groups
        .into_iter()
        .map(|(degs, poly)| {
            let coeff = canon::render(&RatForm { num: poly, den: rf.den.clone() });
            (degs, coeff)
        })
        .collect();

    Ok(Monomials { vars: vars.to_vec(), terms })
}
