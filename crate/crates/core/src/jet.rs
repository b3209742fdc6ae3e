//! Jet-space bookkeeping: total derivatives and second-order prolongation of
//! vector fields.
//!
//! A [`JetSpace`] declares independent and dependent variables together with
//! the highest derivative order the space admits. Dependent variables appear
//! in expressions as plain symbols (order 0) and as [`JetVar`]s (order >= 1).
//! Total derivatives may chain through a tower of spaces: in the determining
//! machinery the unknown infinitesimals are dependents of an auxiliary space
//! whose independents are the base coordinates of the primary space.

use std::collections::BTreeMap;

use num::One;
use thiserror::Error;

use crate::expr::{Coord, Expr, JetVar, Q};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum JetError {
    #[error("jet order {order} of `{var}` exceeds max_order {max}")]
    OrderOverflow { var: String, order: usize, max: usize },
    #[error("invalid jet space: {0}")]
    BadSpace(String),
    #[error("invalid vector field: {0}")]
    BadField(String),
}

/// Coordinate chart for a jet bundle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetSpace {
    pub independent: Vec<String>,
    pub dependent: Vec<String>,
    pub max_order: usize,
}

impl JetSpace {
    pub fn new(
        independent: &[&str],
        dependent: &[&str],
        max_order: usize,
    ) -> Result<Self, JetError> {
        let independent: Vec<String> = independent.iter().map(|s| s.to_string()).collect();
        let dependent: Vec<String> = dependent.iter().map(|s| s.to_string()).collect();
        let mut all: Vec<&String> = independent.iter().chain(dependent.iter()).collect();
        all.sort();
        for w in all.windows(2) {
            if w[0] == w[1] {
                return Err(JetError::BadSpace(format!("duplicate name `{}`", w[0])));
            }
        }
        if independent.is_empty() || dependent.is_empty() {
            return Err(JetError::BadSpace("empty variable list".into()));
        }
        Ok(JetSpace { independent, dependent, max_order })
    }

    pub fn is_independent(&self, name: &str) -> bool {
        self.independent.iter().any(|s| s == name)
    }

    pub fn is_dependent(&self, name: &str) -> bool {
        self.dependent.iter().any(|s| s == name)
    }

    /// Base coordinates: independents then dependents.
    pub fn base_coords(&self) -> Vec<String> {
        self.independent
            .iter()
            .chain(self.dependent.iter())
            .cloned()
            .collect()
    }

    /// All jet variables of the given order (sorted multi-indices).
    pub fn jets_of_order(&self, order: usize) -> Vec<JetVar> {
        let mut out = Vec::new();
        for dep in &self.dependent {
            for idx in multisets(&self.independent, order) {
                out.push(JetVar { dep: dep.clone(), index: idx });
            }
        }
        out
    }

    /// Jet variables of order 1..=max.
    pub fn jets_up_to(&self, max: usize) -> Vec<JetVar> {
        (1..=max).flat_map(|k| self.jets_of_order(k)).collect()
    }

    fn with_max_order(&self, max_order: usize) -> JetSpace {
        JetSpace { max_order, ..self.clone() }
    }
}

/// Sorted multisets of size `k` over `names`.
fn multisets(names: &[String], k: usize) -> Vec<Vec<String>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    fn rec(names: &[String], start: usize, k: usize, cur: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
        if k == 0 {
            let mut m = cur.clone();
            m.sort();
            out.push(m);
            return;
        }
        for i in start..names.len() {
            cur.push(names[i].clone());
            rec(names, i, k - 1, cur, out);
            cur.pop();
        }
    }
    rec(names, 0, k, &mut Vec::new(), &mut out);
    out
}

/// Infinitesimal generator: one coefficient expression per base coordinate.
///
/// Coefficients live in the base variables (order-0 only); missing entries
/// mean zero.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub space: JetSpace,
    pub coeffs: BTreeMap<String, Expr>,
}

impl VectorField {
    pub fn new(space: JetSpace, coeffs: &[(&str, Expr)]) -> Result<Self, JetError> {
        let mut map = BTreeMap::new();
        for (name, e) in coeffs {
            if !space.is_independent(name) && !space.is_dependent(name) {
                return Err(JetError::BadField(format!(
                    "`{name}` is not a coordinate of the space"
                )));
            }
            let e = e.canon();
            if e.max_jet_order() > 0 {
                return Err(JetError::BadField(format!(
                    "coefficient of `{name}` contains jet variables"
                )));
            }
            if !e.is_zero() {
                map.insert(name.to_string(), e);
            }
        }
        Ok(VectorField { space, coeffs: map })
    }

    pub fn coeff(&self, name: &str) -> Expr {
        self.coeffs.get(name).cloned().unwrap_or_else(Expr::zero)
    }

    /// Applies the field as a derivation on a base-variable expression.
    pub fn apply_base(&self, e: &Expr) -> Expr {
        let mut terms = Vec::new();
        for (name, coeff) in &self.coeffs {
            let de = e.differentiate(name);
            terms.push(Expr::Product(vec![coeff.clone(), de]));
        }
        Expr::Sum(terms).canon()
    }

    /// Coefficient-wise linear combination `a*self + b*other`.
    pub fn combine(&self, a: &Q, other: &VectorField, b: &Q) -> Result<VectorField, JetError> {
        if self.space != other.space {
            return Err(JetError::BadField("space mismatch".into()));
        }
        let mut coeffs: Vec<(String, Expr)> = Vec::new();
        let names: std::collections::BTreeSet<&String> =
            self.coeffs.keys().chain(other.coeffs.keys()).collect();
        for name in names {
            let e = self.coeff(name).scale(a) + other.coeff(name).scale(b);
            coeffs.push((name.clone(), e));
        }
        let borrowed: Vec<(&str, Expr)> =
            coeffs.iter().map(|(n, e)| (n.as_str(), e.clone())).collect();
        VectorField::new(self.space.clone(), &borrowed)
    }

    pub fn scale(&self, a: &Q) -> VectorField {
        let coeffs: BTreeMap<String, Expr> = self
            .coeffs
            .iter()
            .map(|(n, e)| (n.clone(), e.scale(a)))
            .filter(|(_, e)| !e.is_zero())
            .collect();
        VectorField { space: self.space.clone(), coeffs }
    }
}

/// A vector field together with its jet coefficients up to order 2.
#[derive(Clone, Debug, PartialEq)]
pub struct ProlongedField {
    pub base: VectorField,
    pub jet_coeffs: BTreeMap<JetVar, Expr>,
}

impl ProlongedField {
    pub fn jet_coeff(&self, jv: &JetVar) -> Expr {
        self.jet_coeffs.get(jv).cloned().unwrap_or_else(Expr::zero)
    }

    /// Applies the prolonged derivation to an expression of order <= 2.
    pub fn apply(&self, e: &Expr) -> Expr {
        let mut terms = Vec::new();
        for (name, coeff) in &self.base.coeffs {
            terms.push(Expr::Product(vec![
                coeff.clone(),
                e.differentiate_coord(&Coord::sym(name)),
            ]));
        }
        for (jv, coeff) in &self.jet_coeffs {
            terms.push(Expr::Product(vec![
                coeff.clone(),
                e.differentiate_coord(&Coord::Jet(jv.clone())),
            ]));
        }
        Expr::Sum(terms).canon()
    }
}

/// Total derivative `D_xi` over a single jet space.
pub fn total_derivative(e: &Expr, xi: &str, space: &JetSpace) -> Result<Expr, JetError> {
    total_derivative_tower(e, xi, &[space])
}

/// Total derivative through a tower of jet spaces. The first space is the
/// primary one; later spaces declare functions of earlier base coordinates
/// (their independents may be dependents of earlier spaces).
pub fn total_derivative_tower(
    e: &Expr,
    xi: &str,
    spaces: &[&JetSpace],
) -> Result<Expr, JetError> {
    let mut terms = vec![e.differentiate(xi)];
    for coord in e.free_coords() {
        let lifted = d_coord(&coord, xi, spaces)?;
        if lifted.is_zero() {
            continue;
        }
        let de = e.differentiate_coord(&coord);
        terms.push(Expr::Product(vec![de, lifted]));
    }
    Ok(Expr::Sum(terms).canon())
}

/// Total x-derivative of a single coordinate leaf.
fn d_coord(coord: &Coord, xi: &str, spaces: &[&JetSpace]) -> Result<Expr, JetError> {
    match coord {
        Coord::Sym(s) => {
            if s == xi {
                return Ok(Expr::one());
            }
            for (li, space) in spaces.iter().enumerate() {
                if space.is_dependent(s) {
                    return lift_jet(
                        &JetVar { dep: s.clone(), index: vec![] },
                        xi,
                        li,
                        spaces,
                    );
                }
            }
            Ok(Expr::zero())
        }
        Coord::Jet(j) => {
            for (li, space) in spaces.iter().enumerate() {
                if space.is_dependent(&j.dep) {
                    return lift_jet(j, xi, li, spaces);
                }
            }
            // jets of undeclared dependents are inert
            Ok(Expr::zero())
        }
    }
}

/// Chain rule for a jet of space `li`: `D_xi u_J = sum_b u_{J,b} D_xi b`.
fn lift_jet(
    j: &JetVar,
    xi: &str,
    li: usize,
    spaces: &[&JetSpace],
) -> Result<Expr, JetError> {
    let space = spaces[li];
    let mut terms = Vec::new();
    for b in &space.independent {
        let db = d_coord(&Coord::Sym(b.clone()), xi, spaces)?;
        if db.is_zero() {
            continue;
        }
        let extended = j.extend(b);
        if extended.order() > space.max_order {
            return Err(JetError::OrderOverflow {
                var: extended.to_string(),
                order: extended.order(),
                max: space.max_order,
            });
        }
        terms.push(Expr::Product(vec![Expr::Jet(extended), db]));
    }
    Ok(Expr::Sum(terms).canon())
}

/// Second prolongation via the characteristic form
/// `Q^a = phi^a - sum_i xi^i u^a_i`, `phi^J_a = D_J Q^a + sum_i xi^i u^a_{J,i}`.
pub fn prolong2(field: &VectorField) -> Result<ProlongedField, JetError> {
    prolong2_tower(field, &[])
}

/// Prolongation whose internal total derivatives chain through extra spaces
/// (used when the field's coefficients contain unknown infinitesimals).
pub fn prolong2_tower(
    field: &VectorField,
    extra: &[&JetSpace],
) -> Result<ProlongedField, JetError> {
    let space = &field.space;
    if space.max_order < 2 {
        return Err(JetError::BadSpace("prolong2 needs max_order >= 2".into()));
    }
    // intermediate total derivatives reach order 3 before cancellation
    let work = space.with_max_order(space.max_order.max(3));
    let mut spaces: Vec<&JetSpace> = vec![&work];
    spaces.extend_from_slice(extra);

    let mut jet_coeffs = BTreeMap::new();
    for dep in &space.dependent {
        // characteristic Q = phi - sum_i xi^i u_i
        let mut q_terms = vec![field.coeff(dep)];
        for ind in &space.independent {
            let u_i = Expr::Jet(JetVar::new(dep, &[ind]));
            q_terms.push(Expr::Product(vec![
                Expr::int(-1),
                field.coeff(ind),
                u_i,
            ]));
        }
        let q = Expr::Sum(q_terms).canon();

        for order in 1..=2usize {
            for idx in multisets(&space.independent, order) {
                let jv = JetVar { dep: dep.clone(), index: idx.clone() };
                // D_J Q
                let mut dq = q.clone();
                for v in &idx {
                    dq = total_derivative_tower(&dq, v, &spaces)?;
                }
                // + sum_i xi^i u_{J,i}
                let mut terms = vec![dq];
                for ind in &space.independent {
                    let uji = Expr::Jet(jv.extend(ind));
                    terms.push(Expr::Product(vec![field.coeff(ind), uji]));
                }
                let coeff = Expr::Sum(terms).canon();
                debug_assert!(
                    coeff.max_jet_order() <= 2,
                    "prolongation coefficient of {jv} has order > 2"
                );
                jet_coeffs.insert(jv, coeff);
            }
        }
    }
    Ok(ProlongedField { base: field.clone(), jet_coeffs })
}

/// Per-order recursive prolongation formula
/// `phi^{J,i} = D_i phi^J - sum_k (D_i xi^k) u^a_{J,k}`.
///
/// Kept as an independent oracle for `prolong2`; the two routes must agree
/// symbolically.
pub fn prolong2_recursive(field: &VectorField) -> Result<ProlongedField, JetError> {
    let space = &field.space;
    let work = space.with_max_order(space.max_order.max(3));
    let spaces: Vec<&JetSpace> = vec![&work];
    let mut jet_coeffs: BTreeMap<JetVar, Expr> = BTreeMap::new();

    for dep in &space.dependent {
        // first order
        for ind in &space.independent {
            let jv = JetVar::new(dep, &[ind]);
            let mut terms = vec![total_derivative_tower(
                &field.coeff(dep),
                ind,
                &spaces,
            )?];
            for k in &space.independent {
                let dxi = total_derivative_tower(&field.coeff(k), ind, &spaces)?;
                let u_k = Expr::Jet(JetVar::new(dep, &[k]));
                terms.push(Expr::Product(vec![Expr::int(-1), dxi, u_k]));
            }
            jet_coeffs.insert(jv, Expr::Sum(terms).canon());
        }
        // second order, built from the first
        for idx in multisets(&space.independent, 2) {
            let jv = JetVar { dep: dep.clone(), index: idx.clone() };
            let (first, second) = (&idx[0], &idx[1]);
            let base_jv = JetVar::new(dep, &[first]);
            let phi_j = jet_coeffs
                .get(&base_jv)
                .cloned()
                .expect("first-order coefficient");
            let mut terms = vec![total_derivative_tower(&phi_j, second, &spaces)?];
            for k in &space.independent {
                let dxi = total_derivative_tower(&field.coeff(k), second, &spaces)?;
                let u_jk = Expr::Jet(base_jv.extend(k));
                terms.push(Expr::Product(vec![Expr::int(-1), dxi, u_jk]));
            }
            jet_coeffs.insert(jv, Expr::Sum(terms).canon());
        }
    }
    Ok(ProlongedField { base: field.clone(), jet_coeffs })
}

/// Coefficient-wise linear combination of prolonged fields (test helper for
/// the linearity law).
pub fn prolonged_combine(
    a: &Q,
    x: &ProlongedField,
    y: &ProlongedField,
) -> Result<ProlongedField, JetError> {
    let base = x.base.combine(a, &y.base, &Q::one())?;
    let keys: std::collections::BTreeSet<JetVar> = x
        .jet_coeffs
        .keys()
        .chain(y.jet_coeffs.keys())
        .cloned()
        .collect();
    let mut jet_coeffs = BTreeMap::new();
    for k in keys {
        let e = x.jet_coeff(&k).scale(a) + y.jet_coeff(&k);
        jet_coeffs.insert(k, e);
    }
    Ok(ProlongedField { base, jet_coeffs })
}
