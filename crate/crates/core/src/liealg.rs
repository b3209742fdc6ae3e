//! Finite-dimensional Lie-algebra arithmetic on vector fields: commutators,
//! structure constants, the adjoint representation, and the one-dimensional
//! optimal-system canonicalization.

use num::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::expr::{q_int, Expr, Func, Q};
use crate::jet::{JetError, VectorField};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum LieError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("commutator [X{i}, X{j}] does not lie in the span of the basis")]
    NotClosed { i: usize, j: usize },
    #[error("adjoint series does not close for basis element {0}")]
    SeriesNotClosing(usize),
    #[error("basis coefficients are not polynomial enough for the span solve")]
    UnsupportedCoefficients,
    #[error("zero element has no canonical form")]
    ZeroElement,
    #[error("canonicalization is specific to the three-dimensional algebra [X2,X3] = X2")]
    UnsupportedAlgebra,
    #[error("element has wrong dimension")]
    DimensionMismatch,
}

/// Commutator of two vector fields on the same space:
/// `[X,Y]^k = X(Y^k) - Y(X^k)` coordinate-wise.
pub fn commutator(x: &VectorField, y: &VectorField) -> Result<VectorField, LieError> {
    if x.space != y.space {
        return Err(LieError::Jet(JetError::BadField("space mismatch".into())));
    }
    let mut coeffs: Vec<(String, Expr)> = Vec::new();
    for coord in x.space.base_coords() {
        let e = x.apply_base(&y.coeff(&coord)) - y.apply_base(&x.coeff(&coord));
        coeffs.push((coord, e));
    }
    let refs: Vec<(&str, Expr)> = coeffs.iter().map(|(n, e)| (n.as_str(), e.clone())).collect();
    Ok(VectorField::new(x.space.clone(), &refs)?)
}

/// Element of the algebra in a fixed basis; coefficients are expressions so
/// adjoint orbits with `e^s` factors stay exact.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    pub coeffs: Vec<Expr>,
}

impl AlgebraElement {
    pub fn from_rationals(coeffs: &[Q]) -> Self {
        AlgebraElement {
            coeffs: coeffs.iter().map(|q| Expr::Rational(q.clone())).collect(),
        }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        AlgebraElement {
            coeffs: coeffs.iter().map(|n| Expr::int(*n)).collect(),
        }
    }

    pub fn basis(dim: usize, j: usize) -> Self {
        let mut coeffs = vec![Expr::zero(); dim];
        coeffs[j] = Expr::one();
        AlgebraElement { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn scale(&self, q: &Q) -> Self {
        AlgebraElement {
            coeffs: self.coeffs.iter().map(|c| c.scale(q)).collect(),
        }
    }

    pub fn rational_coeffs(&self) -> Option<Vec<Q>> {
        self.coeffs
            .iter()
            .map(|c| c.as_rational().cloned())
            .collect()
    }

    /// Renders as a combination of labeled basis vectors, e.g. `X3 - s*X2`.
    pub fn display_with(&self, labels: &[String]) -> String {
        let terms: Vec<Expr> = self
            .coeffs
            .iter()
            .zip(labels)
            .map(|(c, l)| c.clone() * Expr::sym(l))
            .collect();
        let combined = terms.into_iter().fold(Expr::zero(), |a, t| a + t);
        combined.to_string()
    }
}

/// Ordered basis plus the exact structure-constant tensor
/// `[X_i, X_j] = sum_k c[i][j][k] X_k`.
#[derive(Clone, Debug)]
pub struct LieAlgebra {
    pub basis: Vec<VectorField>,
    pub labels: Vec<String>,
    pub structure: Vec<Vec<Vec<Q>>>,
}

/// Computes the structure constants of a basis, checking closure by an exact
/// linear solve over the coefficient monomials.
pub fn structure_constants(basis: Vec<VectorField>) -> Result<LieAlgebra, LieError> {
    let n = basis.len();
    let mut structure = vec![vec![vec![Q::zero(); n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let bracket = commutator(&basis[i], &basis[j])?;
            let coeffs = solve_in_span(&bracket, &basis)
                .ok_or(LieError::NotClosed { i: i + 1, j: j + 1 })?;
            structure[i][j] = coeffs;
        }
    }
    let labels = (1..=n).map(|k| format!("X{k}")).collect();
    let algebra = LieAlgebra { basis, labels, structure };
    debug_assert!(algebra.antisymmetry_holds() && algebra.jacobi_holds());
    Ok(algebra)
}

/// Expresses `target` as a rational combination of `basis` fields, by exact
/// Gaussian elimination over the (coordinate, monomial) incidence matrix.
fn solve_in_span(target: &VectorField, basis: &[VectorField]) -> Option<Vec<Q>> {
    use crate::expr::Coord;
    let n = basis.len();
    // unknown marker symbols c__k must not collide with field coefficients
    let marker = |k: usize| format!("c__{k}");
    let mut expr = Expr::zero();
    for coord in target.space.base_coords() {
        // target^coord - sum_k c__k basis_k^coord, tagged by a coordinate
        // marker so different coordinates stay separated
        let tag = Expr::sym(&format!("coordtag__{coord}"));
        let mut diff = target.coeff(&coord);
        for (k, b) in basis.iter().enumerate() {
            diff = diff - Expr::sym(&marker(k)) * b.coeff(&coord);
        }
        expr = expr + tag * diff;
    }
    // collect linear equations in the markers: group by everything else
    let marker_coords: Vec<Coord> = (0..n).map(|k| Coord::sym(&marker(k))).collect();
    let collected = expr.expand_collect(&marker_coords).ok()?;

    // rows: monomials of the constant part and of each marker coefficient
    let mut rows: std::collections::BTreeMap<Expr, (Vec<Q>, Q)> =
        std::collections::BTreeMap::new();
    for (degs, coeff) in &collected.terms {
        let total: u32 = degs.iter().sum();
        if total > 1 {
            return None;
        }
        let which = degs.iter().position(|d| *d == 1);
        // split the coefficient into monomial parts with rational weights
        for (weight, key) in split_rational_terms(coeff) {
            let entry = rows
                .entry(key)
                .or_insert_with(|| (vec![Q::zero(); n], Q::zero()));
            match which {
                Some(k) => entry.0[k] += weight,
                None => entry.1 += weight,
            }
        }
    }

    // solve sum_k a_k * col_k = -const  (markers entered with minus sign)
    let mut mat: Vec<Vec<Q>> = Vec::new();
    let mut rhs: Vec<Q> = Vec::new();
    for (_, (row, c)) in rows {
        mat.push(row.iter().map(|v| -v.clone()).collect());
        rhs.push(-c.clone());
    }
    gauss_solve(mat, rhs, n)
}

/// Splits a canonical expression into (rational weight, monic monomial) parts.
fn split_rational_terms(e: &Expr) -> Vec<(Q, Expr)> {
    fn one_term(t: &Expr) -> (Q, Expr) {
        match t {
            Expr::Rational(r) => (r.clone(), Expr::one()),
            Expr::Product(ch) => {
                if let Some(Expr::Rational(r)) = ch.first() {
                    let rest: Vec<Expr> = ch[1..].to_vec();
                    let body = if rest.len() == 1 {
                        rest.into_iter().next().expect("one")
                    } else {
                        Expr::Product(rest)
                    };
                    (r.clone(), body)
                } else {
                    (Q::one(), t.clone())
                }
            }
            other => (Q::one(), other.clone()),
        }
    }
    match e {
        Expr::Sum(ch) => ch.iter().map(one_term).collect(),
        other => vec![one_term(other)],
    }
}

/// Exact least-constraints Gaussian elimination; returns None when the
/// system is inconsistent.
fn gauss_solve(mut mat: Vec<Vec<Q>>, mut rhs: Vec<Q>, n: usize) -> Option<Vec<Q>> {
    let rows = mat.len();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; n];
    let mut r = 0usize;
    for c in 0..n {
        let Some(p) = (r..rows).find(|&i| !mat[i][c].is_zero()) else {
            continue;
        };
        mat.swap(r, p);
        rhs.swap(r, p);
        let inv = Q::one() / mat[r][c].clone();
        for v in mat[r].iter_mut() {
            *v *= inv.clone();
        }
        rhs[r] *= inv;
        for i in 0..rows {
            if i != r && !mat[i][c].is_zero() {
                let f = mat[i][c].clone();
                for k in 0..n {
                    let delta = &f * &mat[r][k];
                    mat[i][k] -= delta;
                }
                let delta = &f * &rhs[r];
                rhs[i] -= delta;
            }
        }
        pivot_of_col[c] = Some(r);
        r += 1;
        if r == rows {
            break;
        }
    }
    // inconsistency: zero row with nonzero rhs
    for i in 0..rows {
        if mat[i].iter().all(|v| v.is_zero()) && !rhs[i].is_zero() {
            return None;
        }
    }
    let mut sol = vec![Q::zero(); n];
    for c in 0..n {
        if let Some(p) = pivot_of_col[c] {
            sol[c] = rhs[p].clone();
        }
    }
    Some(sol)
}

/// Which closed form the adjoint series takes for one `ad` operator.
enum AdKind {
    /// `ad^m = 0`: the series is a polynomial of degree < m
    Nilpotent(usize),
    /// `ad` is diagonal with integer eigenvalues: coefficients scale by
    /// `exp(-lambda_j s)`
    Diagonal(Vec<i64>),
}

impl LieAlgebra {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `[X_i, X_j]` as an element in the basis.
    pub fn bracket(&self, i: usize, j: usize) -> AlgebraElement {
        AlgebraElement::from_rationals(&self.structure[i][j])
    }

    pub fn antisymmetry_holds(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| {
            (0..n).all(|j| {
                (0..n).all(|k| self.structure[i][j][k] == -self.structure[j][i][k].clone())
            })
        })
    }

    pub fn jacobi_holds(&self) -> bool {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for m in 0..n {
                        // sum over cyclic permutations of [[Xi,Xj],Xk]
                        let mut total = Q::zero();
                        for &(a, b, c) in &[(i, j, k), (j, k, i), (k, i, j)] {
                            for l in 0..n {
                                total += self.structure[a][b][l].clone()
                                    * self.structure[l][c][m].clone();
                            }
                        }
                        if !total.is_zero() {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Matrix of `ad_{X_i}` acting on column coefficient vectors:
    /// `A[k][j] = c[i][j][k]`.
    fn ad_matrix(&self, i: usize) -> Vec<Vec<Q>> {
        let n = self.dim();
        let mut a = vec![vec![Q::zero(); n]; n];
        for j in 0..n {
            for k in 0..n {
                a[k][j] = self.structure[i][j][k].clone();
            }
        }
        a
    }

    fn ad_kind(&self, i: usize) -> Result<AdKind, LieError> {
        let n = self.dim();
        let a = self.ad_matrix(i);
        // diagonal with integer entries?
        let mut diagonal = true;
        let mut eigen = Vec::with_capacity(n);
        'outer: for j in 0..n {
            for k in 0..n {
                if k != j && !a[k][j].is_zero() {
                    diagonal = false;
                    break 'outer;
                }
            }
            match (a[j][j].is_integer(), a[j][j].to_integer().to_i64()) {
                (true, Some(l)) => eigen.push(l),
                _ => {
                    diagonal = false;
                    break;
                }
            }
        }
        if diagonal {
            return Ok(AdKind::Diagonal(eigen));
        }
        // nilpotent within 50 powers?
        let mut power = a.clone();
        for m in 1..=50usize {
            if power.iter().all(|row| row.iter().all(|v| v.is_zero())) {
                return Ok(AdKind::Nilpotent(m));
            }
            power = mat_mul(&power, &a);
        }
        Err(LieError::SeriesNotClosing(i + 1))
    }

    /// Adjoint action `Ad(exp(s X_i)) Y = Y - s[X_i,Y] + s^2/2 [X_i,[X_i,Y]] - ...`
    /// summed in closed form.
    pub fn adjoint(&self, i: usize, s: &Expr, y: &AlgebraElement) -> Result<AlgebraElement, LieError> {
        let n = self.dim();
        if y.coeffs.len() != n {
            return Err(LieError::DimensionMismatch);
        }
        match self.ad_kind(i)? {
            AdKind::Diagonal(eigen) => {
                // component j picks up exp(-lambda_j s)
                let coeffs = y
                    .coeffs
                    .iter()
                    .zip(&eigen)
                    .map(|(c, l)| {
                        if *l == 0 {
                            c.clone()
                        } else {
                            let arg = Expr::int(-l) * s.clone();
                            c.clone() * Expr::Call(Func::Exp, Box::new(arg)).canon()
                        }
                    })
                    .collect();
                Ok(AlgebraElement { coeffs })
            }
            AdKind::Nilpotent(m) => {
                let a = self.ad_matrix(i);
                // term_0 = Y; term_p = (-s)/p * A term_(p-1)
                let mut coeffs: Vec<Expr> = y.coeffs.clone();
                let mut term: Vec<Expr> = y.coeffs.clone();
                for p in 1..m {
                    let mut next = vec![Expr::zero(); n];
                    for k in 0..n {
                        let mut acc = Expr::zero();
                        for j in 0..n {
                            if !a[k][j].is_zero() {
                                acc = acc + term[j].clone().scale(&a[k][j]);
                            }
                        }
                        let factor =
                            Expr::Rational(-Q::one() / q_int(p as i64)) * s.clone();
                        next[k] = factor * acc;
                    }
                    for k in 0..n {
                        coeffs[k] = coeffs[k].clone() + next[k].clone();
                    }
                    term = next;
                }
                Ok(AlgebraElement { coeffs })
            }
        }
    }

    /// Matrix of `F_i^s : X -> Ad(exp(s X_i)) X` with the image of `X_j` in
    /// row `j` (row-vector convention).
    pub fn adjoint_matrix(&self, i: usize, s: &Expr) -> Result<Vec<Vec<Expr>>, LieError> {
        let n = self.dim();
        let mut rows = Vec::with_capacity(n);
        for j in 0..n {
            let image = self.adjoint(i, s, &AlgebraElement::basis(n, j))?;
            rows.push(image.coeffs);
        }
        Ok(rows)
    }
}

fn mat_mul(a: &[Vec<Q>], b: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let n = a.len();
    let mut out = vec![vec![Q::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = Q::zero();
            for k in 0..n {
                acc += a[i][k].clone() * b[k][j].clone();
            }
            out[i][j] = acc;
        }
    }
    out
}

/// Optimal-system case for the three-dimensional algebra with
/// `[X2, X3] = X2` (all other brackets zero).
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum OptCase {
    I,
    II,
    III,
}

impl std::fmt::Display for OptCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OptCase::I => write!(f, "i"),
            OptCase::II => write!(f, "ii"),
            OptCase::III => write!(f, "iii"),
        }
    }
}

/// Canonicalization certificate: adjoint steps and a scaling that carry the
/// input exactly onto the canonical representative.
#[derive(Clone, Debug)]
pub struct Canonicalization {
    pub case: OptCase,
    pub canonical: AlgebraElement,
    /// (basis index, parameter) adjoint steps, applied in order
    pub witness: Vec<(usize, Q)>,
    pub scale: Q,
    /// the free constant of the representative (alpha for case ii, beta for
    /// case iii)
    pub constant: Option<Q>,
}

impl LieAlgebra {
    fn is_kpp3_structure(&self) -> bool {
        if self.dim() != 3 {
            return false;
        }
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let want = if (i, j, k) == (1, 2, 1) {
                        Q::one()
                    } else if (i, j, k) == (2, 1, 1) {
                        -Q::one()
                    } else {
                        Q::zero()
                    };
                    if self.structure[i][j][k] != want {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Canonical representative of a nonzero element under the adjoint
    /// action and scaling.
    ///
    /// The orbit invariants of this algebra are `a1` and `a3`
    /// (`Ad(exp(s X2))` shifts `a2` by `-s a3`, `Ad(exp(s X3))` scales `a2`
    /// by `e^s`, and `X1` is central), so:
    ///   case i:   a2 = a3 = 0        -> X1
    ///   case ii:  a3 = 0, a2 != 0    -> alpha X1 + X2, alpha = a1/a2
    ///   case iii: a3 != 0            -> beta X1 + X3,  beta  = a1/a3
    /// Replaying the witness through `adjoint` reproduces `canonical`
    /// exactly.
    pub fn canonicalize(&self, element: &AlgebraElement) -> Result<Canonicalization, LieError> {
        if !self.is_kpp3_structure() {
            return Err(LieError::UnsupportedAlgebra);
        }
        let coeffs = element
            .rational_coeffs()
            .ok_or(LieError::UnsupportedCoefficients)?;
        if coeffs.len() != 3 {
            return Err(LieError::DimensionMismatch);
        }
        let (a1, a2, a3) = (coeffs[0].clone(), coeffs[1].clone(), coeffs[2].clone());
        if a1.is_zero() && a2.is_zero() && a3.is_zero() {
            return Err(LieError::ZeroElement);
        }

        if !a3.is_zero() {
            // kill a2 with Ad(exp(s X2)): a2 -> a2 - s a3
            let mut witness = Vec::new();
            if !a2.is_zero() {
                witness.push((1usize, a2.clone() / a3.clone()));
            }
            let scale = Q::one() / a3.clone();
            let beta = a1 / a3;
            let canonical = AlgebraElement {
                coeffs: vec![Expr::Rational(beta.clone()), Expr::zero(), Expr::one()],
            };
            return Ok(Canonicalization {
                case: OptCase::III,
                canonical,
                witness,
                scale,
                constant: Some(beta),
            });
        }
        if !a2.is_zero() {
            let scale = Q::one() / a2.clone();
            let alpha = a1 / a2;
            let canonical = AlgebraElement {
                coeffs: vec![Expr::Rational(alpha.clone()), Expr::one(), Expr::zero()],
            };
            return Ok(Canonicalization {
                case: OptCase::II,
                canonical,
                witness: Vec::new(),
                scale,
                constant: Some(alpha),
            });
        }
        let scale = Q::one() / a1;
        Ok(Canonicalization {
            case: OptCase::I,
            canonical: AlgebraElement::from_ints(&[1, 0, 0]),
            witness: Vec::new(),
            scale,
            constant: None,
        })
    }

    /// Applies a canonicalization certificate to an element: adjoint steps
    /// in order, then the scaling.
    pub fn replay(
        &self,
        element: &AlgebraElement,
        cert: &Canonicalization,
    ) -> Result<AlgebraElement, LieError> {
        let mut cur = element.clone();
        for (i, s) in &cert.witness {
            cur = self.adjoint(*i, &Expr::Rational(s.clone()), &cur)?;
        }
        Ok(cur.scale(&cert.scale))
    }
}
