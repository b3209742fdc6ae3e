//! Closed-form solution entries, grid residual evaluation, order-of-accuracy
//! scaling, one-parameter flows, and the induced action on solutions.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::detsys::{DetError, PDESystem};
use crate::expr::{Binding, Bound, CollectError, Coord, EvalError, Expr, JetVar};
use crate::jet::{JetError, VectorField};
use crate::perturb::PerturbedEquation;

pub use crate::special::{erf, lambert_w, LAMBERT_BRANCH_POINT};

/// Residuals below this are treated as numerically zero.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SolError {
    #[error(transparent)]
    Det(#[from] DetError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Collect(#[from] CollectError),
    #[error("{skipped} of {total} grid points failed to evaluate")]
    TooManySkipped { skipped: usize, total: usize },
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("vector field is not affine/decoupled in `{0}`")]
    NotAffine(String),
    #[error("invalid solution entry: {0}")]
    BadEntry(String),
}

/// Point predicate excluding a neighborhood of a singular locus.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Exclusion {
    /// skip points with |coord| < threshold
    AbsBelow { coord: String, threshold: f64 },
}

/// Rectangular evaluation grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub x_range: (f64, f64),
    pub t_range: (f64, f64),
    pub nx: usize,
    pub nt: usize,
    pub exclusions: Vec<Exclusion>,
}

impl Grid {
    pub fn new(
        x_range: (f64, f64),
        t_range: (f64, f64),
        nx: usize,
        nt: usize,
    ) -> Result<Self, SolError> {
        if nx < 2 || nt < 2 {
            return Err(SolError::BadGrid("nx and nt must be >= 2".into()));
        }
        for v in [x_range.0, x_range.1, t_range.0, t_range.1] {
            if !v.is_finite() {
                return Err(SolError::BadGrid("ranges must be finite".into()));
            }
        }
        Ok(Grid { x_range, t_range, nx, nt, exclusions: Vec::new() })
    }

    pub fn with_exclusion(mut self, e: Exclusion) -> Self {
        self.exclusions.push(e);
        self
    }

    fn excluded(&self, x: f64, t: f64) -> bool {
        self.exclusions.iter().any(|e| match e {
            Exclusion::AbsBelow { coord, threshold } => {
                let v = if coord == "x" { x } else { t };
                v.abs() < *threshold
            }
        })
    }

    /// Grid points in deterministic row-major order (x outer, t inner).
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.nx * self.nt);
        for ix in 0..self.nx {
            let x = self.x_range.0
                + (self.x_range.1 - self.x_range.0) * ix as f64 / (self.nx - 1) as f64;
            for it in 0..self.nt {
                let t = self.t_range.0
                    + (self.t_range.1 - self.t_range.0) * it as f64 / (self.nt - 1) as f64;
                out.push((x, t));
            }
        }
        out
    }
}

/// What a solution entry solves.
#[derive(Clone, Debug, PartialEq)]
pub enum EntryTarget {
    /// exact solution of the full perturbed equation
    Exact { equation: PerturbedEquation },
    /// order-0/order-1 pair for the split system of the equation
    Split { equation: PerturbedEquation, system: PDESystem },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Provenance {
    PaperForm,
    CorrectedForm,
}

/// A closed-form solution with parameter bindings and provenance.
#[derive(Clone, Debug)]
pub struct SolutionEntry {
    pub id: String,
    pub equation_id: String,
    pub target: EntryTarget,
    pub order0: Expr,
    pub order1: Option<Expr>,
    pub params: Binding,
    pub provenance: Provenance,
    pub notes: String,
    pub default_grid: Grid,
    /// whether the residual is expected to vanish numerically
    pub expect_zero: bool,
}

/// Norms of a residual sampled over a grid.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub sup_norm: f64,
    pub l2_norm: f64,
    pub n_points: usize,
    pub epsilon: f64,
    pub skipped: usize,
}

/// Residual reports per equation of the entry's target.
#[derive(Clone, Debug, Serialize)]
pub struct EntryResidual {
    pub reports: Vec<(String, ResidualReport)>,
    pub pass: bool,
}

impl EntryResidual {
    pub fn max_sup(&self) -> f64 {
        self.reports
            .iter()
            .map(|(_, r)| r.sup_norm)
            .fold(0.0, f64::max)
    }
}

/// Fixed-topology pairwise summation, so norms are reproducible.
fn tree_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => tree_sum(&v[..n / 2]) + tree_sum(&v[n / 2..]),
    }
}

/// Substitution binding sending each dependent and its jets to derivatives
/// of the given closed forms.
fn solution_binding(
    forms: &[(&str, &Expr)],
    jets_needed: &[JetVar],
) -> Result<Binding, SolError> {
    let mut b = Binding::new();
    for (dep, form) in forms {
        b.insert(Coord::Sym(dep.to_string()), Bound::Expr((*form).clone()));
    }
    for jv in jets_needed {
        let form = forms
            .iter()
            .find(|(dep, _)| *dep == jv.dep)
            .map(|(_, f)| (*f).clone())
            .ok_or_else(|| SolError::BadEntry(format!("no closed form for `{}`", jv.dep)))?;
        let mut d = form;
        for v in &jv.index {
            d = d.differentiate(v);
        }
        b.insert(Coord::Jet(jv.clone()), Bound::Expr(d));
    }
    Ok(b)
}

/// Symbolic residual expressions for an entry: one per target equation.
pub fn residual_expressions(entry: &SolutionEntry) -> Result<Vec<(String, Expr)>, SolError> {
    match &entry.target {
        EntryTarget::Exact { equation } => {
            let u = &entry.order0;
            let res = u.differentiate("t")
                - Expr::sym("eps") * u.differentiate("x").differentiate("x")
                - equation
                    .reaction
                    .substitute(&Binding::new().set("u", u.clone()));
            Ok(vec![("full".to_string(), res.canon())])
        }
        EntryTarget::Split { system, .. } => {
            let order1 = entry
                .order1
                .as_ref()
                .ok_or_else(|| SolError::BadEntry("split entry without order-1 part".into()))?;
            let forms: Vec<(&str, &Expr)> = vec![("v", &entry.order0), ("w", order1)];
            let mut out = Vec::new();
            for (idx, (lhs, rhs)) in system.equations.iter().enumerate() {
                let jets: Vec<JetVar> = rhs
                    .free_coords()
                    .into_iter()
                    .filter_map(|c| match c {
                        Coord::Jet(j) => Some(j),
                        _ => None,
                    })
                    .collect();
                let b = solution_binding(&forms, &jets)?;
                let lhs_form = forms
                    .iter()
                    .find(|(dep, _)| *dep == lhs.dep)
                    .map(|(_, f)| (*f).clone())
                    .ok_or_else(|| SolError::BadEntry(format!("no form for `{}`", lhs.dep)))?;
                let mut lhs_expr = lhs_form;
                for v in &lhs.index {
                    lhs_expr = lhs_expr.differentiate(v);
                }
                let res = (lhs_expr - rhs.substitute(&b)).canon();
                out.push((format!("order{idx}"), res));
            }
            Ok(out)
        }
    }
}

fn point_binding(entry: &SolutionEntry, x: f64, t: f64, eps: f64) -> Binding {
    let mut b = entry.params.clone();
    b.insert(Coord::sym("x"), Bound::Num(x));
    b.insert(Coord::sym("t"), Bound::Num(t));
    b.insert(Coord::sym("eps"), Bound::Num(eps));
    b
}

fn grid_norms(
    entry: &SolutionEntry,
    expr: &Expr,
    grid: &Grid,
    eps: f64,
) -> Result<ResidualReport, SolError> {
    let mut abs_vals: Vec<f64> = Vec::new();
    let mut squares: Vec<f64> = Vec::new();
    let mut skipped = 0usize;
    let mut attempted = 0usize;
    for (x, t) in grid.points() {
        if grid.excluded(x, t) {
            continue;
        }
        attempted += 1;
        match expr.eval(&point_binding(entry, x, t, eps)) {
            Ok(v) => {
                abs_vals.push(v.abs());
                squares.push(v * v);
            }
            Err(EvalError::Domain(_)) => skipped += 1,
            Err(e) => return Err(SolError::Eval(e)),
        }
    }
    if attempted == 0 {
        return Err(SolError::BadGrid("all grid points excluded".into()));
    }
    if skipped * 5 > attempted {
        return Err(SolError::TooManySkipped { skipped, total: attempted });
    }
    let n = abs_vals.len();
    let sup = abs_vals.iter().cloned().fold(0.0, f64::max);
    let l2 = (tree_sum(&squares) / n as f64).sqrt();
    Ok(ResidualReport {
        sup_norm: sup,
        l2_norm: l2,
        n_points: n,
        epsilon: eps,
        skipped,
    })
}

/// Evaluates the entry's residual(s) over a grid. Exact entries check the
/// full perturbed equation; split entries check both order equations.
pub fn residual(
    entry: &SolutionEntry,
    grid: &Grid,
    eps: f64,
) -> Result<EntryResidual, SolError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(SolError::BadGrid(format!("epsilon {eps} outside (0, 1]")));
    }
    let exprs = residual_expressions(entry)?;
    let mut reports = Vec::new();
    let mut pass = true;
    for (label, e) in exprs {
        let r = grid_norms(entry, &e, grid, eps)?;
        pass &= r.sup_norm < RESIDUAL_TOL;
        reports.push((label, r));
    }
    Ok(EntryResidual { reports, pass })
}

/// Log-log scaling of the full-equation defect of `u = v + eps*w`.
#[derive(Clone, Debug, Serialize)]
pub struct OrderScaling {
    pub per_eps: Vec<(f64, f64)>,
    pub slopes: Vec<f64>,
    pub fitted_exponent: Option<f64>,
    /// all defects below tolerance: the entry solves the full equation
    pub exact: bool,
}

/// Defect of the full perturbed equation at `u = order0 + eps*order1`,
/// as a symbolic expression in `x`, `t`, `eps` and the parameters.
pub fn full_defect_expression(entry: &SolutionEntry) -> Result<Expr, SolError> {
    let equation = match &entry.target {
        EntryTarget::Exact { equation } => equation,
        EntryTarget::Split { equation, .. } => equation,
    };
    let u = match &entry.order1 {
        Some(w) => entry.order0.clone() + Expr::sym("eps") * w.clone(),
        None => entry.order0.clone(),
    };
    let res = u.differentiate("t")
        - Expr::sym("eps") * u.differentiate("x").differentiate("x")
        - equation
            .reaction
            .substitute(&Binding::new().set("u", u.clone()));
    Ok(res.canon())
}

/// Sup-norm of the full-equation defect for each epsilon, with fitted
/// log-log slope. Entries whose defect is below tolerance for every epsilon
/// are reported as exact (no exponent).
pub fn order_scaling(
    entry: &SolutionEntry,
    grid: &Grid,
    eps_list: &[f64],
) -> Result<OrderScaling, SolError> {
    if eps_list.len() < 3 {
        return Err(SolError::BadGrid("need at least 3 epsilon values".into()));
    }
    if !eps_list.windows(2).all(|w| w[0] > w[1]) {
        return Err(SolError::BadGrid("epsilon list must be decreasing".into()));
    }
    let defect = full_defect_expression(entry)?;
    let mut per_eps = Vec::new();
    for &eps in eps_list {
        let r = grid_norms(entry, &defect, grid, eps)?;
        per_eps.push((eps, r.sup_norm));
    }
    let exact = per_eps.iter().all(|(_, s)| *s < RESIDUAL_TOL);
    if exact {
        return Ok(OrderScaling { per_eps, slopes: Vec::new(), fitted_exponent: None, exact });
    }
    let logs: Vec<(f64, f64)> = per_eps
        .iter()
        .map(|(e, s)| (e.ln(), s.max(1e-300).ln()))
        .collect();
    let slopes = logs
        .windows(2)
        .map(|w| (w[0].1 - w[1].1) / (w[0].0 - w[1].0))
        .collect();
    let xm = logs.iter().map(|(x, _)| x).sum::<f64>() / logs.len() as f64;
    let ym = logs.iter().map(|(_, y)| y).sum::<f64>() / logs.len() as f64;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - xm) * (x - xm)).sum();
    Ok(OrderScaling {
        per_eps,
        slopes,
        fitted_exponent: Some(sxy / sxx),
        exact,
    })
}

/// Closed-form one-parameter flow of a vector field whose coefficients are
/// decoupled and affine (`xi_c = alpha*c + beta` per coordinate).
#[derive(Clone, Debug)]
pub struct FlowMap {
    /// coordinate -> image expression in the coordinates and `s`
    pub assignments: BTreeMap<String, Expr>,
    pub s_name: String,
}

impl FlowMap {
    /// Evaluates the flow at a numeric point.
    pub fn apply_point(
        &self,
        point: &BTreeMap<String, f64>,
        s: f64,
    ) -> Result<BTreeMap<String, f64>, SolError> {
        let mut b = Binding::new();
        for (k, v) in point {
            b.insert(Coord::sym(k), Bound::Num(*v));
        }
        b.insert(Coord::sym(&self.s_name), Bound::Num(s));
        let mut out = BTreeMap::new();
        for (k, e) in &self.assignments {
            out.insert(k.clone(), e.eval(&b)?);
        }
        Ok(out)
    }
}

/// Exponentiates a vector field with decoupled affine coefficients into its
/// one-parameter group. The flow parameter appears as the symbol `s`.
pub fn flow(field: &VectorField, s_name: &str) -> Result<FlowMap, SolError> {
    let s = Expr::sym(s_name);
    let coords = field.space.base_coords();
    let coord_keys: Vec<Coord> = coords.iter().map(|c| Coord::sym(c)).collect();
    let mut assignments = BTreeMap::new();
    for (ci, c) in coords.iter().enumerate() {
        let xi = field.coeff(c);
        if xi.is_zero() {
            assignments.insert(c.clone(), Expr::sym(c));
            continue;
        }
        let m = xi
            .expand_collect(&coord_keys)
            .map_err(|_| SolError::NotAffine(c.clone()))?;
        let mut alpha = Expr::zero();
        let mut beta = Expr::zero();
        for (degs, coeff) in &m.terms {
            let total: u32 = degs.iter().sum();
            if total == 0 {
                beta = coeff.clone();
            } else if total == 1 && degs[ci] == 1 {
                alpha = coeff.clone();
            } else {
                return Err(SolError::NotAffine(c.clone()));
            }
        }
        let image = if alpha.is_zero() {
            // c + beta s
            Expr::sym(c) + beta * s.clone()
        } else {
            // e^{alpha s} c + (e^{alpha s} - 1) beta / alpha
            let growth = Expr::call(crate::expr::Func::Exp, alpha.clone() * s.clone());
            growth.clone() * Expr::sym(c)
                + (growth - Expr::one()) * beta / alpha
        };
        assignments.insert(c.clone(), image.canon());
    }
    Ok(FlowMap { assignments, s_name: s_name.to_string() })
}

/// Transforms a split solution entry by the one-parameter group of `field`:
/// independents move by the inverse flow, dependents pick up their linear
/// scaling factor.
pub fn transform_solution(
    entry: &SolutionEntry,
    field: &VectorField,
    s_value: f64,
    label: &str,
) -> Result<SolutionEntry, SolError> {
    let order1 = entry
        .order1
        .as_ref()
        .ok_or_else(|| SolError::BadEntry("transform needs a split entry".into()))?;

    // fresh flow-parameter symbol
    let s_name = "s";
    if entry.params.get(&Coord::sym(s_name)).is_some() {
        return Err(SolError::BadEntry("entry already binds `s`".into()));
    }
    let fm = flow(field, s_name)?;

    // inverse motion of the independents
    let neg_s = Binding::new().set(s_name, -Expr::sym(s_name));
    let mut arg_sub = Binding::new();
    for ind in &field.space.independent {
        let img = fm
            .assignments
            .get(ind)
            .cloned()
            .unwrap_or_else(|| Expr::sym(ind));
        arg_sub.insert(Coord::sym(ind), Bound::Expr(img.substitute(&neg_s)));
    }

    // multiplicative factor on each dependent
    let dep_factor = |dep: &str| -> Result<Expr, SolError> {
        let img = fm
            .assignments
            .get(dep)
            .cloned()
            .unwrap_or_else(|| Expr::sym(dep));
        let m = img
            .expand_collect(&[Coord::sym(dep)])
            .map_err(|_| SolError::NotAffine(dep.to_string()))?;
        if !m.coefficient(&[0]).is_zero() {
            return Err(SolError::NotAffine(dep.to_string()));
        }
        Ok(m.coefficient(&[1]))
    };

    let deps = field.space.dependent.clone();
    if deps.len() != 2 {
        return Err(SolError::BadEntry("transform expects a (v, w) split space".into()));
    }
    let new_order0 = (dep_factor(&deps[0])? * entry.order0.substitute(&arg_sub)).canon();
    let new_order1 = (dep_factor(&deps[1])? * order1.substitute(&arg_sub)).canon();

    let mut params = entry.params.clone();
    params.insert(Coord::sym(s_name), Bound::Num(s_value));
    Ok(SolutionEntry {
        id: format!("{}~{}", entry.id, label),
        equation_id: entry.equation_id.clone(),
        target: entry.target.clone(),
        order0: new_order0,
        order1: Some(new_order1),
        params,
        provenance: entry.provenance,
        notes: format!("{} transformed by {label} at s={s_value}", entry.notes),
        default_grid: entry.default_grid.clone(),
        expect_zero: entry.expect_zero,
    })
}
