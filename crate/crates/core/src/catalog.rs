//! Builtin equations, symmetry generators and closed-form solution entries.

use crate::detsys::{DetError, PDESystem};
use crate::expr::{parse, Expr};
use crate::jet::{JetError, JetSpace, VectorField};
use crate::liealg::{structure_constants, LieAlgebra, LieError};
use crate::perturb::{split_order1, PerturbedEquation};
use crate::solutions::{
    EntryTarget, Exclusion, Grid, Provenance, SolError, SolutionEntry,
};

fn p(s: &str) -> Expr {
    parse(s).unwrap_or_else(|e| panic!("catalog expression `{s}`: {e}"))
}

/// A builtin equation: the perturbed form, its full one-dependent system,
/// and (for nonzero reaction) the first-order split system.
#[derive(Clone, Debug)]
pub struct EquationDef {
    pub id: String,
    pub perturbed: PerturbedEquation,
    pub full: PDESystem,
    pub split: Option<PDESystem>,
    pub notes: Vec<String>,
}

pub const EQUATION_IDS: [&str; 4] = ["heat", "fisher", "zeldovich", "nws"];

/// Looks up a builtin equation (`heat` also answers to `fick`).
pub fn equation(id: &str) -> Result<EquationDef, DetError> {
    let id = if id == "fick" { "heat" } else { id };
    let (reaction, notes): (&str, Vec<String>) = match id {
        "heat" => ("0", vec![]),
        "fisher" => (
            "a*u*(1 - u)",
            vec![
                "order-0 split equation: the printed source carries a spurious trailing w; \
                 the emitted form v_t = a*v*(1 - v) is the internally consistent one"
                    .to_string(),
            ],
        ),
        "zeldovich" => ("u^2*(1 - u)", vec![]),
        "nws" => ("u*(1 - u^2)", vec![]),
        other => {
            return Err(DetError::BadSystem(format!("unknown builtin equation `{other}`")))
        }
    };
    let perturbed = PerturbedEquation::new(id, p(reaction));
    let full = perturbed.full_system()?;
    let split = if id == "heat" {
        None
    } else {
        Some(split_order1(&perturbed)?)
    };
    Ok(EquationDef { id: id.to_string(), perturbed, full, split, notes })
}

/// Parses a vector-field expression using `dx, dt, du, dv, dw` basis
/// markers, e.g. `4*x*t*dx + 4*t^2*dt - (2*t + x^2/eps)*u*du`.
pub fn parse_vector_field(space: &JetSpace, text: &str) -> Result<VectorField, String> {
    let expr = parse(text).map_err(|e| e.to_string())?;
    let markers: Vec<(String, String)> = space
        .base_coords()
        .iter()
        .map(|c| (c.clone(), format!("d{c}")))
        .collect();
    let coords: Vec<crate::expr::Coord> = markers
        .iter()
        .map(|(_, m)| crate::expr::Coord::sym(m))
        .collect();
    let collected = expr
        .expand_collect(&coords)
        .map_err(|e| format!("marker collection failed: {e}"))?;
    let mut coeffs: Vec<(String, Expr)> = Vec::new();
    for (degs, coeff) in &collected.terms {
        let total: u32 = degs.iter().sum();
        match total {
            0 => {
                if !coeff.is_zero() {
                    return Err("field expression has a marker-free part".into());
                }
            }
            1 => {
                let i = degs.iter().position(|d| *d == 1).expect("degree one");
                coeffs.push((markers[i].0.clone(), coeff.clone()));
            }
            _ => return Err("field expression is not linear in the basis markers".into()),
        }
    }
    let refs: Vec<(&str, Expr)> = coeffs.iter().map(|(n, e)| (n.as_str(), e.clone())).collect();
    VectorField::new(space.clone(), &refs).map_err(|e| e.to_string())
}

/// The six point-symmetry generators of the perturbed heat equation, plus
/// `X_F = F d_u` with `F = exp(x + eps t)` from the infinite-dimensional
/// part.
pub fn heat_generators() -> Result<Vec<(String, VectorField)>, JetError> {
    let space = JetSpace::new(&["x", "t"], &["u"], 4)?;
    let defs: [(&str, &str); 7] = [
        ("X1", "dx"),
        ("X2", "dt"),
        ("X3", "x*dx + 2*t*dt"),
        ("X4", "-2*eps*t*dx + x*u*du"),
        ("X5", "u*du"),
        ("X6", "4*x*t*dx + 4*t^2*dt - (2*t + x^2/eps)*u*du"),
        ("XF", "exp(x + eps*t)*du"),
    ];
    defs.iter()
        .map(|(name, text)| {
            parse_vector_field(&space, text)
                .map(|f| (name.to_string(), f))
                .map_err(JetError::BadField)
        })
        .collect()
}

/// Closed-form infinitesimal family of the heat equation: coefficients in
/// symbolic constants `c1..c6` (arbitrary-function part set to zero).
pub fn heat_infinitesimal_family() -> std::collections::BTreeMap<String, Expr> {
    let mut m = std::collections::BTreeMap::new();
    m.insert("xi".to_string(), p("c1*t*x + c2*x - 2*eps*c4*t + c6"));
    m.insert("tau".to_string(), p("c1*t^2 + 2*c2*t + c3"));
    m.insert(
        "phi".to_string(),
        p("(c4*x + c5 - c1*t/2 - c1*x^2/(4*eps))*u"),
    );
    m
}

/// The three-dimensional algebra of approximate symmetries shared by the
/// split Fisher, Zeldovich and NWS systems:
/// `X1 = dt, X2 = dx, X3 = x dx - 2 w dw`.
pub fn kpp3_fields() -> Result<Vec<VectorField>, JetError> {
    let space = JetSpace::new(&["x", "t"], &["v", "w"], 4)?;
    ["dt", "dx", "x*dx - 2*w*dw"]
        .iter()
        .map(|text| parse_vector_field(&space, text).map_err(JetError::BadField))
        .collect()
}

pub fn kpp3_algebra() -> Result<LieAlgebra, LieError> {
    let fields = kpp3_fields().map_err(LieError::Jet)?;
    structure_constants(fields)
}

pub const ENTRY_IDS: [&str; 8] = [
    "fick_wave",
    "fick_erf",
    "az_wave",
    "fisher_x3",
    "fisher_wave",
    "zeldovich_x3",
    "zeldovich_x3_paper",
    "nws_x3",
];

/// Builds a builtin solution entry.
pub fn entry(id: &str) -> Result<SolutionEntry, SolError> {
    let grid = |xr: (f64, f64), tr: (f64, f64)| Grid::new(xr, tr, 50, 50);
    let def = |eq: &str| equation(eq).map_err(SolError::Det);
    match id {
        // traveling-wave solution of u_t = eps u_xx
        "fick_wave" => {
            let eq = def("heat")?;
            Ok(SolutionEntry {
                id: id.into(),
                equation_id: eq.id.clone(),
                target: EntryTarget::Exact { equation: eq.perturbed },
                order0: p("c1 + c2*exp(-c*(x - c*t)/eps)"),
                order1: None,
                params: crate::expr::Binding::new()
                    .set_num("c", 1.0)
                    .set_num("c1", 0.0)
                    .set_num("c2", 1.0),
                provenance: Provenance::PaperForm,
                notes: "exact traveling-wave solution of the pure diffusion equation".into(),
                default_grid: grid((-2.0, 2.0), (0.1, 2.0))?,
                expect_zero: true,
            })
        }
        // self-similar error-function solution of u_t = eps u_xx
        "fick_erf" => {
            let eq = def("heat")?;
            Ok(SolutionEntry {
                id: id.into(),
                equation_id: eq.id.clone(),
                target: EntryTarget::Exact { equation: eq.perturbed },
                order0: p("c1 + c2*erf(abs(x)/(2*sqrt(eps*t)))"),
                order1: None,
                params: crate::expr::Binding::new()
                    .set_num("c1", 0.0)
                    .set_num("c2", 1.0),
                provenance: Provenance::PaperForm,
                notes: "similarity solution in erf; domain split at x = 0".into(),
                default_grid: grid((0.2, 3.0), (0.1, 2.0))?
                    .with_exclusion(Exclusion::AbsBelow { coord: "x".into(), threshold: 0.1 }),
                expect_zero: true,
            })
        }
        // Ablowitz-Zeppetella closed-form front for the perturbed Fisher
        // equation, with the wave numbers rescaled for the eps-diffusion
        "az_wave" => {
            let eq = def("fisher")?;
            Ok(SolutionEntry {
                id: id.into(),
                equation_id: eq.id.clone(),
                target: EntryTarget::Exact { equation: eq.perturbed },
                order0: p("(1 + c1*exp((a/(6*eps))^(1/2)*x - (5*a/6)*t))^(-2)"),
                order1: None,
                params: crate::expr::Binding::new()
                    .set_num("a", 1.0)
                    .set_num("c1", 1.0),
                provenance: Provenance::CorrectedForm,
                notes: "singularity-analysis front; wave numbers k = sqrt(a/(6 eps)), \
                        omega = 5a/6 fixed by the residual check"
                    .into(),
                default_grid: grid((-2.0, 2.0), (0.1, 2.0))?,
                expect_zero: true,
            })
        }
        // scaling-invariant approximate solution of the split Fisher system
        "fisher_x3" => {
            let eq = def("fisher")?;
            let split = eq.split.clone().expect("fisher splits");
            Ok(SolutionEntry {
                id: id.into(),
                equation_id: eq.id.clone(),
                target: EntryTarget::Split { equation: eq.perturbed, system: split },
                order0: p("1/(1 + c1*exp(-a*t))"),
                order1: Some(p("c2*exp(-a*t)/(x^2*(1 + c1*exp(-a*t))^2)")),
                params: crate::expr::Binding::new()
                    .set_num("a", 1.0)
                    .set_num("c1", 1.0)
                    .set_num("c2", 1.0),
                provenance: Provenance::PaperForm,
                notes: "invariants of x dx - 2w dw; logistic order-0 part".into(),
                default_grid: grid((0.5, 3.0), (0.1, 2.0))?
                    .with_exclusion(Exclusion::AbsBelow { coord: "x".into(), threshold: 0.1 }),
                expect_zero: true,
            })
        }
        // traveling-wave approximate solution of the split Fisher system,
        // shipped exactly as printed (the constants c2, c3 are mixed in the
        // source; its order-1 residual does not vanish)
        "fisher_wave" => {
            let eq = def("fisher")?;
            let split = eq.split.clone().expect("fisher splits");
            Ok(SolutionEntry {
                id: id.into(),
                equation_id: eq.id.clone(),
                target: EntryTarget::Split { equation: eq.perturbed, system: split },
                order0: p("1/(c1*exp(a*(x - c*t)/c) + 1)"),
                order1: Some(p(
                    "exp(a*(x - c*t)/c)/(c1*exp(a*(x - c*t)/c) + 1)^2 * \
                     (c1*(a^2/c3)*(x - c*t) - (2*a*c1/c2)*ln(c1*exp(a*(x - c*t)/c) + 1) + c2)",
                )),
                params: crate::expr::Binding::new()
                    .set_num("a", 1.0)
                    .set_num("c", 1.0)
                    .set_num("c1", 1.0)
                    .set_num("c2", 1.0)
                    .set_num("c3", 1.0),
                provenance: Provenance::PaperForm,
                notes: "printed form kept verbatim; constant structure is ambiguous in the \
                        source and the order-1 residual is nonzero"
                    .into(),
                default_grid: grid((-2.0, 2.0), (0.1, 2.0))?,
                expect_zero: false,
            })
        }
        // scaling-invariant approximate solution of the split Zeldovich
        // system, corrected order-0 part 1/(1 + W(e^{-t-1}/c1))
        "zeldovich_x3" => {
            let eq = def("zeldovich")?;
            let split = eq.split.clone().expect("zeldovich splits");
            Ok(SolutionEntry {
                id: id.into(),
                equation_id: eq.id.clone(),
                target: EntryTarget::Split { equation: eq.perturbed, system: split },
                order0: p("1/(1 + lambertW(exp(-t - 1)/c1))"),
                order1: Some(p(
                    "c2*lambertW(exp(-t - 1)/c1)/(x^2*(1 + lambertW(exp(-t - 1)/c1))^3)",
                )),
                params: crate::expr::Binding::new()
                    .set_num("c1", 1.0)
                    .set_num("c2", 1.0),
                provenance: Provenance::CorrectedForm,
                notes: "order-0 part re-derived so v_t = v^2(1-v) holds; order-1 part solves \
                        g' = g (2f - 3f^2), giving g = c2 W/(1+W)^3"
                    .into(),
                default_grid: grid((0.5, 3.0), (0.1, 2.0))?
                    .with_exclusion(Exclusion::AbsBelow { coord: "x".into(), threshold: 0.1 }),
                expect_zero: true,
            })
        }
        // the same solution exactly as printed in the source
        "zeldovich_x3_paper" => {
            let eq = def("zeldovich")?;
            let split = eq.split.clone().expect("zeldovich splits");
            Ok(SolutionEntry {
                id: id.into(),
                equation_id: eq.id.clone(),
                target: EntryTarget::Split { equation: eq.perturbed, system: split },
                order0: p("1/lambertW(-exp(-t - 1)/c1)"),
                order1: Some(p(
                    "c2*exp(-2*lambertW(-exp(-t - 1)/c1))*lambertW(-exp(-t - 1)/c1)/\
                     (x^2*(lambertW(-exp(-t - 1)/c1) + 1))",
                )),
                params: crate::expr::Binding::new()
                    .set_num("c1", 1.0)
                    .set_num("c2", 1.0),
                provenance: Provenance::PaperForm,
                notes: "printed form kept verbatim; its order-0 part does not satisfy \
                        v_t = v^2(1-v) and the measured residual is reported as-is"
                    .into(),
                default_grid: grid((0.5, 3.0), (0.1, 2.0))?
                    .with_exclusion(Exclusion::AbsBelow { coord: "x".into(), threshold: 0.1 }),
                expect_zero: false,
            })
        }
        // scaling-invariant approximate solution of the split NWS system
        "nws_x3" => {
            let eq = def("nws")?;
            let split = eq.split.clone().expect("nws splits");
            Ok(SolutionEntry {
                id: id.into(),
                equation_id: eq.id.clone(),
                target: EntryTarget::Split { equation: eq.perturbed, system: split },
                order0: p("(1 + c1*exp(-2*t))^(-1/2)"),
                order1: Some(p("c2*exp(-2*t)/(1 + c1*exp(-2*t))^(3/2)")),
                params: crate::expr::Binding::new()
                    .set_num("c1", 1.0)
                    .set_num("c2", 1.0),
                provenance: Provenance::PaperForm,
                notes: "positive branch of the amplitude solution".into(),
                default_grid: grid((-2.0, 2.0), (0.1, 2.0))?,
                expect_zero: true,
            })
        }
        other => Err(SolError::BadEntry(format!("unknown entry `{other}`"))),
    }
}

/// All builtin entries.
pub fn all_entries() -> Result<Vec<SolutionEntry>, SolError> {
    ENTRY_IDS.iter().map(|id| entry(id)).collect()
}

/// Parses the equation-definition text format: one equation per line in
/// solved form plus `param a, b;` declarations.
pub fn parse_equation_file(text: &str) -> Result<PDESystem, DetError> {
    let mut params: Vec<String> = Vec::new();
    let mut equations: Vec<(crate::expr::JetVar, Expr)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("param") {
            let rest = rest.trim().trim_end_matches(';');
            for name in rest.split(',') {
                let name = name.trim();
                if !name.is_empty() {
                    params.push(name.to_string());
                }
            }
            continue;
        }
        let (lhs_text, rhs_text) = line
            .split_once('=')
            .ok_or_else(|| DetError::BadSystem(format!("line {}: expected `lhs = rhs`", lineno + 1)))?;
        let lhs = match parse(lhs_text.trim()) {
            Ok(Expr::Jet(j)) => j,
            Ok(other) => {
                return Err(DetError::BadSystem(format!(
                    "line {}: lhs `{other}` is not a jet variable",
                    lineno + 1
                )))
            }
            Err(e) => return Err(DetError::BadSystem(format!("line {}: {e}", lineno + 1))),
        };
        let rhs = parse(rhs_text.trim())
            .map_err(|e| DetError::BadSystem(format!("line {}: {e}", lineno + 1)))?;
        equations.push((lhs, rhs));
    }
    if equations.is_empty() {
        return Err(DetError::BadSystem("no equations in file".into()));
    }
    let deps: Vec<String> = equations.iter().map(|(l, _)| l.dep.clone()).collect();
    let dep_refs: Vec<&str> = deps.iter().map(|s| s.as_str()).collect();
    let space = JetSpace::new(&["x", "t"], &dep_refs, 4)?;
    let param_refs: Vec<&str> = params.iter().map(|s| s.as_str()).collect();
    PDESystem::new(space, equations, &param_refs)
}
