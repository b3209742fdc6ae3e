//! Command-line front end with reproducible text and JSON output.

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::catalog;
use crate::detsys::{generate_determining, verify_generator, PDESystem, Verdict};
use crate::expr::{Expr, Q};
use crate::liealg::AlgebraElement;
use crate::solutions::{self, Grid};

#[derive(Parser)]
#[command(
    name = "kppsym",
    version,
    about = "Symmetry analysis of perturbed KPP-type reaction-diffusion equations"
)]
struct Cli {
    /// Seed for all randomized checks
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    output: OutputFormat,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify a generator against an equation, symbolically and numerically
    Verify {
        /// builtin name (heat, fisher, zeldovich, nws, fisher-split, ...) or
        /// a path to an equation file
        #[arg(long)]
        equation: String,
        /// vector field in dx/dt/du/dv/dw markers
        #[arg(long)]
        generator: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Emit the determining equations of a system
    Determining {
        #[arg(long)]
        equation: String,
    },
    /// Split a builtin perturbed equation into its order-0/order-1 system
    Split {
        #[arg(long)]
        builtin: String,
    },
    /// Commutator table, adjoint table and adjoint matrices
    Algebra {
        #[arg(long)]
        builtin: String,
    },
    /// Canonical representative of a1*X1 + a2*X2 + a3*X3
    Canonicalize {
        /// three rational coefficients, e.g. `2,4,6` or `1/2,0,1`
        #[arg(long)]
        coeffs: String,
    },
    /// Grid residual of a catalog solution entry
    Residual {
        #[arg(long)]
        entry: String,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// override grid: xlo,xhi,tlo,thi,nx,nt
        #[arg(long)]
        grid: Option<String>,
    },
    /// Full-equation defect scaling over a list of epsilons
    OrderScaling {
        #[arg(long)]
        entry: String,
        #[arg(long = "eps-list")]
        eps_list: String,
        #[arg(long)]
        grid: Option<String>,
    },
    /// Transform a split entry by one of the flows G1, G2, G3
    Transform {
        #[arg(long)]
        entry: String,
        #[arg(long)]
        flow: usize,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
}

/// Runs the CLI and returns (exit code, output). Exit codes: 0 success,
/// 1 verification failure, 2 usage error.
pub fn run(args: &[String]) -> (i32, String) {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => return (2, e.to_string()),
    };
    let out = match dispatch(&cli) {
        Ok((code, v)) => (code, render(&cli, v)),
        Err(msg) => (2, format!("error: {msg}\n")),
    };
    out
}

fn render(cli: &Cli, v: Value) -> String {
    match cli.output {
        OutputFormat::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&v).expect("serializable")
        ),
        OutputFormat::Text => {
            let mut s = String::new();
            render_text(&v, &mut s);
            s
        }
    }
}

/// Text rendering: the JSON document carries a `text` field per command.
fn render_text(v: &Value, out: &mut String) {
    if let Some(Value::String(t)) = v.get("text") {
        out.push_str(t);
    } else {
        out.push_str(&serde_json::to_string_pretty(v).expect("serializable"));
        out.push('\n');
    }
}

fn dispatch(cli: &Cli) -> Result<(i32, Value), String> {
    match &cli.cmd {
        Cmd::Verify { equation, generator, trials } => {
            cmd_verify(equation, generator, *trials, cli.seed)
        }
        Cmd::Determining { equation } => cmd_determining(equation),
        Cmd::Split { builtin } => cmd_split(builtin),
        Cmd::Algebra { builtin } => cmd_algebra(builtin),
        Cmd::Canonicalize { coeffs } => cmd_canonicalize(coeffs),
        Cmd::Residual { entry, eps, grid } => cmd_residual(entry, *eps, grid.as_deref()),
        Cmd::OrderScaling { entry, eps_list, grid } => {
            cmd_order_scaling(entry, eps_list, grid.as_deref())
        }
        Cmd::Transform { entry, flow, s, eps } => cmd_transform(entry, *flow, *s, *eps),
    }
}

/// Resolves an equation spec: builtin names (optionally `builtin:` prefixed,
/// with a `-split` suffix for the order systems) or a file path.
fn resolve_system(spec: &str) -> Result<(String, PDESystem), String> {
    let name = spec.strip_prefix("builtin:").unwrap_or(spec);
    let (base, split) = match name.strip_suffix("-split") {
        Some(b) => (b, true),
        None => (name, false),
    };
    let is_builtin =
        catalog::EQUATION_IDS.contains(&base) || base == "fick";
    if is_builtin {
        let def = catalog::equation(base).map_err(|e| e.to_string())?;
        let sys = if split {
            def.split
                .clone()
                .ok_or_else(|| format!("`{base}` has no split system"))?
        } else {
            def.full.clone()
        };
        return Ok((name.to_string(), sys));
    }
    let text = std::fs::read_to_string(name)
        .map_err(|e| format!("cannot read `{name}`: {e}"))?;
    let sys = catalog::parse_equation_file(&text).map_err(|e| e.to_string())?;
    Ok((name.to_string(), sys))
}

fn cmd_verify(
    equation: &str,
    generator: &str,
    trials: usize,
    seed: u64,
) -> Result<(i32, Value), String> {
    let (label, sys) = resolve_system(equation)?;
    let field = catalog::parse_vector_field(&sys.space, generator)?;
    let (symbolic, numeric) =
        verify_generator(&field, &sys, trials, seed).map_err(|e| e.to_string())?;
    let sym_strs: Vec<String> = symbolic.iter().map(|z| format!("{z:?}")).collect();
    let pass = numeric.verdict == Verdict::Pass;
    let mut text = format!("equation: {label}\ngenerator: {generator}\n");
    for (i, z) in sym_strs.iter().enumerate() {
        text.push_str(&format!("equation {}: symbolic {}\n", i + 1, z));
    }
    text.push_str(&format!(
        "numeric: {} (max |residual| = {:.3e} over {} trials)\n",
        if pass { "pass" } else { "fail" },
        numeric.max_abs_residual,
        numeric.trials
    ));
    let v = json!({
        "command": "verify",
        "equation": label,
        "generator": generator,
        "symbolic": sym_strs,
        "numeric": numeric,
        "text": text,
    });
    Ok((if pass { 0 } else { 1 }, v))
}

fn cmd_determining(equation: &str) -> Result<(i32, Value), String> {
    let (label, sys) = resolve_system(equation)?;
    let det = generate_determining(&sys).map_err(|e| e.to_string())?;
    let unknowns: Vec<String> = det
        .unknowns
        .iter()
        .map(|u| format!("{}({})", u.name, u.args.join(",")))
        .collect();
    let constraints: Vec<String> = det.constraints.iter().map(|c| format!("{c} = 0")).collect();
    let mut text = format!(
        "equation: {label}\nunknowns: {}\n{} determining equations:\n",
        unknowns.join(", "),
        constraints.len()
    );
    for c in &constraints {
        text.push_str("  ");
        text.push_str(c);
        text.push('\n');
    }
    let v = json!({
        "command": "determining",
        "equation": label,
        "unknowns": unknowns,
        "constraints": constraints,
        "text": text,
    });
    Ok((0, v))
}

fn cmd_split(builtin: &str) -> Result<(i32, Value), String> {
    let def = catalog::equation(builtin).map_err(|e| e.to_string())?;
    let split = def
        .split
        .as_ref()
        .ok_or_else(|| format!("`{builtin}` has no split system"))?;
    let eqs: Vec<String> = split
        .equations
        .iter()
        .map(|(l, r)| format!("{l} = {r}"))
        .collect();
    let mut text = format!("equation: {}\n", def.id);
    for e in &eqs {
        text.push_str("  ");
        text.push_str(e);
        text.push('\n');
    }
    for n in &def.notes {
        text.push_str(&format!("note: {n}\n"));
    }
    let v = json!({
        "command": "split",
        "equation": def.id,
        "system": eqs,
        "notes": def.notes,
        "text": text,
    });
    Ok((0, v))
}

fn table_text(header: &str, labels: &[String], cells: &[Vec<String>]) -> String {
    let n = labels.len();
    let mut col_widths = vec![header.len(); n + 1];
    for (j, l) in labels.iter().enumerate() {
        col_widths[j + 1] = l.len();
    }
    for (i, row) in cells.iter().enumerate() {
        col_widths[0] = col_widths[0].max(labels[i].len());
        for (j, c) in row.iter().enumerate() {
            col_widths[j + 1] = col_widths[j + 1].max(c.len());
        }
    }
    let mut s = String::new();
    let pad = |s: &str, w: usize| format!("{s:<w$}");
    s.push_str(&pad(header, col_widths[0]));
    for (j, l) in labels.iter().enumerate() {
        s.push_str("  ");
        s.push_str(&pad(l, col_widths[j + 1]));
    }
    s.push('\n');
    for (i, row) in cells.iter().enumerate() {
        s.push_str(&pad(&labels[i], col_widths[0]));
        for (j, c) in row.iter().enumerate() {
            s.push_str("  ");
            s.push_str(&pad(c, col_widths[j + 1]));
        }
        s.push('\n');
    }
    s
}

fn cmd_algebra(builtin: &str) -> Result<(i32, Value), String> {
    if builtin != "kpp3" {
        return Err(format!("unknown builtin algebra `{builtin}`"));
    }
    let alg = catalog::kpp3_algebra().map_err(|e| e.to_string())?;
    let n = alg.dim();

    let mut comm_cells: Vec<Vec<String>> = Vec::new();
    for i in 0..n {
        let mut row = Vec::new();
        for j in 0..n {
            row.push(alg.bracket(i, j).display_with(&alg.labels));
        }
        comm_cells.push(row);
    }

    let s = Expr::sym("s");
    let mut adj_cells: Vec<Vec<String>> = Vec::new();
    for i in 0..n {
        let mut row = Vec::new();
        for j in 0..n {
            let img = alg
                .adjoint(i, &s, &AlgebraElement::basis(n, j))
                .map_err(|e| e.to_string())?;
            row.push(img.display_with(&alg.labels));
        }
        adj_cells.push(row);
    }

    let mut matrices = Vec::new();
    let mut mat_text = String::new();
    for i in 0..n {
        let si = Expr::sym(&format!("s{i}"));
        let m = alg.adjoint_matrix(i, &si).map_err(|e| e.to_string())?;
        let rows: Vec<Vec<String>> = m
            .iter()
            .map(|row| row.iter().map(|e| e.to_string()).collect())
            .collect();
        mat_text.push_str(&format!("M{}^s (rows = images of X_j, parameter s{}):\n", i + 1, i));
        for row in &rows {
            mat_text.push_str(&format!("  [{}]\n", row.join(", ")));
        }
        matrices.push(rows);
    }

    let comm_text = table_text("[Xi,Xj]", &alg.labels, &comm_cells);
    let adj_text = table_text("Ad", &alg.labels, &adj_cells);
    let text = format!(
        "commutator table:\n{comm_text}\nadjoint table (entry (i,j) = Ad(exp(s Xi)) Xj):\n{adj_text}\nadjoint matrices:\n{mat_text}"
    );
    let v = json!({
        "command": "algebra",
        "builtin": builtin,
        "labels": alg.labels,
        "commutator_table": comm_cells,
        "adjoint_table": adj_cells,
        "adjoint_matrices": matrices,
        "text": text,
    });
    Ok((0, v))
}

fn parse_rational(text: &str) -> Result<Q, String> {
    let e = crate::expr::parse(text.trim()).map_err(|e| e.to_string())?;
    e.as_rational()
        .cloned()
        .ok_or_else(|| format!("`{text}` is not a rational number"))
}

fn cmd_canonicalize(coeffs: &str) -> Result<(i32, Value), String> {
    let parts: Vec<&str> = coeffs.split(',').collect();
    if parts.len() != 3 {
        return Err("--coeffs expects three comma-separated rationals".into());
    }
    let values: Result<Vec<Q>, String> = parts.iter().map(|p| parse_rational(p)).collect();
    let values = values?;
    let alg = catalog::kpp3_algebra().map_err(|e| e.to_string())?;
    let element = AlgebraElement::from_rationals(&values);
    let cert = alg.canonicalize(&element).map_err(|e| e.to_string())?;
    let replayed = alg.replay(&element, &cert).map_err(|e| e.to_string())?;
    assert_eq!(replayed, cert.canonical, "witness replay must be exact");

    let canonical = cert.canonical.display_with(&alg.labels);
    let witness: Vec<String> = cert
        .witness
        .iter()
        .map(|(i, s)| format!("Ad(exp(({s})*X{}))", i + 1))
        .collect();
    let mut text = format!("case {}: {}\n", cert.case, canonical);
    for w in &witness {
        text.push_str(&format!("witness: {w}\n"));
    }
    text.push_str(&format!("scale: {}\n", cert.scale));
    if let Some(c) = &cert.constant {
        text.push_str(&format!("constant: {c}\n"));
    }
    let v = json!({
        "command": "canonicalize",
        "input": parts,
        "case": cert.case,
        "canonical": canonical,
        "witness": witness,
        "scale": cert.scale.to_string(),
        "constant": cert.constant.map(|c| c.to_string()),
        "text": text,
    });
    Ok((0, v))
}

fn parse_grid(spec: Option<&str>, default: &Grid) -> Result<Grid, String> {
    match spec {
        None => Ok(default.clone()),
        Some(s) => {
            let parts: Vec<&str> = s.split(',').collect();
            if parts.len() != 6 {
                return Err("--grid expects xlo,xhi,tlo,thi,nx,nt".into());
            }
            let f = |i: usize| -> Result<f64, String> {
                parts[i].trim().parse().map_err(|_| format!("bad number `{}`", parts[i]))
            };
            let n = |i: usize| -> Result<usize, String> {
                parts[i].trim().parse().map_err(|_| format!("bad count `{}`", parts[i]))
            };
            let mut g = Grid::new((f(0)?, f(1)?), (f(2)?, f(3)?), n(4)?, n(5)?)
                .map_err(|e| e.to_string())?;
            g.exclusions = default.exclusions.clone();
            Ok(g)
        }
    }
}

fn residual_value(entry: &solutions::SolutionEntry, res: &solutions::EntryResidual, eps: f64) -> Value {
    let reports: Vec<Value> = res
        .reports
        .iter()
        .map(|(label, r)| {
            json!({
                "label": label,
                "sup_norm": r.sup_norm,
                "l2_norm": r.l2_norm,
                "n_points": r.n_points,
                "skipped": r.skipped,
            })
        })
        .collect();
    json!({
        "entry_id": entry.id,
        "equation": entry.equation_id,
        "epsilon": eps,
        "grid": entry.default_grid,
        "provenance": entry.provenance,
        "verdict": if res.pass { "pass" } else { "fail" },
        "reports": reports,
    })
}

fn residual_text(entry: &solutions::SolutionEntry, res: &solutions::EntryResidual, eps: f64) -> String {
    let mut text = format!(
        "entry: {} (equation {}, {:?}, eps = {eps})\n",
        entry.id, entry.equation_id, entry.provenance
    );
    for (label, r) in &res.reports {
        text.push_str(&format!(
            "  {label}: sup = {:.3e}, l2 = {:.3e}, points = {}, skipped = {}\n",
            r.sup_norm, r.l2_norm, r.n_points, r.skipped
        ));
    }
    text.push_str(&format!(
        "verdict: {} (expected {})\n",
        if res.pass { "pass" } else { "fail" },
        if entry.expect_zero { "pass" } else { "nonzero residual" }
    ));
    text
}

fn cmd_residual(entry_id: &str, eps: f64, grid: Option<&str>) -> Result<(i32, Value), String> {
    let entry = catalog::entry(entry_id).map_err(|e| e.to_string())?;
    let grid = parse_grid(grid, &entry.default_grid)?;
    let res = solutions::residual(&entry, &grid, eps).map_err(|e| e.to_string())?;
    let text = residual_text(&entry, &res, eps);
    let mut v = residual_value(&entry, &res, eps);
    v["command"] = json!("residual");
    v["text"] = json!(text);
    let code = if entry.expect_zero && !res.pass { 1 } else { 0 };
    Ok((code, v))
}

fn cmd_order_scaling(
    entry_id: &str,
    eps_list: &str,
    grid: Option<&str>,
) -> Result<(i32, Value), String> {
    let entry = catalog::entry(entry_id).map_err(|e| e.to_string())?;
    let grid = parse_grid(grid, &entry.default_grid)?;
    let eps: Result<Vec<f64>, String> = eps_list
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| format!("bad epsilon `{s}`")))
        .collect();
    let eps = eps?;
    let scaling = solutions::order_scaling(&entry, &grid, &eps).map_err(|e| e.to_string())?;
    let mut text = format!("entry: {}\n", entry.id);
    for (e, s) in &scaling.per_eps {
        text.push_str(&format!("  eps = {e:.3e}: defect sup = {s:.6e}\n"));
    }
    if scaling.exact {
        text.push_str("verdict: exact (defect below tolerance for all eps)\n");
    } else {
        text.push_str(&format!(
            "slopes: {:?}\nfitted exponent: {:.4}\n",
            scaling.slopes,
            scaling.fitted_exponent.expect("not exact")
        ));
    }
    let v = json!({
        "command": "order-scaling",
        "entry_id": entry.id,
        "scaling": scaling,
        "text": text,
    });
    Ok((0, v))
}

fn cmd_transform(entry_id: &str, flow: usize, s: f64, eps: f64) -> Result<(i32, Value), String> {
    if !(1..=3).contains(&flow) {
        return Err("--flow must be 1, 2 or 3".into());
    }
    let entry = catalog::entry(entry_id).map_err(|e| e.to_string())?;
    let fields = catalog::kpp3_fields().map_err(|e| e.to_string())?;
    let label = format!("G{flow}(s={s})");
    let transformed = solutions::transform_solution(&entry, &fields[flow - 1], s, &label)
        .map_err(|e| e.to_string())?;
    let res = solutions::residual(&transformed, &transformed.default_grid, eps)
        .map_err(|e| e.to_string())?;
    let mut text = format!(
        "entry: {} -> {}\norder0: {}\norder1: {}\n",
        entry.id,
        transformed.id,
        transformed.order0,
        transformed.order1.as_ref().expect("split entry")
    );
    text.push_str(&residual_text(&transformed, &res, eps));
    let mut v = residual_value(&transformed, &res, eps);
    v["command"] = json!("transform");
    v["order0"] = json!(transformed.order0.to_string());
    v["order1"] = json!(transformed.order1.as_ref().map(|e| e.to_string()));
    v["text"] = json!(text);
    let code = if transformed.expect_zero && !res.pass { 1 } else { 0 };
    Ok((code, v))
}
