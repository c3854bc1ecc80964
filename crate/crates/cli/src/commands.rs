use std::path::Path;
use std::str::FromStr;

use serde_json::{json, Value};

use fravar::eulagrange::{
    discrete_gradient, el_discrepancy, el_discrepancy_probe, el_residual, ELProblem,
};
use fravar::fracgrid::{
    apply_adjoint_along_axis, apply_along_axis, build_operator, compose_order, make_grid, Axis,
    Field, FieldGrid, Grid1D, Grid2D,
};
use fravar::fracops::{
    frac_integral_dxa_with, mrl_derivative_with, rl_integral_with, FracOptions, FractionalOrder,
    OperatorKind, ScalarFunction,
};
use fravar::functional::{
    chainrule_ladder, eval_functional, first_variation, green_ladder, leibniz_ladder, FracMeasure,
    Outer, Perturbation,
};
use fravar::io::{format_sig, read_field, render_json, write_field};
use fravar::jets::{FieldSet, Orders};
use fravar::lagexpr::{evaluate, parse, Bindings, Expr};
use fravar::report::{interior_norms, ProbeReport, INTERIOR_MARGIN, SCHEMA};
use fravar::semiinverse::{
    builtin_system, constraint_residual, constraint_samples, identify_completion,
    verify_el_recovery, MonomialAnsatz, SystemFixture, SYSTEMS,
};

use crate::args::*;
use crate::CliError;

type CliResult<T> = Result<T, CliError>;

const DEFAULT_TOL: f64 = 1e-8;
const STATIONARITY_TOL: f64 = 1e-6;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    let out = match &cli.command {
        Command::Deriv(p) => point_op(g, p, PointKind::Derivative)?,
        Command::Integral(i) => point_op(
            g,
            &i.point,
            if i.dxa {
                PointKind::Dxa
            } else {
                PointKind::Integral
            },
        )?,
        Command::FieldOp(f) => field_op(g, f)?,
        Command::Elcheck(e) => elcheck(g, e)?,
        Command::Functional(f) => functional(g, f)?,
        Command::Stationarity(s) => stationarity(g, s)?,
        Command::Probe { kind } => probe(g, kind)?,
        Command::Semiinverse { kind } => semiinverse(g, kind)?,
        Command::Fixtures { system } => {
            format_or(g, Format::Json, &[Format::Json])?;
            fixtures(system.as_deref())?
        }
    };
    emit(g, &out)
}

fn emit(g: &Global, text: &str) -> CliResult<()> {
    match &g.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn tolerance(g: &Global, default: f64) -> CliResult<f64> {
    if let Some(t) = g.tol {
        return Ok(t);
    }
    match std::env::var("FRAVAR_TOL") {
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
            _ => Err(usage(format!("FRAVAR_TOL=`{s}` is not a positive number"))),
        },
        Err(_) => Ok(default),
    }
}

fn format_or(g: &Global, default: Format, allowed: &[Format]) -> CliResult<Format> {
    let f = g.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(usage(
            format!("output format {f:?} is not available for this command").to_lowercase(),
        ))
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn load_expr(inline: Option<&str>, file: Option<&Path>) -> CliResult<Expr> {
    let src = match (inline, file) {
        (Some(s), None) => s.to_string(),
        (None, Some(p)) => read_text(p)?,
        _ => {
            return Err(usage(
                "give exactly one of the inline expression or --expr-file",
            ))
        }
    };
    Ok(parse(&src)?)
}

/// An expression in the coordinates only, as a function of `(t, x)`.
fn coord_expr(src: &str) -> CliResult<impl Fn(f64, f64) -> f64 + Send + Sync + Clone + 'static> {
    let e = parse(src)?;
    if let Some(v) = e.jet_vars().into_iter().next() {
        return Err(usage(format!(
            "`{src}` may only use the coordinates t and x, found `{v}`"
        )));
    }
    Ok(move |t: f64, x: f64| {
        evaluate(
            &e,
            &Bindings::new()
                .with_coord(Axis::T, t)
                .with_coord(Axis::X, x),
        )
        .unwrap_or(f64::NAN)
    })
}

/// A function of one variable, bound to both `t` and `x`.
fn line_expr(src: &str) -> CliResult<impl Fn(f64) -> f64 + Send + Sync + Clone + 'static> {
    let f = coord_expr(src)?;
    Ok(move |s: f64| f(s, s))
}

fn key_value(s: &str) -> CliResult<(&str, &str)> {
    s.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| usage(format!("`{s}` is not of the form name=value")))
}

fn parse_params(items: &[String], set: &mut FieldSet) -> CliResult<()> {
    for item in items {
        let (k, v) = key_value(item)?;
        let v: f64 = v
            .parse()
            .map_err(|_| usage(format!("parameter `{k}` has a non-numeric value `{v}`")))?;
        set.insert_param(k, v);
    }
    Ok(())
}

fn orders_of(alpha: FractionalOrder, beta: Option<FractionalOrder>) -> Orders {
    Orders::new(alpha, beta.unwrap_or(alpha))
}

fn beta_for(grid: &FieldGrid, orders: Orders) -> Option<f64> {
    matches!(grid, FieldGrid::Plane(_)).then_some(orders.beta.value())
}

#[derive(Clone, Copy)]
enum PointKind {
    Derivative,
    Integral,
    Dxa,
}

fn point_op(g: &Global, p: &PointOp, kind: PointKind) -> CliResult<String> {
    let opts = FracOptions {
        tol: tolerance(g, DEFAULT_TOL)?,
    };
    let e = load_expr(p.source.expr.as_deref(), p.source.expr_file.as_deref())?;
    let f = line_expr(&fravar::lagexpr::format(&e))?;
    let (a, b) = (p.interval[0], p.interval[1]);
    let sf = if p.rough {
        ScalarFunction::new(a, b, f)?
    } else {
        ScalarFunction::smooth(a, b, f)?
    };
    let mut values = Vec::with_capacity(p.at.len());
    for &x in &p.at {
        let v = match kind {
            PointKind::Derivative => mrl_derivative_with(&sf, p.alpha, x, &opts)?,
            PointKind::Integral => rl_integral_with(&sf, p.alpha, x, &opts)?,
            PointKind::Dxa => frac_integral_dxa_with(&sf, p.alpha, x, &opts)?,
        };
        values.push(v);
    }
    let name = match kind {
        PointKind::Derivative => "deriv",
        PointKind::Integral => "integral",
        PointKind::Dxa => "integral-dxa",
    };
    Ok(
        match format_or(g, Format::Text, &[Format::Text, Format::Json, Format::Csv])? {
            Format::Text if values.len() == 1 => format!("{}\n", format_sig(values[0], 10)),
            Format::Text => {
                p.at.iter()
                    .zip(&values)
                    .map(|(x, v)| format!("{} {}\n", format_sig(*x, 10), format_sig(*v, 10)))
                    .collect()
            }
            Format::Csv => std::iter::once("x,value\n".to_string())
                .chain(
                    p.at.iter()
                        .zip(&values)
                        .map(|(x, v)| format!("{x:.16e},{v:.16e}\n")),
                )
                .collect(),
            Format::Json => render_json(&json!({
                "schema": SCHEMA,
                "kind": name,
                "alpha": p.alpha.value(),
                "expr": fravar::lagexpr::format(&e),
                "interval": [a, b],
                "points": p.at.iter().zip(&values).map(|(x, v)| json!({"x": x, "value": v})).collect::<Vec<_>>(),
            })),
        },
    )
}

fn field_op(g: &Global, f: &FieldOp) -> CliResult<String> {
    format_or(g, Format::Csv, &[Format::Csv])?;
    let file = read_field(&read_text(&f.field)?)?;
    let field = &file.field;
    let axis = match f.axis {
        AxisArg::T => Axis::T,
        AxisArg::X => Axis::X,
    };
    let line = *field.grid().axis(axis)?;
    let kind = match f.op {
        OpKind::Derivative => OperatorKind::Derivative,
        OpKind::Integral => OperatorKind::Integral,
    };
    let pipeline = compose_order(&build_operator(f.alpha, kind, line), f.compose as usize)?;
    let out = if f.adjoint {
        apply_adjoint_along_axis(&pipeline, field, axis)?
    } else {
        apply_along_axis(&pipeline, field, axis)?
    };
    Ok(write_field(&out, file.alpha, file.beta))
}

fn load_problem(p: &Problem) -> CliResult<(Expr, FieldSet, Orders)> {
    let l = load_expr(p.lagrangian.as_deref(), p.expr_file.as_deref())?;
    let mut set = FieldSet::new();
    for item in &p.fields {
        let (name, path) = match item.split_once('=') {
            Some((n, path)) => (n.trim().to_string(), Path::new(path.trim())),
            None => {
                let path = Path::new(item.as_str());
                let stem = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .ok_or_else(|| usage(format!("cannot name a field after `{item}`")))?;
                (stem.to_string(), path)
            }
        };
        set.insert_field(name, read_field(&read_text(path)?)?.field);
    }
    parse_params(&p.params, &mut set)?;
    Ok((l, set, orders_of(p.alpha, p.beta)))
}

fn build_problem(p: &Problem) -> CliResult<ELProblem> {
    let (l, set, orders) = load_problem(p)?;
    if set.fields().is_empty() {
        return Err(usage("at least one --field is required"));
    }
    Ok(ELProblem::new(l, set, orders.alpha, orders.beta)?)
}

fn elcheck(g: &Global, e: &Elcheck) -> CliResult<String> {
    let p = build_problem(&e.problem)?;
    let r = el_residual(&p, &e.wrt)?;
    let beta = beta_for(p.grid(), p.orders());
    let alpha = p.orders().alpha.value();
    Ok(
        match format_or(g, Format::Csv, &[Format::Csv, Format::Json, Format::Text])? {
            Format::Csv => write_field(&r, Some(alpha), beta),
            f => {
                let (l2, max) = interior_norms(r.values(), p.grid(), INTERIOR_MARGIN);
                let d = el_discrepancy(&p, &e.wrt)?;
                if f == Format::Text {
                    format!(
                    "interior residual  l2 {}  max {}\ngradient discrepancy (relative)  l2 {}  max {}\n",
                    format_sig(l2, 10),
                    format_sig(max, 10),
                    format_sig(d.l2, 10),
                    format_sig(d.max, 10)
                )
                } else {
                    render_json(&json!({
                        "schema": SCHEMA,
                        "kind": "elcheck",
                        "lagrangian": fravar::lagexpr::format(p.lagrangian()),
                        "wrt": e.wrt,
                        "alpha": alpha,
                        "beta": beta,
                        "l2": l2,
                        "max": max,
                        "discrepancy": {"l2": d.l2, "max": d.max},
                    }))
                }
            }
        },
    )
}

fn grid_from_numbers(v: &[f64]) -> CliResult<FieldGrid> {
    let count = |x: f64| -> CliResult<usize> {
        if x >= 1.0 && x.fract() == 0.0 {
            Ok(x as usize)
        } else {
            Err(usage(format!("cell count {x} must be a positive integer")))
        }
    };
    match v {
        [a, b, n] => Ok(FieldGrid::Line(Grid1D::new(*a, *b, count(*n)?)?)),
        [a, b, n, c, d, m] => Ok(FieldGrid::Plane(Grid2D::new(
            Grid1D::new(*a, *b, count(*n)?)?,
            Grid1D::new(*c, *d, count(*m)?)?,
        ))),
        _ => Err(usage("--grid takes `a b n` or `a b n c d m`")),
    }
}

fn functional(g: &Global, f: &FunctionalCmd) -> CliResult<String> {
    let (l, set, orders) = load_problem(&f.problem)?;
    let grid = match (set.fields().is_empty(), f.grid.is_empty()) {
        (true, true) => return Err(usage("give --field or --grid")),
        (false, false) => return Err(usage("--grid cannot be combined with --field")),
        (true, false) => grid_from_numbers(&f.grid)?,
        (false, true) => set.grid()?,
    };
    let measure = FracMeasure::new(orders, grid);
    let value = eval_functional(&l, &set, &measure)?;
    Ok(
        match format_or(g, Format::Text, &[Format::Text, Format::Json])? {
            Format::Json => render_json(&json!({
                "schema": SCHEMA,
                "kind": "functional",
                "lagrangian": fravar::lagexpr::format(&l),
                "alpha": orders.alpha.value(),
                "beta": beta_for(&grid, orders),
                "value": value,
            })),
            _ => format!("{}\n", format_sig(value, 10)),
        },
    )
}

/// `direction(t, x)` times a product of half-sine bumps, exactly 0 on the boundary.
fn bump_field(grid: &FieldGrid, direction: impl Fn(f64, f64) -> f64) -> CliResult<Field> {
    use std::f64::consts::PI;
    let bump = |s: f64, g: &Grid1D| (PI * (s - g.a()) / (g.b() - g.a())).sin();
    let mut f = match grid {
        FieldGrid::Line(g) => Field::sample_line(*g, |t| direction(t, t) * bump(t, g))?,
        FieldGrid::Plane(g) => {
            Field::sample_plane(*g, |t, x| direction(t, x) * bump(t, &g.t) * bump(x, &g.x))?
        }
    }
    .into_values();
    for (v, edge) in f.iter_mut().zip(grid.boundary_mask()) {
        if edge {
            *v = 0.0;
        }
    }
    Ok(Field::new(*grid, f)?)
}

fn stationarity(g: &Global, s: &Stationarity) -> CliResult<String> {
    let tol = tolerance(g, STATIONARITY_TOL)?;
    let p = build_problem(&s.problem)?;
    let eta = bump_field(p.grid(), coord_expr(&s.eta)?)?;
    let y = p
        .fields()
        .field(&s.wrt)
        .ok_or_else(|| usage(format!("no field named `{}`", s.wrt)))?;
    let pert = match s.epsilon {
        Some(eps) => Perturbation::new(eta.clone(), eps)?,
        None => Perturbation::scaled_to(eta.clone(), y)?,
    };
    let measure = p.measure();
    let fd = first_variation(p.lagrangian(), p.fields(), &measure, &pert, &s.wrt)?;
    let grad = discrete_gradient(&p, &s.wrt, &p.grid().boundary_mask())?;
    let adj = grad.dot(&eta)?;
    let scale = fd.abs().max(adj.abs());
    let rel = if scale > 0.0 {
        (fd - adj).abs() / scale
    } else {
        0.0
    };
    let pass = rel <= tol;
    Ok(
        match format_or(g, Format::Text, &[Format::Text, Format::Json])? {
            Format::Json => render_json(&json!({
                "schema": SCHEMA,
                "kind": "stationarity",
                "wrt": s.wrt,
                "alpha": p.orders().alpha.value(),
                "beta": beta_for(p.grid(), p.orders()),
                "epsilon": pert.epsilon(),
                "first_variation": fd,
                "gradient_pairing": adj,
                "relative_error": rel,
                "tolerance": tol,
                "pass": pass,
            })),
            _ => format!(
                "first variation  {}\ngradient pairing {}\nrelative error   {} ({})\n",
                format_sig(fd, 10),
                format_sig(adj, 10),
                format_sig(rel, 10),
                if pass {
                    "within tolerance"
                } else {
                    "exceeds tolerance"
                }
            ),
        },
    )
}

fn report_output(g: &Global, r: &ProbeReport) -> CliResult<String> {
    Ok(
        match format_or(g, Format::Json, &[Format::Json, Format::Csv])? {
            Format::Csv => {
                let keys: Vec<&String> = r
                    .rows
                    .first()
                    .map(|row| row.values.keys().collect())
                    .unwrap_or_default();
                let mut s = String::from("n,h,l2,max");
                for k in &keys {
                    s.push(',');
                    s.push_str(k);
                }
                s.push('\n');
                for row in &r.rows {
                    s.push_str(&format!(
                        "{},{:.16e},{:.16e},{:.16e}",
                        row.n, row.h, row.l2, row.max
                    ));
                    for k in &keys {
                        s.push_str(&format!(",{:.16e}", row.values[*k]));
                    }
                    s.push('\n');
                }
                s
            }
            _ => render_json(&r.to_json()),
        },
    )
}

fn interval_of(v: &[f64]) -> (f64, f64) {
    (v[0], v[1])
}

fn probe(g: &Global, kind: &Probe) -> CliResult<String> {
    let report = match kind {
        Probe::Green {
            alpha,
            beta,
            p,
            q,
            rect,
            ladder,
        } => green_ladder(
            coord_expr(p)?,
            coord_expr(q)?,
            orders_of(*alpha, *beta),
            [rect[0], rect[1], rect[2], rect[3]],
            &ladder.ns,
        )?,
        Probe::Leibniz {
            alpha,
            f,
            g: gs,
            interval,
            ladder,
        } => leibniz_ladder(
            line_expr(f)?,
            line_expr(gs)?,
            *alpha,
            interval_of(interval),
            &ladder.ns,
        )?,
        Probe::Chain {
            beta,
            u,
            outer,
            interval,
            ladder,
        } => {
            let outer = Outer::from_str(outer).map_err(|_| {
                usage(format!(
                    "unknown outer function `{outer}` (square_half, sin, cos, exp)"
                ))
            })?;
            chainrule_ladder(
                line_expr(u)?,
                outer,
                *beta,
                interval_of(interval),
                &ladder.ns,
            )?
        }
        Probe::ElDiscrepancy {
            lagrangian,
            wrt,
            samples,
            params,
            alpha,
            beta,
            domain,
            ladder,
        } => {
            let l = parse(lagrangian)?;
            let mut base = FieldSet::new();
            parse_params(params, &mut base)?;
            let mut sampled = Vec::new();
            for s in samples {
                let (name, src) = key_value(s)?;
                sampled.push((name.to_string(), coord_expr(src)?));
            }
            let orders = orders_of(*alpha, *beta);
            let rect = match (beta.is_some(), domain.as_slice()) {
                (false, []) => vec![0.0, 1.0],
                (true, []) => vec![0.0, 1.0, 0.0, 1.0],
                (false, [a, b]) => vec![*a, *b],
                (true, [a, b, c, d]) => vec![*a, *b, *c, *d],
                _ => {
                    return Err(usage(
                        "--domain takes `a b` on a line or `a b c d` with --beta",
                    ))
                }
            };
            el_discrepancy_probe(
                |n| {
                    let t = make_grid(rect[0], rect[1], n)?;
                    let mut set = base.clone();
                    for (name, f) in &sampled {
                        let field = if rect.len() == 2 {
                            Field::sample_line(t, |s| f(s, s))?
                        } else {
                            Field::sample_plane(Grid2D::new(t, make_grid(rect[2], rect[3], n)?), f)?
                        };
                        set.insert_field(name.clone(), field);
                    }
                    ELProblem::new(l.clone(), set, orders.alpha, orders.beta)
                },
                wrt,
                &ladder.ns,
            )?
        }
    };
    report_output(g, &report)
}

fn unit_square(n: usize) -> CliResult<Grid2D> {
    Ok(Grid2D::new(
        make_grid(0.0, 1.0, n)?,
        make_grid(0.0, 1.0, n)?,
    ))
}

fn semiinverse(g: &Global, kind: &Semiinverse) -> CliResult<String> {
    match kind {
        Semiinverse::Identify {
            sys,
            samples,
            basis,
        } => {
            let fixture = builtin_system(&sys.system)?;
            if fixture.placeholder.is_none() {
                return Err(usage(format!(
                    "system `{}` has no completion term to identify",
                    fixture.name
                )));
            }
            let ansatz = if basis.is_empty() {
                MonomialAnsatz::default_for(&fixture)?
            } else {
                let b: Vec<&str> = basis.iter().map(String::as_str).collect();
                MonomialAnsatz::new(&b)?
            };
            let orders = Orders::new(sys.alpha, sys.beta);
            let sets =
                constraint_samples(&fixture, unit_square(sys.n)?, orders, *samples, sys.seed)?;
            let id = identify_completion(&fixture, &ansatz, &sets, orders)?;
            Ok(
                match format_or(g, Format::Json, &[Format::Json, Format::Text])? {
                    Format::Text => id
                        .labels
                        .iter()
                        .zip(&id.coefficients)
                        .map(|(l, c)| format!("{l:<16} {}\n", format_sig(*c, 10)))
                        .collect(),
                    _ => render_json(&id.to_json(&fixture.name)),
                },
            )
        }
        Semiinverse::Verify { sys } => {
            let tol = tolerance(g, DEFAULT_TOL)?;
            let fixture = builtin_system(&sys.system)?;
            let orders = Orders::new(sys.alpha, sys.beta);
            let (set, grid) = verification_fields(&fixture, orders, sys.n, sys.seed)?;
            let measure = FracMeasure::new(orders, grid);
            let report = verify_el_recovery(&fixture, &set, &measure)?;
            let constraints = constraint_residual(&fixture, &set, &measure)?;
            let pass = report.max <= tol * report.target_l2.max(1.0);
            let mut v = serde_json::to_value(&report).expect("report serializes");
            v["constraints"] = Value::Array(
                constraints
                    .iter()
                    .map(|c| json!({"constraint": c.constraint, "l2": c.l2, "max": c.max}))
                    .collect(),
            );
            v["tolerance"] = json!(tol);
            v["pass"] = json!(pass);
            Ok(
                match format_or(g, Format::Json, &[Format::Json, Format::Text])? {
                    Format::Text => {
                        let mut s = format!(
                        "{}: residual vs target  l2 {}  max {} ({})\nconstrained functional {}\n",
                        fixture.name,
                        format_sig(report.l2, 10),
                        format_sig(report.max, 10),
                        if pass { "within tolerance" } else { "exceeds tolerance" },
                        format_sig(report.functional, 10)
                    );
                        for c in &constraints {
                            s.push_str(&format!(
                                "constraint {}  max {}\n",
                                c.constraint,
                                format_sig(c.max, 10)
                            ));
                        }
                        s
                    }
                    _ => render_json(&v),
                },
            )
        }
    }
}

/// Fields for verification: constraint-consistent samples on the unit square
/// for the field systems, a fixed smooth trajectory on [0, 1] for the others.
fn verification_fields(
    fixture: &SystemFixture,
    orders: Orders,
    n: usize,
    seed: u64,
) -> CliResult<(FieldSet, FieldGrid)> {
    if fixture.line {
        let grid = make_grid(0.0, 1.0, n)?;
        let y = Field::sample_line(grid, |t| 0.5 * (2.0 * t).sin() + 0.2 * t)?;
        Ok((
            FieldSet::new().with_field(fixture.target_wrt.clone(), y),
            FieldGrid::Line(grid),
        ))
    } else {
        let grid = unit_square(n)?;
        let set = constraint_samples(fixture, grid, orders, 1, seed)?.remove(0);
        Ok((set, FieldGrid::Plane(grid)))
    }
}

fn fixtures(system: Option<&str>) -> CliResult<String> {
    let v = match system {
        Some(name) => builtin_system(name)?.to_json(),
        None => Value::Array(
            SYSTEMS
                .iter()
                .map(|n| builtin_system(n).map(|f| f.to_json()))
                .collect::<fravar::Result<Vec<_>>>()?,
        ),
    };
    Ok(render_json(&v))
}
