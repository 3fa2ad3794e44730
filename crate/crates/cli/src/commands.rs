//! Subcommand bodies. Each returns a JSON result, a pass flag and an optional table.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::{json, Value as Json};
use widder_core::calculus::{mixed_derivative, Method};
use widder_core::inversion::{invert, DEFAULT_K_MAX};
use widder_core::lcs::{Seminorm, SeminormFamily};
use widder_core::representations::{
    adf_identity_check, build_f_r, build_g_h, build_h_r, increment_sweep, verify_prc0, verify_prc0w, verify_prc1, verify_prc1w, verify_w_relation,
    w_accumulate, FunctionalDensityFamily,
};
use widder_core::transform::{laplace_forward, weighted_transform, Status};
use widder_core::widder::{certify_with, default_grid, default_vmax, Verdict};
use widder_core::{Value, C64};

use crate::config::{broadcast, cfg_err, parse_axes, tensor_points, CommandKind, ConfigError, RunConfig, Subject};

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub struct Outcome {
    pub result: Json,
    pub passed: bool,
    pub tolerances: BTreeMap<String, f64>,
    pub table: Option<Table>,
}

type Res = Result<Outcome, ConfigError>;

pub fn run(kind: CommandKind, cfg: &RunConfig) -> Res {
    let subject = Subject::resolve(cfg)?;
    match kind {
        CommandKind::Transform => transform(cfg, &subject),
        CommandKind::Derivative => derivative(cfg, &subject),
        CommandKind::WidderCheck => widder_check(cfg, &subject),
        CommandKind::Invert => inversion(cfg, &subject, false),
        CommandKind::Roundtrip => inversion(cfg, &subject, true),
        CommandKind::Represent => represent(cfg, &subject),
    }
}

fn tols(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn check_points(points: &[Vec<f64>], n: usize, what: &str) -> Result<(), ConfigError> {
    match points.first() {
        Some(p) if p.len() != n => cfg_err(format!("{what} grid has {} coordinates, the function has {n}", p.len())),
        None => cfg_err(format!("{what} grid is empty")),
        _ => Ok(()),
    }
}

fn lambda_points(spec: Option<&String>, s: &Subject) -> Result<Vec<Vec<C64>>, ConfigError> {
    match spec {
        Some(g) => {
            let pts = tensor_points(&parse_axes(g)?);
            check_points(&pts, s.n, "lambda")?;
            Ok(pts.into_iter().map(|p| p.into_iter().map(|x| C64::new(x, 0.0)).collect()).collect())
        }
        None => Ok(s.sample_lambdas.clone()),
    }
}

fn time_points(spec: Option<&String>, s: &Subject, default_axis: &str) -> Result<Vec<Vec<f64>>, ConfigError> {
    let axes = match spec {
        Some(g) => parse_axes(g)?,
        None => vec![parse_axes(default_axis)?.remove(0); s.n],
    };
    let pts = tensor_points(&axes);
    check_points(&pts, s.n, "t")?;
    if pts.iter().flatten().any(|x| *x < 0.0) {
        return cfg_err("time points must be nonnegative");
    }
    Ok(pts)
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn value_cols(v: &Value) -> Vec<String> {
    v.iter().flat_map(|z| [fmt(z.re), fmt(z.im)]).collect()
}

fn value_header(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).flat_map(|j| [format!("{prefix}_re_{j}"), format!("{prefix}_im_{j}")]).collect()
}

fn coord_header(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}_{i}")).collect()
}

fn transform(cfg: &RunConfig, s: &Subject) -> Res {
    let tol = cfg.tol.unwrap_or(1e-8);
    let points = lambda_points(cfg.grid.as_ref().or(cfg.lambda.as_ref()), s)?;
    let rows: Vec<_> = points
        .par_iter()
        .map(|l| {
            let num = laplace_forward(&s.density, l, 0.1 * tol)?;
            let exact = s.oracle.eval(l)?;
            let err = (&num.value - &exact).max_abs();
            Ok((l.clone(), num, exact, err))
        })
        .collect::<widder_core::Result<_>>()?;
    let passed = rows.iter().all(|(_, num, _, e)| *e <= tol && num.status != Status::Failed);
    let mut header = coord_header("lambda", s.n);
    header.extend(value_header("value", s.d));
    header.extend(value_header("exact", s.d));
    header.push("error".into());
    let table = rows
        .iter()
        .map(|(l, num, exact, e)| {
            let mut r: Vec<String> = l.iter().map(|z| fmt(z.re)).collect();
            r.extend(value_cols(&num.value));
            r.extend(value_cols(exact));
            r.push(fmt(*e));
            r
        })
        .collect();
    let points: Vec<Json> = rows
        .iter()
        .map(|(l, num, exact, e)| json!({"lambda": l, "transform": num, "closed_form": exact, "error": e}))
        .collect();
    Ok(Outcome {
        result: json!({"function": s.name, "points": points, "max_error": rows.iter().map(|r| r.3).fold(0.0, f64::max)}),
        passed,
        tolerances: tols(&[("error", tol), ("quadrature", 0.1 * tol)]),
        table: Some(Table { header, rows: table }),
    })
}

fn all_orders(vmax: &[u32]) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = vec![vec![]];
    for &m in vmax {
        out = out.iter().flat_map(|p| (0..=m).map(move |x| [p.as_slice(), &[x]].concat())).collect();
    }
    out
}

fn derivative(cfg: &RunConfig, s: &Subject) -> Res {
    let tol = cfg.tol.unwrap_or(1e-8);
    let method = cfg.method.unwrap_or(Method::Auto);
    let points = lambda_points(cfg.grid.as_ref().or(cfg.lambda.as_ref()), s)?;
    let orders = match &cfg.orders {
        Some(o) => {
            if o.is_empty() || o.iter().any(|v| v.len() != s.n) {
                return cfg_err(format!("orders must be a nonempty list of {}-tuples", s.n));
            }
            o.clone()
        }
        None => all_orders(&broadcast(cfg.vmax.as_deref().unwrap_or(&[2]), s.n, "vmax")?),
    };
    let jobs: Vec<(Vec<C64>, Vec<u32>)> = points.iter().flat_map(|l| orders.iter().map(move |v| (l.clone(), v.clone()))).collect();
    let derivs: Vec<Value> = jobs
        .par_iter()
        .map(|(l, v)| mixed_derivative(&s.oracle, l, v, method))
        .collect::<widder_core::Result<_>>()?;
    // errors are relative to the largest derivative at the same lambda
    let local: Vec<f64> = derivs.chunks(orders.len()).map(|c| c.iter().map(|d| d.max_abs()).fold(1e-300, f64::max)).collect();
    let rows: Vec<_> = jobs
        .par_iter()
        .zip(&derivs)
        .enumerate()
        .map(|(i, ((l, v), d))| {
            let scale = d.max_abs().max(local[i / orders.len()]);
            let sign = if v.iter().sum::<u32>() % 2 == 0 { 1.0 } else { -1.0 };
            let w = weighted_transform(&s.density, l, v, 1e-11 * scale)?.value.scale_real(sign);
            let rel = (d - &w).max_abs() / scale;
            Ok((l.clone(), v.clone(), d.clone(), w, rel))
        })
        .collect::<widder_core::Result<_>>()?;
    let passed = rows.iter().all(|r| r.4 <= tol);
    let mut header = coord_header("lambda", s.n);
    header.extend(coord_header("v", s.n));
    header.extend(value_header("derivative", s.d));
    header.extend(value_header("weighted_transform", s.d));
    header.push("relative_error".into());
    let table = rows
        .iter()
        .map(|(l, v, d, w, e)| {
            let mut r: Vec<String> = l.iter().map(|z| fmt(z.re)).collect();
            r.extend(v.iter().map(|x| x.to_string()));
            r.extend(value_cols(d));
            r.extend(value_cols(w));
            r.push(fmt(*e));
            r
        })
        .collect();
    let items: Vec<Json> = rows
        .iter()
        .map(|(l, v, d, w, e)| json!({"lambda": l, "v": v, "derivative": d, "signed_weighted_transform": w, "relative_error": e}))
        .collect();
    Ok(Outcome {
        result: json!({"function": s.name, "method": method, "checks": items, "max_relative_error": rows.iter().map(|r| r.4).fold(0.0, f64::max)}),
        passed,
        tolerances: tols(&[("relative_to_local_scale", tol)]),
        table: Some(Table { header, rows: table }),
    })
}

fn family_for(cfg: &RunConfig, s: &Subject) -> Result<SeminormFamily, ConfigError> {
    match &cfg.seminorms {
        Some(ws) => {
            let sem = ws.iter().map(|w| Seminorm::new(w.clone())).collect::<widder_core::Result<Vec<_>>>()?;
            Ok(SeminormFamily::new(s.d, sem)?)
        }
        None => Ok(s.density.envelope().map(|e| e.family.clone()).unwrap_or_else(|| SeminormFamily::sup(s.d))),
    }
}

fn omega_for(cfg: &RunConfig, s: &Subject) -> Result<Vec<f64>, ConfigError> {
    match &cfg.omega {
        Some(w) => broadcast(w, s.n, "omega"),
        None => s
            .density
            .envelope()
            .map(|e| e.omega.clone())
            .or_else(|| s.oracle.halfplane().map(|h| h.to_vec()))
            .map_or_else(|| cfg_err("no omega given and none declared by the function"), Ok),
    }
}

fn widder_check(cfg: &RunConfig, s: &Subject) -> Res {
    let omega = omega_for(cfg, s)?;
    let vmax = match &cfg.vmax {
        Some(v) => broadcast(v, s.n, "vmax")?,
        None => default_vmax(&s.oracle),
    };
    let grid: Vec<Vec<C64>> = match cfg.grid.as_ref().or(cfg.lambda.as_ref()) {
        Some(g) => {
            let axes = parse_axes(g)?;
            if axes.len() != s.n {
                return cfg_err(format!("lambda grid has {} axes, the function has {}", axes.len(), s.n));
            }
            axes.into_iter().map(|a| a.into_iter().map(|x| C64::new(x, 0.0)).collect()).collect()
        }
        None => default_grid(&omega),
    };
    let family = family_for(cfg, s)?;
    let rec = certify_with(&s.oracle, &omega, &grid, &vmax, &family, cfg.method.unwrap_or(Method::Auto))?;
    let declared = s.density.envelope().filter(|e| e.omega == omega && e.family == family);
    let consistent = declared.map(|e| rec.m_hat.iter().zip(&e.m).all(|(h, m)| *h <= m * (1.0 + 1e-6)));
    let passed = rec.verdict == Verdict::CertifiedAtLevel && consistent.unwrap_or(true);
    let mut header = vec!["seminorm".to_string(), "m_hat".to_string()];
    header.extend(coord_header("argmax_lambda", s.n));
    header.extend(coord_header("argmax_v", s.n));
    let table = rec
        .m_hat
        .iter()
        .zip(&rec.argmax)
        .enumerate()
        .map(|(i, (m, a))| {
            let mut r = vec![i.to_string(), fmt(*m)];
            r.extend(a.lambda.iter().map(|z| fmt(z.re)));
            r.extend(a.v.iter().map(|x| x.to_string()));
            r
        })
        .collect();
    Ok(Outcome {
        result: json!({
            "function": s.name,
            "certificate": rec,
            "declared_envelope": declared,
            "envelope_consistent": consistent,
        }),
        passed,
        tolerances: tols(&[("envelope_relative", 1e-6), ("refutation_factor", widder_core::widder::REFUTATION_FACTOR)]),
        table: Some(Table { header, rows: table }),
    })
}

fn inversion(cfg: &RunConfig, s: &Subject, compare: bool) -> Res {
    let tol = cfg.tol.unwrap_or(if compare { 1e-5 } else { 1e-6 });
    let kmax = cfg.kmax.unwrap_or(DEFAULT_K_MAX);
    let points = time_points(cfg.grid.as_ref().or(cfg.t.as_ref()), s, "0.5:2:0.5")?;
    if points.iter().flatten().any(|x| *x <= 0.0) {
        return cfg_err("inversion needs strictly positive time points");
    }
    let report = invert(&s.oracle, &points, tol, kmax);
    let mut header = coord_header("t", s.n);
    let mut rows = Vec::new();
    let result;
    let passed;
    if compare {
        header.extend(value_header("f", s.d));
        header.extend(value_header("f_hat", s.d));
        header.push("error".into());
        let mut max_err: f64 = 0.0;
        let mut nodes = Vec::new();
        for node in &report.nodes {
            let exact = s.density.eval(&node.t);
            let err = if node.error.is_some() { f64::INFINITY } else { (&exact - &node.value).max_abs() };
            max_err = max_err.max(err);
            let mut r: Vec<String> = node.t.iter().map(|x| fmt(*x)).collect();
            r.extend(value_cols(&exact));
            r.extend(value_cols(&node.value));
            r.push(fmt(err));
            rows.push(r);
            nodes.push(json!({"t": node.t, "f": exact, "f_hat": node.value, "error": if err.is_finite() { json!(err) } else { Json::Null }, "inversion": node}));
        }
        passed = max_err <= tol;
        result = json!({"function": s.name, "k_max": kmax, "nodes": nodes, "max_error": if max_err.is_finite() { json!(max_err) } else { Json::Null }});
    } else {
        header.extend(value_header("f_hat", s.d));
        header.push("delta".into());
        header.push("converged".into());
        for node in &report.nodes {
            let mut r: Vec<String> = node.t.iter().map(|x| fmt(*x)).collect();
            r.extend(value_cols(&node.value));
            r.push(fmt(node.delta));
            r.push(node.converged.to_string());
            rows.push(r);
        }
        passed = report.all_converged;
        result = json!({"function": s.name, "inversion": report});
    }
    let mut t = vec![("delta", tol)];
    if compare {
        t.push(("error", tol));
    }
    Ok(Outcome {
        result,
        passed,
        tolerances: tols(&t),
        table: Some(Table { header, rows }),
    })
}

fn represent(cfg: &RunConfig, s: &Subject) -> Res {
    let tol = cfg.tol.unwrap_or(1e-7);
    let r = broadcast(cfg.r.as_deref().unwrap_or(&[0.5]), s.n, "r")?;
    let lambdas = lambda_points(cfg.lambda.as_ref(), s)?;
    let default_axis = if s.n == 1 { "0:3:0.25" } else { "0.25:2:0.75" };
    let t_grid = time_points(cfg.grid.as_ref().or(cfg.t.as_ref()), s, default_axis)?;
    let family = family_for(cfg, s)?;
    let p0 = family.get(0).clone();

    let bundle = build_f_r(&s.density, &r)?;
    let prc1 = verify_prc1(&bundle, &s.oracle, &lambdas, tol)?;
    let fam = FunctionalDensityFamily::from_density(&s.density, &p0)?;
    let adf = adf_identity_check(&bundle, &fam, &t_grid, tol)?;
    let w = w_accumulate(&bundle)?;
    let w_rel = verify_w_relation(&bundle, &w, &s.oracle, &lambdas, tol)?;
    let mut passed = prc1.passed && adf.passed && w_rel.passed;
    let mut result = json!({
        "function": s.name,
        "r": r,
        "construction": bundle.construction,
        "prc1": prc1,
        "adf": adf,
        "w_relation": w_rel,
    });

    if let Some(env) = s.density.envelope() {
        let omega = match &cfg.omega {
            Some(w) => broadcast(w, s.n, "omega")?,
            None => env.omega.clone(),
        };
        let mut prc0 = Vec::new();
        for (p, m) in env.family.seminorms().iter().zip(&env.m) {
            let rep = verify_prc0(&bundle, p, *m, &omega, &t_grid, tol)?;
            passed &= rep.passed;
            prc0.push(rep);
        }
        let h = build_h_r(&s.density, &omega, &r)?;
        let prc1w = verify_prc1w(&h, &s.oracle, &lambdas, tol)?;
        passed &= prc1w.passed;
        let mut prc0w = Vec::new();
        for (p, m) in env.family.seminorms().iter().zip(&env.m) {
            let rep = verify_prc0w(&h, p, *m, &t_grid, tol)?;
            passed &= rep.passed;
            prc0w.push(rep);
        }
        result["envelope"] = json!(env);
        result["prc0"] = json!(prc0);
        result["prc1w"] = json!(prc1w);
        result["prc0w"] = json!(prc0w);
        if s.n == 1 {
            let gh = build_g_h(&s.density, omega[0], r[0])?;
            let inc = increment_sweep(&gh, env.family.get(0), env.m[0])?;
            passed &= inc.passed;
            result["increments"] = json!(inc);
        }
    }
    result["passed"] = json!(passed);

    let mut header = coord_header("t", s.n);
    header.extend(value_header("f_r", s.d));
    header.extend(value_header("w", s.d));
    let rows = t_grid
        .iter()
        .map(|t| {
            let mut row: Vec<String> = t.iter().map(|x| fmt(*x)).collect();
            row.extend(value_cols(&bundle.eval(t)));
            row.extend(value_cols(&w.eval(t)));
            row
        })
        .collect();
    Ok(Outcome {
        result,
        passed,
        tolerances: tols(&[("identity", tol), ("construction", widder_core::representations::CONSTRUCTION_TOL)]),
        table: Some(Table { header, rows }),
    })
}
