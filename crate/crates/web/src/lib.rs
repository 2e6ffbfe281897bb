//! Browser demo: Picard orbits with a-priori bounds, Fredholm solutions with
//! their certificate, and Ciric ratio heatmaps on interval spaces.
//!
//! Each operation has a plain Rust function returning a JSON string and a
//! thin `#[wasm_bindgen]` wrapper for the page.

use serde_json::{json, Value};
use suprafix::contraction::{m_value, orbit, ratio, ExprMap};
use suprafix::fredholm::{sup_steps, FredholmProblem, Kernel, QuadratureRule, SolveOptions, Term};
use suprafix::kexpr::parse;
use suprafix::picard::{
    apriori_tail_sum, cauchy_tail_bound, iterate, mu_initial, verify_trace_bounds, ConvexRate, StoppingCriteria,
};
use suprafix::space::{IntervalSpace, Suprametric};
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// `form` is `absolute` (param = rho), `poly` (param = lambda) or `exp`
/// (param = alpha).
pub fn interval(a: f64, b: f64, form: &str, param: f64) -> Result<IntervalSpace, String> {
    match form {
        "absolute" => IntervalSpace::absolute(a, b, param),
        "poly" => IntervalSpace::poly(a, b, param),
        "exp" => IntervalSpace::exponential(a, b, param),
        other => return Err(format!("unknown form `{other}`")),
    }
    .map_err(err)
}

fn map_of(expr: &str) -> Result<ExprMap, String> {
    Ok(ExprMap::new(parse(expr).map_err(err)?))
}

/// Picard orbit of `x -> expr` from `x0`. With `0 <= alpha < 1` the trace
/// carries the step bounds `alpha^floor(n/m) mu` and the Cauchy tail bounds.
#[allow(clippy::too_many_arguments)]
pub fn orbit_json(
    expr: &str,
    a: f64,
    b: f64,
    form: &str,
    param: f64,
    x0: f64,
    max_iters: usize,
    m: usize,
    alpha: f64,
) -> Result<String, String> {
    let space = interval(a, b, form, param)?;
    let map = map_of(expr)?;
    let rate = if (0.0..1.0).contains(&alpha) { Some(ConvexRate::new(m, alpha).map_err(err)?) } else { None };
    let stop = StoppingCriteria { max_iters, displacement_tol: 1e-14, tail_bound_tol: 0.0 };
    let tr = iterate(&map, &space, x0, &stop, rate).map_err(err)?;

    let mut tail_bounds = Vec::new();
    let mut violations = Vec::new();
    if let Some(r) = rate {
        if let Ok(mu) = mu_initial(&tr, r.m) {
            tail_bounds = (0..tr.steps())
                .map(|n| cauchy_tail_bound(apriori_tail_sum(n, r.m, r.alpha, mu), space.rho()))
                .collect();
        }
        if let Ok(rep) = verify_trace_bounds(&tr, r.m, r.alpha, 1e-9) {
            violations = rep.violations.iter().map(|v| v.n).collect();
        }
    }
    Ok(json!({
        "rho": space.rho(),
        "points": tr.points,
        "displacements": tr.displacements,
        "bounds": tr.bounds,
        "tail_bounds": tail_bounds,
        "violations": violations,
        "converged": tr.converged,
        "stop": format!("{:?}", tr.stop),
        "residual": tr.residual,
    })
    .to_string())
}

/// Solves `f = g + int_a^b K(x,t) f(t) dt` on `n` nodes. An empty `g` means
/// the homogeneous equation. Refuses kernels without a valid certificate.
pub fn fredholm_json(kernel: &str, g: &str, a: f64, b: f64, n: usize, rule: &str, lambda: f64) -> Result<String, String> {
    let rule = match rule {
        "trapezoid" => QuadratureRule::Trapezoid,
        "simpson" => QuadratureRule::Simpson,
        other => return Err(format!("unknown rule `{other}`")),
    };
    let mut p = FredholmProblem::new(a, b, Kernel::Expr(parse(kernel).map_err(err)?), n)
        .and_then(|p| p.with_rule(rule))
        .and_then(|p| p.with_lambda(lambda))
        .map_err(err)?;
    if !g.trim().is_empty() {
        p = p.with_source(Term::Expr(parse(g).map_err(err)?)).map_err(err)?;
    }
    let c = p.certify().map_err(err)?;
    let certificate = json!({ "m": c.m_bound, "l": c.l, "a0": c.a0, "a1": c.a1, "valid": c.valid });
    if !c.valid {
        return Ok(json!({ "certificate": certificate, "refused": true }).to_string());
    }
    let mut opts = SolveOptions::default();
    opts.stop.displacement_tol = 1e-10 * (1e-10 + lambda);
    let sol = p.solve(&opts).map_err(err)?;
    Ok(json!({
        "certificate": certificate,
        "refused": false,
        "nodes": sol.solution.nodes,
        "values": sol.solution.values,
        "iterations": sol.trace.steps(),
        "sup_steps": sup_steps(&sol.trace),
        "residual_sup": sol.residual_sup,
        "converged": sol.converged,
    })
    .to_string())
}

/// Per-pair Ciric ratios `d(T^n x, T^n y) / (lambda M(x, y))` on a
/// `grid x grid` sweep; rows are `x`, columns `y`.
#[allow(clippy::too_many_arguments)]
pub fn ciric_heatmap_json(
    expr: &str,
    a: f64,
    b: f64,
    form: &str,
    param: f64,
    lambda: f64,
    n: usize,
    grid: usize,
) -> Result<String, String> {
    if !(0.0..1.0).contains(&lambda) || n == 0 || !(2..=200).contains(&grid) {
        return Err("need 0 <= lambda < 1, n >= 1 and 2 <= grid <= 200".into());
    }
    let space = interval(a, b, form, param)?;
    let map = map_of(expr)?;
    let xs = space.grid(grid);
    let images = xs
        .iter()
        .map(|x| orbit(&map, &space, x, n).map(|o| o[n]))
        .collect::<Result<Vec<f64>, _>>()
        .map_err(err)?;
    let mut rows = Vec::with_capacity(grid);
    let (mut worst, mut at) = (0.0f64, Value::Null);
    for (i, x) in xs.iter().enumerate() {
        let mut row = Vec::with_capacity(grid);
        for (j, y) in xs.iter().enumerate() {
            let lhs = space.distance(&images[i], &images[j]);
            let m = m_value(&map, &space, x, y, n).map_err(err)?;
            let r = ratio(lhs, lambda * m);
            if r > worst {
                worst = r;
                at = json!([x, y]);
            }
            row.push(r);
        }
        rows.push(row);
    }
    Ok(json!({
        "xs": xs,
        "ratios": rows,
        "worst": worst,
        "worst_pair": at,
        "satisfied": worst <= 1.0 + 1e-9,
    })
    .to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn picard_orbit(
    expr: &str,
    a: f64,
    b: f64,
    form: &str,
    param: f64,
    x0: f64,
    max_iters: usize,
    m: usize,
    alpha: f64,
) -> Result<String, JsValue> {
    js(orbit_json(expr, a, b, form, param, x0, max_iters, m, alpha))
}

#[wasm_bindgen]
pub fn fredholm_solve(kernel: &str, g: &str, a: f64, b: f64, n: usize, rule: &str, lambda: f64) -> Result<String, JsValue> {
    js(fredholm_json(kernel, g, a, b, n, rule, lambda))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn ciric_heatmap(
    expr: &str,
    a: f64,
    b: f64,
    form: &str,
    param: f64,
    lambda: f64,
    n: usize,
    grid: usize,
) -> Result<String, JsValue> {
    js(ciric_heatmap_json(expr, a, b, form, param, lambda, n, grid))
}
