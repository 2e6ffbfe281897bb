//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs as a plain binary (`harness = false`).

use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use suprafix::contraction::{
    all_pairs, check_condition_c, check_k_continuity, check_orbital_lsc, fixed_points_among, grid_pairs, m_value,
    orbit, verify_ciric, verify_ciric_variant, verify_convex_m, ExprMap, FiniteMap, NMap, SelfMap,
};
use suprafix::corpus::{self, Body};
use suprafix::fredholm::{
    contraction_factors, separable_oracle, supra_distance, FredholmProblem, GridFunction, Kernel, QuadratureRule,
    SolveOptions, Term,
};
use suprafix::kexpr::{parse, BinOp, Expr, Func, ParseErrorKind, Var};
use suprafix::picard::{
    apriori_tail_sum, cauchy_tail_bound, iterate, iterations_for_tolerance, mu_initial, verify_trace_bounds,
    ConvexRate, OrbitTrace, StoppingCriteria,
};
use suprafix::space::{FiniteSpace, IntervalSpace, Suprametric};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ---------------------------------------------------------------- 1

fn four_point() -> (FiniteSpace, FiniteMap, NMap) {
    let labels = ["x", "y", "z", "w"].map(String::from).to_vec();
    let d = vec![
        vec![0.0, 3.0, 1.0, 1.0],
        vec![3.0, 0.0, 1.0, 1.0],
        vec![1.0, 1.0, 0.0, 1.0],
        vec![1.0, 1.0, 1.0, 0.0],
    ];
    let space = FiniteSpace::new(labels, d, 1.0).unwrap();
    // x -> y -> z -> z, w -> x
    let map = FiniteMap::new(vec![1, 2, 2, 0], 4).unwrap();
    (space, map, NMap::PerPoint(vec![2, 2, 3, 3]))
}

fn criterion_1() -> Check {
    let (space, map, n_map) = four_point();
    let rep = space.check_axioms(1e-12);
    ensure(rep.all_ok(), || format!("axioms at rho = 1 fail: {:?}", rep.violations))?;
    let metric = space.with_rho(0.0).map_err(err)?.check_axioms(1e-12);
    let v = metric.violations.first().ok_or("rho = 0 unexpectedly passes")?;
    let witness = [space.label(v.i), space.label(v.k), space.label(v.j)];
    ensure(witness == ["x", "z", "y"], || format!("metric witness {witness:?}"))?;

    let ciric = verify_ciric(&map, &space, &all_pairs(4), 1.0 / 3.0, &n_map, 1e-12).map_err(err)?;
    ensure(ciric.is_satisfied() && ciric.pairs_tested == 16, || format!("ciric {:?}", ciric.verdict))?;
    ensure(close(ciric.worst_ratio, 1.0, 1e-12), || format!("worst ratio {}", ciric.worst_ratio))?;

    let z = space.index("z").unwrap();
    let stop = StoppingCriteria { max_iters: 10, displacement_tol: 0.0, tail_bound_tol: 0.0 };
    let mut worst = 0;
    for x0 in 0..4 {
        let tr = iterate(&map, &space, x0, &stop, None).map_err(err)?;
        let first = tr.points.iter().position(|&p| p == z).ok_or("orbit misses z")?;
        worst = worst.max(first);
    }
    ensure(worst <= 3, || format!("z reached after {worst} steps"))?;
    Ok(format!("worst ratio {} over 16 pairs, z within {worst} steps", ciric.worst_ratio))
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Check {
    let space = IntervalSpace::poly(0.0, 2.0, 1.0).map_err(err)?;
    ensure(space.rho() == 2.0, || format!("rho = {}", space.rho()))?;
    let map = ExprMap::new(parse("x/3").map_err(err)?);
    let lambda = 29.0 / 729.0;
    let xs = space.grid(200);
    let pairs = grid_pairs(&xs, &xs);
    let rep = verify_ciric(&map, &space, &pairs, lambda, &NMap::Constant(3), 1e-12).map_err(err)?;
    ensure(rep.is_satisfied(), || format!("ciric violated, worst ratio {}", rep.worst_ratio))?;

    let t3 = orbit(&map, &space, &2.0, 3).map_err(err)?[3];
    let d = space.distance(&2.0, &t3);
    ensure(close(d, 52.0 * 79.0 / 729.0, 1e-12), || format!("d(2, T^3 2) = {d}"))?;

    // Effective rate: lambda times the worst observed d(T^3x, T^3y) / (lambda M).
    let alpha = lambda * rep.worst_ratio;
    let convex = verify_convex_m(&map, &space, &pairs, &[alpha, 0.0, 0.0], 1e-12).map_err(err)?;
    ensure(convex.is_satisfied(), || format!("convex (alpha,0,0) violated at alpha = {alpha}"))?;

    let stop = StoppingCriteria { max_iters: 40, displacement_tol: 1e-13, tail_bound_tol: 0.0 };
    let tr = iterate(&map, &space, 2.0, &stop, Some(ConvexRate::new(3, alpha).map_err(err)?)).map_err(err)?;
    ensure(tr.residual < 1e-12 && tr.steps() <= 40, || format!("residual {} after {}", tr.residual, tr.steps()))?;
    let bounds = verify_trace_bounds(&tr, 3, alpha, 1e-12).map_err(err)?;
    ensure(bounds.violations.is_empty(), || format!("bound violations {:?}", bounds.violations))?;
    Ok(format!(
        "200x200 satisfied (worst ratio {:.4}), alpha = {alpha:.6}, residual {:.1e} after {} steps",
        rep.worst_ratio,
        tr.residual,
        tr.steps()
    ))
}

// ---------------------------------------------------------------- 3

/// Step terms `mu alpha^floor(k/m)` until they underflow.
fn step_terms(alpha: f64, mu: f64, m: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for q in 0.. {
        let block = mu * alpha.powf(q as f64);
        out.extend(std::iter::repeat_n(block, m));
        if block < 1e-300 || out.len() > 400_000 {
            break;
        }
    }
    out.push(0.0);
    out
}

/// Compensated suffix sums, smallest terms first.
fn suffix_sums(t: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; t.len()];
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for i in (0..t.len()).rev() {
        let x = t[i];
        let u = s + x;
        c += if s.abs() >= x.abs() { (s - u) + x } else { (x - u) + s };
        s = u;
        out[i] = s + c;
    }
    out
}

fn cauchy_direct(sigma: f64, rho: f64) -> f64 {
    if rho == 0.0 {
        sigma
    } else {
        (rho * sigma).exp_m1() / rho
    }
}

fn convex_candidates(fx: &corpus::Fixture) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.3, 0.3, 0.3], vec![29.0 / 729.0, 0.0, 0.0], vec![0.5], vec![0.25, 0.5]];
    if let suprafix::ContractionSpec::ConvexM { coeffs } = &fx.spec {
        out.insert(0, coeffs.clone());
    }
    out
}

/// Traces from every start point for every accepted coefficient list.
fn bound_suite_on<S, M>(
    space: &S,
    map: &M,
    pairs: &[(S::Point, S::Point)],
    starts: &[S::Point],
    cands: &[Vec<f64>],
) -> Result<(usize, usize, Vec<(OrbitTrace<S::Point>, ConvexRate, f64)>), String>
where
    S: Suprametric,
    M: SelfMap<S::Point>,
{
    let (mut accepted, mut orbits) = (0, 0);
    let mut traces = Vec::new();
    for coeffs in cands {
        let ok = matches!(verify_convex_m(map, space, pairs, coeffs, 1e-9), Ok(r) if r.is_satisfied());
        if !ok {
            continue;
        }
        accepted += 1;
        let rate = ConvexRate::new(coeffs.len(), coeffs.iter().sum()).map_err(err)?;
        let stop = StoppingCriteria { max_iters: 200, displacement_tol: 1e-14, tail_bound_tol: 0.0 };
        for x0 in starts {
            let tr = iterate(map, space, x0.clone(), &stop, Some(rate)).map_err(err)?;
            let rep = verify_trace_bounds(&tr, rate.m, rate.alpha, 1e-9).map_err(err)?;
            ensure(rep.violations.is_empty(), || format!("violations {:?} with {coeffs:?}", rep.violations))?;
            orbits += 1;
            traces.push((tr, rate, space.rho()));
        }
    }
    Ok((accepted, orbits, traces))
}

fn criterion_3() -> Check {
    let mut accepted = 0;
    let mut orbits = 0;
    let mut tails_checked = 0;
    for fx in corpus::all() {
        let cands = convex_candidates(&fx);
        let found = match &fx.body {
            Body::Finite { space, map, .. } => {
                let starts: Vec<usize> = (0..space.len()).collect();
                let (a, o, traces) = bound_suite_on(space, map, &all_pairs(space.len()), &starts, &cands)?;
                tails_checked += check_tails(&traces, |x, y| space.distance(x, y))?;
                (a, o)
            }
            Body::Interval { space, map } => {
                let xs = space.grid(41);
                let (a, o, traces) = bound_suite_on(space, map, &grid_pairs(&xs, &xs), &space.grid(21), &cands)?;
                tails_checked += check_tails(&traces, |x, y| space.distance(x, y))?;
                (a, o)
            }
        };
        accepted += found.0;
        orbits += found.1;
    }
    ensure(accepted >= 2, || format!("only {accepted} convex maps in the corpus"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let eps = 10f64.powf(rng.gen_range(-12.0..1.0));
        let alpha = rng.gen_range(0.0..=0.95);
        let mu = rng.gen_range(f64::EPSILON..=10.0);
        let m = rng.gen_range(1..=5);
        let rho = rng.gen_range(0.0..=5.0);
        let got = iterations_for_tolerance(eps, alpha, mu, m, rho).map_err(err)?;
        let tails = suffix_sums(&step_terms(alpha, mu, m));
        let want = tails.iter().position(|&s| cauchy_direct(s, rho) < eps).ok_or("oracle tail never small")?;
        let straddle = got.abs_diff(want) == 1
            && ((cauchy_direct(tails[got.min(want)], rho) - eps) / eps).abs() < 1e-12;
        ensure(got == want || straddle, || {
            format!("eps={eps} alpha={alpha} mu={mu} m={m} rho={rho}: {got} vs oracle {want}")
        })?;
    }
    Ok(format!(
        "{accepted} convex maps, {orbits} orbits without violations, {tails_checked} tail checks, 1000 tuples agree"
    ))
}

/// Cauchy bound on the closed-form a-priori tail vs the same bound on a
/// directly summed tail (1e-10), and dominance over observed distances.
fn check_tails<P>(traces: &[(OrbitTrace<P>, ConvexRate, f64)], dist: impl Fn(&P, &P) -> f64) -> Result<usize, String> {
    let mut n_checked = 0;
    for (tr, rate, rho) in traces {
        let mu = mu_initial(tr, rate.m).map_err(err)?;
        let direct = suffix_sums(&step_terms(rate.alpha, mu, rate.m));
        let last = tr.final_point();
        for n in 0..tr.steps().min(direct.len()) {
            let lib = cauchy_tail_bound(apriori_tail_sum(n, rate.m, rate.alpha, mu), *rho);
            let oracle = cauchy_direct(direct[n], *rho);
            ensure((lib - oracle).abs() <= 1e-10 * oracle.max(1.0), || format!("n={n}: {lib} vs {oracle}"))?;
            let observed = dist(&tr.points[n], last);
            let from_trace = cauchy_direct(tr.cum_tail[n], *rho);
            ensure(observed <= from_trace * (1.0 + 1e-10) + 1e-12, || {
                format!("n={n}: d(x_n, x_N) = {observed} above Cauchy bound {from_trace}")
            })?;
            n_checked += 1;
        }
    }
    Ok(n_checked)
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Check {
    let space = IntervalSpace::absolute(0.0, 2.0, 0.5).map_err(err)?;
    let map = ExprMap::new(parse("x/2").map_err(err)?).with_override(0.0, 2.0);
    let fixed = fixed_points_among(&map, &space, &space.grid(10_000), 1e-12).map_err(err)?;
    ensure(fixed.is_empty(), || format!("fixed points {fixed:?}"))?;

    let seq = orbit(&map, &space, &2.0, 60).map_err(err)?;
    for k in 1..=3 {
        let d = check_k_continuity(&map, &space, &seq, &0.0, k, 1e-9).map_err(err)?;
        ensure(!d.holds && !d.vacuous, || format!("k = {k}: {}", d.detail))?;
    }
    let stop = StoppingCriteria { max_iters: 1000, displacement_tol: 1e-12, tail_bound_tol: 0.0 };
    let tr = iterate(&map, &space, 1.0, &stop, None).map_err(err)?;
    let lsc = check_orbital_lsc(&map, &space, &tr, &0.0, 1e-9).map_err(err)?;
    ensure(!lsc.holds && lsc.observed == 2.0, || lsc.detail.clone())?;
    for k in [1.0, 10.0, 1e6] {
        let c = check_condition_c(&map, &space, &tr, &0.0, k, 1e-9).map_err(err)?;
        ensure(!c.holds, || format!("k = {k}: {}", c.detail))?;
    }

    let xs = space.grid(41);
    let rep = verify_ciric_variant(&map, &space, &grid_pairs(&xs, &xs), 0.5, 2, 1e-9).map_err(err)?;
    ensure(!rep.is_satisfied(), || "ciric variant satisfied".into())?;
    ensure(rep.witnesses.iter().any(|w| w.x > 0.0 && w.x < 0.2 && w.y == 0.0), || "no witness in region".into())?;
    let t2 = |x: f64| orbit(&map, &space, &x, 2).map(|o| o[2]);
    let lhs = space.distance(&t2(0.1).map_err(err)?, &t2(0.0).map_err(err)?);
    let m = m_value(&map, &space, &0.1, &0.0, 2).map_err(err)?;
    ensure(lhs - 0.5 * m >= 0.02, || format!("lhs {lhs} vs 0.5 * {m}"))?;
    Ok(format!("D(0) = {}, witness (0.1, 0): {lhs} > 0.5 * {m}", lsc.observed))
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Check {
    let p = FredholmProblem::new(0.0, 1.0, Kernel::Expr(parse("0.4").map_err(err)?), 101).map_err(err)?;
    let cert = p.certify().map_err(err)?;
    ensure(close(cert.l, 0.4, 1e-15) && close(cert.a0, 0.16, 1e-15) && cert.a1 == 0.0 && cert.valid, || {
        format!("{cert:?}")
    })?;
    let opts = SolveOptions {
        stop: StoppingCriteria { max_iters: 60, displacement_tol: 0.0, tail_bound_tol: 0.0 },
        initial: Some(GridFunction::constant(p.nodes(), 1.0)),
        allow_invalid_certificate: false,
    };
    let sol = p.solve(&opts).map_err(err)?;
    ensure(sol.trace.steps() == 60, || format!("{} steps", sol.trace.steps()))?;
    for (n, f) in sol.trace.points.iter().enumerate() {
        let want = 0.4f64.powi(n as i32);
        ensure(close(f.sup_norm(), want, 1e-12), || format!("n={n}: {} vs {want}", f.sup_norm()))?;
    }
    ensure(sol.solution.sup_norm() < 1e-10, || format!("sup {}", sol.solution.sup_norm()))?;
    Ok(format!("L = {}, a0 = {}, sup after 60 = {:.2e}", cert.l, cert.a0, sol.solution.sup_norm()))
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Check {
    let p = FredholmProblem::new(0.0, 1.0, Kernel::Expr(parse("x*t/2").map_err(err)?), 201)
        .and_then(|p| p.with_rule(QuadratureRule::Simpson))
        .and_then(|p| p.with_source(Term::Expr(parse("x").unwrap())))
        .map_err(err)?;
    let sol = p.solve(&SolveOptions::default()).map_err(err)?;
    let oracle = separable_oracle(|x| x, |t| t / 2.0, |x| x, &p).map_err(err)?;
    let exact = GridFunction::from_fn(p.nodes(), |x| 1.2 * x);
    ensure(oracle.sup_distance(&exact) < 1e-13, || "oracle differs from 1.2x".into())?;
    let e = sol.solution.sup_distance(&oracle);
    ensure(e < 1e-8, || format!("max abs error {e}"))?;

    let factors = contraction_factors(&sol.trace);
    ensure(factors.len() >= 10, || format!("only {} factors", factors.len()))?;
    let worst = factors[factors.len() - 10..].iter().copied().fold(0.0, f64::max);
    ensure(worst <= 0.52, || format!("observed factor {worst}"))?;

    let a0 = p.certify().map_err(err)?.a0;
    let lambda = p.lambda_supra;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut random = || {
        let values = (0..p.grid_n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        GridFunction::new(p.nodes(), values).unwrap()
    };
    let op = p.operator().map_err(err)?;
    let t2 = |f: &GridFunction| op.apply(&op.apply(f));
    for _ in 0..100 {
        let (f, g) = (random(), random());
        let lhs = supra_distance(&t2(&f), &t2(&g), lambda);
        let rhs = a0 * supra_distance(&f, &g, lambda);
        ensure(lhs <= rhs + 1e-9, || format!("two-step condition {lhs} > {rhs}"))?;
    }
    Ok(format!("error {e:.1e}, last-10 factor {worst:.4}, 100 pairs convex with a0 = {a0}"))
}

// ---------------------------------------------------------------- 7

/// Six points uniform in the unit square with Euclidean distances.
fn random_metric(rng: &mut ChaCha8Rng) -> FiniteSpace {
    let pts: Vec<(f64, f64)> = (0..6).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
    let d = pts
        .iter()
        .map(|a| pts.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect())
        .collect();
    FiniteSpace::unlabeled(d, 0.0).unwrap()
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let metrics: Vec<FiniteSpace> = (0..50).map(|_| random_metric(&mut rng)).collect();
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for lambda in [0.5, 1.0, 2.0, 10.0] {
        let stated = 2.0 / lambda;
        let (mut axiom_fail, mut rho_fail, mut worst_defect) = (0, 0, 0.0f64);
        for m in &metrics {
            let out = m.from_metric_poly(lambda).map_err(err)?.with_rho(stated).map_err(err)?;
            let rep = out.check_axioms(1e-9);
            if !rep.all_ok() {
                axiom_fail += 1;
                worst_defect = rep.violations.iter().map(|v| v.defect).fold(worst_defect, f64::max);
            }
            if out.minimal_rho().map_err(err)? > stated {
                rho_fail += 1;
            }
        }
        summary.push(format!("lambda {lambda}: {axiom_fail}/50"));
        if axiom_fail + rho_fail > 0 {
            failures.push(format!(
                "lambda = {lambda}: {axiom_fail}/50 spaces fail check_axioms at rho = {stated}, \
                 {rho_fail}/50 have minimal rho above it (worst defect {worst_defect:.2e})"
            ));
        }
    }
    if failures.is_empty() {
        Ok(format!("failures per lambda: {}", summary.join(", ")))
    } else {
        Err(failures.join("; "))
    }
}

// ---------------------------------------------------------------- 8

const FUNCS: [Func; 6] = [Func::Sin, Func::Cos, Func::Exp, Func::Ln, Func::Abs, Func::Sqrt];
const OPS: [BinOp; 5] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow];

fn random_tree(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    let leaf = depth == 0 || rng.gen_bool(0.25);
    if leaf {
        return match rng.gen_range(0..4) {
            0 => Expr::Var(Var::X),
            1 => Expr::Var(Var::T),
            2 => Expr::Num([0.0, 0.5, 1.0, 2.0, 3.0][rng.gen_range(0..5)]),
            _ => Expr::Num((rng.gen_range(0.0..10.0f64) * 1000.0).round() / 1000.0),
        };
    }
    let sub = |rng: &mut ChaCha8Rng| Box::new(random_tree(rng, depth - 1));
    match rng.gen_range(0..6) {
        0 => Expr::Neg(sub(rng)),
        1 => Expr::Call(FUNCS[rng.gen_range(0..6)], sub(rng)),
        _ => Expr::Bin(OPS[rng.gen_range(0..5)], sub(rng), sub(rng)),
    }
}

fn op_symbol(op: BinOp) -> char {
    match op {
        BinOp::Add => '+',
        BinOp::Sub => '-',
        BinOp::Mul => '*',
        BinOp::Div => '/',
        BinOp::Pow => '^',
    }
}

fn func_name(f: Func) -> &'static str {
    match f {
        Func::Sin => "sin",
        Func::Cos => "cos",
        Func::Exp => "exp",
        Func::Ln => "ln",
        Func::Abs => "abs",
        Func::Sqrt => "sqrt",
    }
}

fn fully_parenthesized(e: &Expr) -> String {
    match e {
        Expr::Num(v) => format!("{v}"),
        Expr::Var(Var::X) => "x".into(),
        Expr::Var(Var::T) => "t".into(),
        Expr::Neg(a) => format!("(-{})", fully_parenthesized(a)),
        Expr::Call(f, a) => format!("{}({})", func_name(*f), fully_parenthesized(a)),
        Expr::Bin(op, l, r) => format!("({}{}{})", fully_parenthesized(l), op_symbol(*op), fully_parenthesized(r)),
    }
}

fn reference_eval(e: &Expr, x: f64, t: f64) -> Option<f64> {
    let v = match e {
        Expr::Num(v) => *v,
        Expr::Var(Var::X) => x,
        Expr::Var(Var::T) => t,
        Expr::Neg(a) => -reference_eval(a, x, t)?,
        Expr::Call(f, a) => {
            let a = reference_eval(a, x, t)?;
            match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Exp => a.exp(),
                Func::Ln if a > 0.0 => a.ln(),
                Func::Abs => a.abs(),
                Func::Sqrt if a >= 0.0 => a.sqrt(),
                _ => return None,
            }
        }
        Expr::Bin(op, l, r) => {
            let (a, b) = (reference_eval(l, x, t)?, reference_eval(r, x, t)?);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div if b != 0.0 => a / b,
                BinOp::Div => return None,
                BinOp::Pow => a.powf(b),
            }
        }
    };
    v.is_finite().then_some(v)
}

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let points = [(0.0, 0.0), (0.3, -1.7), (2.0, 0.5)];
    let mut evaluated = 0;
    for i in 0..10_000 {
        let tree = random_tree(&mut rng, 5);
        let minimal = tree.to_string();
        let reparsed = parse(&minimal).map_err(|e| format!("#{i} `{minimal}`: {e}"))?;
        ensure(reparsed == tree, || format!("#{i}: `{minimal}` reparses differently"))?;
        let explicit = fully_parenthesized(&tree);
        let parsed = parse(&explicit).map_err(|e| format!("#{i} `{explicit}`: {e}"))?;
        ensure(parsed == tree, || format!("#{i}: `{explicit}` parses differently"))?;
        for (x, t) in points {
            match (reparsed.eval(x, t).ok(), reference_eval(&tree, x, t)) {
                (None, None) => {}
                (Some(a), Some(b)) if a == b || (a - b).abs() <= 1e-12 * b.abs() => evaluated += 1,
                (got, want) => return Err(format!("#{i} `{minimal}` at ({x}, {t}): {got:?} vs {want:?}")),
            }
        }
    }
    let cases = [
        ("x++t", ParseErrorKind::DanglingOperator, 2),
        ("x + foo(t)", ParseErrorKind::UnknownIdentifier("foo".into()), 4),
        ("2 * (x + 1", ParseErrorKind::UnbalancedParen, 4),
    ];
    let mut messages = Vec::new();
    for (src, kind, offset) in cases {
        let e = parse(src).err().ok_or_else(|| format!("`{src}` parsed"))?;
        ensure(e.kind == kind && e.offset == offset, || format!("`{src}`: {e}"))?;
        messages.push(e.to_string());
    }
    messages.sort();
    messages.dedup();
    ensure(messages.len() == 3, || "diagnostics not distinct".into())?;
    Ok(format!("10000 trees round-trip, {evaluated} evaluations agree, 3 distinct diagnostics"))
}

// ---------------------------------------------------------------- 9

fn cli(args: &[&str]) -> Result<(i32, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_suprafix")).args(args).output().map_err(err)?;
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    Ok((out.status.code().unwrap_or(-1), text))
}

fn criterion_9() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    let path = |s: &str| dir.path().join(s).to_str().unwrap().to_string();
    let export = path("corpus");
    let (code, all) = cli(&["corpus", "--run-all", "--export", &export])?;
    ensure(code == 0, || format!("--run-all exit {code}"))?;
    ensure(all.contains("5/5 fixtures passed"), || "summary missing".into())?;
    let discrepancy = |needle: &str| all.lines().any(|l| l.contains("[discrepancy]") && l.contains(needle));
    ensure(discrepancy("T(1) = 2.25 leaves the space"), || "self-map failure not reproduced".into())?;
    ensure(discrepancy("ciric_variant violated at (0.1, 0)"), || "counterexample witness not reproduced".into())?;

    let fx = |name: &str, kind: &str| format!("{export}/{name}.{kind}.json");
    let four = fx("example_4pt_ciric", "space");
    let metric = path("metric.json");
    fs::write(&metric, fs::read_to_string(&four).map_err(err)?.replace("\"rho\": 1.0", "\"rho\": 0.0")).map_err(err)?;
    let malformed = path("malformed.json");
    fs::write(&malformed, "{ not json").map_err(err)?;
    let lambda_one = path("lambda.json");
    fs::write(&lambda_one, r#"{"kind": "ciric", "params": {"lambda": 1, "n": 2}}"#).map_err(err)?;
    let homog = path("homog.json");
    fs::write(&homog, r#"{"a": 0, "b": 1, "kernel_expr": "0.4", "grid_n": 101}"#).map_err(err)?;
    let sep = path("sep.json");
    fs::write(&sep, r#"{"a": 0, "b": 1, "kernel_expr": "x*t/2", "g_expr": "x", "grid_n": 201, "rule": "simpson"}"#)
        .map_err(err)?;
    let invalid = path("invalid.json");
    fs::write(&invalid, r#"{"a": 0, "b": 1, "kernel_expr": "x*t", "grid_n": 51}"#).map_err(err)?;
    let sol = path("sol.csv");
    let trace5 = path("t5.csv");

    let (ciric_space, ciric_map, ciric_spec) =
        (fx("example_4pt_ciric", "space"), fx("example_4pt_ciric", "map"), fx("example_4pt_ciric", "spec"));
    let (nf_space, nf_map, nf_spec) = (
        fx("example_no_fixed_point", "space"),
        fx("example_no_fixed_point", "map"),
        fx("example_no_fixed_point", "spec"),
    );
    let (p_space, p_map) = (fx("example_5pt", "space"), fx("example_5pt", "map"));

    let cases: Vec<(Vec<&str>, i32, &str)> = vec![
        (vec!["verify-space", &four], 0, "minimal rho = 1\n"),
        (vec!["verify-space", &metric], 1, "witness (x, z, y)"),
        (vec!["verify-space", &malformed], 2, "malformed.json"),
        (vec!["verify-contraction", &ciric_space, &ciric_map, &ciric_spec], 0, "worst ratio = 1\n"),
        (vec!["verify-contraction", &nf_space, &nf_map, &nf_spec], 1, "(0.1, 0): lhs 0.975"),
        (vec!["verify-contraction", &ciric_space, &ciric_map, &lambda_one], 2, "lambda"),
        (vec!["orbit", &p_space, &p_map, "--start", "t", "--out", &trace5], 0, "fixed point = w"),
        (vec!["orbit", &nf_space, &nf_map, "--start", "1"], 3, "limit is not a fixed point"),
        (vec!["orbit", &p_space, &p_map, "--start", "missing"], 2, "missing"),
        (vec!["solve-fredholm", &homog, "--out", &sol], 0, "solution sup = 0\n"),
        (vec!["solve-fredholm", &sep], 0, "a0 = 0.25"),
        (vec!["solve-fredholm", &invalid], 4, "invalid"),
        (vec!["corpus", "--run", "example_4pt_ciric"], 0, "PASS example_4pt_ciric"),
        (vec!["corpus", "--run", "unknown"], 2, "unknown"),
    ];
    for (args, want, needle) in &cases {
        let (code, out) = cli(args)?;
        ensure(code == *want && out.contains(needle), || {
            format!("`{}` exit {code} (want {want}); output:\n{out}", args.join(" "))
        })?;
    }
    let rows = fs::read_to_string(&trace5).map_err(err)?.lines().count() - 1;
    ensure(rows <= 4, || format!("5-point orbit wrote {rows} rows"))?;

    let sep_out = path("sep.csv");
    cli(&["solve-fredholm", &sep, "--out", &sep_out])?;
    for line in fs::read_to_string(&sep_out).map_err(err)?.lines().skip(1) {
        let (x, f) = line.split_once(',').ok_or("bad csv")?;
        let (x, f): (f64, f64) = (x.parse().map_err(err)?, f.parse().map_err(err)?);
        ensure((f - 1.2 * x).abs() < 1e-8, || format!("separable solution row {line}"))?;
    }
    let (_, listed) = cli(&["corpus", "--list"])?;
    ensure(listed.lines().count() == 5, || "corpus --list".into())?;
    Ok(format!("{} exit-code examples, 2 discrepancies reproduced", cases.len()))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Check,
}

fn main() {
    let ms = |v| Some(Duration::from_millis(v));
    let criteria = [
        Criterion { id: 1, name: "four-point Ciric fixture", limit: ms(100), run: criterion_1 },
        Criterion { id: 2, name: "interval x/3 fixture", limit: ms(1000), run: criterion_2 },
        Criterion { id: 3, name: "a-priori bound suite", limit: ms(5000), run: criterion_3 },
        Criterion { id: 4, name: "counterexample fixture", limit: ms(1000), run: criterion_4 },
        Criterion { id: 5, name: "Fredholm homogeneous", limit: ms(1000), run: criterion_5 },
        Criterion { id: 6, name: "Fredholm separable oracle", limit: ms(2000), run: criterion_6 },
        Criterion { id: 7, name: "poly transform with rho = 2/lambda", limit: ms(2000), run: criterion_7 },
        Criterion { id: 8, name: "parser round trip and diagnostics", limit: ms(2000), run: criterion_8 },
        Criterion { id: 9, name: "CLI contract", limit: None, run: criterion_9 },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)();
        let took = start.elapsed();
        let over = c.limit.filter(|l| took > *l);
        let (status, detail) = match (&result, over) {
            (Ok(msg), None) => ("PASS", msg.clone()),
            (Ok(msg), Some(l)) => ("FAIL", format!("over time limit {:.1} s; {msg}", l.as_secs_f64())),
            (Err(msg), _) => ("FAIL", msg.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("criterion {}: {status} [{:.3} s] {}: {detail}", c.id, took.as_secs_f64(), c.name);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
