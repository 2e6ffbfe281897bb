use proptest::prelude::*;
use suprafix::contraction::{verify_convex_m, SelfMap};
use suprafix::fredholm::{
    contraction_factors, separable_oracle, supra_distance, FredholmProblem, GridFunction, Kernel, QuadratureRule,
    SolveOptions, Term,
};
use suprafix::kexpr::parse;
use suprafix::picard::StoppingCriteria;

fn problem(kernel: &str, g: Option<&str>, n: usize, rule: QuadratureRule) -> FredholmProblem {
    let p = FredholmProblem::new(0.0, 1.0, Kernel::Expr(parse(kernel).unwrap()), n)
        .unwrap()
        .with_rule(rule)
        .unwrap();
    match g {
        Some(g) => p.with_source(Term::Expr(parse(g).unwrap())).unwrap(),
        None => p,
    }
}

fn tight() -> SolveOptions {
    SolveOptions {
        stop: StoppingCriteria { max_iters: 400, displacement_tol: 1e-28, tail_bound_tol: 0.0 },
        ..SolveOptions::default()
    }
}

fn grid_fn(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn one_step_contraction(c in 0.05..0.9f64, f in grid_fn(21), g in grid_fn(21), simpson in any::<bool>()) {
        let rule = if simpson { QuadratureRule::Simpson } else { QuadratureRule::Trapezoid };
        let p = problem(&format!("{c} * cos(3 * x - t)"), Some("sin(x)"), 21, rule);
        let cert = p.certify().unwrap();
        let f = GridFunction::new(p.nodes(), f).unwrap();
        let g = GridFunction::new(p.nodes(), g).unwrap();
        let tf = p.apply_operator(&f).unwrap();
        let tg = p.apply_operator(&g).unwrap();
        prop_assert!(tf.sup_distance(&tg) <= cert.l * f.sup_distance(&g) + 1e-12);
    }

    #[test]
    fn two_step_convex_condition(c in 0.05..0.9f64, lambda in 0.1..5.0f64, f in grid_fn(21), g in grid_fn(21)) {
        let p = problem(&format!("{c} * exp(-x * t)"), Some("x^2"), 21, QuadratureRule::Trapezoid)
            .with_lambda(lambda)
            .unwrap();
        let cert = p.certify().unwrap();
        prop_assert!(cert.valid);
        let f = GridFunction::new(p.nodes(), f).unwrap();
        let g = GridFunction::new(p.nodes(), g).unwrap();
        let t2 = |h: &GridFunction| p.apply_operator(&p.apply_operator(h).unwrap()).unwrap();
        let lhs = supra_distance(&t2(&f), &t2(&g), lambda);
        prop_assert!(lhs <= cert.a0 * supra_distance(&f, &g, lambda) + 1e-9);
    }
}

#[test]
fn constant_kernel_is_convex_on_constant_pairs() {
    let p = problem("0.4", None, 101, QuadratureRule::Trapezoid);
    let cert = p.certify().unwrap();
    assert_eq!((cert.l, cert.a0, cert.a1), (0.4, 0.4 * 0.4, 0.0));
    let op = p.operator().unwrap();
    let space = p.space();
    let consts = [-2.0, -0.5, 0.0, 0.3, 1.0, 4.0];
    let pairs: Vec<_> = consts
        .iter()
        .flat_map(|&a| consts.iter().map(move |&b| (a, b)))
        .map(|(a, b)| (GridFunction::constant(p.nodes(), a), GridFunction::constant(p.nodes(), b)))
        .collect();
    let rep = verify_convex_m(&op, &space, &pairs, &[cert.a0, cert.a1], 1e-12).unwrap();
    assert!(rep.is_satisfied(), "worst ratio {}", rep.worst_ratio);
    let tf = op.apply(&GridFunction::constant(p.nodes(), 1.0));
    assert!(tf.values.iter().all(|v| (v - 0.4).abs() < 1e-15));
}

#[test]
fn rate_tracks_certificate() {
    for (kernel, g) in [("x * t / 2", "x"), ("0.7 * cos(x * t)", "1"), ("0.4", "exp(x)")] {
        let p = problem(kernel, Some(g), 201, QuadratureRule::Simpson);
        let l = p.certify().unwrap().l;
        let opts = SolveOptions {
            stop: StoppingCriteria { max_iters: 25, displacement_tol: 0.0, tail_bound_tol: 0.0 },
            ..SolveOptions::default()
        };
        let sol = p.solve(&opts).unwrap();
        let factors = contraction_factors(&sol.trace);
        for r in &factors[factors.len() - 10..] {
            assert!(*r <= 1.05 * l, "{kernel}: factor {r} vs L = {l}");
        }
    }
}

/// `phi = cos x`, `psi = 0.3 t`, `g = e^x` on [0,1]:
/// `int psi g = 0.3`, `int psi phi = 0.3 (cos 1 + sin 1 - 1)`.
fn cosine_exact(x: f64) -> f64 {
    let c = 0.3 / (1.0 - 0.3 * (1f64.cos() + 1f64.sin() - 1.0));
    x.exp() + c * x.cos()
}

#[test]
fn separable_solutions_match_closed_forms() {
    let p = problem("x * t / 2", Some("x"), 201, QuadratureRule::Simpson);
    let sol = p.solve(&tight()).unwrap();
    let err = sol.solution.nodes.iter().zip(&sol.solution.values).map(|(x, v)| (v - 1.2 * x).abs()).fold(0.0, f64::max);
    assert!(err < 1e-8, "{err}");

    let p = problem("cos(x) * 0.3 * t", Some("exp(x)"), 201, QuadratureRule::Simpson);
    let oracle = separable_oracle(f64::cos, |t| 0.3 * t, f64::exp, &p).unwrap();
    for (x, v) in oracle.nodes.iter().zip(&oracle.values) {
        assert!((v - cosine_exact(*x)).abs() < 1e-13);
    }
    let sol = p.solve(&tight()).unwrap();
    assert!(sol.solution.sup_distance(&oracle) < 1e-8);

    let zero = separable_oracle(f64::cos, |t| 0.3 * t, |_| 0.0, &p).unwrap();
    assert_eq!(zero.sup_norm(), 0.0);
}

fn refinement_ratio(rule: QuadratureRule) -> (f64, f64) {
    let solve = |n: usize| problem("exp(x * t) / 6", Some("sin(x) + 1"), n, rule).solve(&tight()).unwrap().solution;
    let sols: Vec<GridFunction> = [11, 21, 41, 81].into_iter().map(solve).collect();
    // Nodes of the coarse grid sit at every other node of the next grid.
    let diff = |coarse: &GridFunction, fine: &GridFunction| {
        coarse.values.iter().enumerate().map(|(i, v)| (v - fine.values[2 * i]).abs()).fold(0.0, f64::max)
    };
    let d: Vec<f64> = sols.windows(2).map(|w| diff(&w[0], &w[1])).collect();
    (d[0] / d[1], d[1] / d[2])
}

#[test]
fn trapezoid_refinement_is_second_order() {
    let (r1, r2) = refinement_ratio(QuadratureRule::Trapezoid);
    for r in [r1, r2] {
        assert!((3.6..4.4).contains(&r), "ratio {r}");
    }
}

#[test]
fn simpson_refinement_is_fourth_order() {
    let (r1, r2) = refinement_ratio(QuadratureRule::Simpson);
    for r in [r1, r2] {
        assert!((13.0..19.0).contains(&r), "ratio {r}");
    }
}

#[test]
fn zero_kernel_returns_source_after_one_step() {
    let p = problem("0", Some("x^2 - 1"), 11, QuadratureRule::Trapezoid);
    let sol = p.solve(&SolveOptions::default()).unwrap();
    assert!(sol.converged);
    let g = GridFunction::from_fn(p.nodes(), |x| x * x - 1.0);
    assert_eq!(sol.trace.points[1], g);
    assert_eq!(sol.solution.sup_distance(&g), 0.0);
}
