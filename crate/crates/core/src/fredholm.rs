//! Fredholm equations `f(x) = g(x) + \int_a^b K(x,t) f(t) dt` solved by Picard
//! iteration in `C[a,b]` with the suprametric `d(f,g) = u (u + lambda)`,
//! `u = ||f - g||_inf`.
//!
//! With `|K| <= M` and `L = M (b - a) < 1` the integral operator is a convex
//! contraction of order 2 with `a0 = L^2`, `a1 = 0`. The solver discretises
//! the integral with composite trapezoid or Simpson weights on a uniform grid;
//! both rules have positive weights summing to `b - a`, so the discrete
//! operator inherits the same constant `L`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::contraction::SelfMap;
use crate::kexpr::{EvalError, Expr, Var};
use crate::picard::{self, ConvexRate, OrbitTrace, PicardError, StopReason, StoppingCriteria};
use crate::space::{linspace, poly_rho, poly_transform, Suprametric};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FredholmError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("kernel or source evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("grid function has {got} nodes but the problem grid has {expected}")]
    GridMismatch { expected: usize, got: usize },
    #[error("certificate invalid: L = {l} >= 1")]
    InvalidCertificate { l: f64 },
    #[error("iteration diverged after {iterations} steps (last sup-norm step {last_step:e})")]
    Diverged { iterations: usize, last_step: f64 },
    #[error("separable kernel is resonant: 1 - int psi phi = {0:e}")]
    Resonant(f64),
    #[error(transparent)]
    Picard(#[from] PicardError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureRule {
    #[default]
    Trapezoid,
    Simpson,
}

impl QuadratureRule {
    /// Composite weights on `n` uniform nodes over `[a, b]`.
    pub fn weights(self, a: f64, b: f64, n: usize) -> Vec<f64> {
        let h = (b - a) / (n - 1) as f64;
        match self {
            QuadratureRule::Trapezoid => (0..n)
                .map(|i| if i == 0 || i == n - 1 { h / 2.0 } else { h })
                .collect(),
            QuadratureRule::Simpson => (0..n)
                .map(|i| {
                    let c = if i == 0 || i == n - 1 {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    c * h / 3.0
                })
                .collect(),
        }
    }
}

type KernelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type TermFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Kernel {
    Expr(Expr),
    /// Samples `K(x_i, t_j)` on the problem grid, row index `i`.
    Grid(Vec<Vec<f64>>),
    Func(KernelFn),
}

impl Kernel {
    pub fn func(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Kernel::Func(Arc::new(f))
    }
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Expr(e) => write!(f, "Kernel::Expr({e})"),
            Kernel::Grid(g) => write!(f, "Kernel::Grid({}x{})", g.len(), g.first().map_or(0, Vec::len)),
            Kernel::Func(_) => f.write_str("Kernel::Func(..)"),
        }
    }
}

/// The inhomogeneous term `g(x)`.
#[derive(Clone)]
pub enum Term {
    Expr(Expr),
    Func(TermFn),
}

impl Term {
    pub fn func(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Term::Func(Arc::new(f))
    }

    fn eval(&self, x: f64) -> Result<f64, EvalError> {
        match self {
            Term::Expr(e) => e.eval(x, 0.0),
            Term::Func(f) => Ok(f(x)),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Expr(e) => write!(f, "Term::Expr({e})"),
            Term::Func(_) => f.write_str("Term::Func(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FredholmProblem {
    pub a: f64,
    pub b: f64,
    pub kernel: Kernel,
    /// `None` is the homogeneous equation.
    pub g: Option<Term>,
    pub grid_n: usize,
    pub rule: QuadratureRule,
    pub lambda_supra: f64,
}

impl FredholmProblem {
    pub fn new(a: f64, b: f64, kernel: Kernel, grid_n: usize) -> Result<Self, FredholmError> {
        let p = FredholmProblem { a, b, kernel, g: None, grid_n, rule: QuadratureRule::Trapezoid, lambda_supra: 1.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn with_source(mut self, g: Term) -> Result<Self, FredholmError> {
        self.g = Some(g);
        self.validate()?;
        Ok(self)
    }

    pub fn with_rule(mut self, rule: QuadratureRule) -> Result<Self, FredholmError> {
        self.rule = rule;
        self.validate()?;
        Ok(self)
    }

    pub fn with_lambda(mut self, lambda_supra: f64) -> Result<Self, FredholmError> {
        self.lambda_supra = lambda_supra;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), FredholmError> {
        let bad = |s: String| Err(FredholmError::InvalidProblem(s));
        if !(self.a.is_finite() && self.b.is_finite() && self.a < self.b) {
            return bad(format!("interval [{}, {}] is empty", self.a, self.b));
        }
        if self.grid_n < 2 {
            return bad(format!("grid_n = {} must be >= 2", self.grid_n));
        }
        if self.rule == QuadratureRule::Simpson && self.grid_n.is_multiple_of(2) {
            return bad(format!("simpson needs an odd node count, got {}", self.grid_n));
        }
        if !(self.lambda_supra.is_finite() && self.lambda_supra > 0.0) {
            return bad(format!("lambda_supra = {} must be positive", self.lambda_supra));
        }
        if let Kernel::Grid(rows) = &self.kernel {
            if rows.len() != self.grid_n || rows.iter().any(|r| r.len() != self.grid_n) {
                return bad(format!("kernel_grid must be {0}x{0}", self.grid_n));
            }
        }
        if let Some(Term::Expr(e)) = &self.g {
            if e.uses(Var::T) {
                return bad("g_expr may only use x".into());
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> Vec<f64> {
        linspace(self.a, self.b, self.grid_n)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.rule.weights(self.a, self.b, self.grid_n)
    }

    /// `K(x_i, t_j)` on the tensor grid.
    pub fn kernel_values(&self) -> Result<Vec<Vec<f64>>, FredholmError> {
        let nodes = self.nodes();
        match &self.kernel {
            Kernel::Grid(rows) => Ok(rows.clone()),
            Kernel::Expr(e) => nodes
                .iter()
                .map(|&x| nodes.iter().map(|&t| e.eval(x, t)).collect::<Result<Vec<_>, _>>())
                .collect::<Result<_, _>>()
                .map_err(FredholmError::from),
            Kernel::Func(f) => Ok(nodes.iter().map(|&x| nodes.iter().map(|&t| f(x, t)).collect()).collect()),
        }
    }

    /// `M = max |K|` over the grid.
    pub fn kernel_bound(&self) -> Result<f64, FredholmError> {
        let m = self
            .kernel_values()?
            .iter()
            .flatten()
            .fold(0.0_f64, |m, k| m.max(k.abs()));
        if !m.is_finite() {
            return Err(FredholmError::InvalidProblem("kernel is not finite on the grid".into()));
        }
        Ok(m)
    }

    pub fn certify(&self) -> Result<Certificate, FredholmError> {
        let m_bound = self.kernel_bound()?;
        let l = m_bound * (self.b - self.a);
        Ok(Certificate { m_bound, l, a0: l * l, a1: 0.0, valid: l < 1.0 })
    }

    pub fn source_values(&self) -> Result<Vec<f64>, FredholmError> {
        let nodes = self.nodes();
        match &self.g {
            None => Ok(vec![0.0; nodes.len()]),
            Some(g) => Ok(nodes.iter().map(|&x| g.eval(x)).collect::<Result<_, _>>()?),
        }
    }

    pub fn operator(&self) -> Result<DiscreteOperator, FredholmError> {
        let w = self.weights();
        let n = self.grid_n;
        let mut matrix = Vec::with_capacity(n * n);
        for row in self.kernel_values()? {
            matrix.extend(row.iter().zip(&w).map(|(k, wj)| k * wj));
        }
        Ok(DiscreteOperator { n, matrix, source: self.source_values()?, nodes: self.nodes() })
    }

    pub fn space(&self) -> SupNormSpace {
        SupNormSpace { n: self.grid_n, lambda_supra: self.lambda_supra }
    }

    pub fn apply_operator(&self, f: &GridFunction) -> Result<GridFunction, FredholmError> {
        self.operator()?.try_apply(f)
    }

    pub fn solve(&self, opts: &SolveOptions) -> Result<FredholmSolution, FredholmError> {
        let certificate = self.certify()?;
        if !certificate.valid && !opts.allow_invalid_certificate {
            return Err(FredholmError::InvalidCertificate { l: certificate.l });
        }
        let op = self.operator()?;
        let space = self.space();
        let f0 = match &opts.initial {
            Some(f) => {
                op.check(f)?;
                f.clone()
            }
            None => GridFunction::constant(self.nodes(), 0.0),
        };
        let rate = if certificate.valid { Some(ConvexRate::new(2, certificate.a0)?) } else { None };
        let trace = picard::iterate(&op, &space, f0, &opts.stop, rate)?;
        let steps = sup_steps(&trace);
        if trace.stop == StopReason::Diverged || (!trace.converged && is_growing(&steps)) {
            return Err(FredholmError::Diverged {
                iterations: trace.steps(),
                last_step: steps.last().copied().unwrap_or(f64::NAN),
            });
        }
        let solution = trace.final_point().clone();
        let residual_sup = op.try_apply(&solution)?.sup_distance(&solution);
        Ok(FredholmSolution { converged: trace.converged, solution, trace, certificate, residual_sup })
    }
}

fn is_growing(steps: &[f64]) -> bool {
    if steps.len() < 2 {
        return false;
    }
    let start = crate::contraction::window_start(steps.len());
    steps[steps.len() - 1] > steps[start]
}

/// `||f_{n+1} - f_n||_inf` along a trace.
pub fn sup_steps(trace: &OrbitTrace<GridFunction>) -> Vec<f64> {
    trace.points.windows(2).map(|w| w[0].sup_distance(&w[1])).collect()
}

/// Ratios of successive sup-norm steps; the observed per-iteration
/// contraction factor.
pub fn contraction_factors(trace: &OrbitTrace<GridFunction>) -> Vec<f64> {
    sup_steps(trace)
        .windows(2)
        .map(|w| crate::contraction::ratio(w[1], w[0]))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// Kernel bound, sampled on the tensor grid rather than proved.
    pub m_bound: f64,
    pub l: f64,
    pub a0: f64,
    pub a1: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub stop: StoppingCriteria,
    pub initial: Option<GridFunction>,
    pub allow_invalid_certificate: bool,
}


#[derive(Debug, Clone)]
pub struct FredholmSolution {
    pub solution: GridFunction,
    pub trace: OrbitTrace<GridFunction>,
    pub certificate: Certificate,
    /// `||T f - f||_inf` at the returned solution.
    pub residual_sup: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self, FredholmError> {
        if nodes.len() != values.len() {
            return Err(FredholmError::GridMismatch { expected: nodes.len(), got: values.len() });
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(FredholmError::InvalidProblem("nodes must be strictly increasing".into()));
        }
        Ok(GridFunction { nodes, values })
    }

    pub fn constant(nodes: Vec<f64>, c: f64) -> Self {
        let values = vec![c; nodes.len()];
        GridFunction { nodes, values }
    }

    pub fn from_fn(nodes: Vec<f64>, f: impl Fn(f64) -> f64) -> Self {
        let values = nodes.iter().map(|&x| f(x)).collect();
        GridFunction { nodes, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Piecewise-linear interpolation, clamped to the end values.
    pub fn eval_at(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if x <= self.nodes[0] {
            return self.values[0];
        }
        if x >= self.nodes[n - 1] {
            return self.values[n - 1];
        }
        let i = self.nodes.partition_point(|&v| v <= x) - 1;
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let s = (x - x0) / (x1 - x0);
        self.values[i] * (1.0 - s) + self.values[i + 1] * s
    }

    /// Two columns `x,f`, one row per node.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,f\n");
        for (x, v) in self.nodes.iter().zip(&self.values) {
            out.push_str(&format!("{x},{v}\n"));
        }
        out
    }
}

/// `u (u + lambda)` with `u = ||f - g||_inf`.
pub fn supra_distance(f: &GridFunction, g: &GridFunction, lambda_supra: f64) -> f64 {
    poly_transform(f.sup_distance(g), lambda_supra)
}

/// Grid functions on a fixed node count under the sup-norm suprametric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupNormSpace {
    pub n: usize,
    pub lambda_supra: f64,
}

impl Suprametric for SupNormSpace {
    type Point = GridFunction;

    fn distance(&self, x: &GridFunction, y: &GridFunction) -> f64 {
        supra_distance(x, y, self.lambda_supra)
    }

    fn rho(&self) -> f64 {
        poly_rho(self.lambda_supra)
    }

    fn contains(&self, p: &GridFunction) -> bool {
        p.len() == self.n && p.values.iter().all(|v| v.is_finite())
    }

    /// The sup-norm of the function.
    fn describe(&self, p: &GridFunction) -> String {
        format!("{}", p.sup_norm())
    }
}

/// The discretised operator `(Tf)_i = g_i + sum_j w_j K(x_i, t_j) f_j`.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    n: usize,
    matrix: Vec<f64>,
    source: Vec<f64>,
    nodes: Vec<f64>,
}

impl DiscreteOperator {
    fn check(&self, f: &GridFunction) -> Result<(), FredholmError> {
        if f.len() != self.n {
            return Err(FredholmError::GridMismatch { expected: self.n, got: f.len() });
        }
        Ok(())
    }

    pub fn try_apply(&self, f: &GridFunction) -> Result<GridFunction, FredholmError> {
        self.check(f)?;
        Ok(self.apply_unchecked(f))
    }

    fn apply_unchecked(&self, f: &GridFunction) -> GridFunction {
        let values = self
            .matrix
            .chunks_exact(self.n)
            .zip(&self.source)
            .map(|(row, g)| g + row.iter().zip(&f.values).map(|(k, v)| k * v).sum::<f64>())
            .collect();
        GridFunction { nodes: self.nodes.clone(), values }
    }
}

impl SelfMap<GridFunction> for DiscreteOperator {
    /// A function on the wrong grid maps to NaNs, which the space rejects.
    fn apply(&self, f: &GridFunction) -> GridFunction {
        match self.try_apply(f) {
            Ok(g) => g,
            Err(_) => GridFunction::constant(self.nodes.clone(), f64::NAN),
        }
    }
}

const GAUSS5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Composite 5-point Gauss-Legendre on `panels` equal panels.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = a + (p as f64 + 0.5) * h;
            GAUSS5_NODES
                .iter()
                .zip(GAUSS5_WEIGHTS)
                .map(|(s, w)| w * f(mid + 0.5 * h * s))
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum()
}

/// Closed-form solution for a separable kernel `K(x,t) = phi(x) psi(t)`:
/// `f*(x) = g(x) + c phi(x)` with `c = (int psi g) / (1 - int psi phi)`.
pub fn separable_oracle(
    phi: impl Fn(f64) -> f64,
    psi: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    problem: &FredholmProblem,
) -> Result<GridFunction, FredholmError> {
    const PANELS: usize = 256;
    let (a, b) = (problem.a, problem.b);
    let psi_g = gauss_legendre(|t| psi(t) * g(t), a, b, PANELS);
    let psi_phi = gauss_legendre(|t| psi(t) * phi(t), a, b, PANELS);
    let denom = 1.0 - psi_phi;
    if denom.abs() < 1e-9 {
        return Err(FredholmError::Resonant(denom));
    }
    let c = psi_g / denom;
    Ok(GridFunction::from_fn(problem.nodes(), |x| g(x) + c * phi(x)))
}
