//! Executable fixtures for the worked examples, each with the facts it is
//! expected to reproduce.
//!
//! Some facts record behaviour that contradicts the claim attached to the
//! example (a map that leaves its domain, a pair that violates the stated
//! condition). Those carry `discrepancy: true` and pass only when the
//! contradiction is reproduced.

use std::fmt::{self, Write as _};

use crate::contraction::{
    self, check_condition_c, check_k_continuity, check_orbital_lsc, fixed_points_among, grid_pairs,
    ContractionError, ContractionSpec, ExprMap, FiniteMap, NMap, SelfMap, Verdict,
};
use crate::format::{MapFile, SpaceFile, SpecFile};
use crate::kexpr::parse;
use crate::picard::{self, ConvexRate, PicardError, StoppingCriteria};
use crate::space::{linspace, FiniteSpace, IntervalSpace, Suprametric, DEFAULT_TOL};

pub const NAMES: [&str; 5] = [
    "example_5pt",
    "example_4pt_ciric",
    "example_interval_T3",
    "example_no_fixed_point",
    "example_istratescu",
];

/// A point named by label (finite spaces) or by value (intervals).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pt {
    Label(&'static str),
    Real(f64),
}

impl fmt::Display for Pt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pt::Label(l) => f.write_str(l),
            Pt::Real(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Fact {
    /// The untransformed base space passes the axioms with `rho = 0`.
    BaseIsMetric,
    /// Distinct off-diagonal distances, ascending.
    DistanceSet(Vec<f64>),
    MinimalRho(f64),
    AxiomsAt { rho: f64, ok: bool },
    /// First violated triple `(i, k, j)` when `rho = 0`.
    MetricWitness([&'static str; 3]),
    /// Verdict over all pairs (finite) or a `grid x grid` sweep of `range`
    /// (interval, whole space when `None`).
    Condition {
        spec: ContractionSpec,
        grid: usize,
        range: Option<(f64, f64)>,
        verdict: Verdict,
        worst_ratio: Option<f64>,
    },
    /// The ordered pair violates the condition with these two sides.
    WitnessAt { spec: ContractionSpec, x: Pt, y: Pt, lhs: f64, bound: f64 },
    /// A grid sweep reports a witness with `x` in `(lo, hi)` and the given `y`.
    WitnessInRegion { spec: ContractionSpec, grid: usize, lo: f64, hi: f64, y: f64 },
    /// `T^n` maps every point to `at`.
    IteratesConstant { n: usize, at: Pt },
    /// Picard from `start` (every point when `None`) lands exactly on `point`.
    ReachesFixedPoint { start: Option<Pt>, point: Pt, max_steps: usize },
    /// Picard from `start` gets the residual below `residual` in `max_iters`.
    ConvergesFrom { start: Pt, residual: f64, max_iters: usize },
    /// The only fixed point among all points (finite) or a `grid` sweep.
    UniqueFixedPoint { point: Pt, grid: usize },
    /// `d(x, T^n x)`.
    OrbitDistance { x: Pt, n: usize, value: f64 },
    /// No trace bound violations on orbits from every point (finite) or
    /// from a 21-point grid (interval).
    TraceBounds { m: usize, alpha: f64 },
    /// `d(x, Tx) > tol` on every point of a `grid`.
    NoFixedPointOnGrid { grid: usize },
    KContinuity { start: Pt, z: Pt, ks: Vec<usize>, holds: bool },
    OrbitalLsc { start: Pt, z: Pt, holds: bool, displacement: f64 },
    ConditionC { start: Pt, z: Pt, ks: Vec<f64>, holds: bool },
    /// The orbit from `start` settles numerically but its limit is not fixed.
    LimitNotFixed { start: Pt, candidate: Pt, residual: f64 },
    MapValue { x: f64, value: f64 },
    /// `T(x) = image` lies outside the space.
    Escape { x: f64, image: f64 },
    /// `|T^2x - T^2y| = (x^2+y^2)/4 |Tx-Ty| + (x+y)/8 |x-y|` at one pair.
    DisplayedIdentity { x: f64, y: f64, holds: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expected {
    pub fact: Fact,
    pub discrepancy: bool,
}

fn fact(f: Fact) -> Expected {
    Expected { fact: f, discrepancy: false }
}

fn discrepancy(f: Fact) -> Expected {
    Expected { fact: f, discrepancy: true }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Finite { base: Option<FiniteSpace>, space: FiniteSpace, map: FiniteMap },
    Interval { space: IntervalSpace, map: ExprMap },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: &'static str,
    pub summary: &'static str,
    pub body: Body,
    pub spec: ContractionSpec,
    pub expected: Vec<Expected>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactResult {
    pub fact: String,
    pub observed: String,
    pub pass: bool,
    pub discrepancy: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureReport {
    pub name: &'static str,
    pub results: Vec<FactResult>,
}

impl FixtureReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    pub fn discrepancies(&self) -> usize {
        self.results.iter().filter(|r| r.discrepancy && r.pass).count()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{status} {}", self.name);
        for r in &self.results {
            let mark = if r.pass { "ok  " } else { "FAIL" };
            let tag = if r.discrepancy { " [discrepancy]" } else { "" };
            let _ = writeln!(out, "  {mark} {}{tag}: {}", r.fact, r.observed);
        }
        out
    }
}

pub fn all() -> Vec<Fixture> {
    vec![example_5pt(), example_4pt_ciric(), example_interval_t3(), example_no_fixed_point(), example_istratescu()]
}

pub fn by_name(name: &str) -> Option<Fixture> {
    match name {
        "example_5pt" => Some(example_5pt()),
        "example_4pt_ciric" => Some(example_4pt_ciric()),
        "example_interval_T3" => Some(example_interval_t3()),
        "example_no_fixed_point" => Some(example_no_fixed_point()),
        "example_istratescu" => Some(example_istratescu()),
        _ => None,
    }
}

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Five points with log distances, mapped by `alpha (e^d - 1)`;
/// `T: x -> y -> z -> w -> w`, `t -> y`.
pub fn example_5pt() -> Fixture {
    let (l2, l3, l4) = (2f64.ln(), 3f64.ln(), 4f64.ln());
    // order x, y, z, w, t
    let d1 = vec![
        vec![0.0, l2, l2, l2, l2],
        vec![l2, 0.0, l4, l4, l4],
        vec![l2, l4, 0.0, l3, l3],
        vec![l2, l4, l3, 0.0, l2],
        vec![l2, l4, l3, l2, 0.0],
    ];
    let base = FiniteSpace::new(labels(&["x", "y", "z", "w", "t"]), d1, 0.0).expect("valid base");
    let space = base.from_metric_exp(1.0).expect("valid transform");
    let map = FiniteMap::new(vec![1, 2, 3, 3, 1], 5).expect("valid map");
    let spec = ContractionSpec::ConvexM { coeffs: vec![0.3, 0.3, 0.3] };
    Fixture {
        name: "example_5pt",
        summary: "five-point exponential transform, T^3 constant at w",
        expected: vec![
            fact(Fact::BaseIsMetric),
            fact(Fact::DistanceSet(vec![1.0, 2.0, 3.0])),
            fact(Fact::MinimalRho(1.0)),
            fact(Fact::AxiomsAt { rho: 1.0, ok: true }),
            fact(Fact::IteratesConstant { n: 3, at: Pt::Label("w") }),
            fact(Fact::Condition {
                spec: spec.clone(),
                grid: 0,
                range: None,
                verdict: Verdict::Satisfied,
                worst_ratio: Some(0.0),
            }),
            fact(Fact::Condition {
                spec: ContractionSpec::Fisher { lambda: 0.5, p: 3, q: 3 },
                grid: 0,
                range: None,
                verdict: Verdict::Satisfied,
                worst_ratio: Some(0.0),
            }),
            fact(Fact::ReachesFixedPoint { start: Some(Pt::Label("t")), point: Pt::Label("w"), max_steps: 3 }),
            fact(Fact::UniqueFixedPoint { point: Pt::Label("w"), grid: 0 }),
            fact(Fact::TraceBounds { m: 3, alpha: 0.9 }),
        ],
        body: Body::Finite { base: Some(base), space, map },
        spec,
    }
}

/// Four points with `d(x, y) = 3` and every other distance 1, `rho = 1`;
/// `T: x -> y -> z -> z`, `w -> x`; `n(x) = n(y) = 2`, `n(z) = n(w) = 3`.
pub fn example_4pt_ciric() -> Fixture {
    let d = vec![
        vec![0.0, 3.0, 1.0, 1.0],
        vec![3.0, 0.0, 1.0, 1.0],
        vec![1.0, 1.0, 0.0, 1.0],
        vec![1.0, 1.0, 1.0, 0.0],
    ];
    let space = FiniteSpace::new(labels(&["x", "y", "z", "w"]), d, 1.0).expect("valid space");
    let map = FiniteMap::new(vec![1, 2, 2, 0], 4).expect("valid map");
    let n_map = NMap::PerPoint(vec![2, 2, 3, 3]);
    let spec = ContractionSpec::Ciric { lambda: 1.0 / 3.0, n_map: n_map.clone() };
    let sehgal = ContractionSpec::Sehgal { lambda: 1.0 / 3.0, n_map };
    Fixture {
        name: "example_4pt_ciric",
        summary: "four-point non-metric suprametric, Ciric quasi-contraction",
        expected: vec![
            fact(Fact::AxiomsAt { rho: 1.0, ok: true }),
            fact(Fact::MinimalRho(1.0)),
            fact(Fact::MetricWitness(["x", "z", "y"])),
            fact(Fact::Condition {
                spec: spec.clone(),
                grid: 0,
                range: None,
                verdict: Verdict::Satisfied,
                worst_ratio: Some(1.0),
            }),
            fact(Fact::WitnessAt {
                spec: sehgal,
                x: Pt::Label("x"),
                y: Pt::Label("w"),
                lhs: 1.0,
                bound: 1.0 / 3.0,
            }),
            fact(Fact::ReachesFixedPoint { start: None, point: Pt::Label("z"), max_steps: 3 }),
            fact(Fact::UniqueFixedPoint { point: Pt::Label("z"), grid: 0 }),
            fact(Fact::TraceBounds { m: 3, alpha: 0.9 }),
        ],
        body: Body::Finite { base: None, space, map },
        spec,
    }
}

/// `Tx = x/3` on `[0, 2]` with `d = |x-y|(|x-y|+1)`, `n = 3`, `lambda = 29/729`.
pub fn example_interval_t3() -> Fixture {
    let space = IntervalSpace::poly(0.0, 2.0, 1.0).expect("valid interval");
    let map = ExprMap::new(parse("x/3").expect("valid expression"));
    let lambda = 29.0 / 729.0;
    let spec = ContractionSpec::Ciric { lambda, n_map: NMap::Constant(3) };
    Fixture {
        name: "example_interval_T3",
        summary: "x/3 on [0,2] under the poly suprametric, rho = 2",
        expected: vec![
            fact(Fact::Condition {
                spec: spec.clone(),
                grid: 50,
                range: None,
                verdict: Verdict::Satisfied,
                worst_ratio: None,
            }),
            fact(Fact::Condition {
                spec: ContractionSpec::ConvexM { coeffs: vec![lambda, 0.0, 0.0] },
                grid: 50,
                range: None,
                verdict: Verdict::Satisfied,
                worst_ratio: None,
            }),
            fact(Fact::OrbitDistance { x: Pt::Real(2.0), n: 3, value: 52.0 * 79.0 / 729.0 }),
            fact(Fact::ConvergesFrom { start: Pt::Real(2.0), residual: 1e-12, max_iters: 40 }),
            fact(Fact::UniqueFixedPoint { point: Pt::Real(0.0), grid: 10_001 }),
            fact(Fact::TraceBounds { m: 3, alpha: lambda }),
        ],
        body: Body::Interval { space, map },
        spec,
    }
}

/// `Tx = x/2` for `x != 0`, `T0 = 2` on `[0, 2]` with `|x - y|` declared as
/// a suprametric with `rho = 1/2`.
pub fn example_no_fixed_point() -> Fixture {
    let space = IntervalSpace::absolute(0.0, 2.0, 0.5).expect("valid interval");
    let map = ExprMap::new(parse("x/2").expect("valid expression")).with_override(0.0, 2.0);
    let spec = ContractionSpec::CiricVariant { lambda: 0.5, n: 2 };
    Fixture {
        name: "example_no_fixed_point",
        summary: "x/2 with T0 = 2: orbits converge to a non-fixed limit",
        expected: vec![
            fact(Fact::NoFixedPointOnGrid { grid: 10_000 }),
            fact(Fact::KContinuity { start: Pt::Real(2.0), z: Pt::Real(0.0), ks: vec![1, 2, 3], holds: false }),
            fact(Fact::OrbitalLsc { start: Pt::Real(1.0), z: Pt::Real(0.0), holds: false, displacement: 2.0 }),
            fact(Fact::ConditionC {
                start: Pt::Real(1.0),
                z: Pt::Real(0.0),
                ks: vec![1.0, 10.0, 1e6],
                holds: false,
            }),
            fact(Fact::LimitNotFixed { start: Pt::Real(1.0), candidate: Pt::Real(0.0), residual: 2.0 }),
            discrepancy(Fact::WitnessAt {
                spec: spec.clone(),
                x: Pt::Real(0.1),
                y: Pt::Real(0.0),
                lhs: 0.975,
                bound: 0.95,
            }),
            discrepancy(Fact::WitnessInRegion { spec: spec.clone(), grid: 41, lo: 0.0, hi: 0.2, y: 0.0 }),
        ],
        body: Body::Interval { space, map },
        spec,
    }
}

/// Right end of the sub-interval of `[0, 1]` on which `T^2` stays in
/// `[0, 1]`: `T(x) <= 1/sqrt 2` iff `x <= sqrt(2^{-1/4} - 1/2)`.
pub fn istratescu_stable_end() -> f64 {
    (0.5f64.sqrt().sqrt() - 0.5).sqrt()
}

/// `T(x) = (x^2 + 1/2)^2` on `[0, 1]`.
pub fn example_istratescu() -> Fixture {
    let space = IntervalSpace::absolute(0.0, 1.0, 0.0).expect("valid interval");
    let map = ExprMap::new(parse("(x^2 + 0.5)^2").expect("valid expression"));
    let spec = ContractionSpec::ConvexM { coeffs: vec![0.25, 0.5] };
    Fixture {
        name: "example_istratescu",
        summary: "(x^2 + 1/2)^2 on [0,1]: not a self-map, no fixed point",
        expected: vec![
            fact(Fact::MapValue { x: 0.0, value: 0.25 }),
            fact(Fact::MapValue { x: 0.25, value: 0.316_406_25 }),
            discrepancy(Fact::Escape { x: 1.0, image: 2.25 }),
            fact(Fact::NoFixedPointOnGrid { grid: 10_001 }),
            discrepancy(Fact::DisplayedIdentity { x: 0.5, y: 0.0, holds: false }),
            discrepancy(Fact::Condition {
                spec: spec.clone(),
                grid: 101,
                range: Some((0.0, istratescu_stable_end() - 1e-9)),
                verdict: Verdict::Violated,
                worst_ratio: None,
            }),
        ],
        body: Body::Interval { space, map },
        spec,
    }
}

impl Fixture {
    pub fn check(&self) -> FixtureReport {
        let results = self
            .expected
            .iter()
            .map(|e| {
                let (pass, observed) = match self.check_fact(&e.fact) {
                    Ok(r) => r,
                    Err(msg) => (false, format!("error: {msg}")),
                };
                FactResult { fact: describe_fact(&e.fact), observed, pass, discrepancy: e.discrepancy }
            })
            .collect();
        FixtureReport { name: self.name, results }
    }

    /// The fixture as space, map and spec files for CLI replay.
    pub fn export(&self) -> (SpaceFile, MapFile, SpecFile) {
        match &self.body {
            Body::Finite { space, map, .. } => (
                SpaceFile::from_finite(space),
                MapFile::from_finite(map, space),
                SpecFile::from_spec(&self.spec, Some(space.labels())),
            ),
            Body::Interval { space, map } => (
                SpaceFile::from_interval(space),
                MapFile::from_expr(map),
                SpecFile::from_spec(&self.spec, None),
            ),
        }
    }

    fn check_fact(&self, f: &Fact) -> Result<(bool, String), String> {
        match &self.body {
            Body::Finite { base, space, map } => {
                if let Some(r) = finite_only(f, base.as_ref(), space) {
                    return r;
                }
                let resolve = |p: &Pt| match p {
                    Pt::Label(l) => space.index(l).ok_or_else(|| format!("unknown point {l}")),
                    Pt::Real(v) => Err(format!("finite space has no point {v}")),
                };
                let points: Vec<usize> = (0..space.len()).collect();
                let sweep = |_: usize, _: Option<(f64, f64)>| points.clone();
                check_generic(f, space, map, &resolve, &points, sweep, |_| None)
            }
            Body::Interval { space, map } => {
                if let Some(r) = interval_only(f, space, map) {
                    return r;
                }
                let resolve = |p: &Pt| match p {
                    Pt::Real(v) => Ok(*v),
                    Pt::Label(l) => Err(format!("interval has no point {l}")),
                };
                let starts = space.grid(21);
                let sweep = |grid: usize, range: Option<(f64, f64)>| match range {
                    Some((lo, hi)) => linspace(lo, hi, grid),
                    None => space.grid(grid),
                };
                check_generic(f, space, map, &resolve, &starts, sweep, |x| Some(*x))
            }
        }
    }
}

fn describe_fact(f: &Fact) -> String {
    match f {
        Fact::BaseIsMetric => "base distances form a metric".into(),
        Fact::DistanceSet(v) => format!("distinct distances {v:?}"),
        Fact::MinimalRho(r) => format!("minimal rho = {r}"),
        Fact::AxiomsAt { rho, ok } => format!("axioms at rho = {rho} hold: {ok}"),
        Fact::MetricWitness(t) => format!("metric fails at ({}, {}, {})", t[0], t[1], t[2]),
        Fact::Condition { spec, grid, range, verdict, worst_ratio } => {
            let mut s = format!("{} {verdict}", spec.kind());
            if *grid > 0 {
                let _ = write!(s, " on {grid}x{grid} grid");
            }
            if let Some((lo, hi)) = range {
                let _ = write!(s, " of [{lo}, {hi:.4}]");
            }
            if let Some(w) = worst_ratio {
                let _ = write!(s, ", worst ratio {w}");
            }
            s
        }
        Fact::WitnessAt { spec, x, y, lhs, bound } => {
            format!("{} violated at ({x}, {y}): lhs {lhs} > bound {bound}", spec.kind())
        }
        Fact::WitnessInRegion { spec, grid, lo, hi, y } => {
            format!("{} witness with x in ({lo}, {hi}), y = {y} on {grid}x{grid} grid", spec.kind())
        }
        Fact::IteratesConstant { n, at } => format!("T^{n} is constant at {at}"),
        Fact::ReachesFixedPoint { start: Some(s), point, max_steps } => {
            format!("orbit from {s} reaches {point} within {max_steps} steps")
        }
        Fact::ReachesFixedPoint { start: None, point, max_steps } => {
            format!("orbits from every point reach {point} within {max_steps} steps")
        }
        Fact::ConvergesFrom { start, residual, max_iters } => {
            format!("orbit from {start} reaches residual < {residual:e} within {max_iters} steps")
        }
        Fact::UniqueFixedPoint { point, .. } => format!("unique fixed point {point}"),
        Fact::OrbitDistance { x, n, value } => format!("d({x}, T^{n} {x}) = {value}"),
        Fact::TraceBounds { m, alpha } => format!("no step bound violations for m = {m}, alpha = {alpha}"),
        Fact::NoFixedPointOnGrid { grid } => format!("no fixed point on a {grid}-point grid"),
        Fact::KContinuity { ks, holds, .. } => format!("k-continuous for k in {ks:?}: {holds}"),
        Fact::OrbitalLsc { holds, displacement, .. } => {
            format!("orbitally lsc: {holds} with D(limit) = {displacement}")
        }
        Fact::ConditionC { ks, holds, .. } => format!("condition (C;k) for k in {ks:?}: {holds}"),
        Fact::LimitNotFixed { start, candidate, residual } => {
            format!("orbit from {start} settles at {candidate}, not fixed (D = {residual})")
        }
        Fact::MapValue { x, value } => format!("T({x}) = {value}"),
        Fact::Escape { x, image } => format!("T({x}) = {image} leaves the space"),
        Fact::DisplayedIdentity { x, y, holds } => format!("displayed T^2 identity at ({x}, {y}) holds: {holds}"),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

type Check = Result<(bool, String), String>;

fn finite_only(f: &Fact, base: Option<&FiniteSpace>, space: &FiniteSpace) -> Option<Check> {
    let r = match f {
        Fact::BaseIsMetric => {
            let Some(base) = base else {
                return Some(Err("fixture has no base space".into()));
            };
            let rep = base.check_axioms(DEFAULT_TOL);
            Ok((rep.all_ok() && base.rho() == 0.0, format!("{} triples checked, ok = {}", rep.triples_checked, rep.all_ok())))
        }
        Fact::DistanceSet(want) => {
            let mut got: Vec<f64> = Vec::new();
            for (i, row) in space.matrix().iter().enumerate() {
                for &v in &row[i + 1..] {
                    if !got.iter().any(|g| close(*g, v)) {
                        got.push(v);
                    }
                }
            }
            got.sort_by(f64::total_cmp);
            let pass = got.len() == want.len() && got.iter().zip(want).all(|(g, w)| close(*g, *w));
            Ok((pass, format!("{got:?}")))
        }
        Fact::MinimalRho(want) => space
            .minimal_rho()
            .map(|r| (close(r, *want), format!("{r}")))
            .map_err(|e| e.to_string()),
        Fact::AxiomsAt { rho, ok } => space
            .with_rho(*rho)
            .map(|s| {
                let rep = s.check_axioms(DEFAULT_TOL);
                (rep.all_ok() == *ok, format!("{} violations", rep.violations.len()))
            })
            .map_err(|e| e.to_string()),
        Fact::MetricWitness(want) => space
            .with_rho(0.0)
            .map(|s| {
                let rep = s.check_axioms(DEFAULT_TOL);
                match rep.violations.first() {
                    Some(v) => {
                        let got = [space.label(v.i), space.label(v.k), space.label(v.j)];
                        (got == *want, format!("({}, {}, {}) defect {}", got[0], got[1], got[2], v.defect))
                    }
                    None => (false, "no violation".into()),
                }
            })
            .map_err(|e| e.to_string()),
        _ => return None,
    };
    Some(r)
}

fn interval_only(f: &Fact, space: &IntervalSpace, map: &ExprMap) -> Option<Check> {
    let r = match f {
        Fact::MapValue { x, value } => {
            let got = map.apply(x);
            Ok((close(got, *value), format!("{got}")))
        }
        Fact::Escape { x, image } => {
            let got = map.apply(x);
            Ok((close(got, *image) && !space.contains(&got), format!("T({x}) = {got}, inside = {}", space.contains(&got))))
        }
        Fact::DisplayedIdentity { x, y, holds } => {
            let t = |v: f64| map.apply(&v);
            let lhs = (t(t(*x)) - t(t(*y))).abs();
            let rhs = (x * x + y * y) / 4.0 * (t(*x) - t(*y)).abs() + (x + y) / 8.0 * (x - y).abs();
            let got = (lhs - rhs).abs() <= 1e-12;
            Ok((got == *holds, format!("lhs {lhs:.6} vs rhs {rhs:.6}")))
        }
        Fact::NoFixedPointOnGrid { grid } => {
            // Raw d(x, Tx): the image may leave the space, which is fine here.
            let (min, at) = space
                .grid(*grid)
                .into_iter()
                .map(|x| (space.distance(&x, &map.apply(&x)), x))
                .fold((f64::INFINITY, f64::NAN), |best, c| if c.0 < best.0 { c } else { best });
            Ok((min > DEFAULT_TOL, format!("min d(x, Tx) = {min:.6} at x = {at}")))
        }
        _ => return None,
    };
    Some(r)
}

fn picard_err(e: PicardError) -> String {
    e.to_string()
}

fn contraction_err(e: ContractionError) -> String {
    e.to_string()
}

fn check_generic<S, M>(
    f: &Fact,
    space: &S,
    map: &M,
    resolve: &dyn Fn(&Pt) -> Result<S::Point, String>,
    starts: &[S::Point],
    sweep: impl Fn(usize, Option<(f64, f64)>) -> Vec<S::Point>,
    coord: impl Fn(&S::Point) -> Option<f64>,
) -> Check
where
    S: Suprametric,
    S::Point: PartialEq,
    M: SelfMap<S::Point>,
{
    let pairs = |grid: usize, range: Option<(f64, f64)>| {
        let xs = sweep(grid, range);
        grid_pairs(&xs, &xs)
    };
    match f {
        Fact::Condition { spec, grid, range, verdict, worst_ratio } => {
            let rep = spec.verify(map, space, &pairs(*grid, *range), DEFAULT_TOL).map_err(contraction_err)?;
            let ratio_ok = worst_ratio.is_none_or(|w| (rep.worst_ratio - w).abs() <= 1e-12);
            Ok((
                rep.verdict == *verdict && ratio_ok,
                format!(
                    "{} over {} pairs, worst ratio {}, {} witnesses",
                    rep.verdict,
                    rep.pairs_tested,
                    rep.worst_ratio,
                    rep.witnesses.len()
                ),
            ))
        }
        Fact::WitnessAt { spec, x, y, lhs, bound } => {
            let pair = vec![(resolve(x)?, resolve(y)?)];
            let rep = spec.verify(map, space, &pair, DEFAULT_TOL).map_err(contraction_err)?;
            match rep.witnesses.first() {
                Some(w) => {
                    let got_bound = rep.rate * w.rhs_max;
                    Ok((
                        close(w.lhs, *lhs) && close(got_bound, *bound),
                        format!("lhs {} vs bound {}", w.lhs, got_bound),
                    ))
                }
                None => Ok((false, format!("{} at this pair", rep.verdict))),
            }
        }
        Fact::WitnessInRegion { spec, grid, lo, hi, y } => {
            let rep = spec.verify(map, space, &pairs(*grid, None), DEFAULT_TOL).map_err(contraction_err)?;
            let found = rep.witnesses.iter().find(|w| match (coord(&w.x), coord(&w.y)) {
                (Some(a), Some(b)) => a > *lo && a < *hi && b == *y,
                _ => false,
            });
            Ok(match found {
                Some(w) => (
                    true,
                    format!(
                        "{} witnesses; e.g. ({}, {}) lhs {} vs bound {}",
                        rep.witnesses.len(),
                        space.describe(&w.x),
                        space.describe(&w.y),
                        w.lhs,
                        rep.rate * w.rhs_max
                    ),
                ),
                None => (false, format!("{} witnesses, none in region", rep.witnesses.len())),
            })
        }
        Fact::IteratesConstant { n, at } => {
            let at = resolve(at)?;
            let mut bad = None;
            for x in starts {
                let o = contraction::orbit(map, space, x, *n).map_err(contraction_err)?;
                if o[*n] != at {
                    bad = Some(space.describe(x));
                    break;
                }
            }
            Ok(match bad {
                None => (true, format!("T^{n} = {} on all {} points", space.describe(&at), starts.len())),
                Some(x) => (false, format!("T^{n}({x}) differs")),
            })
        }
        Fact::ReachesFixedPoint { start, point, max_steps } => {
            let target = resolve(point)?;
            let xs = match start {
                Some(s) => vec![resolve(s)?],
                None => starts.to_vec(),
            };
            let stop = StoppingCriteria { max_iters: max_steps + 1, displacement_tol: 0.0, tail_bound_tol: 0.0 };
            let mut worst = 0;
            for x in xs {
                let tr = picard::iterate(map, space, x.clone(), &stop, None).map_err(picard_err)?;
                let steps = tr.points.iter().position(|p| *p == target);
                match steps {
                    Some(k) if k <= *max_steps && tr.reached_fixed_point() => worst = worst.max(k),
                    _ => return Ok((false, format!("orbit from {} does not reach it", space.describe(&x)))),
                }
            }
            Ok((true, format!("at most {worst} steps")))
        }
        Fact::ConvergesFrom { start, residual, max_iters } => {
            let stop = StoppingCriteria { max_iters: *max_iters, displacement_tol: *residual, tail_bound_tol: 0.0 };
            let tr = picard::iterate(map, space, resolve(start)?, &stop, None).map_err(picard_err)?;
            Ok((
                tr.residual < *residual && tr.steps() <= *max_iters,
                format!("residual {:e} after {} steps", tr.residual, tr.steps()),
            ))
        }
        Fact::UniqueFixedPoint { point, grid } => {
            let cands = sweep(*grid, None);
            let fixed = fixed_points_among(map, space, &cands, DEFAULT_TOL).map_err(contraction_err)?;
            let want = resolve(point)?;
            let shown: Vec<String> = fixed.iter().map(|p| space.describe(p)).collect();
            Ok((fixed == vec![want], format!("fixed points {shown:?} among {} candidates", cands.len())))
        }
        Fact::OrbitDistance { x, n, value } => {
            let x = resolve(x)?;
            let o = contraction::orbit(map, space, &x, *n).map_err(contraction_err)?;
            let d = space.distance(&x, &o[*n]);
            Ok((close(d, *value), format!("{d}")))
        }
        Fact::TraceBounds { m, alpha } => {
            let rate = ConvexRate::new(*m, *alpha).map_err(picard_err)?;
            let mut checked = 0;
            let mut violations = 0;
            for x in starts {
                let tr = picard::iterate(map, space, x.clone(), &StoppingCriteria::default(), Some(rate))
                    .map_err(picard_err)?;
                let rep = picard::verify_trace_bounds(&tr, *m, *alpha, DEFAULT_TOL).map_err(picard_err)?;
                checked += rep.checked;
                violations += rep.violations.len();
            }
            Ok((
                violations == 0,
                format!("{violations} violations over {checked} steps from {} starts", starts.len()),
            ))
        }
        Fact::NoFixedPointOnGrid { grid } => {
            let cands = sweep(*grid, None);
            let fixed = fixed_points_among(map, space, &cands, DEFAULT_TOL).map_err(contraction_err)?;
            Ok((fixed.is_empty(), format!("{} fixed points among {} points", fixed.len(), cands.len())))
        }
        Fact::KContinuity { start, z, ks, holds } => {
            let seq = contraction::orbit(map, space, &resolve(start)?, 60).map_err(contraction_err)?;
            let z = resolve(z)?;
            let mut observed = Vec::new();
            let mut all_match = true;
            for &k in ks {
                let d = check_k_continuity(map, space, &seq, &z, k, DEFAULT_TOL).map_err(contraction_err)?;
                all_match &= d.holds == *holds && !d.vacuous;
                observed.push(format!("k={k}: {} ({})", d.holds, d.detail));
            }
            Ok((all_match, observed.join("; ")))
        }
        Fact::OrbitalLsc { start, z, holds, displacement } => {
            let tr = settle(map, space, resolve(start)?)?;
            let d = check_orbital_lsc(map, space, &tr, &resolve(z)?, DEFAULT_TOL).map_err(contraction_err)?;
            Ok((d.holds == *holds && d.observed == *displacement, d.detail))
        }
        Fact::ConditionC { start, z, ks, holds } => {
            let tr = settle(map, space, resolve(start)?)?;
            let z = resolve(z)?;
            let mut all_match = true;
            let mut observed = Vec::new();
            for &k in ks {
                let d = check_condition_c(map, space, &tr, &z, k, DEFAULT_TOL).map_err(contraction_err)?;
                all_match &= d.holds == *holds;
                observed.push(format!("k={k}: {}", d.holds));
            }
            Ok((all_match, observed.join(", ")))
        }
        Fact::LimitNotFixed { start, candidate, residual } => {
            let tr = settle(map, space, resolve(start)?)?;
            let lc = picard::limit_check(map, space, &tr, DEFAULT_TOL.sqrt());
            let want = resolve(candidate)?;
            Ok((
                tr.converged && !lc.is_fixed_point && lc.candidate == want && close(lc.candidate_residual, *residual),
                format!(
                    "settled after {} steps at {}, D = {}",
                    tr.steps(),
                    space.describe(&lc.candidate),
                    lc.candidate_residual
                ),
            ))
        }
        other => Err(format!("fact {} does not apply to this space", describe_fact(other))),
    }
}

fn settle<S, M>(map: &M, space: &S, x0: S::Point) -> Result<picard::OrbitTrace<S::Point>, String>
where
    S: Suprametric,
    M: SelfMap<S::Point>,
{
    let stop = StoppingCriteria { max_iters: 1000, displacement_tol: 1e-12, tail_bound_tol: 0.0 };
    picard::iterate(map, space, x0, &stop, None).map_err(picard_err)
}
