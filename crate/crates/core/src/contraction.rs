//! Contraction conditions, their verifiers, and continuity-type diagnostics.
//!
//! Every verifier evaluates an inequality `lhs <= rate * rhs` on an explicit
//! list of ordered pairs. On continuous domains a `Satisfied` verdict means
//! "satisfied on the tested set", never a proof.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::kexpr::Expr;
use crate::picard::OrbitTrace;
use crate::space::{IntervalSpace, Suprametric};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContractionError {
    #[error("empty test set")]
    EmptyTestSet,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no iterate order for point {0}")]
    MissingOrder(String),
    #[error("map leaves the domain: T({from}) = {image}")]
    LeftDomain { from: String, image: String },
}

/// A self-map `T` of a space.
pub trait SelfMap<P> {
    fn apply(&self, x: &P) -> P;
}

impl<P, F: Fn(&P) -> P> SelfMap<P> for F {
    fn apply(&self, x: &P) -> P {
        self(x)
    }
}

/// A map on a finite space given by the index of each image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteMap {
    images: Vec<usize>,
}

impl FiniteMap {
    pub fn new(images: Vec<usize>, space_len: usize) -> Result<Self, ContractionError> {
        if let Some((i, &img)) = images.iter().enumerate().find(|(_, &img)| img >= space_len) {
            return Err(ContractionError::InvalidParameter(format!(
                "image of point {i} is {img}, outside a space of {space_len} points"
            )));
        }
        if images.len() != space_len {
            return Err(ContractionError::InvalidParameter(format!(
                "map has {} images for {space_len} points",
                images.len()
            )));
        }
        Ok(FiniteMap { images })
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }
}

impl SelfMap<usize> for FiniteMap {
    fn apply(&self, x: &usize) -> usize {
        self.images[*x]
    }
}

/// A real map given by an expression in `x`, with optional point overrides
/// (e.g. `T(x) = x/2` except `T(0) = 2`). Evaluation errors yield NaN, which
/// no interval contains.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprMap {
    pub expr: Expr,
    pub overrides: Vec<(f64, f64)>,
}

impl ExprMap {
    pub fn new(expr: Expr) -> Self {
        ExprMap { expr, overrides: Vec::new() }
    }

    pub fn with_override(mut self, at: f64, value: f64) -> Self {
        self.overrides.push((at, value));
        self
    }
}

impl SelfMap<f64> for ExprMap {
    fn apply(&self, x: &f64) -> f64 {
        if let Some(&(_, v)) = self.overrides.iter().find(|(at, _)| at == x) {
            return v;
        }
        self.expr.eval(*x, 0.0).unwrap_or(f64::NAN)
    }
}

/// The iterate order `n(x)` of a Ciric or Sehgal condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NMap {
    Constant(usize),
    /// Indexed by the position of the point in a finite space.
    PerPoint(Vec<usize>),
}

impl NMap {
    pub fn order<S: Suprametric>(&self, space: &S, x: &S::Point) -> Result<usize, ContractionError> {
        match self {
            NMap::Constant(n) => Ok(*n),
            NMap::PerPoint(v) => space
                .index_of(x)
                .and_then(|i| v.get(i).copied())
                .ok_or_else(|| ContractionError::MissingOrder(space.describe(x))),
        }
    }

    fn validate(&self) -> Result<(), ContractionError> {
        let zero = match self {
            NMap::Constant(n) => *n == 0,
            NMap::PerPoint(v) => v.contains(&0),
        };
        if zero {
            return Err(ContractionError::InvalidParameter("iterate orders must be >= 1".into()));
        }
        Ok(())
    }
}

/// One contraction hypothesis with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ContractionSpec {
    /// `d(Tx, Ty) <= alpha d(x, y)`
    Banach { alpha: f64 },
    /// `d(T^m x, T^m y) <= sum_i a_i d(T^i x, T^i y)`, `m = coeffs.len()`
    ConvexM { coeffs: Vec<f64> },
    /// `d(T^n x, T^n y) <= lambda M(x, y)` with `n = n(x)`
    Ciric { lambda: f64, n_map: NMap },
    /// `d(T^n y, T^n x) <= lambda d(y, x)` with `n = n(x)`
    Sehgal { lambda: f64, n_map: NMap },
    /// Ciric condition with one global `n`
    CiricVariant { lambda: f64, n: usize },
    /// `d(T^p x, T^q y) <= lambda max{mixed iterate distances}`
    Fisher { lambda: f64, p: usize, q: usize },
}

fn check_rate(name: &str, v: f64) -> Result<(), ContractionError> {
    if v.is_finite() && (0.0..1.0).contains(&v) {
        Ok(())
    } else {
        Err(ContractionError::InvalidParameter(format!("{name} = {v} must lie in [0, 1)")))
    }
}

impl ContractionSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ContractionSpec::Banach { .. } => "banach",
            ContractionSpec::ConvexM { .. } => "convex_m",
            ContractionSpec::Ciric { .. } => "ciric",
            ContractionSpec::Sehgal { .. } => "sehgal",
            ContractionSpec::CiricVariant { .. } => "ciric_variant",
            ContractionSpec::Fisher { .. } => "fisher",
        }
    }

    /// The contraction constant: alpha, the coefficient sum, or lambda.
    pub fn rate(&self) -> f64 {
        match self {
            ContractionSpec::Banach { alpha } => *alpha,
            ContractionSpec::ConvexM { coeffs } => coeffs.iter().sum(),
            ContractionSpec::Ciric { lambda, .. }
            | ContractionSpec::Sehgal { lambda, .. }
            | ContractionSpec::CiricVariant { lambda, .. }
            | ContractionSpec::Fisher { lambda, .. } => *lambda,
        }
    }

    pub fn validate(&self) -> Result<(), ContractionError> {
        match self {
            ContractionSpec::Banach { alpha } => check_rate("alpha", *alpha),
            ContractionSpec::ConvexM { coeffs } => {
                if coeffs.is_empty() {
                    return Err(ContractionError::InvalidParameter("empty coefficient list".into()));
                }
                if let Some(a) = coeffs.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
                    return Err(ContractionError::InvalidParameter(format!(
                        "coefficient {a} must be nonnegative"
                    )));
                }
                check_rate("sum of coefficients", self.rate())
            }
            ContractionSpec::Ciric { lambda, n_map } | ContractionSpec::Sehgal { lambda, n_map } => {
                check_rate("lambda", *lambda)?;
                n_map.validate()
            }
            ContractionSpec::CiricVariant { lambda, n } => {
                check_rate("lambda", *lambda)?;
                NMap::Constant(*n).validate()
            }
            ContractionSpec::Fisher { lambda, p, q } => {
                check_rate("lambda", *lambda)?;
                if *p == 0 || *q == 0 {
                    return Err(ContractionError::InvalidParameter("p and q must be >= 1".into()));
                }
                Ok(())
            }
        }
    }

    /// Validates the parameters and runs the matching verifier.
    pub fn verify<S, M>(
        &self,
        map: &M,
        space: &S,
        pairs: &[(S::Point, S::Point)],
        tol: f64,
    ) -> Result<VerificationReport<S::Point>, ContractionError>
    where
        S: Suprametric,
        M: SelfMap<S::Point>,
    {
        self.validate()?;
        match self {
            ContractionSpec::Banach { alpha } => verify_banach(map, space, pairs, *alpha, tol),
            ContractionSpec::ConvexM { coeffs } => verify_convex_m(map, space, pairs, coeffs, tol),
            ContractionSpec::Ciric { lambda, n_map } => {
                verify_ciric(map, space, pairs, *lambda, n_map, tol)
            }
            ContractionSpec::Sehgal { lambda, n_map } => {
                verify_sehgal(map, space, pairs, *lambda, n_map, tol)
            }
            ContractionSpec::CiricVariant { lambda, n } => {
                verify_ciric_variant(map, space, pairs, *lambda, *n, tol)
            }
            ContractionSpec::Fisher { lambda, p, q } => {
                verify_fisher(map, space, pairs, *lambda, *p, *q, tol)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Satisfied,
    Violated,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated => "violated",
        })
    }
}

/// A pair where `lhs > rate * rhs_max + tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness<P> {
    pub pair_index: usize,
    pub x: P,
    pub y: P,
    pub lhs: f64,
    pub rhs_max: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport<P> {
    pub condition: &'static str,
    pub verdict: Verdict,
    pub pairs_tested: usize,
    pub rate: f64,
    pub tol: f64,
    /// Max of `lhs / (rate * rhs_max)` with `0/0 = 0`.
    pub worst_ratio: f64,
    /// First pair attaining `worst_ratio`.
    pub worst_pair: Option<usize>,
    /// All violations in test-set order; nonempty iff violated.
    pub witnesses: Vec<Witness<P>>,
}

impl<P> VerificationReport<P> {
    pub fn is_satisfied(&self) -> bool {
        self.verdict == Verdict::Satisfied
    }

    pub fn worst_witness(&self) -> Option<&Witness<P>> {
        self.witnesses
            .iter()
            .fold(None, |best: Option<&Witness<P>>, w| match best {
                Some(b) if b.ratio >= w.ratio => Some(b),
                _ => Some(w),
            })
    }
}

pub fn ratio(lhs: f64, bound: f64) -> f64 {
    if bound == 0.0 {
        if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        lhs / bound
    }
}

fn aggregate<P: Clone, E>(
    condition: &'static str,
    pairs: &[(P, P)],
    rate: f64,
    tol: f64,
    mut eval: E,
) -> Result<VerificationReport<P>, ContractionError>
where
    E: FnMut(&P, &P) -> Result<(f64, f64), ContractionError>,
{
    if pairs.is_empty() {
        return Err(ContractionError::EmptyTestSet);
    }
    let mut worst_ratio = f64::NEG_INFINITY;
    let mut worst_pair = None;
    let mut witnesses = Vec::new();
    for (idx, (x, y)) in pairs.iter().enumerate() {
        let (lhs, rhs_max) = eval(x, y)?;
        let r = ratio(lhs, rate * rhs_max);
        if r > worst_ratio {
            worst_ratio = r;
            worst_pair = Some(idx);
        }
        if lhs > rate * rhs_max + tol {
            witnesses.push(Witness { pair_index: idx, x: x.clone(), y: y.clone(), lhs, rhs_max, ratio: r });
        }
    }
    Ok(VerificationReport {
        condition,
        verdict: if witnesses.is_empty() { Verdict::Satisfied } else { Verdict::Violated },
        pairs_tested: pairs.len(),
        rate,
        tol,
        worst_ratio,
        worst_pair,
        witnesses,
    })
}

/// `[x, Tx, ..., T^n x]`, failing if an iterate leaves the space.
pub fn orbit<S, M>(map: &M, space: &S, x: &S::Point, n: usize) -> Result<Vec<S::Point>, ContractionError>
where
    S: Suprametric,
    M: SelfMap<S::Point>,
{
    if !space.contains(x) {
        return Err(ContractionError::LeftDomain { from: "input".into(), image: space.describe(x) });
    }
    let mut out = Vec::with_capacity(n + 1);
    out.push(x.clone());
    for _ in 0..n {
        let prev = out.last().expect("orbit is nonempty");
        let next = map.apply(prev);
        if !space.contains(&next) {
            return Err(ContractionError::LeftDomain {
                from: space.describe(prev),
                image: space.describe(&next),
            });
        }
        out.push(next);
    }
    Ok(out)
}

fn m_from_orbits<S: Suprametric>(space: &S, x: &S::Point, ox: &[S::Point], oy: &[S::Point]) -> f64 {
    oy.iter()
        .chain(ox.iter())
        .map(|p| space.distance(x, p))
        .fold(0.0, f64::max)
}

/// `M(x, y) = max{d(x, T^i y), d(x, T^j x) : 0 <= i, j <= n}`.
pub fn m_value<S, M>(map: &M, space: &S, x: &S::Point, y: &S::Point, n: usize) -> Result<f64, ContractionError>
where
    S: Suprametric,
    M: SelfMap<S::Point>,
{
    let ox = orbit(map, space, x, n)?;
    let oy = orbit(map, space, y, n)?;
    Ok(m_from_orbits(space, x, &ox, &oy))
}

pub fn verify_banach<S, M>(
    map: &M,
    space: &S,
    pairs: &[(S::Point, S::Point)],
    alpha: f64,
    tol: f64,
) -> Result<VerificationReport<S::Point>, ContractionError>
where
    S: Suprametric,
    M: SelfMap<S::Point>,
{
    check_rate("alpha", alpha)?;
    aggregate("banach", pairs, alpha, tol, |x, y| {
        let ox = orbit(map, space, x, 1)?;
        let oy = orbit(map, space, y, 1)?;
        Ok((space.distance(&ox[1], &oy[1]), space.distance(x, y)))
    })
}

/// Convex contraction of order `m = coeffs.len()`. Reported with rate 1 and
/// `rhs_max = sum_i a_i d(T^i x, T^i y)`.
pub fn verify_convex_m<S, M>(
    map: &M,
    space: &S,
    pairs: &[(S::Point, S::Point)],
    coeffs: &[f64],
    tol: f64,
) -> Result<VerificationReport<S::Point>, ContractionError>
where
    S: Suprametric,
    M: SelfMap<S::Point>,
{
    ContractionSpec::ConvexM { coeffs: coeffs.to_vec() }.validate()?;
    let m = coeffs.len();
    aggregate("convex_m", pairs, 1.0, tol, |x, y| {
        let ox = orbit(map, space, x, m)?;
        let oy = orbit(map, space, y, m)?;
        let rhs = coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a * space.distance(&ox[i], &oy[i]))
            .sum();
        Ok((space.distance(&ox[m], &oy[m]), rhs))
    })
}

pub fn verify_ciric<S, M>(
    map: &M,
    space: &S,
    pairs: &[(S::Point, S::Point)],
    lambda: f64,
    n_map: &NMap,
    tol: f64,
) -> Result<VerificationReport<S::Point>, ContractionError>
where
    S: Suprametric,
    M: SelfMap<S::Point>,
{
    check_rate("lambda", lambda)?;
    n_map.validate()?;
    aggregate("ciric", pairs, lambda, tol, |x, y| {
        let n = n_map.order(space, x)?;
        let ox = orbit(map, space, x, n)?;
        let oy = orbit(map, space, y, n)?;
        Ok((space.distance(&ox[n], &oy[n]), m_from_orbits(space, x, &ox, &oy)))
    })
}

pub fn verify_sehgal<S, M>(
    map: &M,
    space: &S,
    pairs: &[(S::Point, S::Point)],
    lambda: f64,
    n_map: &NMap,
    tol: f64,
) -> Result<VerificationReport<S::Point>, ContractionError>
where
    S: Suprametric,
    M: SelfMap<S::Point>,
{
    check_rate("lambda", lambda)?;
    n_map.validate()?;
    aggregate("sehgal", pairs, lambda, tol, |x, y| {
        let n = n_map.order(space, x)?;
        let ox = orbit(map, space, x, n)?;
        let oy = orbit(map, space, y, n)?;
        Ok((space.distance(&oy[n], &ox[n]), space.distance(y, x)))
    })
}

/// Right-hand side uses `{d(x,y), d(x,T^i y) : 1 <= i <= n} ∪ {d(x,T^j x) : 1 <= j <= n}`.
pub fn verify_ciric_variant<S, M>(
    map: &M,
    space: &S,
    pairs: &[(S::Point, S::Point)],
    lambda: f64,
    n: usize,
    tol: f64,
) -> Result<VerificationReport<S::Point>, ContractionError>
where
    S: Suprametric,
    M: SelfMap<S::Point>,
{
    check_rate("lambda", lambda)?;
    NMap::Constant(n).validate()?;
    aggregate("ciric_variant", pairs, lambda, tol, |x, y| {
        let ox = orbit(map, space, x, n)?;
        let oy = orbit(map, space, y, n)?;
        let rhs = oy
            .iter()
            .chain(ox[1..].iter())
            .map(|p| space.distance(x, p))
            .fold(0.0, f64::max);
        Ok((space.distance(&ox[n], &oy[n]), rhs))
    })
}

pub fn verify_fisher<S, M>(
    map: &M,
    space: &S,
    pairs: &[(S::Point, S::Point)],
    lambda: f64,
    p: usize,
    q: usize,
    tol: f64,
) -> Result<VerificationReport<S::Point>, ContractionError>
where
    S: Suprametric,
    M: SelfMap<S::Point>,
{
    ContractionSpec::Fisher { lambda, p, q }.validate()?;
    aggregate("fisher", pairs, lambda, tol, |x, y| {
        let ox = orbit(map, space, x, p)?;
        let oy = orbit(map, space, y, q)?;
        let mut rhs = 0.0_f64;
        for a in &ox {
            for b in &oy {
                rhs = rhs.max(space.distance(a, b));
            }
            for a2 in &ox {
                rhs = rhs.max(space.distance(a, a2));
            }
        }
        for b in &oy {
            for b2 in &oy {
                rhs = rhs.max(space.distance(b, b2));
            }
        }
        Ok((space.distance(&ox[p], &oy[q]), rhs))
    })
}

/// Outcome of a finite-sample continuity diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub holds: bool,
    /// The premise (convergence to the limit) was not observed.
    pub vacuous: bool,
    pub observed: f64,
    pub bound: f64,
    pub detail: String,
}

/// Start of the trailing window used for limsup / liminf: the last 20% of a
/// sequence of length `len`, at least 5 entries.
pub fn window_start(len: usize) -> usize {
    let w = (len.div_ceil(5)).max(5).min(len);
    len - w
}

/// Finite-sample k-continuity: if `T^{k-1} x_n -> z` on the tail, checks that
/// `T^k x_n -> Tz` on the same tail.
pub fn check_k_continuity<S, M>(
    map: &M,
    space: &S,
    sequence: &[S::Point],
    z: &S::Point,
    k: usize,
    tol: f64,
) -> Result<Diagnostic, ContractionError>
where
    S: Suprametric,
    M: SelfMap<S::Point>,
{
    if sequence.is_empty() {
        return Err(ContractionError::EmptyTestSet);
    }
    if k == 0 {
        return Err(ContractionError::InvalidParameter("k must be >= 1".into()));
    }
    let tail = &sequence[window_start(sequence.len())..];
    let tz = orbit(map, space, z, 1)?.pop().expect("orbit has two points");
    let mut premise = 0.0_f64;
    let mut conclusion = 0.0_f64;
    for x in tail {
        let o = orbit(map, space, x, k)?;
        premise = premise.max(space.distance(&o[k - 1], z));
        conclusion = conclusion.max(space.distance(&o[k], &tz));
    }
    if premise > tol {
        return Ok(Diagnostic {
            holds: true,
            vacuous: true,
            observed: premise,
            bound: tol,
            detail: format!("premise not met: max d(T^{}x_n, z) = {premise:e}", k - 1),
        });
    }
    Ok(Diagnostic {
        holds: conclusion <= tol,
        vacuous: false,
        observed: conclusion,
        bound: tol,
        detail: format!(
            "max d(T^{k}x_n, Tz) = {conclusion:e} with Tz = {}",
            space.describe(&tz)
        ),
    })
}

fn displacement_at<S, M>(map: &M, space: &S, z: &S::Point) -> Result<f64, ContractionError>
where
    S: Suprametric,
    M: SelfMap<S::Point>,
{
    let o = orbit(map, space, z, 1)?;
    Ok(space.distance(&o[0], &o[1]))
}

fn trace_window<P>(trace: &OrbitTrace<P>) -> Result<&[f64], ContractionError> {
    let d = &trace.displacements;
    if d.is_empty() {
        return Err(ContractionError::EmptyTestSet);
    }
    Ok(&d[window_start(d.len())..])
}

/// `D(z) <= liminf D(x_n) + tol` with `D(x) = d(x, Tx)` and the liminf taken as
/// the minimum over the trailing window of the orbit.
pub fn check_orbital_lsc<S, M>(
    map: &M,
    space: &S,
    trace: &OrbitTrace<S::Point>,
    z: &S::Point,
    tol: f64,
) -> Result<Diagnostic, ContractionError>
where
    S: Suprametric,
    M: SelfMap<S::Point>,
{
    let liminf = trace_window(trace)?.iter().copied().fold(f64::INFINITY, f64::min);
    let dz = displacement_at(map, space, z)?;
    Ok(Diagnostic {
        holds: dz <= liminf + tol,
        vacuous: false,
        observed: dz,
        bound: liminf,
        detail: format!("D(z) = {dz} vs windowed liminf D(x_n) = {liminf:e}"),
    })
}

/// Condition (C;k): `D(z) <= k limsup D(x_n) + tol`.
pub fn check_condition_c<S, M>(
    map: &M,
    space: &S,
    trace: &OrbitTrace<S::Point>,
    z: &S::Point,
    k: f64,
    tol: f64,
) -> Result<Diagnostic, ContractionError>
where
    S: Suprametric,
    M: SelfMap<S::Point>,
{
    if !(k.is_finite() && k >= 0.0) {
        return Err(ContractionError::InvalidParameter(format!("k = {k} must be >= 0")));
    }
    let limsup = trace_window(trace)?.iter().copied().fold(0.0, f64::max);
    let dz = displacement_at(map, space, z)?;
    Ok(Diagnostic {
        holds: dz <= k * limsup + tol,
        vacuous: false,
        observed: dz,
        bound: k * limsup,
        detail: format!("D(z) = {dz} vs k * windowed limsup D(x_n) = {:e}", k * limsup),
    })
}

/// Points among `candidates` with `d(x, Tx) <= tol`.
pub fn fixed_points_among<S, M>(
    map: &M,
    space: &S,
    candidates: &[S::Point],
    tol: f64,
) -> Result<Vec<S::Point>, ContractionError>
where
    S: Suprametric,
    M: SelfMap<S::Point>,
{
    let mut out = Vec::new();
    for x in candidates {
        if displacement_at(map, space, x)? <= tol {
            out.push(x.clone());
        }
    }
    Ok(out)
}

/// First point whose image is outside the space.
pub fn first_escape<S, M>(map: &M, space: &S, points: &[S::Point]) -> Option<(S::Point, S::Point)>
where
    S: Suprametric,
    M: SelfMap<S::Point>,
{
    points.iter().find_map(|x| {
        let tx = map.apply(x);
        (!space.contains(&tx)).then(|| (x.clone(), tx))
    })
}

/// Every ordered pair of points of an `n`-point space.
pub fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect()
}

/// Cartesian product, `xs` outermost.
pub fn grid_pairs<P: Clone>(xs: &[P], ys: &[P]) -> Vec<(P, P)> {
    xs.iter()
        .flat_map(|x| ys.iter().map(move |y| (x.clone(), y.clone())))
        .collect()
}

/// `count` uniform random pairs on the interval, reproducible from `seed`.
pub fn sample_pairs(space: &IntervalSpace, count: usize, seed: u64) -> Vec<(f64, f64)> {
    let (a, b) = space.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (rng.gen_range(a..=b), rng.gen_range(a..=b)))
        .collect()
}
