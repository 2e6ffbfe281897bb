//! Picard iteration with a-priori step bounds and Cauchy tail estimates.
//!
//! For a convex contraction of order `m` with `alpha = sum a_i < 1`, the
//! successive displacements of every orbit obey
//! `d(x_n, x_{n+1}) <= alpha^floor(n/m) * mu` where `mu` is the sum of the first
//! `m` displacements, and partial sums `sigma` of displacements control the
//! distance between iterates through `d(x_n, x_{n+p}) <= (e^{rho sigma} - 1) / rho`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::contraction::SelfMap;
use crate::space::{Suprametric, RHO_EPS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PicardError {
    #[error("start point {0} is outside the space")]
    BadStart(String),
    #[error("map leaves the domain at step {step}: T({from}) = {image}")]
    LeftDomain { step: usize, from: String, image: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("trace has {have} displacements but {need} are required")]
    TraceTooShort { have: usize, need: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingCriteria {
    pub max_iters: usize,
    /// Stop once `d(x_n, x_{n+1}) <= displacement_tol`.
    pub displacement_tol: f64,
    /// Stop once the a-priori Cauchy tail bound drops to this value. Needs a
    /// [`ConvexRate`]; 0 disables it.
    pub tail_bound_tol: f64,
}

impl Default for StoppingCriteria {
    fn default() -> Self {
        StoppingCriteria { max_iters: 1000, displacement_tol: 1e-12, tail_bound_tol: 0.0 }
    }
}

impl StoppingCriteria {
    pub fn validate(&self) -> Result<(), PicardError> {
        if self.max_iters == 0 {
            return Err(PicardError::InvalidParameter("max_iters must be positive".into()));
        }
        for (name, v) in [("displacement_tol", self.displacement_tol), ("tail_bound_tol", self.tail_bound_tol)] {
            if !(v >= 0.0) {
                return Err(PicardError::InvalidParameter(format!("{name} = {v} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// Order and rate of an assumed convex contraction, used for bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexRate {
    pub m: usize,
    pub alpha: f64,
}

impl ConvexRate {
    pub fn new(m: usize, alpha: f64) -> Result<Self, PicardError> {
        if m == 0 {
            return Err(PicardError::InvalidParameter("m must be >= 1".into()));
        }
        if !(alpha.is_finite() && (0.0..1.0).contains(&alpha)) {
            return Err(PicardError::InvalidParameter(format!("alpha = {alpha} must lie in [0, 1)")));
        }
        Ok(ConvexRate { m, alpha })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Displacement,
    TailBound,
    MaxIters,
    /// A displacement was not finite.
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitTrace<P> {
    /// `points[n + 1] = T(points[n])`.
    pub points: Vec<P>,
    /// `displacements[n] = d(points[n], points[n + 1])`.
    pub displacements: Vec<f64>,
    /// `cum_tail[n] = sum_{k >= n} displacements[k]`.
    pub cum_tail: Vec<f64>,
    /// A-priori bounds aligned with `displacements`; empty unless a rate was
    /// supplied, `None` for `n < m`.
    pub bounds: Vec<Option<f64>>,
    pub converged: bool,
    pub stop: StopReason,
    /// `d(x, Tx)` at the final point.
    pub residual: f64,
}

impl<P> OrbitTrace<P> {
    pub fn final_point(&self) -> &P {
        self.points.last().expect("trace has at least one point")
    }

    pub fn steps(&self) -> usize {
        self.displacements.len()
    }

    /// Whether the orbit landed exactly on a fixed point.
    pub fn reached_fixed_point(&self) -> bool {
        self.displacements.last() == Some(&0.0)
    }

    /// `d(x_n, x_{n+1})`, extended by 0 past an exact fixed point.
    pub fn displacement(&self, n: usize) -> Option<f64> {
        match self.displacements.get(n) {
            Some(&d) => Some(d),
            None if self.reached_fixed_point() => Some(0.0),
            None => None,
        }
    }

    /// Comma-separated export: `n,point,displacement,bound,tail`.
    pub fn to_csv(&self, describe: impl Fn(&P) -> String) -> String {
        let mut out = String::from("n,point,displacement,bound,tail\n");
        for (n, d) in self.displacements.iter().enumerate() {
            let bound = match self.bounds.get(n) {
                Some(Some(b)) => format!("{b}"),
                _ => String::new(),
            };
            let _ = writeln!(out, "{n},{},{d},{bound},{}", describe(&self.points[n]), self.cum_tail[n]);
        }
        out
    }
}

fn suffix_sums(d: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; d.len()];
    let mut acc = 0.0;
    for (i, v) in d.iter().enumerate().rev() {
        acc += v;
        out[i] = acc;
    }
    out
}

/// Runs `x_{n+1} = T x_n` from `x0` until a stopping criterion fires.
pub fn iterate<S, M>(
    map: &M,
    space: &S,
    x0: S::Point,
    stop: &StoppingCriteria,
    rate: Option<ConvexRate>,
) -> Result<OrbitTrace<S::Point>, PicardError>
where
    S: Suprametric,
    M: SelfMap<S::Point>,
{
    stop.validate()?;
    if !space.contains(&x0) {
        return Err(PicardError::BadStart(space.describe(&x0)));
    }
    let rho = space.rho();
    let mut points = vec![x0];
    let mut displacements = Vec::new();
    let mut bounds = Vec::new();
    let mut mu = 0.0;
    let mut reason = StopReason::MaxIters;

    for step in 0..stop.max_iters {
        let current = points.last().expect("nonempty");
        let next = map.apply(current);
        if !space.contains(&next) {
            return Err(PicardError::LeftDomain {
                step,
                from: space.describe(current),
                image: space.describe(&next),
            });
        }
        let d = space.distance(current, &next);
        points.push(next);
        displacements.push(d);
        if !d.is_finite() {
            reason = StopReason::Diverged;
            break;
        }
        if let Some(r) = rate {
            if step < r.m {
                mu += d;
                bounds.push(None);
            } else {
                bounds.push(Some(apriori_step_bound(step, r.m, r.alpha, mu)));
            }
        }
        if d <= stop.displacement_tol {
            reason = StopReason::Displacement;
            break;
        }
        if let Some(r) = rate {
            let n_done = step + 1;
            if stop.tail_bound_tol > 0.0 && n_done >= r.m {
                let tail = cauchy_tail_bound(apriori_tail_sum(n_done, r.m, r.alpha, mu), rho);
                if tail <= stop.tail_bound_tol {
                    reason = StopReason::TailBound;
                    break;
                }
            }
        }
    }

    let last = points.last().expect("nonempty");
    let after = map.apply(last);
    let residual = if space.contains(&after) { space.distance(last, &after) } else { f64::INFINITY };
    Ok(OrbitTrace {
        cum_tail: suffix_sums(&displacements),
        points,
        displacements,
        bounds,
        converged: matches!(reason, StopReason::Displacement | StopReason::TailBound),
        stop: reason,
        residual,
    })
}

/// `mu = sum_{i < m} d(x_i, x_{i+1})`.
pub fn mu_initial<P>(trace: &OrbitTrace<P>, m: usize) -> Result<f64, PicardError> {
    if m == 0 {
        return Err(PicardError::InvalidParameter("m must be >= 1".into()));
    }
    (0..m)
        .map(|i| {
            trace
                .displacement(i)
                .ok_or(PicardError::TraceTooShort { have: trace.steps(), need: m })
        })
        .sum()
}

/// `alpha^floor(n/m) * mu`.
pub fn apriori_step_bound(n: usize, m: usize, alpha: f64, mu: f64) -> f64 {
    alpha.powf((n / m) as f64) * mu
}

/// `sum_{k >= n} alpha^floor(k/m) * mu` in closed form: the partial block
/// contributes `(m - r) alpha^q` and each later block `m alpha^{q+j}`, so the
/// total is `mu alpha^q ((m - r) + m alpha / (1 - alpha))` with `n = q m + r`.
pub fn apriori_tail_sum(n: usize, m: usize, alpha: f64, mu: f64) -> f64 {
    let (q, r) = (n / m, n % m);
    let mf = m as f64;
    let head = alpha.powf(q as f64);
    mu * head * ((mf - r as f64) + mf * alpha / (1.0 - alpha))
}

/// `(e^{rho sigma} - 1) / rho`, equal to `sigma` for `rho < 1e-12`.
pub fn cauchy_tail_bound(sigma: f64, rho: f64) -> f64 {
    if rho < RHO_EPS {
        sigma
    } else {
        (rho * sigma).exp_m1() / rho
    }
}

/// Smallest `N` with `cauchy_tail_bound(sum_{k >= N} alpha^floor(k/m) mu, rho) < eps`.
pub fn iterations_for_tolerance(eps: f64, alpha: f64, mu: f64, m: usize, rho: f64) -> Result<usize, PicardError> {
    if !(eps > 0.0) {
        return Err(PicardError::InvalidParameter(format!("eps = {eps} must be positive")));
    }
    ConvexRate::new(m, alpha)?;
    if !(mu >= 0.0 && mu.is_finite()) || !(rho >= 0.0 && rho.is_finite()) {
        return Err(PicardError::InvalidParameter("mu and rho must be finite and >= 0".into()));
    }
    let below = |n: usize| cauchy_tail_bound(apriori_tail_sum(n, m, alpha, mu), rho) < eps;
    if below(0) {
        return Ok(0);
    }
    // Start from a block index that cannot overshoot: any N satisfying the
    // bound has mu alpha^q (1 + m alpha/(1-alpha)) < target.
    let mut start = 0usize;
    if alpha > 0.0 {
        let target = if rho < RHO_EPS { eps } else { (rho * eps).ln_1p() / rho };
        let c = mu * (1.0 + m as f64 * alpha / (1.0 - alpha));
        let q = ((target / c).ln() / alpha.ln()).floor();
        if q.is_finite() && q > 1.0 {
            start = (q as usize - 1) * m;
        }
    }
    let mut n = start;
    while !below(n) {
        n += 1;
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundViolation {
    pub n: usize,
    pub displacement: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceBoundReport {
    pub mu: f64,
    pub checked: usize,
    pub violations: Vec<BoundViolation>,
}

/// Checks `displacements[n] <= alpha^floor(n/m) mu + tol` for every `n >= m`.
pub fn verify_trace_bounds<P>(trace: &OrbitTrace<P>, m: usize, alpha: f64, tol: f64) -> Result<TraceBoundReport, PicardError> {
    ConvexRate::new(m, alpha)?;
    let mu = mu_initial(trace, m)?;
    let mut violations = Vec::new();
    let mut checked = 0;
    for (n, &d) in trace.displacements.iter().enumerate().skip(m) {
        checked += 1;
        let bound = apriori_step_bound(n, m, alpha, mu);
        if d > bound + tol {
            violations.push(BoundViolation { n, displacement: d, bound });
        }
    }
    Ok(TraceBoundReport { mu, checked, violations })
}

/// `C = C0 (1 + rho C0) / (1 - lambda)`.
pub fn ciric_orbit_bound(c0: f64, rho: f64, lambda: f64) -> f64 {
    c0 * (1.0 + rho * c0) / (1.0 - lambda)
}

/// `lambda' = lambda (1 + rho C) / (1 + rho lambda C)`, the Ciric constant in
/// the transformed metric `d / (1 + rho d)`.
pub fn transformed_factor(lambda: f64, rho: f64, c: f64) -> f64 {
    lambda * (1.0 + rho * c) / (1.0 + rho * lambda * c)
}

/// Verdict on whether the end of a converged orbit is a fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitCheck<P> {
    pub candidate: P,
    /// `d(z, Tz)` at the snapped candidate.
    pub candidate_residual: f64,
    pub is_fixed_point: bool,
}

/// Snaps the final point to `resolution` and tests `d(z, Tz) <= resolution`.
/// Catches maps that are discontinuous at the limit, where the residual of
/// the last iterate is tiny but the limit itself is not fixed.
pub fn limit_check<S, M>(map: &M, space: &S, trace: &OrbitTrace<S::Point>, resolution: f64) -> LimitCheck<S::Point>
where
    S: Suprametric,
    M: SelfMap<S::Point>,
{
    let candidate = space.snap(trace.final_point(), resolution);
    let image = map.apply(&candidate);
    let candidate_residual = if space.contains(&image) {
        space.distance(&candidate, &image)
    } else {
        f64::INFINITY
    };
    LimitCheck { is_fixed_point: candidate_residual <= resolution, candidate, candidate_residual }
}
