//! Suprametric spaces, axiom verification and metric transforms.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default absolute tolerance for floating-point axiom checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Below this relaxation constant `d_transform` and friends treat `rho` as 0.
pub const RHO_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("distance matrix is not square: {rows} rows but row {row} has {len} entries")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("distance matrix has {rows} rows but {labels} labels were given")]
    LabelMismatch { rows: usize, labels: usize },
    #[error("distance d[{i}][{j}] = {value} is negative or not finite")]
    BadEntry { i: usize, j: usize, value: f64 },
    #[error("relaxation constant rho = {0} must be finite and nonnegative")]
    BadRho(f64),
    #[error("identity axiom fails at ({i}, {j})")]
    Identity { i: usize, j: usize },
    #[error("symmetry axiom fails at ({i}, {j})")]
    Symmetry { i: usize, j: usize },
    #[error("input is not a metric: {0}")]
    NotMetric(String),
    #[error("parameter {name} = {value} must be positive and finite")]
    BadParameter { name: &'static str, value: f64 },
    #[error("interval [{a}, {b}] is empty or not finite")]
    BadInterval { a: f64, b: f64 },
}

/// A space with a suprametric distance and its relaxation constant.
pub trait Suprametric {
    type Point: Clone + fmt::Debug;

    fn distance(&self, x: &Self::Point, y: &Self::Point) -> f64;

    fn rho(&self) -> f64;

    /// Whether `p` belongs to the space; maps that leave it are reported.
    fn contains(&self, _p: &Self::Point) -> bool {
        true
    }

    /// Position of `p` in an enumerated point set, if the space has one.
    fn index_of(&self, _p: &Self::Point) -> Option<usize> {
        None
    }

    /// Human-readable rendering of a point for reports and CSV output.
    fn describe(&self, p: &Self::Point) -> String;

    /// Rounds a point to the given resolution. Finite spaces return `p`.
    fn snap(&self, p: &Self::Point, _resolution: f64) -> Self::Point {
        p.clone()
    }
}

/// A finite suprametric space with a fully materialised distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteSpace {
    labels: Vec<String>,
    dist: Vec<Vec<f64>>,
    rho: f64,
}

/// One violated instance of the relaxed triangle inequality:
/// `d[i][j] > d[i][k] + d[k][j] + rho * d[i][k] * d[k][j] + tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleViolation {
    pub i: usize,
    pub k: usize,
    pub j: usize,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub identity_ok: bool,
    pub symmetry_ok: bool,
    pub supra_ok: bool,
    /// Ordered lexicographically by `(i, k, j)`.
    pub violations: Vec<TripleViolation>,
    /// Smallest rho for which the relaxed triangle inequality holds; `None`
    /// when identity or symmetry already fail.
    pub minimal_rho: Option<f64>,
    pub triples_checked: usize,
}

impl AxiomReport {
    pub fn all_ok(&self) -> bool {
        self.identity_ok && self.symmetry_ok && self.supra_ok
    }
}

impl FiniteSpace {
    pub fn new(labels: Vec<String>, dist: Vec<Vec<f64>>, rho: f64) -> Result<Self, SpaceError> {
        let rows = dist.len();
        if labels.len() != rows {
            return Err(SpaceError::LabelMismatch { rows, labels: labels.len() });
        }
        for (row, r) in dist.iter().enumerate() {
            if r.len() != rows {
                return Err(SpaceError::NotSquare { rows, row, len: r.len() });
            }
            for (j, &value) in r.iter().enumerate() {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(SpaceError::BadEntry { i: row, j, value });
                }
            }
        }
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(SpaceError::BadRho(rho));
        }
        Ok(FiniteSpace { labels, dist, rho })
    }

    /// Builds a space with labels `p0, p1, ...`.
    pub fn unlabeled(dist: Vec<Vec<f64>>, rho: f64) -> Result<Self, SpaceError> {
        let labels = (0..dist.len()).map(|i| format!("p{i}")).collect();
        Self::new(labels, dist, rho)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.dist
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self, SpaceError> {
        Self::new(self.labels.clone(), self.dist.clone(), rho)
    }

    fn identity_violation(&self) -> Option<(usize, usize)> {
        let n = self.len();
        for i in 0..n {
            for j in 0..n {
                let v = self.dist[i][j];
                if (i == j && v != 0.0) || (i != j && v <= 0.0) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    fn symmetry_violation(&self) -> Option<(usize, usize)> {
        let n = self.len();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.dist[i][j] != self.dist[j][i] {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Checks the three suprametric axioms; identity and symmetry exactly, the
    /// relaxed triangle inequality up to `tol` over every triple of distinct
    /// points.
    pub fn check_axioms(&self, tol: f64) -> AxiomReport {
        let n = self.len();
        let identity_ok = self.identity_violation().is_none();
        let symmetry_ok = self.symmetry_violation().is_none();
        let mut violations = Vec::new();
        let mut triples_checked = 0;
        for i in 0..n {
            for k in 0..n {
                if k == i {
                    continue;
                }
                for j in 0..n {
                    if j == i || j == k {
                        continue;
                    }
                    triples_checked += 1;
                    let (dik, dkj) = (self.dist[i][k], self.dist[k][j]);
                    let defect = self.dist[i][j] - dik - dkj - self.rho * dik * dkj;
                    if defect > tol {
                        violations.push(TripleViolation { i, k, j, defect });
                    }
                }
            }
        }
        let minimal_rho = if identity_ok && symmetry_ok {
            Some(self.rho_star())
        } else {
            None
        };
        AxiomReport {
            identity_ok,
            symmetry_ok,
            supra_ok: violations.is_empty(),
            violations,
            minimal_rho,
            triples_checked,
        }
    }

    fn rho_star(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0_f64;
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    if i == k || k == j || i == j {
                        continue;
                    }
                    let prod = self.dist[i][k] * self.dist[k][j];
                    if prod > 0.0 {
                        let r = (self.dist[i][j] - self.dist[i][k] - self.dist[k][j]) / prod;
                        if r > best {
                            best = r;
                        }
                    }
                }
            }
        }
        best
    }

    /// Smallest `rho >= 0` making the relaxed triangle inequality hold.
    /// The stored `rho` is ignored.
    pub fn minimal_rho(&self) -> Result<f64, SpaceError> {
        if let Some((i, j)) = self.identity_violation() {
            return Err(SpaceError::Identity { i, j });
        }
        if let Some((i, j)) = self.symmetry_violation() {
            return Err(SpaceError::Symmetry { i, j });
        }
        Ok(self.rho_star())
    }

    fn require_metric(&self) -> Result<(), SpaceError> {
        let report = self.with_rho(0.0)?.check_axioms(DEFAULT_TOL);
        if !report.all_ok() {
            let why = if !report.identity_ok {
                "identity fails".to_string()
            } else if !report.symmetry_ok {
                "symmetry fails".to_string()
            } else {
                let v = report.violations[0];
                format!(
                    "triangle inequality fails at ({}, {}, {})",
                    self.labels[v.i], self.labels[v.k], self.labels[v.j]
                )
            };
            return Err(SpaceError::NotMetric(why));
        }
        Ok(())
    }

    fn map_distances(&self, f: impl Fn(f64) -> f64) -> Vec<Vec<f64>> {
        self.dist
            .iter()
            .map(|row| row.iter().map(|&d| f(d)).collect())
            .collect()
    }

    /// `d -> d (d + lambda)`, suprametric with `rho = poly_rho(lambda)`.
    pub fn from_metric_poly(&self, lambda_supra: f64) -> Result<Self, SpaceError> {
        check_positive("lambda_supra", lambda_supra)?;
        self.require_metric()?;
        let dist = self.map_distances(|d| poly_transform(d, lambda_supra));
        Self::new(self.labels.clone(), dist, poly_rho(lambda_supra))
    }

    /// `d -> alpha (e^d - 1)`. The relaxation constant of the result is its
    /// computed minimal rho.
    pub fn from_metric_exp(&self, alpha_exp: f64) -> Result<Self, SpaceError> {
        check_positive("alpha_exp", alpha_exp)?;
        self.require_metric()?;
        let dist = self.map_distances(|d| exp_transform(d, alpha_exp));
        let mut out = Self::new(self.labels.clone(), dist, 0.0)?;
        out.rho = out.minimal_rho()?;
        Ok(out)
    }
}

impl Suprametric for FiniteSpace {
    type Point = usize;

    fn distance(&self, x: &usize, y: &usize) -> f64 {
        self.dist[*x][*y]
    }

    fn rho(&self) -> f64 {
        self.rho
    }

    fn contains(&self, p: &usize) -> bool {
        *p < self.len()
    }

    fn index_of(&self, p: &usize) -> Option<usize> {
        Some(*p)
    }

    fn describe(&self, p: &usize) -> String {
        self.labels
            .get(*p)
            .cloned()
            .unwrap_or_else(|| format!("#{p}"))
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), SpaceError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(SpaceError::BadParameter { name, value })
    }
}

pub fn poly_transform(d: f64, lambda_supra: f64) -> f64 {
    d * (d + lambda_supra)
}

/// Relaxation constant of `d (d + lambda)` over a metric `d`.
///
/// With `u <= a + b` the gap in the suprametric inequality is at least
/// `2ab (rho (a + lambda)(b + lambda) / 2 - 1)`, nonnegative for all `a, b`
/// iff `rho >= 2 / lambda^2`. When `lambda >= 1` the constant `2 / lambda` is
/// already enough; below 1 it fails on short collinear legs
/// (`lambda = 0.5`, `a = b = 0.1`: gap `-0.0056`), so `2 / lambda^2` is used.
pub fn poly_rho(lambda_supra: f64) -> f64 {
    if lambda_supra >= 1.0 {
        2.0 / lambda_supra
    } else {
        2.0 / (lambda_supra * lambda_supra)
    }
}

pub fn exp_transform(d: f64, alpha_exp: f64) -> f64 {
    alpha_exp * d.exp_m1()
}

/// `D = d / (1 + rho d)`, a metric whenever `d` is a suprametric with
/// constant `rho`.
pub fn d_transform(d_value: f64, rho: f64) -> f64 {
    if rho < RHO_EPS {
        d_value
    } else {
        d_value / (1.0 + rho * d_value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum IntervalForm {
    /// `|x - y|`
    Absolute,
    /// `|x - y| (|x - y| + lambda)`
    Poly { lambda: f64 },
    /// `alpha (e^{|x - y|} - 1)`
    Exponential { alpha: f64 },
}

/// A closed interval `[a, b]` with a distance evaluated on demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalSpace {
    a: f64,
    b: f64,
    form: IntervalForm,
    rho: f64,
}

impl IntervalSpace {
    /// `[a, b]` with `|x - y|`, declared as a suprametric with the given rho.
    pub fn absolute(a: f64, b: f64, rho: f64) -> Result<Self, SpaceError> {
        check_interval(a, b)?;
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(SpaceError::BadRho(rho));
        }
        Ok(IntervalSpace { a, b, form: IntervalForm::Absolute, rho })
    }

    pub fn poly(a: f64, b: f64, lambda_supra: f64) -> Result<Self, SpaceError> {
        Self::absolute(a, b, 0.0)?.from_metric_poly(lambda_supra)
    }

    /// `alpha (e^{|x-y|} - 1)` with `rho = 1 / alpha`, from
    /// `e^{s+t} - 1 = (e^s - 1) + (e^t - 1) + (e^s - 1)(e^t - 1)`.
    pub fn exponential(a: f64, b: f64, alpha_exp: f64) -> Result<Self, SpaceError> {
        check_interval(a, b)?;
        check_positive("alpha_exp", alpha_exp)?;
        Ok(IntervalSpace {
            a,
            b,
            form: IntervalForm::Exponential { alpha: alpha_exp },
            rho: 1.0 / alpha_exp,
        })
    }

    /// Only defined on the absolute (metric) form.
    pub fn from_metric_poly(&self, lambda_supra: f64) -> Result<Self, SpaceError> {
        check_positive("lambda_supra", lambda_supra)?;
        if self.form != IntervalForm::Absolute {
            return Err(SpaceError::NotMetric(format!(
                "interval form {:?} is not the absolute metric",
                self.form
            )));
        }
        Ok(IntervalSpace {
            a: self.a,
            b: self.b,
            form: IntervalForm::Poly { lambda: lambda_supra },
            rho: poly_rho(lambda_supra),
        })
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn form(&self) -> IntervalForm {
        self.form
    }

    /// `n` equally spaced points including both endpoints.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        linspace(self.a, self.b, n)
    }
}

fn check_interval(a: f64, b: f64) -> Result<(), SpaceError> {
    if a.is_finite() && b.is_finite() && a < b {
        Ok(())
    } else {
        Err(SpaceError::BadInterval { a, b })
    }
}

/// `n` equally spaced points on `[a, b]`; `a + (b - a) i / (n - 1)`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let last = (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { b } else { a + (b - a) * i as f64 / last })
                .collect()
        }
    }
}

impl Suprametric for IntervalSpace {
    type Point = f64;

    fn distance(&self, x: &f64, y: &f64) -> f64 {
        let u = (x - y).abs();
        match self.form {
            IntervalForm::Absolute => u,
            IntervalForm::Poly { lambda } => poly_transform(u, lambda),
            IntervalForm::Exponential { alpha } => exp_transform(u, alpha),
        }
    }

    fn rho(&self) -> f64 {
        self.rho
    }

    fn contains(&self, p: &f64) -> bool {
        p.is_finite() && *p >= self.a && *p <= self.b
    }

    fn describe(&self, p: &f64) -> String {
        format!("{p}")
    }

    fn snap(&self, p: &f64, resolution: f64) -> f64 {
        if !(resolution > 0.0) || !p.is_finite() {
            return *p;
        }
        let r = (p / resolution).round() * resolution;
        let r = if r == 0.0 { 0.0 } else { r };
        r.clamp(self.a, self.b)
    }
}
