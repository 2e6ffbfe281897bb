//! JSON file formats for spaces, maps, contraction specs and Fredholm
//! problems, plus conversion to and from the library types.
//!
//! ```json
//! {"points": ["x", "y"], "rho": 0, "d": [[0, 1], [1, 0]]}
//! {"interval": [0, 2], "form": "poly", "lambda": 1}
//! {"images": {"x": "y", "y": "y"}}
//! {"expr": "x/2", "overrides": [[0, 2]]}
//! {"kind": "ciric", "params": {"lambda": "1/3"}, "n_map": {"x": 2, "y": 2}}
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contraction::{ContractionError, ContractionSpec, ExprMap, FiniteMap, NMap};
use crate::fredholm::{FredholmError, FredholmProblem, Kernel, QuadratureRule, Term};
use crate::kexpr::{self, eval_constant, ConstantError, ParseError};
use crate::space::{FiniteSpace, IntervalForm, IntervalSpace, SpaceError, Suprametric};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Contraction(#[from] ContractionError),
    #[error(transparent)]
    Fredholm(#[from] FredholmError),
    #[error("expression `{src}`: {err}")]
    Expr { src: String, err: ParseError },
    #[error("parameter `{name}`: {err}")]
    Constant { name: String, err: ConstantError },
    #[error("{0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError::Invalid(msg.into()))
}

fn parse_expr(src: &str) -> Result<kexpr::Expr, FormatError> {
    kexpr::parse(src).map_err(|err| FormatError::Expr { src: src.to_string(), err })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteSpaceFile {
    pub points: Vec<String>,
    pub rho: f64,
    pub d: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalSpaceFile {
    pub interval: [f64; 2],
    /// `absolute`, `poly` or `exp`.
    pub form: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceFile {
    Finite(FiniteSpaceFile),
    Interval(IntervalSpaceFile),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadedSpace {
    Finite(FiniteSpace),
    Interval(IntervalSpace),
}

impl SpaceFile {
    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("space file serializes")
    }

    pub fn build(&self) -> Result<LoadedSpace, FormatError> {
        match self {
            SpaceFile::Finite(f) => {
                Ok(LoadedSpace::Finite(FiniteSpace::new(f.points.clone(), f.d.clone(), f.rho)?))
            }
            SpaceFile::Interval(f) => f.build().map(LoadedSpace::Interval),
        }
    }

    pub fn from_finite(space: &FiniteSpace) -> Self {
        SpaceFile::Finite(FiniteSpaceFile {
            points: space.labels().to_vec(),
            rho: space.rho(),
            d: space.matrix().to_vec(),
        })
    }

    pub fn from_interval(space: &IntervalSpace) -> Self {
        let (a, b) = space.bounds();
        let mut f = IntervalSpaceFile { interval: [a, b], form: String::new(), lambda: None, alpha: None, rho: None };
        match space.form() {
            IntervalForm::Absolute => {
                f.form = "absolute".into();
                f.rho = Some(space.rho());
            }
            IntervalForm::Poly { lambda } => {
                f.form = "poly".into();
                f.lambda = Some(lambda);
            }
            IntervalForm::Exponential { alpha } => {
                f.form = "exp".into();
                f.alpha = Some(alpha);
            }
        }
        SpaceFile::Interval(f)
    }
}

impl IntervalSpaceFile {
    fn build(&self) -> Result<IntervalSpace, FormatError> {
        let [a, b] = self.interval;
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| FormatError::Invalid(format!("form `{}` needs `{name}`", self.form)))
        };
        let space = match self.form.as_str() {
            "absolute" => return Ok(IntervalSpace::absolute(a, b, self.rho.unwrap_or(0.0))?),
            "poly" => IntervalSpace::poly(a, b, need(self.lambda, "lambda")?)?,
            "exp" => IntervalSpace::exponential(a, b, need(self.alpha, "alpha")?)?,
            other => return invalid(format!("unknown interval form `{other}`")),
        };
        if let Some(rho) = self.rho {
            if (rho - space.rho()).abs() > 1e-12 {
                return invalid(format!(
                    "form `{}` fixes rho = {}, file says {rho}",
                    self.form,
                    space.rho()
                ));
            }
        }
        Ok(space)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteMapFile {
    pub images: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExprMapFile {
    pub expr: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapFile {
    Finite(FiniteMapFile),
    Expr(ExprMapFile),
}

impl MapFile {
    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("map file serializes")
    }

    /// Every point must have exactly one image, named by label.
    pub fn build_finite(&self, space: &FiniteSpace) -> Result<FiniteMap, FormatError> {
        let MapFile::Finite(f) = self else {
            return invalid("a finite space needs an `images` map");
        };
        if let Some(unknown) = f.images.keys().find(|k| space.index(k).is_none()) {
            return invalid(format!("map names unknown point `{unknown}`"));
        }
        let images = space
            .labels()
            .iter()
            .map(|l| {
                let img = f
                    .images
                    .get(l)
                    .ok_or_else(|| FormatError::Invalid(format!("no image for point `{l}`")))?;
                space
                    .index(img)
                    .ok_or_else(|| FormatError::Invalid(format!("image `{img}` of `{l}` is not a point")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FiniteMap::new(images, space.len())?)
    }

    pub fn build_expr(&self) -> Result<ExprMap, FormatError> {
        let MapFile::Expr(f) = self else {
            return invalid("an interval space needs an `expr` map");
        };
        let expr = parse_expr(&f.expr)?;
        if expr.uses(kexpr::Var::T) {
            return invalid("map expressions may only use x");
        }
        Ok(f.overrides.iter().fold(ExprMap::new(expr), |m, [at, v]| m.with_override(*at, *v)))
    }

    pub fn from_finite(map: &FiniteMap, space: &FiniteSpace) -> Self {
        let images = map
            .images()
            .iter()
            .enumerate()
            .map(|(i, &j)| (space.label(i).to_string(), space.label(j).to_string()))
            .collect();
        MapFile::Finite(FiniteMapFile { images })
    }

    pub fn from_expr(map: &ExprMap) -> Self {
        MapFile::Expr(ExprMapFile {
            expr: map.expr.to_string(),
            overrides: map.overrides.iter().map(|&(a, v)| [a, v]).collect(),
        })
    }
}

/// A parameter: a number, a constant expression such as `"29/729"`, or a
/// list of either.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Num(f64),
    Expr(String),
    List(Vec<Param>),
}

impl Param {
    fn scalar(&self, name: &str) -> Result<f64, FormatError> {
        match self {
            Param::Num(v) => Ok(*v),
            Param::Expr(s) => {
                eval_constant(s).map_err(|err| FormatError::Constant { name: name.to_string(), err })
            }
            Param::List(_) => invalid(format!("parameter `{name}` must be a number")),
        }
    }

    fn list(&self, name: &str) -> Result<Vec<f64>, FormatError> {
        match self {
            Param::List(v) => v.iter().map(|p| p.scalar(name)).collect(),
            _ => invalid(format!("parameter `{name}` must be a list")),
        }
    }

    fn integer(&self, name: &str) -> Result<usize, FormatError> {
        let v = self.scalar(name)?;
        if v.fract() != 0.0 || v < 0.0 || !v.is_finite() {
            return invalid(format!("parameter `{name}` = {v} must be a nonnegative integer"));
        }
        Ok(v as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, Param>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_map: Option<BTreeMap<String, usize>>,
}

impl SpecFile {
    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec file serializes")
    }

    fn param(&self, name: &str) -> Result<&Param, FormatError> {
        self.params
            .get(name)
            .ok_or_else(|| FormatError::Invalid(format!("`{}` needs parameter `{name}`", self.kind)))
    }

    /// `n_map` keyed by label on a finite space; otherwise a constant
    /// `params.n`.
    fn n_map(&self, labels: Option<&[String]>) -> Result<NMap, FormatError> {
        match (&self.n_map, labels) {
            (Some(map), Some(labels)) => {
                if let Some(unknown) = map.keys().find(|k| !labels.contains(k)) {
                    return invalid(format!("n_map names unknown point `{unknown}`"));
                }
                let v = labels
                    .iter()
                    .map(|l| map.get(l).copied().ok_or_else(|| ContractionError::MissingOrder(l.clone())))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(NMap::PerPoint(v))
            }
            (Some(_), None) => invalid("n_map needs a finite space; use params.n on an interval"),
            (None, _) => Ok(NMap::Constant(self.param("n")?.integer("n")?)),
        }
    }

    /// `labels` is the point set of a finite space, `None` for an interval.
    pub fn build(&self, labels: Option<&[String]>) -> Result<ContractionSpec, FormatError> {
        let lambda = || self.param("lambda")?.scalar("lambda");
        let spec = match self.kind.as_str() {
            "banach" => ContractionSpec::Banach { alpha: self.param("alpha")?.scalar("alpha")? },
            "convex_m" => ContractionSpec::ConvexM { coeffs: self.param("coeffs")?.list("coeffs")? },
            "ciric" => ContractionSpec::Ciric { lambda: lambda()?, n_map: self.n_map(labels)? },
            "sehgal" => ContractionSpec::Sehgal { lambda: lambda()?, n_map: self.n_map(labels)? },
            "ciric_variant" => {
                ContractionSpec::CiricVariant { lambda: lambda()?, n: self.param("n")?.integer("n")? }
            }
            "fisher" => ContractionSpec::Fisher {
                lambda: lambda()?,
                p: self.param("p")?.integer("p")?,
                q: self.param("q")?.integer("q")?,
            },
            other => return invalid(format!("unknown contraction kind `{other}`")),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_spec(spec: &ContractionSpec, labels: Option<&[String]>) -> Self {
        let mut params = BTreeMap::new();
        let mut n_map = None;
        let mut put_n = |params: &mut BTreeMap<String, Param>, n: &NMap| match (n, labels) {
            (NMap::Constant(n), _) => {
                params.insert("n".into(), Param::Num(*n as f64));
            }
            (NMap::PerPoint(v), Some(labels)) => {
                n_map = Some(labels.iter().cloned().zip(v.iter().copied()).collect());
            }
            (NMap::PerPoint(v), None) => {
                n_map = Some(v.iter().enumerate().map(|(i, n)| (format!("p{i}"), *n)).collect());
            }
        };
        match spec {
            ContractionSpec::Banach { alpha } => {
                params.insert("alpha".into(), Param::Num(*alpha));
            }
            ContractionSpec::ConvexM { coeffs } => {
                params.insert("coeffs".into(), Param::List(coeffs.iter().map(|c| Param::Num(*c)).collect()));
            }
            ContractionSpec::Ciric { lambda, n_map: n } | ContractionSpec::Sehgal { lambda, n_map: n } => {
                params.insert("lambda".into(), Param::Num(*lambda));
                put_n(&mut params, n);
            }
            ContractionSpec::CiricVariant { lambda, n } => {
                params.insert("lambda".into(), Param::Num(*lambda));
                params.insert("n".into(), Param::Num(*n as f64));
            }
            ContractionSpec::Fisher { lambda, p, q } => {
                params.insert("lambda".into(), Param::Num(*lambda));
                params.insert("p".into(), Param::Num(*p as f64));
                params.insert("q".into(), Param::Num(*q as f64));
            }
        }
        SpecFile { kind: spec.kind().to_string(), params, n_map }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub a: f64,
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_grid: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_expr: Option<String>,
    pub grid_n: usize,
    /// `trapezoid` (default) or `simpson`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_supra: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem file serializes")
    }

    pub fn build(&self) -> Result<FredholmProblem, FormatError> {
        let kernel = match (&self.kernel_expr, &self.kernel_grid) {
            (Some(src), None) => Kernel::Expr(parse_expr(src)?),
            (None, Some(grid)) => Kernel::Grid(grid.clone()),
            _ => return invalid("give exactly one of `kernel_expr` and `kernel_grid`"),
        };
        let rule = match self.rule.as_deref() {
            None | Some("trapezoid") => QuadratureRule::Trapezoid,
            Some("simpson") => QuadratureRule::Simpson,
            Some(other) => return invalid(format!("unknown rule `{other}`")),
        };
        let mut p = FredholmProblem::new(self.a, self.b, kernel, self.grid_n)?
            .with_rule(rule)?
            .with_lambda(self.lambda_supra.unwrap_or(1.0))?;
        if let Some(src) = &self.g_expr {
            p = p.with_source(Term::Expr(parse_expr(src)?))?;
        }
        Ok(p)
    }
}
