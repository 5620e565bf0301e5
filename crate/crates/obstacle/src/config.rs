//! Run configuration: one JSON document with expression-valued fields.
//!
//! Errors carry a JSON pointer to the offending field and, for expression
//! strings, the byte offset inside that string.

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use obstacle_core::expr::{parse, Env, Expr, ExprError, Var};
use obstacle_core::operators::rescale_operator;
use obstacle_core::parabolic::{LateralData, ParabolicProblem};
use obstacle_core::{DomainKind, DoubleObstacleProblem, EllipticOperator, Error, Grid, GridFunction, SolverParams, SymMatrix};
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    /// JSON pointer, e.g. `/problem/phi1`; empty for the whole document.
    pub pointer: String,
    pub message: String,
    /// Byte offset inside an expression string.
    pub offset: Option<usize>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.pointer.is_empty() { "/" } else { &self.pointer };
        match self.offset {
            Some(o) => write!(f, "{at} (byte {o}): {}", self.message),
            None => write!(f, "{at}: {}", self.message),
        }
    }
}

impl ConfigError {
    fn at(pointer: &str, message: impl Into<String>) -> Self {
        Self { pointer: pointer.to_string(), message: message.into(), offset: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub penalty: Option<PenaltyConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub dim: usize,
    pub n: usize,
    #[serde(default = "default_domain")]
    pub domain_kind: DomainKind,
    #[serde(default)]
    pub operator: OperatorSpec,
    pub phi1: String,
    pub phi2: String,
    #[serde(default = "zero")]
    pub g: String,
    /// Initial slice; parabolic runs only (defaults to `g` at `t_start`).
    #[serde(default)]
    pub u0: Option<String>,
    #[serde(default)]
    pub parabolic: Option<ParabolicConfig>,
}

fn default_domain() -> DomainKind {
    DomainKind::Box
}

fn zero() -> String {
    "0".into()
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    #[default]
    Laplace,
    PucciMinus {
        lambda: f64,
        #[serde(rename = "Lambda")]
        big_lambda: f64,
    },
    PucciPlus {
        lambda: f64,
        #[serde(rename = "Lambda")]
        big_lambda: f64,
    },
    /// `min_k tr(A_k M)`; matrices as rows (`[[a]]` in 1D, `[[a, b], [b, c]]` in 2D).
    Bellman {
        matrices: Vec<Vec<Vec<f64>>>,
        #[serde(default)]
        lambda: Option<f64>,
        #[serde(default, rename = "Lambda")]
        big_lambda: Option<f64>,
    },
    /// `M ↦ F(cM)/c`.
    Rescaled { base: Box<OperatorSpec>, factor: f64 },
}

impl OperatorSpec {
    pub fn build(&self) -> obstacle_core::Result<EllipticOperator> {
        match self {
            OperatorSpec::Laplace => Ok(EllipticOperator::laplace()),
            OperatorSpec::PucciMinus { lambda, big_lambda } => EllipticOperator::pucci_minus(*lambda, *big_lambda),
            OperatorSpec::PucciPlus { lambda, big_lambda } => EllipticOperator::pucci_plus(*lambda, *big_lambda),
            OperatorSpec::Bellman { matrices, lambda, big_lambda } => {
                let family = matrices.iter().map(|m| SymMatrix::from_rows(m)).collect::<Result<Vec<_>, _>>()?;
                let constants = match (lambda, big_lambda) {
                    (Some(a), Some(b)) => Some((*a, *b)),
                    (None, None) => None,
                    _ => return Err(Error::InvalidOperator("give both lambda and Lambda or neither".into())),
                };
                EllipticOperator::bellman(family, constants)
            }
            OperatorSpec::Rescaled { base, factor } => rescale_operator(&base.build()?, *factor),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParabolicConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyConfig {
    #[serde(default, rename = "C")]
    pub c: Option<f64>,
    pub eps_list: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ProbeSpec {
    /// Only `"auto"` is accepted.
    Keyword(String),
    Points(Vec<Vec<f64>>),
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec::Keyword("auto".into())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub probes: ProbeSpec,
    /// Largest growth radius; radii are `4h·√2^k` up to this value.
    pub r_max: f64,
    pub beta_min: f64,
    pub r_squared_min: f64,
    pub alphas: Vec<f64>,
    pub delta: f64,
    pub pair_budget: usize,
    /// Repeat the seminorm estimates on the grid with `2n - 1` nodes per axis.
    pub refine: bool,
    pub refinement_threshold: f64,
    /// Field to analyse instead of a solution (negative controls).
    pub planted: Option<String>,
    /// Anchor time for parabolic growth profiles (default `t_end - 0.5`).
    pub t0: Option<f64>,
    pub parabolic_beta_min: f64,
    pub weak_leps: Option<WeakLepsConfig>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            probes: ProbeSpec::default(),
            r_max: 0.2,
            beta_min: 1.8,
            r_squared_min: 0.99,
            alphas: vec![0.99],
            delta: 0.1,
            pair_budget: 100_000,
            refine: true,
            refinement_threshold: 1.25,
            planted: None,
            t0: None,
            parabolic_beta_min: 0.9,
            weak_leps: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeakLepsConfig {
    pub x0: Vec<f64>,
    /// Ball radius; the parabolic check uses `B_R × (t_start, t0)`.
    pub r: f64,
    pub levels: Vec<f64>,
    pub eps: f64,
    /// Defaults to `|B_1| 2^{-d}` (the mean-value form for ε = 1).
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub t0: f64,
}

impl Default for WeakLepsConfig {
    fn default() -> Self {
        Self { x0: vec![0.0, 0.0], r: 0.5, levels: vec![0.5, 0.9], eps: 1.0, c: None, t0: -0.25 }
    }
}

/// The problem a config describes, with everything validated.
#[derive(Debug, Clone)]
pub enum Problem {
    Elliptic(DoubleObstacleProblem),
    Parabolic(ParabolicProblem),
}

impl Problem {
    pub fn grid(&self) -> &Arc<Grid> {
        match self {
            Problem::Elliptic(p) => p.grid(),
            Problem::Parabolic(p) => p.grid(),
        }
    }
}

struct Field<'a> {
    pointer: &'static str,
    source: &'a str,
    allowed: &'a [Var],
}

fn expr_error(pointer: &str, e: ExprError) -> ConfigError {
    let offset = match &e {
        ExprError::Syntax { offset, .. } | ExprError::UnknownIdentifier { offset, .. } => Some(*offset),
        _ => None,
    };
    ConfigError { pointer: pointer.to_string(), message: e.to_string(), offset }
}

fn parse_field(f: &Field<'_>) -> Result<Expr, ConfigError> {
    let e = parse(f.source).map_err(|e| expr_error(f.pointer, e))?;
    if let Some(v) = e.variables().into_iter().find(|v| !f.allowed.contains(v)) {
        return Err(ConfigError::at(f.pointer, format!("variable `{v}` is not allowed here")));
    }
    Ok(e)
}

/// Samples `e` at every node (`data_point` for boundary data).
fn sample(grid: &Arc<Grid>, e: &Expr, pointer: &str, boundary: bool, t: Option<f64>) -> Result<GridFunction, ConfigError> {
    let mut values = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let p = if boundary { grid.data_point(k) } else { grid.point(k) };
        let env = Env { x: Some(p[0]), y: Some(p[1]), t };
        let v = e.eval(&env).map_err(|e| expr_error(pointer, e))?;
        if !v.is_finite() {
            return Err(ConfigError::at(pointer, format!("non-finite value at x = {:?}", &p[..grid.dim()])));
        }
        values.push(v);
    }
    GridFunction::new(grid.clone(), values).map_err(|e| ConfigError::at(pointer, e.to_string()))
}

fn problem_error(e: Error) -> ConfigError {
    match e {
        Error::ObstaclesNotSeparated { node, gap } => ConfigError::at(
            "/problem/phi2",
            format!("separation violated: phi1 < phi2 fails at node {node} (phi2 - phi1 = {gap})"),
        ),
        Error::IncompatibleBoundary { node } => {
            ConfigError::at("/problem/g", format!("boundary data must lie between phi1 and phi2 (node {node})"))
        }
        Error::DimensionMismatch { .. } => ConfigError::at("/problem/operator", e.to_string()),
        Error::BoundaryMismatch { .. } => ConfigError::at("/problem/u0", e.to_string()),
        other => ConfigError::at("/problem", other.to_string()),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let pointer = pointer_of(e.path());
            ConfigError { pointer, message: e.inner().to_string(), offset: None }
        })?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.problem;
        if !(p.dim == 1 || p.dim == 2) {
            return Err(ConfigError::at("/problem/dim", format!("dim must be 1 or 2, got {}", p.dim)));
        }
        if let Some(pen) = &self.penalty {
            if pen.eps_list.is_empty() {
                return Err(ConfigError::at("/penalty/eps_list", "eps_list is empty"));
            }
            if let Some(i) = pen.eps_list.iter().position(|e| !(*e > 0.0)) {
                return Err(ConfigError::at(&format!("/penalty/eps_list/{i}"), "epsilons must be positive"));
            }
            if let Some(i) = pen.eps_list.windows(2).position(|w| w[1] >= w[0]) {
                return Err(ConfigError::at(
                    &format!("/penalty/eps_list/{}", i + 1),
                    "eps_list must be strictly decreasing",
                ));
            }
            if pen.c.is_some_and(|c| !(c > 0.0)) {
                return Err(ConfigError::at("/penalty/C", "C must be positive"));
            }
        }
        let v = &self.verify;
        if let ProbeSpec::Keyword(k) = &v.probes {
            if k != "auto" {
                return Err(ConfigError::at("/verify/probes", format!("expected \"auto\" or a list of points, got {k:?}")));
            }
        }
        if let ProbeSpec::Points(points) = &v.probes {
            if let Some(i) = points.iter().position(|q| q.len() != p.dim) {
                return Err(ConfigError::at(&format!("/verify/probes/{i}"), format!("probe needs {} coordinates", p.dim)));
            }
        }
        if let Some(i) = v.alphas.iter().position(|a| !(*a > 0.0 && *a <= 1.0)) {
            return Err(ConfigError::at(&format!("/verify/alphas/{i}"), "alpha must lie in (0, 1]"));
        }
        if !(v.delta > 0.0 && v.delta < 1.0) {
            return Err(ConfigError::at("/verify/delta", "delta must lie in (0, 1)"));
        }
        if !(v.r_max > 0.0) {
            return Err(ConfigError::at("/verify/r_max", "r_max must be positive"));
        }
        self.solver.validate().map_err(|e| ConfigError::at("/solver", e.to_string()))?;
        // expressions and obstacles
        self.build_problem().map(|_| ())?;
        if let Some(src) = &v.planted {
            parse_field(&Field { pointer: "/verify/planted", source: src, allowed: self.space_vars() })?;
        }
        Ok(())
    }

    fn space_vars(&self) -> &'static [Var] {
        if self.problem.dim == 2 {
            &[Var::X, Var::Y]
        } else {
            &[Var::X]
        }
    }

    pub fn grid(&self) -> Result<Arc<Grid>, ConfigError> {
        self.grid_with(self.problem.n)
    }

    /// The config's domain with `n` nodes per axis.
    pub fn grid_with(&self, n: usize) -> Result<Arc<Grid>, ConfigError> {
        Grid::new(self.problem.dim, n, self.problem.domain_kind)
            .map(Arc::new)
            .map_err(|e| ConfigError::at("/problem/n", e.to_string()))
    }

    pub fn build_problem(&self) -> Result<Problem, ConfigError> {
        self.build_problem_with(self.problem.n)
    }

    /// Builds the problem on the grid with `n` nodes per axis.
    pub fn build_problem_with(&self, n: usize) -> Result<Problem, ConfigError> {
        let p = &self.problem;
        let grid = self.grid_with(n)?;
        let space = self.space_vars();
        let space_time: &[Var] = if p.dim == 2 { &[Var::X, Var::Y, Var::T] } else { &[Var::X, Var::T] };
        let operator = p.operator.build().map_err(|e| ConfigError::at("/problem/operator", e.to_string()))?;
        let phi1 = parse_field(&Field { pointer: "/problem/phi1", source: &p.phi1, allowed: space })?;
        let phi2 = parse_field(&Field { pointer: "/problem/phi2", source: &p.phi2, allowed: space })?;
        let lower = sample(&grid, &phi1, "/problem/phi1", false, None)?;
        let upper = sample(&grid, &phi2, "/problem/phi2", false, None)?;
        match &p.parabolic {
            None => {
                if p.u0.is_some() {
                    return Err(ConfigError::at("/problem/u0", "u0 needs a parabolic block"));
                }
                let g = parse_field(&Field { pointer: "/problem/g", source: &p.g, allowed: space })?;
                let boundary = sample(&grid, &g, "/problem/g", true, None)?;
                DoubleObstacleProblem::new(operator, lower, upper, boundary)
                    .map(Problem::Elliptic)
                    .map_err(problem_error)
            }
            Some(par) => {
                let g = parse_field(&Field { pointer: "/problem/g", source: &p.g, allowed: space_time })?;
                let initial = match &p.u0 {
                    Some(src) => {
                        let e = parse_field(&Field { pointer: "/problem/u0", source: src, allowed: space })?;
                        let mut u0 = sample(&grid, &e, "/problem/u0", false, None)?.into_values();
                        // boundary values come from g at t_start
                        let g0 = sample(&grid, &g, "/problem/g", true, Some(par.t_start))?;
                        for k in grid.boundary() {
                            u0[k] = g0.value(k);
                        }
                        GridFunction::new(grid.clone(), u0).map_err(|e| ConfigError::at("/problem/u0", e.to_string()))?
                    }
                    None => sample(&grid, &g, "/problem/g", true, Some(par.t_start))?,
                };
                ParabolicProblem::new(
                    operator,
                    lower,
                    upper,
                    LateralData::Expr(g),
                    initial,
                    (par.t_start, par.t_end),
                    par.dt,
                )
                .map(Problem::Parabolic)
                .map_err(|e| match e {
                    Error::InvalidArgument(m) => ConfigError::at("/problem/parabolic", m),
                    other => problem_error(other),
                })
            }
        }
    }

    /// The planted field on the grid with `n` nodes per axis, if configured.
    pub fn planted_with(&self, n: usize) -> Result<Option<GridFunction>, ConfigError> {
        let Some(src) = &self.verify.planted else {
            return Ok(None);
        };
        let e = parse_field(&Field { pointer: "/verify/planted", source: src, allowed: self.space_vars() })?;
        sample(&self.grid_with(n)?, &e, "/verify/planted", false, None).map(Some)
    }
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => {}
        }
    }
    out
}
