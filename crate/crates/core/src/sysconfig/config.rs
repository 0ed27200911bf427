//! TOML system configurations.
//!
//! A configuration names the state dimension, the field `f`, the operator `A`, an
//! optional Lyapunov pair and the analysis parameters. Numbers that depend on
//! `[params]` may be written as expression strings, e.g. `rate = "R/L"`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::expr::{parse_expression, Expr};
use crate::convex::{ConvexFunction, ConvexSet, CustomFunction, SubgradientPiece};
use crate::dynamics::{ReferenceSolution, SystemSpec, VectorField};
use crate::linalg::{matrix_from_rows, point, Point};
use crate::lyapunov::{LyapunovPair, ScalarFunction};
use crate::operators::MonotoneOperator;
use crate::setcalc::{GridSet, InvarianceOptions};
use crate::{Error, Result};

/// A literal number or an expression over the parameters.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Number {
    Value(f64),
    Expr(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldConfig {
    Zero,
    Affine {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        offset: Option<Vec<f64>>,
    },
    Exprs {
        exprs: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SetConfig {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Halfspace { normal: Vec<f64>, offset: f64 },
    Polyhedron { rows: Vec<Vec<f64>>, rhs: Vec<f64> },
    Point { at: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PieceConfig {
    #[serde(default)]
    pub guard: Option<String>,
    pub gradient: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedFunction {
    pub weight: Number,
    pub function: FunctionConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionConfig {
    Zero,
    Abs,
    L1 {
        weight: Number,
    },
    /// `scale/2 · ‖x‖²`
    HalfNormSquared {
        scale: Number,
    },
    Quadratic {
        hessian: Vec<Vec<f64>>,
        #[serde(default)]
        linear: Option<Vec<f64>>,
        #[serde(default)]
        constant: f64,
    },
    Indicator {
        set: SetConfig,
    },
    MaxAffine {
        slopes: Vec<Vec<f64>>,
        offsets: Vec<f64>,
    },
    Custom {
        value: String,
        #[serde(default)]
        smooth: bool,
        #[serde(default)]
        pieces: Vec<PieceConfig>,
        #[serde(default)]
        domain: Option<SetConfig>,
    },
    Sum {
        terms: Vec<WeightedFunction>,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedOperator {
    pub weight: Number,
    pub operator: OperatorConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorConfig {
    #[default]
    Zero,
    Subdifferential {
        function: FunctionConfig,
    },
    NormalCone {
        set: SetConfig,
    },
    Linear {
        matrix: Vec<Vec<f64>>,
    },
    Sum {
        terms: Vec<WeightedOperator>,
    },
}

/// `V` or `W`: an expression string (treated as C¹) or a convex function table.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ScalarConfig {
    Expr(String),
    Function(FunctionConfig),
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovConfig {
    pub v: ScalarConfig,
    pub w: ScalarConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReferenceConfig {
    /// `exp(Mt)x₀` for the affine field (requires `A = 0` and zero offset).
    Linear,
    DiodeCircuit { rate: Number },
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Grid box of `S`; defaults to `[-2, 2]^dim`.
    pub box_lo: Option<Vec<f64>>,
    pub box_hi: Option<Vec<f64>>,
    pub resolution: usize,
    /// Restrict `S` to the cells whose center satisfies `V ≤ s_sublevel`.
    pub s_sublevel: Option<f64>,
    pub t: f64,
    pub h: f64,
    pub t_burn: Option<f64>,
    /// ω clustering radius; defaults to ten cell widths.
    pub eps: Option<f64>,
    pub x0: Vec<Vec<f64>>,
    pub tol_w: f64,
    /// Zero-set threshold; defaults to the squared cell width.
    pub tau: Option<f64>,
    pub tol_decrease: f64,
    pub tol_slope: f64,
    pub prune_h: f64,
    pub prune_steps: usize,
    pub dilation: usize,
    pub check_s_invariance: bool,
    /// Trajectories leaving `[-guard, guard]^dim` count as unbounded.
    pub guard: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let inv = InvarianceOptions::default();
        AnalysisConfig {
            box_lo: None,
            box_hi: None,
            resolution: 400,
            s_sublevel: None,
            t: 10.0,
            h: 1e-3,
            t_burn: None,
            eps: None,
            x0: vec![],
            tol_w: 1e-9,
            tau: None,
            tol_decrease: 1e-3,
            tol_slope: 1e-3,
            prune_h: inv.h,
            prune_steps: inv.steps,
            dilation: inv.dilation,
            check_s_invariance: true,
            guard: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssumptionsConfig {
    /// Blanket assumption A1, declared by the author of the configuration.
    pub a1: bool,
}

impl Default for AssumptionsConfig {
    fn default() -> Self {
        AssumptionsConfig { a1: true }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub dim: usize,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub field: FieldConfig,
    #[serde(default)]
    pub operator: OperatorConfig,
    #[serde(default)]
    pub lyapunov: Option<LyapunovConfig>,
    #[serde(default)]
    pub reference: Option<ReferenceConfig>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub assumptions: AssumptionsConfig,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct LoadedSystem {
    pub config: SystemConfig,
    pub system: SystemSpec,
    pub pair: Option<LyapunovPair>,
    /// The analysis set `S`.
    pub s: GridSet,
}

impl LoadedSystem {
    pub fn v(&self) -> Result<&ScalarFunction> {
        self.pair
            .as_ref()
            .map(|p| &p.v)
            .ok_or_else(|| Error::config("lyapunov", "no Lyapunov pair configured"))
    }

    pub fn w(&self) -> Result<&ScalarFunction> {
        self.pair
            .as_ref()
            .map(|p| &p.w)
            .ok_or_else(|| Error::config("lyapunov", "no Lyapunov pair configured"))
    }

    pub fn analysis(&self) -> &AnalysisConfig {
        &self.config.analysis
    }

    pub fn invariance_options(&self) -> InvarianceOptions {
        let a = self.analysis();
        InvarianceOptions {
            h: a.prune_h,
            steps: a.prune_steps,
            dilation: a.dilation,
        }
    }

    pub fn eps(&self) -> f64 {
        self.analysis().eps.unwrap_or(10.0 * self.s.max_cell_width())
    }

    pub fn tau(&self) -> f64 {
        self.analysis().tau.unwrap_or(self.s.max_cell_width().powi(2))
    }

    pub fn t_burn(&self) -> f64 {
        self.analysis().t_burn.unwrap_or(self.analysis().t / 2.0)
    }

    /// Box guard used to flag unbounded trajectories.
    pub fn guard(&self) -> ConvexSet {
        let g = self.analysis().guard;
        ConvexSet::Box {
            lo: Point::from_element(self.system.dim, -g),
            hi: Point::from_element(self.system.dim, g),
        }
    }

    pub fn initial_conditions(&self) -> Vec<Point> {
        self.analysis().x0.iter().map(|x| point(x)).collect()
    }
}

/// Applies `key=value` overrides to a TOML document.
///
/// Keys are dotted paths (`analysis.resolution=100`); a bare key that is not a
/// top-level field names a parameter (`R=2` sets `params.R`). Values are parsed as
/// TOML and fall back to strings, so `lyapunov.v=x1^2/2` works unquoted.
pub fn apply_overrides(doc: &mut toml::Table, overrides: &[String]) -> Result<()> {
    const TOP: [&str; 10] = [
        "name",
        "description",
        "dim",
        "params",
        "field",
        "operator",
        "lyapunov",
        "reference",
        "analysis",
        "assumptions",
    ];
    for ov in overrides {
        let (key, raw) = ov
            .split_once('=')
            .ok_or_else(|| Error::config(ov.as_str(), "override must be key=value"))?;
        let key = key.trim();
        let mut path: Vec<&str> = key.split('.').collect();
        if path.len() == 1 && !TOP.contains(&path[0]) {
            path.insert(0, "params");
        }
        let value = parse_value(raw.trim());
        let mut table = &mut *doc;
        for part in &path[..path.len() - 1] {
            let entry = table
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            table = entry
                .as_table_mut()
                .ok_or_else(|| Error::config(key, format!("`{part}` is not a table")))?;
        }
        table.insert(path[path.len() - 1].to_string(), value);
    }
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Parses a configuration document with overrides, without building objects.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<SystemConfig> {
    let mut doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("<document>", e.message().to_string()))?;
    apply_overrides(&mut doc, overrides)?;
    serde_path_to_error::deserialize(toml::Value::Table(doc)).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "<document>".to_string() } else { path };
        Error::config(path, e.into_inner().message().to_string())
    })
}

/// Parses, validates and builds a system from configuration text.
pub fn load_system(text: &str, overrides: &[String]) -> Result<LoadedSystem> {
    let config = parse_config(text, overrides)?;
    build(config)
}

struct Ctx<'a> {
    dim: usize,
    params: &'a BTreeMap<String, f64>,
}

fn at(path: &str, e: Error) -> Error {
    match e {
        Error::Config { .. } => e,
        other => Error::config(path, other.to_string()),
    }
}

impl Ctx<'_> {
    fn expr(&self, path: &str, src: &str) -> Result<Expr> {
        parse_expression(src, self.dim, self.params).map_err(|e| at(path, e))
    }

    fn number(&self, path: &str, n: &Number) -> Result<f64> {
        match n {
            Number::Value(v) => Ok(*v),
            Number::Expr(s) => parse_expression(s, 0, self.params)
                .and_then(|e| e.eval(&[]))
                .map_err(|e| at(path, e)),
        }
    }

    fn vector(&self, path: &str, v: &[f64]) -> Result<Point> {
        if v.len() != self.dim {
            return Err(Error::config(path, format!("expected {} entries, found {}", self.dim, v.len())));
        }
        Ok(point(v))
    }

    fn matrix(&self, path: &str, rows: &[Vec<f64>]) -> Result<nalgebra::DMatrix<f64>> {
        let m = matrix_from_rows(rows).map_err(|e| at(path, e))?;
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::config(
                path,
                format!("expected a {0}×{0} matrix, found {1}×{2}", self.dim, m.nrows(), m.ncols()),
            ));
        }
        Ok(m)
    }

    fn set(&self, path: &str, s: &SetConfig) -> Result<ConvexSet> {
        let set = match s {
            SetConfig::Box { lo, hi } => ConvexSet::Box {
                lo: self.vector(&format!("{path}.lo"), lo)?,
                hi: self.vector(&format!("{path}.hi"), hi)?,
            },
            SetConfig::Ball { center, radius } => ConvexSet::Ball {
                center: self.vector(&format!("{path}.center"), center)?,
                radius: *radius,
            },
            SetConfig::Halfspace { normal, offset } => ConvexSet::Halfspace {
                normal: self.vector(&format!("{path}.normal"), normal)?,
                offset: *offset,
            },
            SetConfig::Polyhedron { rows, rhs } => ConvexSet::Polyhedron {
                rows: rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| self.vector(&format!("{path}.rows[{i}]"), r))
                    .collect::<Result<_>>()?,
                rhs: rhs.clone(),
            },
            SetConfig::Point { at } => ConvexSet::Point(self.vector(&format!("{path}.at"), at)?),
        };
        set.validated().map_err(|e| at(path, e))
    }

    fn function(&self, path: &str, f: &FunctionConfig) -> Result<ConvexFunction> {
        let fun = match f {
            FunctionConfig::Zero => ConvexFunction::zero(self.dim),
            FunctionConfig::Abs => ConvexFunction::L1 {
                dim: self.dim,
                weight: 1.0,
            },
            FunctionConfig::L1 { weight } => ConvexFunction::L1 {
                dim: self.dim,
                weight: self.number(&format!("{path}.weight"), weight)?,
            },
            FunctionConfig::HalfNormSquared { scale } => {
                ConvexFunction::half_norm_squared(self.dim, self.number(&format!("{path}.scale"), scale)?)
            }
            FunctionConfig::Quadratic {
                hessian,
                linear,
                constant,
            } => ConvexFunction::Quadratic {
                hessian: self.matrix(&format!("{path}.hessian"), hessian)?,
                linear: match linear {
                    Some(b) => self.vector(&format!("{path}.linear"), b)?,
                    None => Point::zeros(self.dim),
                },
                constant: *constant,
            },
            FunctionConfig::Indicator { set } => ConvexFunction::indicator(self.set(&format!("{path}.set"), set)?),
            FunctionConfig::MaxAffine { slopes, offsets } => ConvexFunction::MaxAffine {
                slopes: slopes
                    .iter()
                    .enumerate()
                    .map(|(i, r)| self.vector(&format!("{path}.slopes[{i}]"), r))
                    .collect::<Result<_>>()?,
                offsets: offsets.clone(),
            },
            FunctionConfig::Custom {
                value,
                smooth,
                pieces,
                domain,
            } => {
                let pieces = pieces
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let pp = format!("{path}.pieces[{i}]");
                        if p.gradient.len() != self.dim {
                            return Err(Error::config(
                                format!("{pp}.gradient"),
                                format!("expected {} components, found {}", self.dim, p.gradient.len()),
                            ));
                        }
                        Ok(SubgradientPiece {
                            guard: p.guard.as_deref().map(|g| self.expr(&format!("{pp}.guard"), g)).transpose()?,
                            gradient: p
                                .gradient
                                .iter()
                                .map(|g| self.expr(&format!("{pp}.gradient"), g))
                                .collect::<Result<_>>()?,
                        })
                    })
                    .collect::<Result<_>>()?;
                ConvexFunction::Custom(CustomFunction {
                    dim: self.dim,
                    value: self.expr(&format!("{path}.value"), value)?,
                    pieces,
                    smooth: *smooth,
                    domain: domain.as_ref().map(|d| self.set(&format!("{path}.domain"), d)).transpose()?,
                })
            }
            FunctionConfig::Sum { terms } => ConvexFunction::Sum(
                terms
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let tp = format!("{path}.terms[{i}]");
                        Ok((
                            self.number(&format!("{tp}.weight"), &t.weight)?,
                            self.function(&format!("{tp}.function"), &t.function)?,
                        ))
                    })
                    .collect::<Result<_>>()?,
            ),
        };
        fun.validated().map_err(|e| at(path, e))
    }

    fn operator(&self, path: &str, op: &OperatorConfig) -> Result<MonotoneOperator> {
        let built = match op {
            OperatorConfig::Zero => MonotoneOperator::Zero { dim: self.dim },
            OperatorConfig::Subdifferential { function } => {
                MonotoneOperator::Subdifferential(self.function(&format!("{path}.function"), function)?)
            }
            OperatorConfig::NormalCone { set } => MonotoneOperator::NormalCone(self.set(&format!("{path}.set"), set)?),
            OperatorConfig::Linear { matrix } => MonotoneOperator::Linear(self.matrix(&format!("{path}.matrix"), matrix)?),
            OperatorConfig::Sum { terms } => MonotoneOperator::ScaledSum(
                terms
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let tp = format!("{path}.terms[{i}]");
                        Ok((
                            self.number(&format!("{tp}.weight"), &t.weight)?,
                            self.operator(&format!("{tp}.operator"), &t.operator)?,
                        ))
                    })
                    .collect::<Result<_>>()?,
            ),
        };
        built.validated().map_err(|e| at(path, e))
    }

    fn field(&self, f: &FieldConfig) -> Result<VectorField> {
        Ok(match f {
            FieldConfig::Zero => VectorField::Zero { dim: self.dim },
            FieldConfig::Affine { matrix, offset } => VectorField::Affine {
                matrix: self.matrix("field.matrix", matrix)?,
                offset: match offset {
                    Some(b) => self.vector("field.offset", b)?,
                    None => Point::zeros(self.dim),
                },
            },
            FieldConfig::Exprs { exprs } => {
                if exprs.len() != self.dim {
                    return Err(Error::config(
                        "field.exprs",
                        format!("dimension mismatch: expected {} expressions, found {}", self.dim, exprs.len()),
                    ));
                }
                VectorField::Exprs(
                    exprs
                        .iter()
                        .enumerate()
                        .map(|(i, e)| self.expr(&format!("field.exprs[{i}]"), e))
                        .collect::<Result<_>>()?,
                )
            }
        })
    }

    fn scalar(&self, path: &str, s: &ScalarConfig) -> Result<ScalarFunction> {
        match s {
            ScalarConfig::Expr(src) => Ok(ScalarFunction::smooth(self.dim, self.expr(path, src)?)),
            ScalarConfig::Function(f) => Ok(ScalarFunction::Convex(self.function(path, f)?)),
        }
    }
}

fn build(config: SystemConfig) -> Result<LoadedSystem> {
    if config.dim == 0 {
        return Err(Error::config("dim", "dimension must be positive"));
    }
    let ctx = Ctx {
        dim: config.dim,
        params: &config.params,
    };
    let field = ctx.field(&config.field)?;
    let operator = ctx.operator("operator", &config.operator)?;
    if operator.dim() != field.dim() {
        return Err(Error::config(
            "operator",
            format!("dimension mismatch: operator has dim {}, field has dim {}", operator.dim(), field.dim()),
        ));
    }
    let mut system = SystemSpec::new(config.name.clone(), field, operator).map_err(|e| at("field", e))?;
    if let Some(r) = &config.reference {
        let reference = match r {
            ReferenceConfig::Linear => match (&system.field, system.operator.is_zero()) {
                (VectorField::Affine { matrix, offset }, true) if offset.norm() == 0.0 => {
                    ReferenceSolution::Linear(matrix.clone())
                }
                _ => return Err(Error::config("reference", "linear reference needs a linear field and A = 0")),
            },
            ReferenceConfig::DiodeCircuit { rate } => {
                if config.dim != 1 {
                    return Err(Error::config("reference", "diode-circuit reference is one-dimensional"));
                }
                ReferenceSolution::DiodeCircuit {
                    rate: ctx.number("reference.rate", rate)?,
                }
            }
        };
        system = system.with_reference(reference);
    }
    let pair = match &config.lyapunov {
        None => None,
        Some(l) => Some(
            LyapunovPair::new(ctx.scalar("lyapunov.v", &l.v)?, ctx.scalar("lyapunov.w", &l.w)?)
                .map_err(|e| at("lyapunov", e))?,
        ),
    };
    let a = &config.analysis;
    let lo = a.box_lo.clone().unwrap_or_else(|| vec![-2.0; config.dim]);
    let hi = a.box_hi.clone().unwrap_or_else(|| vec![2.0; config.dim]);
    ctx.vector("analysis.box_lo", &lo)?;
    ctx.vector("analysis.box_hi", &hi)?;
    for (i, x) in a.x0.iter().enumerate() {
        ctx.vector(&format!("analysis.x0[{i}]"), x)?;
    }
    if !(a.h > 0.0 && a.t > 0.0) {
        return Err(Error::config("analysis", "t and h must be positive"));
    }
    let mut s = GridSet::cube(&lo, &hi, a.resolution).map_err(|e| at("analysis.resolution", e))?;
    if let Some(c) = a.s_sublevel {
        let v = pair
            .as_ref()
            .map(|p| &p.v)
            .ok_or_else(|| Error::config("analysis.s_sublevel", "needs a Lyapunov function"))?;
        s = s.filter_centers(|x| v.value(x).map(|val| val <= c).unwrap_or(false));
    }
    Ok(LoadedSystem {
        config,
        system,
        pair,
        s,
    })
}
