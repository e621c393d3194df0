//! JSON problem descriptions.
//!
//! Scalars are JSON strings (`"3/4"`, `"-2"`, `"0.125"`) and, in `float64`
//! mode only, JSON numbers. Blocks are row-major arrays of rows.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::gaussborel::Tolerances;
use crate::linalg::{Block, Matrix, DEFAULT_PIVOT_TOL};
use crate::matpoly::{Support, SupportError};
use crate::moments::{
    diagonal_spec_expand, discrete_measure_source, discrete_spec_expand, functional_from_point_masses,
    hankel_source, lebesgue_moments, Functional, GramTable, MomentError, MomentSource, PointMass, UvarovSpec,
};
use crate::scalar::{Scalar, ScalarParseError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema_version {0}, expected {SCHEMA_VERSION}")]
    SchemaVersion(u32),
    #[error("unknown field {0:?}, expected \"rational\" or \"float64\"")]
    Field(String),
    #[error(transparent)]
    Scalar(#[from] ScalarParseError),
    #[error("{path}: {message}")]
    Shape { path: String, message: String },
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Support(#[from] SupportError),
    #[error("perturbation required")]
    PerturbationRequired,
}

fn shape(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Shape {
        path: path.into(),
        message: message.into(),
    }
}

pub type RawBlock = Vec<Vec<Value>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    pub field: String,
    pub p: usize,
    pub n_max: usize,
    pub source: SourceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationConfig>,
    /// Float mode: relative pivot threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Float mode: relative tolerance for identity checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_tolerance: Option<f64>,
    /// Highest moment kept for each perturbing functional; defaults to
    /// `2·n_max + 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree_bound: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    /// `G_{k,l} = moments[k + l]`.
    Hankel { moments: Vec<RawBlock> },
    /// `∫_a^b W x^{k+l} dx`.
    Lebesgue { a: Value, b: Value, weight: RawBlock },
    /// `Σ_i W_i t_i^{k+l}`.
    Discrete { points: Vec<Value>, weights: Vec<RawBlock> },
    /// Explicit table `G_{k,l} = table[k][l]`.
    Gram { table: Vec<Vec<RawBlock>> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationConfig {
    /// `functionals[j][m]` is `β^{(j)}_m`, the functional paired with the
    /// `m`-th derivative at `points[j]`.
    General {
        points: Vec<Value>,
        mults: Vec<usize>,
        functionals: Vec<Vec<FunctionalConfig>>,
    },
    /// `masses[j][m] = β^{(j)}_m` for total-derivative masses on the diagonal.
    Diagonal {
        points: Vec<Value>,
        mults: Vec<usize>,
        masses: Vec<Vec<RawBlock>>,
    },
    /// `couplings[(b,l)][(j,m)]`, rows over the `x` support and columns over
    /// the `y` support, both point-major.
    DiscreteX {
        x_points: Vec<Value>,
        x_mults: Vec<usize>,
        y_points: Vec<Value>,
        y_mults: Vec<usize>,
        couplings: Vec<Vec<RawBlock>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionalConfig {
    /// `M_r = ⟨I x^r, β⟩` for `r = 0, 1, …`; missing entries are zero.
    Moments { moments: Vec<RawBlock> },
    PointMasses { point_masses: Vec<PointMassConfig> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointMassConfig {
    pub point: Value,
    #[serde(default)]
    pub order: usize,
    pub block: RawBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Rational,
    Float64,
}

impl Config {
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let config: Config = serde_json::from_str(text)?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::SchemaVersion(config.schema_version));
        }
        config.field_kind()?;
        if config.p == 0 {
            return Err(shape("p", "block size must be positive"));
        }
        Ok(config)
    }

    pub fn field_kind(&self) -> Result<FieldKind, ConfigError> {
        match self.field.as_str() {
            "rational" => Ok(FieldKind::Rational),
            "float64" => Ok(FieldKind::Float64),
            other => Err(ConfigError::Field(other.to_string())),
        }
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound.unwrap_or(2 * self.n_max + 2)
    }

    pub fn tolerances(&self) -> Tolerances {
        let default = Tolerances::default();
        Tolerances {
            pivot: self.tolerance.unwrap_or(DEFAULT_PIVOT_TOL),
            check: self.check_tolerance.unwrap_or(default.check),
        }
    }

    /// Typed problem over the scalar field `T`.
    pub fn build<T: Scalar>(&self) -> Result<Problem<T>, ConfigError> {
        let p = self.p;
        let source = build_source::<T>(p, self.n_max, &self.source)?;
        let spec = self
            .perturbation
            .as_ref()
            .map(|pert| build_perturbation::<T>(p, self.degree_bound(), pert).map(Arc::new))
            .transpose()?;
        Ok(Problem {
            p,
            n_max: self.n_max,
            source,
            spec,
            tol: self.tolerances(),
        })
    }
}

/// A parsed, shape-checked configuration.
#[derive(Debug, Clone)]
pub struct Problem<T: Scalar> {
    pub p: usize,
    pub n_max: usize,
    pub source: Arc<dyn MomentSource<T>>,
    pub spec: Option<Arc<UvarovSpec<T>>>,
    pub tol: Tolerances,
}

impl<T: Scalar> Problem<T> {
    pub fn require_spec(&self) -> Result<Arc<UvarovSpec<T>>, ConfigError> {
        self.spec.clone().ok_or(ConfigError::PerturbationRequired)
    }
}

fn scalar<T: Scalar>(value: &Value) -> Result<T, ConfigError> {
    Ok(T::from_json(value)?)
}

fn scalars<T: Scalar>(values: &[Value]) -> Result<Vec<T>, ConfigError> {
    values.iter().map(scalar).collect()
}

fn block<T: Scalar>(p: usize, raw: &RawBlock, path: &str) -> Result<Block<T>, ConfigError> {
    if raw.len() != p || raw.iter().any(|row| row.len() != p) {
        return Err(shape(path, format!("expected a {p}x{p} block")));
    }
    let rows = raw
        .iter()
        .map(|row| scalars(row))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Matrix::from_rows(rows))
}

fn blocks<T: Scalar>(p: usize, raw: &[RawBlock], path: &str) -> Result<Vec<Block<T>>, ConfigError> {
    raw.iter()
        .enumerate()
        .map(|(i, b)| block(p, b, &format!("{path}[{i}]")))
        .collect()
}

fn support<T: Scalar>(points: &[Value], mults: &[usize], path: &str) -> Result<Support<T>, ConfigError> {
    if points.len() != mults.len() {
        return Err(shape(path, "points and mults differ in length"));
    }
    Ok(Support::new(scalars(points)?, mults.to_vec())?)
}

fn build_source<T: Scalar>(
    p: usize,
    n_max: usize,
    source: &SourceConfig,
) -> Result<Arc<dyn MomentSource<T>>, ConfigError> {
    Ok(match source {
        SourceConfig::Hankel { moments } => Arc::new(hankel_source(blocks(p, moments, "source.moments")?)?),
        SourceConfig::Lebesgue { a, b, weight } => {
            let w = block(p, weight, "source.weight")?;
            Arc::new(hankel_source(lebesgue_moments(
                &scalar::<T>(a)?,
                &scalar::<T>(b)?,
                &w,
                2 * n_max + 2,
            ))?)
        }
        SourceConfig::Discrete { points, weights } => Arc::new(discrete_measure_source(
            p,
            scalars(points)?,
            blocks(p, weights, "source.weights")?,
        )?),
        SourceConfig::Gram { table } => {
            let rows = table
                .iter()
                .enumerate()
                .map(|(k, row)| blocks(p, row, &format!("source.table[{k}]")))
                .collect::<Result<Vec<_>, _>>()?;
            Arc::new(GramTable::new(p, rows)?)
        }
    })
}

fn build_functional<T: Scalar>(
    p: usize,
    degree_bound: usize,
    raw: &FunctionalConfig,
    path: &str,
) -> Result<Functional<T>, ConfigError> {
    match raw {
        FunctionalConfig::Moments { moments } => {
            let mut table = blocks(p, moments, &format!("{path}.moments"))?;
            if table.len() < degree_bound + 1 {
                table.resize(degree_bound + 1, Matrix::zeros(p, p));
            }
            Ok(Functional::from_table(p, table)?)
        }
        FunctionalConfig::PointMasses { point_masses } => {
            let terms = point_masses
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    Ok(PointMass {
                        point: scalar(&t.point)?,
                        order: t.order,
                        block: block(p, &t.block, &format!("{path}.point_masses[{i}].block"))?,
                    })
                })
                .collect::<Result<Vec<_>, ConfigError>>()?;
            Ok(functional_from_point_masses(p, &terms, degree_bound)?)
        }
    }
}

fn build_perturbation<T: Scalar>(
    p: usize,
    degree_bound: usize,
    raw: &PerturbationConfig,
) -> Result<UvarovSpec<T>, ConfigError> {
    match raw {
        PerturbationConfig::General {
            points,
            mults,
            functionals,
        } => {
            let support = support::<T>(points, mults, "perturbation")?;
            let betas = functionals
                .iter()
                .enumerate()
                .map(|(j, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(m, f)| {
                            build_functional(p, degree_bound, f, &format!("perturbation.functionals[{j}][{m}]"))
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(UvarovSpec::general(p, support, betas)?)
        }
        PerturbationConfig::Diagonal { points, mults, masses } => {
            let raw = masses
                .iter()
                .enumerate()
                .map(|(j, row)| blocks(p, row, &format!("perturbation.masses[{j}]")))
                .collect::<Result<Vec<_>, _>>()?;
            if points.len() != mults.len() {
                return Err(shape("perturbation", "points and mults differ in length"));
            }
            Ok(diagonal_spec_expand(p, scalars(points)?, mults.clone(), raw, degree_bound)?)
        }
        PerturbationConfig::DiscreteX {
            x_points,
            x_mults,
            y_points,
            y_mults,
            couplings,
        } => {
            let sx = support::<T>(x_points, x_mults, "perturbation.x")?;
            let sy = support::<T>(y_points, y_mults, "perturbation.y")?;
            if couplings.len() != sx.total() || couplings.iter().any(|row| row.len() != sy.total()) {
                return Err(shape(
                    "perturbation.couplings",
                    format!("expected a {}x{} grid of blocks", sx.total(), sy.total()),
                ));
            }
            let mut grid = Matrix::zeros(sx.total() * p, sy.total() * p);
            for (r, row) in couplings.iter().enumerate() {
                for (c, raw_block) in row.iter().enumerate() {
                    grid.set_block(r, c, &block(p, raw_block, &format!("perturbation.couplings[{r}][{c}]"))?);
                }
            }
            Ok(discrete_spec_expand(p, sx, sy, grid, degree_bound)?)
        }
    }
}
