//! Error types shared across the crate.
//!
//! Expression-level errors ([`crate::expr::ParseError`],
//! [`crate::expr::EvalError`]) live in the `expr` module; everything built on
//! top of expressions reports through the types here.

use thiserror::Error;

use crate::expr::EvalError;

/// Errors from constructing or manipulating a generalized Stäckel matrix and
/// the objects derived from it.
#[derive(Debug, Error)]
pub enum StackelError {
    /// A column that must be single-variable references a foreign coordinate.
    /// Rows and columns are reported 1-indexed.
    #[error("entry at row {row} column {col} must depend only on coordinate '{coord}' but references '{offending}'")]
    Structure {
        row: usize,
        col: usize,
        coord: String,
        offending: String,
    },
    /// Matrix dimensions are inconsistent with the coordinate list.
    #[error("matrix shape {rows}x{cols} does not match dimension {dim}")]
    Shape { rows: usize, cols: usize, dim: usize },
    /// The number of side-condition columns must leave at least one
    /// separation column.
    #[error("side-condition column count {sides} invalid for dimension {dim}")]
    InvalidSides { sides: usize, dim: usize },
    /// The matrix is numerically singular at a sample point.
    #[error("matrix singular at {point:?}: |det| = {det:.3e} below threshold {threshold:.3e}")]
    Singular {
        point: Vec<f64>,
        det: f64,
        threshold: f64,
    },
    /// Inversion succeeded but the round-trip residual exceeds what the
    /// condition number allows.
    #[error("inversion ill-conditioned at {point:?}: round-trip residual {residual:.3e} exceeds {bound:.3e}")]
    IllConditioned {
        point: Vec<f64>,
        residual: f64,
        bound: f64,
    },
    /// Symbolic inversion is only implemented through dimension 4.
    #[error("symbolic inversion unsupported for dimension {dim} (limit 4)")]
    SymbolicDimension { dim: usize },
    /// A metric coefficient vanishes identically on the sampled domain.
    #[error("metric coefficient {index} vanishes on the whole sampled domain; the matrix does not define an orthogonal metric")]
    DegenerateMetric { index: usize },
    /// A potential term depends on a coordinate other than its own.
    #[error("potential component {index} must depend only on coordinate '{coord}' but references '{offending}'")]
    ForeignPotential {
        index: usize,
        coord: String,
        offending: String,
    },
    /// Division by a metric coefficient that vanishes at the probe point.
    #[error("metric coefficient {index} vanishes at {point:?}; eigenvalue ratios undefined")]
    ZeroMetricCoefficient { index: usize, point: Vec<f64> },
    /// A rescaling function vanishes somewhere on the domain.
    #[error("rescaling function vanishes at {point:?}")]
    RescaleVanishes { point: Vec<f64> },
    /// Expression evaluation failed while sampling.
    #[error("evaluation failed at {point:?}: {source}")]
    Eval {
        point: Vec<f64>,
        #[source]
        source: EvalError,
    },
}

/// Errors from the separability checkers.
#[derive(Debug, Error)]
pub enum CheckError {
    #[error(transparent)]
    Stackel(#[from] StackelError),
    /// A least-squares fit became rank-deficient at a sample point.
    #[error("fit for '{what}' rank-deficient at {point:?}")]
    RankDeficient { what: String, point: Vec<f64> },
    /// Input data has the wrong shape for the requested check.
    #[error("check '{check}' requires {requirement}")]
    BadInput { check: String, requirement: String },
    /// Expression evaluation failed at a sample point.
    #[error("evaluation failed at {point:?}: {source}")]
    Eval {
        point: Vec<f64>,
        #[source]
        source: EvalError,
    },
    /// No base coordinate with nonvanishing eigenvalue ratio could be found.
    #[error("no usable base coordinate: every eigenvalue-ratio component vanishes somewhere on the sampled domain")]
    NoBaseCoordinate,
}

/// Errors from the separated-solution machinery.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Stackel(#[from] StackelError),
    /// An ODE coefficient is singular inside the integration interval.
    #[error("coefficient singular near x = {x}: {source}")]
    CoefficientSingularity {
        x: f64,
        #[source]
        source: EvalError,
    },
    /// Step size or interval is invalid.
    #[error("invalid integration setup: {reason}")]
    BadInterval { reason: String },
    /// Factor grids cannot be assembled into a product/sum solution.
    #[error("cannot assemble factors: {reason}")]
    Misassembled { reason: String },
    /// Expression evaluation failed at a sample point.
    #[error("evaluation failed at {point:?}: {source}")]
    Eval {
        point: Vec<f64>,
        #[source]
        source: EvalError,
    },
    /// The parameter vector has the wrong length.
    #[error("separation-constant vector has length {got}, expected {expected}")]
    BadLambda { got: usize, expected: usize },
}

/// Errors from the plain-text system-definition format.
#[derive(Debug, Error)]
pub enum SysDefError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: expression error: {source}")]
    Expr {
        line: usize,
        #[source]
        source: crate::expr::ParseError,
    },
    #[error("missing required section [{section}]")]
    MissingSection { section: String },
    #[error("missing required key '{key}' in section [{section}]")]
    MissingKey { section: String, key: String },
    #[error(transparent)]
    Stackel(#[from] StackelError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Errors from the gallery catalog.
#[derive(Debug, Error)]
pub enum GalleryError {
    #[error("unknown system '{name}'; run `gallery list` for the catalog")]
    Unknown { name: String },
    #[error("parameter '{name}' = {value} rejected: {reason}")]
    InvalidParameter {
        name: String,
        value: f64,
        reason: String,
    },
    #[error("system '{system}' has no parameter '{name}'")]
    UnknownParameter { system: String, name: String },
    /// A free-function profile references a symbol outside its allowance.
    #[error("profile '{name}' may reference only {{{allowed}}}, found '{offending}'")]
    InvalidProfile {
        name: String,
        allowed: String,
        offending: String,
    },
    #[error(transparent)]
    Stackel(#[from] StackelError),
}
