//! JSON encoding of blocks, polynomials and check results.
//!
//! Rational entries are strings `"num/den"`; `f64` entries are numbers.
//! Polynomials are coefficient-block lists in ascending powers.

use serde_json::{json, Map, Value};

use crate::cdkernel::{ReproducingCheck, ReproducingReport};
use crate::config::ConfigError;
use crate::gaussborel::{BiorthogonalityReport, Relation};
use crate::linalg::{Block, Matrix};
use crate::matpoly::MatPoly;
use crate::scalar::Scalar;

pub fn block_json<T: Scalar>(block: &Block<T>) -> Value {
    Value::Array(
        (0..block.rows())
            .map(|i| Value::Array(block.row(i).iter().map(Scalar::to_json).collect()))
            .collect(),
    )
}

pub fn poly_json<T: Scalar>(poly: &MatPoly<T>) -> Value {
    Value::Array(poly.coeffs().iter().map(block_json).collect())
}

pub fn block_from_json<T: Scalar>(value: &Value) -> Result<Block<T>, ConfigError> {
    let bad = || ConfigError::Shape {
        path: "block".into(),
        message: "expected an array of equal-length rows".into(),
    };
    let rows = value.as_array().ok_or_else(bad)?;
    let parsed = rows
        .iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(bad)?
                .iter()
                .map(|v| T::from_json(v).map_err(ConfigError::from))
                .collect::<Result<Vec<T>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let cols = parsed.first().map_or(0, Vec::len);
    if parsed.iter().any(|r| r.len() != cols) {
        return Err(bad());
    }
    Ok(Matrix::from_rows(parsed))
}

pub fn poly_from_json<T: Scalar>(p: usize, value: &Value) -> Result<MatPoly<T>, ConfigError> {
    let coeffs = value
        .as_array()
        .ok_or_else(|| ConfigError::Shape {
            path: "polynomial".into(),
            message: "expected an array of blocks".into(),
        })?
        .iter()
        .map(block_from_json)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MatPoly::from_coeffs(p, coeffs))
}

pub fn relation_name(relation: Relation) -> &'static str {
    match relation {
        Relation::Biorthogonal => "biorthogonal",
        Relation::FirstFamily => "first_family",
        Relation::SecondFamily => "second_family",
    }
}

pub fn biorthogonality_json(report: &BiorthogonalityReport) -> Value {
    let failures: Vec<Value> = report
        .failures()
        .map(|c| {
            json!({
                "relation": relation_name(c.relation),
                "n": c.n,
                "m": c.m,
                "residual": c.residual,
            })
        })
        .collect();
    json!({
        "passed": report.passed(),
        "cells": report.cells.len(),
        "failures": failures,
    })
}

pub fn reproducing_json(reports: &[ReproducingReport]) -> Value {
    let cells: Vec<_> = reports.iter().flat_map(|r| &r.cells).collect();
    let failures: Vec<Value> = cells
        .iter()
        .filter(|c| !c.passed)
        .map(|c| {
            let (check, index) = match c.check {
                ReproducingCheck::Monomial { l } => ("monomial", l),
                ReproducingCheck::SecondFamilyCombination { trial } => ("second_family_combination", trial),
                ReproducingCheck::FirstFamilyCombination { trial } => ("first_family_combination", trial),
            };
            json!({ "n": c.n, "check": check, "index": index })
        })
        .collect();
    json!({
        "passed": failures.is_empty(),
        "cells": cells.len(),
        "failures": failures,
    })
}

/// Top-level object with the fields shared by every report.
pub fn envelope<T: Scalar>(command: &str, p: usize) -> Map<String, Value> {
    let mut map = Map::new();
    map.insert("schema_version".into(), json!(crate::config::SCHEMA_VERSION));
    map.insert("command".into(), json!(command));
    map.insert("field".into(), json!(T::FIELD_NAME));
    map.insert("p".into(), json!(p));
    map
}
