//! JSON classifier specs.
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "domain_box": [[-20, -20], [20, 20]],
//!   "labels": {
//!     "M": {"halfspace": {"a": [0, -1], "b": 0, "closed": false}},
//!     "N": {"polytope": {"halfspaces": [{"a": [0, 1], "b": 0}]}},
//!     "E": {"union": [{"halfspaces": [{"a": [1, 0], "b": 1}]}]},
//!     "F": {"analytic": "x2 > 10*sin(0.1*x1)"}
//!   },
//!   "refinement_set": {"polytope": {"halfspaces": [...]}},
//!   "probe_points": [[0, 0]]
//! }
//! ```
//!
//! `closed` defaults to `false`. `domain_box`, `refinement_set` and
//! `probe_points` are optional.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::classifier::{Classifier, ClassifierError, DomainBox};
use crate::dsl::Predicate;
use crate::geometry::{HPolytope, Halfspace, Point};
use crate::region::LabelRegion;
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error in `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl SpecError {
    /// The offending field path for schema errors.
    pub fn field(&self) -> Option<&str> {
        match self {
            SpecError::Schema { field, .. } => Some(field),
            _ => None,
        }
    }
}

fn schema(field: &str, message: impl Into<String>) -> SpecError {
    SpecError::Schema {
        field: field.to_string(),
        message: message.into(),
    }
}

pub fn load_spec<T: Real>(path: impl AsRef<Path>) -> Result<Classifier<T>, SpecError> {
    let text = std::fs::read_to_string(path)?;
    load_spec_str(&text)
}

pub fn save_spec<T: Real>(c: &Classifier<T>, path: impl AsRef<Path>) -> Result<(), SpecError> {
    std::fs::write(path, save_spec_string(c))?;
    Ok(())
}

pub fn load_spec_str<T: Real>(text: &str) -> Result<Classifier<T>, SpecError> {
    let v: Value = serde_json::from_str(text).map_err(|e| SpecError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    spec_from_value(&v)
}

pub fn save_spec_string<T: Real>(c: &Classifier<T>) -> String {
    let mut s = serde_json::to_string_pretty(&spec_to_value(c)).expect("spec serializes");
    s.push('\n');
    s
}

pub fn spec_from_value<T: Real>(v: &Value) -> Result<Classifier<T>, SpecError> {
    let obj = v
        .as_object()
        .ok_or_else(|| schema("<root>", "expected an object"))?;
    let dimension =
        obj.get("dimension")
            .ok_or_else(|| schema("dimension", "missing"))?
            .as_u64()
            .filter(|d| *d >= 1)
            .ok_or_else(|| schema("dimension", "expected a positive integer"))? as usize;

    let labels_v = obj
        .get("labels")
        .ok_or_else(|| schema("labels", "missing"))?
        .as_object()
        .ok_or_else(|| schema("labels", "expected an object"))?;
    let mut labels = BTreeMap::new();
    for (name, rv) in labels_v {
        let field = format!("labels.{name}");
        labels.insert(name.clone(), region_from_value(rv, dimension, &field)?);
    }
    let refinement = match obj.get("refinement_set") {
        None | Some(Value::Null) => None,
        Some(rv) => Some(region_from_value(rv, dimension, "refinement_set")?),
    };
    let mut c = Classifier::new(dimension, labels, refinement).map_err(|e| match e {
        ClassifierError::NoLabels => schema("labels", "at least one label is required"),
        e => schema("labels", e.to_string()),
    })?;

    if let Some(bv) = obj.get("domain_box").filter(|v| !v.is_null()) {
        let arr = bv
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| schema("domain_box", "expected [[lo...], [hi...]]"))?;
        let lo = reals(&arr[0], dimension, "domain_box[0]")?;
        let hi = reals(&arr[1], dimension, "domain_box[1]")?;
        let b = DomainBox::new(lo, hi).map_err(|e| schema("domain_box", e.to_string()))?;
        c = c
            .with_domain_box(b)
            .map_err(|e| schema("domain_box", e.to_string()))?;
    }
    if let Some(pv) = obj.get("probe_points").filter(|v| !v.is_null()) {
        let arr = pv
            .as_array()
            .ok_or_else(|| schema("probe_points", "expected a list of points"))?;
        let mut pts = Vec::with_capacity(arr.len());
        for (i, p) in arr.iter().enumerate() {
            let field = format!("probe_points[{i}]");
            let coords = reals(p, dimension, &field)?;
            pts.push(Point::new(coords).map_err(|e| schema(&field, e.to_string()))?);
        }
        c = c
            .with_probe_points(pts)
            .map_err(|e| schema("probe_points", e.to_string()))?;
    }
    for key in obj.keys() {
        if !matches!(
            key.as_str(),
            "dimension" | "domain_box" | "labels" | "refinement_set" | "probe_points"
        ) {
            return Err(schema(key, "unknown field"));
        }
    }
    Ok(c)
}

fn reals<T: Real>(v: &Value, dim: usize, field: &str) -> Result<Vec<T>, SpecError> {
    let arr = v
        .as_array()
        .ok_or_else(|| schema(field, "expected a list of numbers"))?;
    if arr.len() != dim {
        return Err(schema(
            field,
            format!("expected {dim} numbers, found {}", arr.len()),
        ));
    }
    arr.iter()
        .map(|x| {
            x.as_f64()
                .and_then(T::from_f64)
                .filter(|x| x.is_finite())
                .ok_or_else(|| schema(field, "expected a finite number"))
        })
        .collect()
}

fn halfspace_from_value<T: Real>(
    v: &Value,
    dim: usize,
    field: &str,
) -> Result<Halfspace<T>, SpecError> {
    let obj = v
        .as_object()
        .ok_or_else(|| schema(field, "expected {\"a\", \"b\", \"closed\"}"))?;
    let a = reals(
        obj.get("a")
            .ok_or_else(|| schema(&format!("{field}.a"), "missing"))?,
        dim,
        &format!("{field}.a"),
    )?;
    let b = obj
        .get("b")
        .and_then(Value::as_f64)
        .and_then(T::from_f64)
        .ok_or_else(|| schema(&format!("{field}.b"), "expected a number"))?;
    let closed = match obj.get("closed") {
        None => false,
        Some(c) => c
            .as_bool()
            .ok_or_else(|| schema(&format!("{field}.closed"), "expected a boolean"))?,
    };
    for key in obj.keys() {
        if !matches!(key.as_str(), "a" | "b" | "closed") {
            return Err(schema(&format!("{field}.{key}"), "unknown field"));
        }
    }
    Halfspace::new(a, b, closed).map_err(|e| schema(field, e.to_string()))
}

fn polytope_from_value<T: Real>(
    v: &Value,
    dim: usize,
    field: &str,
) -> Result<HPolytope<T>, SpecError> {
    let hs_field = format!("{field}.halfspaces");
    let arr = v
        .get("halfspaces")
        .ok_or_else(|| schema(&hs_field, "missing"))?
        .as_array()
        .ok_or_else(|| schema(&hs_field, "expected a list"))?;
    let hs = arr
        .iter()
        .enumerate()
        .map(|(i, h)| halfspace_from_value(h, dim, &format!("{hs_field}[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    HPolytope::new(hs).map_err(|e| schema(&hs_field, e.to_string()))
}

fn region_from_value<T: Real>(
    v: &Value,
    dim: usize,
    field: &str,
) -> Result<LabelRegion<T>, SpecError> {
    let obj = v.as_object().filter(|o| o.len() == 1).ok_or_else(|| {
        schema(
            field,
            "expected exactly one of halfspace, polytope, union, analytic",
        )
    })?;
    let (kind, body) = obj.iter().next().expect("one entry");
    let inner = format!("{field}.{kind}");
    match kind.as_str() {
        "halfspace" => Ok(LabelRegion::Halfspace(halfspace_from_value(
            body, dim, &inner,
        )?)),
        "polytope" => Ok(LabelRegion::Polytope(polytope_from_value(
            body, dim, &inner,
        )?)),
        "union" => {
            let arr = body
                .as_array()
                .filter(|a| !a.is_empty())
                .ok_or_else(|| schema(&inner, "expected a nonempty list of polytopes"))?;
            let pieces = arr
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let f = format!("{inner}[{i}]");
                    // Accept both `{"polytope": {...}}` and a bare polytope.
                    match p.get("polytope") {
                        Some(body) => polytope_from_value(body, dim, &format!("{f}.polytope")),
                        None => polytope_from_value(p, dim, &f),
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            LabelRegion::union(pieces).map_err(|e| schema(&inner, e.to_string()))
        }
        "analytic" => {
            let text = body
                .as_str()
                .ok_or_else(|| schema(&inner, "expected an expression string"))?;
            let p = Predicate::parse(text, dim).map_err(|e| schema(&inner, e.to_string()))?;
            Ok(LabelRegion::Analytic(p))
        }
        other => Err(schema(field, format!("unknown region kind `{other}`"))),
    }
}

fn num<T: Real>(x: T) -> Value {
    json!(x.as_f64())
}

fn halfspace_to_value<T: Real>(h: &Halfspace<T>) -> Value {
    json!({
        "a": h.normal.iter().map(|c| num(*c)).collect::<Vec<_>>(),
        "b": num(h.offset),
        "closed": h.closed,
    })
}

fn polytope_to_value<T: Real>(p: &HPolytope<T>) -> Value {
    json!({ "halfspaces": p.halfspaces.iter().map(halfspace_to_value).collect::<Vec<_>>() })
}

pub fn region_to_value<T: Real>(r: &LabelRegion<T>) -> Value {
    match r {
        LabelRegion::Halfspace(h) => json!({ "halfspace": halfspace_to_value(h) }),
        LabelRegion::Polytope(p) => json!({ "polytope": polytope_to_value(p) }),
        LabelRegion::Union(ps) => json!({
            "union": ps.iter().map(|p| json!({"polytope": polytope_to_value(p)})).collect::<Vec<_>>()
        }),
        LabelRegion::Analytic(p) => json!({ "analytic": p.source() }),
    }
}

pub fn spec_to_value<T: Real>(c: &Classifier<T>) -> Value {
    let mut obj = Map::new();
    obj.insert("dimension".into(), json!(c.dimension()));
    if let Some(b) = c.declared_domain_box() {
        let side = |v: &[T]| v.iter().map(|x| num(*x)).collect::<Vec<_>>();
        obj.insert("domain_box".into(), json!([side(&b.lo), side(&b.hi)]));
    }
    let labels: Map<String, Value> = c
        .labels()
        .iter()
        .map(|(k, r)| (k.clone(), region_to_value(r)))
        .collect();
    obj.insert("labels".into(), Value::Object(labels));
    if let Some(r) = c.refinement_set() {
        obj.insert("refinement_set".into(), region_to_value(r));
    }
    if !c.probe_points().is_empty() {
        let pts: Vec<Value> = c.probe_points().iter().map(|p| json!(p.to_f64())).collect();
        obj.insert("probe_points".into(), Value::Array(pts));
    }
    Value::Object(obj)
}
