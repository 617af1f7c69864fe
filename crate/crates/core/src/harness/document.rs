//! JSON curve documents.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::curves::FramedCurve;
use crate::error::{Error, Result};
use crate::rotations::UnitQuaternion;

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub family: String,
    pub parameters: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveDocument {
    pub format_version: String,
    pub grid: Vec<f64>,
    pub lifts: Vec<[f64; 4]>,
    pub v: Vec<f64>,
    pub v_hat: Vec<f64>,
    pub metadata: Metadata,
}

impl CurveDocument {
    pub fn new(curve: &FramedCurve, metadata: Metadata) -> Self {
        Self {
            format_version: FORMAT_VERSION.into(),
            grid: curve.grid.clone(),
            lifts: curve.lifts.iter().map(|q| q.as_array()).collect(),
            v: curve.v.clone(),
            v_hat: curve.v_hat.clone(),
            metadata,
        }
    }

    pub fn to_curve(&self) -> FramedCurve {
        FramedCurve {
            grid: self.grid.clone(),
            lifts: self.lifts.iter().map(|q| UnitQuaternion::from_parts(q[0], q[1], q[2], q[3])).collect(),
            v: self.v.clone(),
            v_hat: self.v_hat.clone(),
        }
    }
}

fn format_error(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Format { location: location.into(), message: message.into() }
}

/// Canonical UTF-8 JSON with shortest round-trip reals.
pub fn serialize(curve: &FramedCurve, metadata: &Metadata) -> Result<Vec<u8>> {
    let reals = curve.grid.iter().chain(&curve.v).chain(&curve.v_hat).chain(curve.lifts.iter().flat_map(|q| [&q.w, &q.x, &q.y, &q.z]));
    if reals.into_iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("curve holds non-finite values".into()));
    }
    if metadata.parameters.values().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("metadata holds non-finite parameters".into()));
    }
    serde_json::to_vec(&CurveDocument::new(curve, metadata.clone())).map_err(|e| format_error("$", e.to_string()))
}

/// Parses and validates a document.
pub fn read_document(bytes: &[u8]) -> Result<CurveDocument> {
    let value: Value = serde_json::from_slice(bytes)
        .map_err(|e| format_error(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| format_error("$", "document is not an object"))?;
    match obj.get("format_version") {
        Some(Value::String(v)) if v == FORMAT_VERSION => {}
        Some(Value::String(v)) => return Err(Error::VersionUnsupported(v.clone())),
        Some(_) => return Err(format_error("$.format_version", "expected a string")),
        None => return Err(format_error("$.format_version", "missing field")),
    }
    for key in ["grid", "lifts", "v", "v_hat", "metadata"] {
        if !obj.contains_key(key) {
            return Err(format_error(format!("$.{key}"), "missing field"));
        }
    }
    let doc: CurveDocument = serde_json::from_value(value).map_err(|e| format_error("$", e.to_string()))?;
    let n = doc.grid.len();
    if n < 2 {
        return Err(format_error("$.grid", "needs at least two points"));
    }
    for (key, len) in [("lifts", doc.lifts.len()), ("v", doc.v.len()), ("v_hat", doc.v_hat.len())] {
        if len != n {
            return Err(format_error(format!("$.{key}"), format!("length {len} differs from grid length {n}")));
        }
    }
    if let Some(i) = doc.grid.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(format_error(format!("$.grid[{}]", i + 1), "grid is not strictly increasing"));
    }
    if let Some(i) = doc.lifts.iter().position(|q| (q.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() > 1e-9) {
        return Err(format_error(format!("$.lifts[{i}]"), "quaternion is not unit"));
    }
    Ok(doc)
}

pub fn deserialize(bytes: &[u8]) -> Result<FramedCurve> {
    Ok(read_document(bytes)?.to_curve())
}
