#![allow(dead_code)]

use delaymem::base::{HistoryFunction, MemoryKernel};
use delaymem::forward::{ControlMap, DelaySystem};
use delaymem::linalg::{Mat, Vector};
use serde_json::Value;

/// Scalar system with zero kernels and constant history `phi`.
pub fn scalar_system(a: f64, a1: f64, h: f64, t_end: f64, dt: f64, phi: f64) -> DelaySystem {
    DelaySystem {
        a: Mat::from_element(1, 1, a),
        a1: Mat::from_element(1, 1, a1),
        m: MemoryKernel::zero(1),
        m_tilde: MemoryKernel::zero(1),
        b: ControlMap::Constant(Mat::from_element(1, 1, 1.0)),
        h,
        t_end,
        history: HistoryFunction::constant(Vector::from_element(1, phi), h, dt).unwrap(),
    }
}

/// Rank by Gaussian elimination with full pivoting on exact small-integer matrices.
pub fn brute_force_rank(m: &Mat) -> usize {
    let mut a: Vec<Vec<f64>> = (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect();
    let (rows, cols) = (m.nrows(), m.ncols());
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let piv = (rank..rows).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[piv][c].abs() <= 1e-9 * scale {
            continue;
        }
        a.swap(rank, piv);
        for r in 0..rows {
            if r != rank {
                let f = a[r][c] / a[rank][c];
                for k in c..cols {
                    a[r][k] -= f * a[rank][k];
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Minimal JSON-Schema check: `type` (string or list), `required`, `properties`,
/// `items`, `enum` and `minimum`. Returns the first violation.
pub fn validate(schema: &Value, doc: &Value, path: &str) -> Result<(), String> {
    if let Some(t) = schema.get("type") {
        let types: Vec<&str> = match t {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(|v| v.as_str()).collect(),
            _ => return Err(format!("{path}: bad type keyword")),
        };
        let ok = types.iter().any(|ty| match *ty {
            "object" => doc.is_object(),
            "array" => doc.is_array(),
            "string" => doc.is_string(),
            "number" => doc.is_number(),
            "integer" => doc.is_i64() || doc.is_u64(),
            "boolean" => doc.is_boolean(),
            "null" => doc.is_null(),
            _ => false,
        });
        if !ok {
            return Err(format!("{path}: expected {types:?}, got {doc}"));
        }
    }
    if let Some(Value::Array(allowed)) = schema.get("enum") {
        if !allowed.contains(doc) {
            return Err(format!("{path}: {doc} not in {allowed:?}"));
        }
    }
    if let (Some(min), Some(x)) = (schema.get("minimum").and_then(Value::as_f64), doc.as_f64()) {
        if x < min {
            return Err(format!("{path}: {x} below minimum {min}"));
        }
    }
    if let Value::Object(obj) = doc {
        if let Some(Value::Array(req)) = schema.get("required") {
            for k in req.iter().filter_map(|v| v.as_str()) {
                if !obj.contains_key(k) {
                    return Err(format!("{path}: missing required key {k}"));
                }
            }
        }
        if let Some(Value::Object(props)) = schema.get("properties") {
            for (k, sub) in props {
                if let Some(v) = obj.get(k) {
                    validate(sub, v, &format!("{path}.{k}"))?;
                }
            }
        }
    }
    if let (Value::Array(items), Some(sub)) = (doc, schema.get("items")) {
        for (i, v) in items.iter().enumerate() {
            validate(sub, v, &format!("{path}[{i}]"))?;
        }
    }
    Ok(())
}
