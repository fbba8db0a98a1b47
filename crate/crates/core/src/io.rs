//! JSON files for instances and matchings.
//!
//! Parsing goes through `serde_json::Value` first so schema problems can be
//! reported with the offending field path.

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::instance::{validate_instance, Instance, Matching, RawInstance};

fn schema(path: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

fn parse_value(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Syntax(e.to_string()))
}

fn integer(v: &Value, path: &str) -> Result<i64> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .ok_or_else(|| schema(path, format!("expected an integer, found {n}"))),
        other => Err(schema(path, format!("expected an integer, found {}", kind(other)))),
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| schema(path, format!("expected an array, found {}", kind(v))))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| schema(key, "missing key"))
}

fn int_array(v: &Value, path: &str) -> Result<Vec<i64>> {
    array(v, path)?
        .iter()
        .enumerate()
        .map(|(k, x)| integer(x, &format!("{path}[{k}]")))
        .collect()
}

fn int_matrix(v: &Value, path: &str) -> Result<Vec<Vec<i64>>> {
    array(v, path)?
        .iter()
        .enumerate()
        .map(|(k, row)| int_array(row, &format!("{path}[{k}]")))
        .collect()
}

fn object<'a>(v: &'a Value) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| schema("$", format!("expected an object, found {}", kind(v))))
}

pub fn parse_raw_instance(text: &str) -> Result<RawInstance> {
    let value = parse_value(text)?;
    let obj = object(&value)?;
    Ok(RawInstance {
        n_left: integer(field(obj, "n_left")?, "n_left")?,
        n_right: integer(field(obj, "n_right")?, "n_right")?,
        deg_left: int_array(field(obj, "deg_left")?, "deg_left")?,
        deg_right: int_array(field(obj, "deg_right")?, "deg_right")?,
        val_left: int_matrix(field(obj, "val_left")?, "val_left")?,
        val_right: int_matrix(field(obj, "val_right")?, "val_right")?,
    })
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    validate_instance(&parse_raw_instance(text)?)
}

pub fn instance_to_json(instance: &Instance) -> Value {
    serde_json::to_value(instance.to_raw()).expect("plain integer data")
}

pub fn serialize_instance(instance: &Instance) -> String {
    serde_json::to_string_pretty(&instance_to_json(instance)).expect("plain integer data")
}

/// Parses `{"edges": [[i, j], ...]}` against the instance's dimensions.
pub fn parse_matching(text: &str, n_left: usize, n_right: usize) -> Result<Matching> {
    let value = parse_value(text)?;
    let obj = object(&value)?;
    let edges = array(field(obj, "edges")?, "edges")?;
    let mut pairs = Vec::with_capacity(edges.len());
    for (k, e) in edges.iter().enumerate() {
        let path = format!("edges[{k}]");
        let pair = array(e, &path)?;
        if pair.len() != 2 {
            return Err(schema(&path, format!("expected a pair, found {} entries", pair.len())));
        }
        let i = integer(&pair[0], &format!("{path}[0]"))?;
        let j = integer(&pair[1], &format!("{path}[1]"))?;
        if i < 0 || i as usize >= n_left {
            return Err(schema(&format!("{path}[0]"), format!("left index {i} out of range")));
        }
        if j < 0 || j as usize >= n_right {
            return Err(schema(&format!("{path}[1]"), format!("right index {j} out of range")));
        }
        pairs.push((i as usize, j as usize));
    }
    Matching::from_edges(n_left, n_right, &pairs)
}

pub fn matching_to_json(m: &Matching) -> Value {
    json!({ "edges": m.edges().iter().map(|&(i, j)| [i, j]).collect::<Vec<_>>() })
}

pub fn serialize_matching(m: &Matching) -> String {
    serde_json::to_string(&matching_to_json(m)).expect("plain integer data")
}
