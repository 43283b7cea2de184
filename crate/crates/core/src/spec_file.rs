//! JSON game files.
//!
//! ```json
//! {
//!   "dims": {"n": 1, "m1": 1, "m2": 1},
//!   "horizon": {"t0": 0.0, "T": 1.0},
//!   "dynamics": {"A": [[1.0]], "B1": [[1.0]]},
//!   "cost1": {"Q": [[1.0]], "R11": {"times": [0.0, 1.0], "values": [[[1.0]], [[2.0]]]}},
//!   "cost2": {"R22": [[1.0]]}
//! }
//! ```
//!
//! A coefficient is a row-major 2-D array, a flat row-major array of the
//! expected length, a bare number for 1×1 entries, or a `{times, values}`
//! table whose values use any of those forms. Missing coefficients are zero.

use std::path::Path;

use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::export::write_atomic;
use crate::model::{coefficient_shape, Coefficient, Dims, GameSpec, RawGame};

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}

fn number(v: &Value, what: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| invalid(format!("{what}: expected a number")))
}

fn usize_field(obj: &Value, key: &str) -> Result<usize> {
    obj.get(key)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| invalid(format!("dims.{key}: expected a non-negative integer")))
}

fn matrix(v: &Value, shape: (usize, usize), what: &str) -> Result<DMatrix<f64>> {
    match v {
        Value::Number(_) => Ok(DMatrix::from_element(1, 1, number(v, what)?)),
        Value::Array(items) if items.iter().all(Value::is_array) && !items.is_empty() => {
            let rows: Vec<Vec<f64>> = items
                .iter()
                .map(|row| {
                    row.as_array()
                        .expect("checked above")
                        .iter()
                        .map(|x| number(x, what))
                        .collect::<Result<_>>()
                })
                .collect::<Result<_>>()?;
            let cols = rows[0].len();
            if rows.iter().any(|r| r.len() != cols) {
                return Err(invalid(format!("{what}: ragged rows")));
            }
            let flat: Vec<f64> = rows.concat();
            Ok(DMatrix::from_row_slice(rows.len(), cols, &flat))
        }
        Value::Array(items) => {
            let flat: Vec<f64> = items.iter().map(|x| number(x, what)).collect::<Result<_>>()?;
            if flat.len() == shape.0 * shape.1 {
                Ok(DMatrix::from_row_slice(shape.0, shape.1, &flat))
            } else {
                Err(Error::dims(what, shape, (1, flat.len())))
            }
        }
        _ => Err(invalid(format!("{what}: expected a number, an array or a table"))),
    }
}

fn coefficient(v: &Value, shape: (usize, usize), what: &str) -> Result<Coefficient> {
    let Some(obj) = v.as_object() else {
        return Ok(Coefficient::Constant(matrix(v, shape, what)?));
    };
    let (Some(times), Some(values)) = (obj.get("times"), obj.get("values")) else {
        return Err(invalid(format!("{what}: table needs `times` and `values`")));
    };
    if let Some(extra) = obj.keys().find(|k| *k != "times" && *k != "values") {
        return Err(invalid(format!("{what}: unexpected table key `{extra}`")));
    }
    let times: Vec<f64> = times
        .as_array()
        .ok_or_else(|| invalid(format!("{what}.times: expected an array")))?
        .iter()
        .map(|t| number(t, what))
        .collect::<Result<_>>()?;
    let values: Vec<DMatrix<f64>> = values
        .as_array()
        .ok_or_else(|| invalid(format!("{what}.values: expected an array")))?
        .iter()
        .map(|m| matrix(m, shape, what))
        .collect::<Result<_>>()?;
    Ok(Coefficient::table(times, values))
}

fn section(root: &Value, name: &str, dims: Dims) -> Result<Vec<(String, Coefficient)>> {
    let Some(v) = root.get(name) else {
        return Ok(Vec::new());
    };
    let obj = v.as_object().ok_or_else(|| invalid(format!("{name}: expected an object")))?;
    obj.iter()
        .map(|(key, v)| {
            let what = format!("{name}.{key}");
            let shape = coefficient_shape(dims, key).ok_or_else(|| invalid(format!("unknown coefficient {what}")))?;
            Ok((key.clone(), coefficient(v, shape, &what)?))
        })
        .collect()
}

/// Parses a game file without validating it.
pub fn parse_raw(text: &str) -> Result<RawGame> {
    let root: Value = serde_json::from_str(text)?;
    let root_obj = root.as_object().ok_or_else(|| invalid("top level must be an object"))?;
    if let Some(extra) = root_obj
        .keys()
        .find(|k| !["dims", "horizon", "dynamics", "cost1", "cost2"].contains(&k.as_str()))
    {
        return Err(invalid(format!("unexpected top-level key `{extra}`")));
    }
    let dims_v = root.get("dims").ok_or_else(|| invalid("missing `dims`"))?;
    let dims = Dims {
        n: usize_field(dims_v, "n")?,
        m1: usize_field(dims_v, "m1")?,
        m2: usize_field(dims_v, "m2")?,
    };
    let horizon = root.get("horizon").ok_or_else(|| invalid("missing `horizon`"))?;
    let t0 = number(horizon.get("t0").unwrap_or(&Value::Null), "horizon.t0")?;
    let t_end = number(horizon.get("T").unwrap_or(&Value::Null), "horizon.T")?;
    let mut raw = RawGame::new(dims.n, dims.m1, dims.m2, t0, t_end);
    raw.dynamics.extend(section(&root, "dynamics", dims)?);
    raw.cost1.extend(section(&root, "cost1", dims)?);
    raw.cost2.extend(section(&root, "cost2", dims)?);
    Ok(raw)
}

pub fn parse_game(text: &str) -> Result<GameSpec> {
    parse_raw(text)?.validate()
}

pub fn read_game(path: &Path) -> Result<GameSpec> {
    parse_game(&std::fs::read_to_string(path)?)
}

fn matrix_json(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json!(m[(i, j)])).collect()))
            .collect(),
    )
}

fn coefficient_json(c: &Coefficient) -> Value {
    match c {
        Coefficient::Constant(m) => matrix_json(m),
        Coefficient::Table { times, values } => json!({
            "times": times,
            "values": values.iter().map(matrix_json).collect::<Vec<_>>(),
        }),
    }
}

/// JSON holding every nonzero coefficient, one coefficient per line.
/// Numbers use the shortest text that reads back to the same double.
pub fn game_to_json(game: &GameSpec) -> String {
    let raw = game.to_raw();
    let compact = |v: &Value| serde_json::to_string(v).expect("JSON values always serialize");
    let section = |name: &str, m: &std::collections::BTreeMap<String, Coefficient>| {
        let body: Vec<String> = m
            .iter()
            .map(|(k, c)| format!("    {}: {}", compact(&json!(k)), compact(&coefficient_json(c))))
            .collect();
        if body.is_empty() {
            format!("  \"{name}\": {{}}")
        } else {
            format!("  \"{name}\": {{\n{}\n  }}", body.join(",\n"))
        }
    };
    let dims = json!({"n": raw.n, "m1": raw.m1, "m2": raw.m2});
    let horizon = json!({"t0": raw.t0, "T": raw.t_end});
    format!(
        "{{\n  \"dims\": {},\n  \"horizon\": {},\n{},\n{},\n{}\n}}\n",
        compact(&dims),
        compact(&horizon),
        section("dynamics", &raw.dynamics),
        section("cost1", &raw.cost1),
        section("cost2", &raw.cost2)
    )
}

pub fn write_game(path: &Path, game: &GameSpec) -> Result<()> {
    write_atomic(path, game_to_json(game).as_bytes())
}
