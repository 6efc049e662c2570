//! JSON model files.
//!
//! A shift model names a transition matrix and optional cylinder functions:
//!
//! ```json
//! {"schema": 1, "kind": "sft", "matrix": [[1, 1], [1, 0]],
//!  "functions": {"potential": {"depth": 2, "values": {"00": 0.1, "01": "-inf", "10": 0.0}},
//!                "weight": {"constant": 1.0},
//!                "cocycle": "uniform"},
//!  "options": {"tol": 1e-10, "restarts": 200, "seed": 0}}
//! ```
//!
//! The matrix may instead be given as `"states": n, "edges": [[i, j], ...]`. A tree model has
//! `"kind": "tree"` and either a `"tree"` object (see [`parse_tree`]) or `"builtin": name`.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::potentials::{parse_word_key, uniform_cocycle, CylinderFunction, ValueKind};
use crate::sft::{TransitionMatrix, ValidateFlags, Word};
use crate::treelab::{builtin, parse_tree, TreeSystem};

pub const SCHEMA_VERSION: u64 = 1;

fn cfg(m: impl Into<String>) -> Error {
    Error::Config(m.into())
}

/// Rejects files whose `schema` field is present and not 1.
pub fn check_schema(v: &Value) -> Result<()> {
    match v.get("schema") {
        None => Ok(()),
        Some(s) if s.as_u64() == Some(SCHEMA_VERSION) => Ok(()),
        Some(s) => Err(cfg(format!("unsupported schema {s}, expected {SCHEMA_VERSION}"))),
    }
}

fn as_index(v: &Value) -> Result<usize> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| cfg(format!("expected a state index, got {v}")))
}

/// `{"matrix": [[...]]}` or `{"states": n, "edges": [[i, j], ...]}`.
pub fn parse_matrix(v: &Value) -> Result<TransitionMatrix> {
    let flags = ValidateFlags { cuntz_krieger: v.get("cuntz_krieger").and_then(Value::as_bool).unwrap_or(false) };
    if let Some(m) = v.get("matrix") {
        let rows = m.as_array().ok_or_else(|| cfg("matrix must be a list of rows"))?;
        let rows: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                r.as_array()
                    .ok_or_else(|| cfg("matrix row must be a list"))?
                    .iter()
                    .map(|x| x.as_f64().ok_or_else(|| cfg(format!("matrix entry {x} is not a number"))))
                    .collect()
            })
            .collect::<Result<_>>()?;
        return TransitionMatrix::validate(&rows, flags);
    }
    let n = v.get("states").ok_or_else(|| cfg("model needs \"matrix\" or \"states\" and \"edges\""))?;
    let n = as_index(n)?;
    let edges = v.get("edges").and_then(Value::as_array).ok_or_else(|| cfg("missing edges list"))?;
    let edges: Vec<(usize, usize)> = edges
        .iter()
        .map(|e| match e.as_array().map(Vec::as_slice) {
            Some([i, j]) => Ok((as_index(i)?, as_index(j)?)),
            _ => Err(cfg(format!("edge {e} is not a pair"))),
        })
        .collect::<Result<_>>()?;
    TransitionMatrix::from_edges(n, &edges, flags)
}

fn parse_real(v: &Value) -> Result<f64> {
    match v {
        Value::Number(x) => x.as_f64().ok_or_else(|| cfg(format!("bad number {v}"))),
        Value::String(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
        Value::String(s) if s == "inf" => Ok(f64::INFINITY),
        _ => Err(cfg(format!("expected a number or \"-inf\", got {v}"))),
    }
}

fn parse_complex(v: &Value) -> Result<Complex64> {
    match v {
        Value::Array(p) if p.len() == 2 => Ok(Complex64::new(parse_real(&p[0])?, parse_real(&p[1])?)),
        _ => parse_real(v).map(|x| Complex64::new(x, 0.0)),
    }
}

/// `{"depth": N, "values": {"010": 0.5, ...}}` or `{"constant": x}`.
///
/// Values of kind [`ValueKind::Modulus`] may be complex, written `[re, im]`; their modulus is stored.
pub fn parse_cylinder(matrix: &Arc<TransitionMatrix>, v: &Value, kind: ValueKind) -> Result<CylinderFunction> {
    if let Some(c) = v.get("constant") {
        let x = match kind {
            ValueKind::Modulus => parse_complex(c)?.norm(),
            _ => parse_real(c)?,
        };
        return CylinderFunction::from_fn(matrix, 1, kind, |_| x);
    }
    let depth = v.get("depth").ok_or_else(|| cfg("cylinder function needs depth and values"))?;
    let depth = as_index(depth)?;
    let values = v.get("values").and_then(Value::as_object).ok_or_else(|| cfg("values must be an object"))?;
    let mut map: HashMap<Word, f64> = HashMap::new();
    for (key, x) in values {
        let w = parse_word_key(key)?;
        let x = match kind {
            ValueKind::Modulus => parse_complex(x)?.norm(),
            _ => parse_real(x)?,
        };
        map.insert(w, x);
    }
    CylinderFunction::from_map(matrix, depth, kind, &map)
}

/// Solver settings read from the `options` object.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelOptions {
    pub tol: Option<f64>,
    pub restarts: Option<usize>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub max_iterations: Option<usize>,
}

fn parse_options(v: Option<&Value>) -> Result<ModelOptions> {
    let get_f = |k: &str| v.and_then(|o| o.get(k)).map(|x| x.as_f64().ok_or_else(|| cfg(format!("option {k} must be a number"))));
    let get_u = |k: &str| {
        v.and_then(|o| o.get(k)).map(|x| x.as_u64().ok_or_else(|| cfg(format!("option {k} must be a nonnegative integer"))))
    };
    let tol = get_f("tol").transpose()?;
    if let Some(t) = tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(cfg(format!("tol must lie in (0, 1), got {t}")));
        }
    }
    Ok(ModelOptions {
        tol,
        restarts: get_u("restarts").transpose()?.map(|x| x as usize),
        steps: get_u("steps").transpose()?.map(|x| x as usize),
        seed: get_u("seed").transpose()?,
        max_iterations: get_u("max_iterations").transpose()?.map(|x| x as usize),
    })
}

/// Shift model with defaults filled in: potential 0, weight 1, uniform cocycle.
#[derive(Clone, Debug)]
pub struct SftModel {
    pub matrix: Arc<TransitionMatrix>,
    pub potential: CylinderFunction,
    pub weight: CylinderFunction,
    pub cocycle: CylinderFunction,
    pub options: ModelOptions,
}

#[derive(Clone, Debug)]
pub enum Model {
    Sft(SftModel),
    Tree(TreeSystem),
}

pub fn parse_sft(v: &Value) -> Result<SftModel> {
    let matrix = Arc::new(parse_matrix(v)?);
    let funcs = v.get("functions");
    let get = |k: &str| funcs.and_then(|f| f.get(k)).filter(|x| !x.is_null());
    let potential = match get("potential") {
        Some(p) => parse_cylinder(&matrix, p, ValueKind::Real)?,
        None => CylinderFunction::constant(&matrix, 0.0)?,
    };
    let weight = match get("weight") {
        Some(p) => parse_cylinder(&matrix, p, ValueKind::Modulus)?,
        None => CylinderFunction::constant(&matrix, 1.0)?,
    };
    let cocycle = match get("cocycle") {
        None => uniform_cocycle(&matrix)?,
        Some(Value::String(s)) if s == "uniform" => uniform_cocycle(&matrix)?,
        Some(p) => parse_cylinder(&matrix, p, ValueKind::NonNegative)?,
    };
    Ok(SftModel { matrix, potential, weight, cocycle, options: parse_options(v.get("options"))? })
}

/// Reads a model. Files without `kind` are shift models.
pub fn parse_model(v: &Value) -> Result<Model> {
    check_schema(v)?;
    match v.get("kind").and_then(Value::as_str).unwrap_or("sft") {
        "sft" => Ok(Model::Sft(parse_sft(v)?)),
        "tree" => {
            if let Some(name) = v.get("builtin").and_then(Value::as_str) {
                return builtin(name).map(Model::Tree).ok_or_else(|| cfg(format!("no built-in tree system {name}")));
            }
            parse_tree(v.get("tree").unwrap_or(v)).map(Model::Tree)
        }
        k => Err(cfg(format!("unknown model kind {k}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn matrix_forms_agree() {
        let a = parse_matrix(&json!({"matrix": [[1, 1], [1, 0]]})).unwrap();
        let b = parse_matrix(&json!({"states": 2, "edges": [[0, 0], [0, 1], [1, 0]]})).unwrap();
        assert_eq!(a, b);
        assert_eq!(parse_matrix(&json!({"matrix": [[1, 2], [1, 0]]})), Err(Error::NonBinaryEntry(0, 1)));
    }

    #[test]
    fn cylinder_values_and_errors() {
        let a = Arc::new(TransitionMatrix::golden_mean());
        let f = parse_cylinder(&a, &json!({"depth": 2, "values": {"00": 0.5, "01": "-inf", "10": 1}}), ValueKind::Real)
            .unwrap();
        assert_eq!(f.eval(&[0, 1]).unwrap(), f64::NEG_INFINITY);
        let missing = parse_cylinder(&a, &json!({"depth": 2, "values": {"00": 0.5, "01": 1}}), ValueKind::Real);
        assert_eq!(missing.unwrap_err(), Error::MissingWord(vec![1, 0]));
        let bad = parse_cylinder(&a, &json!({"depth": 2, "values": {"00": 0, "01": 0, "10": 0, "11": 0}}), ValueKind::Real);
        assert_eq!(bad.unwrap_err(), Error::InadmissibleWord(vec![1, 1]));
        let w = parse_cylinder(&a, &json!({"constant": [3, 4]}), ValueKind::Modulus).unwrap();
        assert_eq!(w.eval(&[1]).unwrap(), 5.0);
    }

    #[test]
    fn models() {
        let m = parse_model(&json!({"schema": 1, "matrix": [[1, 1], [1, 1]], "options": {"seed": 7}})).unwrap();
        match m {
            Model::Sft(s) => {
                assert_eq!(s.options.seed, Some(7));
                assert_eq!(s.cocycle.eval(&[0, 1]).unwrap(), 0.5);
            }
            Model::Tree(_) => panic!("expected a shift model"),
        }
        assert!(matches!(parse_model(&json!({"kind": "tree", "builtin": "contrexample"})), Ok(Model::Tree(_))));
        assert!(matches!(parse_model(&json!({"schema": 2, "matrix": [[1]]})), Err(Error::Config(_))));
    }
}
