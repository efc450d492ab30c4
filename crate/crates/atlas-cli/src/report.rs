//! Report types and their canonical JSON form.
//!
//! Canonical form: compact, object keys sorted, every float written as
//! `{:.12e}` (for example `1.570796326795e0`), integers as integers,
//! non-finite floats as `null`, one trailing newline.

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Envelope<I, O> {
    pub schema_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub inputs: I,
    pub outputs: O,
}

impl<I, O> Envelope<I, O> {
    pub fn new(seed: u64, inputs: I, outputs: O) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            seed,
            inputs,
            outputs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Report {
    Predict(Envelope<FamilyInputs, PredictOutputs>),
    Tree(Envelope<TreeInputs, TreeOutputs>),
    Trace(Envelope<TraceInputs, TraceOutputs>),
    Verify(Envelope<VerifyInputs, VerifyOutputs>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ErrorReport {
    pub schema_version: u32,
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub error: ErrorBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FamilyInputs {
    pub m: u32,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PredictOutputs {
    pub m: u32,
    pub a: f64,
    pub b: f64,
    pub nu: f64,
    pub alpha: f64,
    pub alpha_other_branch: f64,
    /// Ideal vertex arguments in `[0, 2π)`, ascending.
    pub vertices: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TreeInputs {
    pub m: u32,
    pub a: f64,
    pub b: f64,
    pub foliation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TreeOutputs {
    pub foliation: String,
    pub edge_parameter: f64,
    pub nodes: Vec<TreeNode>,
    pub edges: Vec<TreeEdge>,
    /// Infinite edges in cyclic order.
    pub rays: Vec<TreeRay>,
    pub verification: TreeVerification,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TreeNode {
    pub id: usize,
    pub label: String,
    pub multiplicity: u32,
    pub location: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TreeEdge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TreeRay {
    pub index: usize,
    pub vertex: usize,
    pub direction: f64,
}

/// Distance from the centre to each zero, three ways.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TreeVerification {
    pub closed_form: f64,
    pub quadrature: f64,
    pub path_integral: Vec<f64>,
    pub deviations: Deviations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Deviations {
    pub quadrature_vs_closed_form: f64,
    pub path_integral_vs_closed_form: f64,
    pub path_integral_vs_quadrature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TraceInputs {
    pub m: u32,
    pub a: f64,
    pub b: f64,
    pub kind: String,
    pub budget: f64,
    pub seeds: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TraceOutputs {
    pub traces: Vec<TraceEntry>,
    pub failures: usize,
}

/// One seed: a whole leaf (backward half reversed, then forward half) or
/// an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TraceEntry {
    pub seed: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub philen: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct VerifyInputs {
    pub m: u32,
    pub a: f64,
    pub b: f64,
    pub level: String,
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct VerifyOutputs {
    pub pass: bool,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSummary>,
}

/// `comparison` is one of `abs` (`|measured - target| <= tolerance`),
/// `rel` (relative to `|target|`), `atLeast` (`measured >= target`) or
/// `greater` (`measured > target`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub comparison: String,
    pub pass: bool,
}

impl Check {
    fn build(name: impl Into<String>, measured: f64, target: f64, tolerance: f64, comparison: &str, pass: bool) -> Self {
        Self {
            name: name.into(),
            measured,
            target,
            tolerance,
            comparison: comparison.into(),
            pass: pass && measured.is_finite(),
        }
    }

    pub fn abs(name: impl Into<String>, measured: f64, target: f64, tolerance: f64) -> Self {
        Self::build(name, measured, target, tolerance, "abs", (measured - target).abs() <= tolerance)
    }

    pub fn rel(name: impl Into<String>, measured: f64, target: f64, tolerance: f64) -> Self {
        Self::build(name, measured, target, tolerance, "rel", (measured - target).abs() <= tolerance * target.abs())
    }

    pub fn at_least(name: impl Into<String>, measured: f64, target: f64) -> Self {
        Self::build(name, measured, target, 0.0, "atLeast", measured >= target)
    }

    pub fn greater(name: impl Into<String>, measured: f64, target: f64) -> Self {
        Self::build(name, measured, target, 0.0, "greater", measured > target)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SolverSummary {
    pub grid_points: usize,
    pub radius: f64,
    pub h: f64,
    pub iterations: usize,
    pub residual: f64,
}

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.12e}")
    } else {
        "null".into()
    }
}

fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings always serialize")),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("strings always serialize"));
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
    }
}

/// Canonical text of any JSON value, newline-terminated.
pub fn canonical_value(v: &Value) -> String {
    let mut out = String::new();
    write_canonical(v, &mut out);
    out.push('\n');
    out
}

pub fn to_canonical<T: Serialize>(report: &T) -> String {
    canonical_value(&serde_json::to_value(report).expect("reports serialize to JSON"))
}

/// Checks that `text` is a schema-1 report (or error object) and that it
/// is already in canonical form.
pub fn validate(text: &str) -> Result<(), String> {
    let value: Value = serde_json::from_str(text).map_err(|e| format!("not JSON: {e}"))?;
    match value.get("schemaVersion").and_then(Value::as_u64) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        other => return Err(format!("schemaVersion must be {SCHEMA_VERSION}, found {other:?}")),
    }
    if value.get("error").is_some() {
        serde_json::from_value::<ErrorReport>(value.clone()).map_err(|e| format!("error object: {e}"))?;
    } else {
        serde_json::from_value::<Report>(value.clone()).map_err(|e| format!("report: {e}"))?;
    }
    if canonical_value(&value) != text {
        return Err("text is not in canonical form".into());
    }
    Ok(())
}
