//! Versioned JSON reports and field-level diffs between them.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::scene::Scene;
use crate::sceneio::scene_digest;

pub const SCHEMA_VERSION: &str = "phistatic-report/1";

/// Fields excluded from diffs and determinism comparisons.
pub const VOLATILE_FIELDS: [&str; 1] = ["wall_time_ms"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub id: String,
    pub points: usize,
    pub residual_sup: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    /// Passes iff the residual is finite and within tolerance.
    pub fn new(id: impl Into<String>, points: usize, residual_sup: f64, tolerance: f64) -> CheckRecord {
        CheckRecord {
            id: id.into(),
            points,
            residual_sup,
            tolerance,
            pass: residual_sup.is_finite() && residual_sup <= tolerance,
            note: None,
        }
    }

    /// A check decided by a predicate rather than a residual.
    pub fn flag(id: impl Into<String>, points: usize, pass: bool, note: impl Into<String>) -> CheckRecord {
        CheckRecord {
            id: id.into(),
            points,
            residual_sup: if pass { 0.0 } else { 1.0 },
            tolerance: 0.0,
            pass,
            note: Some(note.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: String,
    pub tool_version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scene: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scene_digest: Option<String>,
    pub seed: u64,
    pub config: BTreeMap<String, Value>,
    pub checks: Vec<CheckRecord>,
    pub data: Value,
    pub wall_time_ms: f64,
}

impl Report {
    pub fn new(command: impl Into<String>, scene: Option<&Scene>, seed: u64) -> Report {
        Report {
            schema: SCHEMA_VERSION.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.into(),
            scene: scene.map(|s| s.name.clone()),
            scene_digest: scene.map(scene_digest),
            seed,
            config: BTreeMap::new(),
            checks: Vec::new(),
            data: Value::Null,
            wall_time_ms: 0.0,
        }
    }

    pub fn config(&mut self, key: &str, v: impl Serialize) {
        self.config.insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    pub fn push(&mut self, c: CheckRecord) {
        self.checks.push(c);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("reports serialize")
    }

    /// JSON text; `indent = 0` gives the compact form.
    pub fn to_json(&self, indent: usize) -> String {
        to_json_indent(&self.to_value(), indent)
    }
}

pub fn to_json_indent(v: &Value, indent: usize) -> String {
    if indent == 0 {
        return serde_json::to_string(v).expect("values serialize");
    }
    let pad = vec![b' '; indent];
    let mut out = Vec::new();
    let fmt = serde_json::ser::PrettyFormatter::with_indent(&pad);
    let mut ser = serde_json::Serializer::with_formatter(&mut out, fmt);
    v.serialize(&mut ser).expect("values serialize");
    String::from_utf8(out).expect("json is utf-8")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiffEntry {
    pub path: String,
    pub a: Value,
    pub b: Value,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReportDiff {
    pub entries: Vec<DiffEntry>,
    /// Ids of checks whose records differ or exist on one side only.
    pub affected_checks: Vec<String>,
}

impl ReportDiff {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn walk(path: &str, a: &Value, b: &Value, out: &mut Vec<DiffEntry>) {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            let mut keys: Vec<&String> = x.keys().chain(y.keys()).collect();
            keys.sort();
            keys.dedup();
            for k in keys {
                if path.is_empty() && VOLATILE_FIELDS.contains(&k.as_str()) {
                    continue;
                }
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                walk(&p, x.get(k).unwrap_or(&Value::Null), y.get(k).unwrap_or(&Value::Null), out);
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            for i in 0..x.len().max(y.len()) {
                walk(&format!("{path}[{i}]"), x.get(i).unwrap_or(&Value::Null), y.get(i).unwrap_or(&Value::Null), out);
            }
        }
        _ if a != b => out.push(DiffEntry { path: path.to_string(), a: a.clone(), b: b.clone() }),
        _ => {}
    }
}

fn checks_by_id(v: &Value) -> BTreeMap<String, Value> {
    v.get("checks")
        .and_then(Value::as_array)
        .map(|cs| {
            cs.iter()
                .enumerate()
                .map(|(i, c)| {
                    let id = c.get("id").and_then(Value::as_str).map_or_else(|| format!("#{i}"), str::to_string);
                    (id, c.clone())
                })
                .collect()
        })
        .unwrap_or_default()
}

/// Field-level diff of two reports of the same schema version. Checks are
/// matched by id; other fields by JSON path.
pub fn report_diff(a: &Value, b: &Value) -> Result<ReportDiff> {
    let sa = a.get("schema").and_then(Value::as_str).unwrap_or("<none>");
    let sb = b.get("schema").and_then(Value::as_str).unwrap_or("<none>");
    if sa != sb {
        return Err(Error::SchemaMismatch(sa.to_string(), sb.to_string()));
    }
    let mut entries = Vec::new();
    let strip = |v: &Value| {
        let mut v = v.clone();
        if let Some(o) = v.as_object_mut() {
            o.remove("checks");
        }
        v
    };
    walk("", &strip(a), &strip(b), &mut entries);
    let (ca, cb) = (checks_by_id(a), checks_by_id(b));
    let mut ids: Vec<&String> = ca.keys().chain(cb.keys()).collect();
    ids.sort();
    ids.dedup();
    let mut affected = Vec::new();
    for id in ids {
        let before = entries.len();
        walk(&format!("checks[{id}]"), ca.get(id).unwrap_or(&Value::Null), cb.get(id).unwrap_or(&Value::Null), &mut entries);
        if entries.len() > before {
            affected.push(id.clone());
        }
    }
    Ok(ReportDiff { entries, affected_checks: affected })
}
