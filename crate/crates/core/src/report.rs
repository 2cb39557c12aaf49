//! Run reports and their text and JSON renderings.
//!
//! In JSON, integers are decimal strings, rationals `{"num", "den"}` with
//! the sign on the numerator, motives `{"motive": ...}`, series
//! `{"series": ...}` and free text `{"text": ...}`; [`Val::from_json`]
//! inverts the encoding.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Map, Value as Json};

use crate::expr::{parse_motive, parse_series};
use crate::gring::LocalizedMotive;
use crate::series::RationalSeries;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Val {
    Int(BigInt),
    Rat(BigRational),
    Motive(LocalizedMotive),
    Series(RationalSeries),
    Text(String),
    Bool(bool),
    List(Vec<Val>),
    Record(Vec<(String, Val)>),
}

impl Val {
    pub fn int(n: impl Into<BigInt>) -> Self {
        Val::Int(n.into())
    }

    pub fn text(s: impl Into<String>) -> Self {
        Val::Text(s.into())
    }

    pub fn record<K: Into<String>>(fields: impl IntoIterator<Item = (K, Val)>) -> Self {
        Val::Record(fields.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn to_json(&self) -> Json {
        match self {
            Val::Int(n) => Json::String(n.to_string()),
            Val::Rat(r) => json!({"num": r.numer().to_string(), "den": r.denom().to_string()}),
            Val::Motive(m) => json!({"motive": m.to_string()}),
            Val::Series(s) => json!({"series": s.to_string()}),
            Val::Text(s) => json!({"text": s}),
            Val::Bool(b) => Json::Bool(*b),
            Val::List(xs) => Json::Array(xs.iter().map(Val::to_json).collect()),
            Val::Record(fs) => {
                let mut map = Map::new();
                for (k, v) in fs {
                    map.insert(k.clone(), v.to_json());
                }
                Json::Object(map)
            }
        }
    }

    pub fn from_json(j: &Json) -> Option<Val> {
        Some(match j {
            Json::String(s) => Val::Int(s.parse().ok()?),
            Json::Bool(b) => Val::Bool(*b),
            Json::Array(xs) => Val::List(xs.iter().map(Val::from_json).collect::<Option<_>>()?),
            Json::Object(map) => {
                let keys: Vec<&str> = map.keys().map(String::as_str).collect();
                let s = |k: &str| map.get(k).and_then(Json::as_str);
                match keys.as_slice() {
                    ["num", "den"] => {
                        let r = BigRational::new(s("num")?.parse().ok()?, s("den")?.parse().ok()?);
                        Val::Rat(r)
                    }
                    ["motive"] if s("motive").is_some() => Val::Motive(parse_motive(s("motive")?).ok()?),
                    ["series"] if s("series").is_some() => Val::Series(parse_series(s("series")?).ok()?),
                    ["text"] if s("text").is_some() => Val::Text(s("text")?.into()),
                    _ => Val::Record(
                        map.iter()
                            .map(|(k, v)| Some((k.clone(), Val::from_json(v)?)))
                            .collect::<Option<_>>()?,
                    ),
                }
            }
            _ => return None,
        })
    }

    fn inline(&self) -> Option<String> {
        match self {
            Val::Int(n) => Some(n.to_string()),
            Val::Rat(r) => Some(r.to_string()),
            Val::Motive(m) => Some(m.to_string()),
            Val::Series(s) => Some(s.to_string()),
            Val::Text(s) => Some(s.clone()),
            Val::Bool(b) => Some(b.to_string()),
            Val::List(xs) if xs.iter().all(|x| matches!(x, Val::Int(_) | Val::Rat(_) | Val::Bool(_))) => {
                let parts: Vec<String> = xs.iter().filter_map(Val::inline).collect();
                Some(format!("[{}]", parts.join(", ")))
            }
            _ => None,
        }
    }

    fn write_text(&self, out: &mut String, key: &str, indent: usize) {
        let pad = " ".repeat(indent);
        if let Some(s) = self.inline() {
            let _ = writeln!(out, "{pad}{key} = {s}");
            return;
        }
        let _ = writeln!(out, "{pad}{key}:");
        match self {
            Val::List(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    x.write_text(out, &format!("[{i}]"), indent + 2);
                }
            }
            Val::Record(fs) => {
                for (k, v) in fs {
                    v.write_text(out, k, indent + 2);
                }
            }
            _ => unreachable!("scalars render inline"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Failed,
    Error(String),
}

impl Status {
    pub fn is_ok(&self) -> bool {
        *self == Status::Ok
    }

    fn label(&self) -> String {
        match self {
            Status::Ok => "ok".into(),
            Status::Failed => "failed".into(),
            Status::Error(code) => format!("error({code})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskReport {
    pub name: String,
    pub kind: String,
    pub status: Status,
    pub message: Option<String>,
    /// Canonical `key = value` lines of the task.
    pub input: Vec<(String, String)>,
    pub values: Vec<(String, Val)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub version: u32,
    pub seed: u64,
    pub budget: u64,
    pub tasks: Vec<TaskReport>,
}

impl Report {
    pub fn all_ok(&self) -> bool {
        self.tasks.iter().all(|t| t.status.is_ok())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Structured,
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Text => render_text(report),
        Format::Structured => {
            let mut s = serde_json::to_string_pretty(&to_json(report)).expect("serializable");
            s.push('\n');
            s
        }
    }
}

fn render_text(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "motzeta report version {} seed {} budget {}",
        report.version, report.seed, report.budget
    );
    for t in &report.tasks {
        let _ = writeln!(out, "\n[task {}] {}: {}", t.name, t.kind, t.status.label());
        if let Some(m) = &t.message {
            let _ = writeln!(out, "  message: {m}");
        }
        let _ = writeln!(out, "  input:");
        for (k, v) in &t.input {
            let _ = writeln!(out, "    {k} = {v}");
        }
        for (k, v) in &t.values {
            v.write_text(&mut out, k, 2);
        }
    }
    out
}

pub fn to_json(report: &Report) -> Json {
    let tasks: Vec<Json> = report
        .tasks
        .iter()
        .map(|t| {
            let status = match &t.status {
                Status::Error(code) => json!({"error": code}),
                s => Json::String(s.label()),
            };
            let mut values = Map::new();
            for (k, v) in &t.values {
                values.insert(k.clone(), v.to_json());
            }
            json!({
                "name": t.name,
                "kind": t.kind,
                "status": status,
                "message": t.message,
                "input": t.input.iter().map(|(k, v)| json!([k, v])).collect::<Vec<_>>(),
                "values": values,
            })
        })
        .collect();
    json!({
        "version": report.version.to_string(),
        "seed": report.seed.to_string(),
        "budget": report.budget.to_string(),
        "tasks": tasks,
    })
}

/// Inverse of [`to_json`].
pub fn from_json(j: &Json) -> Option<Report> {
    let num = |k: &str| j.get(k)?.as_str()?.parse::<u64>().ok();
    let mut tasks = Vec::new();
    for t in j.get("tasks")?.as_array()? {
        let status = match t.get("status")? {
            Json::String(s) if s == "ok" => Status::Ok,
            Json::String(s) if s == "failed" => Status::Failed,
            Json::Object(m) => Status::Error(m.get("error")?.as_str()?.into()),
            _ => return None,
        };
        let input = t
            .get("input")?
            .as_array()?
            .iter()
            .map(|p| Some((p.get(0)?.as_str()?.to_string(), p.get(1)?.as_str()?.to_string())))
            .collect::<Option<_>>()?;
        let values = t
            .get("values")?
            .as_object()?
            .iter()
            .map(|(k, v)| Some((k.clone(), Val::from_json(v)?)))
            .collect::<Option<_>>()?;
        tasks.push(TaskReport {
            name: t.get("name")?.as_str()?.into(),
            kind: t.get("kind")?.as_str()?.into(),
            status,
            message: t.get("message")?.as_str().map(String::from),
            input,
            values,
        });
    }
    Some(Report {
        version: num("version")? as u32,
        seed: num("seed")?,
        budget: num("budget")?,
        tasks,
    })
}
