//! JSON DAG file format.
//!
//! ```json
//! {"version": 1,
//!  "nodes": [{"id": "a", "op": "const", "params": {"value": 3}, "deps": []},
//!            {"id": "b", "op": "add", "params": {}, "deps": ["a"]}]}
//! ```
//!
//! Unknown fields and unknown params are rejected. `args` may only appear on
//! leaves. Nodes are written in topological order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};
use thiserror::Error;

use super::{GraphError, TaskGraph, TaskId, TaskNode};
use crate::workloads::{OpRegistry, OpSpec, Value};

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DagFileError {
    #[error("parse error at line {line}: {reason}")]
    ParseError { line: usize, reason: String },
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DagFile {
    version: u32,
    nodes: Vec<NodeRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: String,
    op: String,
    #[serde(default)]
    params: Map<String, Json>,
    #[serde(default)]
    deps: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    args: Option<Vec<Value>>,
}

fn schema(msg: impl Into<String>) -> DagFileError {
    DagFileError::SchemaViolation(msg.into())
}

struct Params<'a> {
    id: &'a str,
    map: &'a Map<String, Json>,
}

impl Params<'_> {
    fn only(&self, allowed: &[&str]) -> Result<(), DagFileError> {
        match self.map.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(schema(format!("node `{}`: unknown param `{k}`", self.id))),
            None => Ok(()),
        }
    }

    fn required(&self, key: &str) -> Result<&Json, DagFileError> {
        self.map
            .get(key)
            .ok_or_else(|| schema(format!("node `{}`: missing param `{key}`", self.id)))
    }

    fn usize(&self, key: &str) -> Result<usize, DagFileError> {
        self.required(key)?
            .as_u64()
            .map(|v| v as usize)
            .ok_or_else(|| schema(format!("node `{}`: `{key}` must be a non-negative integer", self.id)))
    }
}

fn op_from_record(rec: &NodeRecord, registry: &OpRegistry) -> Result<OpSpec, DagFileError> {
    let p = Params {
        id: &rec.id,
        map: &rec.params,
    };
    let op = match rec.op.as_str() {
        "const" => {
            p.only(&["value"])?;
            let value: Value = serde_json::from_value(p.required("value")?.clone())
                .map_err(|e| schema(format!("node `{}`: bad const value: {e}", rec.id)))?;
            OpSpec::Const { value }
        }
        "add" => {
            p.only(&["addend"])?;
            let addend = match rec.params.get("addend") {
                None => 0,
                Some(v) => v
                    .as_i64()
                    .ok_or_else(|| schema(format!("node `{}`: `addend` must be an integer", rec.id)))?,
            };
            OpSpec::Add { addend }
        }
        "sleep_add" => {
            p.only(&["delay_ms"])?;
            let delay_ms = p
                .required("delay_ms")?
                .as_f64()
                .filter(|d| *d >= 0.0 && d.is_finite())
                .ok_or_else(|| schema(format!("node `{}`: `delay_ms` must be >= 0", rec.id)))?;
            OpSpec::SleepAdd { delay_ms }
        }
        "sum" => {
            p.only(&[])?;
            OpSpec::Sum
        }
        "matmul_block" => {
            p.only(&["rows", "inner", "cols"])?;
            OpSpec::MatmulBlock {
                rows: p.usize("rows")?,
                inner: p.usize("inner")?,
                cols: p.usize("cols")?,
            }
        }
        "custom" => {
            p.only(&["name"])?;
            let name = p
                .required("name")?
                .as_str()
                .ok_or_else(|| schema(format!("node `{}`: `name` must be a string", rec.id)))?;
            if !registry.contains(name) {
                return Err(schema(format!(
                    "node `{}`: custom op `{name}` is not registered",
                    rec.id
                )));
            }
            OpSpec::Custom { name: name.to_owned() }
        }
        other => return Err(schema(format!("node `{}`: unknown op `{other}`", rec.id))),
    };
    Ok(op)
}

fn params_of(op: &OpSpec) -> Map<String, Json> {
    let mut m = Map::new();
    match op {
        OpSpec::Const { value } => {
            m.insert("value".into(), serde_json::to_value(value).expect("values serialize"));
        }
        OpSpec::Add { addend } => {
            if *addend != 0 {
                m.insert("addend".into(), Json::from(*addend));
            }
        }
        OpSpec::SleepAdd { delay_ms } => {
            m.insert("delay_ms".into(), Json::from(*delay_ms));
        }
        OpSpec::Sum => {}
        OpSpec::MatmulBlock { rows, inner, cols } => {
            m.insert("rows".into(), Json::from(*rows));
            m.insert("inner".into(), Json::from(*inner));
            m.insert("cols".into(), Json::from(*cols));
        }
        OpSpec::Custom { name } => {
            m.insert("name".into(), Json::from(name.clone()));
        }
    }
    m
}

/// Parses and validates a DAG document.
pub fn parse_dag(text: &str, registry: &OpRegistry) -> Result<TaskGraph, DagFileError> {
    let file: DagFile = serde_json::from_str(text).map_err(|e| {
        if e.is_data() {
            schema(e.to_string())
        } else {
            DagFileError::ParseError {
                line: e.line(),
                reason: e.to_string(),
            }
        }
    })?;
    if file.version != FORMAT_VERSION {
        return Err(schema(format!("unsupported version {}", file.version)));
    }
    let mut graph = TaskGraph::new();
    for rec in &file.nodes {
        if rec.id.is_empty() {
            return Err(schema("empty node id"));
        }
        let op = op_from_record(rec, registry)?;
        let args = rec.args.clone().unwrap_or_default();
        if rec.args.is_some() && !rec.deps.is_empty() {
            return Err(schema(format!("node `{}`: `args` only allowed on leaves", rec.id)));
        }
        let node = TaskNode::new(rec.id.as_str(), op)
            .with_deps(rec.deps.iter().map(|d| TaskId::new(d.clone())))
            .with_args(args);
        graph.add_task(node).map_err(|e| match e {
            GraphError::DuplicateId(id) => schema(format!("duplicate node id `{id}`")),
            other => schema(other.to_string()),
        })?;
    }
    graph.validate().map_err(|e| schema(e.to_string()))?;
    Ok(graph)
}

pub fn to_dag_string(graph: &TaskGraph) -> String {
    let order = graph.topo_order().unwrap_or_else(|_| graph.ids().cloned().collect());
    let nodes = order
        .iter()
        .filter_map(|id| graph.node(id))
        .map(|n| NodeRecord {
            id: n.id.to_string(),
            op: n.op.kind_name().to_owned(),
            params: params_of(&n.op),
            deps: n.deps.iter().map(|d| d.to_string()).collect(),
            args: (!n.inline_args.is_empty()).then(|| n.inline_args.clone()),
        })
        .collect();
    let file = DagFile {
        version: FORMAT_VERSION,
        nodes,
    };
    serde_json::to_string_pretty(&file).expect("dag serializes")
}

pub fn load_dag(path: impl AsRef<Path>, registry: &OpRegistry) -> Result<TaskGraph, DagFileError> {
    let text = fs::read_to_string(path)?;
    parse_dag(&text, registry)
}

pub fn save_dag(graph: &TaskGraph, path: impl AsRef<Path>) -> Result<(), DagFileError> {
    fs::write(path, to_dag_string(graph))?;
    Ok(())
}
