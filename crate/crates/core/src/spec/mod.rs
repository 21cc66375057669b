//! Application graph and app slice specification.
//!
//! A spec document is a single JSON object with two top-level keys: `app`
//! (functions, their instances and the instance graph) and `appSlice`
//! (application-level requirements plus per-function network and compute
//! requirements). Field names follow the camelCase names of the schema
//! exactly; unknown fields are rejected.

pub mod rtm;
mod units;
mod validate;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use rtm::canonical_rtm_spec;
pub use units::{Bytes, GuaranteeDuration, Millicpu};
pub use validate::{validate_against_app, validate_app, validate_slice};

/// Compute tier of the fabric. The derived ordering (device < edge < cloud)
/// is the tie-break used when tiers cost the same.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TierId {
    Device,
    Edge,
    Cloud,
}

impl TierId {
    pub const ALL: [TierId; 3] = [TierId::Device, TierId::Edge, TierId::Cloud];

    pub fn as_str(self) -> &'static str {
        match self {
            TierId::Device => "device",
            TierId::Edge => "edge",
            TierId::Cloud => "cloud",
        }
    }
}

impl fmt::Display for TierId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Requested placement for a function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TierChoice {
    Device,
    Edge,
    Cloud,
    #[default]
    Auto,
}

impl TierChoice {
    pub fn pinned(self) -> Option<TierId> {
        match self {
            TierChoice::Device => Some(TierId::Device),
            TierChoice::Edge => Some(TierId::Edge),
            TierChoice::Cloud => Some(TierId::Cloud),
            TierChoice::Auto => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AppSpec {
    pub app_name: String,
    pub functions: Vec<FunctionDef>,
    #[serde(default)]
    pub edges: Vec<InstanceEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FunctionDef {
    pub name: String,
    pub instances: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct InstanceEdge {
    pub from_instance: String,
    pub to_instance: String,
}

impl InstanceEdge {
    pub fn new(from: &str, to: &str) -> Self {
        InstanceEdge {
            from_instance: from.to_string(),
            to_instance: to.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AppLevelSpec {
    /// End-to-end latency in milliseconds.
    pub latency: f64,
    /// Overall bandwidth in Mbps.
    pub bandwidth: f64,
    pub device_count: u64,
    pub reliability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct NetworkReq {
    /// Maximum tolerable latency of the link feeding this function, in ms.
    pub latency: f64,
    #[serde(rename = "throughputGBR")]
    pub throughput_gbr: f64,
    #[serde(rename = "throughputMBR")]
    pub throughput_mbr: f64,
    pub packet_error_rate: f64,
    #[serde(default)]
    pub duration: GuaranteeDuration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ComputeReq {
    #[serde(rename = "minCPUCores")]
    pub min_cpu: Millicpu,
    #[serde(rename = "maxCPUCores")]
    pub max_cpu: Millicpu,
    pub min_memory: Bytes,
    pub max_memory: Bytes,
    #[serde(default)]
    pub tier: TierChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSliceSpec {
    pub network: NetworkReq,
    pub compute: ComputeReq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AppSliceSpec {
    pub application: AppLevelSpec,
    pub per_function: BTreeMap<String, FunctionSliceSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct SpecDocument {
    app: AppSpec,
    app_slice: AppSliceSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

/// A path-addressed finding. Paths are JSON pointers into the source document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub path: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(path: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn warning(path: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{level}: {}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("validation error at {path}: {message}")]
    Validation { path: String, message: String },
}

impl SpecError {
    pub fn path(&self) -> Option<&str> {
        match self {
            SpecError::Syntax { .. } => None,
            SpecError::Schema { path, .. } | SpecError::Validation { path, .. } => Some(path),
        }
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        match self {
            SpecError::Syntax { .. } => Diagnostic::error("", self.to_string()),
            SpecError::Schema { path, message } | SpecError::Validation { path, message } => {
                Diagnostic::error(path.clone(), message.clone())
            }
        }
    }
}

/// Escape one JSON pointer reference token.
pub fn pointer_token(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

pub(crate) fn pointer_from_path(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for segment in path.iter() {
        match segment {
            Segment::Seq { index } => {
                out.push('/');
                out.push_str(&index.to_string());
            }
            Segment::Map { key } => {
                out.push('/');
                out.push_str(&pointer_token(key));
            }
            Segment::Enum { variant } => {
                out.push('/');
                out.push_str(&pointer_token(variant));
            }
            Segment::Unknown => {}
        }
    }
    out
}

/// Deserialize `value` into `T`, reporting a JSON-pointer path on failure.
/// `prefix` is prepended to the path (empty for a whole document).
pub(crate) fn from_value_at<T: serde::de::DeserializeOwned>(
    value: &Value,
    prefix: &str,
) -> Result<T, SpecError> {
    serde_path_to_error::deserialize(value).map_err(|err| {
        let path = format!("{prefix}{}", pointer_from_path(err.path()));
        SpecError::Schema {
            path,
            message: err.into_inner().to_string(),
        }
    })
}

pub(crate) fn syntax_error(err: &serde_json::Error) -> SpecError {
    SpecError::Syntax {
        line: err.line(),
        column: err.column(),
        message: err.to_string(),
    }
}

/// Parse a spec document into default-filled, validated specs.
pub fn parse_spec(document: &str) -> Result<(AppSpec, AppSliceSpec), SpecError> {
    let value: Value = serde_json::from_str(document).map_err(|e| syntax_error(&e))?;
    parse_spec_value(&value)
}

/// Same as [`parse_spec`] for an already-parsed JSON value.
pub fn parse_spec_value(value: &Value) -> Result<(AppSpec, AppSliceSpec), SpecError> {
    let doc: SpecDocument = from_value_at(value, "")?;
    let diagnostics = validate_app(&doc.app)
        .into_iter()
        .chain(validate_slice(&doc.app_slice));
    if let Some(first) = diagnostics.into_iter().find(Diagnostic::is_error) {
        return Err(SpecError::Validation {
            path: first.path,
            message: first.message,
        });
    }
    Ok((doc.app, doc.app_slice))
}

/// Render specs back into the document format accepted by [`parse_spec`].
pub fn to_document(app: &AppSpec, slice: &AppSliceSpec) -> Value {
    serde_json::json!({
        "app": app,
        "appSlice": slice,
    })
}

pub fn to_document_string(app: &AppSpec, slice: &AppSliceSpec) -> String {
    serde_json::to_string_pretty(&to_document(app, slice)).expect("spec serializes")
}

impl AppSpec {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// Name of the function owning `instance`.
    pub fn function_of_instance(&self, instance: &str) -> Option<&str> {
        self.functions
            .iter()
            .find(|f| f.instances.iter().any(|i| i == instance))
            .map(|f| f.name.as_str())
    }

    /// Function-level edges (deduplicated), derived from the instance graph.
    pub fn function_edges(&self) -> BTreeSet<(String, String)> {
        self.edges
            .iter()
            .filter_map(|e| {
                let from = self.function_of_instance(&e.from_instance)?;
                let to = self.function_of_instance(&e.to_instance)?;
                (from != to).then(|| (from.to_string(), to.to_string()))
            })
            .collect()
    }

    /// Functions feeding `name`, in declaration order.
    pub fn upstream_of(&self, name: &str) -> Vec<String> {
        let edges = self.function_edges();
        self.functions
            .iter()
            .filter(|f| edges.contains(&(f.name.clone(), name.to_string())))
            .map(|f| f.name.clone())
            .collect()
    }

    /// Functions reachable from `name` (excluding itself).
    pub fn descendants_of(&self, name: &str) -> BTreeSet<String> {
        let edges = self.function_edges();
        let mut seen = BTreeSet::new();
        let mut stack = vec![name.to_string()];
        while let Some(cur) = stack.pop() {
            for (from, to) in &edges {
                if *from == cur && seen.insert(to.clone()) {
                    stack.push(to.clone());
                }
            }
        }
        seen
    }

    /// Topological order of functions. Among ready functions the one declared
    /// first goes first. Returns `None` if the function graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<String>> {
        let index: BTreeMap<&str, usize> = self
            .functions
            .iter()
            .enumerate()
            .map(|(i, f)| (f.name.as_str(), i))
            .collect();
        let edges = self.function_edges();
        let mut indegree = vec![0usize; self.functions.len()];
        for (_, to) in &edges {
            indegree[index[to.as_str()]] += 1;
        }
        let mut ready: BinaryHeap<Reverse<usize>> = indegree
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == 0)
            .map(|(i, _)| Reverse(i))
            .collect();
        let mut order = Vec::with_capacity(self.functions.len());
        while let Some(Reverse(i)) = ready.pop() {
            let name = &self.functions[i].name;
            order.push(name.clone());
            for (from, to) in &edges {
                if from == name {
                    let j = index[to.as_str()];
                    indegree[j] -= 1;
                    if indegree[j] == 0 {
                        ready.push(Reverse(j));
                    }
                }
            }
        }
        (order.len() == self.functions.len()).then_some(order)
    }
}
