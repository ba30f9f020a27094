//! Run reports and their serialization.
//!
//! Reports go through `serde_json::Value`, whose maps are ordered, so keys
//! come out sorted. Floats use the shortest representation that parses back
//! to the same bits.

use std::path::Path;

use qnet_core::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub inputs: Value,
    pub outputs: Value,
    /// Tool version, mesh and every tolerance the run used.
    pub versions: Value,
    pub wall_time: Option<f64>,
}

impl RunReport {
    pub fn to_value(&self) -> Value {
        let mut v = json!({
            "command": self.command,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "versions": self.versions,
        });
        if let Some(t) = self.wall_time {
            v["wall_time"] = json!(t);
        }
        v
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.to_value()).expect("values always serialize");
        text.push('\n');
        text
    }
}

/// A file written next to the report when `--out` is given.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// Everything a subcommand produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: RunReport,
    pub artifacts: Vec<Artifact>,
    /// 0, or 3 when the run finished but did not reach its goal.
    pub code: i32,
}

pub fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types always serialize")
}

pub fn versions(mesh: Option<usize>, tolerances: Value) -> Value {
    json!({ "tool": TOOL_VERSION, "mesh_per_edge": mesh, "tolerances": tolerances })
}

/// CSV text from a header and rows of numbers.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of ascii numbers is utf-8"))
}

pub fn write_outcome(outcome: &Outcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), outcome.report.to_json())?;
    for a in &outcome.artifacts {
        std::fs::write(dir.join(&a.name), &a.contents)?;
    }
    Ok(())
}

/// Exit code for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => 4,
        Error::Parse { .. }
        | Error::Validation(_)
        | Error::DisconnectedGraph(_)
        | Error::DuplicateEdgeId(_)
        | Error::UnknownVertexReference { .. }
        | Error::MeshMismatch { .. }
        | Error::MeshTooCoarse { .. }
        | Error::UnsupportedFamily(_)
        | Error::StepTooLarge { .. }
        | Error::NotNormalized(_)
        | Error::ZeroFunction => 2,
        _ => 3,
    }
}
