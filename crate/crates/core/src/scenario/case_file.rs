//! JSON case files.
//!
//! ```json
//! { "omega_s": 60.0, "omega_min": 59.5, "omega_max": 60.5,
//!   "nodes": [ { "id": 1, "kind": "generator", "pg_init": 1.0, "pg_min": 0.0,
//!                "pg_max": 1.5, "damping_d": 0.02 },
//!              { "id": 2, "kind": "bus" },
//!              { "id": 3, "kind": "load", "pl_init": -1.0, "pl_max": -1.0 } ],
//!   "lines": [ { "id": 1, "from": 1, "to": 2, "x": 0.1, "f_max": 2.0 } ] }
//! ```
//!
//! Frequencies default to 60 / 59.5 / 60.5 Hz, `damping_d` to 0.02 pu,
//! `pg_min` to 0 and `pl_max` to `pl_init`. Unknown fields are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{
    validate_case, FrequencyBand, Generator, GridCase, Line, LineId, Load, Node, NodeId, NodeKind, ValidationReport,
    DEFAULT_DAMPING, DEFAULT_OMEGA_MAX, DEFAULT_OMEGA_MIN, DEFAULT_OMEGA_S,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindTag {
    Generator,
    Load,
    Bus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: u32,
    pub kind: KindTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pg_init: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pg_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pg_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pl_init: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pl_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineRecord {
    pub id: u32,
    pub from: u32,
    pub to: u32,
    pub x: f64,
    pub f_max: f64,
}

/// The on-disk document, before defaults are applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
    pub nodes: Vec<NodeRecord>,
    pub lines: Vec<LineRecord>,
}

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed case file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("node {node}: {message}")]
    Field { node: u32, message: String },
    #[error("case violates {count} invariant(s):\n{0}", count = .0.violations.len())]
    Invalid(ValidationReport),
}

fn required(r: &NodeRecord, value: Option<f64>, field: &str) -> Result<f64, CaseError> {
    value.ok_or_else(|| CaseError::Field {
        node: r.id,
        message: format!("{} needs `{field}`", kind_name(r.kind)),
    })
}

fn kind_name(k: KindTag) -> &'static str {
    match k {
        KindTag::Generator => "generator",
        KindTag::Load => "load",
        KindTag::Bus => "bus",
    }
}

fn reject(r: &NodeRecord, present: &[(&str, bool)]) -> Result<(), CaseError> {
    match present.iter().find(|(_, p)| *p) {
        Some((field, _)) => Err(CaseError::Field {
            node: r.id,
            message: format!("`{field}` does not apply to a {}", kind_name(r.kind)),
        }),
        None => Ok(()),
    }
}

impl CaseFile {
    /// Applies defaults and builds the case, without validating it.
    pub fn to_case(&self) -> Result<GridCase, CaseError> {
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for r in &self.nodes {
            let kind = match r.kind {
                KindTag::Generator => {
                    reject(r, &[("pl_init", r.pl_init.is_some()), ("pl_max", r.pl_max.is_some())])?;
                    NodeKind::Generator(Generator {
                        pg_init: required(r, r.pg_init, "pg_init")?,
                        pg_min: r.pg_min.unwrap_or(0.0),
                        pg_max: required(r, r.pg_max, "pg_max")?,
                        damping_d: r.damping_d.unwrap_or(DEFAULT_DAMPING),
                    })
                }
                KindTag::Load => {
                    reject(
                        r,
                        &[
                            ("pg_init", r.pg_init.is_some()),
                            ("pg_min", r.pg_min.is_some()),
                            ("pg_max", r.pg_max.is_some()),
                            ("damping_d", r.damping_d.is_some()),
                        ],
                    )?;
                    let pl_init = required(r, r.pl_init, "pl_init")?;
                    NodeKind::Load(Load {
                        pl_init,
                        pl_max: r.pl_max.unwrap_or(pl_init),
                    })
                }
                KindTag::Bus => {
                    reject(
                        r,
                        &[
                            ("pg_init", r.pg_init.is_some()),
                            ("pg_min", r.pg_min.is_some()),
                            ("pg_max", r.pg_max.is_some()),
                            ("damping_d", r.damping_d.is_some()),
                            ("pl_init", r.pl_init.is_some()),
                            ("pl_max", r.pl_max.is_some()),
                        ],
                    )?;
                    NodeKind::Bus
                }
            };
            nodes.push(Node { id: NodeId(r.id), kind });
        }
        let lines = self
            .lines
            .iter()
            .map(|l| Line {
                id: LineId(l.id),
                from: NodeId(l.from),
                to: NodeId(l.to),
                reactance_x: l.x,
                f_max: l.f_max,
            })
            .collect();
        let band = FrequencyBand {
            omega_s: self.omega_s.unwrap_or(DEFAULT_OMEGA_S),
            omega_min: self.omega_min.unwrap_or(DEFAULT_OMEGA_MIN),
            omega_max: self.omega_max.unwrap_or(DEFAULT_OMEGA_MAX),
        };
        Ok(GridCase::new(nodes, lines, band))
    }

    /// The document for a case, with every default spelled out.
    pub fn from_case(case: &GridCase) -> Self {
        let band = case.band();
        let nodes = case
            .nodes()
            .iter()
            .map(|n| {
                let mut r = NodeRecord {
                    id: n.id.0,
                    kind: KindTag::Bus,
                    pg_init: None,
                    pg_min: None,
                    pg_max: None,
                    damping_d: None,
                    pl_init: None,
                    pl_max: None,
                };
                match &n.kind {
                    NodeKind::Generator(g) => {
                        r.kind = KindTag::Generator;
                        r.pg_init = Some(g.pg_init);
                        r.pg_min = Some(g.pg_min);
                        r.pg_max = Some(g.pg_max);
                        r.damping_d = Some(g.damping_d);
                    }
                    NodeKind::Load(l) => {
                        r.kind = KindTag::Load;
                        r.pl_init = Some(l.pl_init);
                        r.pl_max = Some(l.pl_max);
                    }
                    NodeKind::Bus => {}
                }
                r
            })
            .collect();
        let lines = case
            .lines()
            .iter()
            .map(|l| LineRecord {
                id: l.id.0,
                from: l.from.0,
                to: l.to.0,
                x: l.reactance_x,
                f_max: l.f_max,
            })
            .collect();
        CaseFile {
            omega_s: Some(band.omega_s),
            omega_min: Some(band.omega_min),
            omega_max: Some(band.omega_max),
            nodes,
            lines,
        }
    }
}

/// Parses and validates a case document.
pub fn parse_case(text: &str) -> Result<GridCase, CaseError> {
    let file: CaseFile = serde_json::from_str(text)?;
    let case = file.to_case()?;
    let report = validate_case(&case);
    if report.is_clean() {
        Ok(case)
    } else {
        Err(CaseError::Invalid(report))
    }
}

pub fn load_case(path: impl AsRef<Path>) -> Result<GridCase, CaseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CaseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_case(&text)
}

/// Pretty-printed document; parsing it back yields an identical case.
pub fn case_to_json(case: &GridCase) -> String {
    serde_json::to_string_pretty(&CaseFile::from_case(case)).expect("case documents always serialize")
}

const CASE5: &str = include_str!("../../cases/case5.json");
const CASE30: &str = include_str!("../../cases/case30.json");
const TRANSIT: &str = include_str!("../../cases/transit.json");

/// Names accepted by [`bundled_case`].
pub const BUNDLED_CASES: [&str; 3] = ["case5", "case30", "transit"];

/// Raw text of a case shipped with the crate.
pub fn bundled_case_text(name: &str) -> Option<&'static str> {
    match name.trim_end_matches(".json") {
        "case5" => Some(CASE5),
        "case30" => Some(CASE30),
        "transit" => Some(TRANSIT),
        _ => None,
    }
}

pub fn bundled_case(name: &str) -> Option<GridCase> {
    bundled_case_text(name).map(|t| parse_case(t).expect("bundled cases are valid"))
}
