use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::{GridCase, LineId, NodeId, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    DuplicateNodeId,
    DuplicateLineId,
    UnknownEndpoint,
    SelfLoop,
    NonPositiveReactance,
    NonPositiveCapacity,
    FrequencyOrder,
    /// Generators and loads attach through exactly one line.
    LeafDegree,
    /// ...and that line ends at a bus.
    LeafNotOnBus,
    GeneratorLimits,
    NegativeDamping,
    LoadSign,
    LoadLimits,
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "type", content = "id", rename_all = "snake_case")]
pub enum Subject {
    Case,
    Node(NodeId),
    Line(LineId),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub subject: Subject,
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.subject {
            Subject::Case => write!(f, "case: {}", self.message),
            Subject::Node(id) => write!(f, "node {id}: {}", self.message),
            Subject::Line(id) => write!(f, "line {id}: {}", self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_rule(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    fn push(&mut self, subject: Subject, rule: Rule, message: impl Into<String>) {
        self.violations.push(Violation {
            subject,
            rule,
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every structural and numeric invariant of a case. Violations are
/// data: an empty report means the case is usable.
pub fn validate_case(case: &GridCase) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let band = case.band();

    if ![band.omega_s, band.omega_min, band.omega_max]
        .iter()
        .all(|v| v.is_finite())
    {
        rep.push(Subject::Case, Rule::NonFinite, "frequencies must be finite");
    } else if !(band.omega_min < band.omega_s && band.omega_s < band.omega_max) {
        rep.push(
            Subject::Case,
            Rule::FrequencyOrder,
            format!(
                "need omega_min < omega_s < omega_max, got {} / {} / {}",
                band.omega_min, band.omega_s, band.omega_max
            ),
        );
    }

    let mut seen = HashSet::new();
    for n in case.nodes() {
        let s = Subject::Node(n.id);
        if !seen.insert(n.id) {
            rep.push(s, Rule::DuplicateNodeId, "duplicate node id");
        }
        match &n.kind {
            NodeKind::Generator(g) => {
                if ![g.pg_init, g.pg_min, g.pg_max, g.damping_d]
                    .iter()
                    .all(|v| v.is_finite())
                {
                    rep.push(s, Rule::NonFinite, "generator parameters must be finite");
                } else {
                    if !(g.pg_min <= g.pg_init && g.pg_init <= g.pg_max) || g.pg_init < 0.0 {
                        rep.push(
                            s,
                            Rule::GeneratorLimits,
                            format!(
                                "need 0 <= pg_init and pg_min <= pg_init <= pg_max, got {} <= {} <= {}",
                                g.pg_min, g.pg_init, g.pg_max
                            ),
                        );
                    }
                    if g.damping_d < 0.0 {
                        rep.push(s, Rule::NegativeDamping, "damping must be non-negative");
                    }
                }
            }
            NodeKind::Load(l) => {
                if !(l.pl_init.is_finite() && l.pl_max.is_finite()) {
                    rep.push(s, Rule::NonFinite, "load parameters must be finite");
                } else {
                    if l.pl_init > 0.0 {
                        rep.push(s, Rule::LoadSign, format!("pl_init must be <= 0, got {}", l.pl_init));
                    }
                    if l.pl_max > l.pl_init {
                        rep.push(
                            s,
                            Rule::LoadLimits,
                            format!("need pl_max <= pl_init, got {} > {}", l.pl_max, l.pl_init),
                        );
                    }
                }
            }
            NodeKind::Bus => {}
        }
    }

    let mut seen = HashSet::new();
    for l in case.lines() {
        let s = Subject::Line(l.id);
        if !seen.insert(l.id) {
            rep.push(s, Rule::DuplicateLineId, "duplicate line id");
        }
        for end in [l.from, l.to] {
            if !case.contains_node(end) {
                rep.push(s, Rule::UnknownEndpoint, format!("endpoint {end} does not exist"));
            }
        }
        if l.from == l.to {
            rep.push(s, Rule::SelfLoop, "line starts and ends at the same node");
        }
        if !(l.reactance_x.is_finite() && l.f_max.is_finite()) {
            rep.push(s, Rule::NonFinite, "line parameters must be finite");
        } else {
            if l.reactance_x <= 0.0 {
                rep.push(
                    s,
                    Rule::NonPositiveReactance,
                    format!("reactance must be > 0, got {}", l.reactance_x),
                );
            }
            if l.f_max <= 0.0 {
                rep.push(
                    s,
                    Rule::NonPositiveCapacity,
                    format!("capacity must be > 0, got {}", l.f_max),
                );
            }
        }
    }

    for n in case.nodes() {
        if n.is_bus() {
            continue;
        }
        let s = Subject::Node(n.id);
        let deg = case.degree(n.id);
        if deg != 1 {
            rep.push(
                s,
                Rule::LeafDegree,
                format!("{} must connect through exactly one line, has {deg}", n.kind.label()),
            );
            continue;
        }
        let line = case.incident_lines(n.id).next().unwrap();
        let other = line.other_end(n.id);
        if case.node(other).is_some_and(|o| !o.is_bus()) {
            rep.push(
                s,
                Rule::LeafNotOnBus,
                format!("{} must attach to a bus, not node {other}", n.kind.label()),
            );
        }
    }

    rep
}
