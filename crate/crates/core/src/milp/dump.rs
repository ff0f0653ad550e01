//! Plain-text model dump in the common LP file layout.

use std::fmt::Write;

use super::{MilpModel, VarId};

fn coef(out: &mut String, first: bool, c: f64, name: &str) {
    let sign = if c < 0.0 {
        "-"
    } else if first {
        ""
    } else {
        "+"
    };
    let mag = c.abs();
    let sep = if first && sign.is_empty() { "" } else { " " };
    if mag == 1.0 {
        let _ = write!(out, "{sign}{sep}{name}");
    } else {
        let _ = write!(out, "{sign}{sep}{mag} {name}");
    }
}

fn expr(model: &MilpModel, terms: &[(VarId, f64)]) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    let mut s = String::new();
    for (i, &(v, c)) in terms.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        coef(&mut s, i == 0, c, &model.var(v).name);
    }
    s
}

fn bound(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

impl MilpModel {
    /// Renders the model for inspection by external solvers or people.
    pub fn to_lp_string(&self) -> String {
        let mut out = String::from("Minimize\n obj: ");
        out.push_str(&expr(self, self.objective()));
        out.push_str("\nSubject To\n");
        for c in self.constraints() {
            let _ = writeln!(out, " {}: {} {} {}", c.name, expr(self, &c.terms), c.relation, c.rhs);
        }
        out.push_str("Bounds\n");
        for v in self.vars() {
            if v.binary && v.lower == 0.0 && v.upper == 1.0 {
                continue;
            }
            if v.lower == v.upper {
                let _ = writeln!(out, " {} = {}", v.name, v.lower);
            } else {
                let _ = writeln!(out, " {} <= {} <= {}", bound(v.lower), v.name, bound(v.upper));
            }
        }
        let bins: Vec<&str> = self
            .vars()
            .iter()
            .filter(|v| v.binary)
            .map(|v| v.name.as_str())
            .collect();
        if !bins.is_empty() {
            out.push_str("Binaries\n");
            for b in bins {
                let _ = writeln!(out, " {b}");
            }
        }
        out.push_str("End\n");
        out
    }
}
