//! Serializable summary of an analysis.

use std::fmt::Write as _;

use serde::Serialize;

use crate::domain::Domain;
use crate::float::{format_directed, format_hex};
use crate::interval::Interval;
use crate::ir::{Program, VarId};
use crate::profile::Precision;
use crate::slope::Origin;

use super::{Analysis, Diagnostic, FixpointStats, InputMode, InstantLabel};

pub const SCHEMA: u32 = 1;

/// Digits used in JSON; enough to identify any binary64 value.
const JSON_DIGITS: usize = 17;
const TEXT_DIGITS: usize = 9;

/// An interval printed with outward-rounded decimals and exact hex bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bound {
    #[serde(skip)]
    pub interval: Interval,
    pub bottom: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo_hex: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi_hex: Option<String>,
}

impl Bound {
    pub fn new(i: Interval) -> Bound {
        if i.is_bottom() {
            return Bound {
                interval: i,
                bottom: true,
                lo: None,
                hi: None,
                lo_hex: None,
                hi_hex: None,
            };
        }
        Bound {
            interval: i,
            bottom: false,
            lo: Some(format_directed(i.lo(), JSON_DIGITS, false)),
            hi: Some(format_directed(i.hi(), JSON_DIGITS, true)),
            lo_hex: Some(format_hex(i.lo())),
            hi_hex: Some(format_hex(i.hi())),
        }
    }
}

/// Interval with `digits` significant digits, rounded outward.
pub fn show(i: Interval, digits: usize) -> String {
    if i.is_bottom() {
        "unreachable".to_string()
    } else {
        format!(
            "[{}, {}]",
            format_directed(i.lo(), digits, false),
            format_directed(i.hi(), digits, true)
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IndependentRecord {
    pub index: usize,
    pub origin: Origin,
    pub range: Bound,
}

#[derive(Clone, Debug, Serialize)]
pub struct VarRecord {
    pub name: String,
    pub bound: Bound,
}

#[derive(Clone, Debug, Serialize)]
pub struct InstantRecord {
    pub instant: InstantLabel,
    pub reachable: bool,
    pub vars: Vec<VarRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputRecord {
    pub name: String,
    /// Hull over the unrolled steps.
    pub unrolled: Bound,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixpoint: Option<Bound>,
    /// Hull over every instant.
    pub overall: Bound,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub domain: String,
    pub precision: Precision,
    pub steps: usize,
    pub input_mode: InputMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixpoint: Option<FixpointStats>,
    pub independents: Vec<IndependentRecord>,
    pub outputs: Vec<OutputRecord>,
    pub instants: Vec<InstantRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Report {
    pub fn new<D: Domain>(d: &D, prog: &Program, a: &Analysis<D::Value>) -> Report {
        let independents = a
            .registry
            .iter()
            .enumerate()
            .map(|(index, v)| IndependentRecord {
                index,
                origin: v.origin.clone(),
                range: Bound::new(v.range),
            })
            .collect();
        let instants = a
            .instants
            .iter()
            .map(|inst| InstantRecord {
                instant: inst.label,
                reachable: !inst.env.is_bottom(),
                vars: inst
                    .env
                    .iter()
                    .map(|(v, x)| VarRecord {
                        name: prog.name(v).to_string(),
                        bound: Bound::new(d.to_interval(x, &a.registry)),
                    })
                    .collect(),
            })
            .collect();
        let outputs = prog
            .outputs
            .iter()
            .map(|&v| output_record(d, prog, a, v))
            .collect();
        Report {
            schema: SCHEMA,
            domain: a.domain.to_string(),
            precision: a.profile.precision,
            steps: a.steps,
            input_mode: a.input_mode,
            fixpoint: a.fixpoint,
            independents,
            outputs,
            instants,
            diagnostics: a.diagnostics.clone(),
        }
    }

    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.kind.is_error())
    }

    pub fn output(&self, name: &str) -> Option<&OutputRecord> {
        self.outputs.iter().find(|o| o.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "domain {}, precision {}, {} unrolled step{}",
            self.domain,
            self.precision,
            self.steps,
            if self.steps == 1 { "" } else { "s" }
        );
        for o in &self.outputs {
            let _ = writeln!(out, "output {}:", o.name);
            if self.steps > 0 {
                let _ = writeln!(
                    out,
                    "  steps 0..{:<6} {}",
                    self.steps - 1,
                    show(o.unrolled.interval, TEXT_DIGITS)
                );
            }
            if let Some(f) = &o.fixpoint {
                let _ = writeln!(out, "  fixpoint        {}", show(f.interval, TEXT_DIGITS));
            }
        }
        if let Some(f) = &self.fixpoint {
            let _ = writeln!(
                out,
                "fixpoint: {} iteration{}, {} widening{}{}",
                f.iterations,
                if f.iterations == 1 { "" } else { "s" },
                f.widenings,
                if f.widenings == 1 { "" } else { "s" },
                if f.converged { "" } else { " (capped)" }
            );
        }
        if self.diagnostics.is_empty() {
            let _ = writeln!(out, "no diagnostics");
        } else {
            for d in &self.diagnostics {
                let _ = writeln!(out, "{d}");
            }
        }
        out
    }
}

fn output_record<D: Domain>(d: &D, prog: &Program, a: &Analysis<D::Value>, v: VarId) -> OutputRecord {
    let unrolled = a.unrolled_bound(d, v);
    let fixpoint = a
        .fixpoint
        .map(|_| a.interval_at(d, InstantLabel::Fixpoint, v));
    let overall = fixpoint.map_or(unrolled, |f| unrolled.join(&f));
    OutputRecord {
        name: prog.name(v).to_string(),
        unrolled: Bound::new(unrolled),
        fixpoint: fixpoint.map(Bound::new),
        overall: Bound::new(overall),
    }
}
