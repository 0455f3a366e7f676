use std::fmt;

use serde::Serialize;

use crate::interval::Interval;

/// What an independent variable stands for.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Origin {
    /// A model input, the same value at every step.
    Input { name: String },
    /// The value of a model input at one step.
    InputSample { name: String, step: usize },
    /// The initial value of a unit-delay state.
    State { name: String },
    /// A value refined by a guard, registered at an unrolled time step.
    Refinement { site: String, step: usize, branch: Branch },
    /// Anything built directly through the library API.
    Named { name: String },
}

impl Origin {
    pub fn named(name: impl Into<String>) -> Origin {
        Origin::Named { name: name.into() }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Input { name } => write!(f, "input {name}"),
            Origin::InputSample { name, step } => write!(f, "input {name} at step {step}"),
            Origin::State { name } => write!(f, "state {name}"),
            Origin::Refinement { site, step, branch } => {
                write!(f, "refinement of {site} ({branch} branch) at step {step}")
            }
            Origin::Named { name } => f.write_str(name),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Then,
    Else,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Then => "then",
            Branch::Else => "else",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndVar {
    pub origin: Origin,
    /// Current value `V_i` of the variable.
    pub range: Interval,
    /// Expansion point, frozen at registration.
    pub mid: f64,
    /// `V_i - mid_i`, rounded outward.
    deviation: Interval,
}

impl IndVar {
    pub fn deviation(&self) -> Interval {
        self.deviation
    }
}

/// The independent variables of one analysis. Indices are stable: the
/// registry only grows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IndRegistry {
    vars: Vec<IndVar>,
}

impl IndRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    /// Appends a variable holding `range` and returns its index. The
    /// expansion point is the midpoint of `range` (with the fallback for
    /// half-infinite ranges).
    pub fn register(&mut self, origin: Origin, range: Interval) -> usize {
        assert!(!range.is_bottom(), "cannot register an empty range");
        let mid = range.mid_or_fallback();
        let deviation = range
            .sub(&Interval::point(mid))
            .unwrap_or(Interval::TOP);
        self.vars.push(IndVar {
            origin,
            range,
            mid,
            deviation,
        });
        self.vars.len() - 1
    }

    pub fn get(&self, index: usize) -> Option<&IndVar> {
        self.vars.get(index)
    }

    pub fn iter(&self) -> impl Iterator<Item = &IndVar> {
        self.vars.iter()
    }

    pub fn range(&self, index: usize) -> Interval {
        self.vars[index].range
    }

    pub fn mid(&self, index: usize) -> f64 {
        self.vars[index].mid
    }

    pub fn deviation(&self, index: usize) -> Interval {
        self.vars[index].deviation
    }

    pub fn position(&self, origin: &Origin) -> Option<usize> {
        self.vars.iter().position(|v| &v.origin == origin)
    }
}
