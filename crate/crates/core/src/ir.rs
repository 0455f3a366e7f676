//! Program representation shared by the frontend, the analyzer and the
//! concrete executor.
//!
//! A program is one simulation-loop body run `steps` times:
//! inputs are read, `body` computes every block output, then all states take
//! their next values at once.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::float;
use crate::profile::Precision;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A numeric literal, kept both as its nearest binary64 and its nearest
/// binary32 value (rounding the binary64 to binary32 can differ from rounding
/// the decimal directly).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lit {
    pub value: f64,
    pub single: f32,
    /// The binary64 value equals the written number.
    pub exact: bool,
}

impl Lit {
    pub fn parse(text: &str) -> Option<Lit> {
        let value = float::parse_float(text)?;
        let t = text.trim().to_ascii_lowercase();
        let hex = t.trim_start_matches(['+', '-']).starts_with("0x");
        let single = if hex || value.is_infinite() {
            value as f32
        } else {
            t.parse::<f32>().ok()?
        };
        let exact = hex || value.is_infinite() || (value.fract() == 0.0 && value.abs() <= 2f64.powi(53));
        Some(Lit { value, single, exact })
    }

    /// A literal standing for exactly `value`.
    pub fn exact(value: f64) -> Lit {
        Lit {
            value,
            single: value as f32,
            exact: true,
        }
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(Lit),
    Var(VarId),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Sqrt(Box<Expr>),
}

impl Expr {
    pub fn num(x: f64) -> Expr {
        Expr::Const(Lit::exact(x))
    }

    pub fn var(v: VarId) -> Expr {
        Expr::Var(v)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Expr) -> Expr {
        Expr::Neg(Box::new(a))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn sqrt(a: Expr) -> Expr {
        Expr::Sqrt(Box::new(a))
    }

    pub fn as_var(&self) -> Option<VarId> {
        match self {
            Expr::Var(v) => Some(*v),
            _ => None,
        }
    }

    /// Variables read, in evaluation order.
    pub fn vars(&self, out: &mut Vec<VarId>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => out.push(*v),
            Expr::Neg(a) | Expr::Sqrt(a) => a.vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum CmpOp {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "!=")]
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
            CmpOp::Ne => "!=",
        }
    }

    pub fn parse(s: &str) -> Option<CmpOp> {
        match s {
            ">=" => Some(CmpOp::Ge),
            ">" => Some(CmpOp::Gt),
            "!=" => Some(CmpOp::Ne),
            _ => None,
        }
    }

    pub fn holds(self, x: f64, c: f64) -> bool {
        match self {
            CmpOp::Ge => x >= c,
            CmpOp::Gt => x > c,
            CmpOp::Ne => x != c,
        }
    }
}

/// `expr op c`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cond {
    pub expr: Expr,
    pub op: CmpOp,
    pub c: Lit,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Assign(VarId, Expr),
    Guard {
        /// Name of the originating block, used in diagnostics.
        site: String,
        cond: Cond,
        then: Vec<Stmt>,
        else_: Vec<Stmt>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Input {
    pub var: VarId,
    pub lo: Lit,
    pub hi: Lit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub var: VarId,
    pub init: Lit,
    /// Value taken at the end of each step.
    pub next: VarId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    names: Vec<String>,
    index: HashMap<String, VarId>,
    pub inputs: Vec<Input>,
    pub states: Vec<State>,
    pub body: Vec<Stmt>,
    pub outputs: Vec<VarId>,
    pub steps: usize,
    pub precision: Precision,
}

impl Program {
    pub fn new(precision: Precision, steps: usize) -> Program {
        Program {
            names: Vec::new(),
            index: HashMap::new(),
            inputs: Vec::new(),
            states: Vec::new(),
            body: Vec::new(),
            outputs: Vec::new(),
            steps,
            precision,
        }
    }

    /// Interns `name`.
    pub fn var(&mut self, name: &str) -> VarId {
        if let Some(v) = self.index.get(name) {
            return *v;
        }
        let v = VarId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), v);
        v
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v.index()]
    }

    pub fn var_count(&self) -> usize {
        self.names.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = (VarId, &str)> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| (VarId(i as u32), n.as_str()))
    }

    pub fn add_input(&mut self, name: &str, lo: Lit, hi: Lit) -> VarId {
        let var = self.var(name);
        self.inputs.push(Input { var, lo, hi });
        var
    }

    pub fn add_state(&mut self, name: &str, init: Lit, next: &str) -> VarId {
        let var = self.var(name);
        let next = self.var(next);
        self.states.push(State { var, init, next });
        var
    }

    pub fn assign(&mut self, name: &str, e: Expr) -> VarId {
        let v = self.var(name);
        self.body.push(Stmt::Assign(v, e));
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_keep_both_roundings() {
        let l = Lit::parse("0.7").unwrap();
        assert_eq!(l.value, 0.7);
        assert_eq!(l.single, 0.7f32);
        assert!(!l.exact);
        assert!(Lit::parse("2").unwrap().exact);
        assert!(Lit::parse("0x1.8p-1").unwrap().exact);
        assert!(Lit::parse("abc").is_none());
    }

    #[test]
    fn interning_is_stable() {
        let mut p = Program::new(Precision::Double, 1);
        let a = p.var("a");
        let b = p.var("b");
        assert_eq!(p.var("a"), a);
        assert_ne!(a, b);
        assert_eq!(p.name(b), "b");
        assert_eq!(p.lookup("c"), None);
    }
}
