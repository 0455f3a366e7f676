//! Block-diagram models: a small textual language for discrete-time dataflow
//! diagrams and its lowering to the loop-body [`Program`].
//!
//! ```text
//! x  = input(0.71, 1.35)
//! x1 = delay(x, 0)
//! y  = sum("+-", x, x1)
//! out = output(y)
//! simulate steps=25 precision=single
//! ```

mod parse;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::ir::{CmpOp, Cond, Expr, Lit, Program, Stmt};
use crate::profile::Precision;

pub use parse::{census, parse_model, ParseError, ParseErrors};

/// A literal together with the text it was written as.
#[derive(Clone, Debug, PartialEq)]
pub struct Num {
    pub text: String,
    pub lit: Lit,
}

impl Num {
    pub fn parse(text: &str) -> Option<Num> {
        Lit::parse(text).map(|lit| Num {
            text: text.to_string(),
            lit,
        })
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BlockKind {
    Input { lo: Num, hi: Num },
    Constant(Num),
    /// `k * src`.
    Gain { k: Num, src: String },
    /// Left-associated signed sum, in the written order.
    Sum { terms: Vec<(Sign, String)> },
    Product(Vec<String>),
    Div { num: String, den: String },
    Sqrt(String),
    /// `if ctrl op c { then } else { else_ }`.
    Switch {
        ctrl: String,
        op: CmpOp,
        c: Num,
        then: String,
        else_: String,
    },
    /// Unit delay: the value `src` had at the previous step, `init` at the
    /// first one.
    Delay { src: String, init: Num },
    Output(String),
}

impl BlockKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            BlockKind::Input { .. } => "input",
            BlockKind::Constant(_) => "constant",
            BlockKind::Gain { .. } => "gain",
            BlockKind::Sum { .. } => "sum",
            BlockKind::Product(_) => "product",
            BlockKind::Div { .. } => "div",
            BlockKind::Sqrt(_) => "sqrt",
            BlockKind::Switch { .. } => "switch",
            BlockKind::Delay { .. } => "delay",
            BlockKind::Output(_) => "output",
        }
    }

    /// Referenced block names, with repetitions.
    pub fn sources(&self) -> Vec<&str> {
        match self {
            BlockKind::Input { .. } | BlockKind::Constant(_) => vec![],
            BlockKind::Gain { src, .. }
            | BlockKind::Sqrt(src)
            | BlockKind::Delay { src, .. }
            | BlockKind::Output(src) => vec![src],
            BlockKind::Sum { terms } => terms.iter().map(|(_, s)| s.as_str()).collect(),
            BlockKind::Product(srcs) => srcs.iter().map(String::as_str).collect(),
            BlockKind::Div { num, den } => vec![num, den],
            BlockKind::Switch { ctrl, then, else_, .. } => vec![ctrl, then, else_],
        }
    }

    /// Sources whose current-step value is needed. A delay reads its source
    /// only when the step ends.
    fn same_step_sources(&self) -> Vec<&str> {
        match self {
            BlockKind::Delay { .. } => vec![],
            k => k.sources(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Block {
    pub name: String,
    pub kind: BlockKind,
    /// Source line, ignored by equality.
    pub line: usize,
}

impl PartialEq for Block {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.kind == other.kind
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub blocks: Vec<Block>,
    pub steps: usize,
    pub precision: Precision,
}

impl Model {
    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }
}

/// Groups consecutive equal names as `name*count`.
fn compress<'a>(names: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<(&str, usize)> = Vec::new();
    for n in names {
        match out.last_mut() {
            Some((last, c)) if *last == n => *c += 1,
            _ => out.push((n, 1)),
        }
    }
    out.into_iter()
        .map(|(n, c)| if c == 1 { n.to_string() } else { format!("{n}*{c}") })
        .collect()
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kw = self.keyword();
        match self {
            BlockKind::Input { lo, hi } => write!(f, "{kw}({lo}, {hi})"),
            BlockKind::Constant(c) => write!(f, "{kw}({c})"),
            BlockKind::Gain { k, src } => write!(f, "{kw}({k}, {src})"),
            BlockKind::Sum { terms } => {
                let args = compress(terms.iter().map(|(_, s)| s.as_str())).join(", ");
                if terms.iter().all(|(s, _)| *s == Sign::Plus) {
                    write!(f, "{kw}({args})")
                } else {
                    let signs: String = terms
                        .iter()
                        .map(|(s, _)| if *s == Sign::Plus { '+' } else { '-' })
                        .collect();
                    // runs of one source may mix signs, so they are not merged
                    let args: Vec<&str> = terms.iter().map(|(_, s)| s.as_str()).collect();
                    write!(f, "{kw}(\"{signs}\", {})", args.join(", "))
                }
            }
            BlockKind::Product(srcs) => {
                write!(f, "{kw}({})", compress(srcs.iter().map(String::as_str)).join(", "))
            }
            BlockKind::Div { num, den } => write!(f, "{kw}({num}, {den})"),
            BlockKind::Sqrt(src) | BlockKind::Output(src) => write!(f, "{kw}({src})"),
            BlockKind::Switch {
                ctrl,
                op,
                c,
                then,
                else_,
            } => write!(f, "{kw}({ctrl}, {}, {c}, {then}, {else_})", op.symbol()),
            BlockKind::Delay { src, init } => write!(f, "{kw}({src}, {init})"),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.blocks {
            writeln!(f, "{} = {}", b.name, b.kind)?;
        }
        writeln!(f, "simulate steps={} precision={}", self.steps, self.precision)
    }
}

/// Order in which the non-delay blocks are computed within a step:
/// dependencies first, ties broken by declaration order. On a delay-free
/// cycle, returns the cycle as a closed path of block names.
pub fn schedule(model: &Model) -> Result<Vec<usize>, Vec<String>> {
    let index: HashMap<&str, usize> = model
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| (b.name.as_str(), i))
        .collect();
    let n = model.blocks.len();
    let deps: Vec<BTreeSet<usize>> = model
        .blocks
        .iter()
        .map(|b| {
            b.kind
                .same_step_sources()
                .into_iter()
                .filter_map(|s| index.get(s).copied())
                .collect()
        })
        .collect();
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pending: Vec<usize> = deps.iter().map(BTreeSet::len).collect();
    for (i, ds) in deps.iter().enumerate() {
        for &d in ds {
            users[d].push(i);
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &u in &users[i] {
            pending[u] -= 1;
            if pending[u] == 0 {
                ready.insert(u);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // walk unscheduled dependencies until a block repeats
    let start = (0..n).find(|&i| pending[i] > 0).expect("unscheduled block");
    let mut path = vec![start];
    loop {
        let cur = *path.last().expect("non-empty");
        let next = deps[cur]
            .iter()
            .copied()
            .find(|&d| pending[d] > 0)
            .expect("a blocked block has a blocked dependency");
        if let Some(pos) = path.iter().position(|&p| p == next) {
            let mut cycle: Vec<String> = path[pos..]
                .iter()
                .rev()
                .map(|&i| model.blocks[i].name.clone())
                .collect();
            cycle.push(cycle[0].clone());
            return Err(cycle);
        }
        path.push(next);
    }
}

/// Lowers a checked model. Each block becomes a variable of the same name.
pub fn lower(model: &Model) -> Program {
    let mut p = Program::new(model.precision, model.steps);
    for b in &model.blocks {
        p.var(&b.name);
    }
    for b in &model.blocks {
        match &b.kind {
            BlockKind::Input { lo, hi } => {
                p.add_input(&b.name, lo.lit, hi.lit);
            }
            BlockKind::Delay { src, init } => {
                p.add_state(&b.name, init.lit, src);
            }
            _ => {}
        }
    }
    let order = schedule(model).expect("model was checked for cycles");
    for i in order {
        let b = &model.blocks[i];
        let v = p.var(&b.name);
        let var = |p: &mut Program, s: &str| Expr::var(p.var(s));
        let stmt = match &b.kind {
            BlockKind::Input { .. } | BlockKind::Delay { .. } => continue,
            BlockKind::Constant(c) => Stmt::Assign(v, Expr::Const(c.lit)),
            BlockKind::Gain { k, src } => Stmt::Assign(v, Expr::mul(Expr::Const(k.lit), var(&mut p, src))),
            BlockKind::Sum { terms } => {
                let mut acc: Option<Expr> = None;
                for (sign, s) in terms {
                    let t = var(&mut p, s);
                    acc = Some(match (acc, sign) {
                        (None, Sign::Plus) => t,
                        (None, Sign::Minus) => Expr::neg(t),
                        (Some(a), Sign::Plus) => Expr::add(a, t),
                        (Some(a), Sign::Minus) => Expr::sub(a, t),
                    });
                }
                Stmt::Assign(v, acc.expect("sum has inputs"))
            }
            BlockKind::Product(srcs) => {
                let mut it = srcs.iter();
                let first = var(&mut p, it.next().expect("product has inputs"));
                let e = it.fold(first, |a, s| Expr::mul(a, var(&mut p, s)));
                Stmt::Assign(v, e)
            }
            BlockKind::Div { num, den } => {
                Stmt::Assign(v, Expr::div(var(&mut p, num), var(&mut p, den)))
            }
            BlockKind::Sqrt(src) => Stmt::Assign(v, Expr::sqrt(var(&mut p, src))),
            BlockKind::Switch {
                ctrl,
                op,
                c,
                then,
                else_,
            } => Stmt::Guard {
                site: b.name.clone(),
                cond: Cond {
                    expr: var(&mut p, ctrl),
                    op: *op,
                    c: c.lit,
                },
                then: vec![Stmt::Assign(v, var(&mut p, then))],
                else_: vec![Stmt::Assign(v, var(&mut p, else_))],
            },
            BlockKind::Output(src) => {
                p.outputs.push(v);
                Stmt::Assign(v, var(&mut p, src))
            }
        };
        p.body.push(stmt);
    }
    p
}

/// Parses and lowers in one go.
pub fn compile(text: &str) -> Result<(Model, Program), ParseErrors> {
    let model = parse_model(text)?;
    let program = lower(&model);
    Ok((model, program))
}
