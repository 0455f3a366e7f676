//! Abstract interpretation of a [`Program`]: the simulation loop is unrolled
//! for a fixed number of steps, then iterated to a post-fixpoint standing for
//! every later instant.

mod env;
pub mod report;

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::domain::{literal_in, Domain};
use crate::interval::{DomainError, Interval, Thresholds};
use crate::ir::{CmpOp, Cond, Expr, Program, Stmt, VarId};
use crate::profile::PrecisionProfile;
use crate::slope::{Branch, IndRegistry, Origin};

pub use env::Env;
pub use report::Report;

/// How model inputs relate across time steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputMode {
    /// One independent variable per input, shared by every step: each input
    /// holds one unknown value for the whole run.
    #[default]
    Constant,
    /// A fresh independent variable per input and unrolled step; inputs may
    /// change arbitrarily over time.
    PerStep,
}

#[derive(Clone, Debug)]
pub struct Options {
    /// Overrides the program's step count.
    pub unroll: Option<usize>,
    /// Join iterations before widening starts.
    pub widen_delay: usize,
    /// Compute the extra instant covering every step after the unrolled ones.
    pub fixpoint: bool,
    pub max_iterations: usize,
    /// Defaults to the profile's threshold set.
    pub thresholds: Option<Thresholds>,
    pub inputs: InputMode,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            unroll: None,
            widen_delay: 3,
            fixpoint: true,
            max_iterations: 10_000,
            thresholds: None,
            inputs: InputMode::Constant,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("variable `{0}` is read before it is assigned")]
    Unbound(String),
    #[error("input `{0}` has an empty range")]
    EmptyInput(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    DivisionByZero,
    InvalidSqrt,
    Indeterminate,
    Overflow,
    /// A guard on a compound expression could not refine any variable.
    LostPrecision,
    /// The fixpoint iteration hit its cap and states were set to top.
    IterationCap,
}

impl DiagnosticKind {
    /// Possible run-time errors, as opposed to notes about precision.
    pub fn is_error(self) -> bool {
        matches!(
            self,
            DiagnosticKind::DivisionByZero
                | DiagnosticKind::InvalidSqrt
                | DiagnosticKind::Indeterminate
                | DiagnosticKind::Overflow
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            DiagnosticKind::DivisionByZero => "division-by-zero",
            DiagnosticKind::InvalidSqrt => "invalid-sqrt",
            DiagnosticKind::Indeterminate => "indeterminate",
            DiagnosticKind::Overflow => "overflow",
            DiagnosticKind::LostPrecision => "lost-precision",
            DiagnosticKind::IterationCap => "iteration-cap",
        }
    }
}

impl From<DomainError> for DiagnosticKind {
    fn from(e: DomainError) -> Self {
        match e {
            DomainError::DivisionByZero => DiagnosticKind::DivisionByZero,
            DomainError::InvalidSqrt => DiagnosticKind::InvalidSqrt,
            DomainError::Indeterminate => DiagnosticKind::Indeterminate,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "step")]
pub enum InstantLabel {
    Step(usize),
    /// Every step after the unrolled ones.
    Fixpoint,
}

impl fmt::Display for InstantLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstantLabel::Step(k) => write!(f, "step {k}"),
            InstantLabel::Fixpoint => f.write_str("fixpoint"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    /// The assigned variable, or the guard site.
    pub subject: String,
    /// First instant at which it was raised.
    pub instant: InstantLabel,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = if self.kind.is_error() { "error" } else { "note" };
        write!(
            f,
            "{level}[{}] {} ({}): {}",
            self.kind.name(),
            self.subject,
            self.instant,
            self.message
        )
    }
}

#[derive(Clone, Debug)]
pub struct Instant<V> {
    pub label: InstantLabel,
    /// Environment after the body has run, before the state update.
    pub env: Env<V>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FixpointStats {
    /// Loop-body evaluations after the unrolled steps.
    pub iterations: usize,
    pub widenings: usize,
    /// False when the iteration cap was reached.
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct Analysis<V> {
    pub domain: &'static str,
    pub profile: PrecisionProfile,
    pub steps: usize,
    pub input_mode: InputMode,
    pub registry: IndRegistry,
    pub instants: Vec<Instant<V>>,
    pub diagnostics: Vec<Diagnostic>,
    pub fixpoint: Option<FixpointStats>,
}

impl<V: Clone> Analysis<V> {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.kind.is_error())
    }

    pub fn instant(&self, label: InstantLabel) -> Option<&Instant<V>> {
        self.instants.iter().find(|i| i.label == label)
    }

    /// Enclosure of `v` at one instant; bottom when unreachable or unbound.
    pub fn interval_at<D: Domain<Value = V>>(&self, d: &D, label: InstantLabel, v: VarId) -> Interval {
        self.instant(label)
            .and_then(|i| i.env.get(v))
            .map_or(Interval::BOTTOM, |x| d.to_interval(x, &self.registry))
    }

    /// Hull of `v` over the unrolled steps.
    pub fn unrolled_bound<D: Domain<Value = V>>(&self, d: &D, v: VarId) -> Interval {
        self.instants
            .iter()
            .filter(|i| matches!(i.label, InstantLabel::Step(_)))
            .filter_map(|i| i.env.get(v))
            .map(|x| d.to_interval(x, &self.registry))
            .fold(Interval::BOTTOM, |a, b| a.join(&b))
    }
}

/// Checks that every variable is assigned before it is read on every path.
pub fn validate(prog: &Program) -> Result<(), AnalysisError> {
    fn check(prog: &Program, e: &Expr, bound: &HashSet<VarId>) -> Result<(), AnalysisError> {
        let mut reads = Vec::new();
        e.vars(&mut reads);
        match reads.into_iter().find(|v| !bound.contains(v)) {
            Some(v) => Err(AnalysisError::Unbound(prog.name(v).to_string())),
            None => Ok(()),
        }
    }
    fn block(prog: &Program, stmts: &[Stmt], bound: &mut HashSet<VarId>) -> Result<(), AnalysisError> {
        for s in stmts {
            match s {
                Stmt::Assign(v, e) => {
                    check(prog, e, bound)?;
                    bound.insert(*v);
                }
                Stmt::Guard { cond, then, else_, .. } => {
                    check(prog, &cond.expr, bound)?;
                    let mut t = bound.clone();
                    let mut f = bound.clone();
                    block(prog, then, &mut t)?;
                    block(prog, else_, &mut f)?;
                    bound.extend(t.intersection(&f).copied());
                }
            }
        }
        Ok(())
    }
    let mut bound: HashSet<VarId> = prog.inputs.iter().map(|i| i.var).collect();
    bound.extend(prog.states.iter().map(|s| s.var));
    block(prog, &prog.body, &mut bound)?;
    for s in &prog.states {
        if !bound.contains(&s.next) {
            return Err(AnalysisError::Unbound(prog.name(s.next).to_string()));
        }
    }
    Ok(())
}

/// Range of input `i` rounded into the working format.
pub fn input_range(profile: &PrecisionProfile, prog: &Program, i: usize) -> Interval {
    let input = &prog.inputs[i];
    Interval::new(literal_in(profile, &input.lo).lo(), literal_in(profile, &input.hi).hi())
}

fn assigned_in(stmts: &[Stmt], v: VarId) -> bool {
    stmts.iter().any(|s| match s {
        Stmt::Assign(w, _) => *w == v,
        Stmt::Guard { then, else_, .. } => assigned_in(then, v) || assigned_in(else_, v),
    })
}

struct Engine<'a, D: Domain> {
    d: &'a D,
    prog: &'a Program,
    mode: InputMode,
    reg: IndRegistry,
    /// Registry index of each input in constant mode.
    input_ids: Vec<usize>,
    input_ranges: Vec<Interval>,
    diagnostics: Vec<Diagnostic>,
    seen: HashSet<(DiagnosticKind, String)>,
    instant: InstantLabel,
}

impl<D: Domain> Engine<'_, D> {
    fn note(&mut self, kind: DiagnosticKind, subject: &str, message: String) {
        if self.seen.insert((kind, subject.to_string())) {
            self.diagnostics.push(Diagnostic {
                kind,
                subject: subject.to_string(),
                instant: self.instant,
                message,
            });
        }
    }

    fn eval(&self, e: &Expr, env: &Env<D::Value>) -> Result<D::Value, DomainError> {
        let d = self.d;
        let reg = &self.reg;
        Ok(match e {
            Expr::Const(l) => d.constant(l),
            Expr::Var(v) => env.get(*v).cloned().unwrap_or_else(|| d.top()),
            Expr::Neg(a) => d.neg(&self.eval(a, env)?),
            Expr::Add(a, b) => d.add(&self.eval(a, env)?, &self.eval(b, env)?, reg)?,
            Expr::Sub(a, b) => d.sub(&self.eval(a, env)?, &self.eval(b, env)?, reg)?,
            Expr::Mul(a, b) => d.mul(&self.eval(a, env)?, &self.eval(b, env)?, reg)?,
            Expr::Div(a, b) => d.div(&self.eval(a, env)?, &self.eval(b, env)?, reg)?,
            Expr::Sqrt(a) => d.sqrt(&self.eval(a, env)?, reg)?,
        })
    }

    /// Evaluates `e`, turning domain errors into diagnostics and top.
    fn eval_checked(&mut self, e: &Expr, env: &Env<D::Value>, subject: &str) -> D::Value {
        match self.eval(e, env) {
            Ok(v) => {
                let i = self.d.to_interval(&v, &self.reg);
                if !i.is_finite() && self.operands_finite(e, env) {
                    self.note(
                        DiagnosticKind::Overflow,
                        subject,
                        format!("value may overflow: {i}"),
                    );
                }
                v
            }
            Err(err) => {
                self.note(err.into(), subject, err.to_string());
                self.d.top()
            }
        }
    }

    fn operands_finite(&self, e: &Expr, env: &Env<D::Value>) -> bool {
        let mut reads = Vec::new();
        e.vars(&mut reads);
        reads.iter().all(|v| {
            env.get(*v)
                .is_some_and(|x| self.d.to_interval(x, &self.reg).is_finite())
        })
    }

    /// Constraints for the two branches of `cond` given the tested value's
    /// enclosure. `None` marks a branch that cannot be taken.
    fn guard_ranges(&self, cond: &Cond, tested: Interval) -> (Option<Interval>, Option<Interval>) {
        let p = self.d.profile();
        let c = literal_in(p, &cond.c);
        // a NaN takes the branch where the comparison is false
        let may_nan = tested.is_top();
        let inf = f64::INFINITY;
        let nan_side = |i: Interval| Some(if may_nan { Interval::TOP } else { i });
        match cond.op {
            CmpOp::Ge => (
                Some(Interval::new(c.lo(), inf)),
                nan_side(Interval::new(-inf, p.predecessor(c.hi()))),
            ),
            CmpOp::Gt => (
                Some(Interval::new(p.successor(c.lo()), inf)),
                nan_side(Interval::new(-inf, c.hi())),
            ),
            CmpOp::Ne => {
                let then = if may_nan || !c.is_point() {
                    Some(Interval::TOP)
                } else if tested == c {
                    None
                } else if tested.lo() == c.lo() {
                    Some(Interval::new(p.successor(c.lo()), inf))
                } else if tested.hi() == c.hi() {
                    Some(Interval::new(-inf, p.predecessor(c.hi())))
                } else {
                    Some(Interval::TOP)
                };
                (then, Some(c))
            }
        }
    }

    fn exec(&mut self, stmts: &[Stmt], env: &mut Env<D::Value>, step: Option<usize>) {
        for s in stmts {
            if env.is_bottom() {
                return;
            }
            match s {
                Stmt::Assign(v, e) => {
                    let name = self.prog.name(*v).to_string();
                    let val = self.eval_checked(e, env, &name);
                    env.set(*v, val);
                }
                Stmt::Guard {
                    site,
                    cond,
                    then,
                    else_,
                } => self.exec_guard(site, cond, then, else_, env, step),
            }
        }
    }

    fn exec_guard(
        &mut self,
        site: &str,
        cond: &Cond,
        then: &[Stmt],
        else_: &[Stmt],
        env: &mut Env<D::Value>,
        step: Option<usize>,
    ) {
        let tested = self.eval_checked(&cond.expr, env, site);
        let tested_iv = self.d.to_interval(&tested, &self.reg);
        let (rt, re) = self.guard_ranges(cond, tested_iv);
        let var = cond.expr.as_var();
        let mut branches = [(Branch::Then, rt, env.clone()), (Branch::Else, re, env.clone())];
        for (branch, range, benv) in branches.iter_mut() {
            let Some(range) = *range else {
                *benv = Env::Bottom;
                continue;
            };
            let origin = match (var, step) {
                (Some(_), Some(k)) => Some(Origin::Refinement {
                    site: site.to_string(),
                    step: k,
                    branch: *branch,
                }),
                _ => None,
            };
            match self.d.refine(&tested, range, &mut self.reg, origin) {
                None => *benv = Env::Bottom,
                Some(refined) => match var {
                    Some(x) => benv.set(x, refined),
                    None => {
                        if !range.is_top() && refined != tested {
                            self.note(
                                DiagnosticKind::LostPrecision,
                                site,
                                "guard on a compound expression refines no variable".into(),
                            );
                        }
                    }
                },
            }
        }
        let [(_, _, mut env_t), (_, _, mut env_e)] = branches;
        self.exec(then, &mut env_t, step);
        self.exec(else_, &mut env_e, step);
        let mut joined = env_t.join(&env_e, self.d);
        if let Some(x) = var {
            if !joined.is_bottom() && !assigned_in(then, x) && !assigned_in(else_, x) {
                if let Some(before) = env.get(x) {
                    joined.set(x, before.clone());
                }
            }
        }
        *env = joined;
    }

    fn bind_inputs(&mut self, env: &mut Env<D::Value>, step: Option<usize>) {
        for (i, input) in self.prog.inputs.iter().enumerate() {
            let val = match (self.mode, step) {
                (InputMode::Constant, _) => self.d.independent(&self.reg, self.input_ids[i]),
                (InputMode::PerStep, Some(k)) => {
                    let origin = Origin::InputSample {
                        name: self.prog.name(input.var).to_string(),
                        step: k,
                    };
                    let l = self.reg.register(origin, self.input_ranges[i]);
                    self.d.independent(&self.reg, l)
                }
                (InputMode::PerStep, None) => self.d.abstract_interval(self.input_ranges[i]),
            };
            env.set(input.var, val);
        }
    }

    /// One loop iteration. Returns the environment after the body; `env`
    /// holds the updated states afterwards.
    fn step(&mut self, env: &mut Env<D::Value>, step: Option<usize>) -> Env<D::Value> {
        if env.is_bottom() {
            return Env::Bottom;
        }
        self.bind_inputs(env, step);
        let prog = self.prog;
        self.exec(&prog.body, env, step);
        let snapshot = env.clone();
        if !env.is_bottom() {
            let next: Vec<_> = self
                .prog
                .states
                .iter()
                .map(|s| env.get(s.next).cloned().unwrap_or_else(|| self.d.top()))
                .collect();
            for (s, v) in self.prog.states.iter().zip(next) {
                env.set(s.var, v);
            }
        }
        snapshot
    }

    fn states_leq(&self, a: &Env<D::Value>, b: &Env<D::Value>) -> bool {
        match (a, b) {
            (Env::Bottom, _) => true,
            (_, Env::Bottom) => false,
            _ => self.prog.states.iter().all(|s| match (a.get(s.var), b.get(s.var)) {
                (Some(x), Some(y)) => self.d.leq(x, y),
                (None, _) => true,
                (Some(_), None) => false,
            }),
        }
    }

    fn widen_states(&self, prev: &Env<D::Value>, next: &Env<D::Value>, t: &Thresholds) -> Env<D::Value> {
        if prev.is_bottom() {
            return next.clone();
        }
        let mut out = next.clone();
        for s in &self.prog.states {
            if let (Some(x), Some(y)) = (prev.get(s.var), next.get(s.var)) {
                out.set(s.var, self.d.widen(x, y, t));
            }
        }
        out
    }

    fn fixpoint(
        &mut self,
        start: Env<D::Value>,
        opts: &Options,
        thresholds: &Thresholds,
    ) -> (Env<D::Value>, FixpointStats) {
        self.instant = InstantLabel::Fixpoint;
        let mut x = start;
        let mut stats = FixpointStats {
            iterations: 0,
            widenings: 0,
            converged: true,
        };
        loop {
            stats.iterations += 1;
            let mut next = x.clone();
            let body = self.step(&mut next, None);
            if self.states_leq(&next, &x) {
                return (body, stats);
            }
            if stats.iterations >= opts.max_iterations {
                stats.converged = false;
                self.note(
                    DiagnosticKind::IterationCap,
                    "loop",
                    format!("no fixpoint after {} iterations; states set to top", stats.iterations),
                );
                for s in &self.prog.states {
                    x.set(s.var, self.d.top());
                }
                let mut last = x.clone();
                return (self.step(&mut last, None), stats);
            }
            let joined = x.join(&next, self.d);
            x = if stats.iterations > opts.widen_delay {
                stats.widenings += 1;
                self.widen_states(&x, &joined, thresholds)
            } else {
                joined
            };
        }
    }
}

pub fn analyze<D: Domain>(d: &D, prog: &Program, opts: &Options) -> Result<Analysis<D::Value>, AnalysisError> {
    validate(prog)?;
    let profile = *d.profile();
    let steps = opts.unroll.unwrap_or(prog.steps);
    let thresholds = opts
        .thresholds
        .clone()
        .unwrap_or_else(|| Thresholds::for_profile(&profile));
    let mut input_ranges = Vec::new();
    for (i, input) in prog.inputs.iter().enumerate() {
        let r = input_range(&profile, prog, i);
        if r.is_bottom() {
            return Err(AnalysisError::EmptyInput(prog.name(input.var).to_string()));
        }
        input_ranges.push(r);
    }
    let mut eng = Engine {
        d,
        prog,
        mode: opts.inputs,
        reg: IndRegistry::new(),
        input_ids: Vec::new(),
        input_ranges,
        diagnostics: Vec::new(),
        seen: HashSet::new(),
        instant: InstantLabel::Step(0),
    };
    if opts.inputs == InputMode::Constant {
        for (i, input) in prog.inputs.iter().enumerate() {
            let origin = Origin::Input {
                name: prog.name(input.var).to_string(),
            };
            let l = eng.reg.register(origin, eng.input_ranges[i]);
            eng.input_ids.push(l);
        }
    }
    let mut env = Env::new(prog.var_count());
    for s in &prog.states {
        let origin = Origin::State {
            name: prog.name(s.var).to_string(),
        };
        let l = eng.reg.register(origin, literal_in(&profile, &s.init));
        env.set(s.var, d.independent(&eng.reg, l));
    }
    let mut instants = Vec::with_capacity(steps + 1);
    for k in 0..steps {
        eng.instant = InstantLabel::Step(k);
        let snapshot = eng.step(&mut env, Some(k));
        instants.push(Instant {
            label: eng.instant,
            env: snapshot,
        });
    }
    let fixpoint = if opts.fixpoint {
        let (body, stats) = eng.fixpoint(env, opts, &thresholds);
        instants.push(Instant {
            label: InstantLabel::Fixpoint,
            env: body,
        });
        Some(stats)
    } else {
        None
    };
    Ok(Analysis {
        domain: d.name(),
        profile,
        steps,
        input_mode: opts.inputs,
        registry: eng.reg,
        instants,
        diagnostics: eng.diagnostics,
        fixpoint,
    })
}

/// Outcome of checking one concrete environment against an abstract one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Inside,
    /// The abstract environment is empty.
    Bottom,
    /// This variable's concrete value is not described.
    Outside(VarId),
}

/// Checks every bound variable: `concrete` is indexed by variable and
/// `point` gives the value of each independent variable.
pub fn membership<D: Domain>(
    d: &D,
    env: &Env<D::Value>,
    reg: &IndRegistry,
    concrete: &[f64],
    point: &[f64],
) -> Membership {
    if env.is_bottom() {
        return Membership::Bottom;
    }
    for (v, val) in env.iter() {
        if let Some(&x) = concrete.get(v.index()) {
            if !d.contains(val, reg, x, point) {
                return Membership::Outside(v);
            }
        }
    }
    Membership::Inside
}

pub fn gamma_member<D: Domain>(
    d: &D,
    env: &Env<D::Value>,
    reg: &IndRegistry,
    concrete: &[f64],
    point: &[f64],
) -> bool {
    membership(d, env, reg, concrete, point) == Membership::Inside
}
