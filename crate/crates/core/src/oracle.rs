//! Concrete execution with correctly rounded arithmetic, and soundness
//! fuzzing of analysis results against it.
//!
//! Binary32 operations are carried out in binary64 and rounded once more to
//! binary32. For `+ - * /` and square root this gives the correctly rounded
//! binary32 result, since binary64 has more than twice the precision plus
//! two bits. Double rounding is executed exactly: the result is rounded to a
//! 64-bit significand, then to binary64.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analyzer::{membership, Analysis, Env, InputMode, InstantLabel, Membership};
use crate::analyzer::input_range;
use crate::domain::{literal_in, Domain};
use crate::float::format_hex;
use crate::frontend::{BlockKind, Model, Num, Sign};
use crate::interval::Interval;
use crate::ir::{Expr, Lit, Program, Stmt};
use crate::profile::{Precision, PrecisionProfile};
use crate::slope::Origin;

type Big = dashu_float::FBig<dashu_float::round::mode::HalfEven, 2>;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{0} arithmetic cannot be executed concretely")]
    Unsupported(Precision),
    #[error("expected {expected} input values, got {got}")]
    InputArity { expected: usize, got: usize },
}

/// Correctly rounded arithmetic in one format.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Machine {
    kind: Kind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Single,
    Double,
    DoubleRounding,
}

#[derive(Clone, Copy)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

impl Machine {
    pub fn for_profile(profile: &PrecisionProfile) -> Result<Machine, OracleError> {
        match profile.precision {
            Precision::Single => Ok(Machine::single()),
            Precision::Double => Ok(Machine::double()),
            Precision::DoubleRounding => Ok(Machine::double_rounding()),
            Precision::Extended => Err(OracleError::Unsupported(Precision::Extended)),
        }
    }

    pub fn single() -> Machine {
        Machine { kind: Kind::Single }
    }

    pub fn double() -> Machine {
        Machine { kind: Kind::Double }
    }

    pub fn double_rounding() -> Machine {
        Machine {
            kind: Kind::DoubleRounding,
        }
    }

    pub fn round(self, x: f64) -> f64 {
        match self.kind {
            Kind::Single => x as f32 as f64,
            _ => x,
        }
    }

    pub fn lit(self, l: &Lit) -> f64 {
        match self.kind {
            Kind::Single => l.single as f64,
            _ => l.value,
        }
    }

    pub fn add(self, a: f64, b: f64) -> f64 {
        self.binary(Op::Add, a, b)
    }

    pub fn sub(self, a: f64, b: f64) -> f64 {
        self.binary(Op::Sub, a, b)
    }

    pub fn mul(self, a: f64, b: f64) -> f64 {
        self.binary(Op::Mul, a, b)
    }

    pub fn div(self, a: f64, b: f64) -> f64 {
        self.binary(Op::Div, a, b)
    }

    pub fn sqrt(self, a: f64) -> f64 {
        let r = a.sqrt();
        if self.kind != Kind::DoubleRounding || !normal(r) {
            return self.round(r);
        }
        twice(extended(a).sqrt())
    }

    fn binary(self, op: Op, a: f64, b: f64) -> f64 {
        let r = match op {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            Op::Div => a / b,
        };
        // specials, zeros and subnormals are left to binary64
        if self.kind != Kind::DoubleRounding || !normal(r) || !a.is_finite() || !b.is_finite() || b == 0.0 {
            return self.round(r);
        }
        let (x, y) = (extended(a), extended(b));
        twice(match op {
            Op::Add => &x + &y,
            Op::Sub => &x - &y,
            Op::Mul => &x * &y,
            Op::Div => &x / &y,
        })
    }

    pub fn eval(self, e: &Expr, vals: &[f64]) -> f64 {
        match e {
            Expr::Const(l) => self.lit(l),
            Expr::Var(v) => vals[v.index()],
            Expr::Neg(a) => -self.eval(a, vals),
            Expr::Add(a, b) => self.add(self.eval(a, vals), self.eval(b, vals)),
            Expr::Sub(a, b) => self.sub(self.eval(a, vals), self.eval(b, vals)),
            Expr::Mul(a, b) => self.mul(self.eval(a, vals), self.eval(b, vals)),
            Expr::Div(a, b) => self.div(self.eval(a, vals), self.eval(b, vals)),
            Expr::Sqrt(a) => self.sqrt(self.eval(a, vals)),
        }
    }
}

fn normal(x: f64) -> bool {
    x.is_normal()
}

/// `x` with a 64-bit significand.
fn extended(x: f64) -> Big {
    Big::try_from(x).expect("finite").with_precision(64).value()
}

/// The binary64 rounding of an extended result.
fn twice(x: Big) -> f64 {
    x.to_f64().value()
}

/// One concrete run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    /// Per step, the value of every variable after the body (NaN when never
    /// assigned).
    pub values: Vec<Vec<f64>>,
    /// Value of each guard's tested expression, by site and step.
    pub guards: HashMap<(String, usize), f64>,
}

/// Runs `steps` iterations. `inputs[k]` holds the input values of step `k`;
/// the last row is reused when fewer rows are given.
pub fn simulate_concrete(
    prog: &Program,
    inputs: &[Vec<f64>],
    machine: Machine,
    steps: usize,
) -> Result<Trace, OracleError> {
    if let Some(row) = inputs.iter().find(|r| r.len() != prog.inputs.len()) {
        return Err(OracleError::InputArity {
            expected: prog.inputs.len(),
            got: row.len(),
        });
    }
    if inputs.is_empty() && !prog.inputs.is_empty() {
        return Err(OracleError::InputArity {
            expected: prog.inputs.len(),
            got: 0,
        });
    }
    let mut vals = vec![f64::NAN; prog.var_count()];
    for s in &prog.states {
        vals[s.var.index()] = machine.lit(&s.init);
    }
    let mut trace = Trace {
        values: Vec::with_capacity(steps),
        guards: HashMap::new(),
    };
    for k in 0..steps {
        if let Some(row) = inputs.get(k).or(inputs.last()) {
            for (input, &x) in prog.inputs.iter().zip(row) {
                vals[input.var.index()] = x;
            }
        }
        exec(&prog.body, &mut vals, machine, k, &mut trace.guards);
        trace.values.push(vals.clone());
        let next: Vec<f64> = prog.states.iter().map(|s| vals[s.next.index()]).collect();
        for (s, x) in prog.states.iter().zip(next) {
            vals[s.var.index()] = x;
        }
    }
    Ok(trace)
}

fn exec(stmts: &[Stmt], vals: &mut [f64], m: Machine, step: usize, guards: &mut HashMap<(String, usize), f64>) {
    for s in stmts {
        match s {
            Stmt::Assign(v, e) => vals[v.index()] = m.eval(e, vals),
            Stmt::Guard {
                site,
                cond,
                then,
                else_,
            } => {
                let x = m.eval(&cond.expr, vals);
                guards.insert((site.clone(), step), x);
                if cond.op.holds(x, m.lit(&cond.c)) {
                    exec(then, vals, m, step, guards);
                } else {
                    exec(else_, vals, m, step, guards);
                }
            }
        }
    }
}

/// Direct block-by-block simulation of a model, independent of lowering.
/// Returns, per step, the value of every block by name.
pub fn simulate_model(model: &Model, inputs: &[Vec<f64>], machine: Machine) -> Vec<HashMap<String, f64>> {
    let by_name: HashMap<&str, &BlockKind> = model.blocks.iter().map(|b| (b.name.as_str(), &b.kind)).collect();
    let input_names: Vec<&str> = model
        .blocks
        .iter()
        .filter(|b| matches!(b.kind, BlockKind::Input { .. }))
        .map(|b| b.name.as_str())
        .collect();
    let mut state: HashMap<&str, f64> = model
        .blocks
        .iter()
        .filter_map(|b| match &b.kind {
            BlockKind::Delay { init, .. } => Some((b.name.as_str(), machine.lit(&init.lit))),
            _ => None,
        })
        .collect();
    let mut out = Vec::with_capacity(model.steps);
    for k in 0..model.steps {
        let row = inputs.get(k).or(inputs.last()).cloned().unwrap_or_default();
        let mut memo: HashMap<&str, f64> = input_names.iter().copied().zip(row).collect();
        memo.extend(state.iter().map(|(k, v)| (*k, *v)));
        for b in &model.blocks {
            block_value(&b.name, &by_name, &mut memo, machine);
        }
        for b in &model.blocks {
            if let BlockKind::Delay { src, .. } = &b.kind {
                state.insert(&b.name, memo[src.as_str()]);
            }
        }
        out.push(memo.into_iter().map(|(k, v)| (k.to_string(), v)).collect());
    }
    out
}

fn block_value<'a>(
    name: &'a str,
    blocks: &HashMap<&'a str, &'a BlockKind>,
    memo: &mut HashMap<&'a str, f64>,
    m: Machine,
) -> f64 {
    if let Some(&v) = memo.get(name) {
        return v;
    }
    let get = |n: &'a str, memo: &mut HashMap<&'a str, f64>| block_value(n, blocks, memo, m);
    let lit = |n: &Num| m.lit(&n.lit);
    let v = match blocks[name] {
        BlockKind::Input { .. } | BlockKind::Delay { .. } => unreachable!("seeded before evaluation"),
        BlockKind::Constant(c) => lit(c),
        BlockKind::Gain { k, src } => m.mul(lit(k), get(src, memo)),
        BlockKind::Sum { terms } => {
            let mut acc: Option<f64> = None;
            for (sign, s) in terms {
                let t = get(s, memo);
                acc = Some(match (acc, sign) {
                    (None, Sign::Plus) => t,
                    (None, Sign::Minus) => -t,
                    (Some(a), Sign::Plus) => m.add(a, t),
                    (Some(a), Sign::Minus) => m.sub(a, t),
                });
            }
            acc.expect("sum has inputs")
        }
        BlockKind::Product(srcs) => {
            let first = get(&srcs[0], memo);
            srcs[1..].iter().fold(first, |a, s| {
                let t = get(s, memo);
                m.mul(a, t)
            })
        }
        BlockKind::Div { num, den } => {
            let a = get(num, memo);
            let b = get(den, memo);
            m.div(a, b)
        }
        BlockKind::Sqrt(src) => m.sqrt(get(src, memo)),
        BlockKind::Switch {
            ctrl,
            op,
            c,
            then,
            else_,
        } => {
            let x = get(ctrl, memo);
            if op.holds(x, lit(c)) {
                get(then, memo)
            } else {
                get(else_, memo)
            }
        }
        BlockKind::Output(src) => get(src, memo),
    };
    memo.insert(name, v);
    v
}

#[derive(Clone, Debug)]
pub struct FuzzConfig {
    pub samples: usize,
    pub seed: u64,
    /// Concrete steps run past the unrolled ones to exercise the fixpoint.
    pub extra_steps: usize,
    /// Witnesses kept in the verdict.
    pub max_witnesses: usize,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            samples: 10_000,
            seed: 0,
            extra_steps: 20,
            max_witnesses: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub sample: usize,
    pub instant: InstantLabel,
    pub var: String,
    pub value: f64,
    pub value_hex: String,
    /// What the abstract value allows at this sample's point.
    pub allowed: String,
    /// Input values of the first step.
    pub inputs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub schema: u32,
    pub samples: usize,
    pub seed: u64,
    /// Concrete environments checked.
    pub checks: usize,
    pub violation_count: usize,
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn is_sound(&self) -> bool {
        self.violation_count == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serializes")
    }
}

/// Draws a value of the format in `range`, favouring the endpoints.
pub fn sample_in(rng: &mut impl Rng, range: Interval, profile: &PrecisionProfile) -> f64 {
    let big = profile.big_sigma().down();
    let lo = range.lo().max(-big);
    let hi = range.hi().min(big);
    let pick = match rng.gen_range(0..10) {
        0 => lo,
        1 => hi,
        2 => profile.successor(lo),
        3 => profile.predecessor(hi),
        _ => {
            let t: f64 = rng.gen();
            lo + t * (hi - lo)
        }
    };
    profile.round_nearest(pick).clamp(lo, hi)
}

/// Value of every independent variable in one concrete run.
fn point_of(reg: &crate::slope::IndRegistry, prog: &Program, inputs: &[Vec<f64>], trace: &Trace, m: Machine) -> Vec<f64> {
    let input_index = |name: &str| prog.inputs.iter().position(|i| prog.name(i.var) == name);
    reg.iter()
        .map(|v| {
            let x = match &v.origin {
                Origin::Input { name } => input_index(name).map(|i| inputs[0][i]),
                Origin::InputSample { name, step } => input_index(name).map(|i| inputs[*step][i]),
                Origin::State { name } => prog
                    .states
                    .iter()
                    .find(|s| prog.name(s.var) == name)
                    .map(|s| m.lit(&s.init)),
                Origin::Refinement { site, step, .. } => trace.guards.get(&(site.clone(), *step)).copied(),
                Origin::Named { .. } => None,
            };
            match x {
                Some(x) if !x.is_nan() => x.clamp(v.range.lo(), v.range.hi()),
                _ => v.mid,
            }
        })
        .collect()
}

struct SampleResult {
    checks: usize,
    violations: Vec<Violation>,
    count: usize,
}

/// Runs `cfg.samples` concrete executions and checks every environment
/// against the analysis at the matching instant.
pub fn fuzz_soundness<D>(
    d: &D,
    prog: &Program,
    analysis: &Analysis<D::Value>,
    cfg: &FuzzConfig,
) -> Result<Verdict, OracleError>
where
    D: Domain + Sync,
    D::Value: Send + Sync,
{
    let profile = d.profile();
    let machine = Machine::for_profile(profile)?;
    let ranges: Vec<Interval> = (0..prog.inputs.len()).map(|i| input_range(profile, prog, i)).collect();
    let steps = analysis.steps;
    let total = steps + if analysis.fixpoint.is_some() { cfg.extra_steps } else { 0 };
    let fixpoint_env = analysis.instant(InstantLabel::Fixpoint).map(|i| &i.env);
    let reg = &analysis.registry;
    let run = |i: usize| -> SampleResult {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let rows = match analysis.input_mode {
            InputMode::Constant => 1,
            InputMode::PerStep => total.max(1),
        };
        let inputs: Vec<Vec<f64>> = (0..rows)
            .map(|_| ranges.iter().map(|r| sample_in(&mut rng, *r, profile)).collect())
            .collect();
        let trace = simulate_concrete(prog, &inputs, machine, total).expect("arity checked");
        let point = point_of(reg, prog, &inputs, &trace, machine);
        let mut res = SampleResult {
            checks: 0,
            violations: Vec::new(),
            count: 0,
        };
        // the fixpoint instant is checked at every extra step; keep one
        // witness per variable and instant
        let mut seen = HashSet::new();
        for (k, vals) in trace.values.iter().enumerate() {
            let (label, env): (InstantLabel, &Env<D::Value>) = if k < steps {
                (analysis.instants[k].label, &analysis.instants[k].env)
            } else {
                match fixpoint_env {
                    Some(e) => (InstantLabel::Fixpoint, e),
                    None => break,
                }
            };
            res.checks += 1;
            let m = membership(d, env, reg, vals, &point);
            if m == Membership::Inside {
                continue;
            }
            res.count += 1;
            let key = match m {
                Membership::Outside(v) => (label.to_string(), Some(v)),
                _ => (label.to_string(), None),
            };
            if res.violations.len() < cfg.max_witnesses && seen.insert(key) {
                let (var, value, allowed) = match m {
                    Membership::Outside(v) => {
                        let a = env.get(v).expect("bound");
                        (prog.name(v).to_string(), vals[v.index()], d.enclosure_at(a, reg, &point).to_string())
                    }
                    _ => ("<all>".to_string(), f64::NAN, "unreachable".to_string()),
                };
                res.violations.push(Violation {
                    sample: i,
                    instant: label,
                    var,
                    value,
                    value_hex: format_hex(value),
                    allowed,
                    inputs: inputs[0].clone(),
                });
            }
        }
        res
    };
    let results: Vec<SampleResult> = (0..cfg.samples).into_par_iter().map(run).collect();
    let mut verdict = Verdict {
        schema: 1,
        samples: cfg.samples,
        seed: cfg.seed,
        checks: 0,
        violation_count: 0,
        violations: Vec::new(),
    };
    for r in results {
        verdict.checks += r.checks;
        verdict.violation_count += r.count;
        for v in r.violations {
            if verdict.violations.len() < cfg.max_witnesses {
                verdict.violations.push(v);
            }
        }
    }
    Ok(verdict)
}

/// Shrinks `i` by `fraction` of its width, half on each side. Infinite
/// intervals are returned unchanged.
pub fn shrink(i: Interval, fraction: f64) -> Interval {
    if i.is_bottom() || !i.is_finite() {
        return i;
    }
    let cut = i.width() * fraction / 2.0;
    Interval::new(i.lo() + cut, i.hi() - cut)
}

/// A copy of `analysis` in which the selected values are replaced by their
/// shrunk enclosures: every value when `target` is `None`, otherwise one
/// variable at one instant. Used to check that fuzzing can fail.
pub fn inject_fault<D: Domain>(
    d: &D,
    prog: &Program,
    analysis: &Analysis<D::Value>,
    target: Option<(InstantLabel, &str)>,
    fraction: f64,
) -> Analysis<D::Value> {
    let mut out = analysis.clone();
    for inst in out.instants.iter_mut() {
        let Env::Live(vals) = &mut inst.env else { continue };
        for (i, slot) in vals.iter_mut().enumerate() {
            let Some(v) = slot else { continue };
            let selected = match target {
                None => true,
                Some((label, name)) => inst.label == label && prog.name(crate::ir::VarId(i as u32)) == name,
            };
            if selected {
                let iv = d.to_interval(v, &analysis.registry);
                *v = d.abstract_interval(shrink(iv, fraction));
            }
        }
    }
    out
}

/// The literal `l` in the working format, as the analyzer sees it.
pub fn literal_value(profile: &PrecisionProfile, l: &Lit) -> Interval {
    literal_in(profile, l)
}
