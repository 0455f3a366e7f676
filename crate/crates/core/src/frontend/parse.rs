//! Line-oriented parser for the block-diagram language.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::ir::{CmpOp, Lit};
use crate::profile::Precision;

use super::{Block, BlockKind, Model, Num, Sign};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based; 0 when the error concerns the whole file.
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    fn at(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            f.write_str(&self.message)
        } else {
            write!(f, "{}:{}: {}", self.line, self.col, self.message)
        }
    }
}

impl std::error::Error for ParseError {}

/// Every problem found in a file, in source order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseErrors(pub Vec<ParseError>);

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseErrors {}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Str(String),
    Op(String),
    Punct(char),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    col: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let starts_number = c.is_ascii_digit()
            || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit))
            || ((c == '-' || c == '+')
                && chars
                    .get(i + 1)
                    .is_some_and(|d| d.is_ascii_digit() || *d == '.' || *d == 'i'));
        if starts_number {
            let start = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let exp_sign = (d == '+' || d == '-') && matches!(chars[i - 1], 'e' | 'E' | 'p' | 'P');
                if d.is_ascii_alphanumeric() || d == '.' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            out.push(Token {
                tok: Tok::Num(chars[start..i].iter().collect()),
                col,
            });
        } else if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                col,
            });
        } else if c == '"' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                i += 1;
            }
            if i == chars.len() {
                return Err(ParseError::at(lineno, col, "unterminated string"));
            }
            out.push(Token {
                tok: Tok::Str(chars[start..i].iter().collect()),
                col,
            });
            i += 1;
        } else if matches!(c, '>' | '!') {
            let two = chars.get(i + 1) == Some(&'=');
            let text = if two { format!("{c}=") } else { c.to_string() };
            if text == "!" {
                return Err(ParseError::at(lineno, col, "expected `!=`"));
            }
            i += text.len();
            out.push(Token { tok: Tok::Op(text), col });
        } else if matches!(c, '(' | ')' | ',' | '=' | '*') {
            out.push(Token { tok: Tok::Punct(c), col });
            i += 1;
        } else {
            return Err(ParseError::at(lineno, col, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

/// A parsed call argument.
#[derive(Clone, Debug)]
enum Arg {
    Num(String),
    Ref { name: String, count: usize },
    Str(String),
    Op(String),
}

#[derive(Clone, Debug)]
struct Located<T> {
    value: T,
    col: usize,
}

fn parse_args(toks: &[Token], lineno: usize) -> Result<(Vec<Located<Arg>>, usize), ParseError> {
    // toks starts just after `(`; returns the args and the index after `)`
    let mut args = Vec::new();
    let mut i = 0;
    if matches!(toks.first(), Some(Token { tok: Tok::Punct(')'), .. })) {
        return Ok((args, 1));
    }
    loop {
        let Some(t) = toks.get(i) else {
            return Err(ParseError::at(lineno, 0, "missing `)`"));
        };
        let col = t.col;
        let arg = match &t.tok {
            Tok::Num(s) => Arg::Num(s.clone()),
            Tok::Str(s) => Arg::Str(s.clone()),
            Tok::Op(s) => Arg::Op(s.clone()),
            Tok::Ident(name) if matches!(name.as_str(), "inf" | "infinity") => Arg::Num(name.clone()),
            Tok::Ident(name) => {
                let mut count = 1;
                if matches!(toks.get(i + 1), Some(Token { tok: Tok::Punct('*'), .. })) {
                    match toks.get(i + 2) {
                        Some(Token { tok: Tok::Num(n), col }) => {
                            count = n
                                .parse::<usize>()
                                .ok()
                                .filter(|&c| c > 0)
                                .ok_or_else(|| ParseError::at(lineno, *col, "repeat count must be a positive integer"))?;
                            i += 2;
                        }
                        _ => return Err(ParseError::at(lineno, col, "expected a repeat count after `*`")),
                    }
                }
                Arg::Ref {
                    name: name.clone(),
                    count,
                }
            }
            Tok::Punct(c) => return Err(ParseError::at(lineno, col, format!("unexpected `{c}`"))),
        };
        args.push(Located { value: arg, col });
        i += 1;
        match toks.get(i) {
            Some(Token { tok: Tok::Punct(','), .. }) => i += 1,
            Some(Token { tok: Tok::Punct(')'), .. }) => return Ok((args, i + 1)),
            Some(t) => return Err(ParseError::at(lineno, t.col, "expected `,` or `)`")),
            None => return Err(ParseError::at(lineno, 0, "missing `)`")),
        }
    }
}

fn num(arg: &Located<Arg>, lineno: usize) -> Result<Num, ParseError> {
    match &arg.value {
        Arg::Num(text) => Lit::parse(text)
            .map(|lit| Num {
                text: text.clone(),
                lit,
            })
            .ok_or_else(|| ParseError::at(lineno, arg.col, format!("invalid number `{text}`"))),
        _ => Err(ParseError::at(lineno, arg.col, "expected a number")),
    }
}

fn single_ref(arg: &Located<Arg>, lineno: usize) -> Result<String, ParseError> {
    match &arg.value {
        Arg::Ref { name, count: 1 } => Ok(name.clone()),
        Arg::Ref { .. } => Err(ParseError::at(lineno, arg.col, "repetition is only allowed in sum and product")),
        _ => Err(ParseError::at(lineno, arg.col, "expected a block name")),
    }
}

fn refs(args: &[Located<Arg>], lineno: usize) -> Result<Vec<String>, ParseError> {
    let mut out = Vec::new();
    for a in args {
        match &a.value {
            Arg::Ref { name, count } => out.extend(std::iter::repeat_n(name.clone(), *count)),
            _ => return Err(ParseError::at(lineno, a.col, "expected a block name")),
        }
    }
    Ok(out)
}

fn arity(kind: &str, args: &[Located<Arg>], n: std::ops::RangeInclusive<usize>, lineno: usize, col: usize) -> Result<(), ParseError> {
    if n.contains(&args.len()) {
        Ok(())
    } else if n.start() == n.end() {
        Err(ParseError::at(lineno, col, format!("{kind} takes {} argument(s), got {}", n.start(), args.len())))
    } else {
        Err(ParseError::at(
            lineno,
            col,
            format!("{kind} takes {} to {} arguments, got {}", n.start(), n.end(), args.len()),
        ))
    }
}

fn block_kind(kind: &str, args: &[Located<Arg>], lineno: usize, col: usize) -> Result<BlockKind, ParseError> {
    let any = usize::MAX;
    Ok(match kind {
        "input" => {
            arity(kind, args, 2..=2, lineno, col)?;
            BlockKind::Input {
                lo: num(&args[0], lineno)?,
                hi: num(&args[1], lineno)?,
            }
        }
        "constant" => {
            arity(kind, args, 1..=1, lineno, col)?;
            BlockKind::Constant(num(&args[0], lineno)?)
        }
        "gain" => {
            arity(kind, args, 2..=2, lineno, col)?;
            BlockKind::Gain {
                k: num(&args[0], lineno)?,
                src: single_ref(&args[1], lineno)?,
            }
        }
        "sum" => {
            arity(kind, args, 1..=any, lineno, col)?;
            let (signs, rest) = match &args[0].value {
                Arg::Str(s) => (Some((s.clone(), args[0].col)), &args[1..]),
                _ => (None, args),
            };
            let srcs = refs(rest, lineno)?;
            if srcs.is_empty() {
                return Err(ParseError::at(lineno, col, "sum needs at least one input"));
            }
            let signs = match signs {
                None => vec![Sign::Plus; srcs.len()],
                Some((s, scol)) => {
                    let mut v = Vec::new();
                    for c in s.chars().filter(|c| *c != '|') {
                        v.push(match c {
                            '+' => Sign::Plus,
                            '-' => Sign::Minus,
                            _ => return Err(ParseError::at(lineno, scol, format!("invalid sign `{c}`"))),
                        });
                    }
                    if v.len() != srcs.len() {
                        return Err(ParseError::at(
                            lineno,
                            scol,
                            format!("{} signs for {} inputs", v.len(), srcs.len()),
                        ));
                    }
                    v
                }
            };
            BlockKind::Sum {
                terms: signs.into_iter().zip(srcs).collect(),
            }
        }
        "product" => {
            arity(kind, args, 1..=any, lineno, col)?;
            BlockKind::Product(refs(args, lineno)?)
        }
        "div" => {
            arity(kind, args, 2..=2, lineno, col)?;
            BlockKind::Div {
                num: single_ref(&args[0], lineno)?,
                den: single_ref(&args[1], lineno)?,
            }
        }
        "sqrt" => {
            arity(kind, args, 1..=1, lineno, col)?;
            BlockKind::Sqrt(single_ref(&args[0], lineno)?)
        }
        "switch" => {
            arity(kind, args, 5..=5, lineno, col)?;
            let op = match &args[1].value {
                Arg::Op(s) | Arg::Str(s) => CmpOp::parse(s),
                _ => None,
            }
            .ok_or_else(|| ParseError::at(lineno, args[1].col, "expected one of >=, >, !="))?;
            BlockKind::Switch {
                ctrl: single_ref(&args[0], lineno)?,
                op,
                c: num(&args[2], lineno)?,
                then: single_ref(&args[3], lineno)?,
                else_: single_ref(&args[4], lineno)?,
            }
        }
        "delay" => {
            arity(kind, args, 1..=2, lineno, col)?;
            let init = match args.get(1) {
                Some(a) => num(a, lineno)?,
                None => Num::parse("0").expect("zero"),
            };
            BlockKind::Delay {
                src: single_ref(&args[0], lineno)?,
                init,
            }
        }
        "output" => {
            arity(kind, args, 1..=1, lineno, col)?;
            BlockKind::Output(single_ref(&args[0], lineno)?)
        }
        other => return Err(ParseError::at(lineno, col, format!("unknown block type `{other}`"))),
    })
}

fn parse_simulate(toks: &[Token], lineno: usize, model: &mut Model) -> Result<(), ParseError> {
    let mut i = 1;
    while i < toks.len() {
        let (key, col) = match &toks[i].tok {
            Tok::Ident(k) => (k.clone(), toks[i].col),
            _ => return Err(ParseError::at(lineno, toks[i].col, "expected `key=value`")),
        };
        if !matches!(toks.get(i + 1), Some(Token { tok: Tok::Punct('='), .. })) {
            return Err(ParseError::at(lineno, col, format!("expected `=` after `{key}`")));
        }
        let Some(v) = toks.get(i + 2) else {
            return Err(ParseError::at(lineno, col, format!("missing value for `{key}`")));
        };
        let text = match &v.tok {
            Tok::Ident(s) | Tok::Num(s) | Tok::Str(s) => s.clone(),
            _ => return Err(ParseError::at(lineno, v.col, "expected a value")),
        };
        match key.as_str() {
            "steps" => {
                model.steps = text
                    .parse()
                    .map_err(|_| ParseError::at(lineno, v.col, format!("invalid step count `{text}`")))?;
            }
            "precision" => {
                model.precision = text
                    .parse()
                    .map_err(|_| ParseError::at(lineno, v.col, format!("unknown precision `{text}`")))?;
            }
            _ => return Err(ParseError::at(lineno, col, format!("unknown setting `{key}`"))),
        }
        i += 3;
    }
    Ok(())
}

pub fn parse_model(text: &str) -> Result<Model, ParseErrors> {
    let mut model = Model {
        blocks: Vec::new(),
        steps: 1,
        precision: Precision::Double,
    };
    let mut errors = Vec::new();
    let mut seen_simulate = false;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let toks = match tokenize(line, lineno) {
            Ok(t) => t,
            Err(e) => {
                errors.push(e);
                continue;
            }
        };
        if toks.is_empty() {
            continue;
        }
        if toks[0].tok == Tok::Ident("simulate".into()) {
            if seen_simulate {
                errors.push(ParseError::at(lineno, 1, "duplicate `simulate` line"));
            }
            seen_simulate = true;
            if let Err(e) = parse_simulate(&toks, lineno, &mut model) {
                errors.push(e);
            }
            continue;
        }
        match parse_block(&toks, lineno) {
            Ok(b) => model.blocks.push(b),
            Err(e) => errors.push(e),
        }
    }
    if errors.is_empty() {
        errors.extend(check(&model));
    }
    if errors.is_empty() {
        Ok(model)
    } else {
        Err(ParseErrors(errors))
    }
}

fn parse_block(toks: &[Token], lineno: usize) -> Result<Block, ParseError> {
    let name = match &toks[0].tok {
        Tok::Ident(n) => n.clone(),
        _ => return Err(ParseError::at(lineno, toks[0].col, "expected a block name")),
    };
    if !matches!(toks.get(1), Some(Token { tok: Tok::Punct('='), .. })) {
        return Err(ParseError::at(lineno, toks.get(1).map_or(line_end(toks), |t| t.col), "expected `=`"));
    }
    let (kind, kcol) = match toks.get(2) {
        Some(Token { tok: Tok::Ident(k), col }) => (k.clone(), *col),
        Some(t) => return Err(ParseError::at(lineno, t.col, "expected a block type")),
        None => return Err(ParseError::at(lineno, line_end(toks), "expected a block type")),
    };
    if !matches!(toks.get(3), Some(Token { tok: Tok::Punct('('), .. })) {
        return Err(ParseError::at(lineno, kcol, format!("expected `(` after `{kind}`")));
    }
    let (args, used) = parse_args(&toks[4..], lineno)?;
    if let Some(t) = toks.get(4 + used) {
        return Err(ParseError::at(lineno, t.col, "unexpected text after `)`"));
    }
    Ok(Block {
        name,
        kind: block_kind(&kind, &args, lineno, kcol)?,
        line: lineno,
    })
}

fn line_end(toks: &[Token]) -> usize {
    toks.last().map_or(1, |t| t.col + 1)
}

/// Name resolution, the output requirement and delay-free cycles.
fn check(model: &Model) -> Vec<ParseError> {
    let mut errors = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, b) in model.blocks.iter().enumerate() {
        if let Some(&j) = index.get(b.name.as_str()) {
            errors.push(ParseError::at(
                b.line,
                1,
                format!("block `{}` already defined on line {}", b.name, model.blocks[j].line),
            ));
        } else {
            index.insert(&b.name, i);
        }
    }
    for b in &model.blocks {
        for r in b.kind.sources() {
            if !index.contains_key(r) {
                errors.push(ParseError::at(b.line, 1, format!("unresolved reference `{r}` in block `{}`", b.name)));
            }
        }
    }
    if !errors.is_empty() {
        return errors;
    }
    if !model.blocks.iter().any(|b| matches!(b.kind, BlockKind::Output(_))) {
        errors.push(ParseError::at(0, 0, "no output block"));
    }
    if let Err(cycle) = super::schedule(model) {
        let first = &model.blocks[index[cycle[0].as_str()]];
        errors.push(ParseError::at(
            first.line,
            1,
            format!("delay-free cycle: {}", cycle.join(" -> ")),
        ));
    }
    errors
}

/// Blocks grouped by kind, for summaries.
pub fn census(model: &Model) -> BTreeMap<&'static str, usize> {
    let mut m = BTreeMap::new();
    for b in &model.blocks {
        *m.entry(b.kind.keyword()).or_insert(0) += 1;
    }
    m
}
