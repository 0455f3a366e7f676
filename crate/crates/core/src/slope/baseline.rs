//! Real-arithmetic baselines: plain interval evaluation, the slope form and
//! the derivative (mean-value) form, all with outward rounding only.

use thiserror::Error;

use crate::interval::{DomainError, Interval};
use crate::ir::{Expr, Lit, VarId};

use super::arith::{real_add, real_div, real_mul, real_sqrt, real_sub};
use super::registry::IndRegistry;
use super::value::FpsValue;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable #{}", .0 .0)]
    Unbound(VarId),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Enclosure of the real number a literal denotes.
pub fn literal_enclosure(lit: &Lit) -> Interval {
    if lit.exact || !lit.value.is_finite() {
        Interval::point(lit.value)
    } else {
        Interval::new(lit.value.next_down(), lit.value.next_up())
    }
}

pub fn interval_eval<F>(e: &Expr, env: &F) -> Result<Interval, EvalError>
where
    F: Fn(VarId) -> Option<Interval>,
{
    Ok(match e {
        Expr::Const(l) => literal_enclosure(l),
        Expr::Var(v) => env(*v).ok_or(EvalError::Unbound(*v))?,
        Expr::Neg(a) => interval_eval(a, env)?.neg(),
        Expr::Add(a, b) => interval_eval(a, env)?.add(&interval_eval(b, env)?)?,
        Expr::Sub(a, b) => interval_eval(a, env)?.sub(&interval_eval(b, env)?)?,
        Expr::Mul(a, b) => interval_eval(a, env)?.mul(&interval_eval(b, env)?)?,
        Expr::Div(a, b) => interval_eval(a, env)?.div(&interval_eval(b, env)?)?,
        Expr::Sqrt(a) => interval_eval(a, env)?.sqrt()?,
    })
}

/// Slope expansion in real arithmetic: the value at the expansion point and
/// the slope vector, using the first form of the product and quotient rules.
pub fn real_slope_eval<F>(e: &Expr, env: &F, reg: &IndRegistry) -> Result<FpsValue, EvalError>
where
    F: Fn(VarId) -> Option<FpsValue>,
{
    let rec = |x: &Expr| real_slope_eval(x, env, reg);
    Ok(match e {
        Expr::Const(l) => FpsValue::constant(literal_enclosure(l)),
        Expr::Var(v) => env(*v).ok_or(EvalError::Unbound(*v))?,
        Expr::Neg(a) => rec(a)?.neg(),
        Expr::Add(a, b) => real_add(&rec(a)?, &rec(b)?, reg)?,
        Expr::Sub(a, b) => real_sub(&rec(a)?, &rec(b)?, reg)?,
        Expr::Mul(a, b) => real_mul(&rec(a)?, &rec(b)?, reg)?,
        Expr::Div(a, b) => real_div(&rec(a)?, &rec(b)?, reg)?,
        Expr::Sqrt(a) => real_sqrt(&rec(a)?, reg)?,
    })
}

/// Interval value over the whole box together with an enclosure of the
/// gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivValue {
    pub value: Interval,
    pub grad: Vec<Interval>,
}

impl DerivValue {
    pub fn constant(value: Interval) -> DerivValue {
        DerivValue { value, grad: Vec::new() }
    }

    /// The `l`-th independent variable over `range`.
    pub fn independent(range: Interval, l: usize) -> DerivValue {
        let mut grad = vec![Interval::ZERO; l + 1];
        grad[l] = Interval::ONE;
        DerivValue { value: range, grad }
    }

    pub fn coord(&self, i: usize) -> Interval {
        self.grad.get(i).copied().unwrap_or(Interval::ZERO)
    }
}

fn zip_grad<F>(a: &DerivValue, b: &DerivValue, f: F) -> Result<Vec<Interval>, DomainError>
where
    F: Fn(Interval, Interval) -> Result<Interval, DomainError>,
{
    (0..a.grad.len().max(b.grad.len()))
        .map(|i| f(a.coord(i), b.coord(i)))
        .collect()
}

/// Forward-mode derivative enclosure over the box.
pub fn real_derivative_eval<F>(e: &Expr, env: &F) -> Result<DerivValue, EvalError>
where
    F: Fn(VarId) -> Option<DerivValue>,
{
    let rec = |x: &Expr| real_derivative_eval(x, env);
    Ok(match e {
        Expr::Const(l) => DerivValue::constant(literal_enclosure(l)),
        Expr::Var(v) => env(*v).ok_or(EvalError::Unbound(*v))?,
        Expr::Neg(a) => {
            let a = rec(a)?;
            DerivValue {
                value: a.value.neg(),
                grad: a.grad.iter().map(Interval::neg).collect(),
            }
        }
        Expr::Add(a, b) => {
            let (a, b) = (rec(a)?, rec(b)?);
            DerivValue {
                value: a.value.add(&b.value)?,
                grad: zip_grad(&a, &b, |x, y| x.add(&y))?,
            }
        }
        Expr::Sub(a, b) => {
            let (a, b) = (rec(a)?, rec(b)?);
            DerivValue {
                value: a.value.sub(&b.value)?,
                grad: zip_grad(&a, &b, |x, y| x.sub(&y))?,
            }
        }
        Expr::Mul(a, b) => {
            let (a, b) = (rec(a)?, rec(b)?);
            let (va, vb) = (a.value, b.value);
            DerivValue {
                value: va.mul(&vb)?,
                grad: zip_grad(&a, &b, |x, y| x.mul(&vb)?.add(&va.mul(&y)?))?,
            }
        }
        Expr::Div(a, b) => {
            let (a, b) = (rec(a)?, rec(b)?);
            let (va, vb) = (a.value, b.value);
            let sq = vb.mul(&vb)?;
            DerivValue {
                value: va.div(&vb)?,
                grad: zip_grad(&a, &b, |x, y| x.mul(&vb)?.sub(&y.mul(&va)?)?.div(&sq))?,
            }
        }
        Expr::Sqrt(a) => {
            let a = rec(a)?;
            let root = a.value.sqrt()?;
            let den = root.mul(&Interval::point(2.0))?;
            DerivValue {
                value: root,
                grad: a.grad.iter().map(|g| g.div(&den)).collect::<Result<_, _>>()?,
            }
        }
    })
}

/// Mean-value form `f(z) + f'(X) . (X - z)` where `bind` maps each variable
/// read by `e` to an independent variable of `reg`.
pub fn mean_value_enclosure<B>(e: &Expr, bind: &B, reg: &IndRegistry) -> Result<Interval, EvalError>
where
    B: Fn(VarId) -> Option<usize>,
{
    let at_mid = interval_eval(e, &|v| bind(v).map(|l| Interval::point(reg.mid(l))))?;
    let d = real_derivative_eval(e, &|v| bind(v).map(|l| DerivValue::independent(reg.range(l), l)))?;
    let mut acc = at_mid;
    for (l, g) in d.grad.iter().enumerate() {
        acc = acc.add(&g.mul(&reg.deviation(l))?)?;
    }
    Ok(acc)
}
