//! The abstract domains the analyzer can run: floating-point slopes, the
//! real-arithmetic slope baseline and plain intervals.

use std::fmt::Debug;

use crate::interval::{DomainError, Interval, Thresholds};
use crate::ir::Lit;
use crate::profile::{Precision, PrecisionProfile};
use crate::slope::{
    self, iota, kappa, literal_enclosure, meet_case, FpsValue, IndRegistry, MeetCase, Origin,
};

pub trait Domain {
    type Value: Clone + Debug + PartialEq;

    fn name(&self) -> &'static str;

    fn profile(&self) -> &PrecisionProfile;

    /// A literal, rounded into the working format.
    fn constant(&self, lit: &Lit) -> Self::Value;

    /// A value known only to lie in `range`.
    fn abstract_interval(&self, range: Interval) -> Self::Value;

    fn top(&self) -> Self::Value {
        self.abstract_interval(Interval::TOP)
    }

    /// The independent variable `l` itself.
    fn independent(&self, reg: &IndRegistry, l: usize) -> Self::Value;

    fn add(&self, a: &Self::Value, b: &Self::Value, reg: &IndRegistry) -> Result<Self::Value, DomainError>;
    fn sub(&self, a: &Self::Value, b: &Self::Value, reg: &IndRegistry) -> Result<Self::Value, DomainError>;
    fn mul(&self, a: &Self::Value, b: &Self::Value, reg: &IndRegistry) -> Result<Self::Value, DomainError>;
    fn div(&self, a: &Self::Value, b: &Self::Value, reg: &IndRegistry) -> Result<Self::Value, DomainError>;
    fn sqrt(&self, a: &Self::Value, reg: &IndRegistry) -> Result<Self::Value, DomainError>;
    fn neg(&self, a: &Self::Value) -> Self::Value;

    /// Interval enclosure of every concrete value.
    fn to_interval(&self, v: &Self::Value, reg: &IndRegistry) -> Interval;

    fn join(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn widen(&self, a: &Self::Value, b: &Self::Value, thresholds: &Thresholds) -> Self::Value;
    fn leq(&self, a: &Self::Value, b: &Self::Value) -> bool;

    /// Meets `v` with the constraint `range`. `None` is bottom. A fresh
    /// independent variable may be registered under `origin` when one is
    /// given.
    fn refine(
        &self,
        v: &Self::Value,
        range: Interval,
        reg: &mut IndRegistry,
        origin: Option<Origin>,
    ) -> Option<Self::Value>;

    /// Enclosure of the values `v` describes when the independent variables
    /// take the values `point`.
    fn enclosure_at(&self, v: &Self::Value, reg: &IndRegistry, point: &[f64]) -> Interval;

    /// Whether the concrete `x` is described by `v` at `point`. A NaN is
    /// only described by top.
    fn contains(&self, v: &Self::Value, reg: &IndRegistry, x: f64, point: &[f64]) -> bool {
        let i = self.enclosure_at(v, reg, point);
        if x.is_nan() {
            i.is_top()
        } else {
            i.contains(x)
        }
    }
}

/// Rounds a literal into the working format. Returns an enclosure when the
/// format cannot be reproduced in binary64.
pub fn literal_in(profile: &PrecisionProfile, lit: &Lit) -> Interval {
    match profile.precision {
        Precision::Single => Interval::point(lit.single as f64),
        Precision::Double | Precision::DoubleRounding => Interval::point(lit.value),
        Precision::Extended => literal_enclosure(lit),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntervalRounding {
    /// Each bound rounded outward into the format: the tightest enclosure
    /// of the correctly rounded result.
    Directed,
    /// `x (1 + e)` with `|e| <= u`, and `e = 0` when `x` is representable:
    /// bounds not in the format are widened by `u` times their magnitude
    /// before rounding outward. Binary64 bounds are always representable in
    /// the formats at least as wide, so there this matches `Directed`.
    ErrorModel,
}

/// Non-relational interval semantics.
#[derive(Clone, Debug)]
pub struct IntervalDomain {
    pub profile: PrecisionProfile,
    pub rounding: IntervalRounding,
}

impl IntervalDomain {
    pub fn new(profile: PrecisionProfile) -> Self {
        IntervalDomain {
            profile,
            rounding: IntervalRounding::Directed,
        }
    }

    pub fn error_model(profile: PrecisionProfile) -> Self {
        IntervalDomain {
            profile,
            rounding: IntervalRounding::ErrorModel,
        }
    }

    fn out(&self, r: Result<Interval, DomainError>) -> Result<Interval, DomainError> {
        let i = r?;
        if self.rounding == IntervalRounding::Directed || i.is_bottom() {
            return Ok(i.round_out(&self.profile));
        }
        let u = self.profile.u();
        let exact = |b: f64| Interval::point(b).round_out(&self.profile).is_point();
        let lo = if exact(i.lo()) { i.lo() } else { Interval::point(i.lo()).inflate(u)?.lo() };
        let hi = if exact(i.hi()) { i.hi() } else { Interval::point(i.hi()).inflate(u)?.hi() };
        Ok(Interval::new(lo, hi).round_out(&self.profile))
    }
}

impl Domain for IntervalDomain {
    type Value = Interval;

    fn name(&self) -> &'static str {
        match self.rounding {
            IntervalRounding::Directed => "interval-directed",
            IntervalRounding::ErrorModel => "interval",
        }
    }

    fn profile(&self) -> &PrecisionProfile {
        &self.profile
    }

    fn constant(&self, lit: &Lit) -> Interval {
        literal_in(&self.profile, lit)
    }

    fn abstract_interval(&self, range: Interval) -> Interval {
        range
    }

    fn independent(&self, reg: &IndRegistry, l: usize) -> Interval {
        reg.range(l)
    }

    fn add(&self, a: &Interval, b: &Interval, _: &IndRegistry) -> Result<Interval, DomainError> {
        self.out(a.add(b))
    }

    fn sub(&self, a: &Interval, b: &Interval, _: &IndRegistry) -> Result<Interval, DomainError> {
        self.out(a.sub(b))
    }

    fn mul(&self, a: &Interval, b: &Interval, _: &IndRegistry) -> Result<Interval, DomainError> {
        self.out(a.mul(b))
    }

    fn div(&self, a: &Interval, b: &Interval, _: &IndRegistry) -> Result<Interval, DomainError> {
        self.out(a.div(b))
    }

    fn sqrt(&self, a: &Interval, _: &IndRegistry) -> Result<Interval, DomainError> {
        self.out(a.sqrt())
    }

    fn neg(&self, a: &Interval) -> Interval {
        a.neg()
    }

    fn to_interval(&self, v: &Interval, _: &IndRegistry) -> Interval {
        *v
    }

    fn join(&self, a: &Interval, b: &Interval) -> Interval {
        a.join(b)
    }

    fn widen(&self, a: &Interval, b: &Interval, thresholds: &Thresholds) -> Interval {
        a.widen(b, thresholds)
    }

    fn leq(&self, a: &Interval, b: &Interval) -> bool {
        a.leq(b)
    }

    fn refine(&self, v: &Interval, range: Interval, _: &mut IndRegistry, _: Option<Origin>) -> Option<Interval> {
        let m = v.meet(&range);
        (!m.is_bottom()).then_some(m)
    }

    fn enclosure_at(&self, v: &Interval, _: &IndRegistry, _: &[f64]) -> Interval {
        *v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlopeMode {
    /// Floating-point slopes.
    Fps,
    /// Slopes in real arithmetic (no rounding-error model).
    Real,
}

#[derive(Clone, Debug)]
pub struct SlopeDomain {
    pub profile: PrecisionProfile,
    pub mode: SlopeMode,
}

impl SlopeDomain {
    pub fn fps(profile: PrecisionProfile) -> Self {
        SlopeDomain {
            profile,
            mode: SlopeMode::Fps,
        }
    }

    pub fn real(profile: PrecisionProfile) -> Self {
        SlopeDomain {
            profile,
            mode: SlopeMode::Real,
        }
    }
}

/// `M + S . (point - mid)` for a concrete point of the independent variables.
pub fn evaluate_at(v: &FpsValue, reg: &IndRegistry, point: &[f64]) -> Interval {
    if v.is_overflow() {
        return v.m();
    }
    let mut acc = v.m();
    for (i, c) in v.slopes().iter().enumerate() {
        if *c == Interval::ZERO {
            continue;
        }
        let d = match (point.get(i), reg.get(i)) {
            (Some(&p), Some(var)) => Interval::point(p).sub(&Interval::point(var.mid)),
            _ => Ok(Interval::ZERO),
        };
        let next = d.and_then(|d| c.mul(&d)).and_then(|t| acc.add(&t));
        match next {
            Ok(a) => acc = a,
            Err(_) => return Interval::TOP,
        }
    }
    acc
}

impl Domain for SlopeDomain {
    type Value = FpsValue;

    fn name(&self) -> &'static str {
        match self.mode {
            SlopeMode::Fps => "fps",
            SlopeMode::Real => "real-slope",
        }
    }

    fn profile(&self) -> &PrecisionProfile {
        &self.profile
    }

    fn constant(&self, lit: &Lit) -> FpsValue {
        let i = match self.mode {
            SlopeMode::Fps => literal_in(&self.profile, lit),
            SlopeMode::Real => literal_enclosure(lit),
        };
        if i == Interval::POS_INF {
            FpsValue::pos_overflow()
        } else if i == Interval::NEG_INF {
            FpsValue::neg_overflow()
        } else {
            FpsValue::constant(i)
        }
    }

    fn abstract_interval(&self, range: Interval) -> FpsValue {
        FpsValue::constant(range)
    }

    fn independent(&self, reg: &IndRegistry, l: usize) -> FpsValue {
        kappa(reg, l)
    }

    fn add(&self, a: &FpsValue, b: &FpsValue, reg: &IndRegistry) -> Result<FpsValue, DomainError> {
        match self.mode {
            SlopeMode::Fps => slope::fps_add(a, b, reg, &self.profile),
            SlopeMode::Real => slope::real_add(a, b, reg),
        }
    }

    fn sub(&self, a: &FpsValue, b: &FpsValue, reg: &IndRegistry) -> Result<FpsValue, DomainError> {
        match self.mode {
            SlopeMode::Fps => slope::fps_sub(a, b, reg, &self.profile),
            SlopeMode::Real => slope::real_sub(a, b, reg),
        }
    }

    fn mul(&self, a: &FpsValue, b: &FpsValue, reg: &IndRegistry) -> Result<FpsValue, DomainError> {
        match self.mode {
            SlopeMode::Fps => slope::fps_mul(a, b, reg, &self.profile),
            SlopeMode::Real => slope::real_mul(a, b, reg),
        }
    }

    fn div(&self, a: &FpsValue, b: &FpsValue, reg: &IndRegistry) -> Result<FpsValue, DomainError> {
        match self.mode {
            SlopeMode::Fps => slope::fps_div(a, b, reg, &self.profile),
            SlopeMode::Real => slope::real_div(a, b, reg),
        }
    }

    fn sqrt(&self, a: &FpsValue, reg: &IndRegistry) -> Result<FpsValue, DomainError> {
        match self.mode {
            SlopeMode::Fps => slope::fps_sqrt(a, reg, &self.profile),
            SlopeMode::Real => slope::real_sqrt(a, reg),
        }
    }

    fn neg(&self, a: &FpsValue) -> FpsValue {
        a.neg()
    }

    fn to_interval(&self, v: &FpsValue, reg: &IndRegistry) -> Interval {
        iota(v, reg)
    }

    fn join(&self, a: &FpsValue, b: &FpsValue) -> FpsValue {
        slope::fps_join(a, b)
    }

    fn widen(&self, a: &FpsValue, b: &FpsValue, thresholds: &Thresholds) -> FpsValue {
        slope::fps_widen(a, b, thresholds)
    }

    fn leq(&self, a: &FpsValue, b: &FpsValue) -> bool {
        slope::fps_leq(a, b)
    }

    fn refine(
        &self,
        v: &FpsValue,
        range: Interval,
        reg: &mut IndRegistry,
        origin: Option<Origin>,
    ) -> Option<FpsValue> {
        let constraint = FpsValue::constant(range);
        match meet_case(v, &constraint, reg) {
            MeetCase::Bottom => None,
            MeetCase::Left => Some(v.clone()),
            MeetCase::Right => Some(constraint),
            MeetCase::Overlap(i) => Some(match origin {
                Some(o) => {
                    let l = reg.register(o, i);
                    kappa(reg, l)
                }
                None => FpsValue::constant(i),
            }),
        }
    }

    fn enclosure_at(&self, v: &FpsValue, reg: &IndRegistry, point: &[f64]) -> Interval {
        evaluate_at(v, reg, point)
    }
}
