//! Closed floating-point intervals with outward rounding.
//!
//! Endpoints are binary64 values and may be infinite. The empty interval is the
//! single value [`Interval::BOTTOM`]; no other `lo > hi` pair is ever built.
//! Endpoint products treat `0 * inf` as `0` (the intervals describe sets of
//! reals); any other indeterminate endpoint operation is reported as
//! [`DomainError::Indeterminate`].

use std::fmt;

use thiserror::Error;

use crate::float;
use crate::profile::PrecisionProfile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Error)]
pub enum DomainError {
    #[error("possible division by zero")]
    DivisionByZero,
    #[error("possible square root of a negative operand")]
    InvalidSqrt,
    #[error("indeterminate operation (NaN)")]
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("midpoint of an interval with an infinite bound is undefined")]
pub struct MidpointUndefined;

#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub const BOTTOM: Interval = Interval {
        lo: f64::INFINITY,
        hi: f64::NEG_INFINITY,
    };
    pub const TOP: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };
    pub const POS_INF: Interval = Interval {
        lo: f64::INFINITY,
        hi: f64::INFINITY,
    };
    pub const NEG_INF: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::NEG_INFINITY,
    };

    /// `[lo, hi]`, or bottom when `lo > hi`.
    ///
    /// Panics on NaN bounds.
    pub fn new(lo: f64, hi: f64) -> Interval {
        assert!(!lo.is_nan() && !hi.is_nan(), "NaN interval bound");
        if lo > hi {
            Interval::BOTTOM
        } else {
            // normalise -0 so that equality is structural
            Interval {
                lo: lo + 0.0,
                hi: hi + 0.0,
            }
        }
    }

    pub fn point(x: f64) -> Interval {
        Interval::new(x, x)
    }

    fn from_rounded(lo: f64, hi: f64) -> Result<Interval, DomainError> {
        if lo.is_nan() || hi.is_nan() {
            Err(DomainError::Indeterminate)
        } else {
            Ok(Interval::new(lo, hi))
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_bottom(&self) -> bool {
        self.lo > self.hi
    }

    pub fn is_top(&self) -> bool {
        self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_finite(&self) -> bool {
        !self.is_bottom() && self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        if self.is_bottom() {
            0.0
        } else {
            float::sub(self.hi, self.lo).1
        }
    }

    /// Largest magnitude.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest magnitude (0 when the interval straddles zero).
    pub fn mig(&self) -> f64 {
        if self.contains(0.0) {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        !self.meet(other).is_bottom()
    }

    pub fn neg(&self) -> Interval {
        if self.is_bottom() {
            return *self;
        }
        Interval::new(-self.hi, -self.lo)
    }

    pub fn add(&self, rhs: &Interval) -> Result<Interval, DomainError> {
        if self.is_bottom() || rhs.is_bottom() {
            return Ok(Interval::BOTTOM);
        }
        let lo = float::add(self.lo, rhs.lo).0;
        let hi = float::add(self.hi, rhs.hi).1;
        Interval::from_rounded(lo, hi)
    }

    pub fn sub(&self, rhs: &Interval) -> Result<Interval, DomainError> {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &Interval) -> Result<Interval, DomainError> {
        if self.is_bottom() || rhs.is_bottom() {
            return Ok(Interval::BOTTOM);
        }
        let corner = |a: f64, b: f64| {
            if a == 0.0 || b == 0.0 {
                (0.0, 0.0)
            } else {
                float::mul(a, b)
            }
        };
        let c = [
            corner(self.lo, rhs.lo),
            corner(self.lo, rhs.hi),
            corner(self.hi, rhs.lo),
            corner(self.hi, rhs.hi),
        ];
        let lo = c.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
        let hi = c.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        Interval::from_rounded(lo, hi)
    }

    pub fn div(&self, rhs: &Interval) -> Result<Interval, DomainError> {
        if self.is_bottom() || rhs.is_bottom() {
            return Ok(Interval::BOTTOM);
        }
        if rhs.contains(0.0) {
            return Err(DomainError::DivisionByZero);
        }
        let c = [
            float::div(self.lo, rhs.lo),
            float::div(self.lo, rhs.hi),
            float::div(self.hi, rhs.lo),
            float::div(self.hi, rhs.hi),
        ];
        if c.iter().any(|r| r.0.is_nan() || r.1.is_nan()) {
            return Err(DomainError::Indeterminate);
        }
        let lo = c.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
        let hi = c.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        Interval::from_rounded(lo, hi)
    }

    pub fn sqrt(&self) -> Result<Interval, DomainError> {
        if self.is_bottom() {
            return Ok(*self);
        }
        if self.lo < 0.0 {
            return Err(DomainError::InvalidSqrt);
        }
        Interval::from_rounded(float::sqrt(self.lo).0, float::sqrt(self.hi).1)
    }

    /// Least upper bound (convex hull).
    pub fn join(&self, other: &Interval) -> Interval {
        if self.is_bottom() {
            return *other;
        }
        if other.is_bottom() {
            return *self;
        }
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    /// Intersection.
    pub fn meet(&self, other: &Interval) -> Interval {
        if self.is_bottom() || other.is_bottom() {
            return Interval::BOTTOM;
        }
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    /// Containment `self ⊆ other`.
    pub fn leq(&self, other: &Interval) -> bool {
        self.is_bottom() || (other.lo <= self.lo && self.hi <= other.hi)
    }

    /// Strict containment.
    pub fn strictly_inside(&self, other: &Interval) -> bool {
        self.leq(other) && self != other
    }

    /// Threshold widening: an unstable bound jumps to the nearest threshold
    /// beyond the new value.
    pub fn widen(&self, next: &Interval, thresholds: &Thresholds) -> Interval {
        if self.is_bottom() {
            return *next;
        }
        if next.is_bottom() {
            return *self;
        }
        let lo = if next.lo < self.lo {
            thresholds.at_or_below(next.lo)
        } else {
            self.lo
        };
        let hi = if next.hi > self.hi {
            thresholds.at_or_above(next.hi)
        } else {
            self.hi
        };
        Interval::new(lo, hi)
    }

    /// `lo + 0.5 * (hi - lo)` evaluated in binary64.
    pub fn mid(&self) -> Result<f64, MidpointUndefined> {
        if !self.is_finite() {
            return Err(MidpointUndefined);
        }
        let m = self.lo + 0.5 * (self.hi - self.lo);
        let m = if m.is_finite() {
            m
        } else {
            0.5 * self.lo + 0.5 * self.hi
        };
        Ok(m.clamp(self.lo, self.hi))
    }

    /// Midpoint with the fallback for half-infinite intervals: zero when it is
    /// contained, otherwise the finite bound.
    pub fn mid_or_fallback(&self) -> f64 {
        match self.mid() {
            Ok(m) => m,
            Err(_) if self.contains(0.0) => 0.0,
            Err(_) if self.lo.is_finite() => self.lo,
            Err(_) => self.hi,
        }
    }

    /// Interval extension of `x * (1 + [-u, u])`, rounded outward.
    pub fn inflate(&self, u: f64) -> Result<Interval, DomainError> {
        let factor = Interval::new(float::sub(1.0, u).0, float::add(1.0, u).1);
        self.mul(&factor)
    }

    /// Rounds both endpoints outward into the profile's format.
    pub fn round_out(&self, profile: &PrecisionProfile) -> Interval {
        if self.is_bottom() {
            return *self;
        }
        let (lo, hi) = profile.round_out(self.lo, self.hi);
        Interval::new(lo, hi)
    }
}

impl Default for Interval {
    fn default() -> Self {
        Interval::ZERO
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_bottom() {
            f.write_str("⊥")
        } else if let Some(p) = f.precision() {
            write!(f, "[{:.*}, {:.*}]", p, self.lo, p, self.hi)
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

/// Sorted widening thresholds, always containing both infinities.
#[derive(Clone, Debug, PartialEq)]
pub struct Thresholds(Vec<f64>);

impl Thresholds {
    pub fn new<I: IntoIterator<Item = f64>>(values: I) -> Thresholds {
        let mut v: Vec<f64> = values
            .into_iter()
            .filter(|x| !x.is_nan())
            .map(|x| x + 0.0)
            .chain([f64::NEG_INFINITY, f64::INFINITY])
            .collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v.dedup();
        Thresholds(v)
    }

    /// `{0, ±sigma, ±2^e_min, ±1, ±2^k (k = 4, 8, .. <= e_max), ±Sigma, ±inf}`,
    /// dropping magnitudes binary64 cannot hold.
    pub fn for_profile(profile: &PrecisionProfile) -> Thresholds {
        let mut mags = vec![1.0, profile.big_sigma().down()];
        let sigma = profile.sigma().down();
        if sigma > 0.0 {
            mags.push(sigma);
        }
        let normal_min = 2f64.powi(profile.e_min.max(-1074));
        if normal_min > 0.0 {
            mags.push(normal_min);
        }
        let mut k = 4;
        while k <= profile.e_max() && k < 1024 {
            mags.push(2f64.powi(k));
            k += 4;
        }
        Thresholds::new(
            std::iter::once(0.0).chain(mags.iter().flat_map(|&m| [m, -m])),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Largest threshold `<= x`.
    pub fn at_or_below(&self, x: f64) -> f64 {
        let i = self.0.partition_point(|&t| t <= x);
        if i == 0 {
            f64::NEG_INFINITY
        } else {
            self.0[i - 1]
        }
    }

    /// Smallest threshold `>= x`.
    pub fn at_or_above(&self, x: f64) -> f64 {
        let i = self.0.partition_point(|&t| t < x);
        self.0.get(i).copied().unwrap_or(f64::INFINITY)
    }
}
