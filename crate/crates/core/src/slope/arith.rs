//! Arithmetic on floating-point slopes.
//!
//! The same slope rules serve two semantics: the floating-point one, where
//! every result is inflated by `(1 + [-u, u])`, products, quotients and roots
//! get the absolute term `[-sigma/2, sigma/2]`, sums go through the absorption
//! reduction and every result through zero/overflow normalisation; and the
//! real one (outward rounding only), used as a baseline.

use crate::interval::{DomainError, Interval};
use crate::profile::PrecisionProfile;

use super::registry::IndRegistry;
use super::value::{iota, phi, rho, FpsValue};

/// Which of the two symmetric product/quotient slope forms to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FormChoice {
    /// Keep the form giving the narrower enclosure; ties go to the first form.
    #[default]
    Narrowest,
    /// Always use `G x h(X) + g(z) x H` and `(G - H g(z)/h(z)) / h(X)`.
    First,
    /// Always use the swapped forms.
    Second,
}

#[derive(Clone, Copy)]
struct Ops<'a> {
    reg: &'a IndRegistry,
    prof: Option<&'a PrecisionProfile>,
    forms: FormChoice,
}

fn lenient(r: Result<Interval, DomainError>) -> Interval {
    r.unwrap_or(Interval::TOP)
}

fn sign_of(v: &FpsValue, reg: &IndRegistry) -> Option<f64> {
    if v.is_pos_overflow() {
        return Some(1.0);
    }
    if v.is_neg_overflow() {
        return Some(-1.0);
    }
    let i = iota(v, reg);
    if i.lo() > 0.0 {
        Some(1.0)
    } else if i.hi() < 0.0 {
        Some(-1.0)
    } else {
        None
    }
}

fn signed_overflow(sign: f64) -> FpsValue {
    if sign > 0.0 {
        FpsValue::pos_overflow()
    } else {
        FpsValue::neg_overflow()
    }
}

impl<'a> Ops<'a> {
    fn inflate(&self, i: Interval) -> Result<Interval, DomainError> {
        match self.prof {
            Some(p) => i.inflate(p.u()),
            None => Ok(i),
        }
    }

    /// Slope coordinates before rounding-error inflation. A coordinate whose
    /// computation hits an indeterminate endpoint becomes top.
    fn raw_slopes<F>(&self, n: usize, f: F) -> Vec<Interval>
    where
        F: Fn(usize) -> Result<Interval, DomainError>,
    {
        (0..n).map(|i| lenient(f(i))).collect()
    }

    /// Applies the rounding-error model to the exact-arithmetic value
    /// `(m0, raw)`: relative inflation of both components, the absolute
    /// term when `absolute` is set and the exact range may reach the
    /// subnormal range, then zero/overflow normalisation.
    fn round(&self, m0: Interval, raw: Vec<Interval>, absolute: bool) -> Result<FpsValue, DomainError> {
        let p = match self.prof {
            Some(p) => p,
            None => return Ok(FpsValue::from_parts(m0, raw)),
        };
        let exact_range = iota(&FpsValue::from_parts(m0, raw.clone()), self.reg);
        let mut m = self.inflate(m0)?;
        if absolute && p.below_normal_min(exact_range.mig()) {
            let h = p.half_sigma_up();
            m = m.add(&Interval::new(-h, h))?;
        }
        let s = raw.into_iter().map(|c| lenient(self.inflate(c))).collect();
        Ok(phi(&FpsValue::from_parts(m, s), self.reg, p))
    }

    fn pick(&self, m0: Interval, first: Vec<Interval>, second: impl FnOnce() -> Vec<Interval>) -> Vec<Interval> {
        match self.forms {
            FormChoice::First => first,
            FormChoice::Second => second(),
            FormChoice::Narrowest => {
                let second = second();
                let wa = iota(&FpsValue::from_parts(m0, first.clone()), self.reg).width();
                let wb = iota(&FpsValue::from_parts(m0, second.clone()), self.reg).width();
                if wb < wa {
                    second
                } else {
                    first
                }
            }
        }
    }

    fn add(&self, g: &FpsValue, h: &FpsValue) -> Result<FpsValue, DomainError> {
        if g.is_overflow() || h.is_overflow() {
            return self.add_overflow(g, h);
        }
        let (g, h) = match self.prof {
            Some(p) => (rho(g, h, self.reg, p), rho(h, g, self.reg, p)),
            None => (g.clone(), h.clone()),
        };
        let m0 = g.m().add(&h.m())?;
        let n = g.slopes().len().max(h.slopes().len());
        let s = self.raw_slopes(n, |i| g.coord(i).add(&h.coord(i)));
        self.round(m0, s, false)
    }

    fn add_overflow(&self, g: &FpsValue, h: &FpsValue) -> Result<FpsValue, DomainError> {
        let (inf, other) = if g.is_overflow() { (g, h) } else { (h, g) };
        let positive = inf.is_pos_overflow();
        if other.is_overflow() {
            return if other.is_pos_overflow() == positive {
                Ok(inf.clone())
            } else {
                Err(DomainError::Indeterminate)
            };
        }
        let oi = iota(other, self.reg);
        let opposite = if positive { oi.lo() == f64::NEG_INFINITY } else { oi.hi() == f64::INFINITY };
        if opposite {
            Err(DomainError::Indeterminate)
        } else {
            Ok(inf.clone())
        }
    }

    fn mul(&self, g: &FpsValue, h: &FpsValue) -> Result<FpsValue, DomainError> {
        if g.is_overflow() || h.is_overflow() {
            let sg = sign_of(g, self.reg).ok_or(DomainError::Indeterminate)?;
            let sh = sign_of(h, self.reg).ok_or(DomainError::Indeterminate)?;
            return Ok(signed_overflow(sg * sh));
        }
        let ig = iota(g, self.reg);
        let ih = iota(h, self.reg);
        let (mg, mh) = (g.m(), h.m());
        let m0 = mg.mul(&mh)?;
        let n = g.slopes().len().max(h.slopes().len());
        let first = self.raw_slopes(n, |i| g.coord(i).mul(&ih)?.add(&mg.mul(&h.coord(i))?));
        let second = || self.raw_slopes(n, |i| h.coord(i).mul(&ig)?.add(&mh.mul(&g.coord(i))?));
        let s = self.pick(m0, first, second);
        self.round(m0, s, true)
    }

    fn div(&self, g: &FpsValue, h: &FpsValue) -> Result<FpsValue, DomainError> {
        if g.is_overflow() || h.is_overflow() {
            return self.div_overflow(g, h);
        }
        let ig = iota(g, self.reg);
        let ih = iota(h, self.reg);
        let (mg, mh) = (g.m(), h.m());
        if ih.contains(0.0) || mh.contains(0.0) {
            return Err(DomainError::DivisionByZero);
        }
        let q = mg.div(&mh)?;
        let n = g.slopes().len().max(h.slopes().len());
        let first = self.raw_slopes(n, |i| g.coord(i).sub(&h.coord(i).mul(&q)?)?.div(&ih));
        let second = || {
            let r = lenient(ig.div(&ih));
            self.raw_slopes(n, |i| g.coord(i).sub(&h.coord(i).mul(&r)?)?.div(&mh))
        };
        let s = self.pick(q, first, second);
        self.round(q, s, true)
    }

    fn div_overflow(&self, g: &FpsValue, h: &FpsValue) -> Result<FpsValue, DomainError> {
        if g.is_overflow() && h.is_overflow() {
            return Err(DomainError::Indeterminate);
        }
        if g.is_overflow() {
            let sh = sign_of(h, self.reg).ok_or(DomainError::DivisionByZero)?;
            let sg = if g.is_pos_overflow() { 1.0 } else { -1.0 };
            return Ok(signed_overflow(sg * sh));
        }
        // finite / inf is a signed zero
        if iota(g, self.reg).is_finite() {
            Ok(FpsValue::zero())
        } else {
            Err(DomainError::Indeterminate)
        }
    }

    fn sqrt(&self, g: &FpsValue) -> Result<FpsValue, DomainError> {
        if g.is_pos_overflow() {
            return Ok(g.clone());
        }
        if g.is_neg_overflow() {
            return Err(DomainError::InvalidSqrt);
        }
        let ig = iota(g, self.reg);
        if ig.lo() < 0.0 {
            return Err(DomainError::InvalidSqrt);
        }
        let mg = g.m();
        let root = ig.sqrt()?;
        if mg.lo() <= 0.0 {
            // the slope denominator may vanish: keep only the range
            return self.round(root, Vec::new(), true);
        }
        let sm = mg.sqrt()?;
        let den = sm.add(&root)?;
        let s = self.raw_slopes(g.slopes().len(), |i| g.coord(i).div(&den));
        self.round(sm, s, true)
    }
}

fn fps_ops<'a>(reg: &'a IndRegistry, prof: &'a PrecisionProfile, forms: FormChoice) -> Ops<'a> {
    Ops {
        reg,
        prof: Some(prof),
        forms,
    }
}

fn real_ops(reg: &IndRegistry) -> Ops<'_> {
    Ops {
        reg,
        prof: None,
        forms: FormChoice::First,
    }
}

pub fn fps_add(g: &FpsValue, h: &FpsValue, reg: &IndRegistry, prof: &PrecisionProfile) -> Result<FpsValue, DomainError> {
    fps_ops(reg, prof, FormChoice::Narrowest).add(g, h)
}

pub fn fps_sub(g: &FpsValue, h: &FpsValue, reg: &IndRegistry, prof: &PrecisionProfile) -> Result<FpsValue, DomainError> {
    fps_add(g, &h.neg(), reg, prof)
}

pub fn fps_mul(g: &FpsValue, h: &FpsValue, reg: &IndRegistry, prof: &PrecisionProfile) -> Result<FpsValue, DomainError> {
    fps_mul_with(g, h, reg, prof, FormChoice::Narrowest)
}

pub fn fps_mul_with(
    g: &FpsValue,
    h: &FpsValue,
    reg: &IndRegistry,
    prof: &PrecisionProfile,
    forms: FormChoice,
) -> Result<FpsValue, DomainError> {
    fps_ops(reg, prof, forms).mul(g, h)
}

pub fn fps_div(g: &FpsValue, h: &FpsValue, reg: &IndRegistry, prof: &PrecisionProfile) -> Result<FpsValue, DomainError> {
    fps_div_with(g, h, reg, prof, FormChoice::Narrowest)
}

pub fn fps_div_with(
    g: &FpsValue,
    h: &FpsValue,
    reg: &IndRegistry,
    prof: &PrecisionProfile,
    forms: FormChoice,
) -> Result<FpsValue, DomainError> {
    fps_ops(reg, prof, forms).div(g, h)
}

pub fn fps_sqrt(g: &FpsValue, reg: &IndRegistry, prof: &PrecisionProfile) -> Result<FpsValue, DomainError> {
    fps_ops(reg, prof, FormChoice::Narrowest).sqrt(g)
}

/// Exact negation.
pub fn fps_neg(g: &FpsValue) -> FpsValue {
    g.neg()
}

pub fn real_add(g: &FpsValue, h: &FpsValue, reg: &IndRegistry) -> Result<FpsValue, DomainError> {
    real_ops(reg).add(g, h)
}

pub fn real_sub(g: &FpsValue, h: &FpsValue, reg: &IndRegistry) -> Result<FpsValue, DomainError> {
    real_ops(reg).add(g, &h.neg())
}

pub fn real_mul(g: &FpsValue, h: &FpsValue, reg: &IndRegistry) -> Result<FpsValue, DomainError> {
    real_ops(reg).mul(g, h)
}

pub fn real_div(g: &FpsValue, h: &FpsValue, reg: &IndRegistry) -> Result<FpsValue, DomainError> {
    real_ops(reg).div(g, h)
}

pub fn real_sqrt(g: &FpsValue, reg: &IndRegistry) -> Result<FpsValue, DomainError> {
    real_ops(reg).sqrt(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slope::registry::Origin;
    use crate::slope::value::kappa;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    fn reg_with(ranges: &[(f64, f64)]) -> IndRegistry {
        let mut reg = IndRegistry::new();
        for (k, (lo, hi)) in ranges.iter().enumerate() {
            reg.register(Origin::named(format!("v{k}")), iv(*lo, *hi));
        }
        reg
    }

    /// `x` encloses `reference` and exceeds it by at most `factor` relative.
    fn within_inflation(x: Interval, reference: Interval, factor: f64) -> bool {
        let lo = reference.lo() - reference.lo().abs() * factor;
        let hi = reference.hi() + reference.hi().abs() * factor;
        reference.leq(&x) && lo <= x.lo() && x.hi() <= hi
    }

    #[test]
    fn add_zero_inflates_only() {
        let p = PrecisionProfile::single();
        let reg = reg_with(&[(1.0, 3.0)]);
        let x = kappa(&reg, 0);
        let r = fps_add(&x, &FpsValue::zero(), &reg, &p).unwrap();
        assert!(within_inflation(iota(&r, &reg), iv(1.0, 3.0), 4.0 * p.u()));
    }

    #[test]
    fn mul_by_one_inflates_only() {
        let p = PrecisionProfile::double();
        let reg = reg_with(&[(1.0, 3.0)]);
        let x = kappa(&reg, 0);
        let r = fps_mul(&x, &FpsValue::point(1.0), &reg, &p).unwrap();
        // (1 + u)^2 - 1 < 3u, doubled for the outward rounding of each part
        assert!(within_inflation(iota(&r, &reg), iv(1.0, 3.0), 6.0 * p.u()));
    }

    #[test]
    fn self_division_of_a_point() {
        let p = PrecisionProfile::double();
        let reg = IndRegistry::new();
        let two = FpsValue::point(2.0);
        let r = iota(&fps_div(&two, &two, &reg, &p).unwrap(), &reg);
        assert!(r.contains(1.0));
        assert!(r.width() <= 3.0 * p.u());
    }

    #[test]
    fn division_by_possible_zero() {
        let p = PrecisionProfile::double();
        let reg = reg_with(&[(-1.0, 1.0)]);
        let x = kappa(&reg, 0);
        assert_eq!(fps_div(&FpsValue::point(1.0), &x, &reg, &p), Err(DomainError::DivisionByZero));
    }

    #[test]
    fn sqrt_examples() {
        let p = PrecisionProfile::double();
        let reg = reg_with(&[(-1.0, 4.0)]);
        let r = iota(&fps_sqrt(&FpsValue::point(4.0), &reg, &p).unwrap(), &reg);
        // 3u relative to the result's magnitude
        assert!(r.contains(2.0) && r.width() <= 3.0 * p.u() * 2.0);
        assert_eq!(fps_sqrt(&kappa(&reg, 0), &reg, &p), Err(DomainError::InvalidSqrt));
    }

    #[test]
    fn sqrt_with_zero_midpoint_enclosure_stays_sound() {
        let p = PrecisionProfile::double();
        let reg = reg_with(&[(0.0, 0.0)]);
        let r = fps_sqrt(&kappa(&reg, 0), &reg, &p).unwrap();
        assert!(iota(&r, &reg).contains(0.0));
    }

    #[test]
    fn t_equals_a_plus_b_times_c() {
        let reg = reg_with(&[(1.0, 2.0), (3.0, 5.0), (-2.0, 6.0)]);
        let (a, b, c) = (kappa(&reg, 0), kappa(&reg, 1), kappa(&reg, 2));
        let t = real_add(&a, &real_mul(&b, &c, &reg).unwrap(), &reg).unwrap();
        let zb = reg.mid(1);
        assert_eq!(t.padded(3), vec![Interval::ONE, reg.range(2), Interval::point(zb)]);
    }

    #[test]
    fn overflow_values_absorb() {
        let p = PrecisionProfile::single();
        let reg = reg_with(&[(0.0, 1.0)]);
        let inf = FpsValue::pos_overflow();
        let x = kappa(&reg, 0);
        assert!(fps_add(&inf, &x, &reg, &p).unwrap().is_pos_overflow());
        assert!(fps_sub(&x, &inf, &reg, &p).unwrap().is_neg_overflow());
        assert_eq!(fps_add(&inf, &FpsValue::neg_overflow(), &reg, &p), Err(DomainError::Indeterminate));
        assert_eq!(fps_mul(&inf, &x, &reg, &p), Err(DomainError::Indeterminate));
        assert!(fps_mul(&inf, &FpsValue::point(-2.0), &reg, &p).unwrap().is_neg_overflow());
        assert_eq!(fps_div(&x, &inf, &reg, &p).unwrap(), FpsValue::zero());
    }

    #[test]
    fn product_overflow_is_detected() {
        let p = PrecisionProfile::single();
        let reg = IndRegistry::new();
        let big = FpsValue::point(f32::MAX as f64);
        assert!(fps_mul(&big, &FpsValue::point(2.0), &reg, &p).unwrap().is_pos_overflow());
    }

    #[test]
    fn narrowest_form_is_no_wider_than_either() {
        let p = PrecisionProfile::double();
        let reg = reg_with(&[(1.0, 2.0), (-3.0, 8.0)]);
        let g = kappa(&reg, 0);
        let h = kappa(&reg, 1);
        let best = iota(&fps_mul(&g, &h, &reg, &p).unwrap(), &reg).width();
        let first = iota(&fps_mul_with(&g, &h, &reg, &p, FormChoice::First).unwrap(), &reg).width();
        let second = iota(&fps_mul_with(&g, &h, &reg, &p, FormChoice::Second).unwrap(), &reg).width();
        assert!(best <= first && best <= second);
    }
}
