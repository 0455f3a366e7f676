use std::fmt;

use crate::interval::Interval;
use crate::profile::{Precision, PrecisionProfile};

use super::registry::IndRegistry;

/// A floating-point slope `(M, S)`: an enclosure `M` of the value at the
/// expansion point and one slope interval per independent variable.
///
/// The slope vector may be shorter than the registry; missing coordinates
/// read as `[0, 0]`, or as `[±inf, ±inf]` for the two overflow values.
#[derive(Clone)]
pub struct FpsValue {
    m: Interval,
    s: Vec<Interval>,
}

impl FpsValue {
    pub fn new(m: Interval, s: Vec<Interval>) -> FpsValue {
        let mut v = FpsValue { m, s };
        v.trim();
        v
    }

    /// A value with no dependency on the independent variables.
    pub fn constant(m: Interval) -> FpsValue {
        FpsValue { m, s: Vec::new() }
    }

    pub fn point(x: f64) -> FpsValue {
        FpsValue::constant(Interval::point(x))
    }

    pub fn zero() -> FpsValue {
        FpsValue::point(0.0)
    }

    pub fn pos_overflow() -> FpsValue {
        FpsValue::constant(Interval::POS_INF)
    }

    pub fn neg_overflow() -> FpsValue {
        FpsValue::constant(Interval::NEG_INF)
    }

    pub fn m(&self) -> Interval {
        self.m
    }

    pub fn slopes(&self) -> &[Interval] {
        &self.s
    }

    /// Coordinate `i` of the slope vector, padded on demand.
    pub fn coord(&self, i: usize) -> Interval {
        match self.s.get(i) {
            Some(c) => *c,
            None => self.fill(),
        }
    }

    /// Slope vector padded to `n` coordinates.
    pub fn padded(&self, n: usize) -> Vec<Interval> {
        (0..n.max(self.s.len())).map(|i| self.coord(i)).collect()
    }

    fn fill(&self) -> Interval {
        if self.is_pos_overflow() {
            Interval::POS_INF
        } else if self.is_neg_overflow() {
            Interval::NEG_INF
        } else {
            Interval::ZERO
        }
    }

    pub fn is_pos_overflow(&self) -> bool {
        self.m == Interval::POS_INF && self.s.iter().all(|c| *c == Interval::POS_INF)
    }

    pub fn is_neg_overflow(&self) -> bool {
        self.m == Interval::NEG_INF && self.s.iter().all(|c| *c == Interval::NEG_INF)
    }

    pub fn is_overflow(&self) -> bool {
        self.is_pos_overflow() || self.is_neg_overflow()
    }

    /// True when no slope coordinate is nonzero.
    pub fn is_non_relational(&self) -> bool {
        self.s.iter().all(|c| *c == Interval::ZERO)
    }

    /// Drops trailing coordinates equal to the padding value.
    fn trim(&mut self) {
        let fill = self.fill();
        while self.s.last() == Some(&fill) {
            self.s.pop();
        }
    }

    pub(crate) fn from_parts(m: Interval, s: Vec<Interval>) -> FpsValue {
        FpsValue::new(m, s)
    }

    pub fn neg(&self) -> FpsValue {
        FpsValue::new(self.m.neg(), self.s.iter().map(Interval::neg).collect())
    }
}

impl PartialEq for FpsValue {
    fn eq(&self, other: &Self) -> bool {
        let n = self.s.len().max(other.s.len());
        self.m == other.m && (0..n).all(|i| self.coord(i) == other.coord(i))
    }
}

impl fmt::Debug for FpsValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for FpsValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pos_overflow() {
            return f.write_str("(+inf, p_inf)");
        }
        if self.is_neg_overflow() {
            return f.write_str("(-inf, m_inf)");
        }
        write!(f, "({}, <", self.m)?;
        for (i, c) in self.s.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(">)")
    }
}

/// `M + S . (V - mid)`, rounded outward. Indeterminate endpoint combinations
/// give top.
pub fn iota(v: &FpsValue, reg: &IndRegistry) -> Interval {
    if v.is_overflow() {
        return v.m;
    }
    let mut acc = v.m;
    for (i, c) in v.s.iter().enumerate() {
        if *c == Interval::ZERO {
            continue;
        }
        let dev = if i < reg.len() { reg.deviation(i) } else { Interval::ZERO };
        let term = match c.mul(&dev) {
            Ok(t) => t,
            Err(_) => return Interval::TOP,
        };
        acc = match acc.add(&term) {
            Ok(a) => a,
            Err(_) => return Interval::TOP,
        };
    }
    acc
}

/// `([m, m], delta_l)` for the independent variable `l`, `m` its frozen
/// expansion point.
pub fn kappa(reg: &IndRegistry, l: usize) -> FpsValue {
    let mut s = vec![Interval::ZERO; l + 1];
    s[l] = Interval::ONE;
    FpsValue::new(Interval::point(reg.mid(l)), s)
}

fn join_all(v: &FpsValue, with: Interval, n: usize) -> FpsValue {
    FpsValue::new(
        v.m.join(&with),
        v.padded(n).iter().map(|c| c.join(&with)).collect(),
    )
}

/// Zero and overflow normalisation.
///
/// Total rules (everything rounds to zero, everything overflows) are decided
/// first. Otherwise each partial rule whose region `ι(v)` meets is applied in
/// turn; the conditions are all evaluated on the original `ι(v)`.
pub fn phi(v: &FpsValue, reg: &IndRegistry, prof: &PrecisionProfile) -> FpsValue {
    if v.is_overflow() {
        return v.clone();
    }
    let i = iota(v, reg);
    if i.is_bottom() {
        return v.clone();
    }
    if prof.within_half_sigma(i.lo()) && prof.within_half_sigma(i.hi()) {
        return FpsValue::zero();
    }
    if prof.above_big_sigma(i.lo()) {
        return FpsValue::pos_overflow();
    }
    if prof.below_neg_big_sigma(i.hi()) {
        return FpsValue::neg_overflow();
    }
    let mut out = v.clone();
    if prof.below_half_sigma(i.mig()) {
        // M only takes zero in when it may itself round to zero
        let m = if prof.below_half_sigma(out.m.mig()) { out.m.join(&Interval::ZERO) } else { out.m };
        out = FpsValue::new(m, out.s.iter().map(|c| c.join(&Interval::ZERO)).collect());
    }
    if prof.above_big_sigma(i.hi()) {
        out = join_all(&out, Interval::POS_INF, reg.len());
    }
    if prof.below_neg_big_sigma(i.lo()) {
        out = join_all(&out, Interval::NEG_INF, reg.len());
    }
    out
}

/// Threshold factor `t` such that `|x| <= t * |y|` guarantees
/// `rnd(x + y) = y` for a float `y`: half an ulp at the bottom of `y`'s
/// binade, halved again when the result is rounded twice.
fn total_absorption_factor(prof: &PrecisionProfile) -> f64 {
    match prof.precision {
        Precision::DoubleRounding => prof.u() / 4.0,
        _ => prof.u() / 2.0,
    }
}

/// Outcome of the absorption test of `g` against `h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Absorption {
    Total,
    Partial,
    None,
}

pub fn absorption(g: &FpsValue, h: &FpsValue, reg: &IndRegistry, prof: &PrecisionProfile) -> Absorption {
    if g.is_overflow() || h.is_overflow() {
        return Absorption::None;
    }
    let ig = iota(g, reg);
    let ih = iota(h, reg);
    if ig.is_bottom() || ih.is_bottom() {
        return Absorption::None;
    }
    let total = crate::float::mul(total_absorption_factor(prof), ih.mig()).0;
    if ig.mag() <= total && ih.mig() > 0.0 {
        return Absorption::Total;
    }
    let partial = crate::float::mul(prof.u(), ih.mag()).1;
    if ig.mig() <= partial && ih.mag() > 0.0 {
        return Absorption::Partial;
    }
    Absorption::None
}

/// Reduction of `g` with respect to `h` in a sum: when `g` is certainly
/// absorbed it becomes zero, when it may be absorbed zero is joined to its
/// slopes, and to `M` when `M` itself may be absorbed.
pub fn rho(g: &FpsValue, h: &FpsValue, reg: &IndRegistry, prof: &PrecisionProfile) -> FpsValue {
    match absorption(g, h, reg, prof) {
        Absorption::Total => FpsValue::zero(),
        Absorption::Partial => {
            let zone = crate::float::mul(prof.u(), iota(h, reg).mag()).1;
            let m = if g.m.mig() <= zone { g.m.join(&Interval::ZERO) } else { g.m };
            FpsValue::new(m, g.s.iter().map(|c| c.join(&Interval::ZERO)).collect())
        }
        Absorption::None => g.clone(),
    }
}

/// Non-relational value `(ι(v), 0)`.
pub fn forget(v: &FpsValue, reg: &IndRegistry) -> FpsValue {
    FpsValue::constant(iota(v, reg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slope::registry::Origin;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    fn one_var(range: Interval) -> IndRegistry {
        let mut reg = IndRegistry::new();
        reg.register(Origin::named("x"), range);
        reg
    }

    #[test]
    fn iota_identity_slope() {
        let reg = one_var(iv(2.0, 4.0));
        let v = FpsValue::new(iv(3.0, 3.0), vec![Interval::ONE]);
        assert_eq!(iota(&v, &reg), iv(2.0, 4.0));
        assert_eq!(iota(&FpsValue::zero(), &reg), Interval::ZERO);
    }

    #[test]
    fn iota_dot_product() {
        let reg = one_var(iv(-1.0, 1.0));
        let v = FpsValue::new(iv(1.0, 1.0), vec![iv(0.0, 2.0)]);
        // [0,2] * [-1,1] = [-2,2]; 1 + [-2,2]
        assert_eq!(iota(&v, &reg), iv(-1.0, 3.0));
    }

    #[test]
    fn kappa_examples() {
        let mut reg = IndRegistry::new();
        let a = reg.register(Origin::named("a"), iv(4.0, 8.0));
        assert_eq!(kappa(&reg, a), FpsValue::new(iv(6.0, 6.0), vec![Interval::ONE]));
        let x = reg.register(Origin::named("x"), iv(0.71, 1.35));
        let k = kappa(&reg, x);
        assert_eq!(k.m(), Interval::point(0.71 + 0.5 * (1.35 - 0.71)));
        assert_eq!(k.coord(0), Interval::ZERO);
        assert_eq!(k.coord(1), Interval::ONE);
        let p = reg.register(Origin::named("p"), Interval::point(2.5));
        assert_eq!(iota(&kappa(&reg, p), &reg), Interval::point(2.5));
    }

    #[test]
    fn padding_preserves_iota() {
        let mut reg = one_var(iv(0.0, 2.0));
        let v = kappa(&reg, 0);
        let before = iota(&v, &reg);
        reg.register(Origin::named("y"), iv(-5.0, 5.0));
        assert_eq!(iota(&v, &reg), before);
        assert_eq!(v.padded(2), vec![Interval::ONE, Interval::ZERO]);
    }

    #[test]
    fn phi_flush_to_zero() {
        let p = PrecisionProfile::single();
        let reg = IndRegistry::new();
        let q = 2f64.powi(-151);
        let v = FpsValue::constant(iv(-q, q));
        assert_eq!(phi(&v, &reg, &p), FpsValue::zero());
        // exactly sigma/2 still rounds to zero (ties to even)
        let h = 2f64.powi(-150);
        assert_eq!(phi(&FpsValue::constant(iv(-h, h)), &reg, &p), FpsValue::zero());
        // one step beyond does not
        let w = FpsValue::constant(iv(0.0, h.next_up()));
        assert_ne!(phi(&w, &reg, &p), FpsValue::zero());
    }

    #[test]
    fn phi_partial_zero_joins_slopes() {
        let p = PrecisionProfile::single();
        let reg = one_var(iv(-1.0, 1.0));
        let v = FpsValue::new(iv(0.5, 0.5), vec![iv(1.0, 1.0)]);
        let r = phi(&v, &reg, &p);
        assert_eq!(r, FpsValue::new(iv(0.5, 0.5), vec![iv(0.0, 1.0)]));
        let v = FpsValue::new(iv(0.0, 0.5), vec![iv(1.0, 1.0)]);
        let r = phi(&v, &reg, &p);
        assert_eq!(r, FpsValue::new(iv(0.0, 0.5), vec![iv(0.0, 1.0)]));
        let v = FpsValue::new(iv(1e-50, 0.5), vec![iv(1.0, 1.0)]);
        assert_eq!(phi(&v, &reg, &p).m(), iv(0.0, 0.5));
    }

    #[test]
    fn rho_partial_keeps_m_away_from_zero() {
        let p = PrecisionProfile::single();
        let reg = one_var(iv(0.0, 1.0));
        let one = FpsValue::point(1.0);
        let x = kappa(&reg, 0);
        assert_eq!(rho(&x, &one, &reg, &p), FpsValue::new(iv(0.5, 0.5), vec![iv(0.0, 1.0)]));
        let small = FpsValue::new(iv(1e-9, 1e-9), vec![iv(1.0, 1.0)]);
        assert_eq!(rho(&small, &one, &reg, &p).m(), iv(0.0, 1e-9));
    }

    #[test]
    fn phi_overflow_cases() {
        let p = PrecisionProfile::single();
        let reg = one_var(iv(-1.0, 1.0));
        let max = f32::MAX as f64;
        let over = FpsValue::constant(iv(max.next_up(), 1e300));
        assert!(phi(&over, &reg, &p).is_pos_overflow());
        assert!(phi(&over.neg(), &reg, &p).is_neg_overflow());
        let at_max = FpsValue::constant(iv(1.0, max));
        assert_eq!(phi(&at_max, &reg, &p), at_max);
        let partial = FpsValue::new(iv(max, max), vec![iv(1e30, 1e30)]);
        let r = phi(&partial, &reg, &p);
        assert_eq!(r.m(), iv(max, f64::INFINITY));
        assert_eq!(r.coord(0), iv(1e30, f64::INFINITY));
        let ordinary = FpsValue::constant(iv(1.0, 2.0));
        assert_eq!(phi(&ordinary, &reg, &p), ordinary);
    }

    #[test]
    fn rho_total_absorption() {
        let p = PrecisionProfile::single();
        let reg = IndRegistry::new();
        let small = FpsValue::point(p.literal(1e-4).0);
        let big = FpsValue::point(p.literal(1e4).0);
        assert_eq!(absorption(&small, &big, &reg, &p), Absorption::Total);
        assert_eq!(rho(&small, &big, &reg, &p), FpsValue::zero());
        assert_eq!(rho(&big, &small, &reg, &p), big);
        assert_eq!(rho(&big, &big, &reg, &p), big);
    }

    #[test]
    fn rho_partial_absorption() {
        let p = PrecisionProfile::single();
        let u = p.u();
        let reg = one_var(iv(-1.0, 1.0));
        // g spans [0.9 u, 1.1 u]: overlaps the test region [0, u * 1]
        let g = FpsValue::new(Interval::point(u), vec![Interval::point(0.1 * u)]);
        let h = FpsValue::point(1.0);
        assert_eq!(absorption(&g, &h, &reg, &p), Absorption::Partial);
        let r = rho(&g, &h, &reg, &p);
        assert_eq!(r.m(), iv(0.0, u));
        assert_eq!(r.coord(0), iv(0.0, 0.1 * u));
    }

    #[test]
    fn total_absorption_threshold_is_sound_at_binade_bottom() {
        // |x| <= u|y| is not enough: 1.5 + 1.5 * 2^-24 rounds up in binary32
        let p = PrecisionProfile::single();
        let reg = IndRegistry::new();
        let y = 1.5f64;
        let x = 1.5 * 2f64.powi(-24);
        assert_ne!(((y as f32) + (x as f32)) as f64, y);
        let a = absorption(&FpsValue::point(x), &FpsValue::point(y), &reg, &p);
        assert_ne!(a, Absorption::Total);
    }
}
