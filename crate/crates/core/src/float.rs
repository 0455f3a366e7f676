//! Directed rounding built on top of the host's round-to-nearest arithmetic.
//!
//! Every basic operation is computed once in round-to-nearest and the exact
//! error is recovered with an error-free transform (TwoSum, or an FMA residual
//! for products, quotients and square roots). The sign of the error tells which
//! side of the nearest result the exact value lies on, so the opposite bound is
//! moved by a single ulp only when the operation was inexact. When the residual
//! cannot be trusted (results deep in the subnormal range) both bounds are
//! nudged. No global rounding-mode state is touched.

use std::cmp::Ordering;

/// Results smaller than this in magnitude fall back to nudging both ways; above
/// it FMA residuals are exactly representable.
const RESIDUAL_SAFE: f64 = 1.0e-288; // ~2^-956

/// Lower and upper rounding of an exact real value.
pub type Rounded = (f64, f64);

#[inline]
fn nudged(x: f64) -> Rounded {
    (x.next_down(), x.next_up())
}

#[inline]
fn by_residual(x: f64, residual_sign: f64) -> Rounded {
    if residual_sign > 0.0 {
        (x, x.next_up())
    } else if residual_sign < 0.0 {
        (x.next_down(), x)
    } else {
        (x, x)
    }
}

/// Handles a non-finite nearest result. Returns `None` when `x` is finite.
#[inline]
fn overflowed(x: f64, finite_operands: bool) -> Option<Rounded> {
    if x.is_finite() {
        return None;
    }
    if x.is_nan() || !finite_operands {
        return Some((x, x));
    }
    // finite operands, infinite nearest result: exact value is beyond MAX
    Some(if x > 0.0 {
        (f64::MAX, f64::INFINITY)
    } else {
        (f64::NEG_INFINITY, f64::MIN)
    })
}

pub fn add(a: f64, b: f64) -> Rounded {
    let s = a + b;
    if let Some(r) = overflowed(s, a.is_finite() && b.is_finite()) {
        return r;
    }
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    by_residual(s, err)
}

pub fn sub(a: f64, b: f64) -> Rounded {
    add(a, -b)
}

pub fn mul(a: f64, b: f64) -> Rounded {
    let p = a * b;
    if let Some(r) = overflowed(p, a.is_finite() && b.is_finite()) {
        return r;
    }
    if a == 0.0 || b == 0.0 {
        return (p, p);
    }
    if p.abs() < RESIDUAL_SAFE {
        return nudged(p);
    }
    by_residual(p, a.mul_add(b, -p))
}

pub fn div(a: f64, b: f64) -> Rounded {
    let q = a / b;
    if let Some(r) = overflowed(q, a.is_finite() && b.is_finite() && b != 0.0) {
        return r;
    }
    if a == 0.0 || b.is_infinite() {
        return (q, q);
    }
    if q.abs() < RESIDUAL_SAFE || a.abs() < RESIDUAL_SAFE {
        return nudged(q);
    }
    // a - q*b, exact
    let r = (-q).mul_add(b, a);
    by_residual(q, r * b.signum())
}

pub fn sqrt(a: f64) -> Rounded {
    let s = a.sqrt();
    if !s.is_finite() || a == 0.0 {
        return (s, s);
    }
    if a < RESIDUAL_SAFE {
        return nudged(s);
    }
    by_residual(s, (-s).mul_add(s, a))
}

/// Largest binary32 value (as f64) not above `x`.
pub fn f32_down(x: f64) -> f64 {
    if x.is_nan() {
        return x;
    }
    let f = x as f32;
    let f = if (f as f64) > x { f.next_down() } else { f };
    f as f64
}

/// Smallest binary32 value (as f64) not below `x`.
pub fn f32_up(x: f64) -> f64 {
    if x.is_nan() {
        return x;
    }
    let f = x as f32;
    let f = if (f as f64) < x { f.next_up() } else { f };
    f as f64
}

/// Round-to-nearest into binary32, widened back to f64.
#[inline]
pub fn to_f32(x: f64) -> f64 {
    x as f32 as f64
}

/// `m * 2^e` computed in chunks so intermediate scaling never overflows early.
fn ldexp(mut m: f64, mut e: i32) -> f64 {
    while e > 1000 {
        m *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        m *= 2f64.powi(-1000);
        e += 1000;
    }
    m * 2f64.powi(e)
}

/// A positive dyadic constant `mantissa * 2^exponent`, kept exact even when it
/// is outside the binary64 range (extended-precision thresholds are).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dyadic {
    pub mantissa: u64,
    pub exponent: i32,
}

impl Dyadic {
    pub const fn new(mantissa: u64, exponent: i32) -> Self {
        Dyadic { mantissa, exponent }
    }

    pub const fn pow2(exponent: i32) -> Self {
        Dyadic { mantissa: 1, exponent }
    }

    fn approx(&self) -> f64 {
        ldexp(self.mantissa as f64, self.exponent)
    }

    /// Exact comparison of a binary64 value against this constant.
    pub fn cmp_f64(&self, x: f64) -> Ordering {
        if x.is_nan() {
            return Ordering::Less;
        }
        if x <= 0.0 {
            return Ordering::Less;
        }
        if x.is_infinite() {
            return Ordering::Greater;
        }
        let (mx, ex) = decompose(x);
        cmp_dyadic(mx, ex, self.mantissa, self.exponent)
    }

    /// Largest binary64 value `<=` the constant.
    pub fn down(&self) -> f64 {
        let mut c = self.approx();
        while self.cmp_f64(c) == Ordering::Greater {
            c = c.next_down();
        }
        while c.next_up().is_finite() && self.cmp_f64(c.next_up()) != Ordering::Greater {
            c = c.next_up();
        }
        c
    }

    /// Smallest binary64 value `>=` the constant (possibly `+inf`).
    pub fn up(&self) -> f64 {
        let mut c = self.approx();
        while self.cmp_f64(c) == Ordering::Less {
            c = c.next_up();
        }
        while c.next_down() > 0.0 && self.cmp_f64(c.next_down()) != Ordering::Less {
            c = c.next_down();
        }
        c
    }

    pub fn is_f64_exact(&self) -> bool {
        self.down() == self.up()
    }

    pub fn half(&self) -> Dyadic {
        Dyadic::new(self.mantissa, self.exponent - 1)
    }
}

/// `x = m * 2^e` for positive finite x.
fn decompose(x: f64) -> (u64, i32) {
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if biased == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), biased - 1075)
    }
}

fn bit_len(m: u64) -> i32 {
    64 - m.leading_zeros() as i32
}

fn cmp_dyadic(m1: u64, e1: i32, m2: u64, e2: i32) -> Ordering {
    let l1 = e1 + bit_len(m1);
    let l2 = e2 + bit_len(m2);
    if l1 != l2 {
        return l1.cmp(&l2);
    }
    let a = (m1 as u128) << (64 - bit_len(m1));
    let b = (m2 as u128) << (64 - bit_len(m2));
    a.cmp(&b)
}

/// C99-style hexadecimal rendering of a binary64 value, e.g. `0x1.8p+1`.
pub fn format_hex(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sign = if x.is_sign_negative() { "-" } else { "" };
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if biased == 0 && frac == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if biased == 0 { (0, -1022) } else { (1, biased - 1023) };
    let mut digits = format!("{frac:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    if digits.is_empty() {
        format!("{sign}0x{lead}p{exp:+}")
    } else {
        format!("{sign}0x{lead}.{digits}p{exp:+}")
    }
}

/// Decimal rendering with at most `digits` significant digits, rounded
/// toward +inf when `up` is set and toward -inf otherwise, so the printed
/// number never lies on the wrong side of `x`.
pub fn format_directed(x: f64, digits: usize, up: bool) -> String {
    assert!(digits > 0);
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".to_string();
    }
    // 767 digits hold the exact expansion of every binary64 value
    let exact = format!("{:.767e}", x.abs());
    let (mant, exp) = exact.split_once('e').expect("exponent");
    let mut exp: i32 = exp.parse().expect("exponent");
    let all: Vec<u8> = mant.bytes().filter(u8::is_ascii_digit).map(|b| b - b'0').collect();
    let mut head = all[..digits.min(all.len())].to_vec();
    let inexact = all[head.len()..].iter().any(|&d| d != 0);
    if inexact && (x > 0.0) == up {
        let mut i = head.len();
        loop {
            if i == 0 {
                head.insert(0, 1);
                head.pop();
                exp += 1;
                break;
            }
            i -= 1;
            if head[i] == 9 {
                head[i] = 0;
            } else {
                head[i] += 1;
                break;
            }
        }
    }
    while head.len() > 1 && head.last() == Some(&0) {
        head.pop();
    }
    let sign = if x < 0.0 { "-" } else { "" };
    let text: String = head.iter().map(|d| char::from(b'0' + d)).collect();
    let (first, rest) = text.split_at(1);
    if (-5..17).contains(&exp) {
        plain_decimal(sign, &text, exp)
    } else if rest.is_empty() {
        format!("{sign}{first}e{exp}")
    } else {
        format!("{sign}{first}.{rest}e{exp}")
    }
}

fn plain_decimal(sign: &str, digits: &str, exp: i32) -> String {
    let point = exp + 1;
    if point <= 0 {
        format!("{sign}0.{}{digits}", "0".repeat((-point) as usize))
    } else if point as usize >= digits.len() {
        format!("{sign}{digits}{}", "0".repeat(point as usize - digits.len()))
    } else {
        let (a, b) = digits.split_at(point as usize);
        format!("{sign}{a}.{b}")
    }
}

/// Parses a decimal or C99 hexadecimal float literal.
pub fn parse_float(text: &str) -> Option<f64> {
    let t = text.trim();
    let lower = t.to_ascii_lowercase();
    match lower.as_str() {
        "inf" | "+inf" | "infinity" => return Some(f64::INFINITY),
        "-inf" | "-infinity" => return Some(f64::NEG_INFINITY),
        _ => {}
    }
    let unsigned = lower.trim_start_matches(['+', '-']);
    if unsigned.starts_with("0x") {
        return hexf_parse::parse_hexf64(t, false).ok();
    }
    t.parse::<f64>().ok().filter(|v| !v.is_nan())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directed_decimal_brackets_the_value() {
        assert_eq!(format_directed(0.1, 3, false), "0.1");
        assert_eq!(format_directed(0.1, 3, true), "0.101");
        assert_eq!(format_directed(-0.1, 3, false), "-0.101");
        assert_eq!(format_directed(11101.953125, 8, true), "11101.954");
        assert_eq!(format_directed(11101.953125, 11, true), "11101.953125");
        assert_eq!(format_directed(9.99999, 2, true), "10");
        assert_eq!(format_directed(1e300, 3, false), "1e300");
        assert_eq!(format_directed(f64::from_bits(1), 3, true), "4.95e-324");
        for x in [0.7f32 as f64, 1.0 / 3.0, -2.5e-7, 123456.789] {
            let lo: f64 = format_directed(x, 17, false).parse().unwrap();
            let hi: f64 = format_directed(x, 17, true).parse().unwrap();
            assert!(lo <= x && x <= hi);
        }
    }

    #[test]
    fn exact_operations_are_not_widened() {
        assert_eq!(add(1.0, 2.0), (3.0, 3.0));
        assert_eq!(mul(1.5, 4.0), (6.0, 6.0));
        assert_eq!(div(1.0, 4.0), (0.25, 0.25));
        assert_eq!(sqrt(16.0), (4.0, 4.0));
    }

    #[test]
    fn inexact_operations_bracket_the_exact_value() {
        let (lo, hi) = add(1.0, 1e-20);
        assert_eq!(lo, 1.0);
        assert_eq!(hi, 1.0f64.next_up());
        let (lo, hi) = add(1.0, -1e-20);
        assert_eq!(lo, 1.0f64.next_down());
        assert_eq!(hi, 1.0);
        let (lo, hi) = div(1.0, 3.0);
        assert!(lo < hi && hi == lo.next_up());
        let (lo, hi) = sqrt(2.0);
        assert!(lo * lo <= 2.0 && hi.next_up() > lo);
    }

    #[test]
    fn overflow_rounds_to_max_and_infinity() {
        assert_eq!(mul(f64::MAX, 2.0), (f64::MAX, f64::INFINITY));
        assert_eq!(add(f64::MIN, f64::MIN), (f64::NEG_INFINITY, f64::MIN));
    }

    #[test]
    fn binary32_directed_rounding() {
        let x = 0.1f64;
        assert!(f32_down(x) <= x && f32_up(x) >= x);
        assert_eq!((f32_up(x) as f32).next_down() as f64, f32_down(x));
        assert_eq!(f32_down(1e39), f32::MAX as f64);
        assert_eq!(f32_up(1e39), f64::INFINITY);
        assert_eq!(f32_up(0.5), 0.5);
    }

    #[test]
    fn dyadic_bounds() {
        let sigma_double_half = Dyadic::pow2(-1075);
        assert_eq!(sigma_double_half.down(), 0.0);
        assert_eq!(sigma_double_half.up(), f64::from_bits(1));
        let ext = Dyadic::pow2(-16446);
        assert_eq!(ext.down(), 0.0);
        assert_eq!(ext.up(), f64::from_bits(1));
        let big = Dyadic::new(u64::MAX, 16384 - 63);
        assert_eq!(big.down(), f64::MAX);
        assert_eq!(big.up(), f64::INFINITY);
        let max32 = Dyadic::new((1 << 24) - 1, 104);
        assert!(max32.is_f64_exact());
        assert_eq!(max32.down(), f32::MAX as f64);
        assert_eq!(max32.cmp_f64(f32::MAX as f64), Ordering::Equal);
    }

    #[test]
    fn hex_roundtrip() {
        for x in [1.0, -0.75, 0.1, f64::from_bits(1), f64::MAX, 0.0, 11101.953125] {
            let s = format_hex(x);
            assert_eq!(parse_float(&s), Some(x), "{s}");
        }
        assert_eq!(format_hex(3.0), "0x1.8p+1");
    }
}
