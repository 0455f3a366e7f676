//! Floating-point format profiles: the constants the abstract semantics is
//! parameterised by.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::float::{self, Dyadic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precision {
    Single,
    Double,
    Extended,
    DoubleRounding,
}

impl Precision {
    pub const ALL: [Precision; 4] = [
        Precision::Single,
        Precision::Double,
        Precision::Extended,
        Precision::DoubleRounding,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Precision::Single => "single",
            Precision::Double => "double",
            Precision::Extended => "extended",
            Precision::DoubleRounding => "double-rounding",
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(Precision::Single),
            "double" => Ok(Precision::Double),
            "extended" => Ok(Precision::Extended),
            "double-rounding" => Ok(Precision::DoubleRounding),
            other => Err(format!("unknown precision `{other}`")),
        }
    }
}

/// Significand width `p`, minimum exponent, relative rounding unit `u`,
/// smallest subnormal `sigma` and largest finite value `big_sigma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrecisionProfile {
    pub precision: Precision,
    pub p: u32,
    pub e_min: i32,
    u: f64,
    sigma: Dyadic,
    big_sigma: Dyadic,
}

impl PrecisionProfile {
    pub fn new(precision: Precision) -> Self {
        match precision {
            Precision::Single => Self::ieee(precision, 24, -126),
            Precision::Double => Self::ieee(precision, 53, -1022),
            // e_min = -16383 puts sigma at 2^-16446
            Precision::Extended => Self::ieee(precision, 64, -16383),
            Precision::DoubleRounding => PrecisionProfile {
                // extended register, binary64 memory
                u: (2f64.powi(11) + 2.0) * 2f64.powi(-64),
                sigma: Dyadic::new((1 << 11) + 1, -1086),
                ..Self::ieee(precision, 53, -1022)
            },
        }
    }

    fn ieee(precision: Precision, p: u32, e_min: i32) -> Self {
        let e_max = -e_min + 1;
        let p_i = p as i32;
        PrecisionProfile {
            precision,
            p,
            e_min,
            u: 2f64.powi(-p_i),
            sigma: Dyadic::pow2(e_min - p_i + 1),
            // (2 - 2^(1-p)) 2^e_max = (2^p - 1) 2^(e_max - p + 1)
            big_sigma: Dyadic::new((1u64 << (p - 1)) | ((1u64 << (p - 1)) - 1), e_max - p_i + 1),
        }
    }

    pub fn single() -> Self {
        Self::new(Precision::Single)
    }

    pub fn double() -> Self {
        Self::new(Precision::Double)
    }

    pub fn e_max(&self) -> i32 {
        -self.e_min + 1
    }

    /// Relative rounding error unit.
    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn sigma(&self) -> Dyadic {
        self.sigma
    }

    pub fn big_sigma(&self) -> Dyadic {
        self.big_sigma
    }

    /// Smallest binary64 value >= sigma/2, used for the absolute error term.
    pub fn half_sigma_up(&self) -> f64 {
        self.sigma.half().up()
    }

    /// `|x| < sigma/2`, decided exactly.
    pub fn below_half_sigma(&self, x: f64) -> bool {
        self.sigma.half().cmp_f64(x.abs()) == Ordering::Less
    }

    /// `|x| <= sigma/2`, decided exactly.
    pub fn within_half_sigma(&self, x: f64) -> bool {
        self.sigma.half().cmp_f64(x.abs()) != Ordering::Greater
    }

    /// `|x| < 2^e_min`, i.e. `x` is zero or in the subnormal range; decided
    /// exactly.
    pub fn below_normal_min(&self, x: f64) -> bool {
        Dyadic::pow2(self.e_min).cmp_f64(x.abs()) == Ordering::Less
    }

    /// `x > Sigma`, decided exactly.
    pub fn above_big_sigma(&self, x: f64) -> bool {
        self.big_sigma.cmp_f64(x) == Ordering::Greater
    }

    /// `x < -Sigma`, decided exactly.
    pub fn below_neg_big_sigma(&self, x: f64) -> bool {
        self.big_sigma.cmp_f64(-x) == Ordering::Greater
    }

    /// Number of roundings a single arithmetic operation goes through.
    pub fn rounding_steps(&self) -> u32 {
        match self.precision {
            Precision::DoubleRounding => 2,
            _ => 1,
        }
    }

    /// Rounds a literal (already parsed to the nearest binary64) into the
    /// working format. Formats wider than binary64 cannot hold the decimal
    /// exactly either, so they get a one-ulp enclosure unless the value is an
    /// integer.
    pub fn literal(&self, x: f64) -> (f64, f64) {
        match self.precision {
            Precision::Single => {
                let r = float::to_f32(x);
                (r, r)
            }
            Precision::Double | Precision::DoubleRounding => (x, x),
            Precision::Extended => {
                if x.fract() == 0.0 || !x.is_finite() {
                    (x, x)
                } else {
                    (x.next_down(), x.next_up())
                }
            }
        }
    }

    /// Round-to-nearest of an f64 value into the working format, for the
    /// formats the concrete executor can reproduce.
    pub fn round_nearest(&self, x: f64) -> f64 {
        match self.precision {
            Precision::Single => float::to_f32(x),
            _ => x,
        }
    }

    /// Outward rounding of an f64 enclosure into the working format.
    pub fn round_out(&self, lo: f64, hi: f64) -> (f64, f64) {
        match self.precision {
            Precision::Single => (float::f32_down(lo), float::f32_up(hi)),
            _ => (lo, hi),
        }
    }

    /// Next representable value above `x` in the working format, or `x` when
    /// that format is wider than binary64.
    pub fn successor(&self, x: f64) -> f64 {
        match self.precision {
            Precision::Single => (x as f32).next_up() as f64,
            Precision::Double | Precision::DoubleRounding => x.next_up(),
            Precision::Extended => x,
        }
    }

    pub fn predecessor(&self, x: f64) -> f64 {
        -self.successor(-x)
    }
}
