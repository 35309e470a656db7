//! Fixed-point traffic quantities.
//!
//! Traffic is a fluid rate measured in traffic-units per tick. It is stored as
//! an integer count of micro-units so that per-tick flow accounting
//! (`offered = served + dropped`) holds exactly, independent of summation
//! order. Six decimal places is also the precision of every CSV artifact.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub, SubAssign};

use serde::{Deserialize, Serialize};

const MICROS_PER_UNIT: i64 = 1_000_000;

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Traffic(i64);

impl Traffic {
    pub const ZERO: Traffic = Traffic(0);

    pub const fn from_micros(micros: i64) -> Self {
        Traffic(micros)
    }

    pub const fn from_units_int(units: i64) -> Self {
        Traffic(units * MICROS_PER_UNIT)
    }

    /// Rounds to the nearest micro-unit, halves away from zero.
    pub fn from_units(units: f64) -> Self {
        Traffic((units * MICROS_PER_UNIT as f64).round() as i64)
    }

    pub const fn micros(self) -> i64 {
        self.0
    }

    pub fn as_units(self) -> f64 {
        self.0 as f64 / MICROS_PER_UNIT as f64
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Multiplies by `num / den`, rounding half away from zero.
    pub fn scale_ratio(self, num: i64, den: i64) -> Self {
        debug_assert!(den > 0);
        let prod = self.0 as i128 * num as i128;
        let den = den as i128;
        let half = den / 2;
        let q = if prod >= 0 {
            (prod + half) / den
        } else {
            (prod - half) / den
        };
        Traffic(q as i64)
    }

    pub fn scale(self, factor: f64) -> Self {
        Traffic((self.0 as f64 * factor).round() as i64)
    }

    /// Divides evenly into `parts`, rounding half away from zero.
    pub fn div_parts(self, parts: usize) -> Self {
        if parts == 0 {
            return Traffic::ZERO;
        }
        self.scale_ratio(1, parts as i64)
    }

    pub fn saturating_sub(self, other: Traffic) -> Self {
        Traffic((self.0 - other.0).max(0))
    }
}

impl Add for Traffic {
    type Output = Traffic;
    fn add(self, rhs: Traffic) -> Traffic {
        Traffic(self.0 + rhs.0)
    }
}

impl AddAssign for Traffic {
    fn add_assign(&mut self, rhs: Traffic) {
        self.0 += rhs.0;
    }
}

impl Sub for Traffic {
    type Output = Traffic;
    fn sub(self, rhs: Traffic) -> Traffic {
        Traffic(self.0 - rhs.0)
    }
}

impl SubAssign for Traffic {
    fn sub_assign(&mut self, rhs: Traffic) {
        self.0 -= rhs.0;
    }
}

impl Sum for Traffic {
    fn sum<I: Iterator<Item = Traffic>>(iter: I) -> Traffic {
        iter.fold(Traffic::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Traffic> for Traffic {
    fn sum<I: Iterator<Item = &'a Traffic>>(iter: I) -> Traffic {
        iter.copied().sum()
    }
}

/// Always prints exactly six decimals.
impl fmt::Display for Traffic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let whole = abs / MICROS_PER_UNIT as u64;
        let frac = abs % MICROS_PER_UNIT as u64;
        write!(f, "{sign}{whole}.{frac:06}")
    }
}

/// Per-class traffic rates of a single user (or an aggregate of users).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRates {
    pub control: Traffic,
    pub realtime: Traffic,
    pub nonrealtime: Traffic,
}

impl ClassRates {
    pub fn new(control: Traffic, realtime: Traffic, nonrealtime: Traffic) -> Self {
        Self {
            control,
            realtime,
            nonrealtime,
        }
    }

    pub fn total(&self) -> Traffic {
        self.control + self.realtime + self.nonrealtime
    }

    pub fn map(&self, mut f: impl FnMut(Traffic) -> Traffic) -> Self {
        Self {
            control: f(self.control),
            realtime: f(self.realtime),
            nonrealtime: f(self.nonrealtime),
        }
    }

    pub fn zip_with(
        &self,
        other: &ClassRates,
        mut f: impl FnMut(Traffic, Traffic) -> Traffic,
    ) -> Self {
        Self {
            control: f(self.control, other.control),
            realtime: f(self.realtime, other.realtime),
            nonrealtime: f(self.nonrealtime, other.nonrealtime),
        }
    }
}

impl Add for ClassRates {
    type Output = ClassRates;
    fn add(self, rhs: ClassRates) -> ClassRates {
        self.zip_with(&rhs, Add::add)
    }
}

impl AddAssign for ClassRates {
    fn add_assign(&mut self, rhs: ClassRates) {
        *self = *self + rhs;
    }
}

impl Sum for ClassRates {
    fn sum<I: Iterator<Item = ClassRates>>(iter: I) -> ClassRates {
        iter.fold(ClassRates::default(), Add::add)
    }
}
