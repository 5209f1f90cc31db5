//! Exact integer and rational arithmetic plus log-space floats.
//!
//! Every factorial-like quantity in the degree law lives here. Factorials and
//! odd products are memoized in process-wide tables that grow on demand behind
//! a read/write lock, so concurrent readers never block each other once the
//! table is warm.

use std::cmp::Ordering;
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{OnceLock, RwLock};

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision signed integer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactInteger(BigInt);

impl ExactInteger {
    pub fn zero() -> Self {
        Self(BigInt::zero())
    }

    pub fn one() -> Self {
        Self(BigInt::one())
    }

    /// `2^exponent`.
    pub fn pow2(exponent: usize) -> Self {
        Self(BigInt::one() << exponent)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    /// Natural logarithm of a positive integer, accurate to about one ulp
    /// regardless of magnitude. Returns `None` for zero or negative values.
    pub fn ln(&self) -> Option<f64> {
        if self.0.sign() != Sign::Plus {
            return None;
        }
        let bits = self.0.bits();
        let shift = bits.saturating_sub(64);
        let top = (&self.0 >> shift).to_u64()?;
        Some((top as f64).ln() + shift as f64 * LN_2)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub(crate) fn from_big_int(value: BigInt) -> Self {
        Self(value)
    }

    #[cfg(test)]
    pub(crate) fn as_big(&self) -> &BigInt {
        &self.0
    }
}

impl From<u64> for ExactInteger {
    fn from(value: u64) -> Self {
        Self(BigInt::from(value))
    }
}

impl From<i64> for ExactInteger {
    fn from(value: i64) -> Self {
        Self(BigInt::from(value))
    }
}

impl From<usize> for ExactInteger {
    fn from(value: usize) -> Self {
        Self(BigInt::from(value))
    }
}

impl fmt::Display for ExactInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

macro_rules! forward_binop {
    ($ty:ident, $trait:ident, $method:ident) => {
        impl $trait<&$ty> for &$ty {
            type Output = $ty;
            fn $method(self, rhs: &$ty) -> $ty {
                $ty((&self.0).$method(&rhs.0))
            }
        }

        impl $trait<$ty> for $ty {
            type Output = $ty;
            fn $method(self, rhs: $ty) -> $ty {
                $ty(self.0.$method(rhs.0))
            }
        }

        impl $trait<&$ty> for $ty {
            type Output = $ty;
            fn $method(self, rhs: &$ty) -> $ty {
                $ty(self.0.$method(&rhs.0))
            }
        }
    };
}

forward_binop!(ExactInteger, Add, add);
forward_binop!(ExactInteger, Sub, sub);
forward_binop!(ExactInteger, Mul, mul);

impl Neg for ExactInteger {
    type Output = ExactInteger;
    fn neg(self) -> ExactInteger {
        ExactInteger(-self.0)
    }
}

/// Rational number in lowest terms with a positive denominator.
///
/// Canonical form is maintained by every constructor and operation, so
/// structural equality is value equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactRational(BigRational);

impl ExactRational {
    pub fn new(numerator: impl Into<ExactInteger>, denominator: impl Into<ExactInteger>) -> Result<Self> {
        let den = denominator.into().0;
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(Self(BigRational::new(numerator.into().0, den)))
    }

    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn one() -> Self {
        Self(BigRational::one())
    }

    pub fn from_integer(value: impl Into<ExactInteger>) -> Self {
        Self(BigRational::from_integer(value.into().0))
    }

    pub(crate) fn from_big(numerator: BigInt, denominator: BigInt) -> Self {
        debug_assert!(!denominator.is_zero());
        Self(BigRational::new(numerator, denominator))
    }

    pub fn numerator(&self) -> ExactInteger {
        ExactInteger(self.0.numer().clone())
    }

    pub fn denominator(&self) -> ExactInteger {
        ExactInteger(self.0.denom().clone())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    /// Nearest `f64`. Values beyond the float range saturate to infinity or
    /// flush to zero.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Natural log of a positive value, computed from the numerator and
    /// denominator separately so it stays finite far outside the `f64` range.
    pub fn ln(&self) -> Option<f64> {
        if !self.0.is_positive() {
            return None;
        }
        Some(self.numerator().ln()? - self.denominator().ln()?)
    }

    pub fn mul_int(&self, factor: u64) -> Self {
        Self(&self.0 * BigInt::from(factor))
    }

    pub fn div_int(&self, divisor: u64) -> Self {
        assert!(divisor != 0, "division of a rational by zero");
        Self(&self.0 / BigInt::from(divisor))
    }

    /// `"numerator/denominator"` in decimal digits, always with the slash.
    pub fn to_fraction_string(&self) -> String {
        format!("{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl From<ExactInteger> for ExactRational {
    fn from(value: ExactInteger) -> Self {
        Self(BigRational::from_integer(value.0))
    }
}

forward_binop!(ExactRational, Add, add);
forward_binop!(ExactRational, Sub, sub);
forward_binop!(ExactRational, Mul, mul);

impl Div<&ExactRational> for &ExactRational {
    type Output = ExactRational;
    fn div(self, rhs: &ExactRational) -> ExactRational {
        assert!(!rhs.is_zero(), "division of a rational by zero");
        ExactRational(&self.0 / &rhs.0)
    }
}

impl Div for ExactRational {
    type Output = ExactRational;
    fn div(self, rhs: ExactRational) -> ExactRational {
        &self / &rhs
    }
}

impl Neg for ExactRational {
    type Output = ExactRational;
    fn neg(self) -> ExactRational {
        ExactRational(-self.0)
    }
}

impl Sum for ExactRational {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ExactRational::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a ExactRational> for ExactRational {
    fn sum<I: Iterator<Item = &'a ExactRational>>(iter: I) -> Self {
        iter.fold(ExactRational::zero(), |acc, x| acc + x)
    }
}

/// A nonnegative quantity stored as its natural logarithm.
///
/// Exact zero is carried by a flag instead of `-inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogFloat {
    log_value: f64,
    zero: bool,
}

impl LogFloat {
    pub const fn zero() -> Self {
        Self {
            log_value: 0.0,
            zero: true,
        }
    }

    pub const fn one() -> Self {
        Self {
            log_value: 0.0,
            zero: false,
        }
    }

    /// Wraps a natural logarithm. The input must be finite.
    pub fn from_ln(log_value: f64) -> Self {
        assert!(
            log_value.is_finite(),
            "LogFloat::from_ln needs a finite log, got {log_value}"
        );
        Self { log_value, zero: false }
    }

    /// `None` for negative or non-finite inputs.
    pub fn from_f64(value: f64) -> Option<Self> {
        if value == 0.0 {
            Some(Self::zero())
        } else if value > 0.0 && value.is_finite() {
            Some(Self::from_ln(value.ln()))
        } else {
            None
        }
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// Natural log, `None` for exact zero.
    pub fn ln(&self) -> Option<f64> {
        (!self.zero).then_some(self.log_value)
    }

    pub fn to_f64(&self) -> f64 {
        if self.zero {
            0.0
        } else {
            self.log_value.exp()
        }
    }

    /// Sum of many terms by pairwise log-sum-exp, which keeps rounding error
    /// growth logarithmic in the number of terms.
    pub fn sum_pairwise(terms: &[LogFloat]) -> LogFloat {
        match terms.len() {
            0 => LogFloat::zero(),
            1 => terms[0],
            len => {
                let (left, right) = terms.split_at(len / 2);
                Self::sum_pairwise(left) + Self::sum_pairwise(right)
            }
        }
    }
}

impl Add for LogFloat {
    type Output = LogFloat;
    fn add(self, rhs: LogFloat) -> LogFloat {
        if self.zero {
            return rhs;
        }
        if rhs.zero {
            return self;
        }
        let (hi, lo) = if self.log_value >= rhs.log_value {
            (self.log_value, rhs.log_value)
        } else {
            (rhs.log_value, self.log_value)
        };
        LogFloat::from_ln(hi + (lo - hi).exp().ln_1p())
    }
}

impl Mul for LogFloat {
    type Output = LogFloat;
    fn mul(self, rhs: LogFloat) -> LogFloat {
        if self.zero || rhs.zero {
            LogFloat::zero()
        } else {
            LogFloat::from_ln(self.log_value + rhs.log_value)
        }
    }
}

impl Div for LogFloat {
    type Output = LogFloat;
    fn div(self, rhs: LogFloat) -> LogFloat {
        assert!(!rhs.zero, "LogFloat division by zero");
        if self.zero {
            LogFloat::zero()
        } else {
            LogFloat::from_ln(self.log_value - rhs.log_value)
        }
    }
}

impl PartialOrd for LogFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self.zero, other.zero) {
            (true, true) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            (false, false) => self.log_value.partial_cmp(&other.log_value),
        }
    }
}

/// Grow-on-demand table of `f(0), f(1), ...` where each entry is derived from
/// its predecessor.
struct MemoTable {
    values: RwLock<Vec<BigInt>>,
    step: fn(&BigInt, usize) -> BigInt,
}

impl MemoTable {
    fn get(&self, n: usize) -> BigInt {
        {
            let values = self.values.read().unwrap_or_else(|e| e.into_inner());
            if let Some(v) = values.get(n) {
                return v.clone();
            }
        }
        let mut values = self.values.write().unwrap_or_else(|e| e.into_inner());
        while values.len() <= n {
            let i = values.len();
            let next = (self.step)(&values[i - 1], i);
            values.push(next);
        }
        values[n].clone()
    }
}

fn factorial_table() -> &'static MemoTable {
    static TABLE: OnceLock<MemoTable> = OnceLock::new();
    TABLE.get_or_init(|| MemoTable {
        values: RwLock::new(vec![BigInt::one()]),
        step: |prev, i| prev * BigInt::from(i),
    })
}

fn odd_product_table() -> &'static MemoTable {
    static TABLE: OnceLock<MemoTable> = OnceLock::new();
    TABLE.get_or_init(|| MemoTable {
        values: RwLock::new(vec![BigInt::one()]),
        step: |prev, i| prev * BigInt::from(2 * i - 1),
    })
}

pub(crate) fn factorial_big(n: usize) -> BigInt {
    factorial_table().get(n)
}

pub(crate) fn odd_product_big(n: usize) -> BigInt {
    odd_product_table().get(n)
}

/// `n!`, exact.
pub fn factorial(n: usize) -> ExactInteger {
    ExactInteger(factorial_big(n))
}

/// `1 · 3 · 5 ⋯ (2n − 1)`, computed as a direct product. `n = 0` gives the
/// empty product 1.
pub fn odd_product(n: usize) -> ExactInteger {
    ExactInteger(odd_product_big(n))
}

/// The `j`-th summand of the bracketed series,
/// `2^{-2(j+1)} (k+2j)! / ((j+1)! (k+j)!)`.
pub fn sum_term(k: usize, j: usize) -> ExactRational {
    assert!(k >= 1, "sum_term needs k >= 1");
    let numerator = factorial_big(k + 2 * j);
    let denominator = (factorial_big(j + 1) * factorial_big(k + j)) << (2 * (j + 1));
    ExactRational::from_big(numerator, denominator)
}

const EXACT_LOG_FACTORIAL_LIMIT: usize = 20;

fn small_log_factorials() -> &'static [f64; EXACT_LOG_FACTORIAL_LIMIT + 1] {
    static TABLE: OnceLock<[f64; EXACT_LOG_FACTORIAL_LIMIT + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [0.0; EXACT_LOG_FACTORIAL_LIMIT + 1];
        let mut fact: u64 = 1;
        for (n, slot) in table.iter_mut().enumerate().skip(1) {
            fact *= n as u64;
            *slot = (fact as f64).ln();
        }
        table
    })
}

/// `ln(n!)` as a [`LogFloat`]. Exact table for `n <= 20`, Stirling series with
/// four correction terms above that (truncation error below `1e-15`).
pub fn log_factorial(n: u64) -> LogFloat {
    if n <= EXACT_LOG_FACTORIAL_LIMIT as u64 {
        return LogFloat::from_ln(small_log_factorials()[n as usize]);
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    LogFloat::from_ln(x * (x.ln() - 1.0) + 0.5 * (2.0 * PI * x).ln() + series)
}
