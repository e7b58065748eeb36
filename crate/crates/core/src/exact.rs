//! Closed-form expectations as exact rationals.
//!
//! Every value here is computed in arbitrary precision; conversion to `f64`
//! happens only when rendering.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("cannot parse {0:?} as a rational number")]
    Parse(String),
}

fn out_of_range(msg: impl Into<String>) -> FormulaError {
    FormulaError::OutOfRange(msg.into())
}

/// Reduced rational with a positive denominator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactValue(BigRational);

impl ExactValue {
    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn one() -> Self {
        Self(BigRational::one())
    }

    pub fn integer(v: i64) -> Self {
        Self(BigRational::from_integer(BigInt::from(v)))
    }

    /// `num / den`, reduced. Panics if `den == 0`.
    pub fn ratio(num: i64, den: i64) -> Self {
        Self(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn into_rational(self) -> BigRational {
        self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn abs(&self) -> Self {
        Self(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        Self(self.0.recip())
    }

    /// Nearest `f64`, correct even when numerator and denominator overflow.
    pub fn to_f64(&self) -> f64 {
        if let Some(v) = self.0.to_f64().filter(|v| v.is_finite()) {
            return v;
        }
        // Scale down both sides so they fit in an f64 before dividing.
        let shift = self.numer().bits().max(self.denom().bits()).saturating_sub(1000);
        let num = (self.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let den = (self.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        num / den
    }
}

impl From<BigRational> for ExactValue {
    fn from(r: BigRational) -> Self {
        Self(r)
    }
}

impl From<i64> for ExactValue {
    fn from(v: i64) -> Self {
        Self::integer(v)
    }
}

impl fmt::Display for ExactValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

/// Accepts `p`, `p/q` and plain decimals such as `-12.375`, all exactly.
impl FromStr for ExactValue {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || FormulaError::Parse(s.to_string());
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| err())?;
            let q: BigInt = q.trim().parse().map_err(|_| err())?;
            if q.is_zero() {
                return Err(err());
            }
            return Ok(Self(BigRational::new(p, q)));
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(err());
            }
            let negative = int.starts_with('-');
            let int_part: BigInt = match int {
                "" | "-" | "+" => BigInt::zero(),
                _ => int.parse().map_err(|_| err())?,
            };
            let scale = BigInt::from(10u32).pow(frac.len() as u32);
            let frac_part: BigInt = frac.parse().map_err(|_| err())?;
            let magnitude = int_part.abs() * &scale + frac_part;
            let num = if negative { -magnitude } else { magnitude };
            return Ok(Self(BigRational::new(num, scale)));
        }
        let v: BigInt = s.parse().map_err(|_| err())?;
        Ok(Self(BigRational::from_integer(v)))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for ExactValue {
            type Output = ExactValue;
            fn $method(self, rhs: ExactValue) -> ExactValue {
                ExactValue(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a ExactValue> for &'a ExactValue {
            type Output = ExactValue;
            fn $method(self, rhs: &'a ExactValue) -> ExactValue {
                ExactValue((&self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<&'a ExactValue> for ExactValue {
            type Output = ExactValue;
            fn $method(self, rhs: &'a ExactValue) -> ExactValue {
                ExactValue(self.0.$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for ExactValue {
    type Output = ExactValue;
    fn neg(self) -> ExactValue {
        ExactValue(-self.0)
    }
}

impl std::iter::Sum for ExactValue {
    fn sum<I: Iterator<Item = ExactValue>>(iter: I) -> Self {
        iter.fold(ExactValue::zero(), |a, b| a + b)
    }
}

fn int(v: usize) -> ExactValue {
    ExactValue::integer(v as i64)
}

fn choose2(v: usize) -> ExactValue {
    int(v * v.saturating_sub(1) / 2)
}

/// Largest argument for which callers should prefer [`harmonic`] over
/// [`harmonic_f64`]; beyond this the exact denominator grows unwieldy.
pub const EXACT_HARMONIC_LIMIT: usize = 10_000;

/// `H(m) = 1 + 1/2 + ... + 1/m`, with `H(0) = 0`.
pub fn harmonic(m: usize) -> ExactValue {
    // Sum p/q with a running integer numerator and denominator and reduce
    // once at the end.
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    let mut reduce_at = 4096;
    for j in 1..=m {
        let j = BigInt::from(j);
        num = num * &j + &den;
        den *= j;
        if den.bits() > reduce_at {
            let r = BigRational::new(num, den);
            num = r.numer().clone();
            den = r.denom().clone();
            reduce_at = 2 * den.bits() + 4096;
        }
    }
    ExactValue(BigRational::new(num, den))
}

/// Floating-point `H(m)` by compensated (Neumaier) summation, smallest terms
/// first.
pub fn harmonic_f64(m: usize) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for j in (1..=m).rev() {
        let term = 1.0 / j as f64;
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Expected time for one information to reach every site of `K_n`:
/// `(n - 1) H(n - 1)`.
pub fn single_info_expectation_complete(n: usize) -> Result<ExactValue, FormulaError> {
    if n < 2 {
        return Err(out_of_range(format!("complete graph needs n >= 2, got {n}")));
    }
    Ok(int(n - 1) * harmonic(n - 1))
}

/// Mean of the geometric holding time while `k` of `n` sites know the
/// information on `K_n`: `n(n-1) / (2k(n-k))`.
pub fn delta_expectation(n: usize, k: usize) -> Result<ExactValue, FormulaError> {
    if k < 1 || k >= n {
        return Err(out_of_range(format!("need 1 <= k <= n - 1, got n = {n}, k = {k}")));
    }
    Ok(ExactValue::from(int(n * (n - 1)).0 / int(2 * k * (n - k)).0))
}

fn check_leaves(leaves: usize) -> Result<(), FormulaError> {
    if leaves < 1 {
        return Err(out_of_range("star needs at least one leaf"));
    }
    Ok(())
}

/// Expected total propagation time on a star: `2 L H(L) - 1`.
pub fn star_total_expectation(leaves: usize) -> Result<ExactValue, FormulaError> {
    check_leaves(leaves)?;
    Ok(int(2 * leaves) * harmonic(leaves) - ExactValue::one())
}

/// Expected time for the hub's information to reach every leaf: `L H(L)`.
pub fn star_hub_expectation(leaves: usize) -> Result<ExactValue, FormulaError> {
    check_leaves(leaves)?;
    Ok(int(leaves) * harmonic(leaves))
}

/// Propagation ratio of a star: `2 - 1/(L H(L))`.
pub fn star_ratio(leaves: usize) -> Result<ExactValue, FormulaError> {
    Ok(int(2) - star_hub_expectation(leaves)?.recip())
}

/// Expected time for one information to cover the ring `R_n`.
///
/// With `1 <= k <= n-1` informed sites the informed set is an arc with
/// exactly two boundary edges, so each stage is geometric with success
/// probability `2/n` and the total is `(n-1) n / 2`.
pub fn ring_single_info_expectation(n: usize) -> Result<ExactValue, FormulaError> {
    if n < 3 {
        return Err(out_of_range(format!("ring needs n >= 3, got {n}")));
    }
    Ok(int(n * (n - 1) / 2))
}

/// `LHS - RHS` of the first-step identity linking `M_n(k)`, `A_n(k+1)` and
/// `A_n(k)`:
///
/// `((2n-k-1)k/2) M_n(k) = C(n,2) + k(n-k) A_n(k+1) + C(k,2) A_n(k)`.
pub fn recurrence_residual(
    n: usize,
    k: usize,
    m_k: &ExactValue,
    a_k1: &ExactValue,
    a_k: &ExactValue,
) -> Result<ExactValue, FormulaError> {
    if k < 2 || k + 1 > n {
        return Err(out_of_range(format!("need 2 <= k <= n - 1, got n = {n}, k = {k}")));
    }
    let lhs = ExactValue::ratio(((2 * n - k - 1) * k) as i64, 2) * m_k;
    let rhs = choose2(n) + int(k * (n - k)) * a_k1 + choose2(k) * a_k;
    Ok(lhs - rhs)
}

/// Proven window for the expected total time `M_n(n)` on `K_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundsReport {
    pub n: usize,
    pub m1: ExactValue,
    pub lower: ExactValue,
    pub upper: ExactValue,
    pub ratio_lower: ExactValue,
    pub ratio_upper: ExactValue,
}

impl BoundsReport {
    pub fn contains(&self, value: &ExactValue) -> bool {
        &self.lower <= value && value <= &self.upper
    }

    pub fn to_f64(&self) -> BoundsSummary {
        BoundsSummary {
            n: self.n,
            m1: self.m1.to_f64(),
            lower: self.lower.to_f64(),
            upper: self.upper.to_f64(),
            ratio_lower: self.ratio_lower.to_f64(),
            ratio_upper: self.ratio_upper.to_f64(),
        }
    }
}

/// Floating-point view of [`BoundsReport`], also produced directly for sizes
/// where exact harmonic numbers are impractical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsSummary {
    pub n: usize,
    pub m1: f64,
    pub lower: f64,
    pub upper: f64,
    pub ratio_lower: f64,
    pub ratio_upper: f64,
}

/// Bounds on `M_n(n)`: `upper = (3/2) M_n(1)` for all `n`, and
/// `lower = (3/2) M_n(1) - (3/4)(n-1)` for `n >= 4`. For `n` in `{2, 3}` the
/// lower bound falls back to the monotonicity floor `M_n(1)`.
pub fn total_time_bounds(n: usize) -> Result<BoundsReport, FormulaError> {
    let m1 = single_info_expectation_complete(n)?;
    let upper = ExactValue::ratio(3, 2) * &m1;
    let lower = if n >= 4 { &upper - &(ExactValue::ratio(3, 4) * int(n - 1)) } else { m1.clone() };
    let ratio_lower = &lower / &m1;
    Ok(BoundsReport { n, ratio_lower, ratio_upper: ExactValue::ratio(3, 2), m1, lower, upper })
}

/// [`total_time_bounds`] in floating point, usable for any `n >= 2`.
pub fn total_time_bounds_approx(n: usize) -> Result<BoundsSummary, FormulaError> {
    if n < 2 {
        return Err(out_of_range(format!("complete graph needs n >= 2, got {n}")));
    }
    let h = harmonic_f64(n - 1);
    let m1 = (n - 1) as f64 * h;
    let upper = 1.5 * m1;
    let (lower, ratio_lower) = if n >= 4 { (upper - 0.75 * (n - 1) as f64, 1.5 - 0.75 / h) } else { (m1, 1.0) };
    Ok(BoundsSummary { n, m1, lower, upper, ratio_lower, ratio_upper: 1.5 })
}

/// Continuous-time (unit-rate exponential edge clocks) expectation of a
/// discrete stopping time: each discrete step lasts `Exp(|E|)` on average
/// `1/|E|`, so the mean scales by `1/|E|`.
pub fn continuous_flooding_expectation(
    discrete_mean: &ExactValue,
    edge_count: usize,
) -> Result<ExactValue, FormulaError> {
    if edge_count == 0 {
        return Err(out_of_range("edge count must be positive"));
    }
    Ok(discrete_mean / &int(edge_count))
}

pub fn continuous_flooding_expectation_f64(discrete_mean: f64, edge_count: usize) -> Result<f64, FormulaError> {
    if edge_count == 0 {
        return Err(out_of_range("edge count must be positive"));
    }
    Ok(discrete_mean / edge_count as f64)
}
