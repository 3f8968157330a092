//! Outward-rounded interval arithmetic on numbers `±q · 2^e` with `q` an
//! exact rational in `[1, 2)` and `e` an arbitrary-precision integer.
//!
//! Comparison is exact. Arithmetic is exact while mantissas stay below
//! [`MANTISSA_BITS`] bits in numerator and denominator and the exponent gap of
//! an addition stays below [`ADD_GAP_BITS`]; beyond that results are rounded
//! outward, so every interval still encloses the true value.

use crate::{Error, Result};
use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

/// Cap on mantissa numerator and denominator size.
pub const MANTISSA_BITS: u64 = 512;
/// Additions whose exponent gap exceeds this are rounded to one ulp.
pub const ADD_GAP_BITS: u64 = 2048;
/// Largest exponent bit length accepted anywhere.
pub const MAX_EXPONENT_BITS: u64 = 1 << 20;
/// Largest exponent for which `floor`/`ceil` materialize the integer.
pub const MAX_MATERIALIZED_EXPONENT: i64 = 1 << 23;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Round {
    Down,
    Up,
}

/// A normalized value `±mantissa · 2^exponent`, or zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    negative: bool,
    mantissa: BigRational,
    exponent: BigInt,
}

fn pow2_int(k: u64) -> BigInt {
    BigInt::one() << k
}

fn exp_to_u64(e: &BigInt) -> Result<u64> {
    e.to_u64()
        .ok_or_else(|| Error::Resource(format!("shift of {} bits is not addressable", e.bits())))
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic {
            negative: false,
            mantissa: BigRational::zero(),
            exponent: BigInt::zero(),
        }
    }

    pub fn one() -> Self {
        Self::pow2(0)
    }

    /// `2^e`.
    pub fn pow2(e: impl Into<BigInt>) -> Self {
        Dyadic {
            negative: false,
            mantissa: BigRational::one(),
            exponent: e.into(),
        }
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Self::from_rational(BigRational::from_integer(n.into()))
    }

    /// Exact `n/d`; panics on `d = 0`.
    pub fn from_ratio(n: i64, d: i64) -> Self {
        Self::from_rational(BigRational::new(n.into(), d.into()))
    }

    /// Exact value of a rational, rounded outward only if the mantissa cap is
    /// exceeded (the returned value then lies within one cap-ulp, rounding
    /// toward zero).
    pub fn from_rational(q: BigRational) -> Self {
        Self::normalize(q, BigInt::zero(), Round::Down).expect("small rational has small exponent")
    }

    /// `q · 2^e`, optionally scaled, normalized and capped with rounding `r`.
    pub fn scaled(q: BigRational, e: BigInt, r: Round) -> Result<Self> {
        Self::normalize(q, e, r)
    }

    fn normalize(q: BigRational, e: BigInt, r: Round) -> Result<Self> {
        if q.is_zero() {
            return Ok(Self::zero());
        }
        let negative = q.is_negative();
        let q = q.abs();
        let nb = q.numer().bits() as i64;
        let db = q.denom().bits() as i64;
        let mut k = nb - db;
        let fits = |k: i64| -> bool {
            // q / 2^k >= 1 ?
            if k >= 0 {
                q.numer() >= &(q.denom() << k as u64)
            } else {
                (q.numer() << (-k) as u64) >= *q.denom()
            }
        };
        if !fits(k) {
            k -= 1;
        }
        let mut mantissa = if k >= 0 {
            BigRational::new(q.numer().clone(), q.denom() << k as u64)
        } else {
            BigRational::new(q.numer() << (-k) as u64, q.denom().clone())
        };
        let mut exponent = e + BigInt::from(k);
        if mantissa.numer().bits() > MANTISSA_BITS || mantissa.denom().bits() > MANTISSA_BITS {
            // Magnitude rounding direction: away from zero for an upper
            // bound of a positive value or a lower bound of a negative one.
            let away = matches!((negative, r), (false, Round::Up) | (true, Round::Down));
            let scale = MANTISSA_BITS - 1;
            let scaled = mantissa.numer() << scale;
            let (quot, rem) = scaled.div_rem(mantissa.denom());
            let n = if away && !rem.is_zero() { quot + 1 } else { quot };
            if n == pow2_int(MANTISSA_BITS) {
                mantissa = BigRational::one();
                exponent += 1;
            } else {
                mantissa = BigRational::new(n, pow2_int(scale));
            }
        }
        if exponent.bits() > MAX_EXPONENT_BITS {
            return Err(Error::Resource(format!(
                "exponent of {} bits exceeds the {MAX_EXPONENT_BITS}-bit limit",
                exponent.bits()
            )));
        }
        Ok(Dyadic {
            negative,
            mantissa,
            exponent,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.negative && !self.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        !self.negative && !self.is_zero()
    }

    pub fn signum(&self) -> i8 {
        if self.is_zero() {
            0
        } else if self.negative {
            -1
        } else {
            1
        }
    }

    pub fn mantissa(&self) -> &BigRational {
        &self.mantissa
    }

    pub fn exponent(&self) -> &BigInt {
        &self.exponent
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        Dyadic {
            negative: !self.negative,
            ..self.clone()
        }
    }

    fn signed_mantissa(&self) -> BigRational {
        if self.negative {
            -self.mantissa.clone()
        } else {
            self.mantissa.clone()
        }
    }

    pub fn mul(&self, other: &Dyadic, r: Round) -> Result<Self> {
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero());
        }
        Self::normalize(
            self.signed_mantissa() * other.signed_mantissa(),
            &self.exponent + &other.exponent,
            r,
        )
    }

    pub fn div(&self, other: &Dyadic, r: Round) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::pre("dyadic division by zero"));
        }
        if self.is_zero() {
            return Ok(Self::zero());
        }
        Self::normalize(
            self.signed_mantissa() / other.signed_mantissa(),
            &self.exponent - &other.exponent,
            r,
        )
    }

    pub fn add(&self, other: &Dyadic, r: Round) -> Result<Self> {
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(other.clone());
        }
        let (big, small) = if self.exponent >= other.exponent {
            (self, other)
        } else {
            (other, self)
        };
        let gap = &big.exponent - &small.exponent;
        if gap <= BigInt::from(ADD_GAP_BITS) {
            let g = exp_to_u64(&gap)?;
            let q = big.signed_mantissa() * BigRational::from_integer(pow2_int(g))
                + small.signed_mantissa();
            return Self::normalize(q, small.exponent.clone(), r);
        }
        // |small| < 2^{e_small + 1} <= ulp := 2^{e_big - ADD_GAP_BITS}.
        let ulp = Dyadic::pow2(&big.exponent - BigInt::from(ADD_GAP_BITS));
        match (small.negative, r) {
            (false, Round::Down) | (true, Round::Up) => Ok(big.clone()),
            (false, Round::Up) => big.add(&ulp, Round::Up),
            (true, Round::Down) => big.add(&ulp.neg(), Round::Down),
        }
    }

    pub fn sub(&self, other: &Dyadic, r: Round) -> Result<Self> {
        self.add(&other.neg(), r)
    }

    /// Exact floor as an integer; fails if the integer is too large to build.
    pub fn floor(&self) -> Result<BigInt> {
        if self.is_zero() {
            return Ok(BigInt::zero());
        }
        if self.exponent.is_negative() {
            // |x| < 1.
            return Ok(if self.negative { -BigInt::one() } else { BigInt::zero() });
        }
        let e = self
            .exponent
            .to_i64()
            .filter(|&e| e <= MAX_MATERIALIZED_EXPONENT)
            .ok_or_else(|| {
                Error::Resource(format!(
                    "floor of a value with a {}-bit exponent",
                    self.exponent.bits()
                ))
            })?;
        let num = self.signed_mantissa().numer() << e as u64;
        Ok(num.div_floor(self.mantissa.denom()))
    }

    pub fn ceil(&self) -> Result<BigInt> {
        Ok(-self.neg().floor()?)
    }

    /// Exact rational value; only for modest exponents.
    pub fn to_rational(&self) -> Result<BigRational> {
        let e = self
            .exponent
            .to_i64()
            .filter(|e| e.abs() <= MAX_MATERIALIZED_EXPONENT)
            .ok_or_else(|| Error::Resource("exponent too large to materialize".into()))?;
        let p = BigRational::from_integer(pow2_int(e.unsigned_abs()));
        let m = self.signed_mantissa();
        Ok(if e >= 0 { m * p } else { m / p })
    }

    /// `log2 |x|` as a float (`-inf` for zero); exponent may be rounded.
    pub fn log2_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let m = self.mantissa.to_f64().unwrap_or(1.0);
        self.exponent.to_f64().unwrap_or(f64::NAN) + m.log2()
    }

    /// Nearest float (`±inf`/`0` outside range).
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let m = self.signed_mantissa().to_f64().unwrap_or(f64::NAN);
        match self.exponent.to_i32() {
            Some(e) => m * 2f64.powi(e),
            None if self.exponent.is_positive() => m * f64::INFINITY,
            None => m * 0.0,
        }
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let s = self.signum().cmp(&other.signum());
        if s != Ordering::Equal || self.is_zero() {
            return s;
        }
        let mag = self
            .exponent
            .cmp(&other.exponent)
            .then_with(|| self.mantissa.cmp(&other.mantissa));
        if self.negative {
            mag.reverse()
        } else {
            mag
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let sign = if self.negative { "-" } else { "" };
        write!(f, "{sign}{}*2^{}", self.mantissa, format_exponent(&self.exponent))
    }
}

/// Exact decimal for exponents that fit in 64 bits, otherwise a marked
/// approximation `~±2^L` with `L = log2 |e|`.
pub fn format_exponent(e: &BigInt) -> String {
    if e.bits() < 64 {
        e.to_string()
    } else {
        let sign = if e.sign() == Sign::Minus { "-" } else { "" };
        let (_, digits) = e.to_u64_digits();
        let top = digits.len() - 1;
        let lead = digits[top] as f64 + digits.get(top.wrapping_sub(1)).copied().unwrap_or(0) as f64 / 2f64.powi(64);
        let l2 = lead.log2() + 64.0 * top as f64;
        format!("~{sign}2^{l2:.6}")
    }
}

/// Closed interval `[lo, hi]` of dyadics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyadicBound {
    pub lo: Dyadic,
    pub hi: Dyadic,
}

impl DyadicBound {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Result<Self> {
        if lo > hi {
            return Err(Error::pre(format!("interval endpoints out of order: {lo} > {hi}")));
        }
        Ok(DyadicBound { lo, hi })
    }

    pub fn point(d: Dyadic) -> Self {
        DyadicBound {
            lo: d.clone(),
            hi: d,
        }
    }

    pub fn pow2(e: impl Into<BigInt>) -> Self {
        Self::point(Dyadic::pow2(e))
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        let q = BigRational::new(n.into(), d.into());
        DyadicBound {
            lo: Dyadic::normalize(q.clone(), BigInt::zero(), Round::Down).expect("small"),
            hi: Dyadic::normalize(q, BigInt::zero(), Round::Up).expect("small"),
        }
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Self::point(Dyadic::from_int(n))
    }

    pub fn contains(&self, x: &Dyadic) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn neg(&self) -> Self {
        DyadicBound {
            lo: self.hi.neg(),
            hi: self.lo.neg(),
        }
    }

    pub fn add(&self, other: &DyadicBound) -> Result<Self> {
        Ok(DyadicBound {
            lo: self.lo.add(&other.lo, Round::Down)?,
            hi: self.hi.add(&other.hi, Round::Up)?,
        })
    }

    pub fn sub(&self, other: &DyadicBound) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &DyadicBound) -> Result<Self> {
        let pairs = [
            (&self.lo, &other.lo),
            (&self.lo, &other.hi),
            (&self.hi, &other.lo),
            (&self.hi, &other.hi),
        ];
        let mut lo: Option<Dyadic> = None;
        let mut hi: Option<Dyadic> = None;
        for (a, b) in pairs {
            let d = a.mul(b, Round::Down)?;
            let u = a.mul(b, Round::Up)?;
            lo = Some(match lo {
                Some(x) if x <= d => x,
                _ => d,
            });
            hi = Some(match hi {
                Some(x) if x >= u => x,
                _ => u,
            });
        }
        Ok(DyadicBound {
            lo: lo.expect("four products"),
            hi: hi.expect("four products"),
        })
    }

    /// Division by an interval that does not contain zero.
    pub fn div(&self, other: &DyadicBound) -> Result<Self> {
        if other.lo.signum() * other.hi.signum() <= 0 {
            return Err(Error::pre("divisor interval contains zero"));
        }
        let inv = DyadicBound {
            lo: Dyadic::one().div(&other.hi, Round::Down)?,
            hi: Dyadic::one().div(&other.lo, Round::Up)?,
        };
        self.mul(&inv)
    }

    /// Multiplication by `2^e`, exact.
    pub fn mul_pow2(&self, e: &BigInt) -> Result<Self> {
        let f = Dyadic::pow2(e.clone());
        Ok(DyadicBound {
            lo: self.lo.mul(&f, Round::Down)?,
            hi: self.hi.mul(&f, Round::Up)?,
        })
    }

    /// True when every point of `self` is `<=` every point of `other`.
    pub fn certainly_le(&self, other: &DyadicBound) -> bool {
        self.hi <= other.lo
    }
}

impl fmt::Display for DyadicBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Geometric series `first · Σ_{j≥0} ratio^j` with `0 <= ratio < 1`.
#[derive(Clone, Debug)]
pub struct GeometricTail {
    pub first: DyadicBound,
    pub ratio: DyadicBound,
}

/// `a · b` as an enclosure.
pub fn multiply(a: &DyadicBound, b: &DyadicBound) -> Result<DyadicBound> {
    a.mul(b)
}

/// Enclosure of a finite sum plus an optional geometric tail summed in
/// closed form.
pub fn sum_enclose(terms: &[DyadicBound], tail: Option<&GeometricTail>) -> Result<DyadicBound> {
    let mut acc = DyadicBound::point(Dyadic::zero());
    for t in terms {
        acc = acc.add(t)?;
    }
    if let Some(g) = tail {
        if g.ratio.lo.is_negative() || g.ratio.hi >= Dyadic::one() {
            return Err(Error::pre("geometric ratio must lie in [0, 1)"));
        }
        let one = DyadicBound::point(Dyadic::one());
        let denom = one.sub(&g.ratio)?;
        acc = acc.add(&g.first.div(&denom)?)?;
    }
    Ok(acc)
}

/// Enclosure of `exp(-x)` using only powers of two.
///
/// The upper endpoint uses `exp(-y) <= 2^{-floor(y)}` for `y >= 0` (and
/// `exp(z) <= 2^{ceil(3z/2)}` for `z >= 0`); the lower endpoint uses
/// `exp(-y) >= 2^{-ceil(3y/2)}` and `exp(z) >= 2^{floor(z)}`.
pub fn exp_neg_upper(x: &DyadicBound) -> Result<DyadicBound> {
    let three_halves = Dyadic::from_ratio(3, 2);
    // exp(-x) is decreasing: upper endpoint from x.lo, lower from x.hi.
    let hi = if !x.lo.is_negative() {
        Dyadic::pow2(-x.lo.floor()?)
    } else {
        let z = x.lo.neg().mul(&three_halves, Round::Up)?;
        Dyadic::pow2(z.ceil()?)
    };
    let lo = if !x.hi.is_negative() {
        let y = x.hi.mul(&three_halves, Round::Up)?;
        Dyadic::pow2(-y.ceil()?)
    } else {
        Dyadic::pow2(x.hi.neg().floor()?)
    };
    DyadicBound::new(lo, hi)
}

/// Exact total order on dyadics.
pub fn compare(a: &Dyadic, b: &Dyadic) -> Ordering {
    a.cmp(b)
}
