//! Binary fixed-point reals on top of GMP integers.
//!
//! A `Real` is `mant / 2^bits`. Operations between values of different
//! precision work at the larger one. Transcendental functions carry their
//! own guard bits and round back to the requested precision.

use rug::ops::Pow;
use rug::{Integer, Rational};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Mutex;

/// Decimal digits of π used to seed low-precision requests. Checked
/// against the Machin series in the tests.
const PI_DIGITS: &str = "31415926535897932384626433832795028841971693993751\
05820974944592307816406286208998628034825342117067\
98214808651328230664709384460955058223172535940812\
84811174502841027019385211055596446229489549303819";

const GUARD: u32 = 32;

static PI_CACHE: Mutex<Option<(u32, Integer)>> = Mutex::new(None);

#[derive(Clone, Debug)]
pub struct Real {
    mant: Integer,
    bits: u32,
}

/// Binary precision needed for `digits` decimal digits.
pub fn bits_for_digits(digits: u32) -> u32 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 8
}

fn shift(m: &Integer, by: i64) -> Integer {
    if by >= 0 {
        Integer::from(m << by as u32)
    } else {
        // floor division keeps rounding direction consistent for negatives
        Integer::from(m >> (-by) as u32)
    }
}

impl Real {
    pub fn zero(bits: u32) -> Self {
        Real {
            mant: Integer::new(),
            bits,
        }
    }

    pub fn one(bits: u32) -> Self {
        Real {
            mant: Integer::from(1) << bits,
            bits,
        }
    }

    pub fn from_int(v: impl Into<Integer>, bits: u32) -> Self {
        Real {
            mant: v.into() << bits,
            bits,
        }
    }

    pub fn from_rational(r: &Rational, bits: u32) -> Self {
        let num = Integer::from(r.numer() << bits);
        let (q, _) = num.div_rem_round(r.denom().clone());
        Real { mant: q, bits }
    }

    /// Exact conversion of a finite double; panics on NaN or infinity.
    pub fn from_f64(x: f64, bits: u32) -> Self {
        let r = Rational::from_f64(x).expect("finite float");
        Real::from_rational(&r, bits)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn mantissa(&self) -> &Integer {
        &self.mant
    }

    pub fn with_bits(&self, bits: u32) -> Self {
        Real {
            mant: shift(&self.mant, bits as i64 - self.bits as i64),
            bits,
        }
    }

    pub fn to_rational(&self) -> Rational {
        Rational::from((self.mant.clone(), Integer::from(1) << self.bits))
    }

    pub fn to_f64(&self) -> f64 {
        self.to_rational().to_f64()
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn signum(&self) -> i32 {
        match self.mant.cmp0() {
            Ordering::Less => -1,
            Ordering::Equal => 0,
            Ordering::Greater => 1,
        }
    }

    pub fn abs(&self) -> Self {
        Real {
            mant: self.mant.clone().abs(),
            bits: self.bits,
        }
    }

    /// Approximate base-2 exponent: |x| is within a factor two of 2^e.
    pub fn log2_magnitude(&self) -> i64 {
        if self.mant.is_zero() {
            return i64::MIN / 2;
        }
        self.mant.significant_bits() as i64 - self.bits as i64
    }

    /// Difference measured in units of the last place of the common precision.
    pub fn ulps_between(&self, other: &Real) -> Integer {
        let b = self.bits.max(other.bits);
        let d = self.with_bits(b).mant - other.with_bits(b).mant;
        d.abs()
    }

    pub fn mul_rational(&self, r: &Rational) -> Self {
        let num = Integer::from(&self.mant * r.numer());
        let (q, _) = num.div_rem_round(r.denom().clone());
        Real {
            mant: q,
            bits: self.bits,
        }
    }

    pub fn pow_u(&self, e: u32) -> Self {
        let w = self.bits + GUARD + 2 * (32 - e.leading_zeros());
        let mut base = self.with_bits(w);
        let mut acc = Real::one(w);
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc.with_bits(self.bits)
    }

    /// π at the given precision.
    pub fn pi(bits: u32) -> Self {
        let w = bits + GUARD;
        if w <= 600 {
            let digits = Integer::from_str_radix(PI_DIGITS, 10).unwrap();
            let scale = Integer::from(10).pow(PI_DIGITS.len() as u32 - 1);
            let r = Rational::from((digits, scale));
            return Real::from_rational(&r, bits);
        }
        let mut cache = PI_CACHE.lock().unwrap();
        if let Some((cb, m)) = cache.as_ref() {
            if *cb >= w {
                let m = shift(m, bits as i64 - *cb as i64);
                return Real { mant: m, bits };
            }
        }
        let m = machin_pi(w);
        let out = shift(&m, bits as i64 - w as i64);
        *cache = Some((w, m));
        Real { mant: out, bits }
    }

    pub fn exp(&self) -> Self {
        let b = self.bits;
        let mag = self.log2_magnitude();
        let s: u32 = if mag > -16 { (mag + 16) as u32 } else { 0 };
        let w = b + s + GUARD + (mag.max(0) as u32);
        let y = Real {
            mant: shift(&self.mant, w as i64 - b as i64 - s as i64),
            bits: w,
        };
        let mut sum = Real::one(w);
        let mut term = Real::one(w);
        let mut k = 1u32;
        loop {
            term = &term * &y;
            term.mant /= k;
            if term.mant.is_zero() {
                break;
            }
            sum.mant += &term.mant;
            k += 1;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum.with_bits(b)
    }

    pub fn sinh(&self) -> Self {
        if self.log2_magnitude() < 0 {
            // |x| < 1: direct odd series avoids cancellation
            let w = self.bits + GUARD;
            let x = self.with_bits(w);
            let x2 = &x * &x;
            let mut term = x.clone();
            let mut sum = x;
            let mut k = 1u32;
            loop {
                term = &term * &x2;
                term.mant /= (2 * k) * (2 * k + 1);
                if term.mant.is_zero() {
                    break;
                }
                sum.mant += &term.mant;
                k += 1;
            }
            return sum.with_bits(self.bits);
        }
        let w = self.bits + GUARD;
        let e = self.with_bits(w).exp();
        let ei = Real::one(w) / &e;
        let mut d = &e - &ei;
        d.mant >>= 1;
        d.with_bits(self.bits)
    }

    pub fn cosh(&self) -> Self {
        let w = self.bits + GUARD;
        let e = self.with_bits(w).exp();
        let ei = Real::one(w) / &e;
        let mut d = &e + &ei;
        d.mant >>= 1;
        d.with_bits(self.bits)
    }

    /// Scientific notation with `digits` significant digits.
    pub fn to_sci(&self, digits: usize) -> String {
        if self.mant.is_zero() {
            return "0".to_string();
        }
        let r = self.to_rational();
        let neg = r.cmp0() == Ordering::Less;
        let a = r.abs();
        let mut e = (self.log2_magnitude() as f64 * std::f64::consts::LOG10_2).floor() as i64;
        let pow10 = |k: i64| -> Rational {
            if k >= 0 {
                Rational::from(Integer::from(10).pow(k as u32))
            } else {
                Rational::from((Integer::from(1), Integer::from(10).pow((-k) as u32)))
            }
        };
        while pow10(e) > a {
            e -= 1;
        }
        while pow10(e + 1) <= a {
            e += 1;
        }
        let scaled = a * pow10(digits as i64 - 1 - e);
        let mut q = scaled.round();
        let mut e_out = e;
        if q >= Integer::from(10).pow(digits as u32) {
            q /= 10;
            e_out += 1;
        }
        let s = q.to_string();
        let (head, tail) = s.split_at(1);
        let mut out = String::new();
        if neg {
            out.push('-');
        }
        out.push_str(head);
        if !tail.is_empty() {
            out.push('.');
            out.push_str(tail);
        }
        if e_out != 0 {
            out.push_str(&format!("e{e_out}"));
        }
        out
    }
}

fn machin_pi(w: u32) -> Integer {
    let wb = w + GUARD;
    let a = atan_inv(5, wb);
    let b = atan_inv(239, wb);
    let pi = (a * 16u32) - (b * 4u32);
    pi >> GUARD
}

/// atan(1/x) in fixed point with `w` fractional bits.
fn atan_inv(x: u32, w: u32) -> Integer {
    let x2 = Integer::from(x) * x;
    let mut power = (Integer::from(1) << w) / x;
    let mut sum = power.clone();
    let mut k = 1u32;
    loop {
        power /= &x2;
        if power.is_zero() {
            break;
        }
        let t = Integer::from(&power / (2 * k + 1));
        if k % 2 == 1 {
            sum -= t;
        } else {
            sum += t;
        }
        k += 1;
    }
    sum
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Real {}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Real {
    fn cmp(&self, other: &Self) -> Ordering {
        let b = self.bits.max(other.bits);
        self.with_bits(b).mant.cmp(&other.with_bits(b).mant)
    }
}

impl Add<&Real> for &Real {
    type Output = Real;
    fn add(self, rhs: &Real) -> Real {
        let b = self.bits.max(rhs.bits);
        Real {
            mant: self.with_bits(b).mant + rhs.with_bits(b).mant,
            bits: b,
        }
    }
}

impl Sub<&Real> for &Real {
    type Output = Real;
    fn sub(self, rhs: &Real) -> Real {
        let b = self.bits.max(rhs.bits);
        Real {
            mant: self.with_bits(b).mant - rhs.with_bits(b).mant,
            bits: b,
        }
    }
}

impl Mul<&Real> for &Real {
    type Output = Real;
    fn mul(self, rhs: &Real) -> Real {
        let b = self.bits.max(rhs.bits);
        let p = Integer::from(&self.mant * &rhs.mant);
        Real {
            mant: shift(&p, b as i64 - (self.bits + rhs.bits) as i64),
            bits: b,
        }
    }
}

impl Div<&Real> for &Real {
    type Output = Real;
    fn div(self, rhs: &Real) -> Real {
        assert!(!rhs.mant.is_zero(), "division by zero");
        let b = self.bits.max(rhs.bits);
        let num = shift(&self.mant, (b + rhs.bits) as i64 - self.bits as i64);
        let (q, _) = num.div_rem_round(rhs.mant.clone());
        Real { mant: q, bits: b }
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real {
            mant: Integer::from(-&self.mant),
            bits: self.bits,
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Real> for Real {
            type Output = Real;
            fn $m(self, rhs: Real) -> Real {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Real> for Real {
            type Output = Real;
            fn $m(self, rhs: &Real) -> Real {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f
            .precision()
            .unwrap_or(((self.bits as f64) * std::f64::consts::LOG10_2) as usize)
            .max(1);
        write!(f, "{}", self.to_sci(digits))
    }
}
