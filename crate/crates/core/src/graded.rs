//! Exact elements of Q[π², π⁻²] and symmetric polynomials over them.

use crate::error::{Error, Result};
use crate::real::{bits_for_digits, Real};
use rug::ops::Pow;
use rug::{Integer, Rational};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

/// Finite sum of `coeff · π^{2·grade}`. Zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct GradedRational {
    terms: BTreeMap<i64, Rational>,
}

impl GradedRational {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, Rational::from(1))
    }

    /// `c · π^{2·grade}`.
    pub fn monomial(grade: i64, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if c.cmp0() != std::cmp::Ordering::Equal {
            terms.insert(grade, c);
        }
        GradedRational { terms }
    }

    pub fn rational(c: impl Into<Rational>) -> Self {
        Self::monomial(0, c.into())
    }

    /// π^{2·grade}.
    pub fn pi2_pow(grade: i64) -> Self {
        Self::monomial(grade, Rational::from(1))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &Rational)> {
        self.terms.iter().map(|(g, c)| (*g, c))
    }

    pub fn coeff(&self, grade: i64) -> Option<&Rational> {
        self.terms.get(&grade)
    }

    /// The grade when exactly one term is present.
    pub fn single_grade(&self) -> Option<i64> {
        if self.terms.len() == 1 {
            self.terms.keys().next().copied()
        } else {
            None
        }
    }

    pub fn min_grade(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_grade(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.cmp0() == std::cmp::Ordering::Equal {
            return Self::zero();
        }
        GradedRational {
            terms: self.terms.iter().map(|(g, v)| (*g, Rational::from(v * c))).collect(),
        }
    }

    pub fn shift_grade(&self, by: i64) -> Self {
        GradedRational {
            terms: self.terms.iter().map(|(g, v)| (g + by, v.clone())).collect(),
        }
    }

    /// Substitute π² = x for an exact rational x, collapsing the grading.
    /// Negative grades require x ≠ 0.
    pub fn substitute(&self, x: &Rational) -> Rational {
        let mut acc = Rational::new();
        for (g, c) in &self.terms {
            let p = if *g >= 0 {
                Rational::from(x.pow(*g as u32))
            } else {
                Rational::from(x.pow(-(*g) as u32)).recip()
            };
            acc += p * c;
        }
        acc
    }

    /// Value with relative error below 10^{1-digits}.
    pub fn numeric(&self, digits: u32) -> Real {
        numeric_eval(self, digits)
    }

    pub fn to_f64(&self) -> f64 {
        numeric_eval(self, 20).to_f64()
    }

    fn add_term(&mut self, g: i64, c: Rational) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(g) {
            Entry::Vacant(v) => {
                if c.cmp0() != std::cmp::Ordering::Equal {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().cmp0() == std::cmp::Ordering::Equal {
                    o.remove();
                }
            }
        }
    }
}

/// Evaluate at π² with relative error below 10^{1-digits}.
///
/// Terms are summed at a working precision that is raised until the result
/// clears the cancellation it suffered; a nonzero element never evaluates
/// to zero because π is transcendental.
pub fn numeric_eval(x: &GradedRational, digits: u32) -> Real {
    let target = bits_for_digits(digits.max(15)) as i64;
    if x.is_zero() {
        return Real::zero(target as u32);
    }
    let bitlen = |v: u64| 64 - v.leading_zeros() as i64;
    let nterms = x.terms.len() as u64;
    let maxg = x.terms.keys().map(|g| g.unsigned_abs()).max().unwrap_or(0);
    let slack = 6 + bitlen(nterms) + bitlen(maxg + 2);
    let mut wp = target + slack + 32;
    loop {
        let pi2 = {
            let p = Real::pi(wp as u32 + 16);
            &p * &p
        };
        let mut sum = Real::zero(wp as u32);
        let mut biggest = i64::MIN;
        for (g, c) in &x.terms {
            let p = if *g >= 0 {
                pi2.pow_u(*g as u32)
            } else {
                Real::one(pi2.bits()) / &pi2.pow_u((-*g) as u32)
            };
            let t = p.with_bits(wp as u32).mul_rational(c);
            biggest = biggest.max(t.log2_magnitude());
            sum = &sum + &t;
        }
        if !sum.is_zero() {
            // log2 of the relative error bound: per-term relative error
            // scaled by the cancellation ratio, plus rounding ulps
            let rel = biggest.max(0) + slack - wp - sum.log2_magnitude() + 1;
            if rel <= -(target + 2) {
                return sum;
            }
            wp += rel + target + 34;
        } else {
            wp *= 2;
        }
    }
}

impl Add<&GradedRational> for &GradedRational {
    type Output = GradedRational;
    fn add(self, rhs: &GradedRational) -> GradedRational {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&GradedRational> for GradedRational {
    fn add_assign(&mut self, rhs: &GradedRational) {
        for (g, c) in &rhs.terms {
            self.add_term(*g, c.clone());
        }
    }
}

impl Sub<&GradedRational> for &GradedRational {
    type Output = GradedRational;
    fn sub(self, rhs: &GradedRational) -> GradedRational {
        let mut out = self.clone();
        for (g, c) in &rhs.terms {
            out.add_term(*g, Rational::from(-c));
        }
        out
    }
}

impl Mul<&GradedRational> for &GradedRational {
    type Output = GradedRational;
    fn mul(self, rhs: &GradedRational) -> GradedRational {
        let mut out = GradedRational::zero();
        for (ga, ca) in &self.terms {
            for (gb, cb) in &rhs.terms {
                out.add_term(ga + gb, Rational::from(ca * cb));
            }
        }
        out
    }
}

impl Neg for &GradedRational {
    type Output = GradedRational;
    fn neg(self) -> GradedRational {
        GradedRational {
            terms: self.terms.iter().map(|(g, c)| (*g, Rational::from(-c))).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<GradedRational> for GradedRational {
            type Output = GradedRational;
            fn $m(self, rhs: GradedRational) -> GradedRational {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for GradedRational {
    type Output = GradedRational;
    fn neg(self) -> GradedRational {
        -&self
    }
}

/// Serialized as `grade:num/den` terms joined by `;`; zero is `0:0/1`.
impl fmt::Display for GradedRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0:0/1");
        }
        let mut first = true;
        for (g, c) in &self.terms {
            if !first {
                write!(f, ";")?;
            }
            first = false;
            write!(f, "{}:{}/{}", g, c.numer(), c.denom())?;
        }
        Ok(())
    }
}

impl FromStr for GradedRational {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut out = GradedRational::zero();
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty graded rational".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for part in s.split(';') {
            let (g, frac) = part
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("missing ':' in {part:?}")))?;
            let g: i64 = g
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad grade in {part:?}")))?;
            let (n, d) = frac
                .split_once('/')
                .ok_or_else(|| Error::Parse(format!("missing '/' in {part:?}")))?;
            let n = Integer::from_str(n.trim()).map_err(|_| Error::Parse(format!("bad numerator in {part:?}")))?;
            let d = Integer::from_str(d.trim()).map_err(|_| Error::Parse(format!("bad denominator in {part:?}")))?;
            if d <= 0 {
                return Err(Error::Parse(format!("non-positive denominator in {part:?}")));
            }
            if !seen.insert(g) {
                return Err(Error::Parse(format!("repeated grade {g}")));
            }
            out.add_term(g, Rational::from((n, d)));
        }
        Ok(out)
    }
}

fn bernoulli_table() -> &'static Mutex<Vec<Rational>> {
    static T: OnceLock<Mutex<Vec<Rational>>> = OnceLock::new();
    T.get_or_init(|| Mutex::new(Vec::new()))
}

/// Bernoulli numbers B_0..=B_n (B_1 = -1/2), memoized.
pub fn bernoulli_upto(n: usize) -> Vec<Rational> {
    let mut t = bernoulli_table().lock().unwrap();
    if t.len() <= n {
        // recurrence Σ_{j=0}^{m} C(m+1, j) B_j = 0
        let start = t.len();
        for m in start..=n {
            if m == 0 {
                t.push(Rational::from(1));
                continue;
            }
            let mut s = Rational::new();
            let mut binom = Integer::from(1);
            for (j, b) in t.iter().enumerate().take(m) {
                s += Rational::from(b * &binom);
                binom *= (m + 1 - j) as u32;
                binom /= (j + 1) as u32;
            }
            t.push(-s / Rational::from(m as u32 + 1));
        }
    }
    t[..=n].to_vec()
}

/// Rational part of a_w = (1 - 2^{1-2w}) ζ(2w) / π^{2w}, w ≥ 0, with the
/// boundary convention a_0 = 1/2.
pub fn zeta_weight_coeff(w: u32) -> Rational {
    if w == 0 {
        return Rational::from((1, 2));
    }
    let b = bernoulli_upto(2 * w as usize)[2 * w as usize].clone().abs();
    let fact = Integer::from(Integer::factorial(2 * w));
    let two = Integer::from(1) << (2 * w - 1);
    // |B_2w| 2^{2w-1}/(2w)! · (1 - 2^{1-2w}) = |B_2w| (2^{2w-1} - 1)/(2w)!
    b * Rational::from((two - 1u32, fact))
}

/// a_w for w ≥ 1, of grade w.
pub fn zeta_weight(w: u32) -> Result<GradedRational> {
    if w == 0 {
        return Err(Error::Domain(
            "zeta_weight is defined for w >= 1; a_0 = 1/2 is a recursion convention".into(),
        ));
    }
    Ok(GradedRational::monomial(w as i64, zeta_weight_coeff(w)))
}

/// Polynomial in L₁²,…,Lₙ² with graded coefficients, keyed by the exponent
/// vector of the squared variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymPolynomial {
    arity: usize,
    terms: BTreeMap<Vec<u32>, GradedRational>,
}

impl SymPolynomial {
    pub fn new(arity: usize) -> Self {
        SymPolynomial {
            arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn insert(&mut self, exps: Vec<u32>, c: GradedRational) -> Result<()> {
        if exps.len() != self.arity {
            return Err(Error::Domain(format!(
                "exponent vector of length {} in arity-{} polynomial",
                exps.len(),
                self.arity
            )));
        }
        if c.is_zero() {
            self.terms.remove(&exps);
        } else {
            self.terms.insert(exps, c);
        }
        Ok(())
    }

    pub fn coeff(&self, exps: &[u32]) -> GradedRational {
        self.terms.get(exps).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &GradedRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree in the squared variables.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn is_symmetric(&self) -> bool {
        self.terms.iter().all(|(e, c)| {
            let mut s = e.clone();
            s.sort_unstable_by(|a, b| b.cmp(a));
            let mut p = s.clone();
            // every permutation must carry the same coefficient
            loop {
                if self.terms.get(&p) != Some(c) {
                    return false;
                }
                if !prev_permutation(&mut p) {
                    break;
                }
            }
            true
        })
    }

    /// Exact value at squared variables `x` (x_i = L_i²).
    pub fn eval_squares(&self, x: &[Rational]) -> Result<GradedRational> {
        if x.len() != self.arity {
            return Err(Error::Domain("wrong number of arguments".into()));
        }
        let mut out = GradedRational::zero();
        for (e, c) in &self.terms {
            let mut m = Rational::from(1);
            for (xi, ei) in x.iter().zip(e) {
                m *= Rational::from(xi.pow(*ei));
            }
            out += &c.scale(&m);
        }
        Ok(out)
    }
}

/// Step to the previous permutation in lexicographic order; false when
/// `p` was already the smallest (ascending) arrangement.
pub(crate) fn prev_permutation(p: &mut [u32]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] <= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] >= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}
