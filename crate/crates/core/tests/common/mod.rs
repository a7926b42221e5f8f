#![allow(dead_code)]
//! Test-only reference implementations, kept deliberately naive.

use rug::{Integer, Rational};
use std::collections::HashMap;

/// Plain memoized recursion over rationals. It eliminates the *smallest*
/// entry of d (the library eliminates the largest) and keeps the ordered
/// C-term splitting unfolded, so agreement exercises the symmetry of the
/// recursion as well as the arithmetic.
pub struct NaiveTau {
    memo: HashMap<(u32, u32, Vec<u32>), Rational>,
    a: Vec<Rational>,
}

fn a_coeff(w: u32) -> Rational {
    if w == 0 {
        return Rational::from((1, 2));
    }
    // a_w/π^{2w} = (1 - 2^{1-2w}) ζ(2w)/π^{2w}, ζ(2w)/π^{2w} from the
    // Euler product is awkward, so use the cotangent series instead:
    // ζ(2w)/π^{2w} = (-1)^{w+1} B_{2w} 2^{2w-1}/(2w)!
    let b = bernoulli(2 * w as usize);
    let z = b.abs()
        * Rational::from((
            Integer::from(1) << (2 * w - 1),
            Integer::from(Integer::factorial(2 * w)),
        ));
    z * (Rational::from(1) - Rational::from((1, Integer::from(1) << (2 * w - 1))))
}

/// Bernoulli number via the Akiyama–Tanigawa algorithm (B_1 = +1/2 there,
/// irrelevant for even indices).
pub fn bernoulli(n: usize) -> Rational {
    let mut a: Vec<Rational> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        a.push(Rational::from((1, m as u32 + 1)));
        for j in (1..=m).rev() {
            let t = Rational::from(&a[j - 1] - &a[j]) * Rational::from(j as u32);
            a[j - 1] = t;
        }
    }
    a[0].clone()
}

impl NaiveTau {
    pub fn new() -> Self {
        NaiveTau {
            memo: HashMap::new(),
            a: (0..80).map(a_coeff).collect(),
        }
    }

    fn stable(g: u32, n: u32) -> bool {
        2 * g as i64 - 2 + n as i64 > 0
    }

    /// Rational part of [τ_d]_{g,n}.
    pub fn tau(&mut self, g: u32, n: u32, d: &[u32]) -> Rational {
        let m = 3 * g as i64 - 3 + n as i64;
        let s: i64 = d.iter().map(|&x| x as i64).sum();
        if s > m {
            return Rational::new();
        }
        let mut key = d.to_vec();
        key.sort_unstable();
        if let Some(v) = self.memo.get(&(g, n, key.clone())) {
            return v.clone();
        }
        let v = if (g, n) == (0, 3) {
            Rational::from(1)
        } else if (g, n) == (1, 1) {
            if key[0] == 0 {
                Rational::from((1, 12))
            } else {
                Rational::from((1, 2))
            }
        } else {
            self.recurse(g, n, &key, m - s)
        };
        self.memo.insert((g, n, key), v.clone());
        v
    }

    fn recurse(&mut self, g: u32, n: u32, d: &[u32], d0: i64) -> Rational {
        let d1 = d[0] as i64;
        let rest: Vec<u32> = d[1..].to_vec();
        let mut total = Rational::new();
        // A terms
        for j in 0..rest.len() {
            let dj = rest[j] as i64;
            let mut others = rest.clone();
            others.remove(j);
            for k in (d1 + dj - 1)..=(d0 + d1 + dj - 1) {
                if k < 0 {
                    continue;
                }
                let w = (k - d1 - dj + 1) as usize;
                let mut key = others.clone();
                key.push(k as u32);
                let t = self.tau(g, n - 1, &key);
                total += Rational::from(&self.a[w] * &t) * Rational::from(8 * (2 * dj + 1));
            }
        }
        let lo = d1 - 2;
        let hi = d0 + d1 - 2;
        // B term
        if g >= 1 {
            for k1 in 0..=hi.max(0) {
                for k2 in 0..=hi.max(0) {
                    let s = k1 + k2;
                    if s < lo || s > hi {
                        continue;
                    }
                    let w = (s - d1 + 2) as usize;
                    let mut key = rest.clone();
                    key.push(k1 as u32);
                    key.push(k2 as u32);
                    let t = self.tau(g - 1, n + 1, &key);
                    total += Rational::from(&self.a[w] * &t) * Rational::from(16);
                }
            }
        }
        // C term: every subset I of the positions of `rest`, every g1
        let r = rest.len();
        for mask in 0u64..(1u64 << r) {
            let i_part: Vec<u32> = (0..r).filter(|b| mask >> b & 1 == 1).map(|b| rest[b]).collect();
            let j_part: Vec<u32> = (0..r).filter(|b| mask >> b & 1 == 0).map(|b| rest[b]).collect();
            for g1 in 0..=g {
                let g2 = g - g1;
                let n1 = i_part.len() as u32 + 1;
                let n2 = j_part.len() as u32 + 1;
                if !Self::stable(g1, n1) || !Self::stable(g2, n2) {
                    continue;
                }
                for k1 in 0..=hi.max(0) {
                    for k2 in 0..=hi.max(0) {
                        let s = k1 + k2;
                        if s < lo || s > hi {
                            continue;
                        }
                        let w = (s - d1 + 2) as usize;
                        let mut x = i_part.clone();
                        x.push(k1 as u32);
                        let mut y = j_part.clone();
                        y.push(k2 as u32);
                        let tx = self.tau(g1, n1, &x);
                        if tx == 0 {
                            continue;
                        }
                        let ty = self.tau(g2, n2, &y);
                        total += Rational::from(&self.a[w] * &tx) * ty * Rational::from(16);
                    }
                }
            }
        }
        total
    }
}

/// Descending vectors of length n summing to at most m.
pub fn keys(n: usize, m: i64) -> Vec<Vec<u32>> {
    fn rec(n: usize, cap: i64, left: i64, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for v in (0..=cap.min(left)).rev() {
            cur.push(v as u32);
            rec(n, v, left - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if m >= 0 {
        rec(n, m, m, &mut Vec::new(), &mut out);
    }
    out
}
