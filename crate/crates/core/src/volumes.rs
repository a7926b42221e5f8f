//! Intersection-number coefficients [τ_d]_{g,n}, volume polynomials and
//! closed-surface volumes.
//!
//! [τ_d]_{g,n} is a rational multiple of π^{2 d0} with d0 = 3g-3+n-|d|, so
//! only the rational part is stored. Coefficients are computed a whole
//! (g,n) table at a time, in order of increasing 2g-2+n, and every table
//! keeps its values as integers over one common denominator. The recursion
//! then runs on integer multiply-adds; rationals only appear when a finished
//! coefficient is assembled.
//!
//! Convention: V_{1,1}(b) = (b² + 4π²)/48 and a_0 = 1/2.

use crate::error::{domain, Error, Result};
use crate::graded::{numeric_eval, prev_permutation, zeta_weight_coeff, GradedRational, SymPolynomial};
use crate::real::Real;
use rayon::prelude::*;
use rug::{Integer, Rational};
use rustc_hash::FxHashMap;
use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

pub const CACHE_VERSION: &str = "wpvol-cache v1";

/// Largest supported boundary count; keys are stored as bytes.
const MAX_N: usize = 60;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TauKey {
    pub g: u32,
    pub n: u32,
    /// Sorted descending.
    pub d: Vec<u32>,
}

impl TauKey {
    pub fn new(g: u32, n: u32, d: &[u32]) -> Result<Self> {
        if d.len() != n as usize {
            return domain(format!("exponent vector has {} entries, n = {n}", d.len()));
        }
        if !is_stable(g, n) {
            return domain(format!("unstable pair (g,n) = ({g},{n})"));
        }
        let mut d = d.to_vec();
        d.sort_unstable_by(|a, b| b.cmp(a));
        Ok(TauKey { g, n, d })
    }

    pub fn dim(&self) -> i64 {
        dim(self.g, self.n)
    }

    /// 3g-3+n-|d|, the π² grade of the coefficient.
    pub fn d0(&self) -> i64 {
        self.dim() - self.d.iter().map(|&x| x as i64).sum::<i64>()
    }
}

pub fn is_stable(g: u32, n: u32) -> bool {
    2 * g as i64 - 2 + n as i64 > 0
}

/// Complex dimension 3g-3+n.
pub fn dim(g: u32, n: u32) -> i64 {
    3 * g as i64 - 3 + n as i64
}

fn is_base(g: u32, n: u32) -> bool {
    (g, n) == (0, 3) || (g, n) == (1, 1)
}

/// One (g,n) table: value of key i is nums[i]/den (times π^{2 d0}).
struct PairTable {
    den: Integer,
    index: FxHashMap<Box<[u8]>, u32>,
    keys: Vec<Box<[u8]>>,
    nums: Vec<Integer>,
}

impl PairTable {
    fn from_values(entries: Vec<(Box<[u8]>, Rational)>) -> Self {
        let mut den = Integer::from(1);
        for (_, v) in &entries {
            den.lcm_mut(v.denom());
        }
        let mut index = FxHashMap::default();
        index.reserve(entries.len());
        let mut keys = Vec::with_capacity(entries.len());
        let mut nums = Vec::with_capacity(entries.len());
        for (i, (k, v)) in entries.into_iter().enumerate() {
            let scale = Integer::from(&den / v.denom());
            let (num, _) = v.into_numer_denom();
            nums.push(num * scale);
            index.insert(k.clone(), i as u32);
            keys.push(k);
        }
        PairTable { den, index, keys, nums }
    }

    #[inline]
    fn get(&self, d: &[u8]) -> Option<&Integer> {
        self.index.get(d).map(|&i| &self.nums[i as usize])
    }

    fn value(&self, d: &[u8]) -> Option<Rational> {
        self.get(d).map(|n| Rational::from((n.clone(), self.den.clone())))
    }

    fn len(&self) -> usize {
        self.keys.len()
    }
}

/// a_L = ahat[L] / lambda for 0 ≤ L ≤ lmax (rational parts).
struct ZetaTable {
    lambda: Integer,
    ahat: Vec<Integer>,
}

impl ZetaTable {
    fn build(lmax: usize) -> Self {
        let a: Vec<Rational> = (0..=lmax as u32).map(zeta_weight_coeff).collect();
        let mut lambda = Integer::from(1);
        for v in &a {
            lambda.lcm_mut(v.denom());
        }
        let ahat = a
            .iter()
            .map(|v| v.numer() * Integer::from(&lambda / v.denom()))
            .collect();
        ZetaTable { lambda, ahat }
    }
}

/// Memoized coefficient store shared by every computation in the crate.
pub struct VolumeCache {
    tables: RwLock<BTreeMap<(u32, u32), Arc<PairTable>>>,
    zeta: RwLock<Arc<ZetaTable>>,
    build_lock: Mutex<()>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl Default for VolumeCache {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub pairs: usize,
    pub keys: usize,
}

impl VolumeCache {
    pub fn new() -> Self {
        VolumeCache {
            tables: RwLock::new(BTreeMap::new()),
            zeta: RwLock::new(Arc::new(ZetaTable::build(8))),
            build_lock: Mutex::new(()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn version(&self) -> &'static str {
        CACHE_VERSION
    }

    pub fn stats(&self) -> CacheStats {
        let t = self.tables.read().unwrap();
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            pairs: t.len(),
            keys: t.values().map(|p| p.len()).sum(),
        }
    }

    /// Stable pairs currently held.
    pub fn pairs(&self) -> Vec<(u32, u32)> {
        self.tables.read().unwrap().keys().copied().collect()
    }

    pub fn contains_pair(&self, g: u32, n: u32) -> bool {
        self.tables.read().unwrap().contains_key(&(g, n))
    }

    fn table(&self, g: u32, n: u32) -> Result<Arc<PairTable>> {
        if !is_stable(g, n) || n == 0 {
            return domain(format!("unstable or closed pair (g,n) = ({g},{n})"));
        }
        if n as usize > MAX_N {
            return domain(format!("n = {n} exceeds the supported maximum {MAX_N}"));
        }
        if let Some(t) = self.tables.read().unwrap().get(&(g, n)) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(t.clone());
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        self.compute_closure(&[(g, n)])?;
        Ok(self.tables.read().unwrap()[&(g, n)].clone())
    }

    /// Make sure every listed pair (and everything it depends on) is tabulated.
    pub fn ensure_pairs(&self, pairs: &[(u32, u32)]) -> Result<()> {
        for &(g, n) in pairs {
            if !is_stable(g, n) || n == 0 {
                return domain(format!("unstable or closed pair (g,n) = ({g},{n})"));
            }
        }
        self.compute_closure(pairs)
    }

    fn compute_closure(&self, targets: &[(u32, u32)]) -> Result<()> {
        let _guard = self.build_lock.lock().unwrap();
        let have: BTreeSet<(u32, u32)> = self.tables.read().unwrap().keys().copied().collect();
        let mut need = BTreeSet::new();
        let mut stack: Vec<(u32, u32)> = targets.to_vec();
        while let Some(p) = stack.pop() {
            if have.contains(&p) || !need.insert(p) {
                continue;
            }
            stack.extend(dependencies(p.0, p.1));
        }
        let mut order: Vec<(u32, u32)> = need.into_iter().collect();
        order.sort_by_key(|&(g, n)| (2 * g + n, g));
        for (g, n) in order {
            let m = dim(g, n).max(0) as usize;
            let zeta = {
                let cur = self.zeta.read().unwrap().clone();
                if cur.ahat.len() <= m {
                    let z = Arc::new(ZetaTable::build(m.max(2 * cur.ahat.len())));
                    *self.zeta.write().unwrap() = z.clone();
                    z
                } else {
                    cur
                }
            };
            let snapshot = self.tables.read().unwrap().clone();
            let table = compute_pair(g, n, &snapshot, &zeta);
            self.tables.write().unwrap().insert((g, n), Arc::new(table));
        }
        Ok(())
    }

    /// Rational part of [τ_d]_{g,n}; zero when |d| > 3g-3+n.
    pub fn tau_rational(&self, g: u32, n: u32, d: &[u32]) -> Result<Rational> {
        let key = TauKey::new(g, n, d)?;
        if key.d0() < 0 {
            return Ok(Rational::new());
        }
        let t = self.table(g, n)?;
        let bytes: Vec<u8> = key.d.iter().map(|&x| x as u8).collect();
        Ok(t.value(&bytes).expect("complete table"))
    }

    /// [τ_d]_{g,n} with its π² grade.
    pub fn tau_coefficient(&self, key: &TauKey) -> Result<GradedRational> {
        let d0 = key.d0();
        let r = self.tau_rational(key.g, key.n, &key.d)?;
        Ok(GradedRational::monomial(d0, r))
    }

    /// All keys of one table with rational parts, d sorted descending,
    /// listed in lexicographic order of d.
    pub fn pair_entries(&self, g: u32, n: u32) -> Result<Vec<(Vec<u32>, Rational)>> {
        let t = self.table(g, n)?;
        let mut out: Vec<(Vec<u32>, Rational)> = t
            .keys
            .iter()
            .map(|k| (k.iter().map(|&x| x as u32).collect(), t.value(k).unwrap()))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }

    /// V_{g,n}(2L) with coefficient [τ_d]/∏(2d_i+1)! on ∏ L_i^{2 d_i}.
    pub fn volume_polynomial(&self, g: u32, n: u32) -> Result<SymPolynomial> {
        let m = dim(g, n);
        let mut p = SymPolynomial::new(n as usize);
        for (d, r) in self.pair_entries(g, n)? {
            let s: i64 = d.iter().map(|&x| x as i64).sum();
            let c = r / Rational::from(odd_factorial_product(&d));
            let mut perm = d.clone();
            loop {
                p.insert(perm.clone(), GradedRational::monomial(m - s, c.clone()))?;
                if !prev_permutation(&mut perm) {
                    break;
                }
            }
        }
        Ok(p)
    }

    /// V_{g,n} = V_{g,n}(0,…,0).
    pub fn volume_value(&self, g: u32, n: u32) -> Result<GradedRational> {
        let d = vec![0; n as usize];
        self.tau_coefficient(&TauKey::new(g, n, &d)?)
    }

    /// V_{g,n} including closed surfaces (n = 0, g ≥ 2).
    pub fn volume_any(&self, g: u32, n: u32) -> Result<GradedRational> {
        if n == 0 {
            self.closed_volume(g)
        } else {
            self.volume_value(g, n)
        }
    }

    /// V_g from the (g,1) polynomial through the dilaton relation
    /// ∂_b V_{g,1}(b) at b = 2πi equals 2πi(2g-2) V_g.
    pub fn closed_volume(&self, g: u32) -> Result<GradedRational> {
        if g < 2 {
            return domain(format!("closed volume needs g >= 2, got {g}"));
        }
        let mut acc = Rational::new();
        for (d, r) in self.pair_entries(g, 1)? {
            let d = d[0];
            if d == 0 {
                continue;
            }
            let sign = if d % 2 == 1 { 1 } else { -1 };
            let den = Integer::from(Integer::factorial(2 * d + 1)) * 4u32 * (2 * g - 2);
            acc += r * Rational::from((Integer::from(sign * 2 * d as i64), den));
        }
        Ok(GradedRational::monomial(dim(g, 0), acc))
    }

    /// Exact V_{g,n}(b) at boundary lengths b_i = 2 L_i given the half
    /// lengths L_i as rationals.
    pub fn volume_at_half_lengths(&self, g: u32, n: u32, half: &[Rational]) -> Result<GradedRational> {
        if half.len() != n as usize {
            return domain(format!("expected {n} lengths, got {}", half.len()));
        }
        if half.iter().any(|x| x.cmp0() == std::cmp::Ordering::Less) {
            return domain("negative boundary length");
        }
        let m = dim(g, n);
        let x: Vec<Rational> = half.iter().map(|l| Rational::from(l * l)).collect();
        let mut by_grade: BTreeMap<i64, Rational> = BTreeMap::new();
        for (d, r) in self.pair_entries(g, n)? {
            let s: i64 = d.iter().map(|&v| v as i64).sum();
            let mono = monomial_symmetric(&d, &x);
            let c = r * mono / Rational::from(odd_factorial_product(&d));
            *by_grade.entry(m - s).or_default() += c;
        }
        let mut out = GradedRational::zero();
        for (gr, c) in by_grade {
            out += &GradedRational::monomial(gr, c);
        }
        Ok(out)
    }

    /// Numeric V_{g,n}(b₁,…,bₙ) for boundary lengths b_i ≥ 0.
    pub fn volume_eval(&self, g: u32, n: u32, lengths: &[f64], digits: u32) -> Result<Real> {
        if lengths.iter().any(|&b| !(b >= 0.0) || !b.is_finite()) {
            return domain("boundary lengths must be finite and non-negative");
        }
        let half: Vec<Rational> = lengths.iter().map(|&b| Rational::from_f64(b).unwrap() / 2u32).collect();
        let v = self.volume_at_half_lengths(g, n, &half)?;
        Ok(numeric_eval(&v, digits))
    }

    /// Write every table as `g,n,d1 d2 …|grade:num/den` lines.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# {CACHE_VERSION}")?;
        let pairs = self.pairs();
        for (g, n) in pairs {
            let m = dim(g, n);
            for (d, r) in self.pair_entries(g, n)? {
                let s: i64 = d.iter().map(|&x| x as i64).sum();
                let ds: Vec<String> = d.iter().map(|x| x.to_string()).collect();
                writeln!(w, "{g},{n},{}|{}", ds.join(" "), GradedRational::monomial(m - s, r))?;
            }
        }
        Ok(())
    }

    /// Read a cache file. Tables must be complete; a pair already present
    /// must agree exactly, otherwise a conflict is reported.
    pub fn load<R: BufRead>(&self, r: R) -> Result<usize> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Parse("empty cache file".into()))?;
        let found = header.trim_start_matches('#').trim().to_string();
        if found != CACHE_VERSION {
            return Err(Error::CacheVersion {
                found,
                expected: CACHE_VERSION.into(),
            });
        }
        let mut groups: BTreeMap<(u32, u32), Vec<(Box<[u8]>, Rational)>> = BTreeMap::new();
        let mut seen: BTreeSet<(u32, u32, Vec<u32>)> = BTreeSet::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| Error::Parse(format!("line {}: {msg}", lineno + 2));
            let (head, val) = line.split_once('|').ok_or_else(|| err("missing '|'"))?;
            let mut parts = head.splitn(3, ',');
            let g: u32 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| err("bad genus"))?;
            let n: u32 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| err("bad boundary count"))?;
            let d: Vec<u32> = parts
                .next()
                .ok_or_else(|| err("missing exponents"))?
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| err("bad exponent")))
                .collect::<Result<_>>()?;
            let key = TauKey::new(g, n, &d).map_err(|e| err(&e.to_string()))?;
            if key.d != d {
                return Err(err("exponents not sorted descending"));
            }
            if key.d0() < 0 || d.iter().any(|&x| x > 255) {
                return Err(err("exponent sum exceeds 3g-3+n"));
            }
            let v: GradedRational = val.parse().map_err(|e: Error| err(&e.to_string()))?;
            let r = match (v.single_grade(), v.is_zero()) {
                (Some(gr), _) if gr == key.d0() => v.coeff(gr).unwrap().clone(),
                _ => return Err(err("value does not have grade 3g-3+n-|d|")),
            };
            if !seen.insert((g, n, d.clone())) {
                return Err(err("duplicate key"));
            }
            groups
                .entry((g, n))
                .or_default()
                .push((d.iter().map(|&x| x as u8).collect(), r));
        }
        let mut count = 0;
        for ((g, n), entries) in groups {
            let expected = count_keys(g, n);
            if entries.len() != expected {
                return Err(Error::Parse(format!(
                    "table ({g},{n}) has {} entries, expected {expected}",
                    entries.len()
                )));
            }
            count += entries.len();
            self.install(g, n, PairTable::from_values(entries))?;
        }
        Ok(count)
    }

    /// Union with another cache; equal keys must carry equal values.
    pub fn merge(&self, other: &VolumeCache) -> Result<()> {
        let theirs = other.tables.read().unwrap().clone();
        for ((g, n), t) in theirs {
            let entries = t.keys.iter().map(|k| (k.clone(), t.value(k).unwrap())).collect();
            self.install(g, n, PairTable::from_values(entries))?;
        }
        Ok(())
    }

    fn install(&self, g: u32, n: u32, t: PairTable) -> Result<()> {
        let _guard = self.build_lock.lock().unwrap();
        let mut tables = self.tables.write().unwrap();
        if let Some(mine) = tables.get(&(g, n)) {
            for k in &t.keys {
                let a = mine.value(k);
                let b = t.value(k);
                if a != b {
                    let m = dim(g, n);
                    let s: i64 = k.iter().map(|&x| x as i64).sum();
                    let show = |v: Option<Rational>| {
                        v.map(|r| GradedRational::monomial(m - s, r).to_string())
                            .unwrap_or_else(|| "missing".into())
                    };
                    let ds: Vec<String> = k.iter().map(|x| x.to_string()).collect();
                    return Err(Error::CacheConflict {
                        key: format!("{g},{n},{}", ds.join(" ")),
                        left: show(a),
                        right: show(b),
                    });
                }
            }
            return Ok(());
        }
        tables.insert((g, n), Arc::new(t));
        Ok(())
    }

    /// Recompute every held table from scratch and compare.
    pub fn verify(&self) -> Result<()> {
        let fresh = VolumeCache::new();
        let pairs = self.pairs();
        fresh.ensure_pairs(&pairs)?;
        for (g, n) in pairs {
            let a = self.pair_entries(g, n)?;
            let b = fresh.pair_entries(g, n)?;
            if a != b {
                let (k, x, y) = a
                    .iter()
                    .zip(&b)
                    .find(|(x, y)| x != y)
                    .map(|(x, y)| (x.0.clone(), x.1.clone(), y.1.clone()))
                    .unwrap_or_default();
                return Err(Error::CacheConflict {
                    key: format!("{g},{n},{k:?}"),
                    left: x.to_string(),
                    right: y.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// ∏ (2d_i + 1)!
pub fn odd_factorial_product(d: &[u32]) -> Integer {
    let mut p = Integer::from(1);
    for &x in d {
        p *= Integer::from(Integer::factorial(2 * x + 1));
    }
    p
}

/// Σ over distinct arrangements σ of the multiset d of ∏ x_i^{d_σ(i)}.
pub fn monomial_symmetric(d: &[u32], x: &[Rational]) -> Rational {
    let mut perm: Vec<u32> = d.to_vec();
    perm.sort_unstable_by(|a, b| b.cmp(a));
    let mut acc = Rational::new();
    loop {
        let mut t = Rational::from(1);
        for (xi, &e) in x.iter().zip(&perm) {
            if e > 0 {
                t *= Rational::from(rug::ops::Pow::pow(xi, e));
            }
        }
        acc += t;
        if !prev_permutation(&mut perm) {
            break;
        }
    }
    acc
}

/// Number of descending d of length n with |d| ≤ 3g-3+n.
pub fn count_keys(g: u32, n: u32) -> usize {
    let m = dim(g, n);
    if m < 0 {
        return 0;
    }
    // partitions of every s ≤ m into at most n parts
    let m = m as usize;
    let n = n as usize;
    let mut p = vec![vec![0usize; n + 1]; m + 1];
    for k in 0..=n {
        p[0][k] = 1;
    }
    for s in 1..=m {
        for k in 1..=n {
            p[s][k] = p[s][k - 1] + if s >= k { p[s - k][k] } else { 0 };
        }
    }
    (0..=m).map(|s| p[s][n]).sum()
}

/// Pairs whose tables the recursion for (g,n) reads.
pub fn dependencies(g: u32, n: u32) -> Vec<(u32, u32)> {
    if is_base(g, n) {
        return vec![];
    }
    let mut out = Vec::new();
    if n >= 2 && is_stable(g, n - 1) {
        out.push((g, n - 1));
    }
    if g >= 1 && is_stable(g - 1, n + 1) {
        out.push((g - 1, n + 1));
    }
    for g1 in 0..=g {
        for n1 in 1..=n {
            let (g2, n2) = (g - g1, n + 1 - n1);
            if is_stable(g1, n1) && is_stable(g2, n2) {
                out.push((g1, n1));
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Descending vectors of length `len` with entries summing to at most `max`.
fn descending_vectors(len: usize, max: i64) -> Vec<Vec<u8>> {
    fn rec(len: usize, cap: i64, left: i64, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for v in (0..=cap.min(left)).rev() {
            cur.push(v as u8);
            rec(len, v, left - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if max >= 0 {
        rec(len, max, max, &mut Vec::with_capacity(len), &mut out);
    }
    out
}

/// Write `r` with the values of `extra` inserted, descending, into `buf`.
#[inline]
fn merged<'a>(buf: &'a mut [u8; MAX_N + 2], r: &[u8], extra: &[u8]) -> &'a [u8] {
    let mut e: [u8; 2] = [0; 2];
    let k = extra.len();
    e[..k].copy_from_slice(extra);
    if k == 2 && e[0] < e[1] {
        e.swap(0, 1);
    }
    let (mut i, mut j, mut o) = (0, 0, 0);
    while i < r.len() || j < k {
        if j < k && (i >= r.len() || e[j] >= r[i]) {
            buf[o] = e[j];
            j += 1;
        } else {
            buf[o] = r[i];
            i += 1;
        }
        o += 1;
    }
    &buf[..o]
}

fn compute_pair(g: u32, n: u32, tables: &BTreeMap<(u32, u32), Arc<PairTable>>, zeta: &ZetaTable) -> PairTable {
    if (g, n) == (0, 3) {
        return PairTable::from_values(vec![(vec![0u8, 0, 0].into(), Rational::from(1))]);
    }
    if (g, n) == (1, 1) {
        return PairTable::from_values(vec![
            (vec![1u8].into(), Rational::from((1, 2))),
            (vec![0u8].into(), Rational::from((1, 12))),
        ]);
    }
    let m = dim(g, n);
    let ctx = PairContext::new(g, n, tables);
    let rests = descending_vectors(n as usize - 1, m);
    let groups: Vec<Vec<(Box<[u8]>, Rational)>> = rests.par_iter().map(|r| ctx.compute_group(r, zeta)).collect();
    PairTable::from_values(groups.into_iter().flatten().collect())
}

struct Split {
    g1: u32,
    n1: u32,
    /// Integer factor: symmetry weight × DC/(den1·den2).
    factor: Integer,
}

struct PairContext<'a> {
    g: u32,
    n: u32,
    m: i64,
    tables: &'a BTreeMap<(u32, u32), Arc<PairTable>>,
    /// Common denominator of the C-term sums.
    dc: Integer,
    /// DC/(den(g1,n1)·den(g2,n2)) keyed by (g1,n1).
    split_scale: BTreeMap<(u32, u32), Integer>,
}

impl<'a> PairContext<'a> {
    fn new(g: u32, n: u32, tables: &'a BTreeMap<(u32, u32), Arc<PairTable>>) -> Self {
        let mut prods = BTreeMap::new();
        let mut dc = Integer::from(1);
        for g1 in 0..=g {
            for n1 in 1..=n {
                let (g2, n2) = (g - g1, n + 1 - n1);
                if is_stable(g1, n1) && is_stable(g2, n2) {
                    let p = Integer::from(&tables[&(g1, n1)].den * &tables[&(g2, n2)].den);
                    dc.lcm_mut(&p);
                    prods.insert((g1, n1), p);
                }
            }
        }
        let split_scale = prods.into_iter().map(|(k, p)| (k, Integer::from(&dc / &p))).collect();
        PairContext {
            g,
            n,
            m: dim(g, n),
            tables,
            dc,
            split_scale,
        }
    }

    fn compute_group(&self, r: &[u8], zeta: &ZetaTable) -> Vec<(Box<[u8]>, Rational)> {
        let (g, n, m) = (self.g, self.n, self.m);
        let sr: i64 = r.iter().map(|&x| x as i64).sum();
        let maxr = r.first().copied().unwrap_or(0) as i64;
        let top = m - sr;
        if top < maxr {
            return vec![];
        }
        let smax = top - 2;
        let width = (smax + 1).max(0) as usize;
        let mut buf = [0u8; MAX_N + 2];

        // Σ_{k1+k2=s} [τ_k1 τ_k2 τ_R]_{g-1,n+1}
        let mut bconv = vec![Integer::new(); width];
        if g >= 1 && smax >= 0 {
            let tb = &self.tables[&(g - 1, n + 1)];
            for s in 0..=smax {
                let acc = &mut bconv[s as usize];
                for k1 in 0..=s / 2 {
                    let k2 = s - k1;
                    let key = merged(&mut buf, r, &[k1 as u8, k2 as u8]);
                    if let Some(v) = tb.get(key) {
                        if k1 == k2 {
                            *acc += v;
                        } else {
                            *acc += Integer::from(v * 2u32);
                        }
                    }
                }
            }
        }

        // Σ over splittings of [τ_k1 τ_I]_{g1} [τ_k2 τ_J]_{g2}, scaled to DC
        let mut cconv = vec![Integer::new(); width];
        if smax >= 0 {
            let mut tmp = vec![Integer::new(); width];
            for (sub, mult) in sub_multisets(r) {
                let comp = complement(r, &sub);
                for split in self.splits(&sub, &comp) {
                    let (g1, n1) = (split.g1, split.n1);
                    let (g2, n2) = (g - g1, n + 1 - n1);
                    let t1 = &self.tables[&(g1, n1)];
                    let t2 = &self.tables[&(g2, n2)];
                    let s1: i64 = sub.iter().map(|&x| x as i64).sum();
                    let s2: i64 = comp.iter().map(|&x| x as i64).sum();
                    let k1max = (dim(g1, n1) - s1).min(smax);
                    let k2max = (dim(g2, n2) - s2).min(smax);
                    if k1max < 0 || k2max < 0 {
                        continue;
                    }
                    let xs: Vec<&Integer> = (0..=k1max)
                        .map(|k| t1.get(merged(&mut buf, &sub, &[k as u8])).unwrap())
                        .collect();
                    let ys: Vec<&Integer> = (0..=k2max)
                        .map(|k| t2.get(merged(&mut buf, &comp, &[k as u8])).unwrap())
                        .collect();
                    for t in tmp.iter_mut() {
                        *t = Integer::new();
                    }
                    for (k1, x) in xs.iter().enumerate() {
                        for (k2, y) in ys.iter().enumerate() {
                            let s = k1 + k2;
                            if s as i64 > smax {
                                break;
                            }
                            tmp[s] += *x * *y;
                        }
                    }
                    let f = Integer::from(&split.factor * mult);
                    for (c, t) in cconv.iter_mut().zip(&tmp) {
                        if !t.is_zero() {
                            *c += &f * t;
                        }
                    }
                }
            }
        }

        let ta = if n >= 2 && is_stable(g, n - 1) {
            Some(&self.tables[&(g, n - 1)])
        } else {
            None
        };
        let den_b = if g >= 1 {
            self.tables[&(g - 1, n + 1)].den.clone()
        } else {
            Integer::from(1)
        };
        // distinct values of R with multiplicity, and R with one copy removed
        let mut distinct: Vec<(u8, u32, Vec<u8>)> = Vec::new();
        for (i, &v) in r.iter().enumerate() {
            if i > 0 && r[i - 1] == v {
                distinct.last_mut().unwrap().1 += 1;
            } else {
                let mut rest = r.to_vec();
                rest.remove(i);
                distinct.push((v, 1, rest));
            }
        }

        let mut out = Vec::new();
        for d1 in maxr..=top {
            let d0 = top - d1;
            let mut aint = Integer::new();
            if let Some(ta) = ta {
                for (v, mult, rest) in &distinct {
                    let mut acc = Integer::new();
                    for l in 0..=d0 {
                        let k = l + d1 + *v as i64 - 1;
                        if k < 0 {
                            continue;
                        }
                        if let Some(x) = ta.get(merged(&mut buf, rest, &[k as u8])) {
                            acc += &zeta.ahat[l as usize] * x;
                        }
                    }
                    acc *= 8 * (2 * *v as u32 + 1) * mult;
                    aint += acc;
                }
            }
            let mut bint = Integer::new();
            let mut cint = Integer::new();
            for s in (d1 - 2).max(0)..=smax {
                let w = (s - d1 + 2) as usize;
                bint += &zeta.ahat[w] * &bconv[s as usize];
                cint += &zeta.ahat[w] * &cconv[s as usize];
            }
            let mut val = Rational::new();
            if let Some(ta) = ta {
                val += Rational::from((aint, Integer::from(&ta.den * &zeta.lambda)));
            }
            val += Rational::from((bint * 16u32, Integer::from(&den_b * &zeta.lambda)));
            val += Rational::from((cint * 16u32, Integer::from(&self.dc * &zeta.lambda)));
            let mut key = Vec::with_capacity(r.len() + 1);
            key.push(d1 as u8);
            key.extend_from_slice(r);
            out.push((key.into_boxed_slice(), val));
        }
        out
    }

    /// Ordered splittings (g1, I | g2, J) for a fixed I, J, folded by the
    /// swap symmetry: each unordered pair appears once with weight 1 or 2.
    fn splits(&self, sub: &[u8], comp: &[u8]) -> Vec<Split> {
        let (g, n) = (self.g, self.n);
        let n1 = sub.len() as u32 + 1;
        let n2 = n + 1 - n1;
        let mut out = Vec::new();
        for g1 in 0..=g {
            let g2 = g - g1;
            if !is_stable(g1, n1) || !is_stable(g2, n2) {
                continue;
            }
            let ord = (g1, sub).cmp(&(g2, comp));
            let weight = match ord {
                std::cmp::Ordering::Less => 2u32,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Greater => continue,
            };
            out.push(Split {
                g1,
                n1,
                factor: Integer::from(&self.split_scale[&(g1, n1)] * weight),
            });
        }
        out
    }
}

/// Sub-multisets of a descending vector with the number of index subsets
/// realizing each.
fn sub_multisets(r: &[u8]) -> Vec<(Vec<u8>, u64)> {
    let mut groups: Vec<(u8, usize)> = Vec::new();
    for &v in r {
        match groups.last_mut() {
            Some((w, c)) if *w == v => *c += 1,
            _ => groups.push((v, 1)),
        }
    }
    let mut out = vec![(Vec::new(), 1u64)];
    for (v, c) in groups {
        let mut next = Vec::new();
        for (s, m) in &out {
            let mut binom = 1u64;
            for take in 0..=c {
                let mut s2 = s.clone();
                s2.extend(std::iter::repeat_n(v, take));
                next.push((s2, m * binom));
                binom = binom * (c - take) as u64 / (take + 1) as u64;
            }
        }
        out = next;
    }
    out
}

fn complement(r: &[u8], sub: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(r.len() - sub.len());
    let mut j = 0;
    for &v in r {
        if j < sub.len() && sub[j] == v {
            j += 1;
        } else {
            out.push(v);
        }
    }
    out
}
