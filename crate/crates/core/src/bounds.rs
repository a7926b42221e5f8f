//! Numeric checks of the volume inequalities: coefficient deficits, the
//! sinh bounds, volume ratios, factorial growth, stratum products and
//! separating multicurve sums. Constants are fitted, never assumed.

use crate::error::{domain, Result};
use crate::graded::{numeric_eval, GradedRational};
use crate::real::{bits_for_digits, Real};
use crate::strata::{separating_configs, SepFilter};
use crate::volumes::{dim, is_stable, VolumeCache};
use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::Serialize;
use std::cmp::Ordering;
use std::time::Instant;

/// Working precision of the numeric side of every report.
const DIGITS: u32 = 40;

#[derive(Clone, Debug, Serialize)]
pub struct BoundPoint {
    /// Grid parameters, e.g. `g=4 n=2 d=1,0`.
    pub params: String,
    /// Positive when the inequality holds at this point.
    pub slack: f64,
    /// The quantity whose boundedness is being tracked.
    pub normalized: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub grid: String,
    pub points: Vec<BoundPoint>,
    /// Smallest constant that makes the bound hold on the grid.
    pub constant: Option<f64>,
    /// Index into `points` where `constant` is attained.
    pub argmax: Option<usize>,
    pub pass: bool,
    pub runtime_s: f64,
}

impl BoundReport {
    fn new(name: &str, grid: String, points: Vec<BoundPoint>, started: Instant) -> Self {
        BoundReport {
            name: name.into(),
            grid,
            points,
            constant: None,
            argmax: None,
            pass: true,
            runtime_s: started.elapsed().as_secs_f64(),
        }
    }

    /// Set `constant` to the largest `normalized` value.
    fn fit_max(&mut self) {
        let best = self
            .points
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.normalized.total_cmp(&b.1.normalized));
        if let Some((i, p)) = best {
            self.constant = Some(p.normalized);
            self.argmax = Some(i);
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("params,slack,normalized\n");
        for p in &self.points {
            s.push_str(&format!("\"{}\",{:e},{:e}\n", p.params, p.slack, p.normalized));
        }
        s
    }

    /// Summary without the per-point rows.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "grid": self.grid,
            "points": self.points.len(),
            "constant": self.constant,
            "argmax": self.argmax.map(|i| self.points[i].params.clone()),
            "pass": self.pass,
            "runtime_s": self.runtime_s,
        })
    }
}

fn num(x: &GradedRational) -> Real {
    numeric_eval(x, DIGITS)
}

fn ratio(a: &GradedRational, b: &GradedRational) -> Real {
    &num(a) / &num(b)
}

/// 1 - [τ_d]_{g,n}/V_{g,n}, exact.
pub fn coeff_deficit(g: u32, n: u32, d: &[u32], cache: &VolumeCache) -> Result<GradedRational> {
    if !is_stable(g, n) || n == 0 {
        return domain(format!("unstable pair ({g},{n})"));
    }
    if d.len() != n as usize {
        return domain(format!("expected {n} exponents, got {}", d.len()));
    }
    let s: i64 = d.iter().map(|&x| x as i64).sum();
    if s > dim(g, n) {
        return domain(format!("|d| = {s} exceeds 3g-3+n = {}", dim(g, n)));
    }
    let t = cache.tau_rational(g, n, d)?;
    let v = cache.tau_rational(g, n, &vec![0; n as usize])?;
    // [τ_d] = t π^{2(m-|d|)}, V = v π^{2m}
    Ok(&GradedRational::one() - &GradedRational::monomial(-s, t / v))
}

fn descending(n: usize, max_sum: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, cap: u32, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for v in (0..=cap.min(left)).rev() {
            cur.push(v);
            rec(n, v, left - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, max_sum, max_sum, &mut Vec::new(), &mut out);
    out
}

/// Fit the smallest C with deficit ≤ C n|d|²/(2g-3+n) over
/// 2 ≤ g ≤ g_max, 1 ≤ n ≤ n_max, 1 ≤ |d| ≤ d_budget. Passes when every
/// deficit lies in [0,1].
pub fn verify_coeff_bound(g_max: u32, n_max: u32, d_budget: u32, cache: &VolumeCache) -> Result<BoundReport> {
    if g_max < 2 {
        return domain("g_max must be at least 2");
    }
    let started = Instant::now();
    let pairs: Vec<(u32, u32)> = (2..=g_max).flat_map(|g| (1..=n_max).map(move |n| (g, n))).collect();
    cache.ensure_pairs(&pairs)?;
    let mut grid = Vec::new();
    for &(g, n) in &pairs {
        let budget = d_budget.min(dim(g, n) as u32);
        for d in descending(n as usize, budget) {
            if d.iter().sum::<u32>() >= 1 {
                grid.push((g, n, d));
            }
        }
    }
    let points: Vec<Result<BoundPoint>> = grid
        .par_iter()
        .map(|(g, n, d)| {
            let def = num(&coeff_deficit(*g, *n, d, cache)?).to_f64();
            let s = d.iter().sum::<u32>() as f64;
            let scale = (*n as f64) * s * s / (2.0 * *g as f64 - 3.0 + *n as f64);
            let ds: Vec<String> = d.iter().map(|x| x.to_string()).collect();
            Ok(BoundPoint {
                params: format!("g={g} n={n} d={}", ds.join(",")),
                slack: def.min(1.0 - def),
                normalized: def / scale,
            })
        })
        .collect();
    let points = points.into_iter().collect::<Result<Vec<_>>>()?;
    let mut r = BoundReport::new(
        "coefficient deficit",
        format!("2<=g<={g_max}, 1<=n<={n_max}, 1<=|d|<={d_budget}"),
        points,
        started,
    );
    r.pass = r.points.iter().all(|p| p.slack >= 0.0);
    r.fit_max();
    r.runtime_s = started.elapsed().as_secs_f64();
    Ok(r)
}

/// Outcome of a comparison that raised precision until it was decided.
#[derive(Clone, Debug)]
pub struct Guarded {
    pub order: Ordering,
    pub left: Real,
    pub right: Real,
    pub digits: u32,
}

/// Compare two quantities computed by `f(digits)`, starting at `digits`
/// and doubling while they are within 10 ulps of each other. Gives up
/// with `Ordering::Equal` above 1280 digits.
pub fn guarded_compare(digits: u32, f: impl Fn(u32) -> (Real, Real)) -> Guarded {
    let mut d = digits;
    loop {
        let (a, b) = f(d);
        let bits = bits_for_digits(d);
        let (a, b) = (a.with_bits(bits), b.with_bits(bits));
        if a.ulps_between(&b) > 10 || d >= 1280 {
            let order = if a.ulps_between(&b) > 10 {
                a.cmp(&b)
            } else {
                Ordering::Equal
            };
            return Guarded {
                order,
                left: a,
                right: b,
                digits: d,
            };
        }
        d *= 2;
    }
}

/// ∏ sinh(L_i)/L_i at the given precision.
fn sinh_product(half: &[Rational], bits: u32) -> Real {
    let mut p = Real::one(bits);
    for l in half {
        let x = Real::from_rational(l, bits + 16);
        let s = &x.sinh() / &x;
        p = &p * &s;
    }
    p.with_bits(bits)
}

/// Check V(2L)/V ≤ ∏ sinh(L_i)/L_i ≤ exp(ΣL_i) at half-lengths L. The
/// first point carries the upper-bound margin, the second the lower-bound
/// slack 1 - ratio/∏ sinh(L_i)/L_i.
pub fn sinh_ratio_check(g: u32, n: u32, half: &[Rational], cache: &VolumeCache, digits: u32) -> Result<BoundReport> {
    if half.iter().any(|l| l.cmp0() != Ordering::Greater) {
        return domain("half-lengths must be positive");
    }
    let started = Instant::now();
    let vl = cache.volume_at_half_lengths(g, n, half)?;
    let v = cache.volume_value(g, n)?;
    let ratio_at = |d: u32| {
        let bits = bits_for_digits(d);
        (&numeric_eval(&vl, d + 10) / &numeric_eval(&v, d + 10)).with_bits(bits)
    };
    let upper = guarded_compare(digits, |d| {
        let bits = bits_for_digits(d);
        (ratio_at(d), sinh_product(half, bits))
    });
    let expo = guarded_compare(digits, |d| {
        let bits = bits_for_digits(d);
        let s: Rational = half.iter().fold(Rational::new(), |a, b| a + b);
        (
            sinh_product(half, bits),
            Real::from_rational(&s, bits + 16).exp().with_bits(bits),
        )
    });
    let r = upper.left.to_f64();
    let p = upper.right.to_f64();
    let ls: Vec<String> = half.iter().map(|l| l.to_string()).collect();
    let params = format!("g={g} n={n} L={}", ls.join(","));
    let rel_margin = (&(&upper.right - &upper.left) / &upper.right).to_f64();
    let points = vec![
        BoundPoint {
            params: params.clone(),
            slack: rel_margin,
            normalized: r,
        },
        BoundPoint {
            params: format!("{params} lower"),
            slack: 1.0 - r / p,
            normalized: 1.0 - r / p,
        },
    ];
    let mut rep = BoundReport::new("sinh ratio", params, points, started);
    rep.pass = upper.order == Ordering::Less && expo.order == Ordering::Less;
    rep.constant = Some(1.0 - r / p);
    rep.argmax = Some(1);
    Ok(rep)
}

/// V_{g-k,2k}/V_g; k = 0 gives exactly 1.
pub fn volume_ratio(g: u32, k: u32, cache: &VolumeCache) -> Result<Real> {
    if k == 0 {
        if g < 2 {
            return domain("closed volume needs g >= 2");
        }
        return Ok(Real::one(bits_for_digits(DIGITS)));
    }
    if g < k + 2 {
        return domain(format!("need g - k >= 2, got g={g}, k={k}"));
    }
    let a = cache.volume_value(g - k, 2 * k)?;
    let b = cache.closed_volume(g)?;
    Ok(ratio(&a, &b))
}

/// (2g-3+n)! (4π²)^{2g-3+n} at the numeric working precision.
fn factorial_scale(g: u32, n: u32) -> Real {
    let e = (2 * g as i64 - 3 + n as i64) as u32;
    let bits = bits_for_digits(DIGITS);
    let pi = Real::pi(bits + 32);
    let four_pi2 = &(&pi * &pi) * &Real::from_int(4, bits + 32);
    &Real::from_int(Integer::factorial(e), bits) * &four_pi2.pow_u(e)
}

/// Smallest C₀ with V_{g,n} ≤ C₀/max(1,√g) (2g-3+n)! (4π²)^{2g-3+n} on
/// every stable (g,n) with g ≤ g_max, n ≤ n_max (closed surfaces included).
pub fn vgn_factorial_bound(g_max: u32, n_max: u32, cache: &VolumeCache) -> Result<BoundReport> {
    let started = Instant::now();
    let grid: Vec<(u32, u32)> = (0..=g_max)
        .flat_map(|g| (0..=n_max).map(move |n| (g, n)))
        .filter(|&(g, n)| is_stable(g, n) && 2 * g as i64 - 3 + n as i64 >= 0)
        .collect();
    if grid.is_empty() {
        return domain("empty grid");
    }
    let open: Vec<(u32, u32)> = grid.iter().copied().filter(|p| p.1 > 0).collect();
    cache.ensure_pairs(&open)?;
    let points = grid
        .par_iter()
        .map(|&(g, n)| {
            let v = num(&cache.volume_any(g, n)?);
            let c = (&v / &factorial_scale(g, n)).to_f64() * (g as f64).sqrt().max(1.0);
            Ok(BoundPoint {
                params: format!("g={g} n={n}"),
                slack: 0.0,
                normalized: c,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = BoundReport::new(
        "factorial volume bound",
        format!("g<={g_max}, n<={n_max}"),
        points,
        started,
    );
    r.fit_max();
    let c0 = r.constant.unwrap();
    for p in &mut r.points {
        p.slack = c0 - p.normalized;
    }
    r.runtime_s = started.elapsed().as_secs_f64();
    Ok(r)
}

/// ∏V_{g_i,n_i}/V_g against (C₁/g)^{q+q'-2} and, for two parts with
/// n₁ = n₂ = k, against C₁ b^b/g^{b+1} with b = min(2g_i+k-3). Without a
/// supplied C₁ the smallest feasible one is fitted for each claim.
pub fn product_bound_check(
    g: u32,
    parts: &[(u32, u32)],
    k: u32,
    c1: Option<f64>,
    cache: &VolumeCache,
) -> Result<BoundReport> {
    let started = Instant::now();
    let q = parts.len() as u32;
    if q < 2 || g < 2 {
        return domain("constraint (2): need q >= 2 and g >= 2");
    }
    if 4 * k > g {
        return domain("constraint (2): need k <= g/4");
    }
    if parts.iter().map(|p| p.1).sum::<u32>() != 2 * k {
        return domain("constraint (3): boundary counts must sum to 2k");
    }
    if parts.iter().map(|p| p.0 as i64).sum::<i64>() != g as i64 + q as i64 - k as i64 - 1 {
        return domain("constraint (4): genera must sum to g+q-k-1");
    }
    if parts
        .iter()
        .any(|&(gi, ni)| 2 * gi as i64 - 3 + (ni as i64) < 0 || ni == 0)
    {
        return domain("constraint (5): need 2g_i-3+n_i >= 0 and n_i >= 1");
    }
    let qp = parts.iter().filter(|&&p| p != (0, 3) && p != (1, 1)).count() as u32;
    let mut prod = GradedRational::one();
    for &(gi, ni) in parts {
        prod = &prod * &cache.volume_value(gi, ni)?;
    }
    let r = ratio(&prod, &cache.closed_volume(g)?).to_f64();
    let gf = g as f64;
    let e = (q + qp - 2) as f64;
    let fit1 = if e > 0.0 { gf * r.powf(1.0 / e) } else { f64::NAN };
    let ps: Vec<String> = parts.iter().map(|(a, b)| format!("({a},{b})")).collect();
    let params = format!("g={g} k={k} parts={}", ps.join(""));
    let mut points = vec![BoundPoint {
        params: format!("{params} product"),
        slack: match c1 {
            Some(c) => (c / gf).powf(e) - r,
            None => {
                if e > 0.0 {
                    0.0
                } else {
                    1.0 - r
                }
            }
        },
        normalized: fit1,
    }];
    if q == 2 && parts[0].1 == k && parts[1].1 == k {
        let b = parts
            .iter()
            .map(|&(gi, _)| 2 * gi as i64 + k as i64 - 3)
            .min()
            .unwrap()
            .max(0) as i32;
        let bb = if b == 0 { 1.0 } else { (b as f64).powi(b) };
        let fit2 = r * gf.powi(b + 1) / bb;
        points.push(BoundPoint {
            params: format!("{params} two-part b={b}"),
            slack: c1.map_or(0.0, |c| c * bb / gf.powi(b + 1) - r),
            normalized: fit2,
        });
    }
    let mut rep = BoundReport::new("product bound", params, points, started);
    rep.pass = rep.points.iter().all(|p| p.slack >= 0.0);
    rep.fit_max();
    Ok(rep)
}

fn sep_terms(g: u32, filter: SepFilter, cache: &VolumeCache) -> Result<Vec<(u32, Real)>> {
    let configs = separating_configs(g, filter);
    let pairs: Vec<(u32, u32)> = configs.iter().flat_map(|&(a, b, k)| [(a, k), (b, k)]).collect();
    cache.ensure_pairs(&pairs)?;
    let vg = num(&cache.closed_volume(g)?);
    configs
        .iter()
        .map(|&(g1, g2, k)| {
            let p = &cache.volume_value(g1, k)? * &cache.volume_value(g2, k)?;
            Ok((k, &num(&p) / &vg))
        })
        .collect()
}

/// Σ V_{g₁,k}V_{g₂,k}/V_g over separating types with both 2g_i+k-3 ≥ b.
pub fn easier_sum(g: u32, b: u32, cache: &VolumeCache) -> Result<Real> {
    if g < 4 {
        return domain("need g >= 4");
    }
    let mut s = Real::zero(bits_for_digits(DIGITS));
    for (_, t) in sep_terms(g, SepFilter::Excess(b), cache)? {
        s = &s + &t;
    }
    Ok(s)
}

/// e^L Σ (V_{g₁,k}V_{g₂,k}/V_g) L^{2k}/(2k)! over separating types with
/// both 2g_i+k-2 ≥ a, optionally only k = k_opt.
pub fn sep_multicurve_bound(g: u32, l: f64, a: u32, k_opt: Option<u32>, cache: &VolumeCache) -> Result<Real> {
    if g < 4 {
        return domain("need g >= 4");
    }
    if !(l > 0.0) || !l.is_finite() {
        return domain("L must be positive and finite");
    }
    let filter = match k_opt {
        Some(k) => SepFilter::AreaAndK(a, k),
        None => SepFilter::Area(a),
    };
    let bits = bits_for_digits(DIGITS);
    let lr = Real::from_f64(l, bits);
    let mut s = Real::zero(bits);
    for (k, t) in sep_terms(g, filter, cache)? {
        let w = &lr.pow_u(2 * k) / &Real::from_int(Integer::factorial(2 * k), bits);
        s = &s + &(&t * &w);
    }
    Ok(&s * &lr.exp())
}

/// ∫ over the simplex Σℓ_i ≤ L of ∏ ℓ_i^{a_i}: ∏ a_i! L^{Σa_i+k}/(Σa_i+k)!.
pub fn simplex_moment(a: &[u32], l: &Rational) -> Rational {
    let s: u32 = a.iter().sum::<u32>() + a.len() as u32;
    let mut num = Integer::from(1);
    for &ai in a {
        num *= Integer::from(Integer::factorial(ai));
    }
    let lp = Rational::from(l.pow(s as i32));
    lp * Rational::from((num, Integer::from(Integer::factorial(s))))
}

/// Summary of a finite-g trend: the normalized values are bounded by
/// `cap` and do not increase over the upper half of the grid.
#[derive(Clone, Debug, Serialize)]
pub struct Trend {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub max: f64,
    pub bounded: bool,
    pub tail_nonincreasing: bool,
}

pub fn trend(xs: Vec<f64>, values: Vec<f64>, cap: f64) -> Trend {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let half = values.len() / 2;
    let tail_nonincreasing = values[half..].windows(2).all(|w| w[1] <= w[0]);
    Trend {
        xs,
        bounded: max <= cap,
        max,
        values,
        tail_nonincreasing,
    }
}
