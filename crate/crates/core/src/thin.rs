//! The thin part of moduli space: the integrals I_ε and I_F, exact
//! non-separating terms, inclusion–exclusion brackets for the volume of the
//! ε-thin part, and the assembled bound on averages of geodesic sums.

use crate::bounds::sep_multicurve_bound;
use crate::error::{domain, Error, Result};
use crate::geodesics::{graph_bound, TangleFreeParams};
use crate::graded::{numeric_eval, GradedRational};
use crate::quad::{adaptive_simpson, gauss_legendre};
use crate::strata::enumerate_strata;
use crate::volumes::{dim, odd_factorial_product, VolumeCache};
use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Weight function F in the length integrals.
#[derive(Clone)]
pub enum Integrand {
    /// F = 1 on [0, upper].
    Indicator { upper: f64 },
    /// Piecewise linear through (xs, ys), zero beyond the last node.
    Table { xs: Vec<f64>, ys: Vec<f64> },
    /// Arbitrary F vanishing beyond `support`, with |F| ≤ `sup_norm`.
    Function {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        support: f64,
        sup_norm: f64,
    },
}

#[derive(Clone)]
pub struct IntegralSpec {
    pub integrand: Integrand,
    /// Absolute quadrature tolerance.
    pub tolerance: f64,
}

impl fmt::Debug for IntegralSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.integrand {
            Integrand::Indicator { upper } => write!(f, "indicator[0,{upper}]"),
            Integrand::Table { xs, .. } => write!(f, "table({} nodes)", xs.len()),
            Integrand::Function { support, .. } => write!(f, "function on [0,{support}]"),
        }
    }
}

impl IntegralSpec {
    pub fn indicator(upper: f64) -> Result<Self> {
        if !(upper >= 0.0) || !upper.is_finite() {
            return domain("indicator support must be finite and non-negative");
        }
        Ok(IntegralSpec {
            integrand: Integrand::Indicator { upper },
            tolerance: 1e-12,
        })
    }

    pub fn zero() -> Self {
        IntegralSpec {
            integrand: Integrand::Indicator { upper: 0.0 },
            tolerance: 1e-12,
        }
    }

    pub fn table(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return domain("table needs at least two (x, y) nodes");
        }
        if xs[0] < 0.0 || xs.windows(2).any(|w| !(w[1] > w[0])) || !xs[xs.len() - 1].is_finite() {
            return domain("table nodes must be finite, non-negative and increasing");
        }
        if ys.iter().any(|y| !y.is_finite()) {
            return domain("table values must be finite");
        }
        Ok(IntegralSpec {
            integrand: Integrand::Table { xs, ys },
            tolerance: 1e-12,
        })
    }

    pub fn function(f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, support: f64, sup_norm: f64) -> Result<Self> {
        if !(support >= 0.0) || !support.is_finite() {
            return domain("support must be finite");
        }
        Ok(IntegralSpec {
            integrand: Integrand::Function { f, support, sup_norm },
            tolerance: 1e-12,
        })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.integrand {
            Integrand::Indicator { upper } => (x >= 0.0 && x <= *upper) as u8 as f64,
            Integrand::Table { xs, ys } => {
                if x < xs[0] || x > xs[xs.len() - 1] {
                    return 0.0;
                }
                let i = xs.partition_point(|&t| t <= x).clamp(1, xs.len() - 1);
                let (x0, x1) = (xs[i - 1], xs[i]);
                ys[i - 1] + (ys[i] - ys[i - 1]) * (x - x0) / (x1 - x0)
            }
            Integrand::Function { f, support, .. } => {
                if x < 0.0 || x > *support {
                    0.0
                } else {
                    f(x)
                }
            }
        }
    }

    pub fn support(&self) -> f64 {
        match &self.integrand {
            Integrand::Indicator { upper } => *upper,
            Integrand::Table { xs, .. } => xs[xs.len() - 1],
            Integrand::Function { support, .. } => *support,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match &self.integrand {
            Integrand::Indicator { upper } => (*upper > 0.0) as u8 as f64,
            Integrand::Table { ys, .. } => ys.iter().fold(0.0f64, |m, y| m.max(y.abs())),
            Integrand::Function { sup_norm, .. } => *sup_norm,
        }
    }

    /// Points where F may fail to be smooth.
    fn segments(&self) -> Vec<f64> {
        match &self.integrand {
            Integrand::Indicator { upper } => vec![0.0, *upper],
            Integrand::Table { xs, .. } => {
                let mut v = vec![0.0];
                v.extend(xs.iter().copied().filter(|&x| x > 0.0));
                v
            }
            Integrand::Function { support, .. } => vec![0.0, *support],
        }
    }

    /// ∫ F(ℓ) w(ℓ) dℓ by adaptive Simpson on each smooth piece.
    pub fn integrate(&self, w: impl Fn(f64) -> f64) -> f64 {
        let seg = self.segments();
        let n = (seg.len() - 1).max(1) as f64;
        seg.windows(2)
            .map(|p| {
                // evaluate F inside the piece so jumps at the ends are not sampled
                let (a, b) = (p[0], p[1]);
                let f = |x: f64| self.eval(x.clamp(a, b)) * w(x);
                adaptive_simpson(&f, a, b, self.tolerance / n)
            })
            .sum()
    }

    /// The same integral on a fixed composite Gauss–Legendre grid.
    pub fn integrate_fixed(&self, w: impl Fn(f64) -> f64, panels: usize) -> f64 {
        let seg = self.segments();
        seg.windows(2)
            .map(|p| {
                let (a, b) = (p[0], p[1]);
                let f = |x: f64| self.eval(x) * w(x);
                gauss_legendre(&f, a, b, panels, 10)
            })
            .sum()
    }

    /// ∫ F(ℓ) ℓ^{2s+1} dℓ / 4^s.
    fn moment(&self, s: u32) -> f64 {
        let scale = 4f64.powi(s as i32);
        match &self.integrand {
            Integrand::Indicator { upper } => upper.powi(2 * s as i32 + 2) / ((2 * s + 2) as f64 * scale),
            _ => {
                let sup = self.support().max(1.0);
                let rel = self.tolerance * sup.powi(2 * s as i32 + 2);
                let spec = self.clone().with_tolerance(rel.max(f64::MIN_POSITIVE));
                spec.integrate(|x| x.powi(2 * s as i32 + 1)) / scale
            }
        }
    }
}

/// (sinh(x/2)/(x/2))².
pub fn sinhc_sq(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        1.0 + x2 / 12.0 + x2 * x2 / 360.0
    } else {
        let y = 0.5 * x;
        let r = y.sinh() / y;
        r * r
    }
}

/// I_ε = ½ ∫_0^ε δ (sinh(δ/2)/(δ/2))² dδ.
pub fn i_eps(eps: f64, tolerance: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return domain(format!("eps must lie in (0, 1], got {eps}"));
    }
    let f = |d: f64| 0.5 * d * sinhc_sq(d);
    Ok(adaptive_simpson(&f, 0.0, eps, tolerance))
}

/// I_F = ∫ F(ℓ) ℓ (sinh(ℓ/2)/(ℓ/2))² dℓ.
pub fn i_f(spec: &IntegralSpec) -> Result<f64> {
    if !spec.support().is_finite() {
        return domain("F must have finite support");
    }
    Ok(spec.integrate(|l| l * sinhc_sq(l)))
}

/// Σ_{k=1}^{n} (-1)^{k+1} C(r,k) = 1 - (-1)^n C(r-1,n), exactly.
pub fn inclusion_exclusion_identity(r: u32, n: u32) -> bool {
    let mut lhs = Integer::new();
    for k in 1..=n {
        let c = Integer::from(Integer::binomial_u(r, k));
        if k % 2 == 1 {
            lhs += c;
        } else {
            lhs -= c;
        }
    }
    let c = if r == 0 {
        Integer::new()
    } else {
        Integer::from(Integer::binomial_u(r - 1, n))
    };
    let rhs = if n.is_multiple_of(2) {
        Integer::from(1) - c
    } else {
        Integer::from(1) + c
    };
    lhs == rhs
}

/// Perfect matchings of positions 0..m.
fn matchings(m: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(free: &mut Vec<usize>, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if free.is_empty() {
            out.push(cur.clone());
            return;
        }
        let a = free.remove(0);
        for i in 0..free.len() {
            let b = free.remove(i);
            cur.push((a, b));
            rec(free, cur, out);
            cur.pop();
            free.insert(i, b);
        }
        free.insert(0, a);
    }
    let mut out = Vec::new();
    rec(&mut (0..m).collect(), &mut Vec::new(), &mut out);
    out
}

/// [τ_d] / (∏(2d_i+1)! ∏ m_v!), with m_v the multiplicities in d.
fn key_weight(d: &[u32], r: &Rational) -> Rational {
    let mut den = odd_factorial_product(d);
    let mut i = 0;
    while i < d.len() {
        let j = (i..d.len()).find(|&j| d[j] != d[i]).unwrap_or(d.len());
        den *= Integer::from(Integer::factorial((j - i) as u32));
        i = j;
    }
    Rational::from(r / den)
}

/// G_k as a polynomial in ε: (power of ε, coefficient) pairs.
///
/// G_k = (1/(2^k k!)) ∫_{[0,ε]^k} ∏δ_i V_{g-k,2k}(δ₁,δ₁,…,δ_k,δ_k) dδ
/// equals Σ_d [τ_d]/(∏(2d_i+1)! ∏m_v!) Σ_M ∏_{pairs} ε^{2s+2}/((2s+2)4^s),
/// M running over perfect matchings of the 2k slots and s over pair sums.
pub fn g_k_polynomial(g: u32, k: u32, cache: &VolumeCache) -> Result<Vec<(u32, GradedRational)>> {
    if k == 0 || g < 2 {
        return domain("need k >= 1 and g >= 2");
    }
    if k > g {
        return Ok(vec![]);
    }
    let (gg, n) = (g - k, 2 * k);
    let m = dim(gg, n);
    let ms = matchings(n as usize);
    let w: Vec<Rational> = (0..=2 * m as u32)
        .map(|s| Rational::from((1, Integer::from(2 * s + 2) << (2 * s))))
        .collect();
    let mut by_j: BTreeMap<u32, Rational> = BTreeMap::new();
    for (d, r) in cache.pair_entries(gg, n)? {
        let mut sum = Rational::new();
        for mt in &ms {
            let mut p = Rational::from(1);
            for &(a, b) in mt {
                p *= &w[(d[a] + d[b]) as usize];
            }
            sum += p;
        }
        let j: u32 = d.iter().sum();
        *by_j.entry(j).or_default() += key_weight(&d, &r) * sum;
    }
    Ok(by_j
        .into_iter()
        .filter(|(_, c)| c.cmp0() != std::cmp::Ordering::Equal)
        .map(|(j, c)| (2 * j + 2 * k, GradedRational::monomial(m - j as i64, c)))
        .collect())
}

/// Exact G_k at rational ε; zero when k > g.
pub fn g_k_exact(g: u32, k: u32, eps: &Rational, cache: &VolumeCache) -> Result<GradedRational> {
    if eps.cmp0() != std::cmp::Ordering::Greater {
        return domain("eps must be positive");
    }
    let mut out = GradedRational::zero();
    for (p, c) in g_k_polynomial(g, k, cache)? {
        out += &c.scale(&Rational::from(eps.pow(p)));
    }
    Ok(out)
}

fn exact_f64(x: f64) -> Result<Rational> {
    Rational::from_f64(x).ok_or_else(|| Error::Domain("non-finite value".into()))
}

fn g_k_f64(g: u32, k: u32, eps: f64, cache: &VolumeCache) -> Result<f64> {
    Ok(numeric_eval(&g_k_exact(g, k, &exact_f64(eps)?, cache)?, 30).to_f64())
}

/// G'_k = (1/(2^k k!)) ∫_{[0,ε]^k} ∫ F(ℓ) ℓ ∏δ_i V_{g-k-1,2k+2}(δ,δ,…,ℓ,ℓ),
/// normalized like ∫ F(ℓ) ℓ V_{g-1,2}(ℓ,ℓ) dℓ (the k = 0 case).
fn g_prime(g: u32, k: u32, eps: f64, spec: &IntegralSpec, cache: &VolumeCache) -> Result<f64> {
    if k + 1 > g {
        return Ok(0.0);
    }
    let (gg, n) = (g - k - 1, 2 * k + 2);
    let m = dim(gg, n);
    let smax = 2 * m as u32;
    let hf: Vec<f64> = (0..=smax).map(|s| spec.moment(s)).collect();
    let he: Vec<f64> = (0..=smax)
        .map(|s| eps.powi(2 * s as i32 + 2) / ((2 * s + 2) as f64 * 4f64.powi(s as i32)))
        .collect();
    let ms = matchings(n as usize);
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let mut total = 0.0;
    for (d, r) in cache.pair_entries(gg, n)? {
        let mut sum = 0.0;
        for mt in &ms {
            for p in 0..mt.len() {
                let mut t = 1.0;
                for (q, &(a, b)) in mt.iter().enumerate() {
                    let s = (d[a] + d[b]) as usize;
                    t *= if q == p { hf[s] } else { he[s] };
                }
                sum += t;
            }
        }
        let j: u32 = d.iter().sum();
        total += key_weight(&d, &r).to_f64() * pi2.powi((m - j as i64) as i32) * sum;
    }
    Ok(2.0 * total)
}

/// Σ over strata with k nodes and at least two components of ∏V_{g_i,n_i}.
fn strata_volume_sum(g: u32, k: u32, cache: &VolumeCache) -> Result<f64> {
    let strata: Vec<_> = (2..=k as usize + 1)
        .flat_map(|q| enumerate_strata(g, k as usize, q))
        .collect();
    let mut pairs: Vec<(u32, u32)> = strata.iter().flat_map(|s| s.vertices()).collect();
    pairs.sort_unstable();
    pairs.dedup();
    cache.ensure_pairs(&pairs)?;
    let vols: BTreeMap<(u32, u32), GradedRational> = pairs
        .iter()
        .map(|&p| Ok((p, cache.volume_value(p.0, p.1)?)))
        .collect::<Result<_>>()?;
    let mut sum = GradedRational::zero();
    for s in &strata {
        let mut p = GradedRational::one();
        for v in s.vertices() {
            p = &p * &vols[&v];
        }
        sum += &p;
    }
    Ok(numeric_eval(&sum, 30).to_f64())
}

/// (2I_ε)^k Σ_{q ≥ 2 strata} ∏V_{g_i,n_i}: each pinched curve contributes
/// ∫_0^ε δ (sinh(δ/2)/(δ/2))² dδ = 2I_ε through the sinh bound on both
/// of its sides.
pub fn b_k_majorant(g: u32, k: u32, eps: f64, cache: &VolumeCache) -> Result<f64> {
    if g < 4 {
        return domain("need g >= 4");
    }
    if k == 0 {
        return Ok(0.0);
    }
    let ie = i_eps(eps, 1e-15)?;
    Ok((2.0 * ie).powi(k as i32) * strata_volume_sum(g, k, cache)?)
}

/// Default truncation depth min(4, 3g-3).
pub fn default_depth(g: u32) -> u32 {
    4.min(3 * g - 3)
}

#[derive(Clone, Debug, Serialize)]
pub struct ThinBracket {
    pub g: u32,
    pub eps: f64,
    pub n_max: u32,
    pub i_eps: f64,
    pub v_g: f64,
    /// Lower and upper estimates of Vol(M_g^{<ε}).
    pub lower: f64,
    pub upper: f64,
    /// (1 - exp(-I_ε)) V_g.
    pub main_term: f64,
    /// G_1 … G_{n_max}.
    pub g_terms: Vec<f64>,
    /// Majorants of B_1 … B_{n_max}.
    pub b_terms: Vec<f64>,
    /// Truncation at each depth m = 1 … n_max: upper for odd m, lower for even m.
    pub by_depth: Vec<f64>,
    pub contains_main: bool,
}

impl ThinBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Truncated inclusion–exclusion for Vol(M_g^{<ε}). Odd depths give upper
/// estimates (B_k added through its majorant, even B_k dropped), even
/// depths lower ones (even B_k subtracted through its majorant). The
/// reported bracket intersects every truncation up to `n_max`.
pub fn thin_bracket(g: u32, eps: f64, n_max: u32, cache: &VolumeCache) -> Result<ThinBracket> {
    if g < 4 {
        return domain("need g >= 4");
    }
    if n_max < 2 {
        return domain("n_max must be at least 2");
    }
    let n_max = n_max.min(3 * g - 3);
    let ie = i_eps(eps, 1e-15)?;
    let v_g = numeric_eval(&cache.closed_volume(g)?, 30).to_f64();
    let mut g_terms = Vec::new();
    let mut b_terms = Vec::new();
    for k in 1..=n_max {
        g_terms.push(g_k_f64(g, k, eps, cache)?);
        b_terms.push(b_k_majorant(g, k, eps, cache)?);
    }
    let mut by_depth = Vec::new();
    let mut alt = 0.0;
    let (mut b_odd, mut b_even) = (0.0, 0.0);
    for k in 1..=n_max as usize {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        alt += sign * g_terms[k - 1];
        if k % 2 == 1 {
            b_odd += b_terms[k - 1];
            by_depth.push(alt + b_odd);
        } else {
            b_even += b_terms[k - 1];
            by_depth.push(alt - b_even);
        }
    }
    let upper = by_depth.iter().step_by(2).cloned().fold(v_g, f64::min);
    let lower = by_depth.iter().skip(1).step_by(2).cloned().fold(0.0, f64::max);
    let main_term = -(-ie).exp_m1() * v_g;
    Ok(ThinBracket {
        g,
        eps,
        n_max,
        i_eps: ie,
        v_g,
        lower,
        upper,
        main_term,
        g_terms,
        b_terms,
        by_depth,
        contains_main: lower <= main_term && main_term <= upper,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GPrimeRow {
    pub k: u32,
    pub value: f64,
    /// value / (V_g I_ε^k I_F / k!)
    pub over_vg: f64,
    /// value / (V_{g-k-1,2k+2} I_ε^k I_F / k!)
    pub over_vgk: f64,
    pub b_majorant: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThickAverage {
    pub g: u32,
    pub eps: f64,
    pub i_f: f64,
    /// ∫ F(ℓ) ℓ V_{g-1,2}(ℓ,ℓ) dℓ / V_g
    pub mean: f64,
    /// Lower estimate of the thin-part integral divided by V_g.
    pub thin_lower: f64,
    /// Upper estimate of Vol(M_g^{<ε})/V_g.
    pub delta_upper: f64,
    pub depth: u32,
    pub rows: Vec<GPrimeRow>,
    /// Upper bound for the average of F_sns over the thick part.
    pub bound: f64,
    /// bound / I_F, or 0 when F = 0
    pub ratio: f64,
}

/// ∫ F(ℓ) ℓ V_{g-1,2}(ℓ,ℓ) dℓ / V_g.
pub fn mean_sns(g: u32, spec: &IntegralSpec, cache: &VolumeCache) -> Result<f64> {
    let v_g = numeric_eval(&cache.closed_volume(g)?, 30).to_f64();
    Ok(g_prime(g, 0, 1.0, spec, cache)? / v_g)
}

/// Upper bound for the average of F_sns over M_g^{>ε}:
/// (mean - thin_lower)/(1 - δ_upper), where thin_lower is the even
/// truncation Σ_{odd k} G'_k - Σ_{even k} (G'_k + B'_k majorant), floored at 0.
pub fn thick_average_bound(g: u32, eps: f64, spec: &IntegralSpec, cache: &VolumeCache) -> Result<ThickAverage> {
    if g < 4 {
        return domain("need g >= 4");
    }
    let depth = default_depth(g) / 2 * 2;
    let ifv = i_f(spec)?;
    let ie = i_eps(eps, 1e-15)?;
    let v_g = numeric_eval(&cache.closed_volume(g)?, 30).to_f64();
    let mean = g_prime(g, 0, eps, spec, cache)? / v_g;
    let bracket = thin_bracket(g, eps, default_depth(g), cache)?;
    let delta_upper = bracket.upper / v_g;
    let mut rows = Vec::new();
    let mut lower = 0.0;
    let mut fact = 1.0;
    for k in 1..=depth {
        fact *= k as f64;
        let value = g_prime(g, k, eps, spec, cache)?;
        // B'_k: k+1 nodes, one of them the distinguished curve; doubled to
        // match the normalization of the mean
        let b = if k % 2 == 0 {
            2.0 * (k + 1) as f64 * ifv * (2.0 * ie).powi(k as i32) * strata_volume_sum(g, k + 1, cache)?
        } else {
            0.0
        };
        let base = ie.powi(k as i32) * ifv / fact;
        let vgk = if k < g {
            numeric_eval(&cache.volume_value(g - k - 1, 2 * k + 2)?, 30).to_f64()
        } else {
            f64::NAN
        };
        if k % 2 == 1 {
            lower += value;
        } else {
            lower -= value + b;
        }
        rows.push(GPrimeRow {
            k,
            value,
            over_vg: value / (v_g * base),
            over_vgk: value / (vgk * base),
            b_majorant: b,
        });
    }
    let thin_lower = (lower / v_g).max(0.0);
    let bound = ((mean - thin_lower) / (1.0 - delta_upper)).max(0.0);
    Ok(ThickAverage {
        g,
        eps,
        i_f: ifv,
        mean,
        thin_lower,
        delta_upper,
        depth,
        rows,
        bound,
        ratio: if ifv > 0.0 { bound / ifv } else { 0.0 },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SubsurfaceRow {
    pub g1: u32,
    pub k: u32,
    /// Majorant for the average number of such subsurfaces with boundary
    /// at most twice the support.
    pub count: f64,
    pub graph_bound: f64,
    /// Degree of the subsurface volume polynomial integrated against the
    /// boundary simplex: 6g₁-6+4k.
    pub degree: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometricReport {
    pub g: u32,
    pub d: f64,
    pub kappa: f64,
    pub eps: f64,
    pub support: f64,
    pub i_f: f64,
    pub sup_norm: f64,
    /// Majorant for Vol(M_g \ N_g)/V_g: short separating multicurves plus
    /// long ones cutting off two large pieces.
    pub nu_short: f64,
    pub nu_long: f64,
    pub delta_upper: f64,
    pub thick: ThickAverage,
    pub subsurfaces: Vec<SubsurfaceRow>,
    pub non_simple: f64,
    pub separating: f64,
    /// Certified: average of F_all over N_g^{>ε} ≤ (1 + Δ) I_F.
    pub average_bound: f64,
    pub delta: f64,
    /// L₀ > 1 and ε < 1/2 for the geodesic count bound.
    pub graph_hypotheses: bool,
    /// The genus is large enough for the subsurface containment argument.
    pub subsurface_hypothesis: bool,
}

/// Assemble every ingredient of the bound on the average of F over all
/// primitive closed geodesics, at finite g.
pub fn geometric_main_report(
    g: u32,
    d: f64,
    kappa: f64,
    eps: f64,
    spec: &IntegralSpec,
    cache: &VolumeCache,
) -> Result<GeometricReport> {
    if !(d > 0.0) || !(kappa > 0.0 && kappa < 1.0) {
        return domain("need D > 0 and 0 < kappa < 1");
    }
    if g < 4 {
        return domain("need g >= 4");
    }
    let lg = (g as f64).ln();
    let s = spec.support();
    if s > d * lg {
        return domain(format!("F must vanish beyond D log g = {}", d * lg));
    }
    let a_long = (4.0 * d + 1.0).ceil() as u32;
    let nu_short = sep_multicurve_bound(g, kappa / 2.0 * lg, 1, None, cache)?.to_f64();
    let nu_long = sep_multicurve_bound(g, 2.0 * d * lg, a_long, None, cache)?.to_f64();
    let thick = thick_average_bound(g, eps, spec, cache)?;
    let delta_upper = thick.delta_upper;
    let l0 = kappa / 2.0 * lg;
    let mut subsurfaces = Vec::new();
    let mut graph_hypotheses = true;
    let mut non_simple = 0.0;
    if s > 0.0 {
        for g1 in 0..=g {
            for k in 1..=g + 1 {
                let chi = 2 * g1 as i64 - 2 + k as i64;
                let g2 = g as i64 + 1 - g1 as i64 - k as i64;
                if chi < 1 || chi > a_long as i64 || g2 < 0 || 2 * g2 - 2 + k as i64 <= 0 {
                    continue;
                }
                let count = sep_multicurve_bound(g, 2.0 * s, chi as u32, Some(k), cache)?.to_f64();
                let p = TangleFreeParams::unchecked(2.0 * std::f64::consts::PI * chi as f64, l0, eps, 1.0)?;
                let gb = graph_bound(&p, s)?;
                graph_hypotheses &= gb.hypotheses_hold;
                non_simple += count * gb.value;
                subsurfaces.push(SubsurfaceRow {
                    g1,
                    k,
                    count,
                    graph_bound: gb.value,
                    degree: 6 * g1 + 4 * k - 6,
                });
            }
        }
    }
    let sup = spec.sup_norm();
    let non_simple = sup * non_simple;
    let separating = if s > 0.0 {
        sup * sep_multicurve_bound(g, s, 1, Some(1), cache)?.to_f64()
    } else {
        0.0
    };
    let nu = nu_short + nu_long;
    let keep = 1.0 - nu - delta_upper;
    let average_bound = (1.0 + nu / keep) * thick.bound + (non_simple + separating) / keep;
    let i_fv = thick.i_f;
    let area_big =
        (2.0 * std::f64::consts::PI * (2.0 * g as f64 - 2.0) - 4.0 * d * lg) / (2.0 * d * lg / std::f64::consts::PI);
    Ok(GeometricReport {
        g,
        d,
        kappa,
        eps,
        support: s,
        i_f: i_fv,
        sup_norm: sup,
        nu_short,
        nu_long,
        delta_upper,
        thick,
        subsurfaces,
        non_simple,
        separating,
        average_bound,
        delta: average_bound / i_fv - 1.0,
        graph_hypotheses,
        subsurface_hypothesis: area_big > 2.0 * std::f64::consts::PI * (4.0 * d + 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_counts() {
        assert_eq!(matchings(2).len(), 1);
        assert_eq!(matchings(4).len(), 3);
        assert_eq!(matchings(8).len(), 105);
    }

    #[test]
    fn identity_small_cases() {
        assert!(inclusion_exclusion_identity(4, 2));
        assert!(inclusion_exclusion_identity(3, 3));
        assert!(inclusion_exclusion_identity(1, 5));
    }

    #[test]
    fn indicator_integrals() {
        let z = IntegralSpec::zero();
        assert_eq!(i_f(&z).unwrap(), 0.0);
        let one = IntegralSpec::indicator(1.0).unwrap();
        let a = i_f(&one).unwrap();
        let b = one.integrate_fixed(|l| l * sinhc_sq(l), 8);
        assert!((a - b).abs() < 1e-10);
        assert!(i_eps(0.0, 1e-12).is_err());
    }
}
