//! Bump test functions, their Fourier transforms, the local Weyl law
//! constants and the probability bound for small eigenvalues obtained by
//! balancing the two sides of the averaged trace formula.

use crate::error::{domain, Error, Result};
use crate::quad::{adaptive_simpson, gauss_legendre, gauss_legendre_nodes};
use crate::thin::{i_f, IntegralSpec};
use rug::Rational;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

/// Highest derivative order tracked for integration-by-parts tail bounds.
const MAX_DERIV: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ProfileKind {
    /// g₀(x) = exp(-1/(1-4x²)) on (-1/2, 1/2).
    Bump,
    /// g₀ * g₀, supported on [-1, 1].
    ConvolutionSquare,
    /// (f(x+L) + f(x-L))/2 for the convolution square f.
    Translate { l: f64 },
}

/// An even test function sampled on a uniform grid.
#[derive(Clone, Debug, Serialize)]
pub struct TestFunctionProfile {
    pub kind: ProfileKind,
    /// f vanishes for |x| ≥ mu0.
    pub mu0: f64,
    /// Intervals per unit length is 1/h; the base grid has N intervals on [-1,1].
    pub n: usize,
    pub h: f64,
    /// Grid nodes are x0 + i h.
    pub x0: f64,
    pub values: Vec<f64>,
    pub norm1: f64,
    pub sup: f64,
    /// Upper estimates of ‖f^{(j)}‖₁ for j = 0..=MAX_DERIV.
    pub deriv_norms: Vec<f64>,
    #[serde(skip)]
    base: Option<Arc<TestFunctionProfile>>,
}

/// Taylor coefficients of g₀ at x up to `order`, by the usual recurrences
/// for reciprocals and exponentials of power series.
pub fn bump_taylor(x: f64, order: usize) -> Vec<f64> {
    let w0 = 1.0 - 4.0 * x * x;
    if w0 <= 0.0 {
        return vec![0.0; order + 1];
    }
    let w = [w0, -8.0 * x, -4.0];
    let mut v = vec![0.0; order + 1];
    v[0] = 1.0 / w0;
    for n in 1..=order {
        let mut s = 0.0;
        for i in 1..=n.min(2) {
            s += w[i] * v[n - i];
        }
        v[n] = -s / w0;
    }
    let u: Vec<f64> = v.iter().map(|c| -c).collect();
    let mut e = vec![0.0; order + 1];
    e[0] = u[0].exp();
    for n in 1..=order {
        let mut s = 0.0;
        for i in 1..=n {
            s += i as f64 * u[i] * e[n - i];
        }
        e[n] = s / n as f64;
    }
    e
}

pub fn bump(x: f64) -> f64 {
    let w = 1.0 - 4.0 * x * x;
    if w <= 0.0 {
        0.0
    } else {
        (-1.0 / w).exp()
    }
}

/// ∫|g₀^{(j)}| for j = 0..=MAX_DERIV on a fine trapezoid grid.
fn bump_deriv_norms() -> Vec<f64> {
    let m = 8192;
    let h = 1.0 / m as f64;
    let mut out = vec![0.0; MAX_DERIV + 1];
    for i in 1..m {
        let x = -0.5 + i as f64 * h;
        let t = bump_taylor(x, MAX_DERIV);
        let mut fact = 1.0;
        for j in 0..=MAX_DERIV {
            if j > 0 {
                fact *= j as f64;
            }
            out[j] += (t[j] * fact).abs() * h;
        }
    }
    out
}

const LAGRANGE_DEN: [f64; 8] = [-5040.0, 720.0, -240.0, 144.0, -144.0, 240.0, -720.0, 5040.0];

impl TestFunctionProfile {
    /// The bump g₀ itself, on a grid of spacing 2/N.
    pub fn bump(n: usize) -> Result<Self> {
        check_grid(n)?;
        let h = 2.0 / n as f64;
        let half = n / 2;
        let mut values = vec![0.0; half + 1];
        for i in 0..=half / 2 {
            let v = bump(-0.5 + i as f64 * h);
            values[i] = v;
            values[half - i] = v;
        }
        let norm1 = values.iter().sum::<f64>() * h;
        Ok(TestFunctionProfile {
            kind: ProfileKind::Bump,
            mu0: 0.5,
            n,
            h,
            x0: -0.5,
            sup: values.iter().cloned().fold(0.0, f64::max),
            values,
            norm1,
            deriv_norms: bump_deriv_norms(),
            base: None,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            ProfileKind::Bump => bump(x),
            ProfileKind::ConvolutionSquare => self.interpolate(x),
            ProfileKind::Translate { l } => {
                let b = self.base.as_ref().expect("translate keeps its base");
                0.5 * (b.eval(x + l) + b.eval(x - l))
            }
        }
    }

    /// 8-point Lagrange interpolation of the grid values; zero off the
    /// support and clamped at zero, since the convolution square is
    /// non-negative and the stencil can undershoot near the edges.
    fn interpolate(&self, x: f64) -> f64 {
        if x.abs() >= self.mu0 {
            return 0.0;
        }
        let s = (x - self.x0) / self.h;
        let i0 = s.floor() as i64 - 3;
        let t = s - i0 as f64;
        let at = |i: i64| {
            if i < 0 || i as usize >= self.values.len() {
                0.0
            } else {
                self.values[i as usize]
            }
        };
        if t == t.floor() {
            return at(i0 + t as i64);
        }
        let mut prod = 1.0;
        for m in 0..8 {
            prod *= t - m as f64;
        }
        let mut out = 0.0;
        for j in 0..8 {
            out += at(i0 + j as i64) * prod / ((t - j as f64) * LAGRANGE_DEN[j]);
        }
        out.max(0.0)
    }

    /// Grid nodes.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.x0 + i as f64 * self.h, v))
    }

    /// f̂(r) = ∫ f(x) e^{-irx} dx for real r (trapezoid on the grid; f is
    /// flat at the ends of its support, so the rule converges spectrally).
    pub fn fourier(&self, r: f64) -> f64 {
        self.nodes().map(|(x, v)| v * (r * x).cos()).sum::<f64>() * self.h
    }

    /// f̂(it) = ∫ f(x) cosh(tx) dx.
    pub fn fourier_imag(&self, t: f64) -> Result<f64> {
        if t.abs() > 2.0 {
            return domain("imaginary argument must satisfy |t| <= 2");
        }
        Ok(self.nodes().map(|(x, v)| v * (t * x).cosh()).sum::<f64>() * self.h)
    }

    /// |f̂(r)| ≤ min_j ‖f^{(j)}‖₁/|r|^j.
    pub fn fourier_tail_bound(&self, r: f64) -> f64 {
        let r = r.abs();
        self.deriv_norms
            .iter()
            .enumerate()
            .map(|(j, n)| n / r.powi(j as i32))
            .fold(f64::INFINITY, f64::min)
    }

    /// "x value" lines.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (x, v) in self.nodes() {
            s.push_str(&format!("{x:.17e} {v:.17e}\n"));
        }
        s
    }
}

fn check_grid(n: usize) -> Result<()> {
    if n < 128 || !n.is_multiple_of(4) {
        return domain(format!("grid size must be a multiple of 4 and at least 128, got {n}"));
    }
    Ok(())
}

/// f = g₀ * g₀ on the grid of spacing 2/N, supported on [-1, 1].
pub fn build_test_function(n: usize) -> Result<TestFunctionProfile> {
    let g = TestFunctionProfile::bump(n)?;
    let h = g.h;
    let mut values = vec![0.0; n + 1];
    // f(x_i) = h Σ_j g_j g_{i-j}, computed for x ≤ 0 and mirrored
    for i in 0..=n / 2 {
        let mut s = 0.0;
        for j in 0..g.values.len() {
            let k = i as i64 - j as i64;
            if k >= 0 && (k as usize) < g.values.len() {
                s += g.values[j] * g.values[k as usize];
            }
        }
        values[i] = s * h;
        values[n - i] = s * h;
    }
    let norm1 = values.iter().map(|v| v.abs()).sum::<f64>() * h;
    let gd = &g.deriv_norms;
    let deriv_norms = (0..=MAX_DERIV).map(|j| gd[j.div_ceil(2)] * gd[j / 2]).collect();
    Ok(TestFunctionProfile {
        kind: ProfileKind::ConvolutionSquare,
        mu0: 1.0,
        n,
        h,
        x0: -1.0,
        sup: values.iter().cloned().fold(0.0, f64::max),
        values,
        norm1,
        deriv_norms,
        base: None,
    })
}

/// f_L(x) = (f(x+L) + f(x-L))/2 sampled on the base spacing.
pub fn translate_pair(profile: &TestFunctionProfile, l: f64) -> Result<TestFunctionProfile> {
    if !(l >= 0.0) || !l.is_finite() {
        return domain("L must be finite and non-negative");
    }
    if profile.kind != ProfileKind::ConvolutionSquare {
        return domain("translate pairs are built from the convolution square");
    }
    let base = Arc::new(profile.clone());
    let h = profile.h;
    let mu0 = l + profile.mu0;
    let half = (mu0 / h).ceil() as usize;
    let x0 = -(half as f64) * h;
    let mut values = vec![0.0; 2 * half + 1];
    for i in 0..=half {
        let x = x0 + i as f64 * h;
        let v = 0.5 * (base.eval(x + l) + base.eval(x - l));
        values[i] = v;
        values[2 * half - i] = v;
    }
    let norm1 = values.iter().map(|v| v.abs()).sum::<f64>() * h;
    Ok(TestFunctionProfile {
        kind: ProfileKind::Translate { l },
        mu0,
        n: profile.n,
        h,
        x0,
        sup: values.iter().cloned().fold(0.0, f64::max),
        values,
        norm1,
        deriv_norms: profile.deriv_norms.clone(),
        base: Some(base),
    })
}

/// Largest |f̂_L(r) - f̂(r)cos(Lr)| and |f̂_L(it) - f̂(it)cosh(Lt)|, relative
/// to |f̂(r)| + |f̂(it)|cosh(Lt) + ‖f‖₁ scale.
pub fn transform_identity_error(
    f: &TestFunctionProfile,
    fl: &TestFunctionProfile,
    rs: &[f64],
    ts: &[f64],
) -> Result<f64> {
    let l = match fl.kind {
        ProfileKind::Translate { l } => l,
        _ => return domain("second profile must be a translate"),
    };
    let mut worst: f64 = 0.0;
    for &r in rs {
        let d = (fl.fourier(r) - f.fourier(r) * (l * r).cos()).abs();
        worst = worst.max(d / f.norm1);
    }
    for &t in ts {
        let want = f.fourier_imag(t)? * (l * t).cosh();
        let d = (fl.fourier_imag(t)? - want).abs();
        worst = worst.max(d / want.abs().max(f.norm1));
    }
    Ok(worst)
}

/// F_f(x) = x Σ_{k≥1} f(kx)/(2 sinh(kx/2)); only k ≤ mu0/x contribute.
pub fn big_f(profile: &TestFunctionProfile, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return domain("x must be positive");
    }
    Ok(big_f_unchecked(profile, x))
}

fn big_f_unchecked(p: &TestFunctionProfile, x: f64) -> f64 {
    let kmax = (p.mu0 / x).floor() as u64;
    let mut s = 0.0;
    for k in 1..=kmax {
        let y = k as f64 * x;
        s += p.eval(y) / (2.0 * (0.5 * y).sinh());
    }
    x * s
}

#[derive(Clone, Debug, Serialize)]
pub struct IffCheck {
    /// I_{F_f} through the length integral of F_f.
    pub i_ff: f64,
    /// The same value summed over k after the substitution u = kℓ.
    pub i_ff_by_k: f64,
    pub fhat_half: f64,
    pub gap: f64,
    pub norm1: f64,
    /// 2∫_0^∞ f(ℓ)e^{-ℓ/2} dℓ
    pub middle: f64,
    /// 2Σ_{k≥2}∫ f(kℓ) sinh(ℓ/2)²/sinh(kℓ/2) dℓ
    pub higher: f64,
    pub budget: f64,
    pub pass: bool,
}

/// Terms of the k-sum in I_{F_f} summed directly before switching to the
/// series tail.
const TAIL_START: u32 = 256;

/// Σ_{k>K} k^{-s} by Euler–Maclaurin.
fn zeta_tail(s: i32, k: u32) -> f64 {
    let (k, sf) = (k as f64, s as f64);
    k.powf(1.0 - sf) / (sf - 1.0) - 0.5 * k.powi(-s) + sf / 12.0 * k.powi(-s - 1)
        - sf * (sf + 1.0) * (sf + 2.0) / 720.0 * k.powi(-s - 3)
}

/// (2/k) ∫_0^{mu0} f(u) sinh(u/2k)²/sinh(u/2) du.
fn kth_term(p: &TestFunctionProfile, k: u32) -> f64 {
    let kk = k as f64;
    let w = |u: f64| {
        if u == 0.0 {
            0.0
        } else {
            p.eval(u) * (u / (2.0 * kk)).sinh().powi(2) / (0.5 * u).sinh()
        }
    };
    let panels = (p.mu0 / p.h / 4.0).ceil() as usize;
    2.0 / kk * gauss_legendre(&w, 0.0, p.mu0, panels.max(16), 10)
}

/// I_{F_f} against f̂(i/2): the gap must stay within 4‖f‖₁ plus the
/// quadrature budget, a tenth of which goes to the direct length integral.
pub fn i_ff_check(p: &TestFunctionProfile, budget: f64) -> Result<IffCheck> {
    let fp = p.clone();
    let spec = IntegralSpec::function(
        Arc::new(move |x: f64| if x > 0.0 { big_f_unchecked(&fp, x) } else { 0.0 }),
        p.mu0,
        f64::INFINITY,
    )?
    .with_tolerance(0.1 * budget);
    let i_ff = i_f(&spec)?;
    let first = kth_term(p, 1);
    let mut higher: f64 = (2..=TAIL_START).map(|k| kth_term(p, k)).sum();
    // for k > K, sinh(u/2k)² = (u/2k)² + (u/2k)⁴/3 + O(k⁻⁶), so the tail is
    // ζ-tails of k⁻³ and k⁻⁵ against two moments of f
    let moment = |e: i32| {
        gauss_legendre(
            &|u: f64| {
                if u == 0.0 {
                    0.0
                } else {
                    p.eval(u) * u.powi(e) / (0.5 * u).sinh()
                }
            },
            0.0,
            p.mu0,
            64,
            10,
        )
    };
    higher += 0.5 * moment(2) * zeta_tail(3, TAIL_START) + moment(4) / 24.0 * zeta_tail(5, TAIL_START);
    let middle = 2.0 * adaptive_simpson(&|x: f64| p.eval(x) * (-0.5 * x).exp(), 0.0, p.mu0, 1e-14);
    let fhat_half = p.fourier_imag(0.5)?;
    let gap = (i_ff - fhat_half).abs();
    Ok(IffCheck {
        i_ff,
        i_ff_by_k: first + higher,
        fhat_half,
        gap,
        norm1: p.norm1,
        middle,
        higher,
        budget,
        pass: gap <= 4.0 * p.norm1 + budget,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityIntegral {
    /// ∫_ℝ f̂(r) r tanh(πr) dr
    pub value: f64,
    /// ∫_ℝ |f̂(r)| |r| dr
    pub abs_moment: f64,
    /// Truncation radius and the certified bound on the discarded tails.
    pub radius: f64,
    pub tail_bound: f64,
}

/// Integration by parts bound for ∫_{|r|>R} |f̂(r)| |r| dr: 2‖f^{(j)}‖₁ R^{2-j}/(j-2).
fn tail_bound(p: &TestFunctionProfile, radius: f64) -> f64 {
    (3..=MAX_DERIV)
        .map(|j| 2.0 * p.deriv_norms[j] * radius.powi(2 - j as i32) / (j - 2) as f64)
        .fold(f64::INFINITY, f64::min)
}

/// Composite Gauss–Legendre nodes on [0, R] with f̂ evaluated once.
struct HalfLine {
    nodes: Vec<(f64, f64, f64)>,
}

impl HalfLine {
    fn new(p: &TestFunctionProfile, radius: f64) -> Self {
        let width = (0.5f64).min(1.0 / p.mu0);
        let panels = (radius / width).ceil() as usize;
        let h = radius / panels as f64;
        let base = gauss_legendre_nodes(10);
        let mut nodes = Vec::with_capacity(panels * 10);
        for k in 0..panels {
            let c = (k as f64 + 0.5) * h;
            for &(x, w) in &base {
                let r = c + 0.5 * h * x;
                nodes.push((r, 0.5 * h * w, p.fourier(r)));
            }
        }
        HalfLine { nodes }
    }

    /// 2∫_0^R w(r, f̂(r)) dr
    fn integrate(&self, w: impl Fn(f64, f64) -> f64) -> f64 {
        2.0 * self.nodes.iter().map(|&(r, wt, f)| wt * w(r, f)).sum::<f64>()
    }
}

/// The identity integral with a truncation radius doubled until the
/// integration-by-parts tail is below 1e-12 of the partial integral.
pub fn identity_integral(p: &TestFunctionProfile) -> Result<IdentityIntegral> {
    identity_with_grid(p).map(|(id, _)| id)
}

fn identity_with_grid(p: &TestFunctionProfile) -> Result<(IdentityIntegral, HalfLine)> {
    let mut radius = 8.0;
    while radius <= 4096.0 {
        let tb = tail_bound(p, radius);
        let grid = HalfLine::new(p, radius);
        let abs_moment = grid.integrate(|r, f| f.abs() * r);
        if tb < 1e-12 * abs_moment {
            let value = grid.integrate(|r, f| f * r * (PI * r).tanh());
            let id = IdentityIntegral {
                value,
                abs_moment,
                radius,
                tail_bound: tb,
            };
            return Ok((id, grid));
        }
        radius *= 2.0;
    }
    Err(Error::Domain("Fourier transform tail did not converge".into()))
}

/// (g-1) ∫ f̂(r) r tanh(πr) dr.
pub fn identity_term(p: &TestFunctionProfile, g: f64) -> Result<f64> {
    if g < 2.0 {
        return domain("need g >= 2");
    }
    Ok((g - 1.0) * identity_integral(p)?.value)
}

#[derive(Clone, Debug, Serialize)]
pub struct WeylConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// min of f̂/2 on [-1, 1]
    pub m: f64,
    pub mu0: f64,
    pub a0: f64,
    pub b0: f64,
    pub c0: f64,
    pub d0: f64,
    /// The t-grid used for (A₀, B₀) and J(t) = ∫ f̂_t(r) r tanh(πr) dr on it.
    pub t_grid: Vec<f64>,
    pub j_values: Vec<f64>,
}

/// Golden-section minimization of a unimodal f on [a, b].
pub fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + c.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// J(t) = ∫ f̂_t(r) r tanh(πr) dr with f̂_t(r) = (f̂(r-t) + f̂(r+t))/2,
/// written as ∫_0^∞ f̂(s) (ψ(s+t) + ψ(s-t)) ds using evenness.
fn window_identity(grid: &HalfLine, t: f64) -> f64 {
    let psi = |x: f64| x * (PI * x).tanh();
    grid.integrate(|s, f| f * 0.5 * (psi(s + t) + psi(s - t)))
}

pub fn weyl_constants(p: &TestFunctionProfile, mu0: f64) -> Result<WeylConstants> {
    if p.mu0 > mu0 + 1e-12 {
        return domain(format!("profile support {} exceeds mu0 = {mu0}", p.mu0));
    }
    // m: grid search then golden refinement around the smallest sample
    let samples: Vec<(f64, f64)> = (0..=200)
        .map(|i| i as f64 / 200.0)
        .map(|r| (r, p.fourier(r) / 2.0))
        .collect();
    let (i, _) = samples
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .unwrap();
    let lo = samples[i.saturating_sub(1)].0;
    let hi = samples[(i + 1).min(200)].0;
    let (_, m_ref) = golden_min(|r| p.fourier(r) / 2.0, lo, hi, 1e-10);
    let m = m_ref.min(samples[i].1);
    if !(m > 0.0) {
        return Err(Error::Domain(format!("f̂ is not positive on [-1,1] (min {m})")));
    }
    let c0 = p.sup;
    let d0 = p.nodes().map(|(x, v)| v.abs() * (0.5 * x).exp()).sum::<f64>() * p.h;
    let (_, grid) = identity_with_grid(p)?;
    // the slope of J is eventually ∫f̂ = 2π f(0); the intercept is the
    // smallest value making the line dominate the grid
    let a0 = 2.0 * PI * p.eval(0.0);
    let t_grid: Vec<f64> = (0..=160).map(|i| i as f64 * 0.25).collect();
    let j_values: Vec<f64> = t_grid.iter().map(|&t| window_identity(&grid, t)).collect();
    let b0 = t_grid
        .iter()
        .zip(&j_values)
        .map(|(t, j)| j - a0 * t)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(WeylConstants {
        a: a0 / m,
        b: b0 / m,
        c: c0 / m,
        d: d0 / m,
        m,
        mu0,
        a0,
        b0,
        c0,
        d0,
        t_grid,
        j_values,
    })
}

/// max(0, log x) + 1
pub fn logp(x: f64) -> f64 {
    x.ln().max(0.0) + 1.0
}

/// (g-1)(A|t| + B) + C N_X logp((mu0+|t|)/sys) + D E_X, with N_X = 3g-3 and
/// E_X = 2g-3 unless given.
pub fn weyl_window_bound(
    c: &WeylConstants,
    g: f64,
    t: f64,
    sys: f64,
    n_x: Option<f64>,
    e_x: Option<f64>,
) -> Result<f64> {
    if g < 2.0 || !(sys > 0.0) {
        return domain("need g >= 2 and sys > 0");
    }
    let n_x = n_x.unwrap_or(3.0 * g - 3.0);
    let e_x = e_x.unwrap_or(2.0 * g - 3.0);
    Ok((g - 1.0) * (c.a * t.abs() + c.b) + c.c * n_x * logp((c.mu0 + t.abs()) / sys) + c.d * e_x)
}

/// Upper estimates of sup |f̂| on [2k, 2k+2]: sampled maximum plus the
/// derivative slack ‖x f‖₁ × half-spacing, capped by the tail bound.
pub fn window_sups(p: &TestFunctionProfile, count: usize) -> Vec<f64> {
    let slope = p.nodes().map(|(x, v)| (x * v).abs()).sum::<f64>() * p.h;
    let per = 32;
    (0..count)
        .map(|k| {
            let a = 2.0 * k as f64;
            let sampled = (0..=per)
                .map(|i| p.fourier(a + 2.0 * i as f64 / per as f64).abs())
                .fold(0.0, f64::max);
            let est = sampled + slope / per as f64;
            if k == 0 {
                est
            } else {
                est.min(p.fourier_tail_bound(a))
            }
        })
        .collect()
}

/// Σ_k weyl_window_bound(t = 2k+1) sup_{[2k,2k+2]} |f̂|, stopped once a term
/// falls below 1e-30 of the partial sum.
pub fn weyl_sum_bound(p: &TestFunctionProfile, c: &WeylConstants, g: f64, sys: f64) -> Result<f64> {
    weyl_sum_with(&window_sups(p, 4096), c, g, sys)
}

fn weyl_sum_with(sups: &[f64], c: &WeylConstants, g: f64, sys: f64) -> Result<f64> {
    let mut s = 0.0;
    for (k, sup) in sups.iter().enumerate() {
        let term = weyl_window_bound(c, g, 2.0 * k as f64 + 1.0, sys, None, None)? * sup;
        s += term;
        if term < 1e-30 * s {
            return Ok(s);
        }
    }
    Err(Error::Domain("window sum did not decay".into()))
}

/// 1 - 4b(1 - κ/2), exactly.
pub fn exponent_formula(b: &Rational, kappa: &Rational) -> Rational {
    let half_k = Rational::from(kappa / 2u32);
    let inner = Rational::from(1) - half_k;
    Rational::from(1) - (4u32 * Rational::from(b * &inner))
}

/// Everything the optimizer needs that depends only on the profile.
#[derive(Clone, Debug)]
pub struct SpectralModel {
    pub profile: TestFunctionProfile,
    pub weyl: WeylConstants,
    pub identity: IdentityIntegral,
    /// min_{t∈[0,1/2]} f̂(it)
    pub m_lower: f64,
    pub fhat_half: f64,
    sups: Vec<f64>,
}

impl SpectralModel {
    pub fn new(profile: TestFunctionProfile) -> Result<Self> {
        let weyl = weyl_constants(&profile, profile.mu0)?;
        let identity = identity_integral(&profile)?;
        let m_lower = (0..=100)
            .map(|i| profile.fourier_imag(i as f64 / 200.0))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let fhat_half = profile.fourier_imag(0.5)?;
        let sups = window_sups(&profile, 4096);
        Ok(SpectralModel {
            profile,
            weyl,
            identity,
            m_lower,
            fhat_half,
            sups,
        })
    }

    pub fn weyl_sum(&self, g: f64, sys: f64) -> Result<f64> {
        weyl_sum_with(&self.sups, &self.weyl, g, sys)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbabilityReport {
    pub g: f64,
    pub b: f64,
    pub kappa: f64,
    pub d: f64,
    pub sys: f64,
    pub l_star: f64,
    /// (4 - 2κ) log g
    pub l_balance: f64,
    pub p_bound: f64,
    pub exponent_observed: f64,
    pub exponent_formula: f64,
    /// (g-1)∫|f̂||r|
    pub identity: f64,
    pub weyl: f64,
    /// 5‖f‖₁, used in the bound.
    pub cancel_5: f64,
    /// 3‖f_L‖₁ = 3‖f‖₁, reported for comparison.
    pub cancel_3: f64,
    /// geo_constant g^{κ-1} f̂(i/2) cosh(L*/2)
    pub geometric: f64,
    pub unimodal: bool,
}

/// Minimize upper(L)/(m cosh(bL)) over L ∈ (0, D log g - 1], where
/// upper(L) = (g-1)∫|f̂||r| + Weyl sum + 5‖f‖₁ + geo g^{κ-1} f̂(i/2) cosh(L/2).
#[allow(clippy::too_many_arguments)]
pub fn probability_bound(
    model: &SpectralModel,
    g: f64,
    b: f64,
    kappa: f64,
    d: f64,
    geo_constant: f64,
    sys: Option<f64>,
    tol: f64,
) -> Result<ProbabilityReport> {
    if !(b > 0.0 && b <= 0.5) || !(kappa > 0.0 && kappa < 1.0) || !(d > 4.0) || g < 2.0 {
        return domain("need 0 < b <= 1/2, 0 < kappa < 1, D > 4, g >= 2");
    }
    let lg = g.ln();
    let l_max = d * lg - 1.0;
    if !(l_max > 0.0) {
        return domain("empty range for L: D log g <= 1");
    }
    let sys = sys.unwrap_or(1.0 / lg);
    let identity = (g - 1.0) * model.identity.abs_moment;
    let weyl = model.weyl_sum(g, sys)?;
    let norm1 = model.profile.norm1;
    let fixed = identity + weyl + 5.0 * norm1;
    let geo = geo_constant * g.powf(kappa - 1.0) * model.fhat_half;
    let obj = |l: f64| (fixed + geo * (0.5 * l).cosh()) / (model.m_lower * (b * l).cosh());
    // unimodality on a sample grid; otherwise fall back to the grid minimum
    let samples: Vec<(f64, f64)> = (1..=400)
        .map(|i| l_max * i as f64 / 400.0)
        .map(|l| (l, obj(l)))
        .collect();
    let turns = samples
        .windows(3)
        .filter(|w| w[1].1 < w[0].1 && w[1].1 <= w[2].1)
        .count();
    let ends_low = samples[0].1 <= samples[1].1 || samples[399].1 <= samples[398].1;
    let unimodal = turns + ends_low as usize <= 1;
    let (l_star, p_bound) = if unimodal {
        golden_min(obj, 0.0, l_max, tol)
    } else {
        samples.iter().cloned().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap()
    };
    let kb = Rational::from_f64(b).unwrap();
    let kk = Rational::from_f64(kappa).unwrap();
    Ok(ProbabilityReport {
        g,
        b,
        kappa,
        d,
        sys,
        l_star,
        l_balance: (4.0 - 2.0 * kappa) * lg,
        p_bound,
        exponent_observed: p_bound.ln() / lg,
        exponent_formula: exponent_formula(&kb, &kk).to_f64(),
        identity,
        weyl,
        cancel_5: 5.0 * norm1,
        cancel_3: 3.0 * norm1,
        geometric: geo * (0.5 * l_star).cosh(),
        unimodal,
    })
}

/// Least-squares slope of log p_bound against log g.
pub fn loglog_slope(reports: &[ProbabilityReport]) -> f64 {
    let xs: Vec<f64> = reports.iter().map(|r| r.g.ln()).collect();
    let ys: Vec<f64> = reports.iter().map(|r| r.p_bound.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

/// CSV rows `g,b,kappa,l_star,p_bound,exponent_observed`.
pub fn sweep_csv(reports: &[ProbabilityReport]) -> String {
    let mut s = String::from("g,b,kappa,l_star,p_bound,exponent_observed\n");
    for r in reports {
        s.push_str(&format!(
            "{},{},{},{},{:e},{}\n",
            r.g, r.b, r.kappa, r.l_star, r.p_bound, r.exponent_observed
        ));
    }
    s
}
