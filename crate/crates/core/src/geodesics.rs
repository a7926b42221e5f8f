//! Counting closed geodesics on surfaces without short embedded pants or
//! one-holed tori: the annulus segment count and the bound chain built on it.

use crate::error::{domain, Error, Result};
use rug::{Integer, Rational};
use serde::Serialize;

/// Parameters of the graph bound. `area` is carried for reporting only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TangleFreeParams {
    pub area: f64,
    pub l0: f64,
    pub eps: f64,
    pub c: f64,
}

impl TangleFreeParams {
    /// Checked constructor: L₀ > 1 and 0 < ε < 1/2.
    pub fn new(area: f64, l0: f64, eps: f64, c: f64) -> Result<Self> {
        let p = Self::unchecked(area, l0, eps, c)?;
        if !p.hypotheses_hold() {
            return domain(format!("need L0 > 1 and 0 < eps < 1/2, got L0={l0}, eps={eps}"));
        }
        Ok(p)
    }

    /// Accepts any positive L₀, ε in (0,1) and C > 0, for evaluating the
    /// formulas outside the range where they are proved.
    pub fn unchecked(area: f64, l0: f64, eps: f64, c: f64) -> Result<Self> {
        if !(l0 > 0.0 && eps > 0.0 && eps < 1.0 && c > 0.0 && area >= 0.0) {
            return domain("need L0 > 0, 0 < eps < 1, C > 0, area >= 0");
        }
        Ok(TangleFreeParams { area, l0, eps, c })
    }

    pub fn hypotheses_hold(&self) -> bool {
        self.l0 > 1.0 && self.eps > 0.0 && self.eps < 0.5
    }
}

fn exact(x: f64, what: &str) -> Result<Rational> {
    Rational::from_f64(x).ok_or_else(|| Error::Domain(format!("{what} must be finite")))
}

/// #{n ∈ ℤ : |delta + nT| ≤ ell}, computed in exact arithmetic on the
/// binary values of the inputs.
pub fn annulus_segment_count(delta: f64, t: f64, ell: f64) -> Result<u64> {
    if !(t > 0.0) {
        return domain("translation length must be positive");
    }
    if !(delta > 0.0 && delta < t) {
        return domain("offset must lie in (0, T)");
    }
    if !(ell >= 0.0) {
        return domain("length cap must be non-negative");
    }
    let (d, t, l) = (exact(delta, "delta")?, exact(t, "T")?, exact(ell, "ell")?);
    // -ell ≤ delta + nT ≤ ell
    let hi = Rational::from(&l - &d) / &t;
    let lo = (-Rational::from(&l + &d)) / &t;
    let hi: Integer = hi.floor().numer().clone();
    let lo: Integer = lo.ceil().numer().clone();
    let count: Integer = Integer::from(&hi - &lo) + 1u32;
    Ok(if count < 0 {
        0
    } else {
        count.to_u64().unwrap_or(u64::MAX)
    })
}

/// The annulus count's bound 2 + 2ell/T.
pub fn annulus_bound(t: f64, ell: f64) -> f64 {
    2.0 + 2.0 * ell / t
}

/// C + C log(1/ε)/L₀.
pub fn net_size_bound(p: &TangleFreeParams) -> f64 {
    p.c + p.c * (1.0 / p.eps).ln() / p.l0
}

/// 3 + L₀/(6ε).
pub fn segment_pair_bound(p: &TangleFreeParams) -> f64 {
    3.0 + p.l0 / (6.0 * p.eps)
}

/// 2 + 24 ell/L₀.
pub fn loop_segment_bound(ell: f64, l0: f64) -> f64 {
    2.0 + 24.0 * ell / l0
}

/// Number of good segments in a loop of length ell: ⌊2 + 24 ell/L₀⌋.
pub fn loop_segment_count(ell: f64, l0: f64) -> u64 {
    loop_segment_bound(ell, l0).floor() as u64
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphBound {
    /// (C L₀ log(1/ε)/ε)^{C ell/L₀ + 3}
    pub value: f64,
    /// log of `value`.
    pub log_value: f64,
    /// (net × pair)^n with n = ⌊2 + 24 ell/L₀⌋, as a logarithm.
    pub log_product: f64,
    pub segments: u64,
    /// net × pair / (L₀ log(1/ε)/ε); the absorbed constant C' must be at
    /// least this.
    pub absorption: f64,
    pub hypotheses_hold: bool,
}

pub fn graph_bound(p: &TangleFreeParams, ell: f64) -> Result<GraphBound> {
    if !(ell >= 0.0) {
        return domain("ell must be non-negative");
    }
    let lam = (1.0 / p.eps).ln() / p.eps;
    let base = p.c * p.l0 * lam;
    let expo = p.c * ell / p.l0 + 3.0;
    let log_value = expo * base.ln();
    let n = loop_segment_count(ell, p.l0);
    let np = net_size_bound(p) * segment_pair_bound(p);
    Ok(GraphBound {
        value: log_value.exp(),
        log_value,
        log_product: n as f64 * np.ln(),
        segments: n,
        absorption: np / (p.l0 * lam),
        hypotheses_hold: p.hypotheses_hold(),
    })
}

/// Smallest C' with net × pair ≤ C' L₀ log(1/ε)/ε over the grid, and the
/// grid point attaining it.
pub fn fit_absorption_constant(l0s: &[f64], epss: &[f64], c: f64) -> Result<(f64, f64, f64)> {
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for &l0 in l0s {
        for &e in epss {
            let p = TangleFreeParams::new(0.0, l0, e, c)?;
            let a = graph_bound(&p, 0.0)?.absorption;
            if a > best.0 {
                best = (a, l0, e);
            }
        }
    }
    if best.0.is_finite() {
        Ok(best)
    } else {
        domain("empty grid")
    }
}

/// (C/L₀) log(C L₀ log(1/ε)/ε): the limit of log(bound)/ell.
pub fn bound_growth_rate(p: &TangleFreeParams) -> f64 {
    p.c / p.l0 * (p.c * p.l0 * (1.0 / p.eps).ln() / p.eps).ln()
}

/// (B < 2 ell, ell > A/4) for a filling union of length ell on a surface
/// of area A with boundary length B.
pub fn fill_inequalities(ell: f64, area: f64, boundary: f64) -> (bool, bool) {
    (boundary < 2.0 * ell, ell > area / 4.0)
}

/// CSV rows `l0,eps,ell,log_bound,bound` for plotting the growth rate.
pub fn sweep_csv(l0s: &[f64], epss: &[f64], ells: &[f64], c: f64) -> Result<String> {
    let mut out = String::from("l0,eps,ell,log_bound,bound\n");
    for &l0 in l0s {
        for &e in epss {
            let p = TangleFreeParams::unchecked(0.0, l0, e, c)?;
            for &ell in ells {
                let b = graph_bound(&p, ell)?;
                out.push_str(&format!("{l0},{e},{ell},{},{:e}\n", b.log_value, b.value));
            }
        }
    }
    Ok(out)
}
