use proptest::prelude::*;
use rug::{Integer, Rational};
use std::sync::{Arc, OnceLock};
use wpvol::quad::adaptive_simpson;
use wpvol::thin::*;
use wpvol::volumes::dim;
use wpvol::{numeric_eval, GradedRational, VolumeCache};

fn cache() -> &'static VolumeCache {
    static C: OnceLock<VolumeCache> = OnceLock::new();
    C.get_or_init(VolumeCache::new)
}

fn num(x: &GradedRational) -> f64 {
    numeric_eval(x, 30).to_f64()
}

/// Σ_{j≥1} ε^{2j}/(2j (2j)!), the Taylor series of ∫_0^ε (cosh δ - 1)/δ dδ.
fn i_eps_series(eps: f64) -> f64 {
    let mut s = 0.0;
    let mut fact = 1.0;
    for j in 1..20 {
        fact *= ((2 * j - 1) * (2 * j)) as f64;
        s += eps.powi(2 * j) / (2 * j) as f64 / fact;
    }
    s
}

/// Weights of the closed Newton–Cotes rule on nodes i/n in [0,1], exact
/// for polynomials of degree ≤ n. Solved from the moment equations.
fn newton_cotes(n: usize) -> Vec<Rational> {
    let m = n + 1;
    let mut a: Vec<Vec<Rational>> = (0..m)
        .map(|p| {
            let mut row: Vec<Rational> = (0..m)
                .map(|i| Rational::from((i as u32, n as u32)).pow(p as i32))
                .collect();
            row.push(Rational::from((1, p as u32 + 1)));
            row
        })
        .collect();
    for c in 0..m {
        let piv = (c..m).find(|&r| a[r][c].cmp0() != std::cmp::Ordering::Equal).unwrap();
        a.swap(c, piv);
        let inv = Rational::from(1) / a[c][c].clone();
        for x in a[c].iter_mut() {
            *x *= &inv;
        }
        for r in 0..m {
            if r != c && a[r][c].cmp0() != std::cmp::Ordering::Equal {
                let f = a[r][c].clone();
                for j in c..=m {
                    let t = Rational::from(&f * &a[c][j]);
                    a[r][j] -= t;
                }
            }
        }
    }
    a.into_iter().map(|r| r[m].clone()).collect()
}

use rug::ops::Pow;

/// (1/(2^k k!)) ∫_{[0,ε]^k} ∏δ_i V_{g-k,2k}(δ₁,δ₁,…) by tensor Newton–Cotes
/// on point values of the volume polynomial: exact, since the integrand
/// is a polynomial of degree ≤ 2 dim + 1 in each δ_i.
fn g_k_by_point_values(g: u32, k: u32, eps: &Rational) -> GradedRational {
    let (gg, n) = (g - k, 2 * k);
    let deg = 2 * dim(gg, n) as usize + 1;
    let w = newton_cotes(deg);
    let mut total = GradedRational::zero();
    let mut idx = vec![0usize; k as usize];
    loop {
        let mut weight = Rational::from(1);
        let mut half = Vec::new();
        for &i in &idx {
            let x = eps * Rational::from((i as u32, deg as u32));
            weight *= Rational::from(eps * &w[i]) * &x;
            let h = Rational::from(&x / 2u32);
            half.push(h.clone());
            half.push(h);
        }
        let v = cache().volume_at_half_lengths(gg, n, &half).unwrap();
        total += &v.scale(&weight);
        let mut p = 0;
        loop {
            if p == idx.len() {
                let den = Integer::from(Integer::factorial(k)) << k;
                return total.scale(&Rational::from((1, den)));
            }
            idx[p] += 1;
            if idx[p] <= deg {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}

#[test]
fn i_eps_matches_its_series() {
    let x = i_eps(0.1, 1e-15).unwrap();
    assert!((x - i_eps_series(0.1)).abs() < 1e-15);
    let two_terms = 0.01 / 4.0 + 1e-4 / 96.0;
    assert!(((x - two_terms) / two_terms).abs() < 5e-7);
    assert!(format!("{x:.7}").starts_with("0.0025010"));
    for eps in [0.3, 0.7, 1.0] {
        let a = i_eps(eps, 1e-14).unwrap();
        assert!(((a - i_eps_series(eps)) / a).abs() < 1e-11);
    }
    let ratios: Vec<f64> = [0.4, 0.2, 0.1, 0.05, 0.01]
        .iter()
        .map(|&e| i_eps(e, 1e-16).unwrap() / (e * e / 4.0))
        .collect();
    assert!(ratios.windows(2).all(|w| w[1] < w[0] && w[1] > 1.0));
    assert!(ratios[4] - 1.0 < 1e-5);
    assert!(i_eps(-0.1, 1e-12).is_err());
    assert!(i_eps(1.5, 1e-12).is_err());
}

#[test]
fn i_f_two_quadratures_and_reductions() {
    let one = IntegralSpec::indicator(1.0).unwrap();
    let a = i_f(&one).unwrap();
    let b = one.integrate_fixed(|l| l * sinhc_sq(l), 16);
    assert!(a > 0.0 && (a - b).abs() < 1e-10, "{a} {b}");
    // ½·1[0,ε] reproduces I_ε
    let eps = 0.3;
    let half = IntegralSpec::function(Arc::new(|_| 0.5), eps, 0.5).unwrap();
    assert!((i_f(&half).unwrap() - i_eps(eps, 1e-14).unwrap()).abs() < 1e-12);
    assert_eq!(i_f(&IntegralSpec::zero()).unwrap(), 0.0);
    // a hat function as a table and as a closure
    let t = IntegralSpec::table(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
    let f = IntegralSpec::function(Arc::new(|x: f64| 1.0 - (x - 1.0).abs()), 2.0, 1.0).unwrap();
    assert!((i_f(&t).unwrap() - i_f(&f).unwrap()).abs() < 1e-10);
    assert_eq!(t.eval(0.5), 0.5);
    assert_eq!(t.eval(2.5), 0.0);
    assert_eq!(t.sup_norm(), 1.0);
    assert!(IntegralSpec::table(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    assert!(IntegralSpec::indicator(f64::INFINITY).is_err());
}

#[test]
fn g_k_matches_point_value_integration() {
    let tenth = Rational::from((1, 10));
    for (g, k) in [(4u32, 1u32), (4, 2), (5, 1), (5, 2), (4, 3)] {
        let a = g_k_exact(g, k, &tenth, cache()).unwrap();
        let b = g_k_by_point_values(g, k, &tenth);
        assert_eq!(a, b, "g={g} k={k}");
    }
    let odd = Rational::from((3, 7));
    assert_eq!(g_k_exact(5, 2, &odd, cache()).unwrap(), g_k_by_point_values(5, 2, &odd));
}

#[test]
fn g_1_matches_adaptive_quadrature() {
    // ½ ∫_0^{1/10} δ V_{3,2}(δ,δ) dδ in floating point
    let f = |d: f64| 0.5 * d * cache().volume_eval(3, 2, &[d, d], 30).unwrap().to_f64();
    let q = adaptive_simpson(&f, 0.0, 0.1, 1e-4);
    let exact = num(&g_k_exact(4, 1, &Rational::from((1, 10)), cache()).unwrap());
    assert!(((q - exact) / exact).abs() < 1e-10, "{q} {exact}");
}

#[test]
fn g_1_lowest_term_is_a_quarter_volume() {
    for g in 4..=7u32 {
        let poly = g_k_polynomial(g, 1, cache()).unwrap();
        let (p, c) = &poly[0];
        assert_eq!(*p, 2);
        let v = cache().volume_value(g - 1, 2).unwrap();
        assert_eq!(*c, v.scale(&Rational::from((1, 4))));
    }
    assert!(g_k_polynomial(4, 5, cache()).unwrap().is_empty());
}

#[test]
fn g_k_sits_below_the_sinh_majorant() {
    for (g, k) in [(5u32, 1u32), (5, 2), (6, 2), (6, 3)] {
        let v = num(&cache().volume_value(g - k, 2 * k).unwrap());
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        let mut gaps = Vec::new();
        for e in [(2, 5), (1, 5), (1, 10), (1, 20), (1, 100)] {
            let eps = Rational::from(e);
            let ie = i_eps(eps.to_f64(), 1e-17).unwrap();
            let gk = num(&g_k_exact(g, k, &eps, cache()).unwrap());
            let r = gk / (v * ie.powi(k as i32) / fact);
            assert!(r <= 1.0 + 1e-12, "g={g} k={k} eps={eps}: {r}");
            gaps.push(1.0 - r);
        }
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        assert!(gaps[4] < 1e-3);
    }
}

#[test]
fn inclusion_exclusion_identity_is_exact() {
    for r in 1..=30 {
        for n in 1..=30 {
            assert!(inclusion_exclusion_identity(r, n), "r={r} n={n}");
        }
    }
    // 4 - 6 = -2 = 1 - C(3,2)
    assert_eq!(4 - 6, 1 - 3);
}

#[test]
fn single_curve_majorant_is_the_separating_sum() {
    let eps = 0.2;
    let b = b_k_majorant(4, 1, eps, cache()).unwrap();
    let v = |g, n| num(&cache().volume_value(g, n).unwrap());
    let want = 2.0 * i_eps(eps, 1e-15).unwrap() * (v(1, 1) * v(3, 1) + v(2, 1) * v(2, 1));
    assert!(((b - want) / want).abs() < 1e-12);
    for k in 1..=3u32 {
        let r: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&e| b_k_majorant(6, k, e, cache()).unwrap() / i_eps(e, 1e-15).unwrap().powi(k as i32))
            .collect();
        assert!(r.windows(2).all(|w| (w[1] / w[0] - 1.0).abs() < 1e-9), "{r:?}");
    }
    assert!(b_k_majorant(6, 2, 1e-4, cache()).unwrap() < 1e-10 * b_k_majorant(6, 2, 0.2, cache()).unwrap());
    assert_eq!(b_k_majorant(6, 0, 0.1, cache()).unwrap(), 0.0);
    assert!(b_k_majorant(3, 1, 0.1, cache()).is_err());
}

#[test]
fn brackets_nest_as_depth_grows() {
    for g in [4u32, 5, 6] {
        for eps in [0.1, 0.2] {
            let shallow = thin_bracket(g, eps, 2, cache()).unwrap();
            let deep = thin_bracket(g, eps, 4, cache()).unwrap();
            assert!(deep.lower <= deep.upper);
            assert!(
                shallow.lower <= deep.lower && deep.upper <= shallow.upper,
                "g={g} eps={eps}"
            );
            // the truncations nest on their own, without the intersection
            let d = &deep.by_depth;
            assert!(d[2] <= d[0] && d[1] <= d[3] && d[3] <= d[2], "{d:?}");
            assert!(deep.width() <= shallow.width());
        }
    }
    let b = thin_bracket(4, 0.2, 4, cache()).unwrap();
    assert!(b.width() < thin_bracket(4, 0.2, 2, cache()).unwrap().width());
    // the main term is the large-g prediction; at g = 4 it sits below the bracket
    assert!((b.main_term - b.lower).abs() / b.v_g < 0.01);
    assert_eq!(thin_bracket(4, 0.2, 100, cache()).unwrap().n_max, 9);
    assert!(thin_bracket(4, 0.2, 1, cache()).is_err());
    let j = serde_json::to_value(&b).unwrap();
    assert_eq!(j["n_max"], 4);
}

#[test]
fn thick_mean_matches_exact_integration() {
    // ∫_0^1 ℓ V_{3,2}(ℓ,ℓ) dℓ / V_4, exactly by Newton–Cotes on point values
    let deg = 2 * dim(3, 2) as usize + 1;
    let w = newton_cotes(deg);
    let mut s = GradedRational::zero();
    for (i, wi) in w.iter().enumerate() {
        let x = Rational::from((i as u32, deg as u32));
        let h = Rational::from(&x / 2u32);
        let v = cache().volume_at_half_lengths(3, 2, &[h.clone(), h]).unwrap();
        s += &v.scale(&Rational::from(wi * &x));
    }
    let want = num(&s) / num(&cache().closed_volume(4).unwrap());
    let spec = IntegralSpec::indicator(1.0).unwrap();
    let got = mean_sns(4, &spec, cache()).unwrap();
    assert!(((got - want) / want).abs() < 1e-13, "{got} {want}");
    // a table equal to the indicator gives the same mean through quadrature
    let t = IntegralSpec::table(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
    let q = mean_sns(4, &t, cache()).unwrap();
    assert!(((q - want) / want).abs() < 1e-9, "{q} {want}");
}

#[test]
fn thick_ratio_approaches_one() {
    let spec = IntegralSpec::indicator(1.0).unwrap();
    let ratios: Vec<f64> = (4..=10u32)
        .map(|g| thick_average_bound(g, 0.1, &spec, cache()).unwrap().ratio)
        .collect();
    assert!(ratios.iter().all(|&r| r > 0.99), "{ratios:?}");
    assert!(
        ratios.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()),
        "{ratios:?}"
    );
    let z = thick_average_bound(6, 0.1, &IntegralSpec::zero(), cache()).unwrap();
    assert_eq!(z.bound, 0.0);
    let t = thick_average_bound(6, 0.1, &spec, cache()).unwrap();
    assert!(t.rows.iter().all(|r| r.value > 0.0 && r.over_vgk > 0.0));
    assert!(t.rows[0].over_vgk <= 1.0 + 1e-12);
}

#[test]
fn geometric_report_types_and_errors() {
    let g = 12;
    let lg = (g as f64).ln();
    let spec = IntegralSpec::indicator(1.0).unwrap();
    let r = geometric_main_report(g, 4.0, 0.5, 1.0 / lg, &spec, cache()).unwrap();
    let mut want = Vec::new();
    for g1 in 0..=g {
        for k in 1..=g + 1 {
            let chi = 2 * g1 as i64 + k as i64 - 2;
            let g2 = g as i64 + 1 - g1 as i64 - k as i64;
            if (1..=17).contains(&chi) && g2 >= 0 && 2 * g2 + k as i64 - 2 > 0 {
                want.push((g1, k));
            }
        }
    }
    let got: Vec<(u32, u32)> = r.subsurfaces.iter().map(|s| (s.g1, s.k)).collect();
    assert_eq!(got, want);
    assert!(r.subsurfaces.iter().all(|s| s.degree == 6 * s.g1 + 4 * s.k - 6));
    assert!(r.delta.is_finite() && r.average_bound >= r.thick.bound);
    assert!(!r.graph_hypotheses);
    let wide = IntegralSpec::indicator(4.0 * lg + 0.1).unwrap();
    assert!(geometric_main_report(g, 4.0, 0.5, 0.3, &wide, cache()).is_err());
    // κ → 1 inflates the short-curve term
    let a = geometric_main_report(8, 4.0, 0.2, 0.3, &spec, cache())
        .unwrap()
        .nu_short;
    let b = geometric_main_report(8, 4.0, 0.9, 0.3, &spec, cache())
        .unwrap()
        .nu_short;
    assert!(b > a);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn majorants_grow_with_eps(e in 0.01f64..0.45, f in 1.05f64..2.0, k in 1u32..4) {
        prop_assert!(i_eps(e, 1e-14).unwrap() < i_eps(e * f, 1e-14).unwrap());
        prop_assert!(b_k_majorant(6, k, e, cache()).unwrap() < b_k_majorant(6, k, e * f, cache()).unwrap());
        let lo = g_k_exact(6, k, &Rational::from_f64(e).unwrap(), cache()).unwrap();
        let hi = g_k_exact(6, k, &Rational::from_f64(e * f).unwrap(), cache()).unwrap();
        prop_assert!(num(&lo) < num(&hi));
    }

    #[test]
    fn i_f_grows_with_support(s in 0.1f64..5.0, f in 1.05f64..2.0) {
        let a = i_f(&IntegralSpec::indicator(s).unwrap()).unwrap();
        let b = i_f(&IntegralSpec::indicator(s * f).unwrap()).unwrap();
        prop_assert!(a < b);
    }
}
