use crate::output::{f, Sink, Table};
use crate::{CacheCmd, Cli, Cmd, Format, GeoCmd, SpectralCmd, StrataCmd, ThinCmd, VerifyCmd};
use rayon::prelude::*;
use rug::Rational;
use serde_json::json;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use wpvol::bounds::{product_bound_check, sinh_ratio_check, verify_coeff_bound, vgn_factorial_bound, BoundReport};
use wpvol::geodesics::{annulus_bound, annulus_segment_count, fit_absorption_constant, graph_bound, TangleFreeParams};
use wpvol::spectral::{
    build_test_function, i_ff_check, loglog_slope, probability_bound, transform_identity_error, translate_pair,
    ProbabilityReport, SpectralModel,
};
use wpvol::strata::{census, enumerate_strata};
use wpvol::thin::{default_depth, geometric_main_report, thick_average_bound, thin_bracket, IntegralSpec};
use wpvol::volumes::{is_stable, CACHE_VERSION};
use wpvol::{Error, GradedRational, VolumeCache};

pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            // a conflict means two derivations disagree: a correctness bug
            Error::CacheConflict { .. } | Error::Numeric(_) => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: 2,
            message: format!("cannot write output: {e}"),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: msg.into(),
    }
}

type Res = Result<bool, Failure>;

fn load_into(cache: &VolumeCache, path: &Path) -> Result<usize, Failure> {
    let file = File::open(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    cache.load(BufReader::new(file)).map_err(|e| match e {
        Error::CacheVersion { found, .. } => usage(format!(
            "{} has format {found:?} but this build reads {CACHE_VERSION:?}; delete the file (or point \
             WPVOL_CACHE elsewhere) and rerun to rebuild it",
            path.display()
        )),
        other => Failure::from(other),
    })
}

fn save_cache(cache: &VolumeCache, path: &Path) -> Result<(), Failure> {
    let mut buf = Vec::new();
    cache.save(&mut buf)?;
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, &buf).and_then(|_| std::fs::rename(&tmp, path))?;
    Ok(())
}

pub fn run(cli: Cli) -> Res {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w as usize)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    let cache = VolumeCache::new();
    if let Some(p) = &cli.cache {
        if p.exists() {
            load_into(&cache, p)?;
        }
    }
    let before = cache.stats().keys;
    let sink = Sink {
        output: cli.output.clone(),
        summary: cli.summary.clone(),
        json: cli.format == Format::Json,
        gnuplot: cli.gnuplot,
        config: format!("{:?} digits={}", cli.cmd, cli.digits),
    };
    if cli.gnuplot && cli.output.is_none() {
        return Err(usage("--gnuplot needs --output"));
    }
    let ok = match &cli.cmd {
        Cmd::Volumes {
            g,
            n,
            lengths,
            polynomial,
        } => volumes(
            &cache,
            &sink,
            *g,
            *n,
            lengths.as_ref().map(|l| &l.0[..]),
            *polynomial,
            cli.digits,
        )?,
        Cmd::Tau { g, n, d } => {
            let v = cache.tau_coefficient(&wpvol::TauKey::new(*g, *n, &d.0)?)?;
            sink.emit_text(&format!(
                "{}\n{}\n",
                pretty(&v),
                v.numeric(cli.digits).to_sci(cli.digits as usize)
            ))?;
            true
        }
        Cmd::Verify(v) => verify(&cache, &sink, v, cli.digits)?,
        Cmd::Thin(t) => thin(&cache, &sink, t)?,
        Cmd::Strata(s) => strata(&sink, s)?,
        Cmd::Geodesics(g) => geodesics(&sink, g)?,
        Cmd::Spectral(s) => spectral(&sink, s)?,
        Cmd::Cache(c) => {
            if matches!(c, CacheCmd::Import { .. }) && cli.cache.is_none() {
                return Err(usage("cache import needs --cache or WPVOL_CACHE"));
            }
            cache_cmd(&cache, &sink, c)?
        }
    };
    if let Some(p) = &cli.cache {
        if cache.stats().keys != before {
            save_cache(&cache, p)?;
        }
    }
    Ok(ok)
}

/// `c π^{2k} + …`, highest grade first.
fn pretty(v: &GradedRational) -> String {
    if v.is_zero() {
        return "0".into();
    }
    let mut terms: Vec<(i64, &Rational)> = v.terms().collect();
    terms.reverse();
    terms
        .iter()
        .map(|(g, c)| match g {
            0 => c.to_string(),
            1 => format!("{c} π^2"),
            _ => format!("{c} π^{}", 2 * g),
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

fn volumes(cache: &VolumeCache, sink: &Sink, g: u32, n: u32, lengths: Option<&[f64]>, poly: bool, digits: u32) -> Res {
    if !is_stable(g, n) || (n == 0 && g < 2) {
        return Err(usage(format!("(g,n) = ({g},{n}) is not a stable type")));
    }
    if poly {
        if n == 0 {
            return Err(usage("closed volumes are numbers; drop --polynomial"));
        }
        let p = cache.volume_polynomial(g, n)?;
        let mut t = Table::new(&["half_length_exponents", "coefficient", "value"]);
        let mut rows: Vec<_> = p.terms().collect();
        rows.sort_by(|a, b| b.0.cmp(a.0));
        for (e, c) in rows {
            let es: Vec<String> = e.iter().map(|x| x.to_string()).collect();
            t.push(vec![es.join(" "), pretty(c), c.numeric(digits).to_sci(digits as usize)]);
        }
        sink.emit(&t, &json!({"g": g, "n": n, "terms": t.rows}))?;
        return Ok(true);
    }
    let v = cache.volume_any(g, n)?;
    let mut text = format!(
        "V_{{{g},{n}}} = {}\n  ≈ {}\n",
        pretty(&v),
        v.numeric(digits).to_sci(digits as usize)
    );
    if let Some(ls) = lengths {
        if ls.len() != n as usize {
            return Err(usage(format!("--lengths needs {n} values")));
        }
        let x = cache.volume_eval(g, n, ls, digits)?;
        let ls: Vec<String> = ls.iter().map(|x| f(*x)).collect();
        text.push_str(&format!(
            "V_{{{g},{n}}}({}) ≈ {}\n",
            ls.join(", "),
            x.to_sci(digits as usize)
        ));
    }
    sink.emit_text(&text)?;
    Ok(true)
}

fn bound_report(sink: &Sink, r: &BoundReport) -> Res {
    let mut t = Table::new(&["params", "slack", "normalized"]).with_plot(2, 3, false, false);
    for p in &r.points {
        t.push(vec![p.params.clone(), f(p.slack), f(p.normalized)]);
    }
    let mut summary = r.summary_json();
    // wall time goes to stderr so artifacts stay byte-identical
    summary.as_object_mut().unwrap().remove("runtime_s");
    eprintln!("{}: {:.2}s", r.name, r.runtime_s);
    let mut full = serde_json::to_value(r).unwrap();
    full.as_object_mut().unwrap().remove("runtime_s");
    sink.emit(&t, &full)?;
    sink.summarize(&summary)?;
    Ok(r.pass)
}

fn verify(cache: &VolumeCache, sink: &Sink, v: &VerifyCmd, digits: u32) -> Res {
    let r = match v {
        VerifyCmd::Coeff { gmax, nmax, dmax } => verify_coeff_bound(*gmax, *nmax, *dmax, cache)?,
        VerifyCmd::Factorial { gmax, nmax } => vgn_factorial_bound(*gmax, *nmax, cache)?,
        VerifyCmd::Sinh { g, n, half } => {
            let half: Vec<Rational> = half
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<Rational>()
                        .map_err(|_| usage(format!("bad rational {s:?}")))
                })
                .collect::<Result<_, _>>()?;
            if half.len() != *n as usize {
                return Err(usage(format!("--half needs {n} values")));
            }
            sinh_ratio_check(*g, *n, &half, cache, digits)?
        }
        VerifyCmd::Product { g, parts, k, c1 } => {
            let parts: Vec<(u32, u32)> = parts
                .split(',')
                .map(|p| {
                    let (a, b) = p
                        .split_once(':')
                        .ok_or_else(|| usage(format!("part {p:?} is not g:n")))?;
                    let a = a.trim().parse().map_err(|_| usage(format!("bad genus in {p:?}")))?;
                    let b = b
                        .trim()
                        .parse()
                        .map_err(|_| usage(format!("bad boundary count in {p:?}")))?;
                    Ok((a, b))
                })
                .collect::<Result<_, Failure>>()?;
            product_bound_check(*g, &parts, *k, *c1, cache)?
        }
    };
    bound_report(sink, &r)
}

fn thin(cache: &VolumeCache, sink: &Sink, t: &ThinCmd) -> Res {
    match t {
        ThinCmd::Bracket { g, eps, nmax } => {
            let mut table = Table::new(&[
                "g",
                "eps",
                "n_max",
                "lower",
                "upper",
                "main_term",
                "width",
                "contains_main",
            ]);
            let mut full = Vec::new();
            for &g in &g.0 {
                for &e in &eps.0 {
                    let n = nmax.unwrap_or_else(|| default_depth(g).max(2));
                    let b = thin_bracket(g, e, n, cache)?;
                    table.push(vec![
                        g.to_string(),
                        f(e),
                        b.n_max.to_string(),
                        f(b.lower),
                        f(b.upper),
                        f(b.main_term),
                        f(b.width()),
                        b.contains_main.to_string(),
                    ]);
                    full.push(b);
                }
            }
            sink.emit(
                &table.with_plot(2, 5, false, true),
                &serde_json::to_value(&full).unwrap(),
            )?;
            Ok(true)
        }
        ThinCmd::Thick { g, eps, support } => {
            let spec = IntegralSpec::indicator(*support)?;
            let mut table = Table::new(&["g", "eps", "i_f", "mean", "bound", "ratio", "delta_upper"]);
            let mut full = Vec::new();
            for &g in &g.0 {
                for &e in &eps.0 {
                    let a = thick_average_bound(g, e, &spec, cache)?;
                    table.push(vec![
                        g.to_string(),
                        f(e),
                        f(a.i_f),
                        f(a.mean),
                        f(a.bound),
                        f(a.ratio),
                        f(a.delta_upper),
                    ]);
                    full.push(a);
                }
            }
            sink.emit(
                &table.with_plot(1, 6, false, false),
                &serde_json::to_value(&full).unwrap(),
            )?;
            Ok(true)
        }
        ThinCmd::Report {
            g,
            d,
            kappa,
            eps,
            support,
            require_decreasing,
        } => {
            let spec = IntegralSpec::indicator(*support)?;
            let mut table = Table::new(&[
                "g",
                "eps",
                "i_f",
                "thick_ratio",
                "nu_short",
                "nu_long",
                "delta_upper",
                "non_simple",
                "separating",
                "average_bound",
                "delta",
                "graph_hypotheses",
                "subsurface_hypothesis",
            ]);
            let mut full = Vec::new();
            for &g in &g.0 {
                let e = eps.unwrap_or(1.0 / (g as f64).ln());
                let r = geometric_main_report(g, *d, *kappa, e, &spec, cache)?;
                table.push(vec![
                    g.to_string(),
                    f(e),
                    f(r.i_f),
                    f(r.thick.ratio),
                    f(r.nu_short),
                    f(r.nu_long),
                    f(r.delta_upper),
                    f(r.non_simple),
                    f(r.separating),
                    f(r.average_bound),
                    f(r.delta),
                    r.graph_hypotheses.to_string(),
                    r.subsurface_hypothesis.to_string(),
                ]);
                full.push(r);
            }
            let decreasing = full.windows(2).all(|w| w[1].delta < w[0].delta);
            sink.emit(
                &table.with_plot(1, 11, false, false),
                &serde_json::to_value(&full).unwrap(),
            )?;
            sink.summarize(&json!({
                "genera": g.0,
                "delta": full.iter().map(|r| r.delta).collect::<Vec<_>>(),
                "delta_strictly_decreasing": decreasing,
            }))?;
            Ok(!*require_decreasing || decreasing)
        }
    }
}

fn strata(sink: &Sink, s: &StrataCmd) -> Res {
    match s {
        StrataCmd::Census { gmax, kmax, qmax } => {
            let rows = census(*gmax, *kmax, *qmax);
            let mut t = Table::new(&["g", "k", "q", "q_prime", "count", "labeled", "bound", "holds"]);
            for r in &rows {
                t.push(vec![
                    r.g.to_string(),
                    r.k.to_string(),
                    r.q.to_string(),
                    r.q_prime.to_string(),
                    r.count.to_string(),
                    r.labeled.to_string(),
                    r.bound.clone(),
                    r.holds.to_string(),
                ]);
            }
            let pass = rows.iter().all(|r| r.holds);
            sink.emit(&t, &serde_json::to_value(&rows).unwrap())?;
            sink.summarize(&json!({"cells": rows.len(), "pass": pass}))?;
            Ok(pass)
        }
        StrataCmd::List { g, k, q } => {
            let mut text = String::new();
            for s in enumerate_strata(*g, *k, *q) {
                text.push_str(&s.to_line());
                text.push('\n');
            }
            sink.emit_text(&text)?;
            Ok(true)
        }
    }
}

fn geodesics(sink: &Sink, c: &GeoCmd) -> Res {
    match c {
        GeoCmd::Annulus { delta, t, ell } => {
            let n = annulus_segment_count(*delta, *t, *ell)?;
            let b = annulus_bound(*t, *ell);
            sink.emit_text(&format!("count {n}\nbound {}\n", f(b)))?;
            Ok(n as f64 <= b)
        }
        GeoCmd::Sweep { l0, eps, ell, c } => {
            let mut t = Table::new(&["l0", "eps", "ell", "log_bound", "bound", "hypotheses_hold"])
                .with_plot(3, 4, false, false);
            for &l in &l0.0 {
                for &e in &eps.0 {
                    let p = TangleFreeParams::unchecked(0.0, l, e, *c)?;
                    for &x in &ell.0 {
                        let b = graph_bound(&p, x)?;
                        t.push(vec![
                            f(l),
                            f(e),
                            f(x),
                            f(b.log_value),
                            f(b.value),
                            b.hypotheses_hold.to_string(),
                        ]);
                    }
                }
            }
            let rows = t.rows.clone();
            sink.emit(&t, &json!(rows))?;
            Ok(true)
        }
        GeoCmd::Fit { l0, eps, c } => {
            let (cp, l, e) = fit_absorption_constant(&l0.0, &eps.0, *c)?;
            sink.emit_text(&format!("c_prime {}\nl0 {}\neps {}\n", f(cp), f(l), f(e)))?;
            Ok(true)
        }
    }
}

fn spectral(sink: &Sink, s: &SpectralCmd) -> Res {
    match s {
        SpectralCmd::Sweep {
            b,
            kappa,
            g,
            d,
            geo,
            sys,
            grid,
        } => {
            let model = SpectralModel::new(build_test_function(*grid)?)?;
            let cells: Vec<(f64, f64, f64)> =
                b.0.iter()
                    .flat_map(|&b| kappa.0.iter().flat_map(move |&k| g.0.iter().map(move |&g| (b, k, g))))
                    .collect();
            let reports: Vec<ProbabilityReport> = cells
                .par_iter()
                .map(|&(b, k, g)| probability_bound(&model, g, b, k, *d, *geo, *sys, 1e-12))
                .collect::<Result<_, _>>()?;
            let mut t =
                Table::new(&["g", "b", "kappa", "l_star", "p_bound", "exponent_observed"]).with_plot(1, 5, true, true);
            for r in &reports {
                t.push(vec![
                    f(r.g),
                    f(r.b),
                    f(r.kappa),
                    f(r.l_star),
                    f(r.p_bound),
                    f(r.exponent_observed),
                ]);
            }
            let fits: Vec<_> = reports
                .chunks(g.0.len())
                .map(|c| {
                    let worst = c
                        .iter()
                        .map(|r| (r.l_star / r.l_balance - 1.0).abs())
                        .fold(0.0, f64::max);
                    json!({
                        "b": c[0].b,
                        "kappa": c[0].kappa,
                        "loglog_slope": if c.len() > 1 { Some(loglog_slope(c)) } else { None },
                        "exponent_formula": c[0].exponent_formula,
                        "max_rel_l_star_deviation": worst,
                        "unimodal": c.iter().all(|r| r.unimodal),
                    })
                })
                .collect();
            sink.emit(&t, &serde_json::to_value(&reports).unwrap())?;
            sink.summarize(&json!({"fits": fits}))?;
            Ok(true)
        }
        SpectralCmd::Check { grid, l, budget } => {
            let base = build_test_function(*grid)?;
            let mut profiles = vec![("base".to_string(), base.clone())];
            for &x in &l.0 {
                profiles.push((format!("L={}", f(x)), translate_pair(&base, x)?));
            }
            let rs: Vec<f64> = (0..20).map(|i| 0.4 * i as f64).collect();
            let ts: Vec<f64> = (0..=10).map(|i| 0.05 * i as f64).collect();
            let mut t = Table::new(&["profile", "i_ff", "fhat_half", "gap", "limit", "identity_error", "pass"]);
            let mut all = true;
            for (name, p) in &profiles {
                let c = i_ff_check(p, *budget)?;
                let ident = if name == "base" {
                    0.0
                } else {
                    transform_identity_error(&base, p, &rs, &ts)?
                };
                let pass = c.pass && ident < 1e-8;
                all &= pass;
                t.push(vec![
                    name.clone(),
                    f(c.i_ff),
                    f(c.fhat_half),
                    f(c.gap),
                    f(4.0 * c.norm1 + budget),
                    f(ident),
                    pass.to_string(),
                ]);
            }
            let rows = t.rows.clone();
            sink.emit(&t, &json!(rows))?;
            sink.summarize(&json!({"profiles": profiles.len(), "pass": all}))?;
            Ok(all)
        }
        SpectralCmd::Profile { grid, l } => {
            let base = build_test_function(*grid)?;
            let p = match l {
                Some(x) => translate_pair(&base, *x)?,
                None => base,
            };
            sink.emit_text(&p.dump())?;
            Ok(true)
        }
    }
}

fn cache_cmd(cache: &VolumeCache, sink: &Sink, c: &CacheCmd) -> Res {
    match c {
        CacheCmd::Export { upto } => {
            if let Some(s) = upto {
                let pairs: Vec<(u32, u32)> = (0..=s / 2 + 1)
                    .flat_map(|g| (1..=s + 2).map(move |n| (g, n)))
                    .filter(|&(g, n)| is_stable(g, n) && 2 * g + n <= s + 2)
                    .collect();
                cache.ensure_pairs(&pairs)?;
            }
            let mut buf = Vec::new();
            cache.save(&mut buf)?;
            sink.emit_text(&String::from_utf8(buf).expect("cache text is UTF-8"))?;
            Ok(true)
        }
        CacheCmd::Import { file } => {
            let n = load_into(cache, file)?;
            eprintln!("loaded {n} keys");
            Ok(true)
        }
        CacheCmd::Merge { a, b } => {
            let left = VolumeCache::new();
            load_into(&left, a)?;
            let right = VolumeCache::new();
            load_into(&right, b)?;
            left.merge(&right)?;
            let mut buf = Vec::new();
            left.save(&mut buf)?;
            sink.emit_text(&String::from_utf8(buf).expect("cache text is UTF-8"))?;
            Ok(true)
        }
        CacheCmd::Verify { file } => {
            let target = match file {
                Some(p) => {
                    let c = VolumeCache::new();
                    load_into(&c, p)?;
                    c
                }
                None => {
                    let c = VolumeCache::new();
                    c.merge(cache)?;
                    c
                }
            };
            target.verify()?;
            eprintln!("{} pairs verified", target.pairs().len());
            Ok(true)
        }
        CacheCmd::Stats => {
            let s = cache.stats();
            sink.emit_text(&format!(
                "version {}\npairs {}\nkeys {}\n",
                cache.version(),
                s.pairs,
                s.keys
            ))?;
            Ok(true)
        }
    }
}
