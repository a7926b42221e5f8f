//! Parameter lists on the command line.
//!
//! A list is comma separated; each item is a number or a range:
//! `a:b` (integers a..=b), `a:b:step` (linear), `a:b:log` (powers of ten
//! from a to b), `a:b:log:n` (n log-spaced points).

fn num(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not finite: {s:?}"))
    }
}

fn item(s: &str, out: &mut Vec<f64>) -> Result<(), String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [x] => out.push(num(x)?),
        [a, b] => {
            let (a, b) = (num(a)?, num(b)?);
            if a.fract() != 0.0 || b.fract() != 0.0 {
                return Err(format!("{s}: two-part ranges take integers"));
            }
            let mut x = a;
            while x <= b {
                out.push(x);
                x += 1.0;
            }
        }
        [a, b, "log"] => {
            let (a, b) = (num(a)?, num(b)?);
            if !(a > 0.0) {
                return Err(format!("{s}: log range needs a positive start"));
            }
            let mut k = 0;
            loop {
                let x = a * 10f64.powi(k);
                if x > b * (1.0 + 1e-12) {
                    break;
                }
                out.push(x);
                k += 1;
            }
        }
        [a, b, "log", n] => {
            let (a, b) = (num(a)?, num(b)?);
            let n: usize = n.parse().map_err(|_| format!("{s}: bad point count"))?;
            if !(a > 0.0 && b >= a) || n < 2 {
                return Err(format!("{s}: need 0 < a <= b and at least 2 points"));
            }
            let (la, lb) = (a.ln(), b.ln());
            out.extend((0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()));
        }
        [a, b, step] => {
            let (a, b, h) = (num(a)?, num(b)?, num(step)?);
            if !(h > 0.0) {
                return Err(format!("{s}: step must be positive"));
            }
            let n = ((b - a) / h + 1e-9).floor();
            if n < 0.0 {
                return Err(format!("{s}: empty range"));
            }
            out.extend((0..=n as usize).map(|i| a + h * i as f64));
        }
        _ => return Err(format!("cannot parse range {s:?}")),
    }
    Ok(())
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        item(part.trim(), &mut out)?;
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

pub fn parse_u32_list(s: &str) -> Result<Vec<u32>, String> {
    parse_f64_list(s)?
        .into_iter()
        .map(|x| {
            if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
                Ok(x as u32)
            } else {
                Err(format!("expected a non-negative integer, got {x}"))
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct F64List(pub Vec<f64>);

#[derive(Clone, Debug)]
pub struct U32List(pub Vec<u32>);

pub fn f64_list(s: &str) -> Result<F64List, String> {
    parse_f64_list(s).map(F64List)
}

pub fn u32_list(s: &str) -> Result<U32List, String> {
    parse_u32_list(s).map(U32List)
}
