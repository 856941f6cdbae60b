//! Textual sources for test functions.
//!
//! A source is one of
//! - a named generator: `dirac`, `box:R`, `gauss:S`, `random:SEED`;
//! - a path to a CSV file with one value per row, either `re` or `re,im`;
//! - inline comma-separated values, each real or complex (`1.5`, `2-0.5i`).

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{LtpError, Result};
use crate::group::{gaussian_probe, GroupKind, GroupModel};
use crate::lp::GFunction;
use crate::numeric::{random_complex_vec, seeded_rng, stream_id};

/// Builds the function named by `text` on `group`.
pub fn parse_source(text: &str, group: &Arc<GroupModel>) -> Result<GFunction> {
    let text = text.trim();
    if text.is_empty() {
        return Err(LtpError::parse(text, "empty function source"));
    }
    if let Some(f) = generator(text, group)? {
        return Ok(f);
    }
    let path = Path::new(text);
    if path.is_file() {
        let body = std::fs::read_to_string(path)?;
        return GFunction::new(group.clone(), parse_csv(&body)?);
    }
    let values = text
        .split(',')
        .map(|tok| parse_complex(tok.trim()))
        .collect::<Result<Vec<_>>>()?;
    GFunction::new(group.clone(), values)
}

fn generator(text: &str, group: &Arc<GroupModel>) -> Result<Option<GFunction>> {
    let (name, arg) = match text.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (text, None),
    };
    let number = |what: &str| -> Result<f64> {
        let a = arg.ok_or_else(|| LtpError::parse(text, format!("`{name}` needs {what}")))?;
        a.trim()
            .parse::<f64>()
            .map_err(|e| LtpError::parse(text, e.to_string()))
    };
    let f = match name {
        "dirac" if arg.is_none() => GFunction::dirac(group, group.identity()),
        "box" => {
            let r = number("a radius")?;
            if !(r >= 0.0) {
                return Err(LtpError::parse(text, "box radius must be nonnegative"));
            }
            let set: Vec<usize> = (0..group.size())
                .filter(|&i| group.chart_distance(i) <= r + 1e-12)
                .collect();
            GFunction::indicator(group, set)
        }
        "gauss" => {
            let s = number("a width")?;
            if !(s > 0.0) {
                return Err(LtpError::parse(text, "gaussian width must be positive"));
            }
            GFunction::from_fn(group, |i| {
                let d = group.chart_distance(i) / s;
                Complex64::new((-0.5 * d * d).exp(), 0.0)
            })?
        }
        "random" => {
            let seed = arg
                .ok_or_else(|| LtpError::parse(text, "`random` needs a seed"))?
                .trim()
                .parse::<u64>()
                .map_err(|e| LtpError::parse(text, e.to_string()))?;
            let mut rng = seeded_rng(seed, stream_id("source"));
            let mut values = random_complex_vec(&mut rng, group.size());
            // keep mass away from the window edge on infinite groups
            if group.kind() != GroupKind::Finite {
                let probe = gaussian_probe(group);
                for (v, w) in values.iter_mut().zip(probe.values()) {
                    *v *= w;
                }
            }
            GFunction::new(group.clone(), values)?
        }
        _ => return Ok(None),
    };
    Ok(Some(f))
}

/// `re` or `re,im` per non-empty row; `#` starts a comment.
pub fn parse_csv(body: &str) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    for (lineno, line) in body.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = |e: String| LtpError::parse(line, format!("row {}: {e}", lineno + 1));
        let z = match cols.as_slice() {
            [one] => parse_complex(one).map_err(|e| bad(e.to_string()))?,
            [re, im] => Complex64::new(
                re.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                im.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            ),
            _ => return Err(bad(format!("expected 1 or 2 columns, found {}", cols.len()))),
        };
        out.push(z);
    }
    Ok(out)
}

fn parse_complex(tok: &str) -> Result<Complex64> {
    tok.parse::<Complex64>()
        .map_err(|_| LtpError::parse(tok, "not a real or complex number"))
}
