//! Plain-text coefficient dumps.
//!
//! ```text
//! N 1
//! s 1
//! K 64
//! rho 0.2
//!  0 0
//! 1:-1 0.0123 -0.5
//! ```
//!
//! Every data line holds a multi-index in `j:k_j` form followed by the real
//! and imaginary parts; the zero index is the empty string. Numbers are
//! written in shortest round-trip form so load(save(f)) is bit-identical.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use super::FourierSeries;
use crate::error::IndexError;
use crate::index_space::{IndexSet, MultiIndex, DEFAULT_CAP};

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Index(#[from] IndexError),
}

pub fn to_string(f: &FourierSeries, rho: f64) -> String {
    let set = f.set();
    let mut out = String::new();
    writeln!(out, "N {}", set.n()).unwrap();
    writeln!(out, "s {:?}", set.s()).unwrap();
    writeln!(out, "K {:?}", set.radius()).unwrap();
    writeln!(out, "rho {rho:?}").unwrap();
    for (k, c) in set.members().iter().zip(f.coeffs()) {
        writeln!(out, "{} {:?} {:?}", k, c.re, c.im).unwrap();
    }
    out
}

fn header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<String, DumpError> {
    let (no, line) = lines.next().ok_or(DumpError::Malformed {
        line: 0,
        reason: format!("missing header {key}"),
    })?;
    match line.trim().split_once(' ') {
        Some((k, v)) if k == key => Ok(v.trim().to_string()),
        _ => Err(DumpError::Malformed {
            line: no + 1,
            reason: format!("expected header `{key} <value>`"),
        }),
    }
}

/// Parse a dump; returns the series and the recorded radius.
pub fn from_str(text: &str) -> Result<(FourierSeries, f64), DumpError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim_start().starts_with('#'));
    let bad = |line: usize, reason: &str| DumpError::Malformed {
        line: line + 1,
        reason: reason.to_string(),
    };
    let n: usize = header(&mut lines, "N")?.parse().map_err(|_| bad(0, "bad N"))?;
    let s: f64 = header(&mut lines, "s")?.parse().map_err(|_| bad(1, "bad s"))?;
    let k: f64 = header(&mut lines, "K")?.parse().map_err(|_| bad(2, "bad K"))?;
    let rho: f64 = header(&mut lines, "rho")?.parse().map_err(|_| bad(3, "bad rho"))?;
    let set = Arc::new(IndexSet::enumerate_with_cap(n, k, s, DEFAULT_CAP)?);
    let mut f = FourierSeries::zeros(&set);
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 2 {
            return Err(bad(no, "expected `<index> <re> <im>`"));
        }
        let im: f64 = toks.pop().unwrap().parse().map_err(|_| bad(no, "bad imaginary part"))?;
        let re: f64 = toks.pop().unwrap().parse().map_err(|_| bad(no, "bad real part"))?;
        let idx: MultiIndex = toks.join(" ").parse().map_err(|e: IndexError| bad(no, &e.to_string()))?;
        let p = set
            .position(&idx)
            .ok_or_else(|| bad(no, &format!("mode [{idx}] outside the index set")))?;
        f.coeffs_mut()[p] = Complex64::new(re, im);
    }
    Ok((f, rho))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let set = Arc::new(IndexSet::enumerate(2, 5.0, 1.5).unwrap());
        let mut f = FourierSeries::zeros(&set);
        for (i, c) in f.coeffs_mut().iter_mut().enumerate() {
            *c = Complex64::new((i as f64 * 0.7311).sin() / 3.0, 1.0 / (i as f64 + 0.1));
        }
        let text = to_string(&f, 0.25);
        let (g, rho) = from_str(&text).unwrap();
        assert_eq!(rho, 0.25);
        assert_eq!(f.coeffs(), g.coeffs());
        assert_eq!(to_string(&g, rho), text);
    }

    #[test]
    fn malformed_lines_are_reported() {
        assert!(from_str("N 1\ns 1\nK 3\n").is_err());
        let err = from_str("N 1\ns 1\nK 3\nrho 0.1\n1:9 0 0\n").unwrap_err();
        assert!(err.to_string().contains("line 5"), "{err}");
    }
}
