//! Finite Diophantine certificates over a truncated index set.

use std::f64::consts::TAU;

use crate::error::DiophantineError;
use crate::index_space::{IndexSet, MultiIndex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiophantineStyle {
    /// weight `prod_j (1 + <<j>>^{1+tau} |k_j|^{1+tau})`
    Product,
    /// weight `|k|_1^tau`
    Power,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiophantineParams {
    pub nu: f64,
    pub tau: f64,
    pub style: DiophantineStyle,
    /// Power style only: restrict to indices supported in `{1..level}`.
    pub level: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiophantineReport {
    pub passed: bool,
    pub nu: f64,
    pub tau: f64,
    pub style: DiophantineStyle,
    pub empirical_nu: f64,
    /// `empirical_nu / nu`
    pub margin: f64,
    pub witness: Option<MultiIndex>,
    pub witness_divisor: Option<f64>,
    pub min_divisor: f64,
    pub min_divisor_mode: MultiIndex,
}

/// Distance of `omega alpha . k` to `2 pi Z`.
pub fn divisor(omega: f64, alpha: &[f64], k: &MultiIndex) -> Result<f64, DiophantineError> {
    if k.is_zero() {
        return Err(DiophantineError::ZeroIndex);
    }
    let x = omega * k.dot(alpha);
    Ok((x - TAU * (x / TAU).round()).abs())
}

pub fn weight(k: &MultiIndex, tau: f64, style: DiophantineStyle) -> f64 {
    match style {
        DiophantineStyle::Product => k
            .pairs()
            .map(|(j, v)| 1.0 + (j as f64).powf(1.0 + tau) * (v.unsigned_abs() as f64).powf(1.0 + tau))
            .product(),
        DiophantineStyle::Power => (k.norm_1() as f64).powf(tau),
    }
}

fn scan<'a>(
    omega: f64,
    alpha: &[f64],
    set: &'a IndexSet,
    tau: f64,
    style: DiophantineStyle,
    level: Option<usize>,
) -> impl Iterator<Item = (&'a MultiIndex, f64, f64)> + 'a {
    let alpha = alpha.to_vec();
    set.members()
        .iter()
        .filter(move |k| !k.is_zero() && level.is_none_or(|l| k.max_position() <= l))
        .map(move |k| {
            let d = divisor(omega, &alpha, k).expect("nonzero index");
            (k, d, d * weight(k, tau, style))
        })
}

/// Largest `nu` for which the condition holds on `set`, with the minimizing index.
pub fn empirical_nu_with_witness(
    omega: f64,
    alpha: &[f64],
    set: &IndexSet,
    tau: f64,
    style: DiophantineStyle,
) -> Result<(f64, MultiIndex), DiophantineError> {
    scan(omega, alpha, set, tau, style, None)
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .map(|(k, _, v)| (v, k.clone()))
        .ok_or(DiophantineError::EmptySet)
}

pub fn empirical_nu(omega: f64, alpha: &[f64], set: &IndexSet, tau: f64, style: DiophantineStyle) -> Result<f64, DiophantineError> {
    empirical_nu_with_witness(omega, alpha, set, tau, style).map(|(v, _)| v)
}

/// Smallest `|e^{i k.omega alpha} - 1|`-type divisor on the set, with its mode.
pub fn min_divisor(omega: f64, alpha: &[f64], set: &IndexSet) -> Result<(f64, MultiIndex), DiophantineError> {
    scan(omega, alpha, set, 1.0, DiophantineStyle::Power, None)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, d, _)| (d, k.clone()))
        .ok_or(DiophantineError::EmptySet)
}

pub fn check(params: &DiophantineParams, omega: f64, alpha: &[f64], set: &IndexSet) -> DiophantineReport {
    let level = match params.style {
        DiophantineStyle::Power => params.level,
        DiophantineStyle::Product => None,
    };
    let mut best: Option<(MultiIndex, f64, f64)> = None;
    let mut mind: Option<(MultiIndex, f64)> = None;
    for (k, d, v) in scan(omega, alpha, set, params.tau, params.style, level) {
        if best.as_ref().is_none_or(|b| v < b.2) {
            best = Some((k.clone(), d, v));
        }
        if mind.as_ref().is_none_or(|m| d < m.1) {
            mind = Some((k.clone(), d));
        }
    }
    let (empirical, witness, witness_divisor) = match &best {
        Some((k, d, v)) => (*v, Some(k.clone()), Some(*d)),
        None => (f64::INFINITY, None, None),
    };
    let passed = empirical >= params.nu;
    let (min_divisor_mode, min_divisor) = mind.unwrap_or((MultiIndex::zero(), f64::INFINITY));
    DiophantineReport {
        passed,
        nu: params.nu,
        tau: params.tau,
        style: params.style,
        empirical_nu: empirical,
        margin: empirical / params.nu,
        witness: if passed { None } else { witness },
        witness_divisor: if passed { None } else { witness_divisor },
        min_divisor,
        min_divisor_mode,
    }
}
