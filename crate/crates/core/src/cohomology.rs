//! Small-divisor difference equations `S_n phi = eta` and the comparison operators `L_n`, `R_n`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::CohomologyError;
use crate::fourier::{FourierSeries, FrequencyBasis};

/// Relative size of an input average that still counts as zero.
pub const MEAN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FloorPolicy {
    Error,
    Clamp,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivisorFloor {
    pub floor: f64,
    pub policy: FloorPolicy,
}

impl Default for DivisorFloor {
    fn default() -> Self {
        Self {
            floor: 1e-14,
            policy: FloorPolicy::Error,
        }
    }
}

impl DivisorFloor {
    pub fn new(floor: f64, policy: FloorPolicy) -> Option<Self> {
        (floor > 0.0 && floor.is_finite()).then_some(Self { floor, policy })
    }
}

/// Which unit shift sits in the denominator of `L_n^{+-}` and `R_n^{+-}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveS {
    pub phi: FourierSeries,
    /// smallest `|e^{i n k.omega alpha} - 1|` met, before clamping
    pub min_divisor: f64,
    /// modes whose divisor was raised to the floor
    pub clamped: usize,
    /// `max_k 1 / |divisor|` over the modes actually divided
    pub max_gain: f64,
}

fn reduce(x: f64) -> f64 {
    let r = x - TAU * (x / TAU).round();
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// `e^{i x} - 1` without cancellation for small reduced `x`.
pub fn unit_divisor(x: f64) -> Complex64 {
    let r = reduce(x);
    let s = (0.5 * r).sin();
    Complex64::new(-2.0 * s * s, r.sin())
}

fn check_mean(f: &FourierSeries) -> Result<(), CohomologyError> {
    let average = f.average().norm();
    let tolerance = MEAN_TOL * f.weighted_norm(0.0);
    if average > tolerance {
        return Err(CohomologyError::NonzeroAverage { average, tolerance });
    }
    Ok(())
}

fn guarded(d: Complex64, floor: &DivisorFloor, mode: impl FnOnce() -> String) -> Result<(Complex64, bool), CohomologyError> {
    let m = d.norm();
    if m >= floor.floor {
        return Ok((d, false));
    }
    match floor.policy {
        FloorPolicy::Error => Err(CohomologyError::DivisorBelowFloor {
            mode: mode(),
            divisor: m,
            floor: floor.floor,
        }),
        FloorPolicy::Clamp if m == 0.0 => Ok((Complex64::new(floor.floor, 0.0), true)),
        FloorPolicy::Clamp => Ok((d * (floor.floor / m), true)),
    }
}

/// Zero-average solution of `phi o T_{n omega alpha} - phi = eta`.
///
/// The input average must vanish to `MEAN_TOL |eta|_0`; what remains is dropped.
pub fn solve_s(n: i32, eta: &FourierSeries, basis: &FrequencyBasis, floor: &DivisorFloor) -> Result<SolveS, CohomologyError> {
    if n == 0 {
        return Err(CohomologyError::ZeroShift);
    }
    check_mean(eta)?;
    let theta = basis.rotation();
    let set = eta.set();
    let mut phi = FourierSeries::zeros(set).with_loss(eta.loss().clone());
    let mut min_divisor = f64::INFINITY;
    let mut max_gain: f64 = 0.0;
    let mut clamped = 0;
    for (i, (c, k)) in eta.coeffs().iter().zip(set.members()).enumerate() {
        if k.is_zero() {
            continue;
        }
        let d = unit_divisor(n as f64 * k.dot(&theta));
        min_divisor = min_divisor.min(d.norm());
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let (d, was_clamped) = guarded(d, floor, || k.to_string())?;
        clamped += was_clamped as usize;
        max_gain = max_gain.max(1.0 / d.norm());
        phi.coeffs_mut()[i] = c / d;
    }
    Ok(SolveS {
        phi,
        min_divisor,
        clamped,
        max_gain,
    })
}

/// `f o T_{n omega alpha} - f`.
pub fn apply_s(n: i32, f: &FourierSeries, basis: &FrequencyBasis) -> FourierSeries {
    let theta = basis.rotation();
    f.map_diagonal(|k| unit_divisor(n as f64 * k.dot(&theta)))
}

/// Diagonal value `(e^{i n x} - 1) / (e^{+-i x} - 1)` at `x = k.omega alpha`.
pub fn comparison_multiplier(n: i32, sign: Sign, x: f64, floor: &DivisorFloor) -> Result<Complex64, CohomologyError> {
    let num = unit_divisor(n as f64 * x);
    let (den, _) = guarded(unit_divisor(sign.value() * x), floor, || format!("k.omega.alpha = {x}"))?;
    Ok(num / den)
}

fn apply_comparison(n: i32, sign: Sign, f: &FourierSeries, basis: &FrequencyBasis, floor: &DivisorFloor) -> Result<FourierSeries, CohomologyError> {
    let mut out = FourierSeries::zeros(f.set()).with_loss(f.loss().clone());
    if n == 0 {
        return Ok(out);
    }
    let theta = basis.rotation();
    for (i, (c, k)) in f.coeffs().iter().zip(f.set().members()).enumerate() {
        if k.is_zero() || *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        out.coeffs_mut()[i] = c * comparison_multiplier(n, sign, k.dot(&theta), floor)?;
    }
    Ok(out)
}

/// `L_n^{+-} = S_{+-1}^{-1} S_n`; the zero mode is dropped.
pub fn apply_l(n: i32, sign: Sign, f: &FourierSeries, basis: &FrequencyBasis, floor: &DivisorFloor) -> Result<FourierSeries, CohomologyError> {
    apply_comparison(n, sign, f, basis, floor)
}

/// `R_n^{+-} = S_n S_{+-1}^{-1}` on zero-average series.
pub fn apply_r(n: i32, sign: Sign, f: &FourierSeries, basis: &FrequencyBasis, floor: &DivisorFloor) -> Result<FourierSeries, CohomologyError> {
    check_mean(f)?;
    apply_comparison(n, sign, f, basis, floor)
}

/// `|m_k|` for every nonzero member of the set.
pub fn multiplier_magnitudes(n: i32, sign: Sign, f: &FourierSeries, basis: &FrequencyBasis, floor: &DivisorFloor) -> Result<Vec<f64>, CohomologyError> {
    let theta = basis.rotation();
    f.set()
        .members()
        .iter()
        .filter(|k| !k.is_zero())
        .map(|k| comparison_multiplier(n, sign, k.dot(&theta), floor).map(|m| m.norm()))
        .collect()
}
