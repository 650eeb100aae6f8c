//! Truncated Fourier series on the torus with the rho-weighted analytic norm.

mod basis;
mod compose;
pub mod dump;
mod loss;

use std::collections::HashMap;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::SeriesError;
use crate::index_space::{IndexSet, MultiIndex};

pub use basis::{golden_omega, FrequencyBasis};
pub use compose::{compose_shell, exp_i_series, PowerCache, EXP_TERM_CAP, SERIES_TOL};
pub use loss::TruncationLoss;

const MAX_RECIPROCAL_ITERS: usize = 60;

// Drop accumulation switches from a dense buffer to a hash map above this size.
const DENSE_DROP_LIMIT: usize = 1 << 20;

/// Complex coefficients aligned with the members of an [`IndexSet`].
#[derive(Clone, Debug)]
pub struct FourierSeries {
    set: Arc<IndexSet>,
    coeffs: Vec<Complex64>,
    loss: TruncationLoss,
}

impl PartialEq for FourierSeries {
    fn eq(&self, other: &Self) -> bool {
        same_set(&self.set, &other.set) && self.coeffs == other.coeffs
    }
}

fn same_set(a: &Arc<IndexSet>, b: &Arc<IndexSet>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl FourierSeries {
    pub fn zeros(set: &Arc<IndexSet>) -> Self {
        Self {
            set: Arc::clone(set),
            coeffs: vec![Complex64::new(0.0, 0.0); set.len()],
            loss: TruncationLoss::default(),
        }
    }

    pub fn constant(set: &Arc<IndexSet>, c: impl Into<Complex64>) -> Self {
        let mut f = Self::zeros(set);
        f.coeffs[set.zero_position()] = c.into();
        f
    }

    /// Coefficients in member order; panics on a length mismatch.
    pub fn from_coeffs(set: &Arc<IndexSet>, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), set.len(), "coefficient vector does not match the index set");
        Self {
            set: Arc::clone(set),
            coeffs,
            loss: TruncationLoss::default(),
        }
    }

    /// Sum of `c e^{i k.sigma}` terms; modes outside the set are an error.
    pub fn from_modes(set: &Arc<IndexSet>, modes: &[(MultiIndex, Complex64)]) -> Result<Self, SeriesError> {
        let mut f = Self::zeros(set);
        for (k, c) in modes {
            let p = set.position(k).ok_or_else(|| SeriesError::OutsideSet(k.to_string()))?;
            f.coeffs[p] += c;
        }
        Ok(f)
    }

    /// `amp * cos(k.sigma + phase)`.
    pub fn cos_mode(set: &Arc<IndexSet>, k: &MultiIndex, amp: f64, phase: f64) -> Result<Self, SeriesError> {
        let c = Complex64::from_polar(0.5 * amp, phase);
        if k.is_zero() {
            return Ok(Self::constant(set, amp * phase.cos()));
        }
        Self::from_modes(set, &[(k.clone(), c), (k.neg(), c.conj())])
    }

    /// `amp * sin(k.sigma + phase)`.
    pub fn sin_mode(set: &Arc<IndexSet>, k: &MultiIndex, amp: f64, phase: f64) -> Result<Self, SeriesError> {
        Self::cos_mode(set, k, amp, phase - std::f64::consts::FRAC_PI_2)
    }

    pub fn set(&self) -> &Arc<IndexSet> {
        &self.set
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of `e^{i k.sigma}`, zero if `k` is outside the set.
    pub fn coeff(&self, k: &MultiIndex) -> Complex64 {
        self.set
            .position(k)
            .map_or(Complex64::new(0.0, 0.0), |p| self.coeffs[p])
    }

    pub fn loss(&self) -> &TruncationLoss {
        &self.loss
    }

    pub fn with_loss(mut self, loss: TruncationLoss) -> Self {
        self.loss = loss;
        self
    }

    pub fn clear_loss(&mut self) {
        self.loss = TruncationLoss::default();
    }

    pub fn is_compatible(&self, other: &Self) -> bool {
        same_set(&self.set, &other.set)
    }

    fn expect_compatible(&self, other: &Self) {
        assert!(self.is_compatible(other), "series live on incompatible index sets");
    }

    /// `sum_k |c_k| e^{rho |k|_s}`.
    pub fn weighted_norm(&self, rho: f64) -> f64 {
        self.coeffs
            .iter()
            .zip(self.set.weights())
            .map(|(c, &w)| if *c == Complex64::new(0.0, 0.0) { 0.0 } else { c.norm() * (rho * w).exp() })
            .sum()
    }

    pub fn sup_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient-wise difference.
    pub fn sup_diff(&self, other: &Self) -> f64 {
        self.expect_compatible(other);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::new(0.0, 0.0))
    }

    /// `<f>`, the zero mode.
    pub fn average(&self) -> Complex64 {
        self.coeffs[self.set.zero_position()]
    }

    pub fn drop_mean(mut self) -> Self {
        let z = self.set.zero_position();
        self.coeffs[z] = Complex64::new(0.0, 0.0);
        self
    }

    pub fn add_scalar(mut self, c: impl Into<Complex64>) -> Self {
        let z = self.set.zero_position();
        self.coeffs[z] += c.into();
        self
    }

    pub fn scale(&self, c: impl Into<Complex64>) -> Self {
        let c = c.into();
        Self {
            set: Arc::clone(&self.set),
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
            loss: self.loss.scaled(c.norm()),
        }
    }

    pub fn conj(&self) -> Self {
        let mut out = Self::zeros(&self.set);
        for (i, c) in self.coeffs.iter().enumerate() {
            out.coeffs[self.set.neg_position(i)] = c.conj();
        }
        out.loss = self.loss.clone();
        out
    }

    /// True if `c_{-k} = conj(c_k)` to `tol` for every mode.
    pub fn is_real(&self, tol: f64) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(i, c)| (c - self.coeffs[self.set.neg_position(i)].conj()).norm() <= tol)
    }

    /// Nearest real-valued series (average of f and its reflection).
    pub fn realify(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.coeffs.len() {
            let j = self.set.neg_position(i);
            out.coeffs[i] = 0.5 * (self.coeffs[i] + self.coeffs[j].conj());
        }
        out
    }

    /// Coefficient-wise map `c_k <- m(k) c_k`.
    pub fn map_diagonal(&self, mut m: impl FnMut(&MultiIndex) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.set.members())
            .map(|(c, k)| if *c == Complex64::new(0.0, 0.0) { *c } else { c * m(k) })
            .collect();
        Self {
            set: Arc::clone(&self.set),
            coeffs,
            loss: self.loss.clone(),
        }
    }

    /// `f o T_x`, i.e. coefficients `c_k e^{i k.x}`.
    pub fn shift(&self, x: &[f64]) -> Self {
        assert_eq!(x.len(), self.set.n(), "shift vector must have one entry per frequency");
        self.map_diagonal(|k| Complex64::from_polar(1.0, k.dot(x)))
    }

    /// `f o T_{m omega alpha}`.
    pub fn shift_orbit(&self, basis: &FrequencyBasis, m: f64) -> Self {
        let x: Vec<f64> = basis.rotation().iter().map(|t| t * m).collect();
        self.shift(&x)
    }

    /// `alpha . grad f`.
    pub fn derive_alpha(&self, alpha: &[f64]) -> Self {
        self.map_diagonal(|k| Complex64::new(0.0, k.dot(alpha)))
    }

    /// Multiply by `e^{i m.sigma}`; modes leaving the set are dropped into the loss.
    pub fn mul_monomial(&self, m: &MultiIndex) -> Self {
        if m.is_zero() {
            return self.clone();
        }
        let mut out = Self::zeros(&self.set);
        let mut loss = self.loss.clone();
        let s = self.set.s();
        for (c, k) in self.coeffs.iter().zip(self.set.members()) {
            if *c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let target = k.add(m);
            match self.set.position(&target) {
                Some(p) => out.coeffs[p] += c,
                None => loss.record(target.norm_s(s), c.norm()),
            }
        }
        out.loss = loss;
        out
    }

    /// Truncated product; the result carries the input losses plus the mass dropped here.
    pub fn multiply(&self, other: &Self) -> Result<Self, SeriesError> {
        let (mut out, dropped) = self.multiply_parts(other)?;
        let mut loss = dropped;
        loss.merge(&self.loss);
        loss.merge(&other.loss);
        out.loss = loss;
        Ok(out)
    }

    /// Truncated product and the loss of this product alone (the result carries no loss).
    pub fn multiply_parts(&self, other: &Self) -> Result<(Self, TruncationLoss), SeriesError> {
        if !self.is_compatible(other) {
            return Err(SeriesError::IncompatibleSets);
        }
        let set = &self.set;
        let zero = Complex64::new(0.0, 0.0);
        let a: Vec<(usize, Complex64)> = nonzero(&self.coeffs);
        let b: Vec<(usize, Complex64)> = nonzero(&other.coeffs);
        let mut out = vec![zero; set.len()];
        let mut loss = TruncationLoss::default();
        let s = set.s();
        match set.dense_lookup() {
            Some(d) if d.len() <= DENSE_DROP_LIMIT => {
                let mut dropped = vec![zero; d.len()];
                let mut any_drop = false;
                for &(i, ca) in &a {
                    let ki = d.keys[i];
                    for &(j, cb) in &b {
                        let key = ki + d.keys[j] - d.base;
                        match d.lut[key] {
                            crate::index_space::DenseLookup::EMPTY => {
                                dropped[key] += ca * cb;
                                any_drop = true;
                            }
                            p => out[p as usize] += ca * cb,
                        }
                    }
                }
                if any_drop {
                    for (key, c) in dropped.iter().enumerate() {
                        if *c != zero {
                            loss.record(d.decode(key).norm_s(s), c.norm());
                        }
                    }
                }
            }
            Some(d) => {
                let mut dropped: HashMap<usize, Complex64> = HashMap::new();
                for &(i, ca) in &a {
                    let ki = d.keys[i];
                    for &(j, cb) in &b {
                        let key = ki + d.keys[j] - d.base;
                        match d.lut[key] {
                            crate::index_space::DenseLookup::EMPTY => *dropped.entry(key).or_insert(zero) += ca * cb,
                            p => out[p as usize] += ca * cb,
                        }
                    }
                }
                for (key, c) in dropped {
                    loss.record(d.decode(key).norm_s(s), c.norm());
                }
            }
            None => {
                let mut dropped: HashMap<MultiIndex, Complex64> = HashMap::new();
                for &(i, ca) in &a {
                    for &(j, cb) in &b {
                        match set.sum_position(i, j) {
                            Some(p) => out[p] += ca * cb,
                            None => {
                                *dropped.entry(set.member(i).add(set.member(j))).or_insert(zero) += ca * cb
                            }
                        }
                    }
                }
                for (k, c) in dropped {
                    loss.record(k.norm_s(s), c.norm());
                }
            }
        }
        Ok((Self::from_coeffs(set, out), loss))
    }

    /// Newton iteration `r <- r - r (f r - 1)` seeded with `1/<f>`.
    ///
    /// The stopping tolerance is floored at the roundoff level
    /// `16 eps |f|_rho |r|_rho`; the returned series always satisfies
    /// `|f r - 1|_rho <= max(tol, floor)`.
    pub fn reciprocal(&self, rho: f64, tol: f64) -> Result<Self, SeriesError> {
        let avg = self.average();
        if avg.norm() == 0.0 || !avg.is_finite() {
            return Err(SeriesError::Singular("average is zero".into()));
        }
        let fnorm = self.weighted_norm(rho);
        let mut r = Self::constant(&self.set, 1.0 / avg);
        let mut best = f64::INFINITY;
        let mut stalls = 0;
        for _ in 0..MAX_RECIPROCAL_ITERS {
            let (fr, dropped) = self.multiply_parts(&r)?;
            let res = fr.add_scalar(-1.0);
            let rn = res.weighted_norm(rho);
            let floor = 16.0 * f64::EPSILON * fnorm * r.weighted_norm(rho);
            if !rn.is_finite() {
                return Err(SeriesError::Singular("iteration produced non-finite values".into()));
            }
            if rn <= tol.max(floor) {
                r.loss = dropped;
                return Ok(r);
            }
            if rn >= best {
                stalls += 1;
                if stalls >= 3 || rn > 1e6 {
                    return Err(SeriesError::Singular(format!("Newton iteration not contracting (|fr-1| = {rn:.3e})")));
                }
            } else {
                best = rn;
                stalls = 0;
            }
            let (corr, _) = r.multiply_parts(&res)?;
            r = &r - &corr;
        }
        Err(SeriesError::Singular(format!(
            "no convergence in {MAX_RECIPROCAL_ITERS} iterations"
        )))
    }

    /// Direct summation of `sum c_k e^{i k.sigma}`.
    pub fn evaluate(&self, sigma: &[f64]) -> Complex64 {
        assert!(sigma.len() >= self.set.n(), "point must have one entry per frequency");
        self.coeffs
            .iter()
            .zip(self.set.members())
            .filter(|(c, _)| **c != Complex64::new(0.0, 0.0))
            .map(|(c, k)| c * Complex64::from_polar(1.0, k.dot(sigma)))
            .sum()
    }

    /// `|f|_rho <= sqrt(|f|_{rho-delta} |f|_{rho+delta})` up to `1e-12` relative slack.
    pub fn interpolation_check(&self, rho: f64, delta: f64) -> bool {
        assert!(delta > 0.0 && delta <= rho, "need 0 < delta <= rho");
        let mid = self.weighted_norm(rho);
        let lo = self.weighted_norm(rho - delta);
        let hi = self.weighted_norm(rho + delta);
        mid <= (lo * hi).sqrt() * (1.0 + 1e-12) + f64::MIN_POSITIVE
    }

    /// Same coefficients on a larger index set; panics if a stored mode has no place there.
    pub fn embed_into(&self, target: &Arc<IndexSet>) -> Self {
        let mut out = Self::zeros(target);
        for (c, k) in self.coeffs.iter().zip(self.set.members()) {
            if *c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let p = target
                .position(k)
                .unwrap_or_else(|| panic!("mode [{k}] missing from the target index set"));
            out.coeffs[p] = *c;
        }
        out.loss = self.loss.clone();
        out
    }
}

fn nonzero(c: &[Complex64]) -> Vec<(usize, Complex64)> {
    c.iter()
        .enumerate()
        .filter(|(_, v)| **v != Complex64::new(0.0, 0.0))
        .map(|(i, v)| (i, *v))
        .collect()
}

impl Add for &FourierSeries {
    type Output = FourierSeries;
    fn add(self, rhs: &FourierSeries) -> FourierSeries {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &FourierSeries {
    type Output = FourierSeries;
    fn sub(self, rhs: &FourierSeries) -> FourierSeries {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Add for FourierSeries {
    type Output = FourierSeries;
    fn add(mut self, rhs: FourierSeries) -> FourierSeries {
        self += &rhs;
        self
    }
}

impl Sub for FourierSeries {
    type Output = FourierSeries;
    fn sub(mut self, rhs: FourierSeries) -> FourierSeries {
        self -= &rhs;
        self
    }
}

impl AddAssign<&FourierSeries> for FourierSeries {
    fn add_assign(&mut self, rhs: &FourierSeries) {
        self.expect_compatible(rhs);
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
        self.loss.merge(&rhs.loss);
    }
}

impl SubAssign<&FourierSeries> for FourierSeries {
    fn sub_assign(&mut self, rhs: &FourierSeries) {
        self.expect_compatible(rhs);
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
        self.loss.merge(&rhs.loss);
    }
}

impl Neg for &FourierSeries {
    type Output = FourierSeries;
    fn neg(self) -> FourierSeries {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &FourierSeries {
    type Output = FourierSeries;
    fn mul(self, c: f64) -> FourierSeries {
        self.scale(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn set1(k: f64) -> Arc<IndexSet> {
        Arc::new(IndexSet::enumerate(1, k, 1.0).unwrap())
    }

    fn e1() -> MultiIndex {
        MultiIndex::unit(1, 1)
    }

    #[test]
    fn norm_examples() {
        let set = set1(4.0);
        assert!((FourierSeries::constant(&set, 5.0).weighted_norm(0.3) - 5.0).abs() < 1e-15);
        let m = FourierSeries::from_modes(&set, &[(e1(), Complex64::new(1.0, 0.0))]).unwrap();
        assert!((m.weighted_norm(0.5) - 0.5f64.exp()).abs() < 1e-14);
        let c = FourierSeries::cos_mode(&set, &e1(), 1.0, 0.0).unwrap();
        assert!((c.weighted_norm(1.0) - E).abs() < 1e-14);
    }

    #[test]
    fn product_examples() {
        let set = set1(4.0);
        let c = FourierSeries::cos_mode(&set, &e1(), 1.0, 0.0).unwrap();
        let one = FourierSeries::constant(&set, 1.0);
        assert_eq!(c.multiply(&one).unwrap(), c);
        let p = FourierSeries::from_modes(&set, &[(e1(), Complex64::new(1.0, 0.0))]).unwrap();
        let m = FourierSeries::from_modes(&set, &[(e1().neg(), Complex64::new(1.0, 0.0))]).unwrap();
        assert_eq!(p.multiply(&m).unwrap(), one);
        let sq = c.multiply(&c).unwrap();
        let expect = FourierSeries::cos_mode(&set, &MultiIndex::unit(1, 2), 0.5, 0.0).unwrap().add_scalar(0.5);
        assert!(sq.sup_diff(&expect) < 1e-16);
        assert!(sq.loss().is_zero());
    }

    #[test]
    fn dropped_mass_is_recorded() {
        let set = set1(2.0);
        let c = FourierSeries::cos_mode(&set, &MultiIndex::unit(1, 2), 1.0, 0.0).unwrap();
        let (sq, loss) = c.multiply_parts(&c).unwrap();
        // cos^2(2s) = 1/2 + cos(4s)/2, the 4s modes fall outside
        assert!((sq.average().re - 0.5).abs() < 1e-16);
        assert!((loss.at(0.0) - 0.5).abs() < 1e-15);
        assert!((loss.at(1.0) - 0.5 * (4.0f64).exp()).abs() < 1e-12);
        let mixed = FourierSeries::constant(&set, 1.0);
        assert!(mixed.multiply(&c.scale(0.0)).is_ok());
        let other = set1(3.0);
        assert_eq!(
            c.multiply(&FourierSeries::zeros(&other)),
            Err(SeriesError::IncompatibleSets)
        );
    }

    #[test]
    fn shift_examples() {
        let set = set1(4.0);
        let f = FourierSeries::from_modes(&set, &[(e1(), Complex64::new(1.0, 0.0))]).unwrap();
        assert_eq!(f.shift(&[0.0]), f);
        assert!(f.shift(&[PI]).sup_diff(&f.scale(-1.0)) < 1e-15);
    }

    #[test]
    fn derivative_and_average() {
        let set = Arc::new(IndexSet::enumerate(2, 3.0, 1.0).unwrap());
        let alpha = [0.7, 0.3];
        let s1 = FourierSeries::sin_mode(&set, &e1(), 1.0, 0.0).unwrap();
        let c1 = FourierSeries::cos_mode(&set, &e1(), 0.7, 0.0).unwrap();
        assert!(s1.derive_alpha(&alpha).sup_diff(&c1) < 1e-15);
        assert!(FourierSeries::constant(&set, 3.0).derive_alpha(&alpha).is_zero());
        assert_eq!(FourierSeries::constant(&set, 1.0).average(), Complex64::new(1.0, 0.0));
        assert!(s1.average().norm() < 1e-16);
        let g = FourierSeries::cos_mode(&set, &MultiIndex::unit(2, 1), 1.0, 0.0).unwrap().add_scalar(2.0);
        assert_eq!(g.average(), Complex64::new(2.0, 0.0));
    }

    #[test]
    fn reciprocal_examples() {
        let set = set1(40.0);
        let two = FourierSeries::constant(&set, 2.0);
        let r = two.reciprocal(0.5, 1e-14).unwrap();
        assert!((r.average().re - 0.5).abs() < 1e-16);
        let f = FourierSeries::cos_mode(&set, &e1(), 0.1, 0.0).unwrap().add_scalar(1.0);
        let r = f.reciprocal(0.5, 1e-12).unwrap();
        let res = f.multiply(&r).unwrap().add_scalar(-1.0);
        assert!(res.weighted_norm(0.5) <= 1e-12);
        let z = FourierSeries::cos_mode(&set, &e1(), 1.0, 0.0).unwrap();
        assert!(matches!(z.reciprocal(0.5, 1e-12), Err(SeriesError::Singular(_))));
    }

    #[test]
    fn evaluate_examples() {
        let set = set1(3.0);
        let c = FourierSeries::cos_mode(&set, &e1(), 1.0, 0.0).unwrap();
        assert!((c.evaluate(&[0.0]) - 1.0).norm() < 1e-15);
        let s = FourierSeries::sin_mode(&set, &e1(), 1.0, 0.0).unwrap();
        assert!((s.evaluate(&[PI / 2.0]) - 1.0).norm() < 1e-15);
        let f = &c + &s.scale(Complex64::new(0.3, 0.1));
        let total: Complex64 = f.coeffs().iter().sum();
        assert!((f.evaluate(&[0.0]) - total).norm() < 1e-15);
    }

    #[test]
    fn interpolation_examples() {
        let set = set1(5.0);
        let m = FourierSeries::cos_mode(&set, &MultiIndex::unit(1, 3), 2.0, 0.4).unwrap();
        assert!(m.interpolation_check(0.4, 0.2));
        assert!(FourierSeries::zeros(&set).interpolation_check(0.4, 0.2));
    }

    #[test]
    fn realness() {
        let set = set1(5.0);
        let c = FourierSeries::cos_mode(&set, &e1(), 1.0, 0.3).unwrap();
        assert!(c.is_real(0.0));
        let i = c.scale(Complex64::new(0.0, 1.0));
        assert!(!i.is_real(1e-3));
        assert!(i.realify().is_zero());
    }

    #[test]
    fn monomial_and_embedding() {
        let set = set1(3.0);
        let f = FourierSeries::cos_mode(&set, &MultiIndex::unit(1, 3), 1.0, 0.0).unwrap();
        let g = f.mul_monomial(&e1());
        assert!((g.coeff(&MultiIndex::unit(1, -2)).re - 0.5).abs() < 1e-16);
        assert!((g.loss().at(0.0) - 0.5).abs() < 1e-16);
        let big = Arc::new(IndexSet::enumerate(2, 3.0, 1.0).unwrap());
        let e = f.embed_into(&big);
        assert!((e.weighted_norm(0.7) - f.weighted_norm(0.7)).abs() < 1e-14);
    }
}
