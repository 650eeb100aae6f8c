use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{SeriesError, SolveError};
use crate::fourier::{FourierSeries, FrequencyBasis, PowerCache, SERIES_TOL};
use crate::index_space::MultiIndex;

/// `coeff * exp(i sum_j k_j . alpha x_j)` over the slots `x_0..x_L`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierTerm {
    pub slots: Vec<MultiIndex>,
    pub coeff: Complex64,
}

/// `coeff * (x_b - x_a)^power`; carries springs, which are not torus functions.
#[derive(Clone, Debug, PartialEq)]
pub struct GapTerm {
    pub a: usize,
    pub b: usize,
    pub power: u32,
    pub coeff: f64,
}

/// One interaction `H_L(x_0, .., x_L)` of range `L`.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionTerm {
    pub range: usize,
    pub fourier: Vec<FourierTerm>,
    pub gaps: Vec<GapTerm>,
}

impl InteractionTerm {
    pub fn new(range: usize) -> Self {
        Self {
            range,
            fourier: Vec::new(),
            gaps: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.fourier.is_empty() && self.gaps.is_empty()
    }

    pub fn push_fourier(&mut self, slots: Vec<MultiIndex>, coeff: Complex64) -> Result<(), SolveError> {
        if slots.len() != self.range + 1 {
            return Err(SolveError::InvalidModel(format!(
                "range-{} term needs {} slots, got {}",
                self.range,
                self.range + 1,
                slots.len()
            )));
        }
        if coeff != Complex64::new(0.0, 0.0) {
            self.fourier.push(FourierTerm { slots, coeff });
        }
        Ok(())
    }

    pub fn push_gap(&mut self, a: usize, b: usize, power: u32, coeff: f64) -> Result<(), SolveError> {
        if a > self.range || b > self.range || a == b {
            return Err(SolveError::InvalidModel(format!(
                "gap slots ({a}, {b}) invalid for range {}",
                self.range
            )));
        }
        if coeff != 0.0 {
            self.gaps.push(GapTerm { a, b, power, coeff });
        }
        Ok(())
    }

    /// `kappa/2 (x_b - x_a)^2`.
    pub fn spring(range: usize, a: usize, b: usize, kappa: f64) -> Result<Self, SolveError> {
        let mut t = Self::new(range);
        t.push_gap(a, b, 2, 0.5 * kappa)?;
        Ok(t)
    }

    /// Real-valued `amp cos(sum_j k_j . alpha x_j + phase)`.
    pub fn push_cos(&mut self, slots: Vec<MultiIndex>, amp: f64, phase: f64) -> Result<(), SolveError> {
        let c = Complex64::from_polar(0.5 * amp, phase);
        let neg = slots.iter().map(MultiIndex::neg).collect();
        self.push_fourier(slots, c)?;
        self.push_fourier(neg, c.conj())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            range: self.range,
            fourier: self
                .fourier
                .iter()
                .map(|t| FourierTerm {
                    slots: t.slots.clone(),
                    coeff: t.coeff * c,
                })
                .collect(),
            gaps: self
                .gaps
                .iter()
                .map(|g| GapTerm { coeff: g.coeff * c, ..g.clone() })
                .collect(),
        }
    }

    /// `d/dx_slot` along the alpha direction.
    pub fn derivative(&self, slot: usize, alpha: &[f64]) -> Self {
        let mut out = Self::new(self.range);
        for t in &self.fourier {
            let f = Complex64::new(0.0, t.slots[slot].dot(alpha));
            if f != Complex64::new(0.0, 0.0) {
                out.fourier.push(FourierTerm {
                    slots: t.slots.clone(),
                    coeff: t.coeff * f,
                });
            }
        }
        for g in &self.gaps {
            let sign = (slot == g.b) as i32 - (slot == g.a) as i32;
            if sign == 0 || g.power == 0 {
                continue;
            }
            out.gaps.push(GapTerm {
                a: g.a,
                b: g.b,
                power: g.power - 1,
                coeff: g.coeff * g.power as f64 * sign as f64,
            });
        }
        out
    }

    /// Symmetry under simultaneous negation of all slots with conjugated coefficients.
    pub fn is_real(&self, tol: f64) -> bool {
        let mut sums: HashMap<&[MultiIndex], Complex64> = HashMap::new();
        for t in &self.fourier {
            *sums.entry(&t.slots).or_default() += t.coeff;
        }
        sums.iter().all(|(slots, c)| {
            let neg: Vec<MultiIndex> = slots.iter().map(MultiIndex::neg).collect();
            let partner = sums.get(neg.as_slice()).copied().unwrap_or_default();
            (c - partner.conj()).norm() <= tol
        })
    }

    /// `max_{i<=3}` of the derivative-size proxies at radius `r`.
    ///
    /// Fourier terms give `sum |c| (sum_j |k_j . alpha|)^i e^{r sum_j |k_j|_s}`;
    /// a gap monomial of power `p` only enters for `i >= p`, as `|c| p! 2^p` at `i = p`.
    pub fn decay_proxy(&self, alpha: &[f64], r: f64, s: f64) -> f64 {
        let mut d = [0.0f64; 4];
        for t in &self.fourier {
            let freq: f64 = t.slots.iter().map(|k| k.dot(alpha).abs()).sum();
            let w: f64 = t.slots.iter().map(|k| k.norm_s(s)).sum();
            let base = t.coeff.norm() * (r * w).exp();
            for (i, di) in d.iter_mut().enumerate() {
                *di += base * freq.powi(i as i32);
            }
        }
        for g in &self.gaps {
            let p = g.power as usize;
            if p <= 3 {
                let fact: f64 = (1..=p).map(|v| v as f64).product();
                d[p] += g.coeff.abs() * fact * 2f64.powi(p as i32);
            }
        }
        d.into_iter().fold(0.0, f64::max)
    }
}

/// Shared building blocks for evaluating interactions along one hull `h`.
pub struct Evaluator<'a> {
    h: &'a FourierSeries,
    basis: &'a FrequencyBasis,
    powers: PowerCache,
    exps: HashMap<u64, FourierSeries>,
    shifted: HashMap<(u64, i64), FourierSeries>,
    hshift: HashMap<i64, FourierSeries>,
}

impl<'a> Evaluator<'a> {
    pub fn new(h: &'a FourierSeries, basis: &'a FrequencyBasis) -> Result<Self, SeriesError> {
        let norm = h.weighted_norm(basis.rho);
        if norm >= basis.iota {
            return Err(SeriesError::MarginViolated { norm, iota: basis.iota });
        }
        Ok(Self {
            h,
            basis,
            powers: PowerCache::new(h, basis.rho),
            exps: HashMap::new(),
            shifted: HashMap::new(),
            hshift: HashMap::new(),
        })
    }

    pub fn h(&self) -> &FourierSeries {
        self.h
    }

    pub fn basis(&self) -> &FrequencyBasis {
        self.basis
    }

    /// `h o T_{m omega alpha}`.
    pub fn h_shift(&mut self, m: i64) -> FourierSeries {
        let (h, basis) = (self.h, self.basis);
        self.hshift
            .entry(m)
            .or_insert_with(|| h.shift_orbit(basis, m as f64))
            .clone()
    }

    /// `e^{i t h} o T_{m omega alpha}`.
    fn exp_shift(&mut self, t: f64, m: i64) -> Result<FourierSeries, SeriesError> {
        let key = (t.to_bits(), m);
        if let Some(e) = self.shifted.get(&key) {
            return Ok(e.clone());
        }
        let base = match self.exps.get(&t.to_bits()) {
            Some(e) => e.clone(),
            None => {
                let e = self.powers.exp_i(t, SERIES_TOL)?;
                self.exps.insert(t.to_bits(), e.clone());
                e
            }
        };
        let e = if m == 0 { base } else { base.shift_orbit(self.basis, m as f64) };
        self.shifted.insert(key, e.clone());
        Ok(e)
    }

    /// `H(gamma^{(-shift)})`: slot `j` sits at `theta + (j - shift) omega + h(sigma + (j - shift) omega alpha)`.
    pub fn eval(&mut self, term: &InteractionTerm, shift: usize) -> Result<FourierSeries, SeriesError> {
        let set = self.h.set().clone();
        let alpha = self.basis.alpha.clone();
        let omega = self.basis.omega;
        let mut out = FourierSeries::zeros(&set);
        for t in &term.fourier {
            let mut phase = 0.0;
            let mut total = MultiIndex::zero();
            let mut prod: Option<FourierSeries> = None;
            for (j, k) in t.slots.iter().enumerate() {
                if k.is_zero() {
                    continue;
                }
                let m = j as i64 - shift as i64;
                let a = k.dot(&alpha);
                phase += m as f64 * omega * a;
                total = total.add(k);
                let e = self.exp_shift(a, m)?;
                prod = Some(match prod {
                    None => e,
                    Some(p) => p.multiply(&e)?,
                });
            }
            let c = t.coeff * Complex64::from_polar(1.0, phase);
            match prod {
                None => out = out.add_scalar(c),
                Some(p) => out += &p.mul_monomial(&total).scale(c),
            }
        }
        for g in &term.gaps {
            let mut gap = &self.h_shift(g.b as i64 - shift as i64) - &self.h_shift(g.a as i64 - shift as i64);
            gap = gap.add_scalar((g.b as f64 - g.a as f64) * omega);
            let mut pw = FourierSeries::constant(&set, 1.0);
            for _ in 0..g.power {
                pw = pw.multiply(&gap)?;
            }
            out += &pw.scale(g.coeff);
        }
        Ok(out)
    }
}

/// `H(gamma^{(-shift)})` for a single term.
pub fn eval_interaction(term: &InteractionTerm, h: &FourierSeries, shift: usize, basis: &FrequencyBasis) -> Result<FourierSeries, SeriesError> {
    Evaluator::new(h, basis)?.eval(term, shift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{compose_shell, golden_omega};
    use crate::index_space::IndexSet;
    use std::sync::Arc;

    fn basis() -> FrequencyBasis {
        FrequencyBasis::new(vec![1.0], golden_omega(), 0.2, 1.0, 1.0).unwrap()
    }

    fn e(v: i32) -> MultiIndex {
        MultiIndex::unit(1, v)
    }

    #[test]
    fn zero_hull_is_pure_shift() {
        let b = basis();
        let set = Arc::new(IndexSet::enumerate(1, 10.0, 1.0).unwrap());
        let mut t = InteractionTerm::new(2);
        t.push_fourier(vec![e(1), MultiIndex::zero(), e(2)], Complex64::new(0.3, 0.1)).unwrap();
        let h = FourierSeries::zeros(&set);
        let got = eval_interaction(&t, &h, 1, &b).unwrap();
        // slot j at sigma + (j - 1) omega: phase e^{i(-1 * 1 + 1 * 2) omega}
        let want = Complex64::new(0.3, 0.1) * Complex64::from_polar(1.0, b.omega);
        assert!((got.coeff(&e(3)) - want).norm() < 1e-15);
        assert!((got.weighted_norm(0.0) - want.norm()).abs() < 1e-15);
    }

    #[test]
    fn single_slot_is_composition() {
        let b = basis();
        let set = Arc::new(IndexSet::enumerate(1, 30.0, 1.0).unwrap());
        let v = FourierSeries::cos_mode(&set, &e(1), 0.2, 0.3).unwrap();
        let mut t = InteractionTerm::new(0);
        for (c, k) in v.coeffs().iter().zip(set.members()) {
            t.push_fourier(vec![k.clone()], *c).unwrap();
        }
        let h = FourierSeries::sin_mode(&set, &e(2), 0.1, 0.0).unwrap();
        let got = eval_interaction(&t, &h, 0, &b).unwrap();
        let want = compose_shell(&v, &h, &b).unwrap();
        assert!(got.sup_diff(&want) < 1e-16);
    }

    #[test]
    fn two_slot_term_matches_hand_expansion() {
        // H = c e^{i(x_0 - x_1)}, shift 0: e^{-i omega} e^{i(h - h o T_{omega})}
        let b = basis();
        let set = Arc::new(IndexSet::enumerate(1, 30.0, 1.0).unwrap());
        let mut t = InteractionTerm::new(1);
        t.push_fourier(vec![e(1), e(-1)], Complex64::new(0.5, 0.0)).unwrap();
        let h = FourierSeries::cos_mode(&set, &e(1), 0.05, 0.0).unwrap()
            + FourierSeries::sin_mode(&set, &e(2), 0.02, 0.0).unwrap()
            + FourierSeries::cos_mode(&set, &e(3), 0.01, 0.4).unwrap();
        let got = eval_interaction(&t, &h, 0, &b).unwrap();
        for i in 0..7 {
            let x = 0.9 * i as f64;
            let d = h.evaluate(&[x]).re - h.evaluate(&[x + b.omega]).re;
            let want = 0.5 * Complex64::from_polar(1.0, -b.omega + d);
            assert!((got.evaluate(&[x]) - want).norm() < 1e-13);
        }
    }

    #[test]
    fn spring_evaluation_and_derivatives() {
        let b = basis();
        let set = Arc::new(IndexSet::enumerate(1, 20.0, 1.0).unwrap());
        let s = InteractionTerm::spring(1, 0, 1, 2.0).unwrap();
        let h = FourierSeries::sin_mode(&set, &e(1), 0.1, 0.0).unwrap();
        let got = eval_interaction(&s, &h, 0, &b).unwrap();
        for i in 0..5 {
            let x = 1.1 * i as f64;
            let g = b.omega + h.evaluate(&[x + b.omega]).re - h.evaluate(&[x]).re;
            assert!((got.evaluate(&[x]).re - g * g).abs() < 1e-13);
        }
        let d0 = s.derivative(0, &b.alpha);
        assert_eq!(d0.gaps, vec![GapTerm { a: 0, b: 1, power: 1, coeff: -2.0 }]);
        let d01 = d0.derivative(1, &b.alpha);
        assert_eq!(d01.gaps[0].power, 0);
        assert_eq!(d01.gaps[0].coeff, -2.0);
        assert!(d01.derivative(0, &b.alpha).is_empty());
    }

    #[test]
    fn constants_have_no_derivative() {
        let mut t = InteractionTerm::new(2);
        t.push_fourier(vec![MultiIndex::zero(); 3], Complex64::new(1.0, 0.0)).unwrap();
        for j in 0..3 {
            assert!(t.derivative(j, &[1.0]).is_empty());
        }
    }

    #[test]
    fn realness_and_proxy() {
        let mut t = InteractionTerm::new(1);
        t.push_cos(vec![e(1), e(-1)], 0.4, 0.2).unwrap();
        assert!(t.is_real(1e-15));
        t.push_fourier(vec![e(2), MultiIndex::zero()], Complex64::new(0.1, 0.0)).unwrap();
        assert!(!t.is_real(1e-3));
        let mut c = InteractionTerm::new(1);
        c.push_cos(vec![e(1), e(-1)], 1.0, 0.0).unwrap();
        // freq sum 2, weight 2: max over i is i = 3 -> 8 e^{2r}
        let r = 0.3;
        assert!((c.decay_proxy(&[1.0], r, 1.0) - 8.0 * (2.0 * r).exp()).abs() < 1e-12);
        let sp = InteractionTerm::spring(1, 0, 1, 1.0).unwrap();
        assert!((sp.decay_proxy(&[1.0], r, 1.0) - 4.0).abs() < 1e-15);
    }
}
