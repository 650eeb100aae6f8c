use std::collections::HashMap;

use num_complex::Complex64;

use super::{FourierSeries, FrequencyBasis};
use crate::error::SeriesError;

/// Term cap for the exponential power series.
pub const EXP_TERM_CAP: usize = 64;
/// Default relative tolerance of series operations.
pub const SERIES_TOL: f64 = 1e-14;
// Largest accepted |t| |h|_rho; beyond it 64 terms cannot reach SERIES_TOL.
const EXP_ARG_CAP: f64 = 12.0;

/// Scaled powers `h^n / n!`, built once and shared by many exponentials.
#[derive(Debug)]
pub struct PowerCache {
    rho: f64,
    hnorm: f64,
    powers: Vec<FourierSeries>,
    norms: Vec<f64>,
}

impl PowerCache {
    pub fn new(h: &FourierSeries, rho: f64) -> Self {
        let one = FourierSeries::constant(h.set(), 1.0);
        let hnorm = h.weighted_norm(rho);
        Self {
            rho,
            hnorm,
            powers: vec![one, h.clone()],
            norms: vec![1.0, hnorm],
        }
    }

    pub fn h(&self) -> &FourierSeries {
        &self.powers[1]
    }

    fn extend_to(&mut self, n: usize) -> Result<(), SeriesError> {
        while self.powers.len() <= n {
            let m = self.powers.len();
            let p = self.powers[m - 1].multiply(&self.powers[1])?.scale(1.0 / m as f64);
            self.norms.push(p.weighted_norm(self.rho));
            self.powers.push(p);
        }
        Ok(())
    }

    /// `sum_n (i t)^n h^n / n!` to relative tolerance `tol` in the rho-norm.
    pub fn exp_i(&mut self, t: f64, tol: f64) -> Result<FourierSeries, SeriesError> {
        let x = t.abs() * self.hnorm;
        if x > EXP_ARG_CAP {
            return Err(SeriesError::ExpArgument(x, EXP_ARG_CAP));
        }
        let mut sum = self.powers[0].clone();
        if x == 0.0 {
            return Ok(sum);
        }
        let it = Complex64::new(0.0, t);
        let mut factor = Complex64::new(1.0, 0.0);
        let mut last = 0.0;
        for n in 1..EXP_TERM_CAP {
            self.extend_to(n)?;
            factor *= it;
            let term = self.powers[n].scale(factor);
            sum += &term;
            last = t.abs().powi(n as i32) * self.norms[n];
            // past n+1 >= 2x the tail is bounded by the last term
            if last == 0.0 || ((n + 1) as f64 >= 2.0 * x && last <= tol * sum.weighted_norm(self.rho)) {
                return Ok(sum);
            }
        }
        Err(SeriesError::ExpNotConverged {
            terms: EXP_TERM_CAP,
            last,
        })
    }
}

/// `e^{i t h}` as a truncated series, norms taken at `rho`.
pub fn exp_i_series(t: f64, h: &FourierSeries, rho: f64) -> Result<FourierSeries, SeriesError> {
    PowerCache::new(h, rho).exp_i(t, SERIES_TOL)
}

/// `U(sigma + alpha h(sigma)) = sum_k U_k e^{i k.sigma} e^{i (k.alpha) h(sigma)}`.
pub fn compose_shell(u: &FourierSeries, h: &FourierSeries, basis: &FrequencyBasis) -> Result<FourierSeries, SeriesError> {
    if !u.is_compatible(h) {
        return Err(SeriesError::IncompatibleSets);
    }
    let norm = h.weighted_norm(basis.rho);
    if norm >= basis.iota {
        return Err(SeriesError::MarginViolated { norm, iota: basis.iota });
    }
    let mut cache = PowerCache::new(h, basis.rho);
    let mut out = FourierSeries::zeros(u.set()).with_loss(u.loss().clone());
    let mut exps: HashMap<u64, FourierSeries> = HashMap::new();
    for (c, k) in u.coeffs().iter().zip(u.set().members()) {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let t = k.dot(&basis.alpha);
        let e = match exps.get(&t.to_bits()) {
            Some(e) => e.clone(),
            None => {
                let e = cache.exp_i(t, SERIES_TOL)?;
                exps.insert(t.to_bits(), e.clone());
                e
            }
        };
        out += &e.mul_monomial(k).scale(*c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index_space::{IndexSet, MultiIndex};
    use std::sync::Arc;

    fn basis1() -> FrequencyBasis {
        FrequencyBasis::new(vec![1.0], super::super::golden_omega(), 0.3, 1.0, 1.0).unwrap()
    }

    #[test]
    fn exp_examples() {
        let set = Arc::new(IndexSet::enumerate(1, 20.0, 1.0).unwrap());
        let zero = FourierSeries::zeros(&set);
        let one = FourierSeries::constant(&set, 1.0);
        assert_eq!(exp_i_series(0.7, &zero, 0.3).unwrap(), one);
        let h = FourierSeries::cos_mode(&set, &MultiIndex::unit(1, 1), 0.2, 0.0).unwrap();
        assert_eq!(exp_i_series(0.0, &h, 0.3).unwrap(), one);
        let c = FourierSeries::constant(&set, 0.37);
        let e = exp_i_series(1.3, &c, 0.3).unwrap();
        let want = Complex64::from_polar(1.0, 1.3 * 0.37);
        assert!((e.average() - want).norm() < 1e-12);
        assert!(e.drop_mean().is_zero());
    }

    #[test]
    fn compose_examples() {
        let b = basis1();
        let set = Arc::new(IndexSet::enumerate(1, 20.0, 1.0).unwrap());
        let u = FourierSeries::sin_mode(&set, &MultiIndex::unit(1, 1), 0.3, 0.2).unwrap();
        let zero = FourierSeries::zeros(&set);
        assert!(compose_shell(&u, &zero, &b).unwrap().sup_diff(&u) == 0.0);
        let c = FourierSeries::constant(&set, 2.5);
        let h = FourierSeries::cos_mode(&set, &MultiIndex::unit(1, 2), 0.1, 0.0).unwrap();
        assert!(compose_shell(&c, &h, &b).unwrap().sup_diff(&c) < 1e-16);
        let m = FourierSeries::from_modes(&set, &[(MultiIndex::unit(1, 1), Complex64::new(1.0, 0.0))]).unwrap();
        let beta = FourierSeries::constant(&set, 0.4);
        let got = compose_shell(&m, &beta, &b).unwrap();
        let want = m.scale(Complex64::from_polar(1.0, 0.4));
        assert!(got.sup_diff(&want) < 1e-14);
    }

    #[test]
    fn margin_is_enforced() {
        let b = basis1();
        let set = Arc::new(IndexSet::enumerate(1, 10.0, 1.0).unwrap());
        let u = FourierSeries::sin_mode(&set, &MultiIndex::unit(1, 1), 0.3, 0.0).unwrap();
        let big = FourierSeries::cos_mode(&set, &MultiIndex::unit(1, 1), 2.0, 0.0).unwrap();
        assert!(matches!(compose_shell(&u, &big, &b), Err(SeriesError::MarginViolated { .. })));
    }

    #[test]
    fn composition_matches_pointwise() {
        let b = basis1();
        let set = Arc::new(IndexSet::enumerate(1, 40.0, 1.0).unwrap());
        let u = FourierSeries::sin_mode(&set, &MultiIndex::unit(1, 1), 0.3, 0.2).unwrap()
            + FourierSeries::cos_mode(&set, &MultiIndex::unit(1, 2), 0.1, 0.0).unwrap();
        let h = FourierSeries::cos_mode(&set, &MultiIndex::unit(1, 1), 0.15, 0.5).unwrap();
        let comp = compose_shell(&u, &h, &b).unwrap();
        for i in 0..9 {
            let x = 0.7 * i as f64;
            let hx = h.evaluate(&[x]).re;
            let want = u.evaluate(&[x + hx]);
            assert!((comp.evaluate(&[x]) - want).norm() < 1e-13);
        }
    }
}
