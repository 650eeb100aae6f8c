use std::sync::Arc;

use super::config::{Kind, PotentialConfig, TermSpec};
use crate::error::SolveError;
use crate::fourier::{FourierSeries, FrequencyBasis};
use crate::index_space::{IndexSet, MultiIndex};
use crate::short_range::ShortRangeModel;

impl TermSpec {
    pub fn index(&self) -> MultiIndex {
        MultiIndex::from_dense(self.k.clone())
    }

    pub fn series(&self, set: &Arc<IndexSet>) -> Result<FourierSeries, SolveError> {
        let k = self.index();
        Ok(match self.kind {
            Kind::Cos => FourierSeries::cos_mode(set, &k, self.amp, self.phase)?,
            Kind::Sin => FourierSeries::sin_mode(set, &k, self.amp, self.phase)?,
        })
    }

    /// Value and derivative in `u` of the term at `sigma = u alpha`.
    pub fn eval_line(&self, u: f64, alpha: &[f64]) -> (f64, f64) {
        let ka: f64 = self.k.iter().zip(alpha).map(|(k, a)| *k as f64 * a).sum();
        let arg = ka * u + self.phase;
        match self.kind {
            Kind::Cos => (self.amp * arg.cos(), -self.amp * ka * arg.sin()),
            Kind::Sin => (self.amp * arg.sin(), self.amp * ka * arg.cos()),
        }
    }

    /// Same term after `d/du` along `sigma = u alpha`.
    pub fn derivative(&self, alpha: &[f64]) -> TermSpec {
        let ka: f64 = self.k.iter().zip(alpha).map(|(k, a)| *k as f64 * a).sum();
        let (amp, kind) = match self.kind {
            Kind::Cos => (-self.amp * ka, Kind::Sin),
            Kind::Sin => (self.amp * ka, Kind::Cos),
        };
        TermSpec {
            k: self.k.clone(),
            amp,
            phase: self.phase,
            kind,
        }
    }
}

impl PotentialConfig {
    /// No direct force terms and no constant: `U = d_alpha V`.
    pub fn is_gradient(&self) -> bool {
        self.force.is_empty() && self.constant == 0.0
    }

    pub fn potential_series(&self, set: &Arc<IndexSet>) -> Result<FourierSeries, SolveError> {
        let mut v = FourierSeries::zeros(set);
        for t in &self.potential {
            v += &t.series(set)?;
        }
        Ok(v)
    }

    /// All force terms, `d_alpha V` included, as one list.
    pub fn force_terms(&self, alpha: &[f64]) -> Vec<TermSpec> {
        self.potential.iter().map(|t| t.derivative(alpha)).chain(self.force.iter().cloned()).collect()
    }

    pub fn force_series(&self, set: &Arc<IndexSet>, basis: &FrequencyBasis) -> Result<FourierSeries, SolveError> {
        let mut u = self.potential_series(set)?.derive_alpha(&basis.alpha);
        for t in &self.force {
            u += &t.series(set)?;
        }
        Ok(u.add_scalar(self.constant))
    }

    /// `U(u alpha)` and `dU/du` by direct trigonometric evaluation.
    pub fn eval_line(&self, u: f64, alpha: &[f64]) -> (f64, f64) {
        self.force_terms(alpha).iter().fold((self.constant, 0.0), |(f, d), t| {
            let (a, b) = t.eval_line(u, alpha);
            (f + a, d + b)
        })
    }

    pub fn short_model(&self, set: &Arc<IndexSet>, basis: &FrequencyBasis) -> Result<ShortRangeModel, SolveError> {
        if self.is_gradient() {
            ShortRangeModel::gradient(self.potential_series(set)?, basis.clone())
        } else {
            ShortRangeModel::new(self.force_series(set, basis)?, basis.clone())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::golden_omega;

    #[test]
    fn series_and_line_agree() {
        let set = Arc::new(IndexSet::enumerate(2, 6.0, 1.0).unwrap());
        let b = FrequencyBasis::new(vec![1.0, 0.4], golden_omega(), 0.2, 1.0, 1.0).unwrap();
        let p = PotentialConfig {
            constant: 0.01,
            potential: vec![TermSpec {
                k: vec![1, 1],
                amp: 0.05,
                phase: 0.3,
                kind: Kind::Cos,
            }],
            force: vec![TermSpec {
                k: vec![0, 2],
                amp: 0.02,
                phase: 0.0,
                kind: Kind::Sin,
            }],
        };
        assert!(!p.is_gradient());
        let u = p.force_series(&set, &b).unwrap();
        for i in 0..6 {
            let x = 0.7 * i as f64 - 2.0;
            let (f, d) = p.eval_line(x, &b.alpha);
            let sigma = [x * b.alpha[0], x * b.alpha[1]];
            assert!((u.evaluate(&sigma).re - f).abs() < 1e-15);
            let du = u.derive_alpha(&b.alpha).evaluate(&sigma).re;
            assert!((du - d).abs() < 1e-15);
        }
    }
}
