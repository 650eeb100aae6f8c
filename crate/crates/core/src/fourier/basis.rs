use crate::error::SeriesError;

/// `2 pi (sqrt 5 - 1) / 2`.
pub fn golden_omega() -> f64 {
    std::f64::consts::PI * (5f64.sqrt() - 1.0)
}

/// Rotation number, frequency vector and the analyticity parameters of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyBasis {
    pub alpha: Vec<f64>,
    pub omega: f64,
    pub rho: f64,
    pub s: f64,
    pub iota: f64,
}

impl FrequencyBasis {
    pub fn new(alpha: Vec<f64>, omega: f64, rho: f64, s: f64, iota: f64) -> Result<Self, SeriesError> {
        let b = Self { alpha, omega, rho, s, iota };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), SeriesError> {
        let bad = |m: String| Err(SeriesError::InvalidBasis(m));
        if self.alpha.is_empty() {
            return bad("alpha is empty".into());
        }
        for (i, &a) in self.alpha.iter().enumerate() {
            if !(a > 0.0 && a <= 1.0) {
                return bad(format!("alpha[{i}] = {a} is not in (0, 1]"));
            }
            if self.alpha[..i].contains(&a) {
                return bad(format!("alpha[{i}] = {a} repeats an earlier entry"));
            }
        }
        if !self.omega.is_finite() {
            return bad("omega is not finite".into());
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad(format!("rho = {} must be positive", self.rho));
        }
        if !(self.iota > 0.0 && self.iota.is_finite()) {
            return bad(format!("iota = {} must be positive", self.iota));
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return bad(format!("s = {} must be positive", self.s));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    /// `omega * alpha`.
    pub fn rotation(&self) -> Vec<f64> {
        self.alpha.iter().map(|a| a * self.omega).collect()
    }

    /// First `n` frequencies, same radii.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            alpha: self.alpha[..n].to_vec(),
            ..self.clone()
        }
    }

    pub fn with_rho(&self, rho: f64) -> Self {
        Self { rho, ..self.clone() }
    }
}
