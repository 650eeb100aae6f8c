use std::collections::BTreeMap;

// Bucket resolution for |k|_s weights.
const WEIGHT_SCALE: f64 = 1e6;

/// Mass of dropped modes, bucketed by `|k|_s` so it can be weighted at any radius.
///
/// Losses add up along a chain of operations; the total is a diagnostic
/// of how much was discarded, not a rigorous error bound.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TruncationLoss {
    buckets: BTreeMap<i64, f64>,
}

impl TruncationLoss {
    pub fn record(&mut self, weight: f64, mass: f64) {
        if mass == 0.0 {
            return;
        }
        let key = (weight * WEIGHT_SCALE).round() as i64;
        *self.buckets.entry(key).or_insert(0.0) += mass;
    }

    pub fn merge(&mut self, other: &TruncationLoss) {
        for (&k, &m) in &other.buckets {
            *self.buckets.entry(k).or_insert(0.0) += m;
        }
    }

    pub fn scaled(&self, c: f64) -> TruncationLoss {
        if c == 0.0 {
            return TruncationLoss::default();
        }
        TruncationLoss {
            buckets: self.buckets.iter().map(|(&k, &m)| (k, m * c)).collect(),
        }
    }

    /// `sum mass * e^{rho w}` over buckets.
    pub fn at(&self, rho: f64) -> f64 {
        self.buckets
            .iter()
            .map(|(&k, &m)| m * (rho * k as f64 / WEIGHT_SCALE).exp())
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.buckets.is_empty()
    }

    /// `(weight, mass)` pairs in increasing weight.
    pub fn profile(&self) -> Vec<(f64, f64)> {
        self.buckets
            .iter()
            .map(|(&k, &m)| (k as f64 / WEIGHT_SCALE, m))
            .collect()
    }
}
