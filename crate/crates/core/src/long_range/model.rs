use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;

use super::interaction::InteractionTerm;
use crate::error::SolveError;
use crate::fourier::{FourierSeries, FrequencyBasis};
use crate::index_space::{IndexSet, MultiIndex};

/// `sum_i sum_L H_L(u_i alpha, .., u_{i+L} alpha)` truncated at `L_max`.
#[derive(Clone, Debug)]
pub struct LongRangeModel {
    interactions: Vec<InteractionTerm>,
    basis: FrequencyBasis,
    set: Arc<IndexSet>,
    // first[L][k] = d^{(k)} H_L, second[L][k][j] = d^{(j)} d^{(k)} H_L
    first: Vec<Vec<InteractionTerm>>,
    second: Vec<Vec<Vec<InteractionTerm>>>,
}

impl LongRangeModel {
    /// Terms may come in any order; several terms with the same range are summed.
    pub fn new(terms: Vec<InteractionTerm>, basis: FrequencyBasis, set: Arc<IndexSet>) -> Result<Self, SolveError> {
        basis.validate()?;
        if set.n() != basis.n() {
            return Err(SolveError::InvalidModel(format!(
                "index set has {} frequencies, basis has {}",
                set.n(),
                basis.n()
            )));
        }
        let l_max = terms.iter().map(|t| t.range).max().unwrap_or(0);
        let mut interactions: Vec<InteractionTerm> = (0..=l_max).map(InteractionTerm::new).collect();
        for t in terms {
            for k in t.slots_max_position() {
                if k > basis.n() {
                    return Err(SolveError::InvalidModel(format!(
                        "range-{} term uses frequency {k} beyond N = {}",
                        t.range,
                        basis.n()
                    )));
                }
            }
            let slot = &mut interactions[t.range];
            slot.fourier.extend(t.fourier);
            slot.gaps.extend(t.gaps);
        }
        for t in &interactions {
            if !t.is_real(1e-12 * (1.0 + t.fourier.iter().map(|f| f.coeff.norm()).fold(0.0, f64::max))) {
                return Err(SolveError::InvalidModel(format!("range-{} interaction is not real", t.range)));
            }
        }
        let alpha = basis.alpha.clone();
        let first: Vec<Vec<InteractionTerm>> = interactions
            .iter()
            .map(|t| (0..=t.range).map(|k| t.derivative(k, &alpha)).collect())
            .collect();
        let second = first
            .iter()
            .map(|per_k| per_k.iter().map(|d| (0..=d.range).map(|j| d.derivative(j, &alpha)).collect()).collect())
            .collect();
        Ok(Self {
            interactions,
            basis,
            set,
            first,
            second,
        })
    }

    /// `H_0 = -V`, `H_1 = (x_1 - x_0)^2 / 2`: the nearest-neighbour chain
    /// `u_{n+1} + u_{n-1} - 2 u_n + U(u_n alpha) = 0` with `U = d_alpha V`.
    pub fn short_range_reduction(v: &FourierSeries, basis: FrequencyBasis) -> Result<Self, SolveError> {
        let mut h0 = InteractionTerm::new(0);
        for (c, k) in v.coeffs().iter().zip(v.set().members()) {
            if !k.is_zero() {
                h0.push_fourier(vec![k.clone()], -c)?;
            }
        }
        let h1 = InteractionTerm::spring(1, 0, 1, 1.0)?;
        Self::new(vec![h0, h1], basis, v.set().clone())
    }

    pub fn l_max(&self) -> usize {
        self.interactions.len() - 1
    }

    pub fn basis(&self) -> &FrequencyBasis {
        &self.basis
    }

    pub fn set(&self) -> &Arc<IndexSet> {
        &self.set
    }

    pub fn interactions(&self) -> &[InteractionTerm] {
        &self.interactions
    }

    pub fn interaction(&self, l: usize) -> Option<&InteractionTerm> {
        self.interactions.get(l)
    }

    pub(crate) fn first(&self, l: usize, k: usize) -> &InteractionTerm {
        &self.first[l][k]
    }

    pub(crate) fn second(&self, l: usize, k: usize, j: usize) -> &InteractionTerm {
        &self.second[l][k][j]
    }

    /// Same model on another basis, e.g. with a different working radius.
    pub fn with_basis(&self, basis: FrequencyBasis) -> Result<Self, SolveError> {
        Self::new(self.interactions.clone(), basis, self.set.clone())
    }

    /// Radius at which the decay proxies are taken by default: `rho + iota`.
    pub fn decay_radius(&self) -> f64 {
        self.basis.rho + self.basis.iota
    }

    /// `M_L` for `L = 0..=L_max` at radius `r`.
    pub fn decay_report_at(&self, r: f64) -> Vec<f64> {
        self.interactions
            .iter()
            .map(|t| t.decay_proxy(&self.basis.alpha, r, self.basis.s))
            .collect()
    }

    pub fn decay_report(&self) -> Vec<f64> {
        self.decay_report_at(self.decay_radius())
    }

    /// `beta = sum_{L >= 2} M_L L^4`, combinatorial constant taken as 1.
    pub fn beta_at(&self, r: f64) -> f64 {
        self.decay_report_at(r)
            .iter()
            .enumerate()
            .skip(2)
            .map(|(l, m)| m * (l as f64).powi(4))
            .sum()
    }

    pub fn beta(&self) -> f64 {
        self.beta_at(self.decay_radius())
    }

    /// Rescale range `l` so that its decay proxy equals `target`.
    pub fn with_decay_target(&self, l: usize, target: f64) -> Result<Self, SolveError> {
        let current = self.decay_report().get(l).copied().unwrap_or(0.0);
        if current == 0.0 {
            return Err(SolveError::InvalidModel(format!("range {l} has no terms to rescale")));
        }
        let mut terms = self.interactions.clone();
        terms[l] = terms[l].scaled(target / current);
        Self::new(terms, self.basis.clone(), self.set.clone())
    }

    /// Model with one more term, e.g. an injected far interaction.
    pub fn with_term(&self, term: InteractionTerm) -> Result<Self, SolveError> {
        let mut terms = self.interactions.clone();
        terms.push(term);
        Self::new(terms, self.basis.clone(), self.set.clone())
    }

    /// Parse `L; k0|k1|..|kL; re; im`, `spring; L; a; b; kappa` and
    /// `gap; L; a; b; power; coeff` records; `#` starts a comment.
    pub fn parse_terms(text: &str) -> Result<Vec<InteractionTerm>, SolveError> {
        let mut terms: Vec<InteractionTerm> = Vec::new();
        let get = |terms: &mut Vec<InteractionTerm>, l: usize| -> usize {
            match terms.iter().position(|t| t.range == l) {
                Some(i) => i,
                None => {
                    terms.push(InteractionTerm::new(l));
                    terms.len() - 1
                }
            }
        };
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| SolveError::InvalidModel(format!("line {}: {reason}", no + 1));
            let fields: Vec<&str> = line.split(';').map(str::trim).collect();
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
            let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("{s:?}: {e}")));
            match fields[0] {
                "spring" => {
                    if fields.len() != 5 {
                        return Err(bad("spring record needs 5 fields".into()));
                    }
                    let l = int(fields[1])?;
                    let i = get(&mut terms, l);
                    terms[i]
                        .push_gap(int(fields[2])?, int(fields[3])?, 2, 0.5 * num(fields[4])?)
                        .map_err(|e| bad(e.to_string()))?;
                }
                "gap" => {
                    if fields.len() != 6 {
                        return Err(bad("gap record needs 6 fields".into()));
                    }
                    let l = int(fields[1])?;
                    let power = fields[4].parse::<u32>().map_err(|e| bad(e.to_string()))?;
                    let i = get(&mut terms, l);
                    terms[i]
                        .push_gap(int(fields[2])?, int(fields[3])?, power, num(fields[5])?)
                        .map_err(|e| bad(e.to_string()))?;
                }
                _ => {
                    if fields.len() != 4 {
                        return Err(bad("term record needs 4 fields".into()));
                    }
                    let l = int(fields[0])?;
                    let slots = fields[1]
                        .split('|')
                        .map(|s| s.trim().parse::<MultiIndex>().map_err(|e| bad(e.to_string())))
                        .collect::<Result<Vec<_>, _>>()?;
                    let c = Complex64::new(num(fields[2])?, num(fields[3])?);
                    let i = get(&mut terms, l);
                    terms[i].push_fourier(slots, c).map_err(|e| bad(e.to_string()))?;
                }
            }
        }
        Ok(terms)
    }

    pub fn from_records(text: &str, basis: FrequencyBasis, set: Arc<IndexSet>) -> Result<Self, SolveError> {
        Self::new(Self::parse_terms(text)?, basis, set)
    }

    /// Record text readable by [`LongRangeModel::parse_terms`].
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for t in &self.interactions {
            for f in &t.fourier {
                let slots: Vec<String> = f.slots.iter().map(|k| k.to_string()).collect();
                let _ = writeln!(out, "{}; {}; {:?}; {:?}", t.range, slots.join("|"), f.coeff.re, f.coeff.im);
            }
            for g in &t.gaps {
                let _ = writeln!(out, "gap; {}; {}; {}; {}; {:?}", t.range, g.a, g.b, g.power, g.coeff);
            }
        }
        out
    }
}

impl InteractionTerm {
    fn slots_max_position(&self) -> impl Iterator<Item = usize> + '_ {
        self.fourier.iter().flat_map(|f| f.slots.iter().map(MultiIndex::max_position))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::golden_omega;

    fn setup() -> (FrequencyBasis, Arc<IndexSet>) {
        let b = FrequencyBasis::new(vec![1.0], golden_omega(), 0.2, 1.0, 1.0).unwrap();
        (b, Arc::new(IndexSet::enumerate(1, 8.0, 1.0).unwrap()))
    }

    #[test]
    fn records_roundtrip() {
        let (b, set) = setup();
        let text = "# demo\n1; 1:1|1:-1; 0.25; 0\n1; 1:-1|1:1; 0.25; 0\nspring; 1; 0; 1; 1.0\n2; 1:1||1:-1; 0.1; 0.0\n2; 1:-1||1:1; 0.1; -0.0\n";
        let m = LongRangeModel::from_records(text, b.clone(), set.clone()).unwrap();
        assert_eq!(m.l_max(), 2);
        assert_eq!(m.interaction(1).unwrap().fourier.len(), 2);
        assert_eq!(m.interaction(1).unwrap().gaps.len(), 1);
        assert!(m.interaction(0).unwrap().is_empty());
        let again = LongRangeModel::from_records(&m.to_records(), b, set).unwrap();
        assert_eq!(again.interactions(), m.interactions());
    }

    #[test]
    fn rejects_bad_records() {
        let (b, set) = setup();
        for text in ["1; 1:1; 0.1; 0", "x; ; 1; 0", "spring; 1; 0; 3; 1", "1; 1:1|1:1; 0.1; 0"] {
            assert!(LongRangeModel::from_records(text, b.clone(), set.clone()).is_err(), "{text}");
        }
        // frequency 2 on a one-frequency basis
        assert!(LongRangeModel::from_records("0; 2:1; 1; 0\n0; 2:-1; 1; 0", b, set).is_err());
    }

    #[test]
    fn decay_targets_and_beta() {
        let (b, set) = setup();
        let mut t2 = InteractionTerm::new(2);
        t2.push_cos(vec![MultiIndex::unit(1, 1), MultiIndex::zero(), MultiIndex::unit(1, -1)], 1.0, 0.0).unwrap();
        let mut t3 = InteractionTerm::new(3);
        t3.push_cos(vec![MultiIndex::unit(1, 1), MultiIndex::zero(), MultiIndex::zero(), MultiIndex::unit(1, -1)], 1.0, 0.0)
            .unwrap();
        let m = LongRangeModel::new(vec![t2, t3], b, set).unwrap();
        let m = m.with_decay_target(2, 0.05 / 16.0).unwrap().with_decay_target(3, 0.05 / 64.0).unwrap();
        let d = m.decay_report();
        assert!((d[2] - 0.05 / 16.0).abs() < 1e-15);
        assert!((d[3] - 0.05 / 64.0).abs() < 1e-15);
        assert!((m.beta() - (0.05 + 0.05 * 81.0 / 64.0)).abs() < 1e-14);
    }
}
