//! Multi-indices with finite support and truncated index sets.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::IndexError;

/// Default hard cap on the number of members of an [`IndexSet`].
pub const DEFAULT_CAP: usize = 2_000_000;

// Lookup tables above this many slots fall back to hashing.
const DENSE_LUT_LIMIT: usize = 1 << 23;

/// Integer vector `k` with finite support, frequencies numbered from 1.
///
/// Stored densely as `(k_1, .., k_m)` with trailing zeros trimmed, so two
/// equal indices always have equal representations.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    entries: Vec<i32>,
}

fn bracket(j: usize) -> f64 {
    j.max(1) as f64
}

impl MultiIndex {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `k = value * e_j` (j starts at 1).
    pub fn unit(j: usize, value: i32) -> Self {
        assert!(j >= 1, "frequency positions start at 1");
        let mut entries = vec![0; j];
        entries[j - 1] = value;
        Self::from_dense(entries)
    }

    /// From `(k_1, k_2, ...)`; trailing zeros are dropped.
    pub fn from_dense(mut entries: Vec<i32>) -> Self {
        while entries.last() == Some(&0) {
            entries.pop();
        }
        Self { entries }
    }

    /// From `(j, k_j)` pairs; repeated positions are summed.
    pub fn from_pairs(pairs: &[(usize, i32)]) -> Self {
        let len = pairs.iter().map(|&(j, _)| j).max().unwrap_or(0);
        let mut entries = vec![0; len];
        for &(j, v) in pairs {
            assert!(j >= 1, "frequency positions start at 1");
            entries[j - 1] += v;
        }
        Self::from_dense(entries)
    }

    /// Entry `k_j`, zero outside the support.
    pub fn get(&self, j: usize) -> i32 {
        if j == 0 {
            return 0;
        }
        self.entries.get(j - 1).copied().unwrap_or(0)
    }

    pub fn dense(&self) -> &[i32] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest frequency position in the support (0 for the zero index).
    pub fn max_position(&self) -> usize {
        self.entries.len()
    }

    /// Nonzero `(j, k_j)` pairs in increasing `j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, i32)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, &v)| (i + 1, v))
    }

    /// `|k|_s = sum_j <<j>>^s |k_j|`.
    pub fn norm_s(&self, s: f64) -> f64 {
        self.pairs()
            .map(|(j, v)| bracket(j).powf(s) * v.unsigned_abs() as f64)
            .sum()
    }

    /// `|k|_1 = sum_j |k_j|`.
    pub fn norm_1(&self) -> u64 {
        self.entries.iter().map(|v| v.unsigned_abs() as u64).sum()
    }

    pub fn neg(&self) -> Self {
        Self {
            entries: self.entries.iter().map(|v| -v).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.entries.len().max(other.entries.len());
        let entries = (1..=len).map(|j| self.get(j) + other.get(j)).collect();
        Self::from_dense(entries)
    }

    pub fn scale(&self, c: i32) -> Self {
        Self::from_dense(self.entries.iter().map(|v| v * c).collect())
    }

    /// `k . v`; `v` must cover the support.
    pub fn dot(&self, v: &[f64]) -> f64 {
        assert!(
            v.len() >= self.entries.len(),
            "vector of length {} does not cover support up to {}",
            v.len(),
            self.entries.len()
        );
        self.entries
            .iter()
            .zip(v)
            .map(|(&k, &x)| k as f64 * x)
            .sum()
    }

    /// Sign of the first nonzero entry; 0 for the zero index.
    pub fn leading_sign(&self) -> i32 {
        self.entries
            .iter()
            .find(|&&v| v != 0)
            .map_or(0, |v| v.signum())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (j, v) in self.pairs() {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{j}:{v}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for MultiIndex {
    type Err = IndexError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| IndexError::Parse {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let mut pairs = Vec::new();
        for tok in text.split_whitespace() {
            let (j, v) = tok.split_once(':').ok_or_else(|| err("expected j:k_j"))?;
            let j: usize = j.parse().map_err(|_| err("bad position"))?;
            let v: i32 = v.parse().map_err(|_| err("bad entry"))?;
            if j == 0 {
                return Err(err("positions start at 1"));
            }
            if v == 0 {
                return Err(err("zero entries are not stored"));
            }
            if pairs.iter().any(|&(p, _)| p == j) {
                return Err(err("repeated position"));
            }
            pairs.push((j, v));
        }
        Ok(Self::from_pairs(&pairs))
    }
}

#[derive(Debug)]
pub(crate) struct DenseLookup {
    // per-dimension bound b_j and stride in the sum box of radix 4 b_j + 1
    bounds: Vec<i32>,
    strides: Vec<usize>,
    pub(crate) base: usize,
    pub(crate) keys: Vec<usize>,
    pub(crate) lut: Vec<u32>,
}

impl DenseLookup {
    pub(crate) const EMPTY: u32 = u32::MAX;

    fn key_of(&self, k: &MultiIndex) -> Option<usize> {
        let mut key = 0usize;
        for (j, (&b, &st)) in self.bounds.iter().zip(&self.strides).enumerate() {
            let v = k.get(j + 1);
            if v.abs() > 2 * b {
                return None;
            }
            key += (v + 2 * b) as usize * st;
        }
        if k.max_position() > self.bounds.len() {
            return None;
        }
        Some(key)
    }

    pub(crate) fn len(&self) -> usize {
        self.lut.len()
    }

    /// Decode a sum-box key back into a multi-index.
    pub(crate) fn decode(&self, mut key: usize) -> MultiIndex {
        let n = self.bounds.len();
        let mut entries = vec![0i32; n];
        for (e, b) in entries.iter_mut().zip(&self.bounds) {
            let radix = (4 * b + 1) as usize;
            *e = (key % radix) as i32 - 2 * b;
            key /= radix;
        }
        MultiIndex::from_dense(entries)
    }
}

#[derive(Debug)]
enum Lookup {
    Dense(DenseLookup),
    Hashed(HashMap<MultiIndex, usize>),
}

/// All `k` with support in `{1..N}` and `|k|_s <= K`, in graded-lexicographic order.
#[derive(Debug)]
pub struct IndexSet {
    n: usize,
    s: f64,
    radius: f64,
    members: Vec<MultiIndex>,
    weights: Vec<f64>,
    negation: Vec<usize>,
    lookup: Lookup,
}

impl PartialEq for IndexSet {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.s == other.s && self.members == other.members
    }
}

fn per_dim_bound(radius: f64, s: f64, j: usize) -> i32 {
    let w = bracket(j).powf(s);
    ((radius / w) * (1.0 + 1e-12) + 1e-12).floor() as i32
}

fn fits(weight: f64, radius: f64) -> bool {
    weight <= radius * (1.0 + 1e-12) + 1e-12
}

fn count_ball(j: usize, n: usize, rem: f64, s: f64, memo: &mut HashMap<(usize, u64), u128>) -> u128 {
    if j > n {
        return 1;
    }
    let key = (j, (rem * 1e9).round().max(0.0) as u64);
    if let Some(&c) = memo.get(&key) {
        return c;
    }
    let w = bracket(j).powf(s);
    let b = per_dim_bound(rem, s, j);
    let mut total = count_ball(j + 1, n, rem, s, memo);
    for v in 1..=b.max(0) {
        let sub = count_ball(j + 1, n, rem - w * v as f64, s, memo);
        total = total.saturating_add(sub.saturating_mul(2));
    }
    memo.insert(key, total);
    total
}

fn fill_ball(j: usize, n: usize, rem: f64, s: f64, cur: &mut Vec<i32>, out: &mut Vec<MultiIndex>) {
    if j > n {
        out.push(MultiIndex::from_dense(cur.clone()));
        return;
    }
    let w = bracket(j).powf(s);
    let b = per_dim_bound(rem, s, j).max(0);
    for v in -b..=b {
        cur[j - 1] = v;
        fill_ball(j + 1, n, rem - w * v.abs() as f64, s, cur, out);
    }
    cur[j - 1] = 0;
}

fn lex_padded(a: &MultiIndex, b: &MultiIndex, n: usize) -> Ordering {
    for j in 1..=n {
        match a.get(j).cmp(&b.get(j)) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

impl IndexSet {
    /// Enumerate with the default cardinality cap.
    pub fn enumerate(n: usize, radius: f64, s: f64) -> Result<Self, IndexError> {
        Self::enumerate_with_cap(n, radius, s, DEFAULT_CAP)
    }

    pub fn enumerate_with_cap(n: usize, radius: f64, s: f64, cap: usize) -> Result<Self, IndexError> {
        if n == 0 {
            return Err(IndexError::InvalidParameter("N must be at least 1".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(IndexError::InvalidParameter(format!("K must be positive, got {radius}")));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(IndexError::InvalidParameter(format!("s must be positive, got {s}")));
        }
        let mut memo = HashMap::new();
        let cardinality = count_ball(1, n, radius, s, &mut memo);
        if cardinality > cap as u128 {
            return Err(IndexError::CapExceeded { cardinality, cap });
        }
        let mut members = Vec::with_capacity(cardinality as usize);
        let mut cur = vec![0; n];
        fill_ball(1, n, radius, s, &mut cur, &mut members);
        members.retain(|k| fits(k.norm_s(s), radius));
        let grade = |k: &MultiIndex| (k.norm_s(s) * 1e9).round() as i64;
        members.sort_by(|a, b| grade(a).cmp(&grade(b)).then_with(|| lex_padded(a, b, n)));
        Ok(Self::from_sorted(n, s, radius, members))
    }

    fn from_sorted(n: usize, s: f64, radius: f64, members: Vec<MultiIndex>) -> Self {
        let weights: Vec<f64> = members.iter().map(|k| k.norm_s(s)).collect();
        let bounds: Vec<i32> = (1..=n).map(|j| per_dim_bound(radius, s, j)).collect();
        let mut strides = Vec::with_capacity(n);
        let mut size: Option<usize> = Some(1);
        for &b in &bounds {
            strides.push(size.unwrap_or(0));
            size = size.and_then(|sz| sz.checked_mul((4 * b + 1) as usize));
        }
        let lookup = match size {
            Some(sz) if sz <= DENSE_LUT_LIMIT => {
                let base = bounds
                    .iter()
                    .zip(&strides)
                    .map(|(&b, &st)| 2 * b as usize * st)
                    .sum();
                let mut dense = DenseLookup {
                    bounds,
                    strides,
                    base,
                    keys: Vec::with_capacity(members.len()),
                    lut: vec![DenseLookup::EMPTY; sz],
                };
                for (i, k) in members.iter().enumerate() {
                    let key = dense.key_of(k).expect("member inside its own box");
                    dense.keys.push(key);
                    dense.lut[key] = i as u32;
                }
                Lookup::Dense(dense)
            }
            _ => Lookup::Hashed(members.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect()),
        };
        let mut set = Self {
            n,
            s,
            radius,
            members,
            weights,
            negation: Vec::new(),
            lookup,
        };
        set.negation = set
            .members
            .iter()
            .map(|k| set.position(&k.neg()).expect("index set closed under negation"))
            .collect();
        set
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[MultiIndex] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &MultiIndex {
        &self.members[i]
    }

    /// `|k|_s` of member `i`.
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Position of the zero index (always first in the graded order).
    pub fn zero_position(&self) -> usize {
        0
    }

    /// Position of `-k` for member `i`.
    pub fn neg_position(&self, i: usize) -> usize {
        self.negation[i]
    }

    pub fn position(&self, k: &MultiIndex) -> Option<usize> {
        match &self.lookup {
            Lookup::Dense(d) => {
                let key = d.key_of(k)?;
                match d.lut[key] {
                    DenseLookup::EMPTY => None,
                    p => Some(p as usize),
                }
            }
            Lookup::Hashed(map) => map.get(k).copied(),
        }
    }

    pub fn contains(&self, k: &MultiIndex) -> bool {
        self.position(k).is_some()
    }

    /// Position of `member(i) + member(j)`, if inside the set.
    pub fn sum_position(&self, i: usize, j: usize) -> Option<usize> {
        match &self.lookup {
            Lookup::Dense(d) => match d.lut[d.keys[i] + d.keys[j] - d.base] {
                DenseLookup::EMPTY => None,
                p => Some(p as usize),
            },
            Lookup::Hashed(map) => map.get(&self.members[i].add(&self.members[j])).copied(),
        }
    }

    pub(crate) fn dense_lookup(&self) -> Option<&DenseLookup> {
        match &self.lookup {
            Lookup::Dense(d) => Some(d),
            Lookup::Hashed(_) => None,
        }
    }

    /// Members `k != 0` whose first nonzero entry is positive.
    pub fn half_positions(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.members[i].leading_sign() > 0)
            .collect()
    }

    /// Largest `|k_j|` over the set for each `j`.
    pub fn per_dim_bounds(&self) -> Vec<i32> {
        (1..=self.n).map(|j| per_dim_bound(self.radius, self.s, j)).collect()
    }

    /// True if `other` has the same `s` and every member of `self` is in `other`.
    pub fn is_subset_of(&self, other: &IndexSet) -> bool {
        self.s == other.s && self.members.iter().all(|k| other.contains(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_examples() {
        assert_eq!(MultiIndex::zero().norm_s(2.0), 0.0);
        assert_eq!(MultiIndex::unit(1, 1).norm_s(2.0), 1.0);
        assert_eq!(MultiIndex::unit(2, 3).norm_s(2.0), 12.0);
        assert_eq!(MultiIndex::zero().norm_1(), 0);
        assert_eq!(MultiIndex::from_dense(vec![1, -2]).norm_1(), 3);
        assert_eq!(MultiIndex::unit(5, 1).norm_1(), 1);
    }

    #[test]
    fn enumerate_examples() {
        let a = IndexSet::enumerate(1, 3.0, 1.0).unwrap();
        assert_eq!(a.len(), 7);
        let vals: Vec<i32> = a.members().iter().map(|k| k.get(1)).collect();
        assert_eq!(vals, vec![0, -1, 1, -2, 2, -3, 3]);

        // weight of e_2 is 2^s, so K = 1 keeps only 0 and +-e_1; K = 2 admits +-e_2
        let b = IndexSet::enumerate(2, 1.0, 1.0).unwrap();
        assert_eq!(b.len(), 3);
        assert!(!b.contains(&MultiIndex::unit(2, 1)));
        let b2 = IndexSet::enumerate(2, 2.0, 1.0).unwrap();
        for k in [MultiIndex::unit(1, 1), MultiIndex::unit(1, -1), MultiIndex::unit(2, 1), MultiIndex::unit(2, -1)] {
            assert!(b2.contains(&k));
        }

        let c = IndexSet::enumerate(2, 2.0, 2.0).unwrap();
        assert_eq!(c.len(), 5);
        assert!(c.members().iter().all(|k| k.get(2) == 0));
    }

    #[test]
    fn cap_reports_cardinality() {
        match IndexSet::enumerate_with_cap(3, 10.0, 1.0, 100) {
            Err(IndexError::CapExceeded { cardinality, cap }) => {
                assert_eq!(cap, 100);
                let full = IndexSet::enumerate(3, 10.0, 1.0).unwrap();
                assert_eq!(cardinality, full.len() as u128);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
        // curse-of-dimension request fails quickly instead of materializing
        assert!(matches!(
            IndexSet::enumerate(60, 40.0, 1.0),
            Err(IndexError::CapExceeded { .. })
        ));
    }

    #[test]
    fn text_roundtrip() {
        let k = MultiIndex::from_pairs(&[(1, 2), (3, -1)]);
        assert_eq!(k.to_string(), "1:2 3:-1");
        assert_eq!("1:2 3:-1".parse::<MultiIndex>().unwrap(), k);
        assert_eq!(MultiIndex::zero().to_string(), "");
        assert_eq!("".parse::<MultiIndex>().unwrap(), MultiIndex::zero());
        assert!("0:1".parse::<MultiIndex>().is_err());
        assert!("1:0".parse::<MultiIndex>().is_err());
        assert!("1:1 1:2".parse::<MultiIndex>().is_err());
    }

    #[test]
    fn set_structure() {
        let set = IndexSet::enumerate(2, 6.0, 1.3).unwrap();
        assert!(set.member(set.zero_position()).is_zero());
        for (i, k) in set.members().iter().enumerate() {
            assert_eq!(set.member(set.neg_position(i)), &k.neg());
            assert_eq!(set.position(k), Some(i));
            assert!(k.norm_s(1.3) <= 6.0 + 1e-9);
            assert!(k.max_position() <= 2);
        }
        for w in set.weights().windows(2) {
            assert!(w[0] <= w[1] + 1e-9);
        }
        let again = IndexSet::enumerate(2, 6.0, 1.3).unwrap();
        assert_eq!(set.members(), again.members());
    }

    #[test]
    fn sum_positions_agree_with_hashing() {
        let set = IndexSet::enumerate(3, 4.0, 1.0).unwrap();
        for i in 0..set.len() {
            for j in 0..set.len() {
                let direct = set.position(&set.member(i).add(set.member(j)));
                assert_eq!(set.sum_position(i, j), direct);
            }
        }
    }

    #[test]
    fn decode_inverts_keys() {
        let set = IndexSet::enumerate(2, 5.0, 1.0).unwrap();
        let d = set.dense_lookup().unwrap();
        for (i, k) in set.members().iter().enumerate() {
            assert_eq!(&d.decode(d.keys[i]), k);
        }
    }
}
