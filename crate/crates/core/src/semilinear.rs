//! Ultimately periodic subsets of ℕ in a canonical normal form.
//!
//! A set is stored as a threshold `θ`, a period `p` and the membership of
//! `0 … θ+p−1`; membership of `t ≥ θ` is that of `θ + (t − θ) mod p`. In
//! normal form `p` is the least period and `θ` the least threshold for it, so
//! two sets are equal exactly when their normal forms are.

use std::collections::BTreeSet;
use std::fmt;

use num_integer::Integer;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemiLinearError {
    #[error("period must be positive")]
    ZeroPeriod,
    #[error("cannot parse semi-linear set: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SemiLinearSet {
    threshold: u64,
    period: u64,
    member: Vec<bool>,
}

impl SemiLinearSet {
    pub fn empty() -> Self {
        SemiLinearSet {
            threshold: 0,
            period: 1,
            member: vec![false],
        }
    }

    /// All of ℕ.
    pub fn naturals() -> Self {
        SemiLinearSet {
            threshold: 0,
            period: 1,
            member: vec![true],
        }
    }

    /// `{base + k·period : k ≥ 0}`.
    pub fn linear(base: u64, period: u64) -> Result<Self, SemiLinearError> {
        Self::from_parts(&[], period, &[base])
    }

    pub fn finite(elements: &[u64]) -> Self {
        Self::from_parts(elements, 1, &[]).expect("period 1")
    }

    /// `F ∪ ⋃_i {b_i + k·p}` for arbitrary naturals.
    pub fn from_parts(finite: &[u64], period: u64, bases: &[u64]) -> Result<Self, SemiLinearError> {
        if period == 0 {
            return Err(SemiLinearError::ZeroPeriod);
        }
        let threshold = finite
            .iter()
            .map(|&f| f + 1)
            .chain(bases.iter().copied())
            .max()
            .unwrap_or(0);
        Ok(Self::from_fn(threshold, period, |t| {
            finite.contains(&t) || bases.iter().any(|&b| t >= b && (t - b) % period == 0)
        }))
    }

    /// The set agreeing with `pred` on `[0, θ + p)` and `p`-periodic from `θ`.
    pub fn from_fn(threshold: u64, period: u64, pred: impl Fn(u64) -> bool) -> Self {
        assert!(period > 0, "period must be positive");
        let member = (0..threshold + period).map(pred).collect();
        SemiLinearSet {
            threshold,
            period,
            member,
        }
        .normalized()
    }

    fn normalized(mut self) -> Self {
        let th = self.threshold as usize;
        let p = self.period as usize;
        let cycle = &self.member[th..th + p];
        let least = (1..=p)
            .find(|&d| p.is_multiple_of(d) && (0..p).all(|i| cycle[i] == cycle[i % d]))
            .unwrap_or(p);
        self.member.truncate(th + least);
        self.period = least as u64;
        let p = least;
        let mut th = th;
        while th > 0 && self.member[th - 1] == self.member[th - 1 + p] {
            th -= 1;
        }
        self.member.truncate(th + p);
        self.threshold = th as u64;
        self
    }

    pub fn member(&self, t: u64) -> bool {
        let idx = if t < self.threshold {
            t
        } else {
            self.threshold + (t - self.threshold) % self.period
        };
        self.member[idx as usize]
    }

    pub fn is_empty(&self) -> bool {
        !self.member.iter().any(|&m| m)
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    /// Elements below the threshold.
    pub fn finite_part(&self) -> Vec<u64> {
        (0..self.threshold).filter(|&t| self.member(t)).collect()
    }

    /// Least representatives `≥ θ` of the periodic residue classes.
    pub fn bases(&self) -> Vec<u64> {
        (self.threshold..self.threshold + self.period)
            .filter(|&t| self.member(t))
            .collect()
    }

    fn combine(&self, other: &Self, op: impl Fn(bool, bool) -> bool) -> Self {
        let threshold = self.threshold.max(other.threshold);
        let period = self.period.lcm(&other.period);
        Self::from_fn(threshold, period, |t| op(self.member(t), other.member(t)))
    }

    pub fn union(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a && b)
    }

    /// Complement within ℕ.
    pub fn complement(&self) -> Self {
        Self::from_fn(self.threshold, self.period, |t| !self.member(t))
    }

    /// `{t : t + k ∈ self}`.
    pub fn shift_down(&self, k: u64) -> Self {
        Self::from_fn(self.threshold.saturating_sub(k), self.period, |t| self.member(t + k))
    }

    pub fn parse(s: &str) -> Result<Self, SemiLinearError> {
        let bad = || SemiLinearError::Parse(s.to_string());
        let set = |body: &str| -> Result<Vec<u64>, SemiLinearError> {
            let inner = body
                .trim()
                .strip_prefix('{')
                .and_then(|b| b.strip_suffix('}'))
                .ok_or_else(bad)?;
            inner
                .split(',')
                .map(str::trim)
                .filter(|x| !x.is_empty())
                .map(|x| x.parse::<u64>().map_err(|_| bad()))
                .collect()
        };
        let (mut finite, mut period, mut bases) = (None, None, None);
        for word in s.split_whitespace() {
            match word.split_once('=') {
                Some(("F", v)) => finite = Some(set(v)?),
                Some(("p", v)) => period = Some(v.parse::<u64>().map_err(|_| bad())?),
                Some(("B", v)) => bases = Some(set(v)?),
                _ => return Err(bad()),
            }
        }
        match (finite, period, bases) {
            (Some(f), Some(p), Some(b)) => Self::from_parts(&f, p, &b),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for SemiLinearSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |xs: Vec<u64>| {
            let items: BTreeSet<u64> = xs.into_iter().collect();
            items.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
        };
        write!(
            f,
            "F={{{}}} p={} B={{{}}}",
            list(self.finite_part()),
            self.period,
            list(self.bases())
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn progression_intersection_by_crt() {
        let a = SemiLinearSet::linear(2, 3).unwrap();
        let b = SemiLinearSet::linear(1, 2).unwrap();
        let c = a.intersect(&b);
        assert_eq!(c, SemiLinearSet::linear(5, 6).unwrap());
        for t in 0..60 {
            assert_eq!(c.member(t), t >= 5 && (t - 5) % 6 == 0);
        }
        assert!(c.member(17));
        assert!(!c.member(6));
    }

    #[test]
    fn parity_complement() {
        let even = SemiLinearSet::linear(0, 2).unwrap();
        assert_eq!(even.complement(), SemiLinearSet::linear(1, 2).unwrap());
        assert!(even.intersect(&even.complement()).is_empty());
    }

    #[test]
    fn union_idempotent() {
        let a = SemiLinearSet::from_parts(&[3], 5, &[10]).unwrap();
        assert_eq!(a.union(&a), a);
    }

    #[test]
    fn normal_form_is_canonical() {
        let a = SemiLinearSet::from_parts(&[0, 2, 4], 2, &[6]).unwrap();
        assert_eq!(a, SemiLinearSet::linear(0, 2).unwrap());
        assert_eq!(a.threshold(), 0);
        let b = SemiLinearSet::from_parts(&[], 4, &[1, 3]).unwrap();
        assert_eq!(b, SemiLinearSet::linear(1, 2).unwrap());
        assert_eq!(
            SemiLinearSet::from_parts(&[], 3, &[0, 1, 2]).unwrap(),
            SemiLinearSet::naturals()
        );
    }

    #[test]
    fn rendering_round_trips() {
        let a = SemiLinearSet::from_parts(&[1, 4], 3, &[7, 8]).unwrap();
        assert_eq!(a.to_string(), "F={1,4} p=3 B={7,8}");
        assert_eq!(SemiLinearSet::parse(&a.to_string()).unwrap(), a);
        assert_eq!(SemiLinearSet::empty().to_string(), "F={} p=1 B={}");
        assert_eq!(SemiLinearSet::naturals().to_string(), "F={} p=1 B={0}");
    }

    #[test]
    fn shift_down_drops_leading_elements() {
        let a = SemiLinearSet::from_parts(&[0], 2, &[3]).unwrap();
        let s = a.shift_down(1);
        for t in 0..30 {
            assert_eq!(s.member(t), a.member(t + 1));
        }
    }
}
