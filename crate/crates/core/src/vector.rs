//! Finitely supported rational sequences and intervals of indices.
//!
//! A [`FinVector`] plays both roles of the duality: vector (`x`, `y`, ...) and
//! functional (`f`, `g`, ...). Indices are 1-based; index 0 is never valid.
//! No zero coordinate is ever stored, so the key set of the map *is* the
//! support.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// A closed interval `[lo, hi]` of positive indices, `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IntervalE {
    lo: u64,
    hi: u64,
}

impl IntervalE {
    /// New interval; panics if `lo` is 0 or `lo > hi` (caller bug).
    pub fn new(lo: u64, hi: u64) -> Self {
        assert!(lo >= 1, "indices are 1-based");
        assert!(lo <= hi, "interval requires lo <= hi");
        IntervalE { lo, hi }
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn contains(&self, i: u64) -> bool {
        self.lo <= i && i <= self.hi
    }

    /// `k * [lo, hi] = [k*lo, k*hi]`.
    pub fn scale(&self, k: u64) -> Self {
        assert!(k >= 1);
        IntervalE::new(self.lo * k, self.hi * k)
    }

    pub fn intersect(&self, other: &IntervalE) -> Option<IntervalE> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo <= hi {
            Some(IntervalE { lo, hi })
        } else {
            None
        }
    }
}

impl fmt::Display for IntervalE {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// Finitely supported sequence of exact rationals with 1-based indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FinVector {
    coords: BTreeMap<u64, Rational>,
}

impl FinVector {
    pub fn zero() -> Self {
        FinVector::default()
    }

    /// Basis vector/functional `±e_i`.
    pub fn unit(index: u64, negative: bool) -> Self {
        assert!(index >= 1, "indices are 1-based");
        let mut coords = BTreeMap::new();
        let one = rational::int(if negative { -1 } else { 1 });
        coords.insert(index, one);
        FinVector { coords }
    }

    /// Builds from `(index, coefficient)` pairs, dropping zero coefficients.
    /// Repeated indices accumulate.
    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (u64, Rational)>,
    {
        let mut v = FinVector::zero();
        for (i, q) in pairs {
            v.add_at(i, q);
        }
        v
    }

    /// Adds `q` to the coordinate at `i`, keeping the no-stored-zero invariant.
    pub fn add_at(&mut self, index: u64, q: Rational) {
        assert!(index >= 1, "indices are 1-based");
        if q.is_zero() {
            return;
        }
        let entry = self.coords.entry(index).or_insert_with(Rational::zero);
        *entry += q;
        if entry.is_zero() {
            self.coords.remove(&index);
        }
    }

    pub fn get(&self, index: u64) -> Rational {
        self.coords.get(&index).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.coords.len()
    }

    pub fn support(&self) -> impl Iterator<Item = u64> + '_ {
        self.coords.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &Rational)> {
        self.coords.iter().map(|(i, q)| (*i, q))
    }

    pub fn min_support(&self) -> Option<u64> {
        self.coords.keys().next().copied()
    }

    pub fn max_support(&self) -> Option<u64> {
        self.coords.keys().next_back().copied()
    }

    /// Smallest interval containing the support; `None` for the zero vector.
    pub fn range(&self) -> Option<IntervalE> {
        Some(IntervalE::new(self.min_support()?, self.max_support()?))
    }

    /// Coordinates outside `e` removed, inside unchanged.
    pub fn restrict(&self, e: &IntervalE) -> FinVector {
        let coords = self
            .coords
            .range(e.lo()..=e.hi())
            .map(|(i, q)| (*i, q.clone()))
            .collect();
        FinVector { coords }
    }

    /// Restriction to an optional interval; `None` means the empty interval.
    pub fn restrict_opt(&self, e: &Option<IntervalE>) -> FinVector {
        match e {
            Some(e) => self.restrict(e),
            None => FinVector::zero(),
        }
    }

    pub fn add(&self, other: &FinVector) -> FinVector {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    /// In-place accumulation; the way to sum long lists without quadratic
    /// cloning.
    pub fn add_assign(&mut self, other: &FinVector) {
        for (i, q) in other.iter() {
            self.add_at(i, q.clone());
        }
    }

    pub fn sub(&self, other: &FinVector) -> FinVector {
        let mut out = self.clone();
        for (i, q) in other.iter() {
            out.add_at(i, -q.clone());
        }
        out
    }

    pub fn negate(&self) -> FinVector {
        let coords = self.coords.iter().map(|(i, q)| (*i, -q.clone())).collect();
        FinVector { coords }
    }

    pub fn scale(&self, k: &Rational) -> FinVector {
        if k.is_zero() {
            return FinVector::zero();
        }
        let coords = self.coords.iter().map(|(i, q)| (*i, q * k)).collect();
        FinVector { coords }
    }

    /// Exact duality pairing `f(x) = Σ_i f_i x_i`.
    pub fn pair(f: &FinVector, x: &FinVector) -> Rational {
        let mut acc = Rational::zero();
        if f.is_zero() || x.is_zero() {
            return acc;
        }
        // Walk the smaller support, restricted to the common window, and look
        // up in the larger.
        let (small, large) = if f.support_len() <= x.support_len() {
            (f, x)
        } else {
            (x, f)
        };
        let lo = small.min_support().unwrap().max(large.min_support().unwrap());
        let hi = small.max_support().unwrap().min(large.max_support().unwrap());
        if lo > hi {
            return acc;
        }
        for (i, q) in small.coords.range(lo..=hi) {
            if let Some(p) = large.coords.get(i) {
                acc += q * p;
            }
        }
        acc
    }

    /// Exact `Σ_i |x_i|`.
    pub fn norm_one(&self) -> Rational {
        let mut acc = Rational::zero();
        for q in self.coords.values() {
            acc += q.abs();
        }
        acc
    }

    /// Exact `max_i |x_i|` (0 for the zero vector).
    pub fn norm_infty(&self) -> Rational {
        let mut best = Rational::zero();
        for q in self.coords.values() {
            let a = q.abs();
            if a > best {
                best = a;
            }
        }
        best
    }

    /// `self < other` in the block ordering: max support strictly below the
    /// other's min support. False when either is zero.
    pub fn is_block_before(&self, other: &FinVector) -> bool {
        match (self.max_support(), other.min_support()) {
            (Some(a), Some(b)) => a < b,
            _ => false,
        }
    }

    /// Maps every index through `g` (which must be strictly increasing on the
    /// support; the coordinate multiset is preserved).
    pub fn map_indices(&self, g: impl Fn(u64) -> u64) -> FinVector {
        let coords = self.coords.iter().map(|(i, q)| (g(*i), q.clone())).collect();
        FinVector { coords }
    }

    /// Canonical text form: sorted `index:num/den` entries joined by commas.
    pub fn to_text(&self) -> String {
        self.coords
            .iter()
            .map(|(i, q)| format!("{}:{}", i, rational::to_canonical(q)))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Parses the `to_text` form; the empty string is the zero vector.
    pub fn parse(text: &str) -> Result<FinVector> {
        let text = text.trim();
        let mut v = FinVector::zero();
        if text.is_empty() {
            return Ok(v);
        }
        for part in text.split(',') {
            let (i, q) = part
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected index:value, got {part:?}")))?;
            let i: u64 = i
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad index: {part:?}")))?;
            if i == 0 {
                return Err(Error::Parse("index 0 is not valid (1-based)".into()));
            }
            v.add_at(i, rational::parse(q)?);
        }
        Ok(v)
    }
}

/// True when consecutive nonzero members have strictly increasing supports.
/// Zero members are rejected (a block sequence has no zero entries).
pub fn is_block_sequence(seq: &[&FinVector]) -> bool {
    if seq.iter().any(|f| f.is_zero()) {
        return false;
    }
    seq.windows(2).all(|w| w[0].is_block_before(w[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn restrict_examples() {
        let v = FinVector::from_pairs([(1, int(1)), (3, int(2))]);
        let r = v.restrict(&IntervalE::new(2, 5));
        assert_eq!(r, FinVector::from_pairs([(3, int(2))]));

        let v = FinVector::from_pairs([(2, int(1))]);
        assert!(v.restrict(&IntervalE::new(3, 9)).is_zero());

        let v = FinVector::from_pairs([(1, int(1)), (2, int(1)), (3, int(1))]);
        assert_eq!(v.restrict(&IntervalE::new(1, 3)), v);
    }

    #[test]
    fn pairing_examples() {
        let e1 = FinVector::unit(1, false);
        assert_eq!(FinVector::pair(&e1, &e1), int(1));

        let f = FinVector::from_pairs([(1, int(1)), (2, int(1))]);
        let x = FinVector::from_pairs([(1, int(1)), (2, int(-1))]);
        assert_eq!(FinVector::pair(&f, &x), int(0));

        let f = FinVector::from_pairs([(1, ratio(1, 2)), (2, ratio(1, 2))]);
        let x = FinVector::from_pairs([(1, int(1)), (2, int(1))]);
        assert_eq!(FinVector::pair(&f, &x), int(1));
    }

    #[test]
    fn norms() {
        let v = FinVector::from_pairs([(1, int(3)), (2, int(-4))]);
        assert_eq!(v.norm_one(), int(7));
        assert_eq!(v.norm_infty(), int(4));
        assert_eq!(FinVector::zero().norm_one(), int(0));
        assert_eq!(FinVector::zero().norm_infty(), int(0));
        let e5 = FinVector::unit(5, false);
        assert_eq!(e5.norm_one(), int(1));
        assert_eq!(e5.norm_infty(), int(1));
    }

    #[test]
    fn no_stored_zero() {
        let mut v = FinVector::from_pairs([(1, int(1))]);
        v.add_at(1, int(-1));
        assert!(v.is_zero());
        assert_eq!(v.support_len(), 0);
    }

    #[test]
    fn interval_scale() {
        assert_eq!(IntervalE::new(2, 5).scale(3), IntervalE::new(6, 15));
    }

    #[test]
    fn text_round_trip() {
        let v = FinVector::from_pairs([(1, int(1)), (4, ratio(-3, 2))]);
        let t = v.to_text();
        assert_eq!(t, "1:1/1,4:-3/2");
        assert_eq!(FinVector::parse(&t).unwrap(), v);
        assert_eq!(FinVector::parse("1:1,2:1/2").unwrap().get(2), ratio(1, 2));
        assert!(FinVector::parse("0:1").is_err());
    }

    #[test]
    fn block_ordering() {
        let a = FinVector::from_pairs([(1, int(1)), (2, int(1))]);
        let b = FinVector::from_pairs([(3, int(1))]);
        assert!(a.is_block_before(&b));
        assert!(!b.is_block_before(&a));
        assert!(is_block_sequence(&[&a, &b]));
        assert!(!is_block_sequence(&[&a, &a]));
        assert!(!is_block_sequence(&[&a, &FinVector::zero()]));
    }
}
