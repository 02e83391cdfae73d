//! Canonical serialization of functional sequences and the injective coding
//! registry that assigns weight indices in `4ℕ` to them.
//!
//! The registry is the persistent state of the whole construction: special
//! sequences get their odd-position weights from it, so determinism and
//! bit-exact reload are load-bearing. The canonical form of a sequence is the
//! registry key; two sequences agree iff their keys agree.
//!
//! Assignment policy by mode:
//!
//! * conforming — the smallest unused multiple of 4 that is at least
//!   `4 · maxsupp(f_d) · ‖f_1 + … + f_d‖_∞^{-1}`;
//! * compact — the smallest unused multiple of 4 (the growth bound is
//!   dropped, which is exactly what makes desk-scale constructions runnable;
//!   reports carry the mode so nothing silently pretends otherwise).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::schedule::ScheduleMode;
use crate::vector::{is_block_sequence, FinVector};

/// Canonical form of one functional: `{k}[i1:n1/d1,...]` with `k` the support
/// size and entries in increasing index order. `[e_1^*]` serializes to
/// `1[1:1/1]`.
pub fn canonical_serialize_functional(f: &FinVector) -> String {
    let mut out = String::new();
    write!(out, "{}[", f.support_len()).unwrap();
    let mut first = true;
    for (i, q) in f.iter() {
        if !first {
            out.push(',');
        }
        first = false;
        write!(out, "{}:{}", i, rational::to_canonical(q)).unwrap();
    }
    out.push(']');
    out
}

/// Canonical form of a sequence: `{d}(F1F2...Fd)` with each `Fi` the
/// functional form above. Length prefixes make the encoding injective.
pub fn canonical_serialize(seq: &[FinVector]) -> String {
    let mut out = String::new();
    write!(out, "{}(", seq.len()).unwrap();
    for f in seq {
        out.push_str(&canonical_serialize_functional(f));
    }
    out.push(')');
    out
}

fn hash_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{b:02x}").unwrap();
    }
    out
}

/// Persistent injective coding from block sequences of functionals to weight
/// indices in `4ℕ`.
#[derive(Debug, Clone)]
pub struct SigmaRegistry {
    mode: ScheduleMode,
    entries: BTreeMap<String, u64>,
    used: BTreeSet<u64>,
}

impl SigmaRegistry {
    pub fn new(mode: ScheduleMode) -> Self {
        SigmaRegistry {
            mode,
            entries: BTreeMap::new(),
            used: BTreeSet::new(),
        }
    }

    pub fn mode(&self) -> ScheduleMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, seq: &[FinVector]) -> Option<u64> {
        self.entries.get(&canonical_serialize(seq)).copied()
    }

    /// Returns the existing assignment for `seq` or makes a fresh one.
    /// Idempotent; rejects non-block or empty input.
    pub fn assign(&mut self, seq: &[FinVector]) -> Result<u64> {
        if seq.is_empty() {
            return Err(Error::NonBlock("sigma of the empty sequence".into()));
        }
        let refs: Vec<&FinVector> = seq.iter().collect();
        if !is_block_sequence(&refs) {
            return Err(Error::NonBlock(
                "sigma domain is block sequences of nonzero functionals".into(),
            ));
        }
        let key = canonical_serialize(seq);
        if let Some(v) = self.entries.get(&key) {
            return Ok(*v);
        }
        let floor = match self.mode {
            ScheduleMode::Compact => 4,
            ScheduleMode::Conforming => {
                let max_supp = seq.last().unwrap().max_support().unwrap();
                let mut sum = FinVector::zero();
                for f in seq {
                    sum.add_assign(f);
                }
                let sup = sum.norm_infty();
                if sup.is_zero() {
                    // Cancellation cannot happen for block members, but keep
                    // the degenerate case explicit.
                    return Err(Error::NonBlock("sigma of a vanishing sum".into()));
                }
                let bound = Rational::from_integer(BigInt::from(4 * max_supp as i128)) / sup;
                ceil_to_multiple_of_4(&bound)?
            }
        };
        let mut candidate = floor.max(4);
        while self.used.contains(&candidate) {
            candidate = candidate
                .checked_add(4)
                .ok_or_else(|| Error::Capacity("sigma index overflow".into()))?;
        }
        self.entries.insert(key, candidate);
        self.used.insert(candidate);
        Ok(candidate)
    }

    /// True when distinct keys always map to distinct indices.
    pub fn is_injective(&self) -> bool {
        let values: BTreeSet<u64> = self.entries.values().copied().collect();
        values.len() == self.entries.len()
    }

    /// Registry file: a mode header followed by one line per entry,
    /// `sha256(serialization)<TAB>serialization<TAB>sigma`, ordered by the
    /// assigned index. Saving and reloading is bit-exact.
    pub fn to_file_string(&self) -> String {
        let mode = match self.mode {
            ScheduleMode::Conforming => "conforming",
            ScheduleMode::Compact => "compact",
        };
        let mut lines: Vec<(u64, &String)> =
            self.entries.iter().map(|(k, v)| (*v, k)).collect();
        lines.sort();
        let mut out = format!("# sigma-registry v1 mode={mode}\n");
        for (value, key) in lines {
            writeln!(out, "{}\t{}\t{}", hash_hex(key), key, value).unwrap();
        }
        out
    }

    pub fn from_file_string(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty registry file".into()))?;
        let mode = if header.contains("mode=conforming") {
            ScheduleMode::Conforming
        } else if header.contains("mode=compact") {
            ScheduleMode::Compact
        } else {
            return Err(Error::Parse(format!("bad registry header: {header:?}")));
        };
        let mut registry = SigmaRegistry::new(mode);
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (hash, key, value) = (
                parts.next().ok_or_else(|| Error::Parse("short registry line".into()))?,
                parts.next().ok_or_else(|| Error::Parse("short registry line".into()))?,
                parts.next().ok_or_else(|| Error::Parse("short registry line".into()))?,
            );
            if hash_hex(key) != hash {
                return Err(Error::Parse(format!("registry hash mismatch on {key:?}")));
            }
            let value: u64 = value
                .parse()
                .map_err(|_| Error::Parse(format!("bad sigma value {value:?}")))?;
            if value % 4 != 0 || value == 0 {
                return Err(Error::Parse(format!("sigma {value} is not in 4N")));
            }
            if !registry.used.insert(value) {
                return Err(Error::Parse(format!("duplicate sigma {value}")));
            }
            registry.entries.insert(key.to_string(), value);
        }
        Ok(registry)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_file_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        SigmaRegistry::from_file_string(&text)
    }

    /// All entries in index order, for inspection commands.
    pub fn entries_by_index(&self) -> Vec<(u64, String)> {
        let mut out: Vec<(u64, String)> =
            self.entries.iter().map(|(k, v)| (*v, k.clone())).collect();
        out.sort();
        out
    }
}

fn ceil_to_multiple_of_4(bound: &Rational) -> Result<u64> {
    if bound.is_negative() || bound.is_zero() {
        return Ok(4);
    }
    let ceil = bound.ceil().to_integer();
    let four = BigInt::from(4);
    let rem = &ceil % &four;
    let rounded = if rem.is_zero() { ceil } else { ceil + (four - rem) };
    rounded
        .to_u64()
        .ok_or_else(|| Error::Capacity("sigma growth bound exceeds u64".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn block_pair(scale: &Rational) -> Vec<FinVector> {
        vec![
            FinVector::from_pairs([(1, scale.clone()), (2, scale.clone())]),
            FinVector::from_pairs([(5, scale.clone()), (6, scale.clone())]),
        ]
    }

    #[test]
    fn canonical_forms_are_fixed() {
        let e1 = FinVector::unit(1, false);
        assert_eq!(canonical_serialize_functional(&e1), "1[1:1/1]");
        assert_eq!(canonical_serialize(std::slice::from_ref(&e1)), "1(1[1:1/1])");
        let e2 = FinVector::unit(2, false);
        assert_ne!(
            canonical_serialize(std::slice::from_ref(&e1)),
            canonical_serialize(std::slice::from_ref(&e2))
        );
    }

    #[test]
    fn conforming_growth_bound() {
        // maxsupp(f_d) = 6, sup-norm 1/2: bound = 4*6*2 = 48
        let mut reg = SigmaRegistry::new(ScheduleMode::Conforming);
        let seq = block_pair(&ratio(1, 2));
        assert_eq!(reg.assign(&seq).unwrap(), 48);
        // idempotent
        assert_eq!(reg.assign(&seq).unwrap(), 48);
        // a second distinct sequence with the same bound takes the next slot
        let seq2 = vec![
            FinVector::from_pairs([(1, ratio(1, 2))]),
            FinVector::from_pairs([(5, ratio(1, 2)), (6, ratio(1, 2))]),
        ];
        assert_eq!(reg.assign(&seq2).unwrap(), 52);
        assert!(reg.is_injective());
    }

    #[test]
    fn compact_assigns_next_free() {
        let mut reg = SigmaRegistry::new(ScheduleMode::Compact);
        let a = vec![FinVector::unit(1, false)];
        let b = vec![FinVector::unit(2, false)];
        assert_eq!(reg.assign(&a).unwrap(), 4);
        assert_eq!(reg.assign(&b).unwrap(), 8);
        assert_eq!(reg.assign(&a).unwrap(), 4);
    }

    #[test]
    fn non_block_rejected() {
        let mut reg = SigmaRegistry::new(ScheduleMode::Compact);
        let overlap = vec![
            FinVector::from_pairs([(1, int(1)), (3, int(1))]),
            FinVector::from_pairs([(2, int(1))]),
        ];
        assert!(reg.assign(&overlap).is_err());
        assert!(reg.assign(&[]).is_err());
    }

    #[test]
    fn file_round_trip_is_bit_exact() {
        let mut reg = SigmaRegistry::new(ScheduleMode::Conforming);
        reg.assign(&block_pair(&ratio(1, 2))).unwrap();
        reg.assign(&[FinVector::unit(9, false), FinVector::unit(12, true)])
            .unwrap();
        let text = reg.to_file_string();
        let back = SigmaRegistry::from_file_string(&text).unwrap();
        assert_eq!(back.to_file_string(), text);
        assert_eq!(back.lookup(&block_pair(&ratio(1, 2))), Some(48));
    }

    #[test]
    fn corrupted_file_rejected() {
        let mut reg = SigmaRegistry::new(ScheduleMode::Compact);
        reg.assign(&[FinVector::unit(1, false)]).unwrap();
        let text = reg.to_file_string().replace("1[1:1/1]", "1[2:1/1]");
        assert!(SigmaRegistry::from_file_string(&text).is_err());
    }
}
