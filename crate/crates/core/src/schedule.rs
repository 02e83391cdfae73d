//! The weight/arity parameter sequences `(m_j)`, `(n_j)`.
//!
//! Two modes:
//!
//! * `conforming` — the closed-form growth law `m_1 = 2`, `n_1 = 4`,
//!   `m_{j+1} = m_j^5`, `n_{j+1} = (5 n_j)^{s_j}` with `s_j = log2(m_{j+1}^3)`.
//!   These numbers explode (`n_2 = 20^15`); the mode exists so that
//!   feasibility checks and infeasibility reports are honest, and indices past
//!   the computable horizon return an explicit error instead of a wrong value.
//! * `compact` — a small explicit table plus a declared doubling extension
//!   law, which makes the higher constructions executable at desk scale.
//!
//! Invariants enforced on construction: all values even, both sequences
//! strictly increasing, `m_j <= n_j`, `m_1 >= 2`. (Strict `m_j < n_j` is the
//! natural requirement but the standard desk-scale table `m = (2,4,8)`,
//! `n = (4,6,8)` touches equality at `j = 3`, so equality is tolerated.)

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Largest conforming index for which `m_j` is materialized (`m_10` has about
/// two million bits). `n_j` stops earlier; `n_5` would need hundreds of MB.
const CONFORMING_M_CAP: u64 = 10;
const CONFORMING_N_CAP: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleMode {
    Conforming,
    Compact,
}

/// The sequences `(m_j)`, `(n_j)` with their mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterSchedule {
    mode: ScheduleMode,
    /// Explicit table entries for `j = 1..=len` (compact mode only).
    m_table: Vec<u64>,
    n_table: Vec<u64>,
}

impl ParameterSchedule {
    /// The closed-form growth schedule.
    pub fn conforming() -> Self {
        ParameterSchedule {
            mode: ScheduleMode::Conforming,
            m_table: Vec::new(),
            n_table: Vec::new(),
        }
    }

    /// A compact schedule from explicit tables. Beyond the table the declared
    /// extension law takes over:
    /// `m_{L+t} = m_L * 2^t`, `n_{L+t} = max(n_L, m_L) * 2^{t+1}`.
    pub fn compact(m: &[u64], n: &[u64]) -> Result<Self> {
        if m.is_empty() || m.len() != n.len() {
            return Err(Error::Parse(
                "compact schedule needs equal-length nonempty m and n tables".into(),
            ));
        }
        if m[0] < 2 {
            return Err(Error::Parse("m_1 must be at least 2".into()));
        }
        for j in 0..m.len() {
            if m[j] % 2 != 0 || n[j] % 2 != 0 {
                return Err(Error::Parse("schedule entries must be even".into()));
            }
            if m[j] > n[j] {
                return Err(Error::Parse(format!(
                    "need m_j <= n_j, got m_{}={} > n_{}={}",
                    j + 1,
                    m[j],
                    j + 1,
                    n[j]
                )));
            }
            if j > 0 && (m[j] <= m[j - 1] || n[j] <= n[j - 1]) {
                return Err(Error::Parse("schedule tables must be strictly increasing".into()));
            }
        }
        Ok(ParameterSchedule {
            mode: ScheduleMode::Compact,
            m_table: m.to_vec(),
            n_table: n.to_vec(),
        })
    }

    /// The default desk-scale schedule.
    pub fn compact_default() -> Self {
        ParameterSchedule::compact(&[2, 4, 8], &[4, 6, 8]).expect("valid table")
    }

    pub fn mode(&self) -> ScheduleMode {
        self.mode
    }

    pub fn is_conforming(&self) -> bool {
        self.mode == ScheduleMode::Conforming
    }

    pub fn table_len(&self) -> usize {
        self.m_table.len()
    }

    /// `m_j`, `j >= 1`.
    pub fn m(&self, j: u64) -> Result<BigUint> {
        if j == 0 {
            return Err(Error::Parse("schedule index 0 (indices are 1-based)".into()));
        }
        match self.mode {
            ScheduleMode::Conforming => {
                if j > CONFORMING_M_CAP {
                    return Err(Error::ConformingInfeasible(format!(
                        "m_{j} exceeds the computable horizon (index cap {CONFORMING_M_CAP})"
                    )));
                }
                // m_j = 2^(5^(j-1))
                let exp = 5u64.pow((j - 1) as u32);
                Ok(BigUint::one() << (exp as usize))
            }
            ScheduleMode::Compact => {
                let len = self.m_table.len() as u64;
                if j <= len {
                    Ok(BigUint::from(self.m_table[(j - 1) as usize]))
                } else {
                    let t = (j - len) as usize;
                    Ok(BigUint::from(self.m_table[(len - 1) as usize]) << t)
                }
            }
        }
    }

    /// `n_j`, `j >= 1`.
    pub fn n(&self, j: u64) -> Result<BigUint> {
        if j == 0 {
            return Err(Error::Parse("schedule index 0 (indices are 1-based)".into()));
        }
        match self.mode {
            ScheduleMode::Conforming => {
                if j > CONFORMING_N_CAP {
                    return Err(Error::ConformingInfeasible(format!(
                        "n_{j} exceeds the computable horizon (index cap {CONFORMING_N_CAP})"
                    )));
                }
                let mut n = BigUint::from(4u64);
                for i in 1..j {
                    // s_i = log2(m_{i+1}^3) = 3 * 5^i
                    let s = 3 * 5u64.pow(i as u32);
                    n = (n * BigUint::from(5u64)).pow(s as u32);
                }
                Ok(n)
            }
            ScheduleMode::Compact => {
                let len = self.n_table.len() as u64;
                if j <= len {
                    Ok(BigUint::from(self.n_table[(j - 1) as usize]))
                } else {
                    let t = (j - len) as usize;
                    let base = self.n_table[(len - 1) as usize].max(self.m_table[(len - 1) as usize]);
                    Ok(BigUint::from(base) << (t + 1))
                }
            }
        }
    }

    /// The weight value `m_j^{-1}`.
    pub fn weight(&self, j: u64) -> Result<Rational> {
        let m = self.m(j)?;
        Ok(Rational::new(1.into(), m.into()))
    }

    /// Whether `d` children are allowed at weight index `j` (`d <= n_j`).
    pub fn arity_allows(&self, j: u64, d: usize) -> Result<bool> {
        Ok(BigUint::from(d as u64) <= self.n(j)?)
    }

    /// Smallest `J >= 0` with `m_{J+1} > ratio`. Exists because `(m_j)` is
    /// unbounded in both modes; errors if it lies past the conforming horizon.
    pub fn weight_horizon(&self, ratio: &Rational) -> Result<u64> {
        let mut j = 0u64;
        loop {
            let m = self.m(j + 1)?;
            if Rational::from_integer(m.into()) > *ratio {
                return Ok(j);
            }
            j += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn conforming_values() {
        let s = ParameterSchedule::conforming();
        assert_eq!(s.m(1).unwrap(), BigUint::from(2u64));
        assert_eq!(s.m(2).unwrap(), BigUint::from(32u64));
        assert_eq!(s.m(3).unwrap(), BigUint::from(32u64).pow(5));
        assert_eq!(s.n(1).unwrap(), BigUint::from(4u64));
        assert_eq!(s.n(2).unwrap(), BigUint::from(20u64).pow(15));
        assert!(s.m(11).is_err());
        assert!(s.n(5).is_err());
    }

    #[test]
    fn compact_table_and_extension() {
        let s = ParameterSchedule::compact(&[2, 4, 8], &[4, 6, 8]).unwrap();
        assert_eq!(s.m(3).unwrap(), BigUint::from(8u64));
        // extension law: m_4 = 16, n_4 = 2*max(8,8)*... = 8*2^2 = 32
        assert_eq!(s.m(4).unwrap(), BigUint::from(16u64));
        assert_eq!(s.n(4).unwrap(), BigUint::from(32u64));
        assert_eq!(s.m(5).unwrap(), BigUint::from(32u64));
        assert_eq!(s.n(5).unwrap(), BigUint::from(64u64));
        // m_j <= n_j holds along the extension
        for j in 1..=12 {
            assert!(s.m(j).unwrap() <= s.n(j).unwrap(), "j={j}");
        }
    }

    #[test]
    fn compact_validation() {
        assert!(ParameterSchedule::compact(&[2, 4], &[4, 4]).is_err()); // n not increasing
        assert!(ParameterSchedule::compact(&[2, 3], &[4, 6]).is_err()); // odd entry
        assert!(ParameterSchedule::compact(&[2, 4], &[4]).is_err()); // length mismatch
        assert!(ParameterSchedule::compact(&[4, 2], &[6, 8]).is_err()); // m not increasing
        assert!(ParameterSchedule::compact(&[2, 8], &[4, 6]).is_err()); // m_j > n_j
        assert!(ParameterSchedule::compact(&[2, 6], &[4, 6]).is_ok()); // equality tolerated
    }

    #[test]
    fn weight_horizon_examples() {
        let s = ParameterSchedule::compact(&[2, 4, 8], &[4, 6, 8]).unwrap();
        // ratio 1: m_1 = 2 > 1, so J = 0
        assert_eq!(s.weight_horizon(&int(1)).unwrap(), 0);
        // ratio 4: m_2 = 4 is not > 4, m_3 = 8 > 4, so J = 2
        assert_eq!(s.weight_horizon(&int(4)).unwrap(), 2);
    }
}
