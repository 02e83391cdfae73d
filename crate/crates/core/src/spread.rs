//! The even-index spread `S`, its adjoint `R`, and the restricted inverse `Λ`.
//!
//! `S` moves the coordinate at `i` to `2i` (vector side). `R` acts on
//! functionals by `(Rf)_i = f_{2i}`: even coordinates are halved, odd ones
//! are annihilated, so `R` of an odd-supported functional is the zero
//! functional (callers must handle zero).
//!
//! `Λ(f) = {(2 range(f)) g : R g = f}` is a set-valued right inverse of `R`;
//! the range restriction is what makes it preserve block sequences. `Λ^k` is
//! its k-fold iterate with `Λ^0(f) = {f}`. The set is infinite (odd
//! coordinates inside the doubled range are free), so the module exposes
//! membership testing plus the canonical index-doubling selection, never full
//! enumeration.

use crate::error::{Error, Result};
use crate::vector::{FinVector, IntervalE};

/// `i * 2^k` with an overflow check (indices live in u64).
fn shift_index(i: u64, k: u32) -> Result<u64> {
    if k >= 64 || i > (u64::MAX >> k) {
        return Err(Error::Capacity(format!("index {i} * 2^{k} exceeds u64")));
    }
    Ok(i << k)
}

/// The spread on vectors: coordinate at `i` moves to `2i`.
pub fn apply_s(x: &FinVector) -> Result<FinVector> {
    apply_s_pow(x, 1)
}

/// `S^k` on vectors.
pub fn apply_s_pow(x: &FinVector, k: u32) -> Result<FinVector> {
    let mut out = FinVector::zero();
    for (i, q) in x.iter() {
        out.add_at(shift_index(i, k)?, q.clone());
    }
    Ok(out)
}

/// The adjoint on functionals: `(Rf)_i = f_{2i}`.
pub fn apply_r(f: &FinVector) -> FinVector {
    let mut out = FinVector::zero();
    for (i, q) in f.iter() {
        if i % 2 == 0 {
            out.add_at(i / 2, q.clone());
        }
    }
    out
}

/// `R^k` on functionals: keeps the coordinates at indices divisible by `2^k`
/// in a single pass.
pub fn apply_r_pow(f: &FinVector, k: u32) -> FinVector {
    if k == 0 {
        return f.clone();
    }
    if k >= 64 {
        return FinVector::zero();
    }
    let step = 1u64 << k;
    let mut out = FinVector::zero();
    for (i, q) in f.iter() {
        if i % step == 0 {
            out.add_at(i >> k, q.clone());
        }
    }
    out
}

/// The interval `Ẽ = {i : 2i ∈ E}` satisfying `R(Ef) = Ẽ R(f)`; empty when no
/// even point lies in `E`.
pub fn r_interval_image(e: &IntervalE) -> Option<IntervalE> {
    let lo = e.lo().div_ceil(2);
    let hi = e.hi() / 2;
    if lo <= hi && lo >= 1 {
        Some(IntervalE::new(lo, hi))
    } else {
        None
    }
}

/// Membership in `Λ^k(f)`: `R^k g = f` and `range(g) = 2^k range(f)`.
/// `k = 0` degenerates to `g = f`. The zero functional has no range, so
/// `f = 0` is rejected.
pub fn lambda_member(g: &FinVector, f: &FinVector, k: u32) -> Result<bool> {
    let f_range = f
        .range()
        .ok_or(Error::ZeroVector("lambda membership of the zero functional"))?;
    if k == 0 {
        return Ok(g == f);
    }
    if apply_r_pow(g, k) != *f {
        return Ok(false);
    }
    let scaled = IntervalE::new(shift_index(f_range.lo(), k)?, shift_index(f_range.hi(), k)?);
    Ok(g.range() == Some(scaled))
}

/// The canonical selection from `Λ(f)`: pure index doubling, `g_{2i} = f_i`.
pub fn lambda_canonical_lift(f: &FinVector) -> Result<FinVector> {
    if f.is_zero() {
        return Err(Error::ZeroVector("canonical lift of the zero functional"));
    }
    lambda_power_lift(f, 1)
}

/// The k-fold canonical lift (`k = 0` returns `f` itself).
pub fn lambda_power_lift(f: &FinVector, k: u32) -> Result<FinVector> {
    let mut out = FinVector::zero();
    for (i, q) in f.iter() {
        out.add_at(shift_index(i, k)?, q.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn fv(pairs: &[(u64, i64)]) -> FinVector {
        FinVector::from_pairs(pairs.iter().map(|(i, c)| (*i, int(*c))))
    }

    #[test]
    fn spread_examples() {
        assert_eq!(apply_s(&fv(&[(1, 1)])).unwrap(), fv(&[(2, 1)]));
        assert_eq!(apply_s(&fv(&[(1, 3), (4, -1)])).unwrap(), fv(&[(2, 3), (8, -1)]));
        assert!(apply_s(&FinVector::zero()).unwrap().is_zero());
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(apply_r(&fv(&[(2, 1)])), fv(&[(1, 1)]));
        assert!(apply_r(&fv(&[(1, 1)])).is_zero());
        assert_eq!(apply_r(&fv(&[(3, 1), (4, 1)])), fv(&[(2, 1)]));
    }

    #[test]
    fn interval_image_examples() {
        assert_eq!(
            r_interval_image(&IntervalE::new(2, 8)),
            Some(IntervalE::new(1, 4))
        );
        assert_eq!(r_interval_image(&IntervalE::new(3, 3)), None);
        assert_eq!(
            r_interval_image(&IntervalE::new(4, 6)),
            Some(IntervalE::new(2, 3))
        );
        // [1,1] has no even point
        assert_eq!(r_interval_image(&IntervalE::new(1, 1)), None);
    }

    #[test]
    fn lambda_member_examples() {
        let e1 = fv(&[(1, 1)]);
        assert!(lambda_member(&fv(&[(2, 1)]), &e1, 1).unwrap());
        assert!(lambda_member(&fv(&[(4, 1)]), &e1, 2).unwrap());
        // range [2,3] != 2*[1,1]
        assert!(!lambda_member(&fv(&[(2, 1), (3, 1)]), &e1, 1).unwrap());
        assert!(lambda_member(&FinVector::zero(), &FinVector::zero(), 1).is_err());
    }

    #[test]
    fn lift_examples() {
        let e1 = fv(&[(1, 1)]);
        assert_eq!(lambda_canonical_lift(&e1).unwrap(), fv(&[(2, 1)]));
        let f = FinVector::from_pairs([(1, crate::rational::ratio(1, 2)), (3, crate::rational::ratio(1, 2))]);
        let lifted = lambda_canonical_lift(&f).unwrap();
        assert_eq!(lifted.get(2), crate::rational::ratio(1, 2));
        assert_eq!(lifted.get(6), crate::rational::ratio(1, 2));
        // lift twice of e1 is e4, and membership at k = 2 confirms it
        let twice = lambda_canonical_lift(&lambda_canonical_lift(&e1).unwrap()).unwrap();
        assert_eq!(twice, fv(&[(4, 1)]));
        assert!(lambda_member(&twice, &e1, 2).unwrap());
        assert!(lambda_canonical_lift(&FinVector::zero()).is_err());
    }

    #[test]
    fn power_lift_round_trip() {
        let e1 = fv(&[(1, 1)]);
        assert_eq!(lambda_power_lift(&e1, 0).unwrap(), e1);
        assert_eq!(lambda_power_lift(&e1, 3).unwrap(), fv(&[(8, 1)]));
        assert_eq!(apply_r_pow(&lambda_power_lift(&e1, 3).unwrap(), 3), e1);
    }

    #[test]
    fn lift_overflow_is_capacity_error() {
        let f = fv(&[(u64::MAX / 2 + 1, 1)]);
        assert!(matches!(
            lambda_power_lift(&f, 1),
            Err(Error::Capacity(_))
        ));
    }
}
