//! Exact rational scalars.
//!
//! All norm logic runs on arbitrary-precision rationals, stored reduced with a
//! positive denominator (the invariants `num_rational` maintains). The helpers
//! here fix one canonical text form, `num/den`, used everywhere a rational is
//! serialized: registry files, certificate JSON and CLI vectors all round-trip
//! through it bit-exactly.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar: arbitrary-precision, reduced, positive denominator.
pub type Rational = num_rational::BigRational;

/// Rational from an integer pair; panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Rational from an integer.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Canonical text form `num/den` (always with the denominator, so `3` prints
/// as `3/1`). This is the form used in registry files and JSON payloads.
pub fn to_canonical(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `num/den` or a bare integer `num`.
pub fn parse(text: &str) -> Result<Rational> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational numerator: {text:?}")))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational denominator: {text:?}")))?;
    if den.is_zero() {
        return Err(Error::Parse(format!("zero denominator: {text:?}")));
    }
    Ok(Rational::new(num, den))
}

/// |q| as a new rational.
pub fn abs(q: &Rational) -> Rational {
    if q.is_negative() {
        -q.clone()
    } else {
        q.clone()
    }
}

/// 2^-k as a rational.
pub fn pow2_inv(k: u32) -> Rational {
    let mut den = BigInt::one();
    den <<= k as usize;
    Rational::new(BigInt::one(), den)
}

/// Approximate decimal rendering for reports; never used in norm logic.
pub fn to_f64(q: &Rational) -> f64 {
    let num = q.numer();
    let den = q.denom();
    // Scale down huge operands together so the quotient stays representable.
    let bits = num.bits().max(den.bits());
    if bits <= 500 {
        let n = num.to_string().parse::<f64>().unwrap_or(f64::NAN);
        let d = den.to_string().parse::<f64>().unwrap_or(f64::NAN);
        n / d
    } else {
        let shift = (bits - 500) as usize;
        let n = (num >> shift).to_string().parse::<f64>().unwrap_or(f64::NAN);
        let d = (den >> shift).to_string().parse::<f64>().unwrap_or(f64::NAN);
        n / d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_keeps_denominator() {
        assert_eq!(to_canonical(&int(3)), "3/1");
        assert_eq!(to_canonical(&ratio(-6, 4)), "-3/2");
    }

    #[test]
    fn parse_accepts_both_forms() {
        assert_eq!(parse("5/2").unwrap(), ratio(5, 2));
        assert_eq!(parse("-7").unwrap(), int(-7));
        assert_eq!(parse(" 1/3 ").unwrap(), ratio(1, 3));
        assert!(parse("1/0").is_err());
        assert!(parse("x").is_err());
    }

    #[test]
    fn pow2_inv_values() {
        assert_eq!(pow2_inv(0), int(1));
        assert_eq!(pow2_inv(3), ratio(1, 8));
    }
}
