//! Exact rational scalars used throughout the crate.
//!
//! Everything structural (weights squared, dimensions, moments, kernel
//! coefficients, densities) is computed over `Rat`; floating point enters
//! only at the operator level where square roots of weights are needed.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

/// `p/q` as an exact rational. Panics on `q == 0`.
pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_usize(n: usize) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn is_positive(x: &Rat) -> bool {
    x.is_positive()
}

pub fn to_f64(x: &Rat) -> f64 {
    x.to_f64().expect("rational out of f64 range")
}

/// Parses `p`, `p/q`, or a decimal-free signed integer string.
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty rational literal".into());
    }
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
            let q: BigInt = q.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
            if q.is_zero() {
                return Err(format!("zero denominator in {s:?}"));
            }
            Ok(Rat::new(p, q))
        }
        None => {
            let p: BigInt = s.parse().map_err(|_| format!("bad rational literal {s:?}"))?;
            Ok(Rat::from_integer(p))
        }
    }
}

/// Canonical `p/q` form (plain `p` when the denominator is one).
pub fn format_rat(x: &Rat) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["3/4", "-7/2", "5", "0", "-12"] {
            let r = parse_rat(s).unwrap();
            assert_eq!(format_rat(&r), s);
        }
        assert_eq!(format_rat(&parse_rat("6/4").unwrap()), "3/2");
        assert_eq!(format_rat(&parse_rat("4/2").unwrap()), "2");
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }
}
