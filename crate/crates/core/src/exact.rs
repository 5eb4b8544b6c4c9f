//! Exact rational arithmetic over `f64` inputs.
//!
//! Every finite `f64` is a dyadic rational, so lifting masses into
//! [`BigRational`] loses nothing. Inequality checks and the induced
//! distribution of the rejection step are evaluated here so that equality
//! cases are decided without rounding.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

pub type Rational = BigRational;

/// Lifts a finite float to the rational it denotes.
pub fn rat(x: f64) -> Rational {
    BigRational::from_float(x).expect("finite float")
}

pub fn from_int(x: u64) -> Rational {
    BigRational::from_integer(BigInt::from(x))
}

/// Nearest `f64` to a rational.
pub fn to_f64(x: &Rational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn sum<'a>(xs: impl IntoIterator<Item = &'a Rational>) -> Rational {
    xs.into_iter().fold(Rational::zero(), |acc, x| acc + x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lifting_is_exact() {
        let third = 1.0 / 3.0;
        assert_eq!(to_f64(&rat(third)), third);
        assert_eq!(rat(0.5) + rat(0.25), rat(0.75));
        // 0.1 + 0.2 != 0.3 holds exactly as well.
        assert_ne!(rat(0.1) + rat(0.2), rat(0.3));
    }

    #[test]
    fn rounding_back_is_nearest() {
        let r = from_int(1) / from_int(3);
        assert_eq!(to_f64(&r), 1.0 / 3.0);
    }
}
