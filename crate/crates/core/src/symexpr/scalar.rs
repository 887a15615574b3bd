use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Signed, ToPrimitive};

/// Exact coefficient field for symbolic bounds.
///
/// Bounds are compared, pruned and summed exactly, so only exact types
/// qualify. Faulhaber sums introduce fractions such as `n*(n+1)/2`, hence a
/// rational field rather than a ring of integers.
pub trait Coeff:
    Clone + Ord + Hash + Debug + Display + Signed + Send + Sync + 'static
{
    fn from_int(v: i64) -> Self;

    fn from_frac(numer: i64, denom: i64) -> Self {
        Self::from_int(numer) / Self::from_int(denom)
    }

    fn is_integral(&self) -> bool;

    /// Numerator and positive denominator in lowest terms.
    fn to_fraction(&self) -> (BigInt, BigInt);

    /// Integral value, when the coefficient is an integer that fits `i64`.
    fn as_i64(&self) -> Option<i64> {
        if !self.is_integral() {
            return None;
        }
        self.to_fraction().0.to_i64()
    }
}

macro_rules! prim_ratio_coeff {
    ($($t:ty),*) => {$(
        impl Coeff for Ratio<$t> {
            fn from_int(v: i64) -> Self {
                Ratio::from_integer(v as $t)
            }

            fn is_integral(&self) -> bool {
                self.is_integer()
            }

            fn to_fraction(&self) -> (BigInt, BigInt) {
                (BigInt::from(*self.numer()), BigInt::from(*self.denom()))
            }
        }
    )*};
}

prim_ratio_coeff!(i64, i128);

impl Coeff for BigRational {
    fn from_int(v: i64) -> Self {
        Ratio::from_integer(BigInt::from(v))
    }

    fn is_integral(&self) -> bool {
        self.is_integer()
    }

    fn to_fraction(&self) -> (BigInt, BigInt) {
        (self.numer().clone(), self.denom().clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_are_reduced() {
        let half = Ratio::<i128>::from_frac(2, 4);
        assert_eq!(half.to_fraction(), (BigInt::from(1), BigInt::from(2)));
        assert!(!half.is_integral());
        assert_eq!(Ratio::<i64>::from_int(7).as_i64(), Some(7));
        assert_eq!(BigRational::from_frac(-6, 3).as_i64(), Some(-2));
    }
}
