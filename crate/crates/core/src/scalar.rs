//! Exact integer scalars shared by the algebraic routines.

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_bigint::BigInt;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, FromPrimitive, Signed, ToPrimitive};

/// An exact integer type. Fixed-width implementations report overflow through
/// the checked operations; [`BigInt`] never overflows.
pub trait Ring:
    num_integer::Integer
    + Signed
    + Clone
    + Debug
    + Display
    + Hash
    + Send
    + Sync
    + CheckedAdd
    + CheckedSub
    + CheckedMul
    + FromPrimitive
    + ToPrimitive
    + 'static
{
    /// Lift a machine integer.
    fn of(v: i64) -> Self {
        <Self as FromPrimitive>::from_i64(v).expect("i64 fits every ring")
    }

    /// Convert into an arbitrary-precision integer.
    fn to_big(&self) -> BigInt;

    /// Convert from an arbitrary-precision integer, if it fits.
    fn from_big(v: &BigInt) -> Option<Self>;
}

impl Ring for i64 {
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn from_big(v: &BigInt) -> Option<Self> {
        v.to_i64()
    }
}

impl Ring for i128 {
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn from_big(v: &BigInt) -> Option<Self> {
        v.to_i128()
    }
}

impl Ring for BigInt {
    fn to_big(&self) -> BigInt {
        self.clone()
    }
    fn from_big(v: &BigInt) -> Option<Self> {
        Some(v.clone())
    }
}
