use std::fmt::{Debug, Display};
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::distr::uniform::SampleUniform;

use crate::error::{Error, Result};

/// Scalar type every numeric kernel is generic over.
///
/// `f64` is the default width; `f32` exists behind the same trait so the
/// whole pipeline can be instantiated in single precision. Gradient
/// verification is f64-only: central differences need the headroom.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + SampleUniform
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Display
    + Debug
    + Default
    + Send
    + Sync
    + 'static
{
    const NAME: &'static str;

    /// Narrowing conversion from `f64`, used for config constants and
    /// on-disk values (datasets and checkpoints are always stored as f64).
    fn of(v: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Real for f64 {
    const NAME: &'static str = "f64";

    #[inline]
    fn of(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    const NAME: &'static str = "f32";

    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

/// Arithmetic width selected at process level via `RMUKIT_PRECISION`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    F64,
    F32,
}

impl Precision {
    /// Reads `RMUKIT_PRECISION` (`f64` when unset).
    pub fn from_env() -> Result<Self> {
        match std::env::var("RMUKIT_PRECISION") {
            Ok(v) => v.parse(),
            Err(std::env::VarError::NotPresent) => Ok(Precision::F64),
            Err(e) => Err(Error::input(format!("RMUKIT_PRECISION: {e}"))),
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f64" => Ok(Precision::F64),
            "f32" => Ok(Precision::F32),
            other => Err(Error::input(format!(
                "RMUKIT_PRECISION must be `f64` or `f32`, got `{other}`"
            ))),
        }
    }
}

/// SplitMix64 finalizer. Used to derive independent sub-seeds (init,
/// shuffle, dropout, data generation) from one user-facing seed.
pub fn mix_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precision_parse() {
        assert_eq!("f64".parse::<Precision>().unwrap(), Precision::F64);
        assert_eq!("f32".parse::<Precision>().unwrap(), Precision::F32);
        assert!("f16".parse::<Precision>().is_err());
    }

    #[test]
    fn mix_seed_distinguishes_salts() {
        assert_ne!(mix_seed(7, 1), mix_seed(7, 2));
        assert_eq!(mix_seed(7, 1), mix_seed(7, 1));
    }
}
