//! Exact non-negative rationals for approximation ratios.

use serde::{Deserialize, Serialize};

pub type Ratio = num_rational::Ratio<u64>;

/// JSON form of a ratio: `{"num": .., "den": ..}`, always reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioJson {
    pub num: u64,
    pub den: u64,
}

impl From<Ratio> for RatioJson {
    fn from(r: Ratio) -> Self {
        RatioJson {
            num: *r.numer(),
            den: *r.denom(),
        }
    }
}

impl From<RatioJson> for Ratio {
    fn from(r: RatioJson) -> Self {
        Ratio::new(r.num, r.den)
    }
}

/// Smallest integer `u` with `u / 1 >= alpha * share`, i.e. `ceil(alpha * share)`.
pub fn ceil_scaled(alpha: Ratio, share: u64) -> u64 {
    let num = *alpha.numer() as u128 * share as u128;
    let den = *alpha.denom() as u128;
    num.div_ceil(den) as u64
}

/// Largest integer not above `alpha * share`.
pub fn floor_scaled(alpha: Ratio, share: u64) -> u64 {
    let num = *alpha.numer() as u128 * share as u128;
    (num / *alpha.denom() as u128) as u64
}

pub mod serde_ratio {
    use super::{Ratio, RatioJson};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(r: &Ratio, s: S) -> Result<S::Ok, S::Error> {
        RatioJson::from(*r).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio, D::Error> {
        let j = RatioJson::deserialize(d)?;
        if j.den == 0 {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(j.into())
    }

    pub mod option {
        use super::super::{Ratio, RatioJson};
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        pub fn serialize<S: Serializer>(r: &Option<Ratio>, s: S) -> Result<S::Ok, S::Error> {
            r.map(RatioJson::from).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Ratio>, D::Error> {
            let j = Option::<RatioJson>::deserialize(d)?;
            match j {
                Some(j) if j.den == 0 => Err(serde::de::Error::custom("zero denominator")),
                other => Ok(other.map(Ratio::from)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_rounding() {
        let a = Ratio::new(99, 100);
        assert_eq!(ceil_scaled(a, 50), 50);
        assert_eq!(ceil_scaled(a, 100), 99);
        assert_eq!(ceil_scaled(a, 0), 0);
        assert_eq!(floor_scaled(Ratio::new(8, 9), 9), 8);
        assert_eq!(floor_scaled(Ratio::new(8, 9), 10), 8);
    }

    #[test]
    fn eight_ninths_is_below_089() {
        assert!(Ratio::new(8, 9) < Ratio::new(89, 100));
    }
}
