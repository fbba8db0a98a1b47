use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Greatest common divisor.
pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inverse of `x` modulo `n` by the extended Euclidean algorithm.
pub fn mod_inverse(x: u64, n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::BadParameter("modulus must be positive".into()));
    }
    let (mut r0, mut r1) = (n as i128, (x % n) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 && n != 1 {
        return Err(Error::NotCoprime { x, n });
    }
    Ok(s0.rem_euclid(n as i128) as u64)
}

/// Pick order `order[p] = (a + p * x^{-1}) mod n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRobinOrdering {
    pub n: usize,
    pub a: usize,
    pub x: usize,
    pub order: Vec<usize>,
}

impl RoundRobinOrdering {
    /// Agent at position `p` of the ordering repeated cyclically.
    pub fn at(&self, p: usize) -> usize {
        self.order[p % self.n]
    }
}

pub fn round_robin_ordering(n: usize, a: usize, x: usize) -> Result<RoundRobinOrdering> {
    if n == 0 {
        return Err(Error::BadParameter("ordering needs n >= 1".into()));
    }
    if a >= n {
        return Err(Error::BadParameter(format!("a = {a} must be below n = {n}")));
    }
    let inv = mod_inverse(x as u64, n as u64)? as usize;
    let order = (0..n).map(|p| (a + p * inv) % n).collect();
    Ok(RoundRobinOrdering { n, a, x, order })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_examples() {
        assert_eq!(mod_inverse(2, 5).unwrap(), 3);
        assert_eq!(mod_inverse(3, 5).unwrap(), 2);
        assert_eq!(mod_inverse(7, 12).unwrap(), 7);
        assert_eq!(mod_inverse(0, 1).unwrap(), 0);
        assert!(matches!(mod_inverse(4, 6), Err(Error::NotCoprime { x: 4, n: 6 })));
    }

    #[test]
    fn example_ordering() {
        assert_eq!(round_robin_ordering(5, 3, 2).unwrap().order, vec![3, 1, 4, 2, 0]);
    }

    #[test]
    fn rejects_shared_factor() {
        assert!(matches!(round_robin_ordering(6, 0, 2), Err(Error::NotCoprime { .. })));
        assert!(round_robin_ordering(5, 5, 2).is_err());
    }
}
