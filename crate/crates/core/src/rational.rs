//! Exact non-negative rationals for approximation ratios and threshold tests.
//!
//! Every comparison cross-multiplies in `u128`, so ordering is exact for all
//! values this crate produces (numerators and denominators fit in `u64`).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

/// A reduced non-negative rational `num/den` with `den >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ratio {
    num: u64,
    den: u64,
}

impl Ratio {
    /// Builds `num/den` in lowest terms. Panics if `den == 0`.
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den != 0, "rational denominator must be nonzero");
        let g = gcd(num, den);
        if g == 0 {
            // num == 0: canonical zero
            return Ratio { num: 0, den: 1 };
        }
        Ratio {
            num: num / g,
            den: den / g,
        }
    }

    /// Builds from `u128` parts, reducing first; `None` if the reduced parts
    /// do not fit in `u64`.
    pub fn from_u128(num: u128, den: u128) -> Option<Self> {
        assert!(den != 0, "rational denominator must be nonzero");
        let g = gcd_u128(num, den);
        let (num, den) = match g {
            0 => (0, 1),
            g => (num / g, den / g),
        };
        Some(Ratio {
            num: u64::try_from(num).ok()?,
            den: u64::try_from(den).ok()?,
        })
    }

    pub fn from_integer(n: u64) -> Self {
        Ratio { num: n, den: 1 }
    }

    pub fn zero() -> Self {
        Ratio { num: 0, den: 1 }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = self.num as u128 * other.den as u128;
        let rhs = other.num as u128 * self.den as u128;
        lhs.cmp(&rhs)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Parses `"num/den"` or a bare integer.
impl FromStr for Ratio {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (num, den) = match s.split_once('/') {
            Some((a, b)) => (
                a.trim().parse::<u64>().map_err(|e| e.to_string())?,
                b.trim().parse::<u64>().map_err(|e| e.to_string())?,
            ),
            None => (s.trim().parse::<u64>().map_err(|e| e.to_string())?, 1),
        };
        if den == 0 {
            return Err("denominator must be nonzero".into());
        }
        Ok(Ratio::new(num, den))
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_on_construction() {
        assert_eq!(Ratio::new(4, 4), Ratio::from_integer(1));
        assert_eq!(Ratio::new(39192, 10903).num(), 39192);
        assert_eq!(Ratio::new(56, 14), Ratio::from_integer(4));
        assert_eq!(Ratio::new(0, 7), Ratio::zero());
    }

    #[test]
    fn ordering_is_exact() {
        assert!(Ratio::new(1, 3) < Ratio::new(1, 2));
        assert!(Ratio::new(39192, 10903) > Ratio::new(355, 100));
        assert_eq!(Ratio::new(2, 6).cmp(&Ratio::new(1, 3)), Ordering::Equal);
        // Values near u64::MAX still compare correctly via u128 cross products.
        let big = u64::MAX - 1;
        assert!(Ratio::new(big, big + 1) < Ratio::from_integer(1));
    }

    #[test]
    fn display_and_parse() {
        assert_eq!(Ratio::new(39192, 10903).to_string(), "39192/10903");
        assert_eq!("1/20".parse::<Ratio>().unwrap(), Ratio::new(1, 20));
        assert_eq!("3".parse::<Ratio>().unwrap(), Ratio::from_integer(3));
        assert!("1/0".parse::<Ratio>().is_err());
        assert!("0.05".parse::<Ratio>().is_err());
    }

    #[test]
    fn scale_invariance() {
        for k in 1u64..30 {
            assert_eq!(Ratio::new(7 * k, 3 * k), Ratio::new(7, 3));
        }
    }
}
