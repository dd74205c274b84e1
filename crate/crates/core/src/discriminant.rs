//! Fundamental discriminants and their enumeration over ranges of `|d|`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{self, kronecker};
use crate::error::{Error, Result};

/// A validated fundamental discriminant `d != 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FundamentalDiscriminant {
    d: i64,
    parity: i8,
}

impl FundamentalDiscriminant {
    pub fn new(d: i64) -> Result<Self> {
        if is_fundamental(d)? {
            Ok(Self::new_unchecked(d))
        } else {
            Err(Error::Domain(format!("{d} is not a fundamental discriminant")))
        }
    }

    fn new_unchecked(d: i64) -> Self {
        FundamentalDiscriminant {
            d,
            parity: if d > 0 { 1 } else { -1 },
        }
    }

    #[inline]
    pub fn value(self) -> i64 {
        self.d
    }

    /// `|d|`, the conductor of `χ_d`.
    #[inline]
    pub fn modulus(self) -> u64 {
        self.d.unsigned_abs()
    }

    /// `χ_d(-1)`.
    #[inline]
    pub fn parity(self) -> i8 {
        self.parity
    }

    #[inline]
    pub fn is_even(self) -> bool {
        self.parity > 0
    }

    #[inline]
    pub fn chi(self, n: i64) -> i8 {
        kronecker(self.d, n)
    }
}

impl std::fmt::Display for FundamentalDiscriminant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.d)
    }
}

/// `χ_d(-1)` evaluated as a Kronecker symbol.
pub fn parity(d: FundamentalDiscriminant) -> i8 {
    kronecker(d.value(), -1)
}

/// True iff `d` is a fundamental discriminant other than 1.
pub fn is_fundamental(d: i64) -> Result<bool> {
    if d == 0 {
        return Err(Error::Domain("0 is not a discriminant".into()));
    }
    if d == 1 {
        return Ok(false);
    }
    Ok(match d.rem_euclid(4) {
        1 => arith::is_squarefree(d.unsigned_abs()),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && arith::is_squarefree(m.unsigned_abs())
        }
        _ => false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SignFilter {
    Positive,
    Negative,
    #[default]
    Both,
}

impl SignFilter {
    fn positive(self) -> bool {
        matches!(self, SignFilter::Positive | SignFilter::Both)
    }

    fn negative(self) -> bool {
        matches!(self, SignFilter::Negative | SignFilter::Both)
    }
}

/// The dyadic range `X < |d| <= 2X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscriminantRange {
    x: u64,
    sign: SignFilter,
}

impl DiscriminantRange {
    pub fn new(x: u64, sign: SignFilter) -> Result<Self> {
        if x < 2 {
            return Err(Error::Domain(format!("range parameter X must be >= 2, got {x}")));
        }
        Ok(DiscriminantRange { x, sign })
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn sign(&self) -> SignFilter {
        self.sign
    }
}

/// Fundamental discriminants of the dyadic range, ascending in `|d|`
/// (negative before positive on ties).
pub fn enumerate_fundamental(range: &DiscriminantRange) -> Vec<FundamentalDiscriminant> {
    enumerate_abs_range(range.x, 2 * range.x, range.sign)
}

/// Fundamental discriminants with `lo < |d| <= hi`, ascending in `|d|`.
///
/// Squarefreeness is decided by a segmented sieve over `|d|` and over
/// `|d|/4`; segments are processed in parallel and concatenated in order.
pub fn enumerate_abs_range(lo: u64, hi: u64, sign: SignFilter) -> Vec<FundamentalDiscriminant> {
    const SEGMENT: u64 = 1 << 16;
    if hi <= lo {
        return Vec::new();
    }
    let primes = arith::primes_up_to(isqrt(hi) + 1);
    let start = lo + 1;
    let segments: Vec<(u64, u64)> = (start..=hi)
        .step_by(SEGMENT as usize)
        .map(|a| (a, (a + SEGMENT - 1).min(hi)))
        .collect();
    segments
        .par_iter()
        .map(|&(a, b)| segment(a, b, &primes, sign))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Number of fundamental discriminants with `lo < |d| <= hi`.
pub fn count_abs_range(lo: u64, hi: u64, sign: SignFilter) -> usize {
    enumerate_abs_range(lo, hi, sign).len()
}

fn segment(lo: u64, hi: u64, primes: &[u64], sign: SignFilter) -> Vec<FundamentalDiscriminant> {
    let sf = squarefree_flags(lo, hi, primes);
    let qlo = lo.div_ceil(4);
    let qhi = hi / 4;
    let sfq = if qlo <= qhi {
        squarefree_flags(qlo, qhi, primes)
    } else {
        Vec::new()
    };
    let mut out = Vec::with_capacity(((hi - lo + 1) * 2 / 3) as usize);
    for a in lo..=hi {
        let (neg, pos) = match a % 4 {
            1 => (false, a != 1 && sf[(a - lo) as usize]),
            3 => (sf[(a - lo) as usize], false),
            0 => {
                let m = a / 4;
                if sfq[(m - qlo) as usize] {
                    // d = 4m needs m ≡ 2,3 (mod 4); d = -4m needs -m ≡ 2,3.
                    match m % 4 {
                        1 => (true, false),
                        2 => (true, true),
                        3 => (false, true),
                        _ => (false, false),
                    }
                } else {
                    (false, false)
                }
            }
            _ => (false, false),
        };
        if neg && sign.negative() {
            out.push(FundamentalDiscriminant::new_unchecked(-(a as i64)));
        }
        if pos && sign.positive() {
            out.push(FundamentalDiscriminant::new_unchecked(a as i64));
        }
    }
    out
}

fn squarefree_flags(lo: u64, hi: u64, primes: &[u64]) -> Vec<bool> {
    let mut flags = vec![true; (hi - lo + 1) as usize];
    for &p in primes {
        let sq = p * p;
        if sq > hi {
            break;
        }
        let mut k = lo.div_ceil(sq) * sq;
        while k <= hi {
            flags[(k - lo) as usize] = false;
            k += sq;
        }
    }
    flags
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}
