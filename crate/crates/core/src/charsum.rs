//! Quadratic character sums and their truncated Fourier (Pólya) expansion.
//!
//! For a fundamental discriminant `d` and `0 < α < 1`,
//!
//! ```text
//! Σ_{n ≤ α|d|} χ_d(n) = τ(χ_d)/(2πi) · Σ_{1≤|m|≤z} χ_d(m)/m · (1 − e(−αm)) + O(1 + |d| log|d| / z)
//! ```
//!
//! Writing `1 − e(−αm) = (1 − cos 2παm) + i sin 2παm` splits the `m`-sum into
//! `C_d(z) + i S_d(z)`. Since `χ_d(−m) = χ_d(−1) χ_d(m)`, the `±m` terms of
//! `C_d` cancel for even characters and those of `S_d` cancel for odd ones;
//! the surviving half is folded to `2 Σ_{m ≥ 1}`. With `τ(χ_d) = √d` or
//! `i√|d|` the expansion reduces to `√|d|/(2π) · (C_d(z) + S_d(z))`, exactly
//! one of the two terms being nonzero.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::arith::{self, kronecker, SpfTable};
use crate::discriminant::FundamentalDiscriminant;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Default multiplier on `1 + |d| log|d| / z` in the Pólya error bound.
pub const DEFAULT_KAPPA: f64 = 10.0;

/// `χ_d(n)` for `0 <= n <= limit`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharTable {
    d: FundamentalDiscriminant,
    values: Vec<i8>,
}

impl CharTable {
    /// Builds the table by multiplicativity over `spf`: one Kronecker
    /// evaluation per prime, one multiplication per composite.
    pub fn with_spf(d: FundamentalDiscriminant, spf: &SpfTable, limit: u64) -> Result<CharTable> {
        if limit > spf.limit() {
            return Err(Error::Resource(format!(
                "character table length {limit} exceeds spf table limit {}",
                spf.limit()
            )));
        }
        let len = limit as usize + 1;
        let mut values = vec![0i8; len];
        if len > 1 {
            values[1] = 1;
        }
        for n in 2..len {
            let p = spf.spf(n as u64) as usize;
            values[n] = if p == n {
                kronecker(d.value(), n as i64)
            } else {
                values[p] * values[n / p]
            };
        }
        Ok(CharTable { d, values })
    }

    pub fn discriminant(&self) -> FundamentalDiscriminant {
        self.d
    }

    pub fn limit(&self) -> u64 {
        self.values.len() as u64 - 1
    }

    #[inline]
    pub fn get(&self, n: u64) -> i8 {
        self.values[n as usize]
    }

    /// Values for `n = 1..=limit`.
    pub fn values(&self) -> &[i8] {
        &self.values[1..]
    }
}

/// Builds a [`CharTable`] of length `limit`, sieving a fresh spf table.
pub fn char_table(d: FundamentalDiscriminant, limit: u64) -> Result<CharTable> {
    let spf = arith::sieve_spf(limit.max(1))?;
    CharTable::with_spf(d, &spf, limit)
}

/// Batch evaluator of `χ_d(1..=n)` for many discriminants.
///
/// Holds a smallest-prime-factor table and, for every odd prime below
/// [`CharacterSieve::TABLED_PRIME_LIMIT`], a bitmap of its quadratic residues,
/// so that `χ_d(p)` costs one reduction `d mod p` and one lookup.
#[derive(Debug, Clone)]
pub struct CharacterSieve {
    limit: usize,
    spf: Vec<u32>,
    primes: Vec<u32>,
    // Residue bitmaps for odd tabled primes, concatenated; `offsets[i]`
    // indexes the bitmap of `primes[i]` (unused for 2 and untabled primes).
    residue_bits: Vec<u64>,
    offsets: Vec<usize>,
}

impl CharacterSieve {
    pub const TABLED_PRIME_LIMIT: u32 = 1 << 16;

    pub fn new(limit: u64) -> Result<Self> {
        let table = arith::cached_sieve_spf(limit.max(2))?;
        let limit = limit as usize;
        let spf: Vec<u32> = (0..=limit).map(|n| table.spf(n as u64) as u32).collect();
        let primes: Vec<u32> = (2..=limit as u32).filter(|&n| spf[n as usize] == n).collect();
        let mut residue_bits = Vec::new();
        let mut offsets = Vec::with_capacity(primes.len());
        for &p in &primes {
            offsets.push(residue_bits.len());
            if p == 2 || p > Self::TABLED_PRIME_LIMIT {
                continue;
            }
            let words = (p as usize).div_ceil(64);
            let base = residue_bits.len();
            residue_bits.resize(base + words, 0);
            let p64 = p as u64;
            for r in 1..=(p64 / 2) {
                let q = (r * r % p64) as usize;
                residue_bits[base + q / 64] |= 1 << (q % 64);
            }
        }
        Ok(CharacterSieve {
            limit,
            spf,
            primes,
            residue_bits,
            offsets,
        })
    }

    pub fn limit(&self) -> u64 {
        self.limit as u64
    }

    /// Writes `χ_d(n)` into `out[n]` for `0 <= n <= len`.
    pub fn fill(&self, d: i64, len: usize, out: &mut Vec<i8>) {
        assert!(len <= self.limit, "fill length {len} beyond sieve limit {}", self.limit);
        out.clear();
        out.resize(len + 1, 0);
        if len == 0 {
            return;
        }
        out[1] = 1;
        let odd_d = d % 2 != 0;
        for (i, &p) in self.primes.iter().enumerate() {
            let p = p as usize;
            if p > len {
                break;
            }
            out[p] = if p == 2 {
                if odd_d {
                    if matches!(d.rem_euclid(8), 1 | 7) {
                        1
                    } else {
                        -1
                    }
                } else {
                    0
                }
            } else {
                let r = d.rem_euclid(p as i64) as usize;
                if r == 0 {
                    0
                } else if p as u32 <= Self::TABLED_PRIME_LIMIT {
                    let w = self.residue_bits[self.offsets[i] + r / 64];
                    if (w >> (r % 64)) & 1 == 1 {
                        1
                    } else {
                        -1
                    }
                } else {
                    arith::jacobi(r as u64, p as u64)
                }
            };
        }
        for n in 4..=len {
            let p = self.spf[n] as usize;
            if p != n {
                out[n] = out[p] * out[n / p];
            }
        }
    }
}

/// Exact `Σ_{n ≤ ⌊x⌋} χ_d(n)`, reduced modulo the period `|d|`.
pub fn partial_sum(d: FundamentalDiscriminant, x: f64) -> i64 {
    if !(x >= 1.0) {
        return 0;
    }
    let len = x.floor() as u64 % d.modulus();
    (1..=len).map(|n| d.chi(n as i64) as i64).sum()
}

/// `Σ_{n ≤ len} χ_d(n)` by direct summation, without period reduction.
pub fn partial_sum_direct(d: FundamentalDiscriminant, len: u64) -> i64 {
    (1..=len).map(|n| d.chi(n as i64) as i64).sum()
}

/// `τ(χ_d) = Σ_{n ≤ |d|} χ_d(n) e(n/|d|)` by direct summation.
pub fn gauss_sum(d: FundamentalDiscriminant) -> Complex64 {
    let q = d.modulus();
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for n in 1..=q {
        let c = d.chi(n as i64);
        if c == 0 {
            continue;
        }
        let theta = 2.0 * PI * (n % q) as f64 / q as f64;
        re.add(c as f64 * theta.cos());
        im.add(c as f64 * theta.sin());
    }
    Complex64::new(re.value(), im.value())
}

/// Closed form `√d` (d > 0) or `i√|d|` (d < 0).
pub fn gauss_sum_closed_form(d: FundamentalDiscriminant) -> Complex64 {
    let r = (d.modulus() as f64).sqrt();
    if d.is_even() {
        Complex64::new(r, 0.0)
    } else {
        Complex64::new(0.0, r)
    }
}

/// Cosine and sine parts `(C, S)` of the Fourier sum at frequency `alpha`,
/// truncated at `|m| <= z`, with the parity fold applied.
fn fourier_parts(d: FundamentalDiscriminant, alpha: f64, z: f64) -> (f64, f64) {
    let terms = if z >= 1.0 { z.floor() as u64 } else { 0 };
    let mut acc = CompensatedSum::new();
    for m in 1..=terms {
        let c = d.chi(m as i64);
        if c == 0 {
            continue;
        }
        let theta = 2.0 * PI * frac(alpha * m as f64);
        let kernel = if d.is_even() { theta.sin() } else { 1.0 - theta.cos() };
        acc.add(c as f64 * kernel / m as f64);
    }
    let folded = 2.0 * acc.value();
    if d.is_even() {
        (0.0, folded)
    } else {
        (folded, 0.0)
    }
}

#[inline]
fn frac(v: f64) -> f64 {
    v - v.floor()
}

/// `C_d(z) = Σ_{1≤|m|≤z} χ_d(m)(1 − cos(2πm/x))/m`; zero for even characters.
pub fn c_component(d: FundamentalDiscriminant, z: f64, x: f64) -> f64 {
    fourier_parts(d, 1.0 / x, z).0
}

/// `S_d(z) = Σ_{1≤|m|≤z} χ_d(m) sin(2πm/x)/m`; zero for odd characters.
pub fn s_component(d: FundamentalDiscriminant, z: f64, x: f64) -> f64 {
    fourier_parts(d, 1.0 / x, z).1
}

/// Truncation length `z = √(|d| x) · log|d|`.
pub fn default_z(d_abs: f64, x: f64) -> f64 {
    (d_abs * x).sqrt() * d_abs.ln()
}

/// Pólya approximation of `Σ_{n ≤ α|d|} χ_d(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolyaApprox {
    pub d: i64,
    pub alpha: f64,
    pub z: f64,
    pub c_part: f64,
    pub s_part: f64,
    pub approx: f64,
    pub err_bound: f64,
}

pub fn polya_approx(d: FundamentalDiscriminant, alpha: f64, z: f64, kappa: f64) -> Result<PolyaApprox> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if !(z > 0.0) {
        return Err(Error::Domain(format!("truncation z must be positive, got {z}")));
    }
    let (c_part, s_part) = fourier_parts(d, alpha, z);
    let q = d.modulus() as f64;
    let approx = q.sqrt() / (2.0 * PI) * (c_part + s_part);
    Ok(PolyaApprox {
        d: d.value(),
        alpha,
        z,
        c_part,
        s_part,
        approx,
        err_bound: truncation_error_bound(q, z, kappa),
    })
}

/// `κ · (1 + q log q / z)`.
pub fn truncation_error_bound(q: f64, z: f64, kappa: f64) -> f64 {
    kappa * (1.0 + q * q.ln() / z)
}

/// Precomputed `(1 − cos(2πm/x))/m` for `m = 0..=limit` (entry 0 is 0).
#[derive(Debug, Clone)]
pub struct CosineKernel {
    x: f64,
    weights: Vec<f64>,
}

impl CosineKernel {
    pub fn new(x: f64, limit: usize) -> Self {
        let mut weights = vec![0.0; limit + 1];
        for (m, w) in weights.iter_mut().enumerate().skip(1) {
            let theta = 2.0 * PI * frac(m as f64 / x);
            *w = (1.0 - theta.cos()) / m as f64;
        }
        CosineKernel { x, weights }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn limit(&self) -> usize {
        self.weights.len() - 1
    }

    /// `2 Σ_{m ≤ terms} chi[m] · w[m]` for an odd character table `chi`.
    pub fn c_component(&self, chi: &[i8], terms: usize) -> f64 {
        let mut acc = CompensatedSum::new();
        for m in 1..=terms {
            let c = chi[m];
            if c != 0 {
                acc.add(c as f64 * self.weights[m]);
            }
        }
        2.0 * acc.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discriminant::{enumerate_abs_range, SignFilter};

    fn fd(d: i64) -> FundamentalDiscriminant {
        FundamentalDiscriminant::new(d).unwrap()
    }

    /// χ_d(n) from residues: Legendre symbols by listing squares mod p, the
    /// 2-rule from d mod 8. Independent of the Kronecker implementation.
    fn chi_brute(d: i64, n: u64) -> i8 {
        let mut r = 1i8;
        let mut m = n;
        let mut p = 2u64;
        while m > 1 {
            while m % p == 0 {
                m /= p;
                let v = if p == 2 {
                    match d.rem_euclid(8) {
                        1 | 7 => 1,
                        3 | 5 => -1,
                        _ => 0,
                    }
                } else {
                    let a = d.rem_euclid(p as i64) as u64;
                    if a == 0 {
                        0
                    } else if (1..p).any(|t| t * t % p == a) {
                        1
                    } else {
                        -1
                    }
                };
                r *= v;
            }
            p += 1;
        }
        r
    }

    #[test]
    fn char_table_examples() {
        assert_eq!(char_table(fd(5), 5).unwrap().values(), &[1, -1, -1, 1, 0]);
        assert_eq!(char_table(fd(-4), 4).unwrap().values(), &[1, 0, -1, 0]);
        for d in [5, -3, -4, 8, 12, -7] {
            assert_eq!(char_table(fd(d), 1).unwrap().get(1), 1);
        }
    }

    #[test]
    fn char_table_matches_kronecker() {
        let spf = arith::sieve_spf(10_000).unwrap();
        let ds = enumerate_abs_range(1_000, 3_000, SignFilter::Both);
        for d in ds.iter().step_by(ds.len() / 20).take(20) {
            let t = CharTable::with_spf(*d, &spf, 10_000).unwrap();
            for n in 1..=10_000u64 {
                assert_eq!(t.get(n), d.chi(n as i64));
            }
        }
        assert!(matches!(
            CharTable::with_spf(fd(5), &spf, 10_001),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn character_sieve_matches_kronecker_and_brute_force() {
        let sieve = CharacterSieve::new(3_000).unwrap();
        let mut buf = Vec::new();
        for d in enumerate_abs_range(10, 400, SignFilter::Both) {
            sieve.fill(d.value(), 3_000, &mut buf);
            for n in 1..=3_000u64 {
                assert_eq!(buf[n as usize], d.chi(n as i64));
            }
            for n in 1..=60u64 {
                assert_eq!(buf[n as usize], chi_brute(d.value(), n));
            }
        }
    }

    #[test]
    fn character_sieve_beyond_tabled_primes() {
        let limit = CharacterSieve::TABLED_PRIME_LIMIT as u64 + 2_000;
        let sieve = CharacterSieve::new(limit).unwrap();
        let mut buf = Vec::new();
        let d = -1_000_003i64; // ≡ 1 mod 4
        assert!(crate::discriminant::is_fundamental(d).unwrap());
        sieve.fill(d, limit as usize, &mut buf);
        for n in (CharacterSieve::TABLED_PRIME_LIMIT as u64 - 100)..=limit {
            assert_eq!(buf[n as usize], kronecker(d, n as i64), "n={n}");
        }
    }

    #[test]
    fn partial_sum_examples() {
        assert_eq!(partial_sum(fd(5), 3.0), -1);
        assert_eq!(partial_sum(fd(5), 5.0), 0);
        assert_eq!(partial_sum(fd(-4), 2.0), 1);
        assert_eq!(partial_sum(fd(-4), 2.9), 1);
        assert_eq!(partial_sum(fd(-4), 0.5), 0);
    }

    #[test]
    fn partial_sum_matches_direct() {
        for d in enumerate_abs_range(1, 200, SignFilter::Both) {
            for len in [1u64, 7, 50, 199, 413, 1000] {
                assert_eq!(partial_sum(d, len as f64), partial_sum_direct(d, len));
            }
        }
    }

    #[test]
    fn full_period_sums_vanish() {
        let ds = enumerate_abs_range(1, 2_000, SignFilter::Both);
        assert!(ds.len() >= 1000);
        for d in ds.iter().take(1000) {
            assert_eq!(partial_sum_direct(*d, d.modulus()), 0, "d={d}");
        }
    }

    #[test]
    fn gauss_sum_examples() {
        let g = gauss_sum(fd(5));
        assert!((g.re - 5f64.sqrt()).abs() < 1e-12 && g.im.abs() < 1e-12);
        let g = gauss_sum(fd(-4));
        assert!(g.re.abs() < 1e-12 && (g.im - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gauss_sum_matches_closed_form() {
        let ds = enumerate_abs_range(1, 400, SignFilter::Both);
        for d in ds.iter().take(100) {
            let g = gauss_sum(*d);
            let closed = gauss_sum_closed_form(*d);
            let q = d.modulus() as f64;
            assert!((g - closed).norm() <= 1e-6 * q.sqrt(), "d={d}");
            assert!((g.norm() - q.sqrt()).abs() <= 1e-6 * q.sqrt());
        }
    }

    #[test]
    fn c_component_literal_sum() {
        // Literal Σ over -10 <= m <= 10, m != 0, from an independent script.
        let expect = 1.6698412698412688;
        let got = c_component(fd(-4), 10.0, 4.0);
        assert!((got - expect).abs() < 1e-12, "{got}");
        let literal: f64 = (-10i64..=10)
            .filter(|&m| m != 0)
            .map(|m| kronecker(-4, m) as f64 * (1.0 - (2.0 * PI * m as f64 / 4.0).cos()) / m as f64)
            .sum();
        assert!((got - literal).abs() < 1e-12);
        assert_eq!(s_component(fd(-4), 10.0, 4.0), 0.0);
    }

    #[test]
    fn parity_vanishing_is_structural() {
        assert_eq!(c_component(fd(5), 100.0, 7.0), 0.0);
        assert_eq!(s_component(fd(-3), 100.0, 7.0), 0.0);
        for d in enumerate_abs_range(1, 300, SignFilter::Both) {
            for (z, x) in [(10.0, 3.0), (57.5, 10.0)] {
                if d.is_even() {
                    assert_eq!(c_component(d, z, x), 0.0);
                } else {
                    assert_eq!(s_component(d, z, x), 0.0);
                }
            }
        }
    }

    #[test]
    fn folded_sum_matches_signed_sum() {
        // Unfolded Σ_{1≤|m|≤z} against the parity fold.
        for d in enumerate_abs_range(1, 120, SignFilter::Both) {
            let (z, x) = (40.0, 6.0);
            let zi = 40i64;
            let c: f64 = (-zi..=zi)
                .filter(|&m| m != 0)
                .map(|m| d.chi(m) as f64 * (1.0 - (2.0 * PI * m as f64 / x).cos()) / m as f64)
                .sum();
            let s: f64 = (-zi..=zi)
                .filter(|&m| m != 0)
                .map(|m| d.chi(m) as f64 * (2.0 * PI * m as f64 / x).sin() / m as f64)
                .sum();
            assert!((c_component(d, z, x) - c).abs() < 1e-9);
            assert!((s_component(d, z, x) - s).abs() < 1e-9);
        }
    }

    #[test]
    fn polya_matches_complex_expansion() {
        // Re[τ/(2πi) Σ χ(m)(1 − e(−αm))/m] with τ by direct summation.
        for d in enumerate_abs_range(3, 60, SignFilter::Both) {
            let (alpha, z) = (0.37, 150.0);
            let tau = gauss_sum(d);
            let mut sum = Complex64::new(0.0, 0.0);
            for m in (-150i64..=150).filter(|&m| m != 0) {
                let e = Complex64::from_polar(1.0, -2.0 * PI * alpha * m as f64);
                sum += (Complex64::new(1.0, 0.0) - e) * (d.chi(m) as f64 / m as f64);
            }
            let expect = (tau / Complex64::new(0.0, 2.0 * PI) * sum).re;
            let got = polya_approx(d, alpha, z, DEFAULT_KAPPA).unwrap();
            assert!((got.approx - expect).abs() < 1e-9, "d={d}");
        }
    }

    #[test]
    fn polya_examples() {
        let p = polya_approx(fd(-4), 0.5, 200.0, DEFAULT_KAPPA).unwrap();
        assert!((p.approx - 1.0).abs() <= p.err_bound);
        let q = 5f64;
        let p = polya_approx(fd(5), 0.9999, q * q.ln(), DEFAULT_KAPPA).unwrap();
        assert!(p.approx.abs() <= p.err_bound);
        assert_eq!(partial_sum(fd(5), 0.9999 * 5.0), 0);
        assert!(matches!(polya_approx(fd(5), 1.0, 10.0, DEFAULT_KAPPA), Err(Error::Domain(_))));
        assert!(matches!(polya_approx(fd(5), 0.0, 10.0, DEFAULT_KAPPA), Err(Error::Domain(_))));
    }

    #[test]
    fn truncation_error_bound_formula() {
        let p = polya_approx(fd(-7), 0.3, 50.0, 10.0).unwrap();
        assert!((p.err_bound - 10.0 * (1.0 + 7.0 * 7f64.ln() / 50.0)).abs() < 1e-12);
        // Exactly one part nonzero, chosen by parity.
        assert_eq!(p.s_part, 0.0);
        assert!(p.c_part != 0.0);
    }

    #[test]
    fn doubling_z_does_not_increase_mean_error() {
        let ds = enumerate_abs_range(5_000, 10_000, SignFilter::Both);
        let sample: Vec<_> = ds.iter().step_by(ds.len() / 50).take(50).collect();
        let alpha = 0.2;
        let mean_err = |z_of: &dyn Fn(f64) -> f64| -> f64 {
            sample
                .iter()
                .map(|d| {
                    let q = d.modulus() as f64;
                    let p = polya_approx(**d, alpha, z_of(q), DEFAULT_KAPPA).unwrap();
                    (p.approx - partial_sum(**d, alpha * q) as f64).abs()
                })
                .sum::<f64>()
                / sample.len() as f64
        };
        let base = mean_err(&|q| q.sqrt());
        let doubled = mean_err(&|q| 2.0 * q.sqrt());
        assert!(doubled <= base, "{doubled} > {base}");
    }

    #[test]
    fn default_z_examples() {
        let e2 = std::f64::consts::E.powi(2);
        assert!((default_z(e2, 1.0) - 2.0 * std::f64::consts::E).abs() < 1e-12);
        assert!((default_z(1e6, 1e2) - 138_155.105579642).abs() < 1e-6);
        assert!(default_z(2e6, 1e2) > default_z(1e6, 1e2));
        assert!(default_z(1e6, 2e2) > default_z(1e6, 1e2));
    }

    #[test]
    fn cosine_kernel_matches_c_component() {
        let sieve = CharacterSieve::new(2_000).unwrap();
        let kernel = CosineKernel::new(13.0, 2_000);
        let mut buf = Vec::new();
        for d in enumerate_abs_range(50, 300, SignFilter::Negative) {
            sieve.fill(d.value(), 1_500, &mut buf);
            let a = kernel.c_component(&buf, 1_500);
            let b = c_component(d, 1_500.0, 13.0);
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "d={d}");
        }
    }
}
