//! Exact integer arithmetic: smallest-prime-factor sieves, factorization,
//! the Kronecker symbol and the multiplicative weights attached to
//! character averages over fundamental discriminants.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest integer accepted by [`factorize`].
pub const MAX_FACTOR_INPUT: u64 = 1 << 50;

/// Default ceiling on [`sieve_spf`] table sizes.
pub const DEFAULT_SIEVE_CAP: u64 = 100_000_000;

/// Size of the process-wide table backing [`factorize`].
const SHARED_SPF_LIMIT: u64 = 1 << 20;

/// An integer together with its prime factorization and the derived
/// quantities used by the character-average weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactoredInt {
    pub n: u64,
    /// `(prime, exponent)` pairs in increasing prime order.
    pub factors: Vec<(u64, u32)>,
    /// Squarefree part: `n = n0 * n1^2`.
    pub n0: u64,
    pub n1: u64,
    pub mu: i8,
    /// Largest prime factor, with `P+(1) = 1`.
    pub p_plus: u64,
}

impl FactoredInt {
    fn from_factors(n: u64, factors: Vec<(u64, u32)>) -> Self {
        let mut n0 = 1u64;
        let mut n1 = 1u64;
        for &(p, e) in &factors {
            if e % 2 == 1 {
                n0 *= p;
            }
            n1 *= p.pow(e / 2);
        }
        let mu = if factors.iter().any(|&(_, e)| e >= 2) {
            0
        } else if factors.len() % 2 == 0 {
            1
        } else {
            -1
        };
        let p_plus = factors.last().map_or(1, |&(p, _)| p);
        FactoredInt {
            n,
            factors,
            n0,
            n1,
            mu,
            p_plus,
        }
    }

    pub fn is_squarefree(&self) -> bool {
        self.mu != 0
    }

    pub fn is_square(&self) -> bool {
        self.n0 == 1
    }

    pub fn distinct_primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }
}

/// Smallest-prime-factor table for `0..=limit`. Entries 0 and 1 hold 0 and 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpfTable {
    limit: u64,
    spf: Vec<u32>,
}

impl SpfTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Smallest prime factor of `n`; panics when `n` is outside the table.
    #[inline]
    pub fn spf(&self, n: u64) -> u64 {
        self.spf[n as usize] as u64
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && self.spf(n) == n
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        (2..=self.limit).filter(move |&n| self.spf(n) == n)
    }

    /// Factorization by repeated table lookup; `n` must be within the table.
    pub fn factorize(&self, n: u64) -> FactoredInt {
        assert!(n >= 1 && n <= self.limit, "{n} outside spf table");
        let mut factors: Vec<(u64, u32)> = Vec::new();
        let mut m = n;
        while m > 1 {
            let p = self.spf(m);
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        FactoredInt::from_factors(n, factors)
    }

    /// Loads `spf-<limit>.bin` from `dir`, building and writing it when absent
    /// or unreadable.
    pub fn load_or_build(limit: u64, dir: &Path) -> Result<SpfTable> {
        let path = Self::cache_path(dir, limit);
        if let Ok(table) = Self::read_from(&path) {
            if table.limit == limit {
                return Ok(table);
            }
        }
        let table = sieve_spf(limit)?;
        fs::create_dir_all(dir)?;
        table.write_to(&path)?;
        Ok(table)
    }

    pub fn cache_path(dir: &Path, limit: u64) -> PathBuf {
        dir.join(format!("spf-{limit}.bin"))
    }

    const MAGIC: &'static [u8; 8] = b"SPFTBL01";

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        out.write_all(Self::MAGIC)?;
        out.write_all(&self.limit.to_le_bytes())?;
        for &v in &self.spf {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<SpfTable> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 16 || &bytes[..8] != Self::MAGIC {
            return Err(Error::Parse(format!("{} is not an spf table", path.display())));
        }
        let limit = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let body = &bytes[16..];
        if body.len() as u64 != (limit + 1) * 4 {
            return Err(Error::Parse(format!("{} is truncated", path.display())));
        }
        let spf = body
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(SpfTable { limit, spf })
    }
}

/// Builds the smallest-prime-factor table up to `limit` under the default cap.
pub fn sieve_spf(limit: u64) -> Result<SpfTable> {
    sieve_spf_capped(limit, DEFAULT_SIEVE_CAP)
}

/// Tables at least this large go through the cache directory when one is set.
const CACHE_MIN_LIMIT: u64 = 1 << 16;

static CACHE_DIR: OnceLock<PathBuf> = OnceLock::new();

/// Sets the process-wide directory for cached sieve tables. Only the first
/// call takes effect; returns whether it did.
pub fn set_cache_dir(dir: PathBuf) -> bool {
    CACHE_DIR.set(dir).is_ok()
}

pub fn cache_dir() -> Option<&'static Path> {
    CACHE_DIR.get().map(PathBuf::as_path)
}

/// [`sieve_spf`], read from or written to the cache directory if one is set.
/// A cache that cannot be written is not an error; the table is still built.
pub fn cached_sieve_spf(limit: u64) -> Result<SpfTable> {
    match cache_dir() {
        Some(dir) if limit >= CACHE_MIN_LIMIT && limit <= DEFAULT_SIEVE_CAP => {
            SpfTable::load_or_build(limit, dir).or_else(|e| {
                log::warn!("sieve cache in {} unusable ({e}); building in memory", dir.display());
                sieve_spf(limit)
            })
        }
        _ => sieve_spf(limit),
    }
}

pub fn sieve_spf_capped(limit: u64, cap: u64) -> Result<SpfTable> {
    if limit == 0 {
        return Err(Error::Range("sieve limit must be positive".into()));
    }
    if limit > cap || limit > u32::MAX as u64 {
        return Err(Error::Resource(format!(
            "sieve limit {limit} exceeds cap {}",
            cap.min(u32::MAX as u64)
        )));
    }
    let len = limit as usize + 1;
    let mut spf = vec![0u32; len];
    if len > 1 {
        spf[1] = 1;
    }
    for i in 2..len {
        if spf[i] != 0 {
            continue;
        }
        spf[i] = i as u32;
        let Some(start) = i.checked_mul(i) else { continue };
        let mut j = start;
        while j < len {
            if spf[j] == 0 {
                spf[j] = i as u32;
            }
            j += i;
        }
    }
    Ok(SpfTable { limit, spf })
}

/// Primes up to `limit` (inclusive) by a plain Eratosthenes sieve.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let len = limit as usize + 1;
    let mut composite = vec![false; len];
    let mut out = Vec::new();
    for i in 2..len {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j < len {
            composite[j] = true;
            j += i;
        }
    }
    out
}

fn shared_spf() -> &'static SpfTable {
    static TABLE: OnceLock<SpfTable> = OnceLock::new();
    TABLE.get_or_init(|| sieve_spf(SHARED_SPF_LIMIT).expect("shared table fits the cap"))
}

/// Factors `1 <= n <= 2^50`: table lookup for small inputs, trial division
/// plus Pollard's rho above.
pub fn factorize(n: u64) -> Result<FactoredInt> {
    if n == 0 || n > MAX_FACTOR_INPUT {
        return Err(Error::Range(format!("factorize expects 1 <= n <= 2^50, got {n}")));
    }
    let table = shared_spf();
    if n <= table.limit() {
        return Ok(table.factorize(n));
    }
    let mut primes = Vec::new();
    let mut m = n;
    for p in 2..1000u64 {
        if p * p > m {
            break;
        }
        while m % p == 0 {
            primes.push(p);
            m /= p;
        }
    }
    if m > 1 {
        split_large(m, &mut primes);
    }
    primes.sort_unstable();
    let mut factors: Vec<(u64, u32)> = Vec::new();
    for p in primes {
        match factors.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => factors.push((p, 1)),
        }
    }
    Ok(FactoredInt::from_factors(n, factors))
}

fn split_large(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime_u64(n) {
        out.push(n);
        return;
    }
    let d = pollard_rho(n);
    split_large(d, out);
    split_large(n / d, out);
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for all `u64`.
pub fn is_prime_u64(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Brent's variant of Pollard's rho; `n` must be odd and composite.
fn pollard_rho(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut g) = (2u64, 2u64, 1u64);
        while g == 1 {
            x = f(x);
            y = f(f(y));
            g = num_integer::gcd(x.abs_diff(y), n);
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

pub fn is_squarefree(n: u64) -> bool {
    match factorize(n) {
        Ok(f) => f.is_squarefree(),
        Err(_) => {
            // Beyond the factorization range fall back to trial division by squares.
            let mut p = 2u64;
            while p.saturating_mul(p) <= n {
                if n % (p * p) == 0 {
                    return false;
                }
                p += 1;
            }
            true
        }
    }
}

/// `(d/2)` for odd `d`.
#[inline]
fn kronecker_two(d: i64) -> i8 {
    match d.rem_euclid(8) {
        1 | 7 => 1,
        _ => -1,
    }
}

/// Kronecker symbol `(d/n)` for arbitrary integers.
///
/// Factors of two in `n` use the `(d/2)` rule, a negative `n` contributes
/// `(d/-1) = sign(d)`, and the odd part is evaluated as a Jacobi symbol by
/// binary reciprocity.
pub fn kronecker(d: i64, n: i64) -> i8 {
    if n == 0 {
        return (d == 1 || d == -1) as i8;
    }
    let mut k: i8 = if n < 0 && d < 0 { -1 } else { 1 };
    let mut b = n.unsigned_abs();
    let v = b.trailing_zeros();
    b >>= v;
    if v > 0 {
        if d % 2 == 0 {
            return 0;
        }
        if v % 2 == 1 {
            k *= kronecker_two(d);
        }
    }
    if b == 1 {
        return k;
    }
    let a = d.rem_euclid(b as i64) as u64;
    k * jacobi(a, b)
}

/// Jacobi symbol `(a/b)` for odd `b > 0`.
pub fn jacobi(mut a: u64, mut b: u64) -> i8 {
    debug_assert!(b % 2 == 1);
    a %= b;
    let mut t: i8 = 1;
    while a != 0 {
        let z = a.trailing_zeros();
        a >>= z;
        if z % 2 == 1 && (b % 8 == 3 || b % 8 == 5) {
            t = -t;
        }
        if a % 4 == 3 && b % 4 == 3 {
            t = -t;
        }
        std::mem::swap(&mut a, &mut b);
        a %= b;
    }
    if b == 1 {
        t
    } else {
        0
    }
}

/// `∏_{p | n} p/(p+1)` over the distinct primes dividing `n`.
pub fn euler_factor_product(n: u64) -> Result<f64> {
    let f = factorize(n)?;
    Ok(euler_product_of(f.distinct_primes()))
}

pub(crate) fn euler_product_of(primes: impl Iterator<Item = u64>) -> f64 {
    primes.map(|p| p as f64 / (p as f64 + 1.0)).product()
}

/// `f(n0) = exp((log n0)^(1-eps))` for squarefree `n0`.
pub fn f_bound(n0: u64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let f = factorize(n0)?;
    if !f.is_squarefree() {
        return Err(Error::Domain(format!("{n0} is not squarefree")));
    }
    Ok((n0 as f64).ln().powf(1.0 - eps).exp())
}

/// `g(n1) = Σ_{d | n1} μ(d)² / d^(1/2 + eps)`, i.e. `∏_{p | n1} (1 + p^-(1/2+eps))`.
pub fn g_bound(n1: u64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let f = factorize(n1)?;
    Ok(f.distinct_primes()
        .map(|p| 1.0 + (p as f64).powf(-(0.5 + eps)))
        .product())
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("epsilon must lie in (0,1), got {eps}")))
    }
}
