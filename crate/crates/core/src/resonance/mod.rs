//! Resonance moments `M₁ = Σ R_d²`, `M₂ = Σ R_d² C_d(z)²` over a dyadic
//! discriminant range, character averages against their main terms, the
//! bound shape used to normalize scans, and the extremal scan itself.
//!
//! Only odd characters (`d < 0`) carry a nonzero `C_d(z)`, so `M₂` is a sum
//! over negative discriminants while `M₁` runs over the whole range. The
//! quotient `M₂/M₁` is a weighted mean of `C_d(z)²` and never exceeds the
//! largest `C_d(z)²` in the range.

mod bound;
mod lemma;
mod scan;

pub use bound::{predicted_bound, resonator_budget, BoundParams, Regime};
pub use lemma::{lemma22_average, lemma22_averages, Lemma22Report};
pub use scan::{scan_extremal, ScanRecord, ScanReport, ScanStrategy};

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{self, euler_product_of, factorize};
use crate::charsum::{default_z, CharacterSieve, CosineKernel};
use crate::discriminant::{count_abs_range, enumerate_fundamental, DiscriminantRange, FundamentalDiscriminant};
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, ZETA2};
use crate::resonator::{ResonatorEvaluator, ResonatorSet};

/// Default cap on the per-discriminant truncation length `z`.
pub const DEFAULT_Z_BUDGET: f64 = 1.0e6;

const CHUNK: usize = 2048;

/// Character values at the first 64 primes, packed as bit masks per
/// discriminant: `zero` marks `χ_d(p) = 0`, `neg` marks `χ_d(p) = -1`.
#[derive(Debug, Clone)]
struct SmallPrimeCharacters {
    primes: Vec<u64>,
    residues: Vec<Vec<bool>>,
}

impl SmallPrimeCharacters {
    const COUNT: usize = 64;

    fn new() -> Self {
        let primes: Vec<u64> = arith::primes_up_to(400).into_iter().take(Self::COUNT).collect();
        let residues = primes
            .iter()
            .map(|&p| {
                let mut qr = vec![false; p as usize];
                for r in 1..p {
                    qr[(r * r % p) as usize] = true;
                }
                qr
            })
            .collect();
        SmallPrimeCharacters { primes, residues }
    }

    fn index_of(&self, p: u64) -> Option<usize> {
        self.primes.binary_search(&p).ok()
    }

    fn masks(&self, d: i64) -> (u64, u64) {
        let mut zero = 0u64;
        let mut neg = 0u64;
        for (i, &p) in self.primes.iter().enumerate() {
            let v = if p == 2 {
                match d.rem_euclid(8) {
                    1 | 7 => 1,
                    3 | 5 => -1,
                    _ => 0,
                }
            } else {
                let r = d.rem_euclid(p as i64) as usize;
                if r == 0 {
                    0
                } else if self.residues[i][r] {
                    1
                } else {
                    -1
                }
            };
            match v {
                0 => zero |= 1 << i,
                -1 => neg |= 1 << i,
                _ => {}
            }
        }
        (zero, neg)
    }

    /// Element masks over the small-prime index, if every prime is covered.
    fn element_masks(&self, set: &ResonatorSet) -> Option<Vec<u64>> {
        set.elements()
            .iter()
            .map(|&m| {
                let f = factorize(m).ok()?;
                let mask = f
                    .distinct_primes()
                    .try_fold(0u64, |acc, p| Some(acc | 1 << self.index_of(p)?));
                mask
            })
            .collect()
    }
}

#[inline]
fn value_from_masks(element_masks: &[u64], zero: u64, neg: u64) -> i64 {
    let mut r = 0i64;
    for &mk in element_masks {
        if mk & zero == 0 {
            r += if (mk & neg).count_ones() % 2 == 1 { -1 } else { 1 };
        }
    }
    r
}

/// `R_d` for every discriminant in `discs`, in order.
pub fn resonator_values(set: &ResonatorSet, discs: &[FundamentalDiscriminant]) -> Vec<i64> {
    let small = SmallPrimeCharacters::new();
    if let Some(masks) = small.element_masks(set) {
        return discs
            .par_chunks(CHUNK)
            .flat_map_iter(|chunk| {
                chunk.iter().map(|d| {
                    let (zero, neg) = small.masks(d.value());
                    value_from_masks(&masks, zero, neg)
                })
            })
            .collect();
    }
    match ResonatorEvaluator::new(set) {
        Some(ev) => discs.par_iter().map(|d| ev.value(d.value())).collect(),
        None => discs
            .par_iter()
            .map(|d| crate::resonator::resonator_value(set, *d))
            .collect(),
    }
}

/// How the truncation length `z = √(|d| x) log|d|` was applied across a range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZPolicy {
    pub budget: f64,
    pub min_requested: f64,
    pub max_requested: f64,
    pub max_used: f64,
    /// Number of discriminants whose `z` was capped at the budget.
    pub truncated: usize,
}

impl ZPolicy {
    /// The `z` actually used for a discriminant of modulus `d_abs`.
    pub fn z_for(&self, d_abs: f64, x: f64) -> f64 {
        default_z(d_abs, x).min(self.budget)
    }
}

/// The discriminants of a range with their `C_d(z)` values precomputed, so
/// that moments for many resonator sets reuse one pass over the characters.
#[derive(Debug, Clone)]
pub struct ResonanceField {
    range: DiscriminantRange,
    x: f64,
    discs: Vec<FundamentalDiscriminant>,
    c_values: Vec<f64>,
    masks: Vec<(u64, u64)>,
    lower_count: usize,
    z_policy: ZPolicy,
}

impl ResonanceField {
    pub fn new(range: &DiscriminantRange, x: f64, z_budget: f64) -> Result<Self> {
        if !(x >= 2.0) {
            return Err(Error::Domain(format!("x must be >= 2, got {x}")));
        }
        if !(z_budget >= 1.0) {
            return Err(Error::Domain(format!("z budget must be >= 1, got {z_budget}")));
        }
        let discs = enumerate_fundamental(range);
        if discs.is_empty() {
            return Err(Error::Domain("discriminant range is empty".into()));
        }
        let lower_count = count_abs_range(1, range.x(), range.sign());
        let (c_values, z_policy) = c_values(&discs, x, z_budget)?;
        let small = SmallPrimeCharacters::new();
        let masks = discs.par_iter().map(|d| small.masks(d.value())).collect();
        Ok(ResonanceField {
            range: *range,
            x,
            discs,
            c_values,
            masks,
            lower_count,
            z_policy,
        })
    }

    pub fn discriminants(&self) -> &[FundamentalDiscriminant] {
        &self.discs
    }

    /// `C_d(z)` aligned with [`Self::discriminants`]; zero for `d > 0`.
    pub fn c_values(&self) -> &[f64] {
        &self.c_values
    }

    pub fn z_policy(&self) -> ZPolicy {
        self.z_policy
    }

    pub fn max_c_squared(&self) -> (f64, i64) {
        self.discs
            .iter()
            .zip(&self.c_values)
            .map(|(d, c)| (c * c, d.value()))
            .fold((0.0, 0), |best, cur| if cur.0 > best.0 { cur } else { best })
    }

    /// `R_d` aligned with [`Self::discriminants`].
    pub fn resonator_values(&self, set: &ResonatorSet) -> Vec<i64> {
        match SmallPrimeCharacters::new().element_masks(set) {
            Some(em) => self
                .masks
                .par_chunks(CHUNK)
                .flat_map_iter(|c| c.iter().map(|&(z, n)| value_from_masks(&em, z, n)).collect::<Vec<_>>())
                .collect(),
            None => resonator_values(set, &self.discs),
        }
    }

    pub fn moments(&self, set: &ResonatorSet) -> Result<ResonanceMoments> {
        let r = self.resonator_values(set);
        let m1: u128 = r.iter().map(|&v| (v * v) as u128).sum();
        if m1 == 0 {
            return Err(Error::Domain("M1 vanishes: every R_d is zero on this range".into()));
        }
        let m2 = weighted_c_sum(&r, &self.c_values);
        let (max_c2, argmax) = self.max_c_squared();
        let m1_emp = m1 as f64;
        Ok(ResonanceMoments {
            big_x: self.range.x(),
            x: self.x,
            set_size: set.len(),
            set_friability: set.friability(),
            discriminants: self.discs.len(),
            m1_emp,
            m1_main: m1_main_term(set, self.range.x(), self.discs.len(), self.lower_count),
            m2_emp: m2,
            quotient: m2 / m1_emp,
            max_c_squared: max_c2,
            argmax_d: argmax,
            z_policy: self.z_policy,
        })
    }
}

fn weighted_c_sum(r: &[i64], c: &[f64]) -> f64 {
    let partials: Vec<f64> = r
        .par_chunks(CHUNK)
        .zip(c.par_chunks(CHUNK))
        .map(|(rs, cs)| {
            compensated_sum(rs.iter().zip(cs).filter(|(_, &c)| c != 0.0).map(|(&r, &c)| {
                let w = (r * r) as f64;
                w * c * c
            }))
        })
        .collect();
    compensated_sum(partials)
}

fn c_values(discs: &[FundamentalDiscriminant], x: f64, budget: f64) -> Result<(Vec<f64>, ZPolicy)> {
    let mut policy = ZPolicy {
        budget,
        min_requested: f64::INFINITY,
        max_requested: 0.0,
        max_used: 0.0,
        truncated: 0,
    };
    for d in discs.iter().filter(|d| !d.is_even()) {
        let z = default_z(d.modulus() as f64, x);
        policy.min_requested = policy.min_requested.min(z);
        policy.max_requested = policy.max_requested.max(z);
        policy.max_used = policy.max_used.max(z.min(budget));
        if z > budget {
            policy.truncated += 1;
        }
    }
    if policy.max_used == 0.0 {
        policy.min_requested = 0.0;
        return Ok((vec![0.0; discs.len()], policy));
    }
    if policy.truncated > 0 {
        warn!(
            "truncation z capped at budget {budget} for {} of the odd characters (requested up to {:.0})",
            policy.truncated, policy.max_requested
        );
    }
    let limit = policy.max_used.floor() as usize;
    let sieve = CharacterSieve::new(limit as u64)?;
    let kernel = CosineKernel::new(x, limit);
    let values = discs
        .par_chunks(CHUNK)
        .flat_map_iter(|chunk| {
            let mut buf = Vec::with_capacity(limit + 1);
            chunk
                .iter()
                .map(|d| {
                    if d.is_even() {
                        return 0.0;
                    }
                    let terms = policy.z_for(d.modulus() as f64, x).floor() as usize;
                    sieve.fill(d.value(), terms, &mut buf);
                    kernel.c_component(&buf, terms)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok((values, policy))
}

fn m1_main_term(set: &ResonatorSet, big_x: u64, upper_count: usize, lower_count: usize) -> f64 {
    let euler: f64 = compensated_sum(set.elements().iter().map(|&m| {
        euler_product_of(factorize(m).expect("validated element").distinct_primes())
    }));
    let rescale = if lower_count == 0 {
        1.0
    } else {
        upper_count as f64 / lower_count as f64
    };
    big_x as f64 / ZETA2 * euler * rescale
}

/// Empirical and main-term resonance moments for one resonator set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonanceMoments {
    #[serde(rename = "X")]
    pub big_x: u64,
    pub x: f64,
    pub set_size: usize,
    pub set_friability: u64,
    pub discriminants: usize,
    pub m1_emp: f64,
    /// `(X/ζ(2)) Σ_m ∏_{p|m} p/(p+1)`, rescaled from `|d| <= X` to the range.
    pub m1_main: f64,
    pub m2_emp: f64,
    pub quotient: f64,
    pub max_c_squared: f64,
    pub argmax_d: i64,
    pub z_policy: ZPolicy,
}

impl ResonanceMoments {
    /// `max_d C_d(z)² >= M₂/M₁`.
    pub fn pivot_holds(&self) -> bool {
        self.max_c_squared >= self.quotient
    }
}

/// `(M₁ empirical, M₁ main term)` over the range.
pub fn moment_m1(set: &ResonatorSet, range: &DiscriminantRange) -> (f64, f64) {
    let discs = enumerate_fundamental(range);
    let r = resonator_values(set, &discs);
    let m1: u128 = r.iter().map(|&v| (v * v) as u128).sum();
    let lower = count_abs_range(1, range.x(), range.sign());
    (m1 as f64, m1_main_term(set, range.x(), discs.len(), lower))
}

/// Empirical `M₂` over the range.
pub fn moment_m2(set: &ResonatorSet, range: &DiscriminantRange, x: f64, z_budget: f64) -> Result<f64> {
    let field = ResonanceField::new(range, x, z_budget)?;
    let r = resonator_values(set, field.discriminants());
    Ok(weighted_c_sum(&r, field.c_values()))
}

/// Full moment record for one set; see [`ResonanceField`] to reuse the
/// character pass across sets.
pub fn resonance_quotient(
    set: &ResonatorSet,
    range: &DiscriminantRange,
    x: f64,
    z_budget: f64,
) -> Result<ResonanceMoments> {
    ResonanceField::new(range, x, z_budget)?.moments(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charsum::c_component;
    use crate::discriminant::SignFilter;
    use crate::resonator::{build_structured_set, resonator_value};

    fn range(x: u64, sign: SignFilter) -> DiscriminantRange {
        DiscriminantRange::new(x, sign).unwrap()
    }

    #[test]
    fn m1_of_singleton_counts_discriminants() {
        let one = ResonatorSet::new(vec![1]).unwrap();
        let r = range(10_000, SignFilter::Both);
        let (emp, _) = moment_m1(&one, &r);
        assert_eq!(emp, 6074.0);
    }

    #[test]
    fn m1_two_three_matches_frozen_and_main_term() {
        let s = ResonatorSet::new(vec![2, 3]).unwrap();
        let (emp, main) = moment_m1(&s, &range(10_000, SignFilter::Both));
        // Σ (χ_d(2) + χ_d(3))² over (10^4, 2·10^4], from an independent script.
        assert_eq!(emp, 8603.0);
        let ratio = emp / main;
        assert!((0.9..=1.1).contains(&ratio), "{ratio}");
    }

    #[test]
    fn m1_upper_bound() {
        let s = build_structured_set(16, 64).unwrap();
        let r = range(5_000, SignFilter::Both);
        let (emp, _) = moment_m1(&s, &r);
        let count = enumerate_fundamental(&r).len() as f64;
        assert!(emp <= 256.0 * count);
    }

    #[test]
    fn m2_vanishes_on_even_characters() {
        let s = ResonatorSet::new(vec![2, 3]).unwrap();
        assert_eq!(moment_m2(&s, &range(1_000, SignFilter::Positive), 10.0, DEFAULT_Z_BUDGET).unwrap(), 0.0);
    }

    #[test]
    fn m2_singleton_frozen_value() {
        // Literal Σ_{1≤|m|≤z} sums over the 306 negative d in (10³, 2·10³],
        // computed by an independent script.
        let one = ResonatorSet::new(vec![1]).unwrap();
        let m2 = moment_m2(&one, &range(1_000, SignFilter::Both), 10.0, DEFAULT_Z_BUDGET).unwrap();
        let expect = 1880.7699916851739;
        assert!((m2 - expect).abs() <= 1e-9 * expect, "{m2}");
    }

    #[test]
    fn field_resonator_values_match_direct() {
        let field = ResonanceField::new(&range(3_000, SignFilter::Both), 7.0, 100.0).unwrap();
        for s in [build_structured_set(64, 64).unwrap(), ResonatorSet::new(vec![313, 317, 331]).unwrap()] {
            let direct: Vec<i64> = field.discriminants().iter().map(|&d| resonator_value(&s, d)).collect();
            assert_eq!(field.resonator_values(&s), direct);
        }
    }

    #[test]
    fn field_c_values_match_direct_route() {
        let field = ResonanceField::new(&range(300, SignFilter::Both), 7.0, DEFAULT_Z_BUDGET).unwrap();
        for (d, &c) in field.discriminants().iter().zip(field.c_values()) {
            let z = default_z(d.modulus() as f64, 7.0);
            let direct = c_component(*d, z, 7.0);
            assert!((c - direct).abs() <= 1e-9 * (1.0 + direct.abs()), "d={d}");
            if d.is_even() {
                assert_eq!(c, 0.0);
            }
        }
    }

    #[test]
    fn z_budget_caps_terms() {
        let field = ResonanceField::new(&range(2_000, SignFilter::Negative), 10.0, 500.0).unwrap();
        let p = field.z_policy();
        assert_eq!(p.max_used, 500.0);
        assert!(p.truncated > 0);
        let d = field.discriminants()[3];
        let direct = c_component(d, 500.0, 10.0);
        assert!((field.c_values()[3] - direct).abs() < 1e-9);
    }

    #[test]
    fn singleton_quotient_is_mean_c_squared() {
        let one = ResonatorSet::new(vec![1]).unwrap();
        let field = ResonanceField::new(&range(1_000, SignFilter::Both), 10.0, DEFAULT_Z_BUDGET).unwrap();
        let m = field.moments(&one).unwrap();
        let mean = field.c_values().iter().map(|c| c * c).sum::<f64>() / field.discriminants().len() as f64;
        assert!((m.quotient - mean).abs() <= 1e-12 * mean);
        assert!(m.pivot_holds());
    }

    #[test]
    fn pivot_inequality_on_small_range() {
        let field = ResonanceField::new(&range(10_000, SignFilter::Both), 20.0, 5_000.0).unwrap();
        for s in [
            ResonatorSet::new(vec![1]).unwrap(),
            ResonatorSet::new(vec![2, 3]).unwrap(),
            build_structured_set(32, 64).unwrap(),
        ] {
            let m = field.moments(&s).unwrap();
            assert!(m.pivot_holds(), "{m:?}");
            let brute = field
                .discriminants()
                .iter()
                .zip(field.c_values())
                .map(|(_, c)| c * c)
                .fold(0.0, f64::max);
            assert_eq!(m.max_c_squared, brute);
        }
    }

    #[test]
    fn resonator_values_match_direct() {
        let discs = enumerate_fundamental(&range(700, SignFilter::Both));
        // One set inside the small-prime masks, one beyond them.
        for s in [
            build_structured_set(64, 64).unwrap(),
            ResonatorSet::new(vec![313, 317, 331]).unwrap(),
        ] {
            let fast = resonator_values(&s, &discs);
            for (d, v) in discs.iter().zip(fast) {
                assert_eq!(v, resonator_value(&s, *d));
            }
        }
    }

    #[test]
    fn empty_m1_is_domain_error() {
        // χ_d(2) = 0 for every even d; restrict to a set hitting only 2.
        let s = ResonatorSet::new(vec![2]).unwrap();
        let field = ResonanceField::new(&range(2, SignFilter::Both), 2.0, 10.0).unwrap();
        // -4 has χ(2) = 0 but -3 has χ(2) = -1, so M1 > 0 here.
        assert!(field.moments(&s).is_ok());
        let s = ResonatorSet::new(vec![6]).unwrap();
        assert!(matches!(field.moments(&s), Err(Error::Domain(_))));
    }
}
