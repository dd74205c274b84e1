use std::cmp::Ordering;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bound::{predicted_bound, BoundParams};
use super::resonator_values;
use crate::arith::DEFAULT_SIEVE_CAP;
use crate::charsum::CharacterSieve;
use crate::discriminant::{enumerate_fundamental, DiscriminantRange, FundamentalDiscriminant};
use crate::error::{Error, Result};
use crate::resonator::ResonatorSet;

/// Every hundredth discriminant (in enumeration order) joins a guided scan
/// as a control sample.
const CONTROL_STRIDE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScanStrategy {
    Full,
    ResonanceGuided { k: usize },
}

/// `T(d) = Σ_{n <= |d|/x} χ_d(n)` for one discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRecord {
    pub d: FundamentalDiscriminant,
    pub x: f64,
    pub sum_value: i64,
    /// `|T(d)| / √(|d|/x)`.
    pub normalized: f64,
    /// `R_d²` when a resonator set took part in the scan.
    pub resonator_weight: Option<f64>,
    /// Picked by the control sample rather than by weight.
    pub control: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    #[serde(rename = "X")]
    pub big_x: u64,
    pub x: f64,
    pub strategy: ScanStrategy,
    /// Fundamental discriminants in the range.
    pub population: usize,
    /// Effective `K` after clamping (guided scans only).
    pub k_used: Option<usize>,
    pub control_count: usize,
    /// `None` when `√X/x <= e` and the bound shape is undefined.
    pub bound: Option<BoundParams>,
    #[serde(skip)]
    pub records: Vec<ScanRecord>,
}

impl ScanReport {
    pub fn max_normalized(&self) -> f64 {
        self.records.first().map_or(0.0, |r| r.normalized)
    }

    /// Median of the normalized values (upper median for even counts).
    pub fn median_normalized(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        // Records are sorted descending.
        self.records[(self.records.len() - 1) / 2].normalized
    }
}

/// Scans `X < |d| <= 2X` for large `|T(d)|`. A guided scan needs `set` and
/// evaluates only the `K` discriminants with the largest `R_d²` plus a 1%
/// control sample; a full scan evaluates every discriminant.
pub fn scan_extremal(
    range: &DiscriminantRange,
    x: f64,
    strategy: ScanStrategy,
    set: Option<&ResonatorSet>,
) -> Result<ScanReport> {
    if !(x >= 1.0) || !x.is_finite() {
        return Err(Error::Domain(format!("x must be >= 1, got {x}")));
    }
    if (range.x() as f64) < x {
        return Err(Error::Domain(format!("X = {} must be at least x = {x}", range.x())));
    }
    if matches!(strategy, ScanStrategy::ResonanceGuided { .. }) && set.is_none() {
        return Err(Error::Domain("resonance-guided scan needs a resonator set".into()));
    }
    let limit = (2.0 * range.x() as f64 / x).floor() as u64;
    if limit > DEFAULT_SIEVE_CAP {
        return Err(Error::Resource(format!(
            "2X/x = {limit} exceeds the scan sieve budget {DEFAULT_SIEVE_CAP}"
        )));
    }
    let discs = enumerate_fundamental(range);
    let population = discs.len();
    let weights: Option<Vec<f64>> =
        set.map(|s| resonator_values(s, &discs).into_iter().map(|r| (r * r) as f64).collect());

    let mut is_control = vec![false; population];
    let (chosen, k_used, control_count): (Vec<usize>, Option<usize>, usize) = match strategy {
        ScanStrategy::Full => ((0..population).collect(), None, 0),
        ScanStrategy::ResonanceGuided { k } => {
            let w = weights.as_ref().expect("checked above");
            let k_used = if k > population {
                warn!("K = {k} exceeds the range population {population}; clamped");
                population
            } else {
                k
            };
            let mut order: Vec<usize> = (0..population).collect();
            // Stable: equal weights keep enumeration order.
            order.sort_by(|&a, &b| w[b].total_cmp(&w[a]));
            let mut mark = vec![false; population];
            for &i in &order[..k_used] {
                mark[i] = true;
            }
            let mut control = 0;
            for i in (0..population).step_by(CONTROL_STRIDE) {
                if !mark[i] {
                    mark[i] = true;
                    is_control[i] = true;
                    control += 1;
                }
            }
            ((0..population).filter(|&i| mark[i]).collect(), Some(k_used), control)
        }
    };

    let sieve = CharacterSieve::new(limit.max(1))?;
    let mut records: Vec<ScanRecord> = chosen
        .par_chunks(1024)
        .flat_map_iter(|chunk| {
            let mut buf = Vec::new();
            chunk
                .iter()
                .map(|&i| {
                    let d = discs[i];
                    let q = d.modulus() as f64;
                    let len = (q / x).floor() as usize;
                    sieve.fill(d.value(), len, &mut buf);
                    let sum_value: i64 = buf[1..=len].iter().map(|&v| v as i64).sum();
                    ScanRecord {
                        d,
                        x,
                        sum_value,
                        normalized: sum_value.unsigned_abs() as f64 / (q / x).sqrt(),
                        resonator_weight: weights.as_ref().map(|w| w[i]),
                        control: is_control[i],
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    records.sort_by(record_order);

    Ok(ScanReport {
        big_x: range.x(),
        x,
        strategy,
        population,
        k_used,
        control_count,
        bound: predicted_bound(range.x(), x).ok(),
        records,
    })
}

fn record_order(a: &ScanRecord, b: &ScanRecord) -> Ordering {
    b.normalized
        .total_cmp(&a.normalized)
        .then(a.d.modulus().cmp(&b.d.modulus()))
        .then(a.d.value().cmp(&b.d.value()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charsum::partial_sum_direct;
    use crate::discriminant::SignFilter;
    use crate::resonator::build_structured_set;

    fn range(x: u64) -> DiscriminantRange {
        DiscriminantRange::new(x, SignFilter::Both).unwrap()
    }

    #[test]
    fn full_scan_matches_direct_sums() {
        let rep = scan_extremal(&range(1_000), 10.0, ScanStrategy::Full, None).unwrap();
        assert_eq!(rep.records.len(), 611);
        assert_eq!(rep.population, 611);
        for r in &rep.records {
            let len = r.d.modulus() / 10;
            assert_eq!(r.sum_value, partial_sum_direct(r.d, len), "d={}", r.d);
            assert!(r.sum_value.unsigned_abs() <= len);
            let back = r.normalized * (r.d.modulus() as f64 / 10.0).sqrt();
            assert!((back - r.sum_value.abs() as f64).abs() < 1e-9);
            assert!(r.resonator_weight.is_none());
        }
        assert!(rep.records.windows(2).all(|w| w[0].normalized >= w[1].normalized));
    }

    #[test]
    fn heavy_tail_small() {
        let rep = scan_extremal(&range(1_000), 10.0, ScanStrategy::Full, None).unwrap();
        assert!(rep.max_normalized() >= 2.0 * rep.median_normalized());
        assert!(rep.bound.is_some());
    }

    #[test]
    fn guided_with_full_population_equals_full() {
        let set = build_structured_set(16, 64).unwrap();
        let full = scan_extremal(&range(2_000), 10.0, ScanStrategy::Full, Some(&set)).unwrap();
        let guided =
            scan_extremal(&range(2_000), 10.0, ScanStrategy::ResonanceGuided { k: usize::MAX }, Some(&set)).unwrap();
        assert_eq!(guided.k_used, Some(full.population));
        assert_eq!(full.records, guided.records);
    }

    #[test]
    fn guided_picks_heaviest_and_control() {
        let set = build_structured_set(16, 64).unwrap();
        let rep = scan_extremal(&range(5_000), 20.0, ScanStrategy::ResonanceGuided { k: 50 }, Some(&set)).unwrap();
        assert_eq!(rep.records.len(), 50 + rep.control_count);
        assert_eq!(rep.records.iter().filter(|r| r.control).count(), rep.control_count);
        assert!(rep.control_count > 0 && rep.control_count <= rep.population.div_ceil(100));
        let full = scan_extremal(&range(5_000), 20.0, ScanStrategy::Full, Some(&set)).unwrap();
        let mut w: Vec<f64> = full.records.iter().map(|r| r.resonator_weight.unwrap()).collect();
        w.sort_by(|a, b| b.total_cmp(a));
        let kth = w[49];
        let above = rep.records.iter().filter(|r| r.resonator_weight.unwrap() > kth).count();
        assert_eq!(above, w.iter().filter(|&&v| v > kth).count());
    }

    #[test]
    fn guided_needs_set() {
        let err = scan_extremal(&range(1_000), 10.0, ScanStrategy::ResonanceGuided { k: 5 }, None);
        assert!(matches!(err, Err(Error::Domain(_))));
        assert!(scan_extremal(&range(1_000), 0.5, ScanStrategy::Full, None).is_err());
    }

    #[test]
    fn scan_is_deterministic_across_pools() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| scan_extremal(&range(20_000), 30.0, ScanStrategy::Full, None).unwrap())
        };
        assert_eq!(run(1).records, run(4).records);
    }
}
