//! Resonator sets of squarefree friable integers and their GCD sums
//! `Σ_{m,n} √((m,n)/[m,n])`.
//!
//! For squarefree `m, n` the summand is `∏_{p ∈ m △ n} p^{-1/2}`, so sets
//! whose elements differ by swapping a few small primes have large GCD sums.
//! The structured construction exploits this by drawing elements from the
//! squarefree products of as few of the smallest primes as possible.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{self, factorize, kronecker};
use crate::discriminant::FundamentalDiscriminant;
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, CompensatedSum};

/// Upper bound on the number of primes the structured construction may use.
const MAX_STRUCTURED_PRIMES: usize = 24;

/// Sorted distinct squarefree integers with `max <= 2 min`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResonatorSet {
    elements: Vec<u64>,
    friability: u64,
}

impl ResonatorSet {
    pub fn new(mut elements: Vec<u64>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Construction("resonator set must be non-empty".into()));
        }
        elements.sort_unstable();
        if elements.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Construction("resonator elements must be distinct".into()));
        }
        if elements[0] == 0 {
            return Err(Error::Construction("resonator elements must be positive".into()));
        }
        let (min, max) = (elements[0], *elements.last().unwrap());
        if max > 2 * min {
            return Err(Error::Construction(format!(
                "max {max} exceeds twice the min {min}"
            )));
        }
        let mut friability = 1;
        for &m in &elements {
            let f = factorize(m)?;
            if !f.is_squarefree() {
                return Err(Error::Construction(format!("{m} is not squarefree")));
            }
            friability = friability.max(f.p_plus);
        }
        Ok(ResonatorSet {
            elements,
            friability,
        })
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `y_M = max_{m ∈ M} P+(m)`.
    pub fn friability(&self) -> u64 {
        self.friability
    }

    pub fn min(&self) -> u64 {
        self.elements[0]
    }

    pub fn max(&self) -> u64 {
        *self.elements.last().unwrap()
    }

    /// Text form: `# resonator N=<N> y=<y>` then one element per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("# resonator N={} y={}\n", self.len(), self.friability);
        for m in &self.elements {
            writeln!(s, "{m}").unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty resonator file".into()))?;
        let declared = parse_header(header)?;
        let mut elements = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let v = line
                .parse::<u64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", i + 2)))?;
            elements.push(v);
        }
        if elements.len() != declared {
            return Err(Error::Parse(format!(
                "header declares N={declared} but file lists {} elements",
                elements.len()
            )));
        }
        ResonatorSet::new(elements)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn parse_header(header: &str) -> Result<usize> {
    let rest = header
        .strip_prefix("# resonator")
        .ok_or_else(|| Error::Parse(format!("bad resonator header: {header:?}")))?;
    let mut n = None;
    let mut y = None;
    for tok in rest.split_whitespace() {
        if let Some(v) = tok.strip_prefix("N=") {
            n = v.parse::<usize>().ok();
        } else if let Some(v) = tok.strip_prefix("y=") {
            y = v.parse::<u64>().ok();
        }
    }
    match (n, y) {
        (Some(n), Some(_)) => Ok(n),
        _ => Err(Error::Parse(format!("bad resonator header: {header:?}"))),
    }
}

/// `√((m,n)/[m,n]) = (m,n)/√(mn)`.
#[inline]
pub fn pair_weight(m: u64, n: u64) -> f64 {
    let g = num_integer::gcd(m, n) as f64;
    g / ((m as f64) * (n as f64)).sqrt()
}

/// `[m,n]/(m,n) = mn/(m,n)²`.
#[inline]
pub fn lcm_gcd_ratio(m: u64, n: u64) -> u128 {
    let g = num_integer::gcd(m, n) as u128;
    (m as u128 / g) * (n as u128 / g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GcdSumReport {
    pub size: usize,
    pub total: f64,
    /// Part of `total` from pairs with `[m,n]/(m,n) > threshold`.
    pub tail: f64,
    pub threshold: f64,
}

/// Full GCD sum; the tail is empty (threshold `∞`).
pub fn gcd_sum(elements: &[u64]) -> GcdSumReport {
    gcd_sum_tail_unchecked(elements, f64::INFINITY)
}

/// GCD sum together with its tail above `threshold`.
pub fn gcd_sum_tail(elements: &[u64], threshold: f64) -> Result<GcdSumReport> {
    if !(threshold > 0.0) {
        return Err(Error::Domain(format!("tail threshold must be positive, got {threshold}")));
    }
    Ok(gcd_sum_tail_unchecked(elements, threshold))
}

fn gcd_sum_tail_unchecked(elements: &[u64], threshold: f64) -> GcdSumReport {
    // Off-diagonal pairs i < j, one row per task; rows are reduced in order.
    let rows: Vec<(f64, f64)> = (0..elements.len())
        .into_par_iter()
        .map(|i| {
            let m = elements[i];
            let mut all = CompensatedSum::new();
            let mut tail = CompensatedSum::new();
            for &n in &elements[i + 1..] {
                let w = pair_weight(m, n);
                all.add(w);
                if lcm_gcd_ratio(m, n) as f64 > threshold {
                    tail.add(w);
                }
            }
            (all.value(), tail.value())
        })
        .collect();
    let off = compensated_sum(rows.iter().map(|r| r.0));
    let tail = compensated_sum(rows.iter().map(|r| r.1));
    GcdSumReport {
        size: elements.len(),
        total: elements.len() as f64 + 2.0 * off,
        tail: 2.0 * tail,
        threshold,
    }
}

/// Squarefree products (> 1) of `primes` not exceeding `bound`, sorted.
fn squarefree_products(primes: &[u64], bound: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for &p in primes {
        let len = out.len();
        for i in 0..len {
            if let Some(v) = out[i].checked_mul(p) {
                if v <= bound {
                    out.push(v);
                }
            }
        }
    }
    out.retain(|&v| v > 1);
    out.sort_unstable();
    out
}

fn window(sorted: &[u64], start: u64) -> &[u64] {
    let lo = sorted.partition_point(|&v| v < start);
    let hi = sorted.partition_point(|&v| v <= 2 * start);
    &sorted[lo..hi]
}

/// First power of two `T` whose window `[T, 2T]` holds at least `n` entries.
fn first_feasible_window(sorted: &[u64], n: usize) -> Option<u64> {
    let last = *sorted.last()?;
    let mut t = 1u64;
    while t <= last {
        if window(sorted, t).len() >= n {
            return Some(t);
        }
        t = t.checked_mul(2)?;
    }
    None
}

fn max_window(sorted: &[u64]) -> usize {
    let Some(&last) = sorted.last() else { return 0 };
    let mut t = 1u64;
    let mut best = 0;
    while t <= last {
        best = best.max(window(sorted, t).len());
        t *= 2;
    }
    best
}

/// Structured resonator set of size `n` with friability at most `y`.
///
/// Uses the smallest number `r` of the primes `2, 3, 5, ...` (all `<= y`)
/// for which some dyadic window `[T, 2T]`, `T` a power of two, contains `n`
/// squarefree products of those primes; `T` is the smallest such power and
/// the `n` smallest products in the window are returned.
pub fn build_structured_set(n: usize, y: u64) -> Result<ResonatorSet> {
    let (set, _) = structured_with_window(n, y)?;
    Ok(set)
}

/// Like [`build_structured_set`] but also returns the window start `T`.
pub fn structured_with_window(n: usize, y: u64) -> Result<(ResonatorSet, u64)> {
    if n == 0 {
        return Err(Error::Construction("N must be positive".into()));
    }
    let primes = arith::primes_up_to(y);
    if primes.is_empty() {
        return Err(Error::Construction(format!("no primes <= y={y}")));
    }
    let usable = primes.len().min(MAX_STRUCTURED_PRIMES);
    for r in 1..=usable {
        let products = squarefree_products(&primes[..r], u64::MAX);
        if let Some(t) = first_feasible_window(&products, n) {
            let chosen = window(&products, t)[..n].to_vec();
            return Ok((ResonatorSet::new(chosen)?, t));
        }
    }
    let best = max_window(&squarefree_products(&primes[..usable], u64::MAX));
    if usable < primes.len() {
        Err(Error::Construction(format!(
            "N={n} exceeds the structured construction's reach: the first {usable} primes fit at most {best} squarefree products in a dyadic window"
        )))
    } else {
        Err(Error::Construction(format!(
            "friability y={y} too small for N={n}: at most {best} squarefree {y}-friable integers fit in a dyadic window [T, 2T]"
        )))
    }
}

/// Smallest friability bound under which the structured construction of
/// size `n` succeeds (the largest prime it ends up using).
pub fn minimal_friability(n: usize) -> Result<u64> {
    let primes = arith::primes_up_to(200);
    let y = *primes.get(MAX_STRUCTURED_PRIMES - 1).unwrap();
    Ok(build_structured_set(n, y)?.friability())
}

/// All squarefree `y`-friable integers in `[start, 2 start]`, ascending.
pub fn friable_window_pool(start: u64, y: u64) -> Vec<u64> {
    let primes = arith::primes_up_to(y);
    let products = squarefree_products(&primes, start.saturating_mul(2));
    window(&products, start).to_vec()
}

/// `n` distinct squarefree `y`-friable integers drawn uniformly from
/// `[start, 2 start]` with a seeded generator.
pub fn random_friable_set(n: usize, y: u64, start: u64, seed: u64) -> Result<ResonatorSet> {
    let pool = friable_window_pool(start, y);
    if pool.len() < n || n == 0 {
        return Err(Error::Construction(format!(
            "window [{start}, {}] holds {} squarefree {y}-friable integers, {n} requested",
            2 * start,
            pool.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = index::sample(&mut rng, pool.len(), n)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    ResonatorSet::new(picked)
}

/// A seeded candidate list for [`build_greedy_set`]: up to `count` elements
/// of the friable pool in the structured window for `(n, y)`.
pub fn greedy_candidates(n: usize, y: u64, count: usize, seed: u64) -> Result<Vec<u64>> {
    let (_, start) = structured_with_window(n, y)?;
    let pool = friable_window_pool(start, y);
    if pool.len() <= count {
        return Ok(pool);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<u64> = index::sample(&mut rng, pool.len(), count)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    picked.sort_unstable();
    Ok(picked)
}

/// Greedy maximization of the GCD sum over `candidates`.
///
/// The set is seeded with the heaviest compatible pair (for `n >= 2`) and
/// then grown by the candidate of largest marginal gain
/// `1 + 2 Σ_{s ∈ S} √((c,s)/[c,s])`. A candidate is compatible only if the
/// set keeps `max <= 2 min`. Ties go to the smaller integer.
pub fn build_greedy_set(n: usize, candidates: &[u64]) -> Result<ResonatorSet> {
    let mut cands: Vec<u64> = candidates.to_vec();
    cands.sort_unstable();
    cands.dedup();
    if n == 0 {
        return Err(Error::Construction("N must be positive".into()));
    }
    if cands.len() < n {
        return Err(Error::Construction(format!(
            "{} distinct candidates, {n} requested",
            cands.len()
        )));
    }
    if let Some(&bad) = cands.iter().find(|&&c| c == 0 || !arith::is_squarefree(c)) {
        return Err(Error::Construction(format!("candidate {bad} is not squarefree")));
    }
    if n == 1 {
        return ResonatorSet::new(vec![cands[0]]);
    }

    // Heaviest compatible pair, lexicographically smallest on ties.
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..cands.len() {
        for j in (i + 1)..cands.len() {
            if cands[j] > 2 * cands[i] {
                break;
            }
            let w = pair_weight(cands[i], cands[j]);
            if best.map_or(true, |(bw, _, _)| w > bw) {
                best = Some((w, i, j));
            }
        }
    }
    let (_, i0, j0) = best.ok_or_else(|| {
        Error::Construction("no two candidates lie within a factor of two".into())
    })?;

    let mut chosen = vec![false; cands.len()];
    let mut gain = vec![0.0f64; cands.len()];
    let mut lo = cands[i0];
    let mut hi = cands[j0];
    let take = |k: usize, chosen: &mut Vec<bool>, gain: &mut Vec<f64>| {
        chosen[k] = true;
        let c = cands[k];
        for (t, g) in gain.iter_mut().enumerate() {
            if !chosen[t] {
                *g += pair_weight(c, cands[t]);
            }
        }
    };
    take(i0, &mut chosen, &mut gain);
    take(j0, &mut chosen, &mut gain);

    for _ in 2..n {
        let mut pick: Option<usize> = None;
        for t in 0..cands.len() {
            if chosen[t] {
                continue;
            }
            let c = cands[t];
            if c.max(hi) > 2 * c.min(lo) {
                continue;
            }
            // Strict comparison keeps the smaller index (= smaller integer) on ties.
            if pick.map_or(true, |p| gain[t] > gain[p]) {
                pick = Some(t);
            }
        }
        let k = pick.ok_or_else(|| {
            Error::Construction(format!(
                "only {} candidates are compatible with max <= 2 min, {n} requested",
                chosen.iter().filter(|&&c| c).count()
            ))
        })?;
        lo = lo.min(cands[k]);
        hi = hi.max(cands[k]);
        take(k, &mut chosen, &mut gain);
    }
    let picked = cands
        .iter()
        .zip(&chosen)
        .filter_map(|(&c, &on)| on.then_some(c))
        .collect();
    ResonatorSet::new(picked)
}

/// `R_d = Σ_{m ∈ M} χ_d(m)`.
pub fn resonator_value(set: &ResonatorSet, d: FundamentalDiscriminant) -> i64 {
    set.elements()
        .iter()
        .map(|&m| kronecker(d.value(), m as i64) as i64)
        .sum()
}

/// Fast repeated evaluation of `R_d` from the character values at the
/// primes dividing elements of the set.
#[derive(Debug, Clone)]
pub struct ResonatorEvaluator {
    primes: Vec<u64>,
    masks: Vec<u128>,
}

impl ResonatorEvaluator {
    /// Returns `None` when the set involves more than 128 distinct primes.
    pub fn new(set: &ResonatorSet) -> Option<Self> {
        let mut index: HashMap<u64, usize> = HashMap::new();
        let mut primes = Vec::new();
        let mut masks = Vec::with_capacity(set.len());
        for &m in set.elements() {
            let f = factorize(m).expect("validated element");
            let mut mask = 0u128;
            for p in f.distinct_primes() {
                let i = *index.entry(p).or_insert_with(|| {
                    primes.push(p);
                    primes.len() - 1
                });
                if i >= 128 {
                    return None;
                }
                mask |= 1 << i;
            }
            masks.push(mask);
        }
        Some(ResonatorEvaluator { primes, masks })
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// `R_d` from masks of primes with `χ_d(p) = 0` and `χ_d(p) = -1`,
    /// indexed like [`Self::primes`].
    #[inline]
    pub fn value_from_masks(&self, zero: u128, neg: u128) -> i64 {
        let mut r = 0i64;
        for &mk in &self.masks {
            if mk & zero == 0 {
                r += if (mk & neg).count_ones() % 2 == 1 { -1 } else { 1 };
            }
        }
        r
    }

    pub fn value(&self, d: i64) -> i64 {
        let (zero, neg) = self.masks_for(d);
        self.value_from_masks(zero, neg)
    }

    pub fn masks_for(&self, d: i64) -> (u128, u128) {
        let mut zero = 0u128;
        let mut neg = 0u128;
        for (i, &p) in self.primes.iter().enumerate() {
            match kronecker(d, p as i64) {
                0 => zero |= 1 << i,
                -1 => neg |= 1 << i,
                _ => {}
            }
        }
        (zero, neg)
    }
}

/// `Σ_{k,ℓ ≤ kmax, mk = nℓ} kℓ` via `k = nL/(m,n)`, `ℓ = mL/(m,n)`:
/// `Σ_{L ≤ kmax (m,n)/max(m,n)} ([m,n]/(m,n)) L²`.
pub fn inner_sum_pairs(m: u64, n: u64, kmax: u64) -> u128 {
    let g = num_integer::gcd(m, n);
    let lmax = (kmax as u128 * g as u128 / m.max(n) as u128) as u64;
    let ratio = lcm_gcd_ratio(m, n);
    let l = lmax as u128;
    ratio * (l * (l + 1) * (2 * l + 1) / 6)
}
