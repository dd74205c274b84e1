//! Property suites behind the `verify` command. Each check reports the
//! observed quantity next to its threshold.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::{factorize, is_squarefree};
use crate::charsum::{default_z, partial_sum, polya_approx, DEFAULT_KAPPA};
use crate::config::Suite;
use crate::discriminant::{enumerate_abs_range, SignFilter};
use crate::error::Result;
use crate::resonance::lemma22_averages;
use crate::resonator::inner_sum_pairs;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Check>> {
    match suite {
        Suite::Lemma22 => lemma22_suite(1_000_000),
        Suite::Polya => polya_suite(seed),
        Suite::Parity => parity_suite(seed),
        Suite::Innersum => Ok(innersum_suite()),
    }
}

/// Square `n <= 100` within 0.02 of the normalized main term; non-square
/// squarefree `n <= 100` below 0.01 in normalized absolute value.
pub fn lemma22_suite(big_x: u64) -> Result<Vec<Check>> {
    let ns: Vec<u64> = (1..=100).filter(|&n| factorize(n).map(|f| f.is_square()).unwrap_or(false) || is_squarefree(n)).collect();
    let scale = big_x as f64;
    Ok(lemma22_averages(&ns, big_x, 0.1)?
        .into_iter()
        .map(|r| {
            let dev = r.residual.abs() / scale;
            let (limit, kind) = if r.main_term > 0.0 { (0.02, "square") } else { (0.01, "non-square") };
            Check::new(
                format!("lemma22 n={} ({kind})", r.n),
                dev <= limit,
                format!("|sum - main|/X = {dev:.6} (limit {limit})"),
            )
        })
        .collect())
}

fn sample(lo: u64, hi: u64, count: usize, seed: u64) -> Vec<crate::discriminant::FundamentalDiscriminant> {
    let pool = enumerate_abs_range(lo, hi, SignFilter::Both);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = index::sample(&mut rng, pool.len(), count.min(pool.len())).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| pool[i]).collect()
}

/// Pólya approximation against exact partial sums for 50 seeded
/// discriminants in `(10^5, 2·10^5]` at `x = 50`.
pub fn polya_suite(seed: u64) -> Result<Vec<Check>> {
    let x = 50.0;
    sample(100_000, 200_000, 50, seed)
        .into_iter()
        .map(|d| {
            let q = d.modulus() as f64;
            let z = default_z(q, x);
            let p = polya_approx(d, 1.0 / x, z, DEFAULT_KAPPA)?;
            let exact = partial_sum(d, q / x);
            let err = (p.approx - exact as f64).abs();
            Ok(Check::new(
                format!("polya d={d}"),
                err <= p.err_bound,
                format!("|approx - exact| = {err:.4} (bound {:.4})", p.err_bound),
            ))
        })
        .collect()
}

/// `C_d = 0` for even and `S_d = 0` for odd characters, exactly.
pub fn parity_suite(seed: u64) -> Result<Vec<Check>> {
    let mut zero_c = 0usize;
    let mut zero_s = 0usize;
    let mut failures = Vec::new();
    let ds = sample(1_000, 50_000, 1_000, seed);
    for &d in &ds {
        let p = polya_approx(d, 0.1, 200.0, DEFAULT_KAPPA)?;
        let ok = if d.is_even() { p.c_part == 0.0 } else { p.s_part == 0.0 };
        if ok {
            if d.is_even() {
                zero_c += 1;
            } else {
                zero_s += 1;
            }
        } else {
            failures.push(d.value());
        }
    }
    Ok(vec![
        Check::new(
            "parity C_d = 0 for d > 0",
            failures.iter().all(|&d| d < 0),
            format!("{zero_c} even characters checked"),
        ),
        Check::new(
            "parity S_d = 0 for d < 0",
            failures.iter().all(|&d| d > 0),
            format!("{zero_s} odd characters checked"),
        ),
    ])
}

/// Closed-form inner sum against the double loop, squarefree `m, n <= 30`,
/// `kmax <= 50`.
pub fn innersum_suite() -> Vec<Check> {
    let sf: Vec<u64> = (1..=30).filter(|&n| is_squarefree(n)).collect();
    let mut cases = 0usize;
    let mut mismatches = Vec::new();
    for &m in &sf {
        for &n in &sf {
            for kmax in 1..=50u64 {
                cases += 1;
                let mut brute = 0u128;
                for k in 1..=kmax {
                    for l in 1..=kmax {
                        if m * k == n * l {
                            brute += (k * l) as u128;
                        }
                    }
                }
                if brute != inner_sum_pairs(m, n, kmax) {
                    mismatches.push((m, n, kmax));
                }
            }
        }
    }
    vec![Check::new(
        "innersum grid m,n <= 30, kmax <= 50",
        mismatches.is_empty(),
        format!("{cases} cases, {} mismatches {:?}", mismatches.len(), mismatches.iter().take(3).collect::<Vec<_>>()),
    )]
}

/// Plain-text pass/fail table.
pub fn render_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in checks {
        out.push_str(&format!(
            "{:<width$}  {}  {}\n",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail
        ));
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    out.push_str(&format!("{passed}/{} passed\n", checks.len()));
    out
}
