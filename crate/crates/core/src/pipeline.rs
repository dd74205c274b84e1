//! Run orchestration: turns a [`RunConfig`] into output artifacts. Nothing
//! here touches the filesystem except reading a resonator file named in the
//! configuration; writing is left to the caller.

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::Serialize;

use crate::charsum::{default_z, partial_sum, polya_approx, PolyaApprox};
use crate::config::{Command, ConstructionMethod, OutputFormat, RunConfig};
use crate::discriminant::{DiscriminantRange, FundamentalDiscriminant, SignFilter};
use crate::error::Result;
use crate::report::{scan_csv, FirstMoment, JsonRecord, Manifest};
use crate::resonance::{predicted_bound, resonator_values, scan_extremal, ResonanceField, ScanReport};
use crate::resonator::{build_greedy_set, build_structured_set, gcd_sum, greedy_candidates, ResonatorSet};
use crate::verify::{render_table, run_suite, Check};

/// Candidates offered to the greedy construction, per requested element.
const GREEDY_CANDIDATES_PER_ELEMENT: usize = 8;

/// Artifacts of one run.
#[derive(Debug)]
pub struct RunOutput {
    /// Primary output: CSV/JSON records, a resonator file, or a text report.
    pub primary: String,
    pub manifest: Manifest,
    /// Human-readable summary for the terminal when `primary` goes to a file.
    pub summary: String,
    pub failed_checks: usize,
}

/// Where the manifest belongs for a given primary output path.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

pub fn execute(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let mut out = match &cfg.command {
        Command::Charsum { d, len } => charsum(cfg, *d, *len)?,
        Command::Scan { strategy, resonator, sign } => {
            let set = resonator.as_deref().map(ResonatorSet::read).transpose()?;
            scan(cfg, *strategy, set.as_ref(), *sign)?
        }
        Command::Resonator { method } => resonator(cfg, *method)?,
        Command::Moments { resonator } => {
            let set = resonator.as_deref().map(ResonatorSet::read).transpose()?;
            moments(cfg, set)?
        }
        Command::Verify { suite } => {
            let checks = run_suite(*suite, cfg.seed)?;
            verify_output(cfg, &checks)
        }
    };
    out.manifest.timings.insert("total".into(), start.elapsed().as_secs_f64());
    Ok(out)
}

#[derive(Serialize)]
struct CharsumResult {
    d: i64,
    len: u64,
    sum: i64,
    polya: Option<PolyaApprox>,
}

fn charsum(cfg: &RunConfig, d: i64, len: Option<u64>) -> Result<RunOutput> {
    let d = FundamentalDiscriminant::new(d)?;
    let q = d.modulus();
    let len = len.unwrap_or((q as f64 / cfg.x).floor() as u64);
    let sum = partial_sum(d, len as f64);
    let r = len % q;
    // The expansion is periodic in the cut-off; a cut-off at a multiple of
    // |d| has the exact value 0 and no approximation to report.
    let polya = if r == 0 {
        None
    } else {
        let alpha = r as f64 / q as f64;
        Some(polya_approx(d, alpha, default_z(q as f64, 1.0 / alpha), cfg.kappa)?)
    };
    let result = CharsumResult { d: d.value(), len, sum, polya };
    let mut text = format!("d={} len={} sum={}", result.d, len, sum);
    match &result.polya {
        Some(p) => text.push_str(&format!(
            " polya={:.6} err_bound={:.6} z={:.1}",
            p.approx, p.err_bound, p.z
        )),
        None => text.push_str(" polya=exact(len is a multiple of |d|)"),
    }
    text.push('\n');
    let primary = match cfg.format {
        OutputFormat::Csv => text.clone(),
        OutputFormat::Json => to_json(&result),
    };
    Ok(RunOutput {
        primary,
        manifest: Manifest::new(cfg.clone()),
        summary: text,
        failed_checks: 0,
    })
}

fn scan(cfg: &RunConfig, strategy: crate::resonance::ScanStrategy, set: Option<&ResonatorSet>, sign: SignFilter) -> Result<RunOutput> {
    let range = DiscriminantRange::new(cfg.big_x, sign)?;
    let t = Instant::now();
    let report = scan_extremal(&range, cfg.x, strategy, set)?;
    let scan_secs = t.elapsed().as_secs_f64();
    let mut manifest = Manifest::new(cfg.clone());
    manifest.timings.insert("scan".into(), scan_secs);
    manifest.set_bound(report.bound);
    if let Some(set) = set {
        let discs = crate::discriminant::enumerate_fundamental(&range);
        let m1: u128 = resonator_values(set, &discs).iter().map(|&r| (r * r) as u128).sum();
        let lower = crate::discriminant::count_abs_range(1, range.x(), sign);
        let euler: f64 = set
            .elements()
            .iter()
            .map(|&m| crate::arith::euler_factor_product(m).expect("validated element"))
            .sum();
        let rescale = discs.len() as f64 / lower.max(1) as f64;
        manifest.first_moment = Some(FirstMoment {
            m1_emp: m1 as f64,
            m1_main: range.x() as f64 / crate::numeric::ZETA2 * euler * rescale,
        });
    }
    let summary = scan_summary(&report);
    let primary = match cfg.format {
        OutputFormat::Csv => scan_csv(&report.records),
        OutputFormat::Json => {
            let records: Vec<JsonRecord> = report.records.iter().map(JsonRecord::from).collect();
            to_json(&serde_json::json!({ "manifest": &manifest, "records": records }))
        }
    };
    manifest.scan = Some(report);
    Ok(RunOutput {
        primary,
        manifest,
        summary,
        failed_checks: 0,
    })
}

fn scan_summary(report: &ScanReport) -> String {
    let mut s = format!(
        "scanned {} of {} discriminants; max normalized {:.6}, median {:.6}",
        report.records.len(),
        report.population,
        report.max_normalized(),
        report.median_normalized()
    );
    if let (Some(top), Some(b)) = (report.records.first(), report.bound) {
        s.push_str(&format!(
            "; top d={} |T|={} vs bound {:.3} ({:?})",
            top.d,
            top.sum_value.abs(),
            b.bound,
            b.regime_flag
        ));
    }
    s.push('\n');
    s
}

/// The resonator set a configuration asks for.
pub fn construct_set(cfg: &RunConfig, method: ConstructionMethod) -> Result<ResonatorSet> {
    let n = cfg.effective_n()?;
    let y = cfg.effective_y(n)?;
    match method {
        ConstructionMethod::Structured => build_structured_set(n, y),
        ConstructionMethod::Greedy => {
            let cands = greedy_candidates(n, y, n * GREEDY_CANDIDATES_PER_ELEMENT, cfg.seed)?;
            build_greedy_set(n, &cands)
        }
    }
}

fn resonator(cfg: &RunConfig, method: ConstructionMethod) -> Result<RunOutput> {
    let mut resolved = cfg.clone();
    let n = cfg.effective_n()?;
    resolved.n = Some(n);
    resolved.y = Some(cfg.effective_y(n)?);
    let t = Instant::now();
    let set = construct_set(&resolved, method)?;
    let build_secs = t.elapsed().as_secs_f64();
    let report = gcd_sum(set.elements());
    let mut manifest = Manifest::new(resolved);
    manifest.timings.insert("construction".into(), build_secs);
    manifest.gcd_sum = Some(report);
    let summary = format!(
        "N={} y={} range=[{}, {}] gcd_sum={:.6} gcd_sum/N={:.6}\n",
        set.len(),
        set.friability(),
        set.min(),
        set.max(),
        report.total,
        report.total / set.len() as f64
    );
    Ok(RunOutput {
        primary: set.to_text(),
        manifest,
        summary,
        failed_checks: 0,
    })
}

fn moments(cfg: &RunConfig, set: Option<ResonatorSet>) -> Result<RunOutput> {
    let mut resolved = cfg.clone();
    let set = match set {
        Some(s) => s,
        None => {
            let n = cfg.effective_n()?;
            resolved.n = Some(n);
            resolved.y = Some(cfg.effective_y(n)?);
            construct_set(&resolved, ConstructionMethod::Structured)?
        }
    };
    let range = DiscriminantRange::new(cfg.big_x, SignFilter::Both)?;
    let t = Instant::now();
    let field = ResonanceField::new(&range, cfg.x, cfg.z_budget)?;
    let field_secs = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let m = field.moments(&set)?;
    let moment_secs = t.elapsed().as_secs_f64();
    let mut manifest = Manifest::new(resolved);
    manifest.timings.insert("characters".into(), field_secs);
    manifest.timings.insert("moments".into(), moment_secs);
    manifest.moments = Some(m);
    manifest.set_bound(predicted_bound(cfg.big_x, cfg.x).ok());
    let summary = format!(
        "M1={} (main {:.3}) M2={:.6} M2/M1={:.6} max C^2={:.6} at d={}\n",
        m.m1_emp, m.m1_main, m.m2_emp, m.quotient, m.max_c_squared, m.argmax_d
    );
    Ok(RunOutput {
        primary: manifest.to_json() + "\n",
        manifest,
        summary,
        failed_checks: 0,
    })
}

fn verify_output(cfg: &RunConfig, checks: &[Check]) -> RunOutput {
    let failed = checks.iter().filter(|c| !c.passed).count();
    let table = render_table(checks);
    let primary = match cfg.format {
        OutputFormat::Csv => table.clone(),
        OutputFormat::Json => to_json(&checks),
    };
    info!("{} checks, {failed} failed", checks.len());
    RunOutput {
        primary,
        manifest: Manifest::new(cfg.clone()),
        summary: table,
        failed_checks: failed,
    }
}

fn to_json<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}
