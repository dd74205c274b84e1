//! Output formats: the scan CSV and the JSON run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::config::RunConfig;
use crate::numeric::format_significant;
use crate::resonance::{BoundParams, Regime, ResonanceMoments, ScanRecord, ScanReport};
use crate::resonator::GcdSumReport;

pub const CSV_HEADER: &str = "d,x,sum,normalized,r_weight";
pub const CSV_DIGITS: usize = 12;

fn num(v: f64) -> String {
    format_significant(v, CSV_DIGITS)
}

/// Scan records as CSV, one row per record in the given order. An absent
/// resonator weight leaves the last field empty.
pub fn scan_csv(records: &[ScanRecord]) -> String {
    let mut out = String::with_capacity(32 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let weight = r.resonator_weight.map(num).unwrap_or_default();
        writeln!(out, "{},{},{},{},{}", r.d.value(), num(r.x), r.sum_value, num(r.normalized), weight)
            .expect("write to string");
    }
    out
}

/// Records in the JSON layout used by `--format json`.
#[derive(Debug, Serialize)]
pub struct JsonRecord {
    pub d: i64,
    pub x: f64,
    pub sum: i64,
    pub normalized: f64,
    pub r_weight: Option<f64>,
}

impl From<&ScanRecord> for JsonRecord {
    fn from(r: &ScanRecord) -> Self {
        JsonRecord {
            d: r.d.value(),
            x: r.x,
            sum: r.sum_value,
            normalized: r.normalized,
            r_weight: r.resonator_weight,
        }
    }
}

/// First moment of a resonator set as reported by a scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstMoment {
    pub m1_emp: f64,
    pub m1_main: f64,
}

/// Everything about a run that is not the records themselves.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    /// The effective configuration, defaults resolved.
    pub config: RunConfig,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moments: Option<ResonanceMoments>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_moment: Option<FirstMoment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gcd_sum: Option<GcdSumReport>,
    pub bound: Option<BoundParams>,
    pub regime_flag: Option<Regime>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(config: RunConfig) -> Self {
        Manifest {
            tool: "resonance",
            version: env!("CARGO_PKG_VERSION"),
            config,
            timings: BTreeMap::new(),
            moments: None,
            first_moment: None,
            scan: None,
            gcd_sum: None,
            bound: None,
            regime_flag: None,
            outputs: Vec::new(),
        }
    }

    pub fn set_bound(&mut self, bound: Option<BoundParams>) {
        self.bound = bound;
        self.regime_flag = bound.map(|b| b.regime_flag);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}
