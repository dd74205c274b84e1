use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `log₃(√X/x) >= 1`: the bound is evaluated as written.
    Asymptotic,
    /// `log₃(√X/x) < 1`: the triple logarithm was floored at 1.
    Clamped,
}

/// The large-value bound shape `√(X/x)·exp(√(L·log₃ / log₂))` with
/// `L = log(√X/x)` and the `1 + o(1)` factor dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundParams {
    #[serde(rename = "X")]
    pub big_x: u64,
    pub x: f64,
    #[serde(rename = "L")]
    pub log_ratio: f64,
    pub log2: f64,
    /// Raw `log₃(√X/x)`, before the clamp (may be negative).
    pub log3: f64,
    pub log3_used: f64,
    pub bound: f64,
    pub regime_flag: Regime,
}

pub fn predicted_bound(big_x: u64, x: f64) -> Result<BoundParams> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("x must be positive, got {x}")));
    }
    let ratio = (big_x as f64).sqrt() / x;
    if !(ratio > std::f64::consts::E) {
        return Err(Error::Domain(format!(
            "sqrt(X)/x = {ratio} must exceed e for the bound to be defined"
        )));
    }
    let l = ratio.ln();
    let log2 = l.ln();
    let log3 = log2.ln();
    let (log3_used, regime_flag) = if log3 >= 1.0 {
        (log3, Regime::Asymptotic)
    } else {
        (1.0, Regime::Clamped)
    };
    let bound = (big_x as f64 / x).sqrt() * (l * log3_used / log2).sqrt().exp();
    Ok(BoundParams {
        big_x,
        x,
        log_ratio: l,
        log2,
        log3,
        log3_used,
        bound,
        regime_flag,
    })
}

/// Resonator size `⌊X^{1/2-δ}/x⌋`; zero means the formula gives no set at
/// this scale and an explicit size must be supplied.
pub fn resonator_budget(big_x: u64, x: f64, delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Domain(format!("delta must lie in (0, 1/2), got {delta}")));
    }
    if !(x > 0.0) {
        return Err(Error::Domain(format!("x must be positive, got {x}")));
    }
    Ok(((big_x as f64).powf(0.5 - delta) / x).floor() as usize)
}
