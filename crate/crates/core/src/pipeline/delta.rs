//! Relative-change metrics of a method against its vanilla baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The three quantities a method trades against each other.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Channels {
    pub accuracy: f64,
    pub bias: f64,
    /// Mean attack AUC over the configured distances.
    pub risk: f64,
}

/// `Δ_x = (Ω_x − w/o_x) / w/o_x` per channel and `Δ = Δ_bias·Δ_risk / |Δ_acc|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaMetrics {
    pub delta_acc: f64,
    pub delta_bias: f64,
    pub delta_risk: f64,
    /// `None` when `Δ_acc = 0`.
    pub delta: Option<f64>,
    pub acc_unchanged: bool,
}

fn relative(method: f64, baseline: f64, channel: &str) -> Result<f64> {
    if baseline == 0.0 || !baseline.is_finite() || !method.is_finite() {
        return Err(Error::Degenerate(format!(
            "relative change of {channel} undefined (baseline {baseline}, method {method})"
        )));
    }
    Ok((method - baseline) / baseline)
}

pub fn delta_metric(vanilla: &Channels, method: &Channels) -> Result<DeltaMetrics> {
    let delta_acc = relative(method.accuracy, vanilla.accuracy, "accuracy")?;
    let delta_bias = relative(method.bias, vanilla.bias, "bias")?;
    let delta_risk = relative(method.risk, vanilla.risk, "risk")?;
    Ok(from_relative(delta_acc, delta_bias, delta_risk))
}

/// Combines already-relative channel changes.
pub fn from_relative(delta_acc: f64, delta_bias: f64, delta_risk: f64) -> DeltaMetrics {
    let acc_unchanged = delta_acc == 0.0;
    DeltaMetrics {
        delta_acc,
        delta_bias,
        delta_risk,
        delta: (!acc_unchanged).then(|| delta_bias * delta_risk / delta_acc.abs()),
        acc_unchanged,
    }
}
