//! Pilot-based least-squares channel estimation and one-tap zero-forcing
//! equalization.

use super::pilot::PilotPlan;
use super::OfdmError;
use num_complex::Complex64;

/// Bins whose mean pilot magnitude falls below this fraction of the
/// strongest bin are flagged unusable and erased downstream.
const UNUSABLE_REL: f64 = 1e-9;

/// Per-subcarrier complex gains with a usability mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub gains: Vec<Complex64>,
    pub usable: Vec<bool>,
}

/// H[k] = mean over pilot blocks of rx[k] / pilot[k].
pub fn estimate_channel(
    pilot_rx: &[Vec<Complex64>],
    plan: &PilotPlan,
) -> Result<ChannelEstimate, OfdmError> {
    let p = plan.pilot_sequence.len();
    if pilot_rx.is_empty() || pilot_rx.iter().any(|b| b.len() != p) {
        return Err(OfdmError::EstimationFailed);
    }
    let blocks = pilot_rx.len() as f64;
    let mut gains = Vec::with_capacity(p);
    let mut mean_mags = Vec::with_capacity(p);
    for k in 0..p {
        let sum: Complex64 = pilot_rx.iter().map(|b| b[k] / plan.pilot_sequence[k]).sum();
        gains.push(sum / blocks);
        mean_mags.push(pilot_rx.iter().map(|b| b[k].norm()).sum::<f64>() / blocks);
    }
    let strongest = mean_mags.iter().copied().fold(0.0, f64::max);
    if strongest <= 0.0 {
        return Err(OfdmError::EstimationFailed);
    }
    let usable: Vec<bool> = mean_mags
        .iter()
        .map(|&m| m > UNUSABLE_REL * strongest)
        .collect();
    if usable.iter().all(|&u| !u) {
        return Err(OfdmError::EstimationFailed);
    }
    Ok(ChannelEstimate { gains, usable })
}

/// y[k]/H[k] per bin; unusable bins come back as (0, erased=true).
pub fn equalize(data_bins: &[Complex64], estimate: &ChannelEstimate) -> Vec<(Complex64, bool)> {
    data_bins
        .iter()
        .enumerate()
        .map(|(k, &y)| {
            if estimate.usable.get(k).copied().unwrap_or(false) {
                (y / estimate.gains[k], false)
            } else {
                (Complex64::new(0.0, 0.0), true)
            }
        })
        .collect()
}
