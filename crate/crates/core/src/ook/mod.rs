//! NRZ on-off keying modem and the packetization layer used by the file
//! transfer path. Unipolar by default (optical intensity link), bipolar
//! retained for electrical NRZ.

mod packet;

pub use packet::{
    crc32, depacketize, packetize, parse_packets, Packet, PacketError, MAX_PAYLOAD, PACKET_MAGIC,
};

use crate::iq::IqFrame;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OokError {
    #[error("invalid OOK config: {0}")]
    Config(String),
    #[error("empty bit input")]
    EmptyBits,
    #[error("symbol framing error")]
    SymbolFraming,
    #[error("unresolvable threshold")]
    UnresolvableThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OokMode {
    /// 1 -> high_level, 0 -> 0.
    #[default]
    Unipolar,
    /// 1 -> +high_level, 0 -> -high_level.
    Bipolar,
}

fn default_sps() -> usize {
    4
}

fn default_high() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OokConfig {
    /// Samples per symbol.
    #[serde(default = "default_sps")]
    pub sps: usize,
    #[serde(default = "default_high")]
    pub high_level: f64,
    #[serde(default)]
    pub mode: OokMode,
}

impl Default for OokConfig {
    fn default() -> Self {
        Self {
            sps: default_sps(),
            high_level: default_high(),
            mode: OokMode::Unipolar,
        }
    }
}

impl OokConfig {
    pub fn validate(&self) -> Result<(), OokError> {
        if self.sps == 0 {
            return Err(OokError::Config("sps must be >= 1".into()));
        }
        if !(self.high_level > 0.0) || !self.high_level.is_finite() {
            return Err(OokError::Config("high_level must be positive".into()));
        }
        Ok(())
    }
}

/// Hold each bit for sps samples at the mode's levels; Q stays zero.
pub fn ook_modulate(bits: &[u8], config: &OokConfig) -> Result<IqFrame, OokError> {
    config.validate()?;
    if bits.is_empty() {
        return Err(OokError::EmptyBits);
    }
    let (one, zero) = match config.mode {
        OokMode::Unipolar => (config.high_level, 0.0),
        OokMode::Bipolar => (config.high_level, -config.high_level),
    };
    let mut samples = Vec::with_capacity(bits.len() * config.sps);
    for &b in bits {
        let level = if b & 1 == 1 { one } else { zero };
        samples.extend(std::iter::repeat_n(Complex64::new(level, 0.0), config.sps));
    }
    Ok(IqFrame::new(samples, config.sps as f64))
}

/// Average each symbol period and slice against the midpoint of the min and
/// max symbol averages. Ties go to 0.
pub fn ook_demodulate(frame: &IqFrame, config: &OokConfig) -> Result<Vec<u8>, OokError> {
    config.validate()?;
    if frame.is_empty() || !frame.len().is_multiple_of(config.sps) {
        return Err(OokError::SymbolFraming);
    }
    let averages: Vec<f64> = frame
        .samples
        .chunks_exact(config.sps)
        .map(|sym| sym.iter().map(|s| s.re).sum::<f64>() / config.sps as f64)
        .collect();
    let lo = averages.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = averages.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Err(OokError::UnresolvableThreshold);
    }
    let threshold = (lo + hi) / 2.0;
    Ok(averages.iter().map(|&a| (a > threshold) as u8).collect())
}
