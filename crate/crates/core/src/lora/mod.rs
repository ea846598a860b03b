//! LoRa PHY transceiver: the payload/header codec chain (CRC, whitening,
//! Hamming, diagonal interleaving, Gray indexing), chirp spread spectrum
//! modulation, FFT-dechirp demodulation, and preamble synchronization.
//!
//! A frame is `n_pre` base upchirps, 2 more upchirps, 2.25 downchirps, an
//! optional explicit header (always CR=4, reduced rate), then payload
//! symbols. Bit-compatibility with commercial LoRa silicon is a non-goal;
//! every stage is pinned by the format document and enforced by round-trip
//! and error-dispersion tests.

mod chirp;
mod crc;
mod frame;
mod gray;
mod hamming;
mod interleaver;
mod sync;
mod whitening;

pub use chirp::CssModem;
pub use crc::{crc16, crc8_header, Crc16Variant};
pub use frame::{
    decode_frame, decode_payload_symbols, encode_frame, frame_symbols, payload_symbol_count,
    DecodeResult, DecodeStatus, FrameCodec,
};
pub use frame::{decode_header, encode_header, header_nibble_count, HeaderFields, HEADER_SYMBOLS};
pub use gray::{gray_map, gray_demap};
pub use hamming::{codeword_len, hamming_decode, hamming_encode, HammingDecode};
pub use interleaver::{deinterleave, interleave, CodewordMatrix};
pub use sync::{detect_preamble, PreambleDetection};
pub use whitening::{whiten, whitening_sequence, WHITENING_PERIOD};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoraError {
    #[error("invalid LoRa config: {0}")]
    Config(String),
    #[error("symbol out of range: {0}")]
    SymbolOutOfRange(u16),
    #[error("gray value out of range")]
    GrayRange,
    #[error("symbol frame length mismatch: expected {expected}, got {got}")]
    SymbolFrameLength { expected: usize, got: usize },
    #[error("payload exceeds whitening period")]
    WhiteningPeriod,
    #[error("interleaver shape error")]
    InterleaverShape,
    #[error("header corrupt")]
    HeaderCorrupt,
    #[error("payload length must be 1..=255 bytes")]
    PayloadLength,
    #[error("coding rate must be 0..=4, got {0}")]
    CodingRate(u8),
}

fn default_oversample() -> usize {
    1
}

fn default_n_pre() -> usize {
    8
}

fn default_sync_threshold() -> f64 {
    6.0
}

fn default_true() -> bool {
    true
}

/// Static transceiver parameters. `M = 2^sf` chirp positions are derived,
/// never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoRaConfig {
    /// Spreading factor, 6..=12.
    pub sf: u8,
    /// Bandwidth B in Hz.
    pub bw_hz: f64,
    /// Coding rate index, 0..=4 (rate 4/(4+cr)).
    pub cr: u8,
    /// Preamble upchirp count before the 2+2.25 delimiter symbols.
    #[serde(default = "default_n_pre")]
    pub n_pre: usize,
    /// Transmit an explicit header (requires sf >= 7).
    #[serde(default = "default_true")]
    pub explicit_header: bool,
    /// Append and check a payload CRC-16.
    #[serde(default = "default_true")]
    pub payload_crc: bool,
    /// Samples per chip; the sample rate is bw_hz * oversample.
    #[serde(default = "default_oversample")]
    pub oversample: usize,
    /// Preamble acceptance: dechirp peak must reach this multiple of the
    /// median bin magnitude. Calibrated constant.
    #[serde(default = "default_sync_threshold")]
    pub sync_mag_threshold: f64,
}

impl LoRaConfig {
    pub fn new(sf: u8, bw_hz: f64, cr: u8) -> Result<Self, LoraError> {
        let config = Self {
            sf,
            bw_hz,
            cr,
            n_pre: default_n_pre(),
            explicit_header: sf >= 7,
            payload_crc: true,
            oversample: 1,
            sync_mag_threshold: default_sync_threshold(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), LoraError> {
        if !(6..=12).contains(&self.sf) {
            return Err(LoraError::Config(format!(
                "spreading factor must be 6..=12, got {}",
                self.sf
            )));
        }
        if self.cr > 4 {
            return Err(LoraError::CodingRate(self.cr));
        }
        if !(self.bw_hz > 0.0) || !self.bw_hz.is_finite() {
            return Err(LoraError::Config("bandwidth must be positive".into()));
        }
        if self.explicit_header && self.sf < 7 {
            return Err(LoraError::Config(
                "explicit header requires a spreading factor of at least 7".into(),
            ));
        }
        if self.oversample == 0 {
            return Err(LoraError::Config("oversample must be >= 1".into()));
        }
        if self.n_pre == 0 {
            return Err(LoraError::Config("n_pre must be >= 1".into()));
        }
        if !(self.sync_mag_threshold > 0.0) {
            return Err(LoraError::Config("sync threshold must be positive".into()));
        }
        Ok(())
    }

    /// Number of chirp positions M = 2^sf.
    pub fn chips(&self) -> usize {
        1usize << self.sf
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.chips() * self.oversample
    }

    /// T_s = M / B.
    pub fn symbol_duration_s(&self) -> f64 {
        self.chips() as f64 / self.bw_hz
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.bw_hz * self.oversample as f64
    }

    /// Payload symbols use reduced-rate mode at SF 11 and 12.
    pub fn payload_reduced_rate(&self) -> bool {
        self.sf >= 11
    }

    /// Interleaver rows for payload symbols: SF, or SF-2 in reduced rate.
    pub fn payload_sf_eff(&self) -> usize {
        if self.payload_reduced_rate() {
            self.sf as usize - 2
        } else {
            self.sf as usize
        }
    }

    /// Preamble length in symbols: n_pre upchirps + 2 upchirps + 2.25 downchirps.
    pub fn preamble_symbols(&self) -> f64 {
        self.n_pre as f64 + 4.25
    }

    pub fn preamble_len_samples(&self) -> usize {
        // samples_per_symbol is a multiple of 4 for every sf >= 6.
        self.n_pre * self.samples_per_symbol() + self.samples_per_symbol() * 17 / 4
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let c = LoRaConfig::new(7, 125_000.0, 1).unwrap();
        assert_eq!(c.chips(), 128);
        assert!((c.symbol_duration_s() - 128.0 / 125_000.0).abs() < 1e-15);
        assert_eq!(c.samples_per_symbol(), 128);
        assert_eq!(c.preamble_len_samples(), (12.25 * 128.0) as usize);
    }

    #[test]
    fn explicit_header_needs_sf7() {
        let mut c = LoRaConfig::new(7, 125_000.0, 0).unwrap();
        c.sf = 6;
        assert!(c.validate().is_err());
        c.explicit_header = false;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn sf_and_cr_bounds() {
        assert!(LoRaConfig::new(5, 125_000.0, 0).is_err());
        assert!(LoRaConfig::new(13, 125_000.0, 0).is_err());
        assert!(LoRaConfig::new(8, 125_000.0, 5).is_err());
        for sf in 6..=12 {
            for cr in 0..=4 {
                assert!(LoRaConfig::new(sf, 125_000.0, cr).is_ok());
            }
        }
    }

    #[test]
    fn reduced_rate_at_high_sf() {
        for sf in 7..=10 {
            let c = LoRaConfig::new(sf, 125_000.0, 4).unwrap();
            assert!(!c.payload_reduced_rate());
            assert_eq!(c.payload_sf_eff(), sf as usize);
        }
        for sf in 11..=12 {
            let c = LoRaConfig::new(sf, 125_000.0, 4).unwrap();
            assert!(c.payload_reduced_rate());
            assert_eq!(c.payload_sf_eff(), sf as usize - 2);
        }
    }

    #[test]
    fn config_json_round_trip() {
        let c = LoRaConfig::new(9, 250_000.0, 3).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        let back: LoRaConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        // Defaults fill in when omitted.
        let minimal: LoRaConfig =
            serde_json::from_str(r#"{"sf":7,"bw_hz":125000.0,"cr":1}"#).unwrap();
        assert_eq!(minimal.n_pre, 8);
        assert_eq!(minimal.oversample, 1);
        assert!(minimal.explicit_header);
    }
}
