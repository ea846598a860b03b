//! Fundamental sample and bit types, int16 quantization, and the raw I/Q
//! file format shared by all modems.
//!
//! On disk an I/Q recording is `<name>.iq`: little-endian interleaved signed
//! 16-bit words `I0,Q0,I1,Q1,...`, with a JSON sidecar `<name>.iq.json`
//! carrying `{sample_rate_hz, full_scale, description}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;
use thiserror::Error;

/// Positive full-scale code; 1.0 maps to 32767 and the clamp floor is -32768.
pub const I16_SCALE: f64 = 32767.0;

#[derive(Debug, Error)]
pub enum IqError {
    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("truncated I/Q file")]
    TruncatedFile,
    #[error("ragged bit buffer")]
    RaggedBitBuffer,
    #[error("full scale must be positive and finite")]
    BadFullScale,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("sidecar parse error: {0}")]
    Sidecar(#[from] serde_json::Error),
}

/// A block of complex baseband samples with sample-rate metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct IqFrame {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
}

impl IqFrame {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Self {
        assert!(
            sample_rate_hz > 0.0,
            "sample rate must be positive, got {sample_rate_hz}"
        );
        Self {
            samples,
            sample_rate_hz,
        }
    }

    /// Frame of `len` zero samples.
    pub fn zeros(len: usize, sample_rate_hz: f64) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); len], sample_rate_hz)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean |x|^2 over the frame; 0.0 for an empty frame.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Largest |re| or |im| over the frame; 0.0 for an empty frame.
    pub fn peak(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.re.abs().max(s.im.abs()))
            .fold(0.0, f64::max)
    }
}

/// Sidecar metadata stored next to the raw sample file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IqSidecar {
    pub sample_rate_hz: f64,
    pub full_scale: f64,
    #[serde(default)]
    pub description: String,
}

impl Default for IqSidecar {
    fn default() -> Self {
        Self {
            sample_rate_hz: 1.0,
            full_scale: 1.0,
            description: String::new(),
        }
    }
}

/// Quantize to interleaved int16 words `I0,Q0,I1,Q1,...`.
///
/// Each component maps by round(x / full_scale * 32767) and saturates to
/// [-32768, 32767]. Non-finite samples are an error.
pub fn quantize_i16(frame: &IqFrame, full_scale: f64) -> Result<Vec<i16>, IqError> {
    if !(full_scale > 0.0) || !full_scale.is_finite() {
        return Err(IqError::BadFullScale);
    }
    let mut words = Vec::with_capacity(frame.len() * 2);
    for (i, s) in frame.samples.iter().enumerate() {
        if !s.re.is_finite() || !s.im.is_finite() {
            return Err(IqError::NonFiniteSample(i));
        }
        words.push(quantize_component(s.re, full_scale));
        words.push(quantize_component(s.im, full_scale));
    }
    Ok(words)
}

fn quantize_component(x: f64, full_scale: f64) -> i16 {
    let scaled = (x / full_scale * I16_SCALE).round();
    scaled.clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Inverse of [`quantize_i16`]: affine map word/32767 * full_scale.
///
/// The word count must be even (I/Q pairs).
pub fn dequantize_i16(
    words: &[i16],
    full_scale: f64,
    sample_rate_hz: f64,
) -> Result<IqFrame, IqError> {
    if !(full_scale > 0.0) || !full_scale.is_finite() {
        return Err(IqError::BadFullScale);
    }
    if !words.len().is_multiple_of(2) {
        return Err(IqError::TruncatedFile);
    }
    let samples = words
        .chunks_exact(2)
        .map(|iq| {
            Complex64::new(
                iq[0] as f64 / I16_SCALE * full_scale,
                iq[1] as f64 / I16_SCALE * full_scale,
            )
        })
        .collect();
    Ok(IqFrame::new(samples, sample_rate_hz))
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_os_string();
    os.push(".json");
    os.into()
}

/// Write the frame as raw little-endian int16 I/Q plus its JSON sidecar.
pub fn write_iq_file(frame: &IqFrame, path: &Path, full_scale: f64) -> Result<(), IqError> {
    let words = quantize_i16(frame, full_scale)?;
    let mut bytes = Vec::with_capacity(words.len() * 2);
    for w in &words {
        bytes.extend_from_slice(&w.to_le_bytes());
    }
    fs::write(path, &bytes)?;
    let sidecar = IqSidecar {
        sample_rate_hz: frame.sample_rate_hz,
        full_scale,
        description: String::new(),
    };
    fs::write(sidecar_path(path), serde_json::to_vec_pretty(&sidecar)?)?;
    Ok(())
}

/// Read a raw I/Q file and its sidecar back into a frame.
///
/// A missing sidecar is not an error: defaults (rate 1 Hz, full scale 1.0)
/// are applied with a warning.
pub fn read_iq_file(path: &Path) -> Result<IqFrame, IqError> {
    let bytes = fs::read(path)?;
    if bytes.len() % 2 != 0 {
        return Err(IqError::TruncatedFile);
    }
    let sidecar = match fs::read(sidecar_path(path)) {
        Ok(raw) => serde_json::from_slice::<IqSidecar>(&raw)?,
        Err(_) => {
            log::warn!(
                "missing sidecar for {}; assuming sample_rate_hz=1, full_scale=1",
                path.display()
            );
            IqSidecar::default()
        }
    };
    let words: Vec<i16> = bytes
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]))
        .collect();
    dequantize_i16(&words, sidecar.full_scale, sidecar.sample_rate_hz)
}

/// Bit ordering used when a byte is expanded into bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitOrder {
    /// Bit 7 first; the default everywhere in this crate.
    #[default]
    MsbFirst,
    LsbFirst,
}

/// An ordered run of bits (each 0 or 1) with its packing convention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitBuffer {
    pub bits: Vec<u8>,
    pub bit_order: BitOrder,
}

pub fn bytes_to_bits(bytes: &[u8], bit_order: BitOrder) -> BitBuffer {
    let mut bits = Vec::with_capacity(bytes.len() * 8);
    for &b in bytes {
        for k in 0..8 {
            let shift = match bit_order {
                BitOrder::MsbFirst => 7 - k,
                BitOrder::LsbFirst => k,
            };
            bits.push((b >> shift) & 1);
        }
    }
    BitBuffer { bits, bit_order }
}

/// Inverse of [`bytes_to_bits`]; the length must be a multiple of 8.
pub fn bits_to_bytes(buf: &BitBuffer) -> Result<Vec<u8>, IqError> {
    if !buf.bits.len().is_multiple_of(8) {
        return Err(IqError::RaggedBitBuffer);
    }
    Ok(buf
        .bits
        .chunks_exact(8)
        .map(|chunk| {
            chunk.iter().enumerate().fold(0u8, |acc, (k, &bit)| {
                let shift = match buf.bit_order {
                    BitOrder::MsbFirst => 7 - k,
                    BitOrder::LsbFirst => k,
                };
                acc | ((bit & 1) << shift)
            })
        })
        .collect())
}
