//! Frame and header codec: the full transmit chain
//! CRC append -> whiten -> nibbles -> Hamming -> interleave -> Gray demap ->
//! chirps, and its inverse after preamble detection.
//!
//! The explicit header carries 20 content bits (payload length byte, a
//! nibble holding the coding rate and CRC flag, and the two checksum
//! nibbles), always at CR=4 in reduced-rate mode: SF-2 codewords of 8 bits.
//! Payload blocks use the configured CR, switching to reduced rate at
//! SF 11 and 12.

use super::chirp::CssModem;
use super::crc::{crc16, crc8_header, Crc16Variant};
use super::gray::{gray_demap, gray_map};
use super::hamming::{hamming_decode, hamming_encode};
use super::interleaver::{deinterleave, interleave, CodewordMatrix};
use super::sync::detect_preamble;
use super::whitening::whiten_unchecked;
use super::{LoRaConfig, LoraError};
use crate::iq::IqFrame;
use serde::{Deserialize, Serialize};

/// The header always occupies 4+4 symbols (CR=4).
pub const HEADER_SYMBOLS: usize = 8;

/// Content of the explicit PHY header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeaderFields {
    pub payload_len: u8,
    pub cr: u8,
    pub crc_enabled: bool,
}

/// Decode outcome. `payload` is best-effort; `status` says how far the
/// receiver got. Decoding never aborts on signal conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub payload: Vec<u8>,
    pub status: DecodeStatus,
}

/// Machine-readable receive status, serialized as the CLI's JSON record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeStatus {
    pub found: bool,
    pub header_ok: bool,
    pub crc_ok: bool,
    pub corrected_bits: usize,
    pub offset_samples: usize,
}

impl DecodeStatus {
    fn missed() -> Self {
        Self {
            found: false,
            header_ok: false,
            crc_ok: false,
            corrected_bits: 0,
            offset_samples: 0,
        }
    }

    pub fn ok(&self) -> bool {
        self.found && self.header_ok && self.crc_ok
    }
}

/// Codewords (with padding) making up the explicit header.
pub fn header_nibble_count(sf: u8) -> usize {
    sf as usize - 2
}

fn header_checksum(fields: &HeaderFields) -> u8 {
    crc8_header(fields.payload_len, fields.cr, fields.crc_enabled)
}

/// Build the header codeword matrix: 20 content bits packed left-to-right,
/// zero-padded to (SF-2) codewords, Hamming CR=4 encoded.
pub fn encode_header(
    fields: &HeaderFields,
    config: &LoRaConfig,
) -> Result<CodewordMatrix, LoraError> {
    config.validate()?;
    if config.sf < 7 || !config.explicit_header {
        return Err(LoraError::Config(
            "explicit header requires sf >= 7 and explicit_header".into(),
        ));
    }
    if fields.cr > 4 {
        return Err(LoraError::CodingRate(fields.cr));
    }
    let checksum = header_checksum(fields);
    let mut nibbles = vec![
        fields.payload_len >> 4,
        fields.payload_len & 0x0F,
        (fields.cr << 1) | fields.crc_enabled as u8,
        checksum >> 4,
        checksum & 0x0F,
    ];
    nibbles.resize(header_nibble_count(config.sf), 0);
    let codewords = nibbles
        .into_iter()
        .map(|n| hamming_encode(n, 4))
        .collect::<Result<Vec<_>, _>>()?;
    CodewordMatrix::new(codewords, config.sf as usize - 2, 4)
}

/// Header matrix -> the 8 chirp indices that carry it.
fn header_bins(fields: &HeaderFields, config: &LoRaConfig) -> Result<Vec<u16>, LoraError> {
    let matrix = encode_header(fields, config)?;
    interleave(&matrix)?
        .into_iter()
        .map(|w| gray_demap(w, config.sf, true))
        .collect()
}

/// Inverse of the header chain from demodulated chirp indices. Returns the
/// fields and the number of repaired bits; checksum mismatch or an
/// uncorrectable codeword is reported as `HeaderCorrupt`.
pub fn decode_header(
    bins: &[u16],
    config: &LoRaConfig,
) -> Result<(HeaderFields, usize), LoraError> {
    if config.sf < 7 {
        return Err(LoraError::Config("header decode requires sf >= 7".into()));
    }
    if bins.len() != HEADER_SYMBOLS {
        return Err(LoraError::SymbolFrameLength {
            expected: HEADER_SYMBOLS,
            got: bins.len(),
        });
    }
    let words = bins
        .iter()
        .map(|&b| gray_map(b, config.sf, true))
        .collect::<Result<Vec<_>, _>>()?;
    let matrix = deinterleave(&words, config.sf as usize - 2, 4)?;
    let mut corrected = 0usize;
    let mut nibbles = Vec::with_capacity(matrix.codewords.len());
    for &cw in &matrix.codewords {
        let d = hamming_decode(cw, 4)?;
        if d.failed {
            return Err(LoraError::HeaderCorrupt);
        }
        corrected += d.corrected as usize;
        nibbles.push(d.nibble);
    }
    let fields = HeaderFields {
        payload_len: (nibbles[0] << 4) | nibbles[1],
        cr: (nibbles[2] >> 1) & 0x7,
        crc_enabled: nibbles[2] & 1 != 0,
    };
    let checksum = (nibbles[3] << 4) | nibbles[4];
    if checksum != header_checksum(&fields) || fields.cr > 4 {
        return Err(LoraError::HeaderCorrupt);
    }
    Ok((fields, corrected))
}

/// Number of chirp symbols carrying a payload of `payload_len` bytes.
pub fn payload_symbol_count(payload_len: usize, crc: bool, cr: u8, sf_eff: usize) -> usize {
    let nibbles = 2 * (payload_len + if crc { 2 } else { 0 });
    let blocks = nibbles.div_ceil(sf_eff);
    blocks * (4 + cr as usize)
}

/// Payload bytes -> chirp indices through the whole codec chain.
fn payload_bins(payload: &[u8], config: &LoRaConfig) -> Result<Vec<u16>, LoraError> {
    if payload.is_empty() || payload.len() > 255 {
        return Err(LoraError::PayloadLength);
    }
    let mut bytes = payload.to_vec();
    if config.payload_crc {
        let crc = crc16(payload, Crc16Variant::Ccitt);
        bytes.extend_from_slice(&crc.to_be_bytes());
    }
    let whitened = whiten_unchecked(&bytes);
    let mut nibbles: Vec<u8> = whitened
        .iter()
        .flat_map(|&b| [b >> 4, b & 0x0F])
        .collect();
    let sf_eff = config.payload_sf_eff();
    let reduced = config.payload_reduced_rate();
    nibbles.resize(nibbles.len().div_ceil(sf_eff) * sf_eff, 0);
    let mut bins = Vec::with_capacity(payload_symbol_count(
        payload.len(),
        config.payload_crc,
        config.cr,
        sf_eff,
    ));
    for block in nibbles.chunks_exact(sf_eff) {
        let codewords = block
            .iter()
            .map(|&n| hamming_encode(n, config.cr))
            .collect::<Result<Vec<_>, _>>()?;
        let matrix = CodewordMatrix::new(codewords, sf_eff, config.cr)?;
        for word in interleave(&matrix)? {
            bins.push(gray_demap(word, config.sf, reduced)?);
        }
    }
    Ok(bins)
}

/// The frame's chirp-index sequence (header, when explicit, then payload).
pub fn frame_symbols(payload: &[u8], config: &LoRaConfig) -> Result<Vec<u16>, LoraError> {
    config.validate()?;
    let mut bins = Vec::new();
    if config.explicit_header {
        let fields = HeaderFields {
            payload_len: payload.len() as u8,
            cr: config.cr,
            crc_enabled: config.payload_crc,
        };
        bins.extend(header_bins(&fields, config)?);
    }
    bins.extend(payload_bins(payload, config)?);
    Ok(bins)
}

/// Inverse of the payload chain from demodulated chirp indices.
///
/// Returns (bytes, crc_ok, corrected_bits). `expected_len` is the payload
/// byte count when known (explicit header), or `None` to infer it from the
/// block count (implicit mode; with CRC enabled the trailing pad ambiguity
/// is resolved by scanning for a matching checksum).
pub fn decode_payload_symbols(
    bins: &[u16],
    expected_len: Option<usize>,
    crc: bool,
    cr: u8,
    config: &LoRaConfig,
) -> Result<(Vec<u8>, bool, usize), LoraError> {
    let sf_eff = config.payload_sf_eff();
    let reduced = config.payload_reduced_rate();
    let symbols_per_block = 4 + cr as usize;
    let mut corrected = 0usize;
    let mut hamming_failed = false;
    let mut nibbles = Vec::with_capacity(bins.len() / symbols_per_block * sf_eff);
    for block in bins.chunks_exact(symbols_per_block) {
        let words = block
            .iter()
            .map(|&b| gray_map(b, config.sf, reduced))
            .collect::<Result<Vec<_>, _>>()?;
        let matrix = deinterleave(&words, sf_eff, cr)?;
        for &cw in &matrix.codewords {
            let d = hamming_decode(cw, cr)?;
            corrected += d.corrected as usize;
            hamming_failed |= d.failed;
            nibbles.push(d.nibble);
        }
    }
    let total_bytes = nibbles.len() / 2;
    let expected_bytes = expected_len.map(|len| len + if crc { 2 } else { 0 });
    let take = expected_bytes.unwrap_or(total_bytes).min(total_bytes);
    let bytes: Vec<u8> = nibbles
        .chunks_exact(2)
        .take(take)
        .map(|p| (p[0] << 4) | p[1])
        .collect();
    let bytes = whiten_unchecked(&bytes);

    if !crc {
        return Ok((bytes, !hamming_failed, corrected));
    }
    match expected_len {
        Some(len) => {
            if bytes.len() < len + 2 {
                return Ok((bytes, false, corrected));
            }
            let stored = u16::from_be_bytes([bytes[len], bytes[len + 1]]);
            let crc_ok =
                !hamming_failed && stored == crc16(&bytes[..len], Crc16Variant::Ccitt);
            Ok((bytes[..len].to_vec(), crc_ok, corrected))
        }
        None => {
            // Up to sf_eff-1 pad nibbles may have inflated the byte count.
            let pad_bytes = sf_eff / 2 + 1;
            let shortest = bytes.len().saturating_sub(2 + pad_bytes).max(1);
            for len in (shortest..=bytes.len().saturating_sub(2)).rev() {
                let stored = u16::from_be_bytes([bytes[len], bytes[len + 1]]);
                if stored == crc16(&bytes[..len], Crc16Variant::Ccitt) {
                    return Ok((bytes[..len].to_vec(), !hamming_failed, corrected));
                }
            }
            let keep = bytes.len().saturating_sub(2);
            Ok((bytes[..keep].to_vec(), false, corrected))
        }
    }
}

/// Modulator/demodulator for whole frames.
pub struct FrameCodec {
    modem: CssModem,
}

impl FrameCodec {
    pub fn new(config: LoRaConfig) -> Result<Self, LoraError> {
        Ok(Self {
            modem: CssModem::new(config)?,
        })
    }

    pub fn config(&self) -> &LoRaConfig {
        self.modem.config()
    }

    pub fn modem(&self) -> &CssModem {
        &self.modem
    }

    /// Preamble plus modulated header/payload symbols.
    pub fn encode(&self, payload: &[u8]) -> Result<IqFrame, LoraError> {
        let bins = frame_symbols(payload, self.config())?;
        let mut frame = self.modem.build_preamble();
        let body = self.modem.modulate_symbols(&bins)?;
        frame.samples.extend_from_slice(&body.samples);
        Ok(frame)
    }

    /// Synchronize, then invert the receive chain. Signal problems land in
    /// the returned status, never in an `Err`.
    pub fn decode(&self, frame: &IqFrame) -> Result<DecodeResult, LoraError> {
        let config = self.config();
        let detection = detect_preamble(&self.modem, &frame.samples);
        if !detection.found {
            return Ok(DecodeResult {
                payload: Vec::new(),
                status: DecodeStatus::missed(),
            });
        }
        let mut status = DecodeStatus {
            found: true,
            header_ok: false,
            crc_ok: false,
            corrected_bits: 0,
            offset_samples: detection.offset_samples,
        };
        let n = self.modem.samples_per_symbol();
        let mut pos = detection.offset_samples + config.preamble_len_samples();

        let fields = if config.explicit_header {
            let Some(bins) = self.demod_run(frame, pos, HEADER_SYMBOLS) else {
                return Ok(DecodeResult {
                    payload: Vec::new(),
                    status,
                });
            };
            pos += HEADER_SYMBOLS * n;
            match decode_header(&bins, config) {
                Ok((fields, corrected)) => {
                    status.header_ok = true;
                    status.corrected_bits += corrected;
                    Some(fields)
                }
                Err(LoraError::HeaderCorrupt) => {
                    return Ok(DecodeResult {
                        payload: Vec::new(),
                        status,
                    })
                }
                Err(e) => return Err(e),
            }
        } else {
            status.header_ok = true;
            None
        };

        let (cr, crc, expected_len) = match fields {
            Some(f) => (f.cr, f.crc_enabled, Some(f.payload_len as usize)),
            None => (config.cr, config.payload_crc, None),
        };
        let n_symbols = match expected_len {
            Some(len) => payload_symbol_count(len, crc, cr, config.payload_sf_eff()),
            None => {
                let avail = frame.samples.len().saturating_sub(pos) / n;
                let per_block = 4 + cr as usize;
                (avail / per_block) * per_block
            }
        };
        let Some(bins) = self.demod_run(frame, pos, n_symbols) else {
            return Ok(DecodeResult {
                payload: Vec::new(),
                status,
            });
        };
        let (payload, crc_ok, corrected) =
            decode_payload_symbols(&bins, expected_len, crc, cr, config)?;
        status.crc_ok = crc_ok;
        status.corrected_bits += corrected;
        Ok(DecodeResult { payload, status })
    }

    fn demod_run(&self, frame: &IqFrame, pos: usize, count: usize) -> Option<Vec<u16>> {
        let n = self.modem.samples_per_symbol();
        if pos + count * n > frame.samples.len() {
            return None;
        }
        let mut bins = Vec::with_capacity(count);
        for k in 0..count {
            let window = &frame.samples[pos + k * n..pos + (k + 1) * n];
            bins.push(self.modem.demodulate(window).ok()?.0);
        }
        Some(bins)
    }
}

/// One-shot helpers around [`FrameCodec`].
pub fn encode_frame(payload: &[u8], config: &LoRaConfig) -> Result<IqFrame, LoraError> {
    FrameCodec::new(config.clone())?.encode(payload)
}

pub fn decode_frame(frame: &IqFrame, config: &LoRaConfig) -> Result<DecodeResult, LoraError> {
    FrameCodec::new(config.clone())?.decode(frame)
}
