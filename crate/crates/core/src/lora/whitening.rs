//! Payload whitening: XOR with the byte stream of an 8-bit LFSR
//! (x^8 + x^6 + x^5 + x^4 + 1, seed 0xFF, output bits taken MSB-first).
//!
//! The underlying m-sequence has period 255 bits, so the byte stream repeats
//! every 255 bytes. Whitening is its own inverse.

use super::LoraError;

/// Period of the whitening byte stream.
pub const WHITENING_PERIOD: usize = 255;

/// First `len` bytes of the whitening stream. The generator free-runs, so
/// byte `i` equals byte `i mod 255`.
pub fn whitening_sequence(len: usize) -> Vec<u8> {
    let mut state: u8 = 0xFF;
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let mut byte = 0u8;
        for _ in 0..8 {
            byte = (byte << 1) | (state >> 7);
            // taps at x^8, x^6, x^5, x^4 -> state bits 7, 5, 4, 3
            let fb = ((state >> 7) ^ (state >> 5) ^ (state >> 4) ^ (state >> 3)) & 1;
            state = (state << 1) | fb;
        }
        out.push(byte);
    }
    out
}

/// XOR the input with the whitening stream. Self-inverse. Inputs longer than
/// one stream period are rejected.
pub fn whiten(bytes: &[u8]) -> Result<Vec<u8>, LoraError> {
    if bytes.len() > WHITENING_PERIOD {
        return Err(LoraError::WhiteningPeriod);
    }
    Ok(whiten_unchecked(bytes))
}

/// Frame-codec path: payload plus trailing CRC may reach 257 bytes, where
/// the free-running sequence simply wraps.
pub(crate) fn whiten_unchecked(bytes: &[u8]) -> Vec<u8> {
    whitening_sequence(bytes.len())
        .iter()
        .zip(bytes)
        .map(|(w, b)| w ^ b)
        .collect()
}
