//! Gray indexing between demodulated chirp positions and interleaver words.
//!
//! The channel-facing index is "reverse Gray": the transmitter applies the
//! Gray inverse ([`gray_demap`]) so that the receiver's plain Gray map
//! ([`gray_map`], g(x) = x ^ (x >> 1)) turns a +/-1 demodulation error into a
//! single bit error. In reduced-rate mode the transmitted index keeps its two
//! least-significant bits at zero (symbols advance in steps of 4) and the
//! receiver rounds to the nearest multiple of 4, absorbing +/-1 errors
//! entirely.

use super::LoraError;

#[inline]
fn gray(x: u16) -> u16 {
    x ^ (x >> 1)
}

#[inline]
fn gray_inverse(mut x: u16) -> u16 {
    let mut shift = 1;
    while shift < 16 {
        x ^= x >> shift;
        shift <<= 1;
    }
    x
}

/// Receive direction: demodulated chirp index -> interleaver word.
///
/// `sf` is the full spreading factor (the index lives in [0, 2^sf)); the
/// returned word has sf bits, or sf-2 bits in reduced-rate mode.
pub fn gray_map(symbol: u16, sf: u8, reduced_rate: bool) -> Result<u16, LoraError> {
    let m: u32 = 1 << sf;
    if (symbol as u32) >= m {
        return Err(LoraError::GrayRange);
    }
    if reduced_rate {
        let k = ((symbol as u32 + 2) >> 2) & ((m >> 2) - 1);
        Ok(gray(k as u16))
    } else {
        Ok(gray(symbol))
    }
}

/// Transmit direction: interleaver word -> chirp index to modulate.
pub fn gray_demap(word: u16, sf: u8, reduced_rate: bool) -> Result<u16, LoraError> {
    let width = if reduced_rate { sf - 2 } else { sf };
    if (word as u32) >> width != 0 {
        return Err(LoraError::GrayRange);
    }
    let index = gray_inverse(word);
    Ok(if reduced_rate { index << 2 } else { index })
}
