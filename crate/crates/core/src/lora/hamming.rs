//! Forward error correction over nibbles, selected by the coding rate index:
//! CR=0 identity, CR=1 even parity (rate 4/5, detection only), CR=2 two
//! parity bits (detection only), CR=3 systematic (7,4) Hamming (corrects one
//! bit), CR=4 extended (8,4) Hamming (corrects one bit, detects two).
//!
//! Codeword layout (low 4+cr bits of the returned byte): data nibble in the
//! high 4 bits, parity in the low cr bits, the extended overall parity last.

use super::LoraError;

/// Decoder verdict for one codeword.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HammingDecode {
    pub nibble: u8,
    /// A single-bit error was repaired.
    pub corrected: bool,
    /// A detected but uncorrectable pattern (detection-only codes, or a
    /// double error under CR=4). The nibble is the received data bits.
    pub failed: bool,
}

/// Codeword width in bits for a coding rate index.
pub fn codeword_len(cr: u8) -> usize {
    4 + cr as usize
}

#[inline]
fn bit(v: u8, i: u8) -> u8 {
    (v >> i) & 1
}

/// Hamming (7,4) parity bits over data nibble d3..d0.
fn parity_747(n: u8) -> (u8, u8, u8) {
    let (d0, d1, d2, d3) = (bit(n, 0), bit(n, 1), bit(n, 2), bit(n, 3));
    (d0 ^ d1 ^ d3, d0 ^ d2 ^ d3, d1 ^ d2 ^ d3)
}

/// Encode a nibble at the given coding rate.
pub fn hamming_encode(nibble: u8, cr: u8) -> Result<u8, LoraError> {
    if cr > 4 {
        return Err(LoraError::CodingRate(cr));
    }
    let n = nibble & 0x0F;
    if nibble > 0x0F {
        return Err(LoraError::Config(format!("nibble out of range: {nibble}")));
    }
    Ok(match cr {
        0 => n,
        1 => {
            let p = bit(n, 0) ^ bit(n, 1) ^ bit(n, 2) ^ bit(n, 3);
            (n << 1) | p
        }
        2 => {
            let (p0, p1, _) = parity_747(n);
            (n << 2) | (p1 << 1) | p0
        }
        3 => {
            let (p0, p1, p2) = parity_747(n);
            (n << 3) | (p2 << 2) | (p1 << 1) | p0
        }
        4 => {
            let cw7 = hamming_encode(n, 3)?;
            let overall = (cw7.count_ones() & 1) as u8;
            (cw7 << 1) | overall
        }
        _ => unreachable!(),
    })
}

/// Decode a codeword at the given coding rate.
pub fn hamming_decode(codeword: u8, cr: u8) -> Result<HammingDecode, LoraError> {
    if cr > 4 {
        return Err(LoraError::CodingRate(cr));
    }
    if (codeword as u32) >> codeword_len(cr) != 0 {
        return Err(LoraError::Config(format!(
            "codeword wider than {} bits: {codeword:#x}",
            codeword_len(cr)
        )));
    }
    let clean = |nibble| HammingDecode {
        nibble,
        corrected: false,
        failed: false,
    };
    Ok(match cr {
        0 => clean(codeword),
        1 => {
            let n = codeword >> 1;
            let ok = codeword.count_ones().is_multiple_of(2);
            HammingDecode {
                nibble: n,
                corrected: false,
                failed: !ok,
            }
        }
        2 => {
            let n = codeword >> 2;
            let (p0, p1, _) = parity_747(n);
            let ok = p0 == bit(codeword, 0) && p1 == bit(codeword, 1);
            HammingDecode {
                nibble: n,
                corrected: false,
                failed: !ok,
            }
        }
        3 => {
            let (cw, syndrome) = syndrome_747(codeword);
            if syndrome == 0 {
                clean(cw >> 3)
            } else {
                let fixed = cw ^ (1 << syndrome_bit_747(syndrome));
                HammingDecode {
                    nibble: fixed >> 3,
                    corrected: true,
                    failed: false,
                }
            }
        }
        4 => {
            let overall_ok = codeword.count_ones().is_multiple_of(2);
            let cw7 = codeword >> 1;
            let (_, syndrome) = syndrome_747(cw7);
            match (overall_ok, syndrome) {
                (true, 0) => clean(cw7 >> 3),
                // Overall parity violated: exactly one bit is wrong and it
                // is repairable (possibly the overall parity bit itself).
                (false, 0) => HammingDecode {
                    nibble: cw7 >> 3,
                    corrected: true,
                    failed: false,
                },
                (false, s) => {
                    let fixed = cw7 ^ (1 << syndrome_bit_747(s));
                    HammingDecode {
                        nibble: fixed >> 3,
                        corrected: true,
                        failed: false,
                    }
                }
                // Parity consistent but syndrome nonzero: double error.
                (true, _) => HammingDecode {
                    nibble: cw7 >> 3,
                    corrected: false,
                    failed: true,
                },
            }
        }
        _ => unreachable!(),
    })
}

/// Syndrome (s2 s1 s0) of a 7-bit codeword.
fn syndrome_747(cw: u8) -> (u8, u8) {
    let (p0, p1, p2) = parity_747(cw >> 3);
    let s0 = p0 ^ bit(cw, 0);
    let s1 = p1 ^ bit(cw, 1);
    let s2 = p2 ^ bit(cw, 2);
    (cw, (s2 << 2) | (s1 << 1) | s0)
}

/// Map a nonzero (7,4) syndrome to the erroneous codeword bit index.
fn syndrome_bit_747(syndrome: u8) -> u8 {
    match syndrome {
        0b001 => 0, // p0
        0b010 => 1, // p1
        0b100 => 2, // p2
        0b011 => 3, // d0
        0b101 => 4, // d1
        0b110 => 5, // d2
        0b111 => 6, // d3
        _ => unreachable!("syndrome must be 3 bits and nonzero"),
    }
}
