//! CRC-16 payload checksums (CCITT and IBM parameterizations) and the CRC-8
//! header checksum.
//!
//! Parameters are pinned in the format document:
//! CCITT = poly 0x1021, init 0xFFFF, no reflection, no final XOR;
//! IBM   = poly 0x8005, init 0x0000, reflected input and output;
//! header CRC-8 = poly 0x07, init 0x00, over the 12 content bits.

/// Payload CRC-16 family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crc16Variant {
    Ccitt,
    Ibm,
}

/// Bitwise long-division remainder under the variant's parameters.
pub fn crc16(payload: &[u8], variant: Crc16Variant) -> u16 {
    match variant {
        Crc16Variant::Ccitt => {
            let mut reg: u16 = 0xFFFF;
            for &byte in payload {
                reg ^= (byte as u16) << 8;
                for _ in 0..8 {
                    if reg & 0x8000 != 0 {
                        reg = (reg << 1) ^ 0x1021;
                    } else {
                        reg <<= 1;
                    }
                }
            }
            reg
        }
        Crc16Variant::Ibm => {
            // Reflected form: shift right with the reversed polynomial.
            let mut reg: u16 = 0x0000;
            for &byte in payload {
                reg ^= byte as u16;
                for _ in 0..8 {
                    if reg & 1 != 0 {
                        reg = (reg >> 1) ^ 0xA001;
                    } else {
                        reg >>= 1;
                    }
                }
            }
            reg
        }
    }
}

/// CRC-8 over the 12-bit header content {payload_len, cr, crc_enabled},
/// fed MSB-first. The high/low nibbles of the result populate the header's
/// checksum fields.
pub fn crc8_header(payload_len: u8, cr: u8, crc_enabled: bool) -> u8 {
    let bits = (0..8)
        .map(move |k| (payload_len >> (7 - k)) & 1 != 0)
        .chain((0..3).map(move |k| (cr >> (2 - k)) & 1 != 0))
        .chain(std::iter::once(crc_enabled));
    crc8_bits(bits)
}

fn crc8_bits(bits: impl Iterator<Item = bool>) -> u8 {
    let mut reg: u8 = 0x00;
    for bit in bits {
        reg ^= (bit as u8) << 7;
        if reg & 0x80 != 0 {
            reg = (reg << 1) ^ 0x07;
        } else {
            reg <<= 1;
        }
    }
    reg
}
