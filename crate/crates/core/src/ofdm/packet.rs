//! Bit-stream framing over the OFDM modem: a 32-bit length prefix, zero
//! padding to whole blocks, and the receive chain through estimation,
//! equalization and hard-decision demapping with an EVM report.

use super::equalize::{equalize, estimate_channel};
use super::modem::{OfdmModem, OfdmPacket};
use super::qam::{qam_demap, qam_map};
use super::OfdmError;
use num_complex::Complex64;

/// EVM is floored here so a numerically exact loopback still serializes.
pub const EVM_FLOOR_DB: f64 = -200.0;

/// Decoded packet: recovered bits, post-equalization EVM, and the number of
/// erased subcarrier observations.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmDecode {
    pub bits: Vec<u8>,
    pub evm_db: f64,
    pub erasures: usize,
}

impl OfdmModem {
    /// Pack bits into pilot + data blocks. Empty input yields a packet of
    /// pilots only; otherwise a 32-bit length prefix precedes the payload
    /// bits and zeros pad the final block.
    pub fn encode_packet(&self, bits: &[u8]) -> Result<OfdmPacket, OfdmError> {
        if bits.is_empty() {
            return self.modulate(&[]);
        }
        let config = self.config();
        let mut stream = Vec::with_capacity(32 + bits.len());
        let len = bits.len() as u32;
        stream.extend((0..32).rev().map(|i| ((len >> i) & 1) as u8));
        stream.extend(bits.iter().map(|&b| b & 1));
        let bpb = config.bits_per_block();
        stream.resize(stream.len().div_ceil(bpb) * bpb, 0);
        let blocks: Vec<Vec<Complex64>> = stream
            .chunks_exact(bpb)
            .map(|chunk| qam_map(chunk, config.qam_order))
            .collect::<Result<_, _>>()?;
        self.modulate(&blocks)
    }

    /// Full receive chain. Propagates "packet framing error" and "channel
    /// estimation failed".
    pub fn decode_packet(&self, samples: &[Complex64]) -> Result<OfdmDecode, OfdmError> {
        let config = self.config();
        let (pilot_rx, data_rx) = self.demodulate(samples)?;
        if data_rx.is_empty() {
            return Ok(OfdmDecode {
                bits: Vec::new(),
                evm_db: EVM_FLOOR_DB,
                erasures: 0,
            });
        }
        let estimate = estimate_channel(&pilot_rx, self.pilot())?;
        let mut bits = Vec::with_capacity(data_rx.len() * config.bits_per_block());
        let mut err_energy = 0.0f64;
        let mut ref_energy = 0.0f64;
        let mut erasures = 0usize;
        for block in &data_rx {
            let eq = equalize(block, &estimate);
            for &(symbol, erased) in &eq {
                if erased {
                    erasures += 1;
                    continue;
                }
                let decided = qam_map(&qam_demap(&[symbol], config.qam_order)?, config.qam_order)?[0];
                err_energy += (symbol - decided).norm_sqr();
                ref_energy += decided.norm_sqr();
            }
            let symbols: Vec<Complex64> = eq.iter().map(|&(s, _)| s).collect();
            bits.extend(qam_demap(&symbols, config.qam_order)?);
        }
        let evm_db = if ref_energy > 0.0 && err_energy > 0.0 {
            (10.0 * (err_energy / ref_energy).log10()).max(EVM_FLOOR_DB)
        } else {
            EVM_FLOOR_DB
        };
        // strip the length prefix and padding
        if bits.len() < 32 {
            return Ok(OfdmDecode {
                bits: Vec::new(),
                evm_db,
                erasures,
            });
        }
        let len = bits[..32].iter().fold(0u32, |acc, &b| (acc << 1) | b as u32) as usize;
        let avail = bits.len() - 32;
        let take = len.min(avail);
        let bits = bits[32..32 + take].to_vec();
        Ok(OfdmDecode {
            bits,
            evm_db,
            erasures,
        })
    }
}
